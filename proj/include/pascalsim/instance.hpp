#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pascalsim/costmodel.hpp"
#include "pascalsim/workload.hpp"

namespace pascalsim::instance {

using workload::RequestSpec;

enum class Policy { Fcfs, Rr, Oracle, Pascal };

enum class Phase { WaitingPrefill, Reasoning, Answering, Migrating, Done };

enum class KvLocation { Gpu, Cpu, InTransit };

// Token pacer for one answering request: tokens are delivered by the engine
// as they are generated and digested by the user no faster than target_tpot.
struct PacerState {
    double target_tpot = 0.1;
    std::vector<double> delivery_times;
    std::vector<double> digest_times;

    bool started() const { return !delivery_times.empty(); }
    double first_delivery() const { return delivery_times.front(); }

    // token_index must equal |delivery_times| (in-order delivery). The first
    // token is digested at its delivery time; later tokens at
    // max(delivery, previous digest + target_tpot).
    void on_delivery(std::size_t token_index, double generation_time);

    // Healthy means the digested-token count is not behind the expected count
    // at `now`, where expected = 1 + floor((now - t0)/target_tpot), clipped to
    // total_tokens. slack_tokens loosens the comparison.
    bool healthy(double now, long total_tokens, long slack_tokens = 0) const;
};

struct RequestState {
    RequestSpec spec;
    Phase phase = Phase::WaitingPrefill;
    long tokens_generated = 0;  // decode tokens emitted so far
    long kv_tokens = 0;
    KvLocation kv_location = KvLocation::Gpu;
    long quantum_used_in_round = 0;
    long quanta_exhausted = 0;
    PacerState pacer;

    int owner = -1;             // instance index, -1 while unplaced/in transit
    std::uint64_t enqueue_seq = 0;  // set at first enqueue into current queue
    bool demoted = false;       // reasoning request handled via low queue
    bool swapping_out = false;  // KV moving GPU->CPU
    bool swapping_in = false;   // KV moving CPU->GPU (GPU space reserved)

    bool done() const { return phase == Phase::Done; }
    bool in_transit() const { return kv_location == KvLocation::InTransit; }
    bool gpu_resident() const {
        return kv_location == KvLocation::Gpu && !swapping_out && !swapping_in;
    }
};

// Runtime metrics the cluster scheduler reads from one instance.
struct MonitorSnapshot {
    int instance_id = 0;
    bool all_answering_on_track = true;  // t_i
    long total_kv = 0;                   // m_i, GPU + CPU
    long reasoning_count = 0;            // r_i, |high queue|
    long fresh_answering_count = 0;      // a_i, low-queue requests in first quantum
    long free_gpu_tokens = 0;
};

struct InstanceState {
    int id = 0;
    long gpu_capacity = 0;
    long gpu_used = 0;
    long cpu_used = 0;
    std::vector<long> high_queue;  // request indices, reasoning phase
    std::vector<long> low_queue;   // request indices, answering phase + demoted
    std::vector<long> running_batch;
    long token_quantum = 500;
    long demotion_threshold = 5000;

    bool busy = false;          // iteration (decode or prefill) in flight
    double iter_start = 0.0;
    double iter_duration = 0.0;
};

struct IterationPlan {
    enum class Kind { Idle, Prefill, Decode };
    Kind kind = Kind::Idle;
    long prefill_request = -1;
    std::vector<long> batch;          // GPU-resident decode participants
    std::vector<long> swap_ins;       // admitted, waiting on a GPU reload
    std::vector<long> immediate_swap_ins;  // zero-latency reloads, join batch now
    std::vector<long> evictions;      // residents offloaded to CPU
    std::vector<long> denied;         // candidates refused for lack of memory
    double duration = 0.0;
};

// Plans the next iteration without mutating state. Admission order, eviction
// order, and quantum usage depend on the policy; see plan application in the
// engine for the memory accounting side.
IterationPlan plan_iteration(const InstanceState& st,
                             const std::vector<RequestState>& reqs,
                             const costmodel::LatencyProfile& profile,
                             Policy policy, double now);

// FCFS admission: strictly arrival order, no quanta, new requests block
// rather than evict.
IterationPlan plan_iteration_fcfs(const InstanceState& st,
                                  const std::vector<RequestState>& reqs,
                                  const costmodel::LatencyProfile& profile,
                                  double now);

// True exactly when the request just emitted its last reasoning token.
bool detect_phase_transition(const RequestState& r);

// Moves every high-queue request whose KV exceeds the threshold to the low
// queue (strict inequality). Returns the demoted request indices.
std::vector<long> apply_demotion(InstanceState& st, std::vector<RequestState>& reqs,
                                 std::uint64_t& enqueue_counter);

MonitorSnapshot monitor_snapshot(const InstanceState& st,
                                 const std::vector<RequestState>& reqs,
                                 double now, long pacer_slack_tokens = 0);

}  // namespace pascalsim::instance
