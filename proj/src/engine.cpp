#include "pascalsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace pascalsim::engine {

using cluster::MigrationDecision;
using instance::InstanceState;
using instance::IterationPlan;
using instance::KvLocation;
using instance::MonitorSnapshot;
using instance::Phase;
using instance::RequestState;
using metrics::RequestRecord;

Policy parse_policy(const std::string& name) {
    if (name == "fcfs") return Policy::Fcfs;
    if (name == "rr") return Policy::Rr;
    if (name == "oracle") return Policy::Oracle;
    if (name == "pascal") return Policy::Pascal;
    throw std::invalid_argument("unknown policy: '" + name + "'");
}

std::string policy_name(Policy p) {
    switch (p) {
        case Policy::Fcfs: return "fcfs";
        case Policy::Rr: return "rr";
        case Policy::Oracle: return "oracle";
        case Policy::Pascal: return "pascal";
    }
    return "?";
}

namespace {

enum class EventKind { Arrival, PrefillComplete, IterationComplete, SwapComplete, TransferComplete };

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Arrival;
    int inst = -1;
    long req = -1;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

struct Simulator {
    const workload::Trace& trace;
    const RunConfig& cfg;
    const costmodel::LatencyProfile& profile;
    std::ostream* log;

    std::vector<RequestState> reqs;
    std::vector<RequestRecord> records;
    cluster::ClusterState cl;
    std::priority_queue<Event, std::vector<Event>, EventAfter> events;
    std::uint64_t event_seq = 0;
    std::uint64_t enqueue_counter = 0;
    double now = 0.0;
    long done_count = 0;
    long peak_gpu_used = 0;

    void note_gpu_peak() {
        long total = 0;
        for (const auto& st : cl.instances) total += st.gpu_used;
        peak_gpu_used = std::max(peak_gpu_used, total);
    }

    Simulator(const workload::Trace& t, const RunConfig& c,
              const costmodel::LatencyProfile& p, std::ostream* l)
        : trace(t), cfg(c), profile(p), log(l) {}

    void push(double time, EventKind kind, int inst, long req) {
        if (time < now - 1e-12)
            throw std::logic_error("event scheduled in the past");
        events.push(Event{time, ++event_seq, kind, inst, req});
    }

    void emit(const char* kind, int inst, long req, const char* detail = "") {
        if (!log) return;
        char buf[192];
        std::snprintf(buf, sizeof(buf), "%.9f,%s,%d,%ld,%s\n", now, kind, inst,
                      req >= 0 ? reqs[static_cast<std::size_t>(req)].spec.id : -1L, detail);
        *log << buf;
    }

    InstanceState& inst(int i) { return cl.instances[static_cast<std::size_t>(i)]; }
    RequestState& req(long i) { return reqs[static_cast<std::size_t>(i)]; }
    RequestRecord& rec(long i) { return records[static_cast<std::size_t>(i)]; }

    std::vector<MonitorSnapshot> snapshots() const {
        std::vector<MonitorSnapshot> snaps;
        snaps.reserve(cl.instances.size());
        for (const InstanceState& st : cl.instances)
            snaps.push_back(instance::monitor_snapshot(st, reqs, now, cfg.pacer_slack_tokens));
        return snaps;
    }

    void enqueue(int i, long idx, bool high) {
        RequestState& r = req(idx);
        r.owner = i;
        r.enqueue_seq = ++enqueue_counter;
        (high ? inst(i).high_queue : inst(i).low_queue).push_back(idx);
    }

    static void remove_from(std::vector<long>& q, long idx) {
        q.erase(std::remove(q.begin(), q.end(), idx), q.end());
    }

    void dequeue(long idx) {
        InstanceState& st = inst(req(idx).owner);
        remove_from(st.high_queue, idx);
        remove_from(st.low_queue, idx);
    }

    void free_memory(long idx) {
        RequestState& r = req(idx);
        InstanceState& st = inst(r.owner);
        if (r.kv_location == KvLocation::Gpu || r.swapping_in) st.gpu_used -= r.kv_tokens;
        else if (r.kv_location == KvLocation::Cpu) st.cpu_used -= r.kv_tokens;
    }

    void finish_request(long idx) {
        RequestState& r = req(idx);
        RequestRecord& rc = rec(idx);
        free_memory(idx);
        dequeue(idx);
        r.phase = Phase::Done;
        rc.completion = now;
        rc.answer_delivery_times = r.pacer.delivery_times;
        rc.answer_digest_times = r.pacer.digest_times;
        ++done_count;
        emit("finish", r.owner, idx);
    }

    void deliver_answer_token(long idx, double iter_start) {
        RequestState& r = req(idx);
        std::size_t token_index = r.pacer.delivery_times.size();
        r.pacer.on_delivery(token_index, now);
        if (token_index == 0) {
            rec(idx).first_answer_delivery = now;
            rec(idx).first_answer_iter_start = iter_start;
        }
    }

    // Reasoning -> answering boundary for a GPU-resident request on its owner.
    void phase_transition(long idx) {
        RequestState& r = req(idx);
        r.phase = Phase::Answering;
        rec(idx).reasoning_end = now;
        emit("transition", r.owner, idx);
        if (cl.policy != Policy::Pascal) return;  // baselines keep placement

        int cur = r.owner;
        dequeue(idx);
        auto snaps = snapshots();
        int target = cluster::select_instance_answering(snaps);
        auto decision = cluster::decide_migration(
            snaps[static_cast<std::size_t>(cur)], snaps[static_cast<std::size_t>(target)],
            r.kv_tokens, cl.ablations);
        if (decision == MigrationDecision::Stay || target == cur) {
            r.quantum_used_in_round = 0;
            r.quanta_exhausted = 0;
            enqueue(cur, idx, false);
            return;
        }
        free_memory(idx);
        r.kv_location = KvLocation::InTransit;
        r.owner = target;
        double dur = costmodel::transfer_latency(profile, r.kv_tokens);
        double finish = cluster::start_transfer_on_link(
            cl.links[static_cast<std::size_t>(target)], now, dur);
        rec(idx).migration_intervals.emplace_back(now, finish);
        push(finish, EventKind::TransferComplete, target, idx);
        char detail[64];
        std::snprintf(detail, sizeof(detail), "to=%d", target);
        emit("migrate", cur, idx, detail);
    }

    void maybe_start(int i) {
        InstanceState& st = inst(i);
        if (st.busy) return;
        if (cl.policy == Policy::Pascal) {
            for (long d : instance::apply_demotion(st, reqs, enqueue_counter))
                emit("demote", i, d);
        }
        IterationPlan plan = instance::plan_iteration(st, reqs, profile, cl.policy, now);

        for (long v : plan.evictions) {
            RequestState& r = req(v);
            st.gpu_used -= r.kv_tokens;
            st.cpu_used += r.kv_tokens;
            r.kv_location = KvLocation::Cpu;
            double dur = costmodel::swap_latency(profile, r.kv_tokens);
            if (dur > 0.0) {
                r.swapping_out = true;
                push(now + dur, EventKind::SwapComplete, i, v);
            }
            emit("evict", i, v);
        }
        for (long s : plan.swap_ins) {
            RequestState& r = req(s);
            st.cpu_used -= r.kv_tokens;
            st.gpu_used += r.kv_tokens;
            r.swapping_in = true;
            push(now + costmodel::swap_latency(profile, r.kv_tokens),
                 EventKind::SwapComplete, i, s);
            emit("swap_in", i, s);
        }
        for (long s : plan.immediate_swap_ins) {
            RequestState& r = req(s);
            st.cpu_used -= r.kv_tokens;
            st.gpu_used += r.kv_tokens;
            r.kv_location = KvLocation::Gpu;
            emit("swap_in", i, s);
        }
        for (long d : plan.denied) {
            rec(d).blocked_interval_total += plan.duration;
            emit("block", i, d);
        }

        if (plan.kind == IterationPlan::Kind::Prefill) {
            RequestState& r = req(plan.prefill_request);
            long extra = r.spec.reasoning_tokens == 0 ? 1 : 0;
            st.gpu_used += r.spec.prompt_tokens + extra;
            st.busy = true;
            st.iter_start = now;
            st.iter_duration = plan.duration;
            st.running_batch.clear();
            push(now + plan.duration, EventKind::PrefillComplete, i, plan.prefill_request);
            emit("prefill_start", i, plan.prefill_request);
        } else if (plan.kind == IterationPlan::Kind::Decode) {
            st.gpu_used += static_cast<long>(plan.batch.size());  // growth reserved up front
            st.busy = true;
            st.iter_start = now;
            st.iter_duration = plan.duration;
            st.running_batch = plan.batch;
            push(now + plan.duration, EventKind::IterationComplete, i, -1);
            char detail[64];
            std::snprintf(detail, sizeof(detail), "batch=%zu", plan.batch.size());
            emit("decode_start", i, -1, detail);
        }
        if (st.gpu_used > st.gpu_capacity)
            throw std::logic_error("instance over GPU capacity");
        note_gpu_peak();
    }

    void on_arrival(long idx) {
        RequestState& r = req(idx);
        rec(idx).arrival = now;
        int dst = cluster::route_arrival(snapshots(), cl.policy);
        emit("arrival", dst, idx);
        if (r.spec.kv_preloaded) {
            r.kv_tokens = r.spec.prompt_tokens;
            r.kv_location = KvLocation::Cpu;
            inst(dst).cpu_used += r.kv_tokens;
            rec(idx).prefill_complete = now;
            if (r.spec.reasoning_tokens > 0) {
                r.phase = Phase::Reasoning;
                enqueue(dst, idx, true);
            } else {
                r.phase = Phase::Answering;
                rec(idx).reasoning_end = now;
                enqueue(dst, idx, cl.policy == Policy::Pascal ? false : true);
            }
        } else {
            r.phase = Phase::WaitingPrefill;
            enqueue(dst, idx, true);
        }
        maybe_start(dst);
    }

    void on_prefill_complete(int i, long idx) {
        InstanceState& st = inst(i);
        st.busy = false;
        RequestState& r = req(idx);
        long extra = r.spec.reasoning_tokens == 0 ? 1 : 0;
        r.kv_tokens = r.spec.prompt_tokens + extra;
        rec(idx).prefill_complete = now;
        emit("prefill_complete", i, idx);
        if (r.spec.reasoning_tokens == 0) {
            // The token produced by prefill is the first answering token.
            r.tokens_generated = 1;
            rec(idx).reasoning_end = now;
            deliver_answer_token(idx, st.iter_start);
            if (r.tokens_generated == r.spec.answering_tokens) {
                r.phase = Phase::Answering;
                finish_request(idx);
            } else {
                phase_transition(idx);
            }
        } else {
            r.phase = Phase::Reasoning;
        }
        maybe_start(i);
    }

    void on_iteration_complete(int i) {
        InstanceState& st = inst(i);
        st.busy = false;
        std::vector<long> batch = std::move(st.running_batch);
        st.running_batch.clear();
        const bool use_quanta = cl.policy == Policy::Rr || cl.policy == Policy::Pascal;
        for (long idx : batch) {
            RequestState& r = req(idx);
            r.tokens_generated += 1;
            r.kv_tokens += 1;
            emit("token", i, idx);
            if (use_quanta) {
                r.quantum_used_in_round += 1;
                if (r.quantum_used_in_round >= st.token_quantum) {
                    r.quantum_used_in_round = 0;
                    r.quanta_exhausted += 1;
                }
            }
            if (r.phase == Phase::Reasoning) {
                if (instance::detect_phase_transition(r)) phase_transition(idx);
            } else if (r.phase == Phase::Answering) {
                deliver_answer_token(idx, st.iter_start);
                if (r.tokens_generated == r.spec.reasoning_tokens + r.spec.answering_tokens)
                    finish_request(idx);
            }
        }
        maybe_start(i);
    }

    void on_swap_complete(int i, long idx) {
        RequestState& r = req(idx);
        if (r.swapping_out) {
            r.swapping_out = false;
        } else if (r.swapping_in) {
            r.swapping_in = false;
            r.kv_location = KvLocation::Gpu;
        }
        emit("swap_complete", i, idx);
        maybe_start(i);
    }

    void on_transfer_complete(int dst, long idx) {
        RequestState& r = req(idx);
        InstanceState& st = inst(dst);
        if (st.gpu_capacity - st.gpu_used >= r.kv_tokens) {
            st.gpu_used += r.kv_tokens;
            r.kv_location = KvLocation::Gpu;
        } else {
            st.cpu_used += r.kv_tokens;
            r.kv_location = KvLocation::Cpu;
        }
        r.quantum_used_in_round = 0;
        r.quanta_exhausted = 0;
        enqueue(dst, idx, false);
        emit("transfer_complete", dst, idx);
        note_gpu_peak();
        maybe_start(dst);
    }

    std::vector<RequestRecord> run() {
        long capacity = cl.policy == Policy::Oracle
                            ? std::numeric_limits<long>::max() / 4
                            : derive_capacity(trace, cfg, profile);
        cl.instances.resize(static_cast<std::size_t>(cfg.instance_count));
        cl.links.resize(static_cast<std::size_t>(cfg.instance_count));
        for (std::size_t i = 0; i < cl.instances.size(); ++i) {
            cl.instances[i].id = static_cast<int>(i);
            cl.instances[i].gpu_capacity = capacity;
            cl.instances[i].token_quantum = cfg.token_quantum;
            cl.instances[i].demotion_threshold = cfg.demotion_threshold;
        }

        reqs.resize(trace.size());
        records.resize(trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i) {
            reqs[i].spec = trace[i];
            reqs[i].pacer.target_tpot = cfg.target_tpot;
            records[i].spec = trace[i];
            push(trace[i].arrival_time, EventKind::Arrival, -1, static_cast<long>(i));
        }

        if (log) *log << "pascal-events-v1\n";
        while (!events.empty()) {
            Event ev = events.top();
            events.pop();
            if (ev.time < now - 1e-12) throw std::logic_error("clock moved backwards");
            now = std::max(now, ev.time);
            switch (ev.kind) {
                case EventKind::Arrival: on_arrival(ev.req); break;
                case EventKind::PrefillComplete: on_prefill_complete(ev.inst, ev.req); break;
                case EventKind::IterationComplete: on_iteration_complete(ev.inst); break;
                case EventKind::SwapComplete: on_swap_complete(ev.inst, ev.req); break;
                case EventKind::TransferComplete: on_transfer_complete(ev.inst, ev.req); break;
            }
        }
        if (done_count != static_cast<long>(trace.size())) {
#ifdef PASCALSIM_DEBUG_STALL
            for (std::size_t k = 0; k < reqs.size(); ++k) {
                const RequestState& r = reqs[k];
                if (r.phase == Phase::Done) continue;
                std::fprintf(stderr,
                             "stuck req %zu owner=%d phase=%d loc=%d kv=%ld tok=%ld "
                             "swin=%d swout=%d qx=%ld\n",
                             k, r.owner, static_cast<int>(r.phase),
                             static_cast<int>(r.kv_location), r.kv_tokens,
                             r.tokens_generated, r.swapping_in, r.swapping_out,
                             r.quanta_exhausted);
            }
            for (const auto& st : cl.instances)
                std::fprintf(stderr,
                             "inst %d busy=%d gpu=%ld/%ld cpu=%ld hi=%zu lo=%zu\n", st.id,
                             st.busy, st.gpu_used, st.gpu_capacity, st.cpu_used,
                             st.high_queue.size(), st.low_queue.size());
#endif
            throw std::logic_error("simulation stalled with unfinished requests");
        }

        std::sort(records.begin(), records.end(),
                  [](const RequestRecord& a, const RequestRecord& b) {
                      return a.spec.id < b.spec.id;
                  });
        return std::move(records);
    }
};

}  // namespace

std::vector<metrics::RequestRecord> run(const workload::Trace& trace,
                                        const RunConfig& config,
                                        const costmodel::LatencyProfile& profile,
                                        std::ostream* event_log) {
    workload::validate_trace(trace);
    costmodel::validate_profile(profile);
    Simulator sim(trace, config, profile, event_log);
    sim.cl.policy = config.policy;
    sim.cl.ablations = config.ablations;
    return sim.run();
}

long derive_capacity(const workload::Trace& trace, const RunConfig& config,
                     const costmodel::LatencyProfile& profile) {
    if (config.instance_count < 1)
        throw std::invalid_argument("instance_count must be >= 1");
    // An instance must be able to hold the largest request at full length.
    long biggest = 0;
    for (const auto& r : trace) biggest = std::max(biggest, r.max_kv());
    if (config.gpu_capacity > 0) return std::max(config.gpu_capacity, biggest);

    // Fraction semantics: relative to the peak aggregate KV demand an
    // unconstrained (oracle) execution of the same trace would reach.
    RunConfig oracle_cfg = config;
    oracle_cfg.policy = Policy::Oracle;
    oracle_cfg.ablations = Ablations{};
    Simulator sim(trace, oracle_cfg, profile, nullptr);
    sim.cl.policy = Policy::Oracle;
    sim.run();
    double fraction = config.capacity_fraction > 0.0 ? config.capacity_fraction : 1.0;
    long cap = static_cast<long>(
        std::ceil(fraction * static_cast<double>(sim.peak_gpu_used) /
                  static_cast<double>(config.instance_count)));
    return std::max(cap, biggest);
}

}  // namespace pascalsim::engine
