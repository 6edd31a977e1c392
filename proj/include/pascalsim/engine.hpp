#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pascalsim/cluster.hpp"
#include "pascalsim/costmodel.hpp"
#include "pascalsim/metrics.hpp"
#include "pascalsim/workload.hpp"

namespace pascalsim::engine {

using cluster::Ablations;
using instance::Policy;

struct RunConfig {
    int instance_count = 8;
    long gpu_capacity = 0;           // KV tokens per instance; 0 -> derive
    double capacity_fraction = 0.0;  // when > 0: per-instance capacity =
                                     // fraction * (peak concurrent KV of an
                                     // unconstrained run) / instances
    long token_quantum = 500;
    long demotion_threshold = 5000;
    Policy policy = Policy::Pascal;
    Ablations ablations;
    double target_tpot = 0.1;
    double ttfat_target = 0.25;
    double qoe_threshold = 0.95;
    long pacer_slack_tokens = 0;  // slack before t_i reports unhealthy
    std::uint64_t seed = 0;
};

Policy parse_policy(const std::string& name);
std::string policy_name(Policy p);

// Runs the whole trace to completion and returns one record per request,
// ordered by request id. Identical inputs produce identical records. An
// optional event log receives one line per event (pascal-events-v1).
std::vector<metrics::RequestRecord> run(const workload::Trace& trace,
                                        const RunConfig& config,
                                        const costmodel::LatencyProfile& profile,
                                        std::ostream* event_log = nullptr);

// Derived per-instance capacity for a trace. When no explicit capacity is
// configured, capacity_fraction applies to the peak aggregate KV demand of an
// unconstrained (oracle) run of the trace, split across instances.
long derive_capacity(const workload::Trace& trace, const RunConfig& config,
                     const costmodel::LatencyProfile& profile);

}  // namespace pascalsim::engine
