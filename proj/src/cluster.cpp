#include "pascalsim/cluster.hpp"

#include <algorithm>
#include <stdexcept>

namespace pascalsim::cluster {

namespace {

int argmin_by(const std::vector<MonitorSnapshot>& snaps, bool healthy_only,
              long (*key)(const MonitorSnapshot&)) {
    int best = -1;
    long best_key = 0;
    for (const MonitorSnapshot& s : snaps) {
        if (healthy_only && !s.all_answering_on_track) continue;
        long k = key(s);
        if (best < 0 || k < best_key) {
            best = s.instance_id;
            best_key = k;
        }
    }
    return best;
}

}  // namespace

int select_instance_reasoning(const std::vector<MonitorSnapshot>& snaps) {
    if (snaps.empty()) throw std::invalid_argument("no instances");
    auto key = [](const MonitorSnapshot& s) { return s.total_kv; };
    int best = argmin_by(snaps, true, key);
    if (best < 0) best = argmin_by(snaps, false, key);
    return best;
}

int select_instance_answering(const std::vector<MonitorSnapshot>& snaps) {
    if (snaps.empty()) throw std::invalid_argument("no instances");
    int best = argmin_by(snaps, true, [](const MonitorSnapshot& s) { return s.reasoning_count; });
    if (best < 0) {
        best = argmin_by(snaps, false, [](const MonitorSnapshot& s) {
            return s.reasoning_count + s.fresh_answering_count;
        });
    }
    return best;
}

MigrationDecision decide_migration(const MonitorSnapshot& current,
                                   const MonitorSnapshot& target,
                                   long request_kv, const Ablations& ablations) {
    if (ablations.no_migration) return MigrationDecision::Stay;
    if (target.instance_id == current.instance_id) return MigrationDecision::Stay;
    if (ablations.non_adaptive) return MigrationDecision::Migrate;
    // Adaptive override: keep the request in place when it fits here and the
    // chosen target has no room for its KV.
    if (current.free_gpu_tokens >= request_kv && target.free_gpu_tokens < request_kv)
        return MigrationDecision::Stay;
    return MigrationDecision::Migrate;
}

int route_arrival(const std::vector<MonitorSnapshot>& snaps, Policy policy) {
    if (policy == Policy::Pascal) return select_instance_reasoning(snaps);
    return argmin_by(snaps, false, [](const MonitorSnapshot& s) { return s.total_kv; });
}

double start_transfer_on_link(TransferLink& link, double now, double transfer_seconds) {
    double start = std::max(now, link.busy_until);
    link.busy_until = start + transfer_seconds;
    return link.busy_until;
}

}  // namespace pascalsim::cluster
