#pragma once

#include <vector>

#include "pascalsim/instance.hpp"

namespace pascalsim::cluster {

using instance::InstanceState;
using instance::MonitorSnapshot;
using instance::Policy;

struct Ablations {
    bool no_migration = false;
    bool non_adaptive = false;
};

// Per-destination inbound link; transfers are served one at a time in
// enqueue order.
struct TransferLink {
    double busy_until = 0.0;
};

struct ClusterState {
    std::vector<InstanceState> instances;
    std::vector<TransferLink> links;  // one per destination instance
    Policy policy = Policy::Pascal;
    Ablations ablations;
};

// Placement of a new reasoning request: among SLO-healthy instances (all of
// them when none is healthy) pick the smallest total KV footprint, lowest id
// on ties.
int select_instance_reasoning(const std::vector<MonitorSnapshot>& snaps);

// Placement at the reasoning->answering boundary: among SLO-healthy instances
// pick the fewest reasoning requests; when none is healthy, pick the smallest
// r_i + a_i over all instances. Lowest id on ties.
int select_instance_answering(const std::vector<MonitorSnapshot>& snaps);

enum class MigrationDecision { Stay, Migrate };

MigrationDecision decide_migration(const MonitorSnapshot& current,
                                   const MonitorSnapshot& target,
                                   long request_kv, const Ablations& ablations);

// Baselines route to the smallest m_i; pascal uses select_instance_reasoning.
int route_arrival(const std::vector<MonitorSnapshot>& snaps, Policy policy);

// Reserves the destination link and returns the transfer completion time.
double start_transfer_on_link(TransferLink& link, double now, double transfer_seconds);

}  // namespace pascalsim::cluster
