#include "pascalsim/instance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace pascalsim::instance {

void PacerState::on_delivery(std::size_t token_index, double generation_time) {
    if (token_index != delivery_times.size())
        throw std::invalid_argument("pacer: out-of-order token delivery");
    delivery_times.push_back(generation_time);
    if (digest_times.empty()) {
        // The first answering token bypasses pacing.
        digest_times.push_back(generation_time);
    } else {
        digest_times.push_back(std::max(generation_time, digest_times.back() + target_tpot));
    }
}

bool PacerState::healthy(double now, long total_tokens, long slack_tokens) const {
    if (delivery_times.empty()) return true;  // nothing promised yet
    double t0 = delivery_times.front();
    long expected = 1 + static_cast<long>(std::floor((now - t0) / target_tpot));
    expected = std::min(expected, total_tokens);
    long digested = 0;
    for (double t : digest_times) {
        if (t <= now) ++digested;
        else break;
    }
    return digested >= expected - slack_tokens;
}

bool detect_phase_transition(const RequestState& r) {
    return r.phase == Phase::Reasoning && r.tokens_generated == r.spec.reasoning_tokens;
}

std::vector<long> apply_demotion(InstanceState& st, std::vector<RequestState>& reqs,
                                 std::uint64_t& enqueue_counter) {
    std::vector<long> demoted;
    for (auto it = st.high_queue.begin(); it != st.high_queue.end();) {
        RequestState& r = reqs[static_cast<std::size_t>(*it)];
        if (r.kv_tokens > st.demotion_threshold) {
            demoted.push_back(*it);
            r.demoted = true;
            r.quantum_used_in_round = 0;
            r.quanta_exhausted = 0;
            r.enqueue_seq = ++enqueue_counter;
            st.low_queue.push_back(*it);
            it = st.high_queue.erase(it);
        } else {
            ++it;
        }
    }
    return demoted;
}

MonitorSnapshot monitor_snapshot(const InstanceState& st,
                                 const std::vector<RequestState>& reqs,
                                 double now, long pacer_slack_tokens) {
    MonitorSnapshot s;
    s.instance_id = st.id;
    s.total_kv = st.gpu_used + st.cpu_used;
    s.reasoning_count = static_cast<long>(st.high_queue.size());
    s.free_gpu_tokens = st.gpu_capacity - st.gpu_used;
    for (long idx : st.low_queue) {
        const RequestState& r = reqs[static_cast<std::size_t>(idx)];
        if (r.quanta_exhausted == 0) ++s.fresh_answering_count;
        if (r.phase == Phase::Answering &&
            !r.pacer.healthy(now, r.spec.answering_tokens, pacer_slack_tokens)) {
            s.all_answering_on_track = false;
        }
    }
    return s;
}

namespace {

// Round-robin key inside one queue: fewest consumed quanta first, then first
// enqueue, then id.
std::tuple<long, std::uint64_t, long> rr_key(const RequestState& r) {
    return {r.quanta_exhausted, r.enqueue_seq, r.spec.id};
}

bool is_candidate(const RequestState& r) {
    if (r.done() || r.in_transit()) return false;
    if (r.swapping_out || r.swapping_in) return false;
    return true;
}

// GPU tokens a candidate needs on top of what it already occupies. Decode
// participants reserve one extra token for the growth this iteration causes.
long admission_need(const RequestState& r) {
    if (r.phase == Phase::WaitingPrefill)
        return r.spec.prompt_tokens + (r.spec.reasoning_tokens == 0 ? 1 : 0);
    if (r.gpu_resident()) return 1;
    return r.kv_tokens + 1;
}

}  // namespace

IterationPlan plan_iteration(const InstanceState& st,
                             const std::vector<RequestState>& reqs,
                             const costmodel::LatencyProfile& profile,
                             Policy policy, double now) {
    (void)now;
    IterationPlan plan;

    const bool use_quanta = policy == Policy::Rr || policy == Policy::Pascal;
    const bool classed = policy == Policy::Pascal;

    // Candidate order. pascal keeps the high queue strictly ahead of the low
    // queue; baselines treat everything as one queue.
    struct Cand {
        long idx;
        int cls;  // 0 = high, 1 = low
    };
    std::vector<Cand> cands;
    auto gather = [&](const std::vector<long>& q, int cls) {
        for (long idx : q)
            if (is_candidate(reqs[static_cast<std::size_t>(idx)])) cands.push_back({idx, cls});
    };
    gather(st.high_queue, 0);
    gather(st.low_queue, 1);

    auto arrival_key = [&](const Cand& c) {
        const RequestState& r = reqs[static_cast<std::size_t>(c.idx)];
        return std::tuple<double, long>(r.spec.arrival_time, r.spec.id);
    };
    if (policy == Policy::Fcfs || policy == Policy::Oracle) {
        std::sort(cands.begin(), cands.end(),
                  [&](const Cand& a, const Cand& b) { return arrival_key(a) < arrival_key(b); });
    } else {
        std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
            const RequestState& ra = reqs[static_cast<std::size_t>(a.idx)];
            const RequestState& rb = reqs[static_cast<std::size_t>(b.idx)];
            int ca = classed ? a.cls : 0, cb = classed ? b.cls : 0;
            return std::tuple(ca, rr_key(ra)) < std::tuple(cb, rr_key(rb));
        });
    }

    long free = st.gpu_capacity - st.gpu_used;
    std::vector<char> admitted(cands.size(), 0);
    std::vector<char> evicted_flag(reqs.size(), 0);

    // Victims for one admission: GPU residents not yet admitted in this pass.
    // pascal restricts a high-priority admission to low-priority victims plus
    // quantum-exhausted high-priority ones; FCFS reaches this path only when
    // KV growth has outrun capacity (new arrivals block instead).
    auto victim_order = [&](bool repair, int admitting_cls, std::size_t admitting_idx) {
        std::vector<std::size_t> vs;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (admitted[i] || i == admitting_idx) continue;
            const RequestState& r = reqs[static_cast<std::size_t>(cands[i].idx)];
            if (!r.gpu_resident() || r.kv_tokens == 0 ||
                evicted_flag[static_cast<std::size_t>(cands[i].idx)]) continue;
            if (!repair && classed) {
                bool evictable = cands[i].cls == 1 ||
                                 (admitting_cls == 0 && r.quanta_exhausted > 0);
                if (admitting_cls == 1 && cands[i].cls == 0) evictable = false;
                if (!evictable) continue;
            }
            vs.push_back(i);
        }
        std::sort(vs.begin(), vs.end(), [&](std::size_t a, std::size_t b) {
            const RequestState& ra = reqs[static_cast<std::size_t>(cands[a].idx)];
            const RequestState& rb = reqs[static_cast<std::size_t>(cands[b].idx)];
            if (policy == Policy::Fcfs || policy == Policy::Oracle) {
                return std::tuple(ra.spec.arrival_time, ra.spec.id) >
                       std::tuple(rb.spec.arrival_time, rb.spec.id);
            }
            int ca = classed ? cands[a].cls : 0, cb = classed ? cands[b].cls : 0;
            // low class first, then most-exhausted, latest enqueue, highest id
            return std::tuple(ca, ra.quanta_exhausted, ra.enqueue_seq, ra.spec.id) >
                   std::tuple(cb, rb.quanta_exhausted, rb.enqueue_seq, rb.spec.id);
        });
        return vs;
    };

    bool fcfs_blocked = false;
    bool any_admitted = false;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const RequestState& r = reqs[static_cast<std::size_t>(cands[i].idx)];
        if ((fcfs_blocked && !(r.gpu_resident() && r.kv_tokens > 0)) ||
            evicted_flag[static_cast<std::size_t>(cands[i].idx)]) {
            // Strict admission queue: once one waiting request blocks, no later
            // waiting request may jump it; already-running residents continue.
            // A request evicted for an earlier admission sits this one out.
            plan.denied.push_back(cands[i].idx);
            continue;
        }
        long need = admission_need(r);
        if (need > free) {
            // Try to free memory by evicting lower-priority residents.
            bool allow_evict = policy != Policy::Oracle &&
                               !(policy == Policy::Fcfs && r.phase == Phase::WaitingPrefill);
            if (allow_evict) {
                for (std::size_t v : victim_order(false, cands[i].cls, i)) {
                    if (need <= free) break;
                    const RequestState& vr = reqs[static_cast<std::size_t>(cands[v].idx)];
                    free += vr.kv_tokens;
                    evicted_flag[static_cast<std::size_t>(cands[v].idx)] = 1;
                    plan.evictions.push_back(cands[v].idx);
                }
                // Deadlock breaker: when the whole pass would otherwise admit
                // nothing (e.g. the GPU is packed with same-class peers that
                // the priority rules protect), the head candidate may evict
                // without class restrictions so the instance keeps making
                // progress.
                if (need > free && !any_admitted) {
                    for (std::size_t v : victim_order(true, cands[i].cls, i)) {
                        if (need <= free) break;
                        const RequestState& vr = reqs[static_cast<std::size_t>(cands[v].idx)];
                        if (evicted_flag[static_cast<std::size_t>(cands[v].idx)]) continue;
                        free += vr.kv_tokens;
                        evicted_flag[static_cast<std::size_t>(cands[v].idx)] = 1;
                        plan.evictions.push_back(cands[v].idx);
                    }
                }
            }
        }
        if (need <= free) {
            admitted[i] = 1;
            any_admitted = true;
            free -= need;
        } else {
            plan.denied.push_back(cands[i].idx);
            if (policy == Policy::Fcfs) fcfs_blocked = true;
        }
    }

    // KV growth can leave residents over capacity even though nothing new was
    // admitted; repair by evicting remaining non-admitted residents.
    if (free < 0) {
        for (std::size_t v : victim_order(true, 0, cands.size())) {
            if (free >= 0) break;
            const RequestState& vr = reqs[static_cast<std::size_t>(cands[v].idx)];
            free += vr.kv_tokens;
            evicted_flag[static_cast<std::size_t>(cands[v].idx)] = 1;
            plan.evictions.push_back(cands[v].idx);
        }
    }

    // Materialize the iteration: a pending prefill gets a dedicated iteration;
    // otherwise all admitted residents decode together.
    long total_kv = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (!admitted[i]) continue;
        const RequestState& r = reqs[static_cast<std::size_t>(cands[i].idx)];
        if (r.phase == Phase::WaitingPrefill) {
            if (plan.prefill_request < 0) plan.prefill_request = cands[i].idx;
            continue;
        }
        if (r.gpu_resident()) {
            plan.batch.push_back(cands[i].idx);
            total_kv += r.kv_tokens;
        } else {
            if (costmodel::swap_latency(profile, r.kv_tokens) == 0.0) {
                plan.immediate_swap_ins.push_back(cands[i].idx);
                plan.batch.push_back(cands[i].idx);
                total_kv += r.kv_tokens;
            } else {
                plan.swap_ins.push_back(cands[i].idx);
            }
        }
    }

    if (plan.prefill_request >= 0) {
        const RequestState& r = reqs[static_cast<std::size_t>(plan.prefill_request)];
        plan.kind = IterationPlan::Kind::Prefill;
        plan.batch.clear();
        plan.duration = costmodel::prefill_latency(profile, r.spec.prompt_tokens);
    } else if (!plan.batch.empty()) {
        plan.kind = IterationPlan::Kind::Decode;
        plan.duration =
            costmodel::decode_step_latency(profile, static_cast<long>(plan.batch.size()), total_kv);
    } else {
        plan.kind = IterationPlan::Kind::Idle;
    }
    return plan;
}

IterationPlan plan_iteration_fcfs(const InstanceState& st,
                                  const std::vector<RequestState>& reqs,
                                  const costmodel::LatencyProfile& profile,
                                  double now) {
    return plan_iteration(st, reqs, profile, Policy::Fcfs, now);
}

}  // namespace pascalsim::instance
