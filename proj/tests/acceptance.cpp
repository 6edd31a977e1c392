// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. All tolerances are pinned here as constants.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pascalsim/engine.hpp"

using namespace pascalsim;
using engine::Policy;
using engine::RunConfig;
using metrics::RequestRecord;
using workload::LengthDistribution;
using workload::RequestSpec;
using workload::Trace;

namespace {

// --- pinned tolerances ---
constexpr double kExactEps = 1e-9;
constexpr double kOracleNormalizedMax = 1.01;  // arrival-to-boundary jitter only
constexpr double kRrLongBinMin = 1.3;          // long-reasoning inflation floor
constexpr double kSloAttainmentFloor = 0.95;
constexpr double kTailReductionMin = 0.30;  // required in at least one bin
constexpr double kThroughputTolerance = 0.05;
constexpr double kBlockingRatioMin = 5.0;
constexpr double kTransferVsTtftMax = 0.05;
constexpr double kQoeThreshold = 0.95;
constexpr double kTargetTpot = 0.1;
constexpr long kBinWidth = 256;

int g_failures = 0;

void report(int criterion, const char* what, bool ok, const std::string& detail) {
    std::printf("criterion %d (%s): %s%s%s\n", criterion, what, ok ? "PASS" : "FAIL",
                detail.empty() ? "" : " — ", detail.c_str());
    if (!ok) ++g_failures;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
    if (rank < 1) rank = 1;
    if (rank > v.size()) rank = v.size();
    return v[rank - 1];
}

// ---------------------------------------------------------------------------
// Criterion 1: golden timelines for three contended 8-token requests.
// ---------------------------------------------------------------------------

Trace contended_trio() {
    Trace t;
    for (long i = 0; i < 3; ++i) {
        RequestSpec r;
        r.id = i;
        r.arrival_time = static_cast<double>(i);
        r.prompt_tokens = 100;
        r.reasoning_tokens = 0;
        r.answering_tokens = 8;
        r.kv_preloaded = true;
        t.push_back(r);
    }
    return t;
}

void criterion_1() {
    costmodel::LatencyProfile prof;
    prof.prefill_per_token = 0.0;
    prof.decode_base = 1.0;
    prof.swap_bandwidth = std::numeric_limits<double>::infinity();
    RunConfig cfg;
    cfg.instance_count = 1;
    cfg.gpu_capacity = 220;  // exactly two requests concurrently
    cfg.token_quantum = 4;

    bool ok = true;
    std::ostringstream why;
    auto exact = [&](double got, double want, const char* label) {
        if (std::abs(got - want) > kExactEps) {
            ok = false;
            why << label << "=" << got << " want " << want << "; ";
        }
    };

    {
        cfg.policy = Policy::Oracle;
        std::ostringstream log;
        auto recs = engine::run(contended_trio(), cfg, prof, &log);
        for (const auto& r : recs) exact(metrics::ttft(r), 1.0, "oracle ttft");
        std::string text = log.str();
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find(",evict,") != std::string::npos ||
                line.find(",block,") != std::string::npos) {
                ok = false;
                why << "oracle preempted/blocked; ";
                break;
            }
        }
    }
    {
        cfg.policy = Policy::Fcfs;
        auto recs = engine::run(contended_trio(), cfg, prof, nullptr);
        exact(metrics::ttft(recs[2]), 7.0, "fcfs C ttft");
    }
    {
        cfg.policy = Policy::Rr;
        auto recs = engine::run(contended_trio(), cfg, prof, nullptr);
        const auto& a = recs[0].answer_delivery_times;
        const auto& b = recs[1].answer_delivery_times;
        const auto& c = recs[2].answer_delivery_times;
        exact(a[3], 4.0, "A 4th token");   // A preempted at t=4
        exact(a[4], 6.0, "A resume");      // ...and off the GPU at t=4..5
        exact(metrics::ttft(recs[2]), 3.0, "C ttft");
        exact(b[4] - b[3], 4.0, "B stall");  // 3 preempted units + 1 step
        exact(c[3], 8.0, "C 4th token");     // C preempted after 4 tokens at t=8
        exact(c[4], 10.0, "C resume");
    }
    report(1, "golden contended timelines", ok, why.str());
}

// ---------------------------------------------------------------------------
// Criterion 2: placement rules match independent brute force exhaustively.
// ---------------------------------------------------------------------------

int brute_reasoning(const std::vector<instance::MonitorSnapshot>& snaps) {
    int best = -1;
    for (const auto& s : snaps)
        if (s.all_answering_on_track &&
            (best < 0 || s.total_kv < snaps[static_cast<std::size_t>(best)].total_kv))
            best = s.instance_id;
    if (best >= 0) return best;
    for (const auto& s : snaps)
        if (best < 0 || s.total_kv < snaps[static_cast<std::size_t>(best)].total_kv)
            best = s.instance_id;
    return best;
}

int brute_answering(const std::vector<instance::MonitorSnapshot>& snaps) {
    int best = -1;
    for (const auto& s : snaps)
        if (s.all_answering_on_track &&
            (best < 0 ||
             s.reasoning_count < snaps[static_cast<std::size_t>(best)].reasoning_count))
            best = s.instance_id;
    if (best >= 0) return best;
    for (const auto& s : snaps) {
        long load = s.reasoning_count + s.fresh_answering_count;
        long best_load = best < 0 ? 0
                                  : snaps[static_cast<std::size_t>(best)].reasoning_count +
                                        snaps[static_cast<std::size_t>(best)].fresh_answering_count;
        if (best < 0 || load < best_load) best = s.instance_id;
    }
    return best;
}

void criterion_2() {
    bool ok = true;
    std::ostringstream why;
    long checked = 0;
    for (int n = 1; n <= 4 && ok; ++n) {
        long combos = 1;
        for (int i = 0; i < n; ++i) combos *= 8;
        for (long code = 0; code < combos && ok; ++code) {
            long c = code;
            std::vector<instance::MonitorSnapshot> snaps(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                snaps[static_cast<std::size_t>(i)].instance_id = i;
                snaps[static_cast<std::size_t>(i)].all_answering_on_track = (c % 2) != 0;
                c /= 2;
                snaps[static_cast<std::size_t>(i)].total_kv = c % 4;
                c /= 4;
            }
            ++checked;
            if (cluster::select_instance_reasoning(snaps) != brute_reasoning(snaps)) {
                ok = false;
                why << "reasoning placement diverges at code " << code << " n " << n;
            }
        }
    }
    for (int n = 1; n <= 4 && ok; ++n) {
        long combos = 1;
        for (int i = 0; i < n; ++i) combos *= 32;
        for (long code = 0; code < combos && ok; ++code) {
            long c = code;
            std::vector<instance::MonitorSnapshot> snaps(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                snaps[static_cast<std::size_t>(i)].instance_id = i;
                snaps[static_cast<std::size_t>(i)].all_answering_on_track = (c % 2) != 0;
                c /= 2;
                snaps[static_cast<std::size_t>(i)].reasoning_count = c % 4;
                c /= 4;
                snaps[static_cast<std::size_t>(i)].fresh_answering_count = c % 4;
                c /= 4;
            }
            ++checked;
            if (cluster::select_instance_answering(snaps) != brute_answering(snaps)) {
                ok = false;
                why << "answering placement diverges at code " << code << " n " << n;
            }
        }
    }
    report(2, "placement brute-force conformance", ok,
           ok ? std::to_string(checked) + " snapshot vectors" : why.str());
}

// ---------------------------------------------------------------------------
// Criterion 3: reasoning-phase characterization trends.
// ---------------------------------------------------------------------------

costmodel::LatencyProfile flat_decode_profile() {
    costmodel::LatencyProfile p;
    p.prefill_base = 0.0;
    p.prefill_per_token = 0.0;  // isolate the decode path
    p.decode_base = 0.03;
    return p;
}

std::map<long, std::vector<double>> normalized_reasoning_by_bin(
    const std::vector<RequestRecord>& recs) {
    std::map<long, std::vector<double>> bins;
    for (const auto& r : recs) {
        double ideal = static_cast<double>(r.spec.reasoning_tokens) * 0.03;
        bins[r.spec.reasoning_tokens / kBinWidth].push_back((r.reasoning_end - r.arrival) /
                                                            ideal);
    }
    return bins;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

void criterion_3() {
    Trace t = workload::generate_trace(300, 8.0, LengthDistribution::constant(128),
                                       LengthDistribution::uniform(128, 2048),
                                       LengthDistribution::constant(1), 101);
    RunConfig cfg;
    cfg.instance_count = 1;
    cfg.capacity_fraction = 0.5;
    auto prof = flat_decode_profile();

    cfg.policy = Policy::Oracle;
    auto oracle = normalized_reasoning_by_bin(engine::run(t, cfg, prof));
    cfg.policy = Policy::Fcfs;
    auto fcfs = normalized_reasoning_by_bin(engine::run(t, cfg, prof));
    cfg.policy = Policy::Rr;
    auto rr = normalized_reasoning_by_bin(engine::run(t, cfg, prof));

    bool ok = true;
    std::ostringstream why;
    for (auto& [bin, values] : oracle) {
        double m = mean(values);
        if (m < 1.0 - kExactEps || m > kOracleNormalizedMax) {
            ok = false;
            why << "oracle bin " << bin << " normalized " << m << "; ";
        }
    }
    long first_bin = fcfs.begin()->first;
    long last_bin = fcfs.rbegin()->first;
    double fcfs_first = mean(fcfs[first_bin]), fcfs_last = mean(fcfs[last_bin]);
    double rr_first = mean(rr[first_bin]), rr_last = mean(rr[last_bin]);
    if (!(fcfs_first > rr_first)) {
        ok = false;
        why << "fcfs short bin " << fcfs_first << " !> rr " << rr_first << "; ";
    }
    if (!(rr_last > kRrLongBinMin)) {
        ok = false;
        why << "rr long bin " << rr_last << " !> " << kRrLongBinMin << "; ";
    }
    if (!(rr_last > rr_first)) {
        ok = false;
        why << "rr not increasing (" << rr_first << " -> " << rr_last << "); ";
    }
    if (!(fcfs_first > fcfs_last)) {
        ok = false;
        why << "fcfs not decreasing (" << fcfs_first << " -> " << fcfs_last << "); ";
    }
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "fcfs %.2f->%.2f, rr %.2f->%.2f across reasoning bins", fcfs_first,
                  fcfs_last, rr_first, rr_last);
    report(3, "reasoning-phase characterization", ok, ok ? detail : why.str());
}

// ---------------------------------------------------------------------------
// Criterion 4: answering-phase SLO robustness.
// ---------------------------------------------------------------------------

void criterion_4() {
    Trace t = workload::generate_trace(300, 8.0, LengthDistribution::constant(128),
                                       LengthDistribution::constant(0),
                                       LengthDistribution::uniform(128, 2048), 202,
                                       /*kv_preloaded=*/true);
    RunConfig cfg;
    cfg.instance_count = 1;
    cfg.capacity_fraction = 0.5;
    auto prof = flat_decode_profile();

    auto attainment_by_bin = [&](const std::vector<RequestRecord>& recs) {
        std::map<long, std::pair<long, long>> bins;  // bin -> (ok, total)
        for (const auto& r : recs) {
            auto& [good, total] = bins[r.spec.answering_tokens / kBinWidth];
            if (!metrics::slo_violated(r, kTargetTpot, kQoeThreshold)) ++good;
            ++total;
        }
        return bins;
    };

    cfg.policy = Policy::Fcfs;
    auto fcfs = attainment_by_bin(engine::run(t, cfg, prof));
    cfg.policy = Policy::Rr;
    auto rr_recs = engine::run(t, cfg, prof);
    auto rr = attainment_by_bin(rr_recs);

    bool ok = true;
    std::ostringstream why;
    long rr_good = 0;
    for (auto& [bin, counts] : rr) {
        double rr_rate = static_cast<double>(counts.first) / counts.second;
        double fcfs_rate =
            static_cast<double>(fcfs[bin].first) / std::max(1L, fcfs[bin].second);
        rr_good += counts.first;
        if (rr_rate + kExactEps < fcfs_rate) {
            ok = false;
            why << "bin " << bin << " rr " << rr_rate << " < fcfs " << fcfs_rate << "; ";
        }
    }
    double overall = static_cast<double>(rr_good) / static_cast<double>(rr_recs.size());
    if (overall < kSloAttainmentFloor) {
        ok = false;
        why << "rr overall attainment " << overall << "; ";
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "rr overall attainment %.3f", overall);
    report(4, "answering-phase SLO robustness", ok, ok ? detail : why.str());
}

// ---------------------------------------------------------------------------
// Criteria 5, 6, 9: mixed-workload end-to-end runs.
// ---------------------------------------------------------------------------

Trace mixed_trace() {
    auto chat = workload::generate_trace(
        500, 12.0, LengthDistribution::uniform(64, 512),
        LengthDistribution::histogram(
            {{256, 0.35}, {512, 0.30}, {768, 0.20}, {1024, 0.10}, {1536, 0.04}, {2048, 0.01}}),
        LengthDistribution::uniform(1024, 4096), 303);
    auto heavy = workload::generate_trace(500, 12.0, LengthDistribution::uniform(64, 512),
                                          LengthDistribution::uniform(2048, 4608),
                                          LengthDistribution::uniform(128, 512), 304);
    return workload::mix_traces(chat, heavy, 0.25, 305);
}

struct MixedRuns {
    std::vector<RequestRecord> fcfs, rr, pascal, nomig, nonadaptive;
};

MixedRuns run_mixed() {
    Trace t = mixed_trace();
    // Batch-proportional decode step: instance token rate saturates with batch
    // size, so throughput differences between policies reflect scheduling, not
    // batch-count bookkeeping. Step stays under 0.04 s at a full batch, keeping
    // a 2.5x pacing margin against the 0.1 s/token target.
    costmodel::LatencyProfile prof;
    prof.decode_base = 0.0003;
    prof.decode_per_request = 0.001;
    RunConfig cfg;
    cfg.instance_count = 8;
    cfg.capacity_fraction = 0.5;

    MixedRuns out;
    cfg.policy = Policy::Fcfs;
    out.fcfs = engine::run(t, cfg, prof);
    cfg.policy = Policy::Rr;
    out.rr = engine::run(t, cfg, prof);
    cfg.policy = Policy::Pascal;
    out.pascal = engine::run(t, cfg, prof);
    cfg.ablations.no_migration = true;
    out.nomig = engine::run(t, cfg, prof);
    cfg.ablations.no_migration = false;
    cfg.ablations.non_adaptive = true;
    out.nonadaptive = engine::run(t, cfg, prof);
    return out;
}

std::map<long, double> tail_map(const std::vector<RequestRecord>& recs) {
    std::vector<std::pair<long, double>> rows;
    for (const auto& r : recs) rows.emplace_back(r.spec.reasoning_tokens, metrics::ttft(r));
    std::map<long, double> out;
    for (const auto& b : metrics::tail_ttft_bins(rows)) out[b.lo] = b.value;
    return out;
}

double slo_rate(const std::vector<RequestRecord>& recs) {
    long bad = 0;
    for (const auto& r : recs)
        if (metrics::slo_violated(r, kTargetTpot, kQoeThreshold)) ++bad;
    return static_cast<double>(bad) / static_cast<double>(recs.size());
}

void criterion_5(const MixedRuns& runs) {
    bool ok = true;
    std::ostringstream why;

    std::vector<long> reasoning_lengths;
    for (const auto& r : runs.pascal) reasoning_lengths.push_back(r.spec.reasoning_tokens);
    std::sort(reasoning_lengths.begin(), reasoning_lengths.end());
    long median = reasoning_lengths[reasoning_lengths.size() / 2];

    auto pascal_bins = tail_map(runs.pascal);
    auto fcfs_bins = tail_map(runs.fcfs);
    double best_reduction = 0.0;
    long compared = 0;
    for (auto& [lo, fcfs_tail] : fcfs_bins) {
        if (lo >= median) continue;
        auto it = pascal_bins.find(lo);
        if (it == pascal_bins.end()) continue;
        ++compared;
        if (it->second > fcfs_tail + kExactEps) {
            ok = false;
            why << "bin " << lo << " pascal tail " << it->second << " > fcfs " << fcfs_tail
                << "; ";
        }
        if (fcfs_tail > 0)
            best_reduction = std::max(best_reduction, 1.0 - it->second / fcfs_tail);
    }
    if (compared == 0) {
        ok = false;
        why << "no comparable bins below the median; ";
    }
    if (best_reduction < kTailReductionMin) {
        ok = false;
        why << "best tail reduction " << best_reduction << " < " << kTailReductionMin << "; ";
    }

    double pascal_slo = slo_rate(runs.pascal), rr_slo = slo_rate(runs.rr);
    if (pascal_slo > rr_slo + kExactEps) {
        ok = false;
        why << "pascal slo " << pascal_slo << " > rr " << rr_slo << "; ";
    }

    double tp = metrics::throughput(runs.pascal);
    for (const auto* base : {&runs.fcfs, &runs.rr}) {
        double tb = metrics::throughput(*base);
        if (std::abs(tp - tb) / tb > kThroughputTolerance) {
            ok = false;
            why << "throughput " << tp << " vs baseline " << tb << "; ";
        }
    }
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "best tail-TTFT cut %.0f%%, slo %.3f vs rr %.3f, throughput %.0f tok/s",
                  best_reduction * 100.0, pascal_slo, rr_slo, tp);
    report(5, "phase-aware end-to-end dominance", ok, ok ? detail : why.str());
}

void criterion_6(const MixedRuns& runs) {
    auto blocking_p99 = [](const std::vector<RequestRecord>& recs) {
        std::vector<double> v;
        for (const auto& r : recs) v.push_back(metrics::blocking_latency(r));
        return percentile(v, 0.99);
    };
    bool ok = true;
    std::ostringstream why;
    double base = blocking_p99(runs.pascal);
    double nomig = blocking_p99(runs.nomig);
    if (nomig < kBlockingRatioMin * base) {
        ok = false;
        why << "no-migration blocking p99 " << nomig << " vs pascal " << base << "; ";
    }
    double pascal_slo = slo_rate(runs.pascal);
    double nonadaptive_slo = slo_rate(runs.nonadaptive);
    if (nonadaptive_slo + kExactEps < pascal_slo) {
        ok = false;
        why << "non-adaptive slo " << nonadaptive_slo << " < pascal " << pascal_slo << "; ";
    }
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "blocking p99 %.3fs vs %.3fs, slo %.3f vs %.3f", nomig, base,
                  nonadaptive_slo, pascal_slo);
    report(6, "ablation directionality", ok, ok ? detail : why.str());
}

void criterion_9(const MixedRuns& runs) {
    std::vector<double> transfers, ttfts;
    for (const auto& r : runs.pascal) {
        ttfts.push_back(metrics::ttft(r));
        for (auto& [start, end] : r.migration_intervals) transfers.push_back(end - start);
    }
    bool ok = true;
    std::ostringstream why;
    double p99_transfer = percentile(transfers, 0.99);
    double p50_ttft = percentile(ttfts, 0.50);
    if (transfers.empty()) {
        ok = false;
        why << "no migrations occurred; ";
    } else if (p99_transfer > kTransferVsTtftMax * p50_ttft) {
        ok = false;
        why << "transfer p99 " << p99_transfer << " vs ttft p50 " << p50_ttft << "; ";
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "transfer p99 %.3fs, ttft p50 %.3fs (%zu moves)",
                  p99_transfer, p50_ttft, transfers.size());
    report(9, "KV-transfer accounting scale", ok, ok ? detail : why.str());
}

// ---------------------------------------------------------------------------
// Criterion 7: QoE unit suite.
// ---------------------------------------------------------------------------

std::vector<double> derive_digests(const std::vector<double>& deliveries, double tpot) {
    std::vector<double> d;
    for (double t : deliveries) d.push_back(d.empty() ? t : std::max(t, d.back() + tpot));
    return d;
}

RequestRecord record_from_digests(const std::vector<double>& deliveries, double tpot) {
    RequestRecord r;
    r.spec.answering_tokens = static_cast<long>(deliveries.size());
    r.spec.prompt_tokens = 1;
    r.first_answer_delivery = deliveries.front();
    r.answer_delivery_times = deliveries;
    r.answer_digest_times = derive_digests(deliveries, tpot);
    r.reasoning_end = deliveries.front();
    r.completion = r.answer_digest_times.back();
    return r;
}

// Numeric step-curve integration used as the independent oracle.
double qoe_numeric(const std::vector<double>& digests, double t0, double tpot, long n) {
    double horizon = digests.back();
    if (horizon <= t0) return 1.0;
    const long steps = 400000;
    double dt = (horizon - t0) / steps;
    double da = 0.0, ea = 0.0;
    for (long s = 0; s < steps; ++s) {
        double t = t0 + (s + 0.5) * dt;
        long digested = 0;
        for (double d : digests)
            if (d <= t) ++digested;
        long expected = std::min<long>(n, 1 + static_cast<long>(std::floor((t - t0) / tpot)));
        da += digested * dt;
        ea += expected * dt;
    }
    return da / ea;
}

void criterion_7() {
    bool ok = true;
    std::ostringstream why;

    // On-time delivery scores exactly 1.
    auto on_time = record_from_digests({0.0, 0.1, 0.2, 0.3}, 0.1);
    if (std::abs(metrics::qoe(on_time, 0.1) - 1.0) > kExactEps) {
        ok = false;
        why << "on-time qoe " << metrics::qoe(on_time, 0.1) << "; ";
    }

    // Worked 4-token delayed case: digests t0+{0,1,2,5} at tpot 1 -> 6/7,
    // verified first against the numeric step-integration oracle.
    auto delayed = record_from_digests({0.0, 1.0, 2.0, 5.0}, 1.0);
    double q = metrics::qoe(delayed, 1.0);
    double q_oracle = qoe_numeric(delayed.answer_digest_times, 0.0, 1.0, 4);
    if (std::abs(q - 6.0 / 7.0) > kExactEps || std::abs(q - q_oracle) > 1e-4) {
        ok = false;
        why << "worked case qoe " << q << " oracle " << q_oracle << "; ";
    }

    // Randomized: bounds plus monotonicity under a single-token delay. The
    // final delivery is kept late enough that the integration horizon is
    // unchanged by the delay (delaying the horizon-defining token can raise
    // the area ratio; see the design notes).
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        long n = 3 + static_cast<long>(rng() % 11);
        std::vector<double> deliveries;
        double t = 0.0;
        for (long k = 0; k + 1 < n; ++k) {
            deliveries.push_back(t);
            t += (rng() % 1000) / 2000.0;
        }
        deliveries.push_back(derive_digests(deliveries, 0.1).back() + 5.0);
        auto rec = record_from_digests(deliveries, 0.1);
        double base = metrics::qoe(rec, 0.1);
        if (base < -kExactEps || base > 1.0 + kExactEps) {
            ok = false;
            why << "qoe out of range " << base << "; ";
            break;
        }
        std::size_t which = 1 + rng() % (deliveries.size() - 2);
        auto bumped = deliveries;
        bumped[which] += 0.05 + (rng() % 100) / 50.0;
        for (std::size_t k = which + 1; k + 1 < bumped.size(); ++k)
            bumped[k] = std::max(bumped[k], bumped[which]);
        auto rec2 = record_from_digests(bumped, 0.1);
        if (metrics::qoe(rec2, 0.1) > base + kExactEps) {
            ok = false;
            why << "delay raised qoe " << base << " -> " << metrics::qoe(rec2, 0.1) << "; ";
        }
    }
    report(7, "QoE unit suite", ok, ok ? "exact cases + 1000 randomized" : why.str());
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism and request conservation.
// ---------------------------------------------------------------------------

std::string serialize(const std::vector<RequestRecord>& records) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& r : records) {
        out << r.spec.id << ' ' << r.arrival << ' ' << r.first_answer_delivery << ' '
            << r.completion << ' ' << r.blocked_interval_total;
        for (double d : r.answer_digest_times) out << ' ' << d;
        out << '\n';
    }
    return out.str();
}

void criterion_8() {
    Trace t = workload::generate_trace(200, 20.0, LengthDistribution::uniform(16, 256),
                                       LengthDistribution::uniform(0, 800),
                                       LengthDistribution::uniform(1, 200), 404);
    costmodel::LatencyProfile prof;
    prof.decode_base = 0.005;
    prof.prefill_per_token = 0.00005;
    bool ok = true;
    std::ostringstream why;
    for (Policy policy : {Policy::Fcfs, Policy::Rr, Policy::Oracle, Policy::Pascal}) {
        RunConfig cfg;
        cfg.instance_count = 4;
        cfg.capacity_fraction = 0.5;
        cfg.policy = policy;
        auto r1 = engine::run(t, cfg, prof);
        auto r2 = engine::run(t, cfg, prof);
        if (serialize(r1) != serialize(r2)) {
            ok = false;
            why << engine::policy_name(policy) << " not byte-identical; ";
        }
        std::set<long> ids;
        for (const auto& rec : r1) {
            ids.insert(rec.spec.id);
            if (rec.completion < rec.arrival ||
                static_cast<long>(rec.answer_delivery_times.size()) !=
                    rec.spec.answering_tokens) {
                ok = false;
                why << engine::policy_name(policy) << " id " << rec.spec.id
                    << " census broken; ";
            }
        }
        if (ids.size() != t.size() || r1.size() != t.size()) {
            ok = false;
            why << engine::policy_name(policy) << " lost/duplicated requests; ";
        }
    }
    report(8, "determinism and conservation", ok, ok ? "4 policies, 200 requests" : why.str());
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    MixedRuns runs = run_mixed();
    criterion_5(runs);
    criterion_6(runs);
    criterion_7();
    criterion_8();
    criterion_9(runs);
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
