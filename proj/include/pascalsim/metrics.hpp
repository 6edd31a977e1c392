#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pascalsim/workload.hpp"

namespace pascalsim::metrics {

using workload::RequestSpec;

// Full per-request timeline produced by the engine.
struct RequestRecord {
    RequestSpec spec;
    double arrival = 0.0;
    double prefill_complete = 0.0;
    double reasoning_end = 0.0;
    double first_answer_delivery = 0.0;
    // Start of the iteration that produced the first answering token.
    double first_answer_iter_start = 0.0;
    std::vector<double> answer_delivery_times;
    std::vector<double> answer_digest_times;
    std::vector<std::pair<double, double>> migration_intervals;
    double blocked_interval_total = 0.0;
    double completion = 0.0;
};

double ttft(const RequestRecord& r);
double ttfat(const RequestRecord& r);

// Ratio of the area under the digested-token step curve to the area under the
// expected step curve, both anchored at the first answer delivery and clipped
// at the answering token count; 1 when delivery fully keeps pace.
double qoe(const RequestRecord& r, double target_tpot);

bool slo_violated(const RequestRecord& r, double target_tpot = 0.1, double threshold = 0.95);

// Delay between the phase transition and the start of the iteration that
// produced the first answering token, with in-flight migration time excluded.
double blocking_latency(const RequestRecord& r);

double throughput(const std::vector<RequestRecord>& records);

struct TailBin {
    long lo = 0, hi = 0;   // reasoning-token range, inclusive
    long count = 0;
    std::string stat_kind; // max | p90 | p95 | p99
    double value = 0.0;
};

// 256-token reasoning-length bins; bins with < 5 samples are omitted. The
// statistic depends on the sample count: max (<10), p90 (<20), p95 (<100),
// p99 otherwise, all nearest-rank.
std::vector<TailBin> tail_ttft_bins(const std::vector<std::pair<long, double>>& rows);

struct RequestRow {
    long id = 0;
    long reasoning_tokens = 0;
    long answering_tokens = 0;
    double ttft = 0.0;
    double ttfat = 0.0;
    double qoe = 0.0;
    bool slo_violated = false;
    double blocking_latency = 0.0;
};

struct RunReport {
    std::vector<RequestRow> rows;
    double ttft_mean = 0.0, ttft_p50 = 0.0, ttft_p90 = 0.0, ttft_p95 = 0.0, ttft_p99 = 0.0;
    double slo_violation_rate = 0.0;
    double ttfat_attainment = 0.0;  // fraction with ttfat <= target
    double throughput = 0.0;        // output tokens / second
    std::vector<TailBin> bins;
    // Resolved run configuration echoed into the summary for reproduction.
    std::vector<std::pair<std::string, std::string>> config_echo;
};

RunReport build_report(const std::vector<RequestRecord>& records,
                       double target_tpot, double qoe_threshold, double ttfat_target);

// Writes <prefix>.requests.csv, <prefix>.summary.txt and <prefix>.bins.csv.
void write_report(const RunReport& report, const std::string& prefix);
RunReport load_report(const std::string& prefix);

// Aligned deltas between the first report and each subsequent one. Rejects
// reports whose request ids or lengths differ.
std::string compare_reports(const std::vector<RunReport>& reports,
                            const std::vector<std::string>& names);

}  // namespace pascalsim::metrics
