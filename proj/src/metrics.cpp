#include "pascalsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pascalsim/textio.hpp"

namespace pascalsim::metrics {

using textio::parse_double;
using textio::parse_long;
using textio::split;
using textio::trim;

namespace {
constexpr const char* kReportVersion = "pascal-report-v1";
constexpr long kBinWidth = 256;

double nearest_rank(std::vector<double> sorted, double pct) {
    // sorted ascending; nearest-rank percentile, 1-based rank ceil(p*n).
    auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct * n));
    if (rank < 1) rank = 1;
    if (rank > sorted.size()) rank = sorted.size();
    return sorted[rank - 1];
}
}  // namespace

double ttft(const RequestRecord& r) { return r.first_answer_delivery - r.arrival; }

double ttfat(const RequestRecord& r) { return r.first_answer_delivery - r.reasoning_end; }

double qoe(const RequestRecord& r, double target_tpot) {
    long n = r.spec.answering_tokens;
    if (n < 1 || r.answer_digest_times.empty()) return 1.0;
    double t0 = r.first_answer_delivery;
    double horizon = r.answer_digest_times.back();
    if (horizon <= t0) return 1.0;  // everything digested instantly

    double digested_area = 0.0;
    for (double t : r.answer_digest_times) digested_area += std::max(0.0, horizon - t);
    double expected_area = 0.0;
    for (long k = 0; k < n; ++k)
        expected_area += std::max(0.0, horizon - (t0 + static_cast<double>(k) * target_tpot));
    if (expected_area <= 0.0) return 1.0;
    return digested_area / expected_area;
}

bool slo_violated(const RequestRecord& r, double target_tpot, double threshold) {
    return qoe(r, target_tpot) < threshold;
}

double blocking_latency(const RequestRecord& r) {
    double window_lo = r.reasoning_end;
    double window_hi = r.first_answer_iter_start;
    double migration = 0.0;
    for (auto& [start, end] : r.migration_intervals) {
        double lo = std::max(start, window_lo);
        double hi = std::min(end, window_hi);
        if (hi > lo) migration += hi - lo;
    }
    return std::max(0.0, window_hi - window_lo - migration);
}

double throughput(const std::vector<RequestRecord>& records) {
    if (records.empty()) throw std::invalid_argument("throughput: empty record set");
    double total_tokens = 0.0;
    double first_arrival = records.front().arrival;
    double last_completion = records.front().completion;
    for (const RequestRecord& r : records) {
        total_tokens += static_cast<double>(r.spec.reasoning_tokens + r.spec.answering_tokens);
        first_arrival = std::min(first_arrival, r.arrival);
        last_completion = std::max(last_completion, r.completion);
    }
    double span = last_completion - first_arrival;
    if (span <= 0.0) return 0.0;
    return total_tokens / span;
}

std::vector<TailBin> tail_ttft_bins(const std::vector<std::pair<long, double>>& rows) {
    std::map<long, std::vector<double>> by_bin;
    for (auto& [reasoning_tokens, t] : rows) by_bin[reasoning_tokens / kBinWidth].push_back(t);

    std::vector<TailBin> bins;
    for (auto& [k, values] : by_bin) {
        if (values.size() < 5) continue;
        std::sort(values.begin(), values.end());
        TailBin b;
        b.lo = k * kBinWidth;
        b.hi = k * kBinWidth + kBinWidth - 1;
        b.count = static_cast<long>(values.size());
        if (values.size() < 10) {
            b.stat_kind = "max";
            b.value = values.back();
        } else if (values.size() < 20) {
            b.stat_kind = "p90";
            b.value = nearest_rank(values, 0.90);
        } else if (values.size() < 100) {
            b.stat_kind = "p95";
            b.value = nearest_rank(values, 0.95);
        } else {
            b.stat_kind = "p99";
            b.value = nearest_rank(values, 0.99);
        }
        bins.push_back(b);
    }
    return bins;
}

RunReport build_report(const std::vector<RequestRecord>& records,
                       double target_tpot, double qoe_threshold, double ttfat_target) {
    RunReport rep;
    if (records.empty()) return rep;

    std::vector<double> ttfts;
    std::vector<std::pair<long, double>> bin_rows;
    long violations = 0, ttfat_ok = 0;
    for (const RequestRecord& r : records) {
        RequestRow row;
        row.id = r.spec.id;
        row.reasoning_tokens = r.spec.reasoning_tokens;
        row.answering_tokens = r.spec.answering_tokens;
        row.ttft = ttft(r);
        row.ttfat = ttfat(r);
        row.qoe = qoe(r, target_tpot);
        row.slo_violated = row.qoe < qoe_threshold;
        row.blocking_latency = blocking_latency(r);
        rep.rows.push_back(row);
        ttfts.push_back(row.ttft);
        bin_rows.emplace_back(row.reasoning_tokens, row.ttft);
        if (row.slo_violated) ++violations;
        if (row.ttfat <= ttfat_target) ++ttfat_ok;
    }
    std::sort(ttfts.begin(), ttfts.end());
    double sum = 0.0;
    for (double t : ttfts) sum += t;
    auto n = static_cast<double>(ttfts.size());
    rep.ttft_mean = sum / n;
    rep.ttft_p50 = nearest_rank(ttfts, 0.50);
    rep.ttft_p90 = nearest_rank(ttfts, 0.90);
    rep.ttft_p95 = nearest_rank(ttfts, 0.95);
    rep.ttft_p99 = nearest_rank(ttfts, 0.99);
    rep.slo_violation_rate = static_cast<double>(violations) / n;
    rep.ttfat_attainment = static_cast<double>(ttfat_ok) / n;
    rep.throughput = throughput(records);
    rep.bins = tail_ttft_bins(bin_rows);
    return rep;
}

void write_report(const RunReport& report, const std::string& prefix) {
    auto write_atomic = [](const std::string& path, const std::string& content) {
        std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
            out << content;
            if (!out) throw std::runtime_error("write failed: " + tmp);
        }
        std::filesystem::rename(tmp, path);
    };

    char buf[256];
    std::ostringstream req;
    req << kReportVersion << '\n';
    req << "id,reasoning_tokens,answering_tokens,ttft,ttfat,qoe,slo_violated,blocking_latency\n";
    for (const RequestRow& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%ld,%ld,%ld,%.9f,%.9f,%.9f,%d,%.9f\n", r.id,
                      r.reasoning_tokens, r.answering_tokens, r.ttft, r.ttfat, r.qoe,
                      r.slo_violated ? 1 : 0, r.blocking_latency);
        req << buf;
    }
    write_atomic(prefix + ".requests.csv", req.str());

    std::ostringstream sum;
    sum << kReportVersion << '\n';
    for (auto& [k, v] : report.config_echo) sum << k << '=' << v << '\n';
    auto emit = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s=%.9f\n", key, v);
        sum << buf;
    };
    emit("ttft_mean", report.ttft_mean);
    emit("ttft_p50", report.ttft_p50);
    emit("ttft_p90", report.ttft_p90);
    emit("ttft_p95", report.ttft_p95);
    emit("ttft_p99", report.ttft_p99);
    emit("slo_violation_rate", report.slo_violation_rate);
    emit("ttfat_attainment", report.ttfat_attainment);
    emit("throughput", report.throughput);
    write_atomic(prefix + ".summary.txt", sum.str());

    std::ostringstream bins;
    bins << kReportVersion << '\n';
    bins << "bin_lo,bin_hi,n,stat_kind,value\n";
    for (const TailBin& b : report.bins) {
        std::snprintf(buf, sizeof(buf), "%ld,%ld,%ld,%s,%.9f\n", b.lo, b.hi, b.count,
                      b.stat_kind.c_str(), b.value);
        bins << buf;
    }
    write_atomic(prefix + ".bins.csv", bins.str());
}

RunReport load_report(const std::string& prefix) {
    RunReport rep;
    {
        std::string path = prefix + ".requests.csv";
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open report file: " + path);
        std::string line;
        if (!std::getline(in, line) || std::string(trim(line)) != kReportVersion)
            throw std::runtime_error(path + ": bad or missing version header");
        std::getline(in, line);  // column header
        long lineno = 2;
        while (std::getline(in, line)) {
            ++lineno;
            auto stripped = trim(line);
            if (stripped.empty()) continue;
            auto f = split(stripped, ',');
            if (f.size() != 8)
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 8 fields");
            RequestRow r;
            r.id = parse_long(f[0], "id");
            r.reasoning_tokens = parse_long(f[1], "reasoning_tokens");
            r.answering_tokens = parse_long(f[2], "answering_tokens");
            r.ttft = parse_double(f[3], "ttft");
            r.ttfat = parse_double(f[4], "ttfat");
            r.qoe = parse_double(f[5], "qoe");
            r.slo_violated = parse_long(f[6], "slo_violated") != 0;
            r.blocking_latency = parse_double(f[7], "blocking_latency");
            rep.rows.push_back(r);
        }
    }
    {
        std::string path = prefix + ".summary.txt";
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open report file: " + path);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            auto kv = split(trim(line), '=');
            if (kv.size() != 2) continue;
            std::string key(trim(kv[0]));
            std::string value(trim(kv[1]));
            if (key == "slo_violation_rate") rep.slo_violation_rate = parse_double(value, key);
            else if (key == "throughput") rep.throughput = parse_double(value, key);
            else if (key == "ttft_mean") rep.ttft_mean = parse_double(value, key);
            else if (key == "ttft_p50") rep.ttft_p50 = parse_double(value, key);
            else if (key == "ttft_p90") rep.ttft_p90 = parse_double(value, key);
            else if (key == "ttft_p95") rep.ttft_p95 = parse_double(value, key);
            else if (key == "ttft_p99") rep.ttft_p99 = parse_double(value, key);
            else if (key == "ttfat_attainment") rep.ttfat_attainment = parse_double(value, key);
            else rep.config_echo.emplace_back(key, value);
        }
    }
    std::vector<std::pair<long, double>> bin_rows;
    for (const RequestRow& r : rep.rows) bin_rows.emplace_back(r.reasoning_tokens, r.ttft);
    rep.bins = tail_ttft_bins(bin_rows);
    return rep;
}

std::string compare_reports(const std::vector<RunReport>& reports,
                            const std::vector<std::string>& names) {
    if (reports.size() < 2)
        throw std::invalid_argument("compare: need at least 2 reports");
    const RunReport& base = reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const RunReport& other = reports[i];
        if (other.rows.size() != base.rows.size())
            throw std::invalid_argument("compare: reports cover different traces");
        for (std::size_t j = 0; j < base.rows.size(); ++j) {
            if (base.rows[j].id != other.rows[j].id ||
                base.rows[j].reasoning_tokens != other.rows[j].reasoning_tokens ||
                base.rows[j].answering_tokens != other.rows[j].answering_tokens)
                throw std::invalid_argument("compare: reports cover different traces");
        }
    }

    std::ostringstream out;
    char buf[256];
    out << "comparison vs " << names.front() << "\n\n";
    out << "tail TTFT per reasoning-length bin (value, delta%)\n";
    out << "bin_lo,bin_hi,stat";
    for (auto& n : names) out << ',' << n;
    out << '\n';
    for (const TailBin& b : base.bins) {
        std::snprintf(buf, sizeof(buf), "%ld,%ld,%s,%.4f", b.lo, b.hi, b.stat_kind.c_str(), b.value);
        out << buf;
        for (std::size_t i = 1; i < reports.size(); ++i) {
            const TailBin* match = nullptr;
            for (const TailBin& ob : reports[i].bins)
                if (ob.lo == b.lo) match = &ob;
            if (match && b.value > 0.0) {
                std::snprintf(buf, sizeof(buf), ",%.4f (%+.1f%%)", match->value,
                              100.0 * (match->value - b.value) / b.value);
                out << buf;
            } else {
                out << ",-";
            }
        }
        out << '\n';
    }
    out << "\naggregates\n";
    out << "metric";
    for (auto& n : names) out << ',' << n;
    out << '\n';
    auto agg_row = [&](const char* name, auto getter) {
        out << name;
        for (const RunReport& r : reports) {
            std::snprintf(buf, sizeof(buf), ",%.6f", getter(r));
            out << buf;
        }
        out << '\n';
    };
    agg_row("slo_violation_rate", [](const RunReport& r) { return r.slo_violation_rate; });
    agg_row("throughput", [](const RunReport& r) { return r.throughput; });
    agg_row("ttft_p50", [](const RunReport& r) { return r.ttft_p50; });
    agg_row("ttft_p99", [](const RunReport& r) { return r.ttft_p99; });
    return out.str();
}

}  // namespace pascalsim::metrics
