#include "pascalsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "pascalsim/textio.hpp"

namespace pascalsim::workload {

using textio::parse_double;
using textio::parse_long;
using textio::split;
using textio::trim;

namespace {

constexpr const char* kTraceVersion = "pascal-trace-v1";

double uniform01(std::mt19937_64& rng) {
    // 53-bit mantissa draw; stable across standard library implementations.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

long uniform_long(std::mt19937_64& rng, long low, long high) {
    auto span = static_cast<unsigned long long>(high - low) + 1ull;
    return low + static_cast<long>(rng() % span);
}

}  // namespace

LengthDistribution LengthDistribution::constant(long value) {
    LengthDistribution d;
    d.kind_ = Kind::Constant;
    d.value_ = value;
    return d;
}

LengthDistribution LengthDistribution::uniform(long low, long high) {
    if (low > high) throw std::invalid_argument("uniform distribution: low > high");
    LengthDistribution d;
    d.kind_ = Kind::UniformInteger;
    d.low_ = low;
    d.high_ = high;
    return d;
}

LengthDistribution LengthDistribution::histogram(std::vector<std::pair<long, double>> bins) {
    if (bins.empty()) throw std::invalid_argument("histogram distribution: no bins");
    double total = 0.0;
    for (auto& [value, weight] : bins) {
        if (weight < 0.0) throw std::invalid_argument("histogram distribution: negative weight");
        total += weight;
    }
    if (total <= 0.0) throw std::invalid_argument("histogram distribution: all weights zero");
    LengthDistribution d;
    d.kind_ = Kind::Histogram;
    d.bins_ = std::move(bins);
    double acc = 0.0;
    for (auto& [value, weight] : d.bins_) {
        acc += weight / total;
        d.cumulative_.push_back(acc);
    }
    d.cumulative_.back() = 1.0;
    return d;
}

LengthDistribution LengthDistribution::parse(const std::string& spec) {
    auto parts = split(spec, ':');
    if (parts.empty()) throw std::invalid_argument("empty distribution spec");
    std::string kind(trim(parts[0]));
    if (kind == "constant") {
        if (parts.size() != 2) throw std::invalid_argument("constant distribution needs one value");
        return constant(parse_long(parts[1], "constant value"));
    }
    if (kind == "uniform") {
        if (parts.size() != 3) throw std::invalid_argument("uniform distribution needs low:high");
        return uniform(parse_long(parts[1], "uniform low"), parse_long(parts[2], "uniform high"));
    }
    if (kind == "hist") {
        if (parts.size() != 2) throw std::invalid_argument("hist distribution needs value=weight pairs");
        std::vector<std::pair<long, double>> bins;
        for (auto entry : split(parts[1], ',')) {
            auto kv = split(entry, '=');
            if (kv.size() != 2) throw std::invalid_argument("hist entry must be value=weight");
            bins.emplace_back(parse_long(kv[0], "hist value"), parse_double(kv[1], "hist weight"));
        }
        return histogram(std::move(bins));
    }
    throw std::invalid_argument("unknown distribution kind: '" + kind + "'");
}

long LengthDistribution::sample(std::mt19937_64& rng) const {
    switch (kind_) {
        case Kind::Constant:
            return value_;
        case Kind::UniformInteger:
            return uniform_long(rng, low_, high_);
        case Kind::Histogram: {
            double u = uniform01(rng);
            auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
            std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
            if (idx >= bins_.size()) idx = bins_.size() - 1;
            return bins_[idx].first;
        }
    }
    return value_;
}

long LengthDistribution::min_value() const {
    switch (kind_) {
        case Kind::Constant:
            return value_;
        case Kind::UniformInteger:
            return low_;
        case Kind::Histogram: {
            long m = std::numeric_limits<long>::max();
            for (auto& [value, weight] : bins_)
                if (weight > 0.0) m = std::min(m, value);
            return m;
        }
    }
    return value_;
}

Trace generate_trace(long count, double arrival_rate,
                     const LengthDistribution& prompt_dist,
                     const LengthDistribution& reasoning_dist,
                     const LengthDistribution& answering_dist,
                     std::uint64_t seed, bool kv_preloaded) {
    if (count < 0) throw std::invalid_argument("count must be >= 0");
    if (arrival_rate <= 0.0) throw std::invalid_argument("arrival_rate must be > 0");
    if (prompt_dist.min_value() < 1)
        throw std::invalid_argument("prompt_tokens distribution can produce values < 1");
    if (reasoning_dist.min_value() < 0)
        throw std::invalid_argument("reasoning_tokens distribution can produce values < 0");
    if (answering_dist.min_value() < 1)
        throw std::invalid_argument("answering_tokens distribution can produce values < 1");

    std::mt19937_64 rng(seed);
    Trace trace;
    trace.reserve(static_cast<std::size_t>(count));
    double t = 0.0;
    for (long i = 0; i < count; ++i) {
        // First arrival occurs at the first exponential gap, not at t=0.
        t += -std::log1p(-uniform01(rng)) / arrival_rate;
        RequestSpec r;
        r.id = i;
        r.arrival_time = t;
        r.prompt_tokens = prompt_dist.sample(rng);
        r.reasoning_tokens = reasoning_dist.sample(rng);
        r.answering_tokens = answering_dist.sample(rng);
        r.kv_preloaded = kv_preloaded;
        trace.push_back(r);
    }
    validate_trace(trace);
    return trace;
}

Trace mix_traces(const Trace& base, const Trace& replacement, double fraction,
                 std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("fraction must be in [0,1]");
    if (fraction > 0.0 && fraction < 1.0 && (base.empty() || replacement.empty()))
        throw std::invalid_argument("mix_traces: both traces must be non-empty");
    if (fraction > 0.0 && replacement.empty())
        throw std::invalid_argument("mix_traces: replacement trace is empty");

    Trace out = base;
    auto n_replace = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(base.size())));
    if (n_replace == 0) return out;

    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates picks n_replace distinct indices.
    std::vector<std::size_t> indices(base.size());
    std::iota(indices.begin(), indices.end(), 0u);
    for (std::size_t i = 0; i < n_replace; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (indices.size() - i));
        std::swap(indices[i], indices[j]);
    }
    for (std::size_t i = 0; i < n_replace; ++i) {
        const RequestSpec& src =
            replacement[static_cast<std::size_t>(rng() % replacement.size())];
        RequestSpec& dst = out[indices[i]];
        dst.prompt_tokens = src.prompt_tokens;
        dst.reasoning_tokens = src.reasoning_tokens;
        dst.answering_tokens = src.answering_tokens;
        dst.kv_preloaded = src.kv_preloaded;
    }
    std::sort(out.begin(), out.end(), [](const RequestSpec& a, const RequestSpec& b) {
        return std::tie(a.arrival_time, a.id) < std::tie(b.arrival_time, b.id);
    });
    return out;
}

void validate_trace(const Trace& trace) {
    std::unordered_set<long> ids;
    double prev_arrival = -1.0;
    long prev_id = -1;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const RequestSpec& r = trace[i];
        auto where = " (request " + std::to_string(r.id) + ")";
        if (r.id < 0) throw std::invalid_argument("id must be non-negative" + where);
        if (r.arrival_time < 0.0) throw std::invalid_argument("arrival_time must be >= 0" + where);
        if (r.prompt_tokens < 1) throw std::invalid_argument("prompt_tokens must be >= 1" + where);
        if (r.reasoning_tokens < 0) throw std::invalid_argument("reasoning_tokens must be >= 0" + where);
        if (r.answering_tokens < 1) throw std::invalid_argument("answering_tokens must be >= 1" + where);
        if (!ids.insert(r.id).second) throw std::invalid_argument("duplicate id" + where);
        if (r.arrival_time < prev_arrival ||
            (r.arrival_time == prev_arrival && r.id < prev_id))
            throw std::invalid_argument("trace not sorted by (arrival_time, id)" + where);
        prev_arrival = r.arrival_time;
        prev_id = r.id;
    }
}

void save_trace(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
    out << kTraceVersion << '\n';
    char buf[160];
    for (const RequestSpec& r : trace) {
        std::snprintf(buf, sizeof(buf), "%ld,%.9f,%ld,%ld,%ld,%d\n", r.id, r.arrival_time,
                      r.prompt_tokens, r.reasoning_tokens, r.answering_tokens,
                      r.kv_preloaded ? 1 : 0);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(in, line)) return {};  // empty file -> empty trace
    if (std::string(trim(line)) != kTraceVersion)
        throw std::runtime_error(path + ":1: expected header '" + kTraceVersion + "'");

    Trace trace;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto stripped = trim(line);
        if (stripped.empty()) continue;
        auto at = [&](const char* what) {
            return path + ":" + std::to_string(lineno) + ": " + what;
        };
        try {
            auto fields = split(stripped, ',');
            if (fields.size() != 5 && fields.size() != 6)
                throw std::invalid_argument("expected 5 or 6 fields");
            RequestSpec r;
            r.id = parse_long(fields[0], "id");
            r.arrival_time = parse_double(fields[1], "arrival_time");
            r.prompt_tokens = parse_long(fields[2], "prompt_tokens");
            r.reasoning_tokens = parse_long(fields[3], "reasoning_tokens");
            r.answering_tokens = parse_long(fields[4], "answering_tokens");
            if (fields.size() == 6) r.kv_preloaded = parse_long(fields[5], "kv_preloaded") != 0;
            trace.push_back(r);
        } catch (const std::exception& e) {
            throw std::runtime_error(at(e.what()));
        }
    }
    try {
        validate_trace(trace);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return trace;
}

}  // namespace pascalsim::workload
