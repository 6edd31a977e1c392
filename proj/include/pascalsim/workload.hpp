#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace pascalsim::workload {

// Static description of one inference request. Token budget is split into the
// prompt (consumed by prefill), reasoning tokens (user-invisible decode), and
// answering tokens (user-visible decode).
struct RequestSpec {
    long id = 0;
    double arrival_time = 0.0;
    long prompt_tokens = 1;
    long reasoning_tokens = 0;
    long answering_tokens = 1;
    // When set, the request's prompt KV already exists at arrival and prefill
    // is skipped (characterization mode for answering-phase experiments).
    bool kv_preloaded = false;

    bool operator==(const RequestSpec&) const = default;

    // Largest KV footprint this request ever holds.
    long max_kv() const { return prompt_tokens + reasoning_tokens + answering_tokens; }
};

using Trace = std::vector<RequestSpec>;

class LengthDistribution {
public:
    enum class Kind { Constant, UniformInteger, Histogram };

    static LengthDistribution constant(long value);
    static LengthDistribution uniform(long low, long high);
    static LengthDistribution histogram(std::vector<std::pair<long, double>> bins);
    // "constant:128" | "uniform:128:2048" | "hist:128=0.5,256=0.5"
    static LengthDistribution parse(const std::string& spec);

    long sample(std::mt19937_64& rng) const;
    // Lowest value the distribution can produce (used for validation).
    long min_value() const;

    Kind kind() const { return kind_; }

private:
    Kind kind_ = Kind::Constant;
    long value_ = 0;
    long low_ = 0, high_ = 0;
    std::vector<std::pair<long, double>> bins_;
    std::vector<double> cumulative_;
};

Trace generate_trace(long count, double arrival_rate,
                     const LengthDistribution& prompt_dist,
                     const LengthDistribution& reasoning_dist,
                     const LengthDistribution& answering_dist,
                     std::uint64_t seed, bool kv_preloaded = false);

// Replaces the length fields of floor(fraction*|base|) requests of `base`,
// chosen uniformly without replacement, with length fields sampled uniformly
// from `replacement`. Arrival times and ids of `base` are preserved.
Trace mix_traces(const Trace& base, const Trace& replacement, double fraction,
                 std::uint64_t seed);

Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

// Throws std::invalid_argument naming the offending field on violation.
void validate_trace(const Trace& trace);

}  // namespace pascalsim::workload
