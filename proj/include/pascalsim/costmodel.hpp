#pragma once

#include <span>
#include <string>
#include <vector>

namespace pascalsim::costmodel {

// Analytic latency surrogate. Defaults pin a flat 30 ms decode step and a
// fabric sized so a 2048-token KV transfer costs 40 ms; everything else is
// calibratable from measurements.
struct LatencyProfile {
    double prefill_base = 0.0;           // seconds
    double prefill_per_token = 0.00025;  // seconds/token
    double decode_base = 0.03;           // seconds
    double decode_per_request = 0.0;     // seconds/request-in-batch
    double decode_per_kv_token = 0.0;    // seconds/resident KV token
    double swap_bandwidth = 51200.0;     // KV tokens/second, GPU<->CPU
    double fabric_bandwidth = 51200.0;   // KV tokens/second per link
    double fabric_latency = 0.0;         // seconds, fixed per transfer
};

void validate_profile(const LatencyProfile& p);

double prefill_latency(const LatencyProfile& p, long prompt_tokens);
double decode_step_latency(const LatencyProfile& p, long batch_size, long total_kv_tokens);
double swap_latency(const LatencyProfile& p, long kv_tokens);
double transfer_latency(const LatencyProfile& p, long kv_tokens);

struct CalibrationSample {
    long batch_size = 0;
    long total_kv_tokens = 0;
    double observed_step_seconds = 0.0;
};

struct CalibrationResult {
    double decode_base = 0.0;
    double decode_per_request = 0.0;
    double decode_per_kv_token = 0.0;
    double rmse = 0.0;
};

// Least-squares fit of the decode-step plane. Throws std::invalid_argument on
// rank-deficient sample sets.
CalibrationResult calibrate(std::span<const CalibrationSample> samples);

std::vector<CalibrationSample> load_calibration_samples(const std::string& path);

LatencyProfile load_profile(const std::string& path);
void save_profile(const LatencyProfile& p, const std::string& path);
void profile_set_field(LatencyProfile& p, const std::string& key, double value);

}  // namespace pascalsim::costmodel
