#include "pascalsim/costmodel.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "pascalsim/textio.hpp"

namespace pascalsim::costmodel {

using textio::parse_double;
using textio::parse_long;
using textio::split;
using textio::trim;

namespace {
constexpr const char* kProfileVersion = "pascal-profile-v1";
}

void validate_profile(const LatencyProfile& p) {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0)) throw std::invalid_argument(std::string(name) + " must be >= 0");
    };
    nonneg(p.prefill_base, "prefill_base");
    nonneg(p.prefill_per_token, "prefill_per_token");
    nonneg(p.decode_base, "decode_base");
    nonneg(p.decode_per_request, "decode_per_request");
    nonneg(p.decode_per_kv_token, "decode_per_kv_token");
    nonneg(p.fabric_latency, "fabric_latency");
    if (!(p.swap_bandwidth > 0.0)) throw std::invalid_argument("swap_bandwidth must be > 0");
    if (!(p.fabric_bandwidth > 0.0)) throw std::invalid_argument("fabric_bandwidth must be > 0");
}

double prefill_latency(const LatencyProfile& p, long prompt_tokens) {
    return p.prefill_base + p.prefill_per_token * static_cast<double>(prompt_tokens);
}

double decode_step_latency(const LatencyProfile& p, long batch_size, long total_kv_tokens) {
    return p.decode_base + p.decode_per_request * static_cast<double>(batch_size) +
           p.decode_per_kv_token * static_cast<double>(total_kv_tokens);
}

double swap_latency(const LatencyProfile& p, long kv_tokens) {
    if (kv_tokens == 0) return 0.0;
    return static_cast<double>(kv_tokens) / p.swap_bandwidth;
}

double transfer_latency(const LatencyProfile& p, long kv_tokens) {
    return p.fabric_latency + static_cast<double>(kv_tokens) / p.fabric_bandwidth;
}

CalibrationResult calibrate(std::span<const CalibrationSample> samples) {
    if (samples.size() < 3)
        throw std::invalid_argument("calibrate: need at least 3 samples");

    // Normal equations for y = c0 + c1*batch + c2*kv.
    std::array<std::array<double, 4>, 3> m{};  // augmented [A | b]
    for (const CalibrationSample& s : samples) {
        double x[3] = {1.0, static_cast<double>(s.batch_size),
                       static_cast<double>(s.total_kv_tokens)};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] += x[i] * x[j];
            m[i][3] += x[i] * s.observed_step_seconds;
        }
    }

    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        if (std::abs(m[col][col]) < 1e-12)
            throw std::invalid_argument(
                "calibrate: rank-deficient sample set; vary batch size and KV totals");
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }

    CalibrationResult res;
    res.decode_base = m[0][3] / m[0][0];
    res.decode_per_request = m[1][3] / m[1][1];
    res.decode_per_kv_token = m[2][3] / m[2][2];

    double sq = 0.0;
    for (const CalibrationSample& s : samples) {
        double pred = res.decode_base +
                      res.decode_per_request * static_cast<double>(s.batch_size) +
                      res.decode_per_kv_token * static_cast<double>(s.total_kv_tokens);
        sq += (pred - s.observed_step_seconds) * (pred - s.observed_step_seconds);
    }
    res.rmse = std::sqrt(sq / static_cast<double>(samples.size()));
    return res;
}

std::vector<CalibrationSample> load_calibration_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calibration file: " + path);
    std::vector<CalibrationSample> samples;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        auto fields = split(stripped, ',');
        if (fields.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected batch,kv,seconds");
        CalibrationSample s;
        s.batch_size = parse_long(fields[0], "batch");
        s.total_kv_tokens = parse_long(fields[1], "kv");
        s.observed_step_seconds = parse_double(fields[2], "seconds");
        samples.push_back(s);
    }
    return samples;
}

void profile_set_field(LatencyProfile& p, const std::string& key, double value) {
    if (key == "prefill_base") p.prefill_base = value;
    else if (key == "prefill_per_token") p.prefill_per_token = value;
    else if (key == "decode_base") p.decode_base = value;
    else if (key == "decode_per_request") p.decode_per_request = value;
    else if (key == "decode_per_kv_token") p.decode_per_kv_token = value;
    else if (key == "swap_bandwidth") p.swap_bandwidth = value;
    else if (key == "fabric_bandwidth") p.fabric_bandwidth = value;
    else if (key == "fabric_latency") p.fabric_latency = value;
    else throw std::invalid_argument("unknown profile field: " + key);
}

LatencyProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file: " + path);
    std::string line;
    if (!std::getline(in, line) || std::string(trim(line)) != kProfileVersion)
        throw std::runtime_error(path + ":1: expected header '" + kProfileVersion + "'");
    LatencyProfile p;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        auto kv = split(stripped, '=');
        if (kv.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        try {
            profile_set_field(p, std::string(trim(kv[0])), parse_double(kv[1], std::string(trim(kv[0]))));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate_profile(p);
    return p;
}

void save_profile(const LatencyProfile& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open profile file for writing: " + path);
    out << kProfileVersion << '\n';
    char buf[96];
    auto emit = [&](const char* key, double v) {
        if (std::isinf(v)) {
            out << key << "=inf\n";
        } else {
            std::snprintf(buf, sizeof(buf), "%s=%.12g\n", key, v);
            out << buf;
        }
    };
    emit("prefill_base", p.prefill_base);
    emit("prefill_per_token", p.prefill_per_token);
    emit("decode_base", p.decode_base);
    emit("decode_per_request", p.decode_per_request);
    emit("decode_per_kv_token", p.decode_per_kv_token);
    emit("swap_bandwidth", p.swap_bandwidth);
    emit("fabric_bandwidth", p.fabric_bandwidth);
    emit("fabric_latency", p.fabric_latency);
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pascalsim::costmodel
