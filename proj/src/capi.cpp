#include "pascal.h"

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pascalsim/costmodel.hpp"
#include "pascalsim/engine.hpp"
#include "pascalsim/metrics.hpp"
#include "pascalsim/workload.hpp"

namespace {

thread_local std::string g_last_error;

using pascalsim::costmodel::LatencyProfile;
using pascalsim::metrics::RunReport;
using pascalsim::workload::Trace;

template <typename F>
pascal_status guarded(F&& fn) {
    try {
        fn();
        g_last_error.clear();
        return PASCAL_OK;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return PASCAL_ERR_INVALID_ARGUMENT;
    } catch (const std::runtime_error& e) {
        g_last_error = e.what();
        return PASCAL_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PASCAL_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

struct pascal_trace {
    Trace trace;
};
struct pascal_profile {
    LatencyProfile profile;
};
struct pascal_report {
    RunReport report;
};

extern "C" {

const char* pascal_last_error(void) { return g_last_error.c_str(); }

pascal_status pascal_trace_load(const char* path, pascal_trace** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new pascal_trace{pascalsim::workload::load_trace(path)};
    });
}

pascal_status pascal_trace_save(const pascal_trace* t, const char* path) {
    return guarded([&] {
        require(t && path, "null argument");
        pascalsim::workload::save_trace(t->trace, path);
    });
}

pascal_status pascal_trace_generate(long count, double arrival_rate,
                                    const char* prompt_dist, const char* reasoning_dist,
                                    const char* answering_dist, uint64_t seed,
                                    int kv_preloaded, pascal_trace** out) {
    return guarded([&] {
        require(prompt_dist && reasoning_dist && answering_dist && out, "null argument");
        using pascalsim::workload::LengthDistribution;
        *out = new pascal_trace{pascalsim::workload::generate_trace(
            count, arrival_rate, LengthDistribution::parse(prompt_dist),
            LengthDistribution::parse(reasoning_dist),
            LengthDistribution::parse(answering_dist), seed, kv_preloaded != 0)};
    });
}

pascal_status pascal_trace_mix(const pascal_trace* base, const pascal_trace* replacement,
                               double fraction, uint64_t seed, pascal_trace** out) {
    return guarded([&] {
        require(base && replacement && out, "null argument");
        *out = new pascal_trace{
            pascalsim::workload::mix_traces(base->trace, replacement->trace, fraction, seed)};
    });
}

long pascal_trace_size(const pascal_trace* t) {
    return t ? static_cast<long>(t->trace.size()) : 0;
}

void pascal_trace_free(pascal_trace* t) { delete t; }

pascal_status pascal_profile_default(pascal_profile** out) {
    return guarded([&] {
        require(out, "null argument");
        *out = new pascal_profile{};
    });
}

pascal_status pascal_profile_load(const char* path, pascal_profile** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new pascal_profile{pascalsim::costmodel::load_profile(path)};
    });
}

pascal_status pascal_profile_save(const pascal_profile* p, const char* path) {
    return guarded([&] {
        require(p && path, "null argument");
        pascalsim::costmodel::save_profile(p->profile, path);
    });
}

pascal_status pascal_profile_set(pascal_profile* p, const char* key, double value) {
    return guarded([&] {
        require(p && key, "null argument");
        pascalsim::costmodel::profile_set_field(p->profile, key, value);
    });
}

pascal_status pascal_profile_calibrate(const char* samples_path, pascal_profile* p,
                                       double* rmse_out) {
    return guarded([&] {
        require(samples_path && p, "null argument");
        auto samples = pascalsim::costmodel::load_calibration_samples(samples_path);
        auto fit = pascalsim::costmodel::calibrate(samples);
        p->profile.decode_base = fit.decode_base;
        p->profile.decode_per_request = fit.decode_per_request;
        p->profile.decode_per_kv_token = fit.decode_per_kv_token;
        if (rmse_out) *rmse_out = fit.rmse;
    });
}

void pascal_profile_free(pascal_profile* p) { delete p; }

void pascal_run_config_init(pascal_run_config* cfg) {
    if (!cfg) return;
    pascalsim::engine::RunConfig d;
    cfg->instance_count = d.instance_count;
    cfg->gpu_capacity = d.gpu_capacity;
    cfg->capacity_fraction = d.capacity_fraction;
    cfg->token_quantum = d.token_quantum;
    cfg->demotion_threshold = d.demotion_threshold;
    cfg->policy = "pascal";
    cfg->no_migration = 0;
    cfg->non_adaptive = 0;
    cfg->target_tpot = d.target_tpot;
    cfg->ttfat_target = d.ttfat_target;
    cfg->qoe_threshold = d.qoe_threshold;
    cfg->pacer_slack_tokens = d.pacer_slack_tokens;
}

pascal_status pascal_run(const pascal_trace* t, const pascal_profile* p,
                         const pascal_run_config* cfg, const char* report_prefix,
                         const char* event_log_path) {
    return guarded([&] {
        require(t && p && cfg && report_prefix, "null argument");
        require(cfg->policy != nullptr, "policy is null");
        pascalsim::engine::RunConfig rc;
        rc.instance_count = cfg->instance_count;
        rc.gpu_capacity = cfg->gpu_capacity;
        rc.capacity_fraction = cfg->capacity_fraction;
        rc.token_quantum = cfg->token_quantum;
        rc.demotion_threshold = cfg->demotion_threshold;
        rc.policy = pascalsim::engine::parse_policy(cfg->policy);
        rc.ablations.no_migration = cfg->no_migration != 0;
        rc.ablations.non_adaptive = cfg->non_adaptive != 0;
        rc.target_tpot = cfg->target_tpot;
        rc.ttfat_target = cfg->ttfat_target;
        rc.qoe_threshold = cfg->qoe_threshold;
        rc.pacer_slack_tokens = cfg->pacer_slack_tokens;

        std::ofstream log;
        std::ostream* logp = nullptr;
        if (event_log_path) {
            log.open(event_log_path);
            if (!log) throw std::runtime_error(std::string("cannot open event log: ") +
                                               event_log_path);
            logp = &log;
        }
        auto records = pascalsim::engine::run(t->trace, rc, p->profile, logp);
        auto report = pascalsim::metrics::build_report(records, rc.target_tpot,
                                                       rc.qoe_threshold, rc.ttfat_target);
        report.config_echo = {
            {"policy", cfg->policy},
            {"instance_count", std::to_string(rc.instance_count)},
            {"gpu_capacity", std::to_string(
                pascalsim::engine::derive_capacity(t->trace, rc, p->profile))},
            {"token_quantum", std::to_string(rc.token_quantum)},
            {"demotion_threshold", std::to_string(rc.demotion_threshold)},
            {"no_migration", std::to_string(cfg->no_migration != 0)},
            {"non_adaptive", std::to_string(cfg->non_adaptive != 0)},
            {"requests", std::to_string(t->trace.size())},
        };
        pascalsim::metrics::write_report(report, report_prefix);
    });
}

pascal_status pascal_report_load(const char* prefix, pascal_report** out) {
    return guarded([&] {
        require(prefix && out, "null argument");
        *out = new pascal_report{pascalsim::metrics::load_report(prefix)};
    });
}

pascal_status pascal_report_summary_value(const pascal_report* r, const char* key,
                                          double* out) {
    return guarded([&] {
        require(r && key && out, "null argument");
        const RunReport& rep = r->report;
        std::string k = key;
        if (k == "ttft_mean") *out = rep.ttft_mean;
        else if (k == "ttft_p50") *out = rep.ttft_p50;
        else if (k == "ttft_p90") *out = rep.ttft_p90;
        else if (k == "ttft_p95") *out = rep.ttft_p95;
        else if (k == "ttft_p99") *out = rep.ttft_p99;
        else if (k == "slo_violation_rate") *out = rep.slo_violation_rate;
        else if (k == "ttfat_attainment") *out = rep.ttfat_attainment;
        else if (k == "throughput") *out = rep.throughput;
        else throw std::invalid_argument("unknown summary key: " + k);
    });
}

void pascal_report_free(pascal_report* r) { delete r; }

pascal_status pascal_compare(const char* const* prefixes, const char* const* names,
                             size_t count, const char* out_path) {
    return guarded([&] {
        require(prefixes && names && out_path, "null argument");
        require(count >= 2, "compare needs at least 2 reports");
        std::vector<RunReport> reports;
        std::vector<std::string> labels;
        for (size_t i = 0; i < count; ++i) {
            require(prefixes[i] && names[i], "null argument");
            reports.push_back(pascalsim::metrics::load_report(prefixes[i]));
            labels.emplace_back(names[i]);
        }
        std::string text = pascalsim::metrics::compare_reports(reports, labels);
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error(std::string("cannot open: ") + out_path);
        out << text;
    });
}

}  // extern "C"
