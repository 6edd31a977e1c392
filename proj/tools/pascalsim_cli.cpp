// pascalsim: trace generation, simulation runs, sweeps and report comparison
// on top of the C library interface.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pascal.h"

namespace {

[[noreturn]] void die(const std::string& what) {
    std::cerr << "pascalsim: " << what;
    const char* detail = pascal_last_error();
    if (detail && *detail) std::cerr << ": " << detail;
    std::cerr << '\n';
    std::exit(1);
}

void check(pascal_status st, const std::string& what) {
    if (st != PASCAL_OK) die(what);
}

struct Preset {
    const char* prompt;
    const char* reasoning;
    const char* answering;
    bool kv_preloaded;
};

// Built-in length mixes. The two characterization presets pin prompt 128 and a
// 128-2048 sweep; chat skews reasoning short with a small long tail;
// reasoning-heavy pushes most KV weight into the reasoning phase.
const std::map<std::string, Preset> kPresets = {
    {"reasoning-char", {"constant:128", "uniform:128:2048", "constant:1", false}},
    {"answering-char", {"constant:128", "constant:0", "uniform:128:2048", true}},
    {"chat",
     {"uniform:64:512",
      "hist:256=0.35,512=0.30,768=0.20,1024=0.10,1536=0.04,2048=0.01",
      "uniform:256:1024", false}},
    {"reasoning-heavy", {"uniform:64:512", "uniform:2048:8192", "uniform:128:512", false}},
};

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) die("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

struct RunOptions {
    std::string trace_path;
    std::string config_path;
    std::string profile_path;
    std::string policy = "pascal";
    int instances = 8;
    long capacity = 0;
    double capacity_fraction = 0.0;
    long quantum = 500;
    long demotion_threshold = 5000;
    bool no_migration = false;
    bool non_adaptive = false;
    double target_tpot = 0.1;
    double ttfat_target = 0.25;
    double qoe_threshold = 0.95;
    long pacer_slack = 0;
    std::string out_prefix = "report";
    std::string events_path;
};

void add_run_flags(CLI::App* cmd, RunOptions& o, bool require_trace) {
    auto* t = cmd->add_option("--trace", o.trace_path, "input trace (pascal-trace-v1)");
    if (require_trace) t->required();
    cmd->add_option("--config", o.config_path, "key=value config file (flags override)");
    cmd->add_option("--profile", o.profile_path, "latency profile (pascal-profile-v1)");
    cmd->add_option("--policy", o.policy, "fcfs | rr | oracle | pascal");
    cmd->add_option("--instances", o.instances, "instance count");
    cmd->add_option("--capacity", o.capacity, "GPU KV capacity per instance (tokens)");
    cmd->add_option("--capacity-fraction", o.capacity_fraction,
                    "capacity as a fraction of the trace's peak KV demand "
                    "(unconstrained reference run), split across instances");
    cmd->add_option("--quantum", o.quantum, "token quantum");
    cmd->add_option("--demotion-threshold", o.demotion_threshold, "KV demotion threshold");
    cmd->add_flag("--no-migration", o.no_migration, "ablation: never migrate");
    cmd->add_flag("--non-adaptive", o.non_adaptive, "ablation: always follow placement");
    cmd->add_option("--target-tpot", o.target_tpot, "pacer target seconds/token");
    cmd->add_option("--ttfat-target", o.ttfat_target, "TTFAT target seconds");
    cmd->add_option("--qoe-threshold", o.qoe_threshold, "SLO QoE threshold");
    cmd->add_option("--pacer-slack", o.pacer_slack, "pacer health slack (tokens)");
}

// Flag-over-file resolution: file values apply only where the flag was not
// supplied on the command line.
void apply_config_file(const CLI::App* cmd, RunOptions& o) {
    if (o.config_path.empty()) return;
    auto kv = load_config_file(o.config_path);
    auto want = [&](const char* flag, const char* key) {
        return kv.count(key) && cmd->count(flag) == 0;
    };
    if (want("--policy", "policy")) o.policy = kv["policy"];
    if (want("--instances", "instance_count")) o.instances = std::stoi(kv["instance_count"]);
    if (want("--capacity", "gpu_capacity")) o.capacity = std::stol(kv["gpu_capacity"]);
    if (want("--capacity-fraction", "capacity_fraction"))
        o.capacity_fraction = std::stod(kv["capacity_fraction"]);
    if (want("--quantum", "token_quantum")) o.quantum = std::stol(kv["token_quantum"]);
    if (want("--demotion-threshold", "demotion_threshold"))
        o.demotion_threshold = std::stol(kv["demotion_threshold"]);
    if (want("--no-migration", "no_migration")) o.no_migration = kv["no_migration"] == "1";
    if (want("--non-adaptive", "non_adaptive")) o.non_adaptive = kv["non_adaptive"] == "1";
    if (want("--target-tpot", "target_tpot")) o.target_tpot = std::stod(kv["target_tpot"]);
    if (want("--ttfat-target", "ttfat_target")) o.ttfat_target = std::stod(kv["ttfat_target"]);
    if (want("--qoe-threshold", "qoe_threshold"))
        o.qoe_threshold = std::stod(kv["qoe_threshold"]);
    if (want("--pacer-slack", "pacer_slack_tokens"))
        o.pacer_slack = std::stol(kv["pacer_slack_tokens"]);
    if (want("--profile", "profile")) o.profile_path = kv["profile"];
}

pascal_profile* open_profile(const std::string& path) {
    pascal_profile* p = nullptr;
    if (path.empty()) check(pascal_profile_default(&p), "profile");
    else check(pascal_profile_load(path.c_str(), &p), "profile");
    return p;
}

void run_once(const RunOptions& o, pascal_trace* trace, pascal_profile* profile,
              const std::string& prefix, const std::string& events) {
    pascal_run_config cfg;
    pascal_run_config_init(&cfg);
    cfg.instance_count = o.instances;
    cfg.gpu_capacity = o.capacity;
    cfg.capacity_fraction = o.capacity_fraction;
    cfg.token_quantum = o.quantum;
    cfg.demotion_threshold = o.demotion_threshold;
    cfg.policy = o.policy.c_str();
    cfg.no_migration = o.no_migration ? 1 : 0;
    cfg.non_adaptive = o.non_adaptive ? 1 : 0;
    cfg.target_tpot = o.target_tpot;
    cfg.ttfat_target = o.ttfat_target;
    cfg.qoe_threshold = o.qoe_threshold;
    cfg.pacer_slack_tokens = o.pacer_slack;
    check(pascal_run(trace, profile, &cfg, prefix.c_str(),
                     events.empty() ? nullptr : events.c_str()),
          "run failed");
}

int cmd_gen(const std::string& out, long count, double rate, std::uint64_t seed,
            const std::string& preset, std::string prompt_dist, std::string reasoning_dist,
            std::string answering_dist, bool kv_preloaded, const std::string& mix_trace,
            double mix_fraction) {
    if (!preset.empty()) {
        if (preset == "mixed") {
            pascal_trace* base = nullptr;
            pascal_trace* heavy = nullptr;
            const Preset& chat = kPresets.at("chat");
            const Preset& rh = kPresets.at("reasoning-heavy");
            check(pascal_trace_generate(count, rate, chat.prompt, chat.reasoning,
                                        chat.answering, seed, 0, &base),
                  "gen failed");
            check(pascal_trace_generate(count, rate, rh.prompt, rh.reasoning, rh.answering,
                                        seed + 1, 0, &heavy),
                  "gen failed");
            pascal_trace* mixed = nullptr;
            check(pascal_trace_mix(base, heavy, mix_fraction, seed + 2, &mixed), "mix failed");
            check(pascal_trace_save(mixed, out.c_str()), "save failed");
            std::cout << "wrote " << pascal_trace_size(mixed) << " requests to " << out << '\n';
            pascal_trace_free(base);
            pascal_trace_free(heavy);
            pascal_trace_free(mixed);
            return 0;
        }
        auto it = kPresets.find(preset);
        if (it == kPresets.end()) die("unknown preset: " + preset);
        if (prompt_dist.empty()) prompt_dist = it->second.prompt;
        if (reasoning_dist.empty()) reasoning_dist = it->second.reasoning;
        if (answering_dist.empty()) answering_dist = it->second.answering;
        kv_preloaded = kv_preloaded || it->second.kv_preloaded;
    }
    if (prompt_dist.empty()) prompt_dist = "uniform:64:512";
    if (reasoning_dist.empty()) reasoning_dist = "uniform:128:2048";
    if (answering_dist.empty()) answering_dist = "uniform:128:1024";

    pascal_trace* trace = nullptr;
    check(pascal_trace_generate(count, rate, prompt_dist.c_str(), reasoning_dist.c_str(),
                                answering_dist.c_str(), seed, kv_preloaded ? 1 : 0, &trace),
          "gen failed");
    if (!mix_trace.empty()) {
        pascal_trace* repl = nullptr;
        check(pascal_trace_load(mix_trace.c_str(), &repl), "load failed");
        pascal_trace* mixed = nullptr;
        check(pascal_trace_mix(trace, repl, mix_fraction, seed + 1, &mixed), "mix failed");
        pascal_trace_free(trace);
        pascal_trace_free(repl);
        trace = mixed;
    }
    check(pascal_trace_save(trace, out.c_str()), "save failed");
    std::cout << "wrote " << pascal_trace_size(trace) << " requests to " << out << '\n';
    pascal_trace_free(trace);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic simulator for phase-aware LLM serving policies"};
    app.require_subcommand(1);

    // --- gen ---
    auto* gen = app.add_subcommand("gen", "generate a request trace");
    std::string gen_out = "trace.csv", gen_preset, gen_prompt, gen_reasoning, gen_answering;
    std::string gen_mix_trace;
    long gen_count = 500;
    double gen_rate = 12.0, gen_mix_fraction = 0.5;
    std::uint64_t gen_seed = 0;
    bool gen_preloaded = false;
    gen->add_option("--out", gen_out, "output trace path");
    gen->add_option("--count", gen_count, "request count");
    gen->add_option("--rate", gen_rate, "Poisson arrival rate (req/s)");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--preset", gen_preset,
                    "reasoning-char | answering-char | chat | reasoning-heavy | mixed");
    gen->add_option("--prompt-dist", gen_prompt, "prompt length distribution");
    gen->add_option("--reasoning-dist", gen_reasoning, "reasoning length distribution");
    gen->add_option("--answering-dist", gen_answering, "answering length distribution");
    gen->add_flag("--kv-preloaded", gen_preloaded, "mark requests as KV-preloaded");
    gen->add_option("--mix-trace", gen_mix_trace, "replacement trace for mixing");
    gen->add_option("--mix-fraction", gen_mix_fraction, "fraction of requests replaced");

    // --- run ---
    auto* run = app.add_subcommand("run", "simulate one policy over a trace");
    RunOptions ro;
    add_run_flags(run, ro, true);
    run->add_option("--out", ro.out_prefix, "report prefix");
    run->add_option("--events", ro.events_path, "event log path (pascal-events-v1)");

    // --- sweep ---
    auto* sweep = app.add_subcommand("sweep", "run a grid of policies and capacities");
    RunOptions so;
    add_run_flags(sweep, so, true);
    std::string sweep_out_dir = "sweep";
    std::vector<std::string> sweep_policies = {"fcfs", "rr", "oracle", "pascal"};
    std::vector<double> sweep_fractions;
    sweep->add_option("--out-dir", sweep_out_dir, "output directory");
    sweep->add_option("--policies", sweep_policies, "policies to sweep");
    sweep->add_option("--capacity-fractions", sweep_fractions, "capacity fractions to sweep");

    // --- compare ---
    auto* cmp = app.add_subcommand("compare", "align reports from the same trace");
    std::vector<std::string> cmp_reports, cmp_names;
    std::string cmp_out = "compare.txt";
    cmp->add_option("--reports", cmp_reports, "report prefixes (first is baseline)")
        ->required()
        ->expected(-2);
    cmp->add_option("--names", cmp_names, "labels, one per report");
    cmp->add_option("--out", cmp_out, "comparison output path");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        return cmd_gen(gen_out, gen_count, gen_rate, gen_seed, gen_preset, gen_prompt,
                       gen_reasoning, gen_answering, gen_preloaded, gen_mix_trace,
                       gen_mix_fraction);
    }

    if (run->parsed()) {
        apply_config_file(run, ro);
        pascal_trace* trace = nullptr;
        check(pascal_trace_load(ro.trace_path.c_str(), &trace), "load failed");
        pascal_profile* profile = open_profile(ro.profile_path);
        run_once(ro, trace, profile, ro.out_prefix, ro.events_path);
        std::cout << "wrote " << ro.out_prefix << ".{requests.csv,summary.txt,bins.csv}\n";
        pascal_profile_free(profile);
        pascal_trace_free(trace);
        return 0;
    }

    if (sweep->parsed()) {
        apply_config_file(sweep, so);
        if (sweep_fractions.empty())
            sweep_fractions.push_back(so.capacity_fraction > 0 ? so.capacity_fraction : 0.5);
        std::error_code ignored;
        std::filesystem::create_directories(sweep_out_dir, ignored);
        pascal_trace* trace = nullptr;
        check(pascal_trace_load(so.trace_path.c_str(), &trace), "load failed");
        pascal_profile* profile = open_profile(so.profile_path);

        std::ostringstream index;
        index << "policy,capacity_fraction,slo_violation_rate,ttft_p50,ttft_p99,"
                 "ttfat_attainment,throughput\n";
        for (const std::string& policy : sweep_policies) {
            for (double f : sweep_fractions) {
                RunOptions point = so;
                point.policy = policy;
                point.capacity_fraction = f;
                char tag[64];
                std::snprintf(tag, sizeof(tag), "%s_f%.2f", policy.c_str(), f);
                std::string prefix = sweep_out_dir + "/" + tag;
                run_once(point, trace, profile, prefix, "");
                pascal_report* rep = nullptr;
                check(pascal_report_load(prefix.c_str(), &rep), "report load failed");
                double slo = 0, p50 = 0, p99 = 0, att = 0, tput = 0;
                pascal_report_summary_value(rep, "slo_violation_rate", &slo);
                pascal_report_summary_value(rep, "ttft_p50", &p50);
                pascal_report_summary_value(rep, "ttft_p99", &p99);
                pascal_report_summary_value(rep, "ttfat_attainment", &att);
                pascal_report_summary_value(rep, "throughput", &tput);
                pascal_report_free(rep);
                char row[256];
                std::snprintf(row, sizeof(row), "%s,%.2f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                              policy.c_str(), f, slo, p50, p99, att, tput);
                index << row;
                std::cout << "done: " << prefix << '\n';
            }
        }
        std::ofstream idx(sweep_out_dir + "/sweep.csv");
        idx << index.str();
        pascal_profile_free(profile);
        pascal_trace_free(trace);
        return 0;
    }

    if (cmp->parsed()) {
        if (cmp_names.empty()) cmp_names = cmp_reports;
        if (cmp_names.size() != cmp_reports.size()) die("--names count must match --reports");
        std::vector<const char*> prefixes, names;
        for (auto& s : cmp_reports) prefixes.push_back(s.c_str());
        for (auto& s : cmp_names) names.push_back(s.c_str());
        check(pascal_compare(prefixes.data(), names.data(), prefixes.size(), cmp_out.c_str()),
              "compare failed");
        std::ifstream in(cmp_out);
        std::cout << in.rdbuf();
        return 0;
    }
    return 0;
}
