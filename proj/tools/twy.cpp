#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "twy/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"twisted-Yangian open chain: exact identity checks and Bethe solves"};
    app.require_subcommand(1);
    auto* run = app.add_subcommand("run", "run the tasks of a JSON config and write a report");
    std::string config, mode, reading, report;
    uint64_t seed = 0;
    bool regen = false;
    run->add_option("config", config, "config file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "sampling seed");
    auto* mode_opt = run->add_option("--mode", mode, "exact or float")->check(CLI::IsMember({"exact", "float"}));
    auto* read_opt = run->add_option("--reading", reading, "amended or strict")->check(CLI::IsMember({"amended", "strict"}));
    auto* rep_opt = run->add_option("--report", report, "report path (default: stdout)");
    run->add_flag("--regen-golden", regen, "rewrite golden files instead of comparing");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        twy::RunConfig cfg = twy::load_config(config);
        twy::RunFlags f;
        if (*seed_opt) f.seed = seed;
        if (*mode_opt) f.mode = twy::parse_mode(mode);
        if (*read_opt) f.reading = twy::parse_reading(reading);
        if (*rep_opt) f.report = report;
        f.regen_golden = regen;
        twy::apply_flags(cfg, f);
        twy::RunOutcome out = twy::run_config(cfg, regen);
        std::string text = out.report.dump(2) + "\n";
        if (cfg.report.empty()) {
            std::cout << text;
        } else {
            std::ofstream o(cfg.report);
            if (!o) {
                std::cerr << "error: cannot write report '" << cfg.report << "'\n";
                return 2;
            }
            o << text;
        }
        for (auto& r : out.report["results"])
            std::cerr << "task " << r["index"] << " " << r["kind"].get<std::string>() << ": " << r["status"].get<std::string>()
                      << "\n";
        return out.pass ? 0 : 1;
    } catch (const twy::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}
