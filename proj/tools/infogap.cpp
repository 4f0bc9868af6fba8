// Command-line front end: verify / run / report.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or config error.
// Thread count resolves as --threads flag, else INFOGAP_THREADS, else 1.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infogap/error.hpp"
#include "infogap/runner.hpp"

namespace {

std::size_t resolve_threads(std::optional<std::size_t> flag_value) {
    if (flag_value) return *flag_value == 0 ? 1 : *flag_value;
    if (const char* env = std::getenv("INFOGAP_THREADS")) {
        try {
            std::size_t n = std::stoul(env);
            return n == 0 ? 1 : n;
        } catch (const std::exception&) {
            throw infogap::ConfigError(std::string("INFOGAP_THREADS is not a number: ") + env);
        }
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"infogap: information, curvature, and escape-time diagnostics for imitation policies"};
    app.require_subcommand(1);

    std::optional<std::size_t> threads_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::string> out_flag;
    bool force = false;
    app.add_option("--threads", threads_flag, "worker threads (default: INFOGAP_THREADS or 1)");
    app.add_option("--seed", seed_flag, "override the config's seed");
    app.add_option("--out", out_flag, "override the output directory");
    app.add_flag("--force", force, "overwrite existing output files");

    auto* verify_cmd = app.add_subcommand("verify", "run the built-in correctness checks");
    verify_cmd->fallthrough();
    std::string fault;
    verify_cmd->add_option("--inject-fault", fault, "internal: perturb a named check to prove it can fail")
        ->group("");  // hidden

    auto* run_cmd = app.add_subcommand("run", "execute the experiment described by a JSON config");
    run_cmd->fallthrough();
    std::string config_path;
    run_cmd->add_option("config", config_path, "path to the JSON config")->required();

    auto* report_cmd = app.add_subcommand("report", "aggregate a results directory into summary.json");
    report_cmd->fallthrough();
    std::string report_dir;
    report_cmd->add_option("dir", report_dir, "results directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        infogap::RunOptions opt;
        opt.threads = resolve_threads(threads_flag);
        opt.force = force;
        opt.seed_override = seed_flag;
        opt.out_override = out_flag;
        if (verify_cmd->parsed()) {
            std::string rendered;
            int rc = infogap::cmd_verify(out_flag.value_or("."), force, fault, rendered);
            std::cout << rendered;
            return rc;
        }
        if (run_cmd->parsed()) {
            return infogap::cmd_run(config_path, opt);
        }
        std::string rendered;
        int rc = infogap::cmd_report(report_dir, opt, rendered);
        std::cout << rendered;
        return rc;
    } catch (const infogap::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const infogap::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
