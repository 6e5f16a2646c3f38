#include "freqmarket/runner.hpp"

#include <CLI11.hpp>

#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fm = freqmarket;

namespace {

struct RunArgs {
    std::vector<std::string> scenarios;
    std::string out = "out";
    std::optional<double> dt;
    std::optional<double> sigma;
    bool strict = false;
    bool full = false;
};

/// Failures a --strict run reports.
std::vector<std::string> strict_failures(const fm::RunSummary& s) {
    std::vector<std::string> failures;
    if (s.min_bid < 0.0 || s.min_p_gen < 0.0) failures.emplace_back("negative bid or setpoint");
    for (std::size_t k = 0; k < s.segments.size(); ++k) {
        const auto& seg = s.segments[k];
        const std::string tag = "segment " + std::to_string(k + 1) + ": ";
        if (!seg.convergence.converged) failures.push_back(tag + "did not converge");
        if (seg.convergence.converged && !seg.efficiency.pass) failures.push_back(tag + "inefficient endpoint");
        if (!seg.lyapunov_descent) failures.push_back(tag + "Lyapunov increase");
    }
    return failures;
}

int run_command(const RunArgs& args) {
    std::vector<fm::Scenario> scenarios;
    for (const auto& name : args.scenarios) {
        fm::Scenario s = fm::resolve_scenario(name);
        if (args.dt) s.dt = *args.dt;
        if (args.sigma) s.gains.sigma = *args.sigma;
        if (s.name.empty()) s.name = std::filesystem::path(name).stem().string();
        scenarios.push_back(std::move(s));
    }
    std::vector<std::future<fm::RunSummary>> jobs;
    for (std::size_t k = 0; k < scenarios.size(); ++k) {
        fm::RunOptions options;
        options.out_dir = scenarios.size() == 1
                              ? std::filesystem::path(args.out)
                              : std::filesystem::path(args.out) / (std::to_string(k + 1) + "-" + scenarios[k].name);
        options.stop_on_convergence = !args.full;
        jobs.push_back(std::async(std::launch::async, [&scenarios, k, options] {
            return fm::run(scenarios[k], options);
        }));
    }
    int status = 0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        try {
            const fm::RunSummary summary = jobs[k].get();
            std::cout << fm::format_summary(summary) << '\n';
            if (args.strict) {
                for (const auto& f : strict_failures(summary)) {
                    std::cerr << summary.scenario << ": " << f << '\n';
                    status = 1;
                }
            }
        } catch (const std::exception& e) {
            std::cerr << scenarios[k].name << ": " << e.what() << '\n';
            status = 2;
        }
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-coupled electricity market simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Simulate scenarios and write trajectory and summary files");
    run->add_option("scenario", run_args.scenarios, "Built-in name or scenario file")->required();
    run->add_option("--out", run_args.out, "Output directory")->capture_default_str();
    run->add_option("--dt", run_args.dt, "Override the time step (s)");
    run->add_option("--sigma", run_args.sigma, "Override the frequency feedback gain");
    run->add_flag("--strict", run_args.strict, "Exit nonzero if any acceptance check fails");
    run->add_flag("--full", run_args.full, "Integrate to t_end even after convergence");

    std::string dispatch_scenario;
    auto* dispatch = app.add_subcommand("dispatch", "Solve economic dispatch for every scenario stage");
    dispatch->add_option("scenario", dispatch_scenario, "Built-in name or scenario file")->required();

    auto* scenarios = app.add_subcommand("scenarios", "List or dump built-in scenarios");
    scenarios->require_subcommand(1);
    auto* list = scenarios->add_subcommand("list", "List built-in scenario names");
    std::string dump_name;
    auto* dump = scenarios->add_subcommand("dump", "Print a built-in scenario as a scenario file");
    dump->add_option("name", dump_name)->required();

    std::string trajectory_path;
    std::string check_scenario;
    bool check_strict = false;
    auto* check = app.add_subcommand("check", "Re-analyse a saved trajectory");
    check->add_option("trajectory", trajectory_path, "trajectory.csv")->required()->check(CLI::ExistingFile);
    check->add_option("--scenario", check_scenario, "Scenario used to produce the trajectory");
    check->add_flag("--strict", check_strict, "Exit nonzero if a check fails");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_command(run_args);
        if (*dispatch) {
            std::cout << fm::format_dispatch(fm::dispatch_stages(fm::resolve_scenario(dispatch_scenario)));
            return 0;
        }
        if (*list) {
            for (const auto& name : fm::builtin_scenario_names()) std::cout << name << '\n';
            return 0;
        }
        if (*dump) {
            std::cout << fm::dump_scenario(fm::builtin_scenario(dump_name));
            return 0;
        }
        if (*check) {
            std::optional<fm::Scenario> scenario;
            if (!check_scenario.empty()) scenario = fm::resolve_scenario(check_scenario);
            const auto report = fm::check_trajectory(fm::read_trajectory(trajectory_path),
                                                     scenario ? &*scenario : nullptr);
            std::cout << report.describe();
            return check_strict && !report.pass() ? 1 : 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
