// varbandit command-line entry point.
//
// Exit codes: 0 success, 1 unexpected failure, 2 bad config or arguments,
// 3 infeasible budget, 4 I/O failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "varbandit/bounds.hpp"
#include "varbandit/config.hpp"
#include "varbandit/errors.hpp"
#include "varbandit/report.hpp"

namespace {

namespace fs = std::filesystem;
using namespace varbandit;

constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitIo = 4;

struct ExperimentArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir = "results";
    std::optional<std::size_t> jobs;
};

void add_experiment_options(CLI::App* sub, ExperimentArgs& args, bool with_output) {
    sub->add_option("-c,--config", args.config, "Experiment config (JSON)")->required();
    sub->add_option("-s,--set", args.overrides, "Override key=value (dotted keys), repeatable");
    if (with_output) {
        sub->add_option("-o,--out", args.out_dir, "Output directory")->capture_default_str();
        sub->add_option("-j,--jobs", args.jobs, "Parallel workers (overrides config and environment)");
    }
}

struct Loaded {
    nlohmann::json resolved;
    ExperimentConfig cfg;
};

Loaded load(const ExperimentArgs& args, std::optional<ExperimentKind> expected) {
    auto doc = load_config_json(args.config);
    apply_overrides(doc, args.overrides);
    if (args.jobs) {
        doc["parallelism"] = *args.jobs;
    }
    Loaded out{doc, parse_config(doc)};
    if (expected && out.cfg.kind != *expected) {
        throw ConfigError(fmt::format("kind: config is '{}' but the subcommand runs '{}'", to_string(out.cfg.kind),
                                      to_string(*expected)));
    }
    return out;
}

int run_experiment(const ExperimentArgs& args, ExperimentKind kind) {
    const auto loaded = load(args, kind);
    std::cerr << "resolved config (hash " << config_hash(loaded.resolved) << "):\n"
              << loaded.resolved.dump(2) << "\n";
    const auto files = run_and_write(loaded.cfg, loaded.resolved, args.out_dir);
    for (const auto& f : files) {
        std::cout << (fs::path(args.out_dir) / f).string() << "\n";
    }
    return 0;
}

struct BoundArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir = "results";
    std::string name;
    std::vector<double> gaps;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variance-aware multi-armed bandit experiments"};
    app.require_subcommand(1);

    ExperimentArgs regret_args;
    ExperimentArgs bai_args;
    ExperimentArgs case_args;
    ExperimentArgs validate_args;
    auto* regret = app.add_subcommand("regret", "Run a regret experiment");
    add_experiment_options(regret, regret_args, true);
    auto* bai = app.add_subcommand("bai", "Run a fixed-budget best-arm identification experiment");
    add_experiment_options(bai, bai_args, true);
    auto* cases = app.add_subcommand("casestudy", "Run the GBM option-trading case study");
    add_experiment_options(cases, case_args, true);
    auto* validate = app.add_subcommand("validate-config", "Parse and validate a config without running it");
    add_experiment_options(validate, validate_args, false);

    BoundArgs bound_args;
    auto* bounds = app.add_subcommand("bounds", "Evaluate one bound, or a bound_sweep config");
    bounds->add_option("--config", bound_args.config, "bound_sweep config (JSON)");
    bounds->add_option("-s,--set", bound_args.overrides, "Override key=value, repeatable");
    bounds->add_option("-o,--out", bound_args.out_dir, "Output directory for sweeps")->capture_default_str();
    bounds->add_option("--name", bound_args.name, "Bound name, e.g. shvv_error");
    bounds->add_option("--gaps", bound_args.gaps, "Per-arm gaps (one zero for the best arm)")->delimiter(',');
    std::map<std::string, double> numeric;
    for (const char* key : {"K", "n", "r", "gap", "h2", "eps", "l", "u", "v2", "C", "c", "eta", "form", "o1"}) {
        bounds->add_option_function<double>(
            fmt::format("--{}", key), [&numeric, key](double v) { numeric[key] = v; }, fmt::format("Parameter {}", key));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (regret->parsed()) {
            return run_experiment(regret_args, ExperimentKind::regret);
        }
        if (bai->parsed()) {
            return run_experiment(bai_args, ExperimentKind::bai);
        }
        if (cases->parsed()) {
            return run_experiment(case_args, ExperimentKind::case_study);
        }
        if (validate->parsed()) {
            const auto loaded = load(validate_args, std::nullopt);
            std::cout << "ok " << to_string(loaded.cfg.kind) << " " << config_hash(loaded.resolved) << "\n";
            return 0;
        }
        if (bounds->parsed()) {
            if (!bound_args.config.empty()) {
                ExperimentArgs a{bound_args.config, bound_args.overrides, bound_args.out_dir, std::nullopt};
                return run_experiment(a, ExperimentKind::bound_sweep);
            }
            if (bound_args.name.empty()) {
                throw ConfigError("bounds: pass --name or --config");
            }
            std::vector<std::pair<std::string, double>> params(numeric.begin(), numeric.end());
            std::ostringstream csv;
            write_bound_csv(csv, {evaluate_bound(bound_args.name, params, bound_args.gaps)});
            std::cout << csv.str();
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InfeasibleBudget& e) {
        std::cerr << "infeasible budget: " << e.what() << "\n";
        return kExitBudget;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
