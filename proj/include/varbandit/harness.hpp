#pragma once

// Seeded, replicated experiment execution. Replications run in parallel and
// fold in replication order, so results do not depend on the worker count.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varbandit/bounds.hpp"
#include "varbandit/environments.hpp"
#include "varbandit/policies.hpp"

namespace varbandit {

enum class ExperimentKind { regret, bai, bound_sweep, case_study };

[[nodiscard]] std::string to_string(ExperimentKind kind);

/// Named BAI scenario: experiment id 1..6 evaluated at each K.
struct BaiSetupSpec {
    int experiment = 1;
    std::vector<std::size_t> arm_counts{16};
};

struct CaseStudyConfig {
    std::size_t stocks = 100;
    std::uint64_t shortlist_budget = 20000; // n1
    std::uint64_t trading_steps = 1000;     // n2
    std::size_t window = 90;                // tau
    std::size_t shortlist = 8;
    GbmRanges ranges;
    bool round_only = false;
    OptionTerms terms = OptionTerms::at_the_money_black_scholes();
};

/// One bound evaluated over the cartesian product of its parameter grids.
struct BoundSweepEntry {
    std::string name;
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    std::vector<double> gaps;
};

struct OutputConfig {
    std::size_t trace_points = 100;
    bool full_trace = false;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::regret;
    std::vector<DistributionSpec> arms;
    std::optional<BaiSetupSpec> setup;
    std::vector<PolicyDescriptor> policies;
    std::uint64_t horizon = 0;
    std::uint64_t replications = 1;
    std::uint64_t base_seed = 0;
    std::size_t parallelism = 1;
    OutputConfig output;
    CaseStudyConfig case_study;
    std::vector<BoundSweepEntry> bounds;

    /// Throws ConfigError on the first violated invariant.
    void validate() const;
};

/// One policy run on one replication.
struct RunRecord {
    std::uint64_t replication_id = 0;
    std::vector<std::uint32_t> actions;
    std::vector<std::uint64_t> pull_counts;
    std::vector<double> regret_trace; // R(t) for t = 1..n
    std::optional<std::size_t> recommendation;
    bool correct = false;
};

/// Per-arm reward streams for one replication. The k-th pull of arm i always
/// returns the same value, whichever policy asks.
class RewardTape {
public:
    RewardTape(const std::vector<DistributionSpec>& arms, std::uint64_t env_seed);
    double pull(std::size_t arm);

private:
    const std::vector<DistributionSpec>* arms_;
    std::vector<Rng> streams_;
};

/// Runs `policy` for `horizon` steps (or until an identification policy
/// finishes). Regret traces use gaps from true variances when `track_regret`.
[[nodiscard]] RunRecord run_policy(Policy& policy, const std::vector<DistributionSpec>& arms, std::uint64_t horizon,
                                   std::uint64_t env_seed, std::uint64_t policy_seed, bool track_regret,
                                   bool keep_actions = false);

struct RegretCurve {
    std::string label;
    std::vector<double> mean; // index t-1
    std::vector<double> standard_error;
    std::vector<double> mean_pulls; // per arm
    std::vector<double> final_regret; // per replication
};

struct RegretResult {
    std::uint64_t horizon = 0;
    std::uint64_t replications = 0;
    std::vector<RegretCurve> curves;
};

/// Throws ConfigError when an arm lacks a known variance or the policy list
/// contains identification policies.
[[nodiscard]] RegretResult run_regret_experiment(const ExperimentConfig& cfg);

struct ErrorRate {
    std::string setup;
    std::string policy;
    std::size_t arm_count = 0;
    std::uint64_t budget = 0;
    double error_rate = 0.0;
    double standard_error = 0.0;
    std::uint64_t replications = 0;
    std::vector<unsigned char> correct; // per replication
};

/// Arms for experiment 1..6. Setup 5 draws its suboptimal arms from `rng`.
/// Throws InputError for a suboptimal target variance above 1/12.
[[nodiscard]] std::vector<DistributionSpec> build_bai_setup(int experiment, std::size_t arm_count, Rng* rng = nullptr);
/// Budget used for a setup: n, or 125 K for setup 6.
[[nodiscard]] std::uint64_t bai_budget(int experiment, std::size_t arm_count, std::uint64_t n);

/// Throws InfeasibleBudget before running anything if a SHVV schedule fails.
[[nodiscard]] std::vector<ErrorRate> run_bai_experiment(const ExperimentConfig& cfg);

struct CaseStudyReport {
    std::uint64_t market_id = 0;
    std::vector<std::size_t> top_stocks;
    std::vector<double> rewards;
    double total_reward = 0.0;
    double total_premium = 0.0;
    std::vector<double> pipeline_profit; // cumulative, per trading step
    std::vector<double> baseline_profit; // UCB1 over all stocks
    double baseline_premium = 0.0;
    std::uint64_t shortlist_pulls = 0;
};

/// True when the report has `shortlist` distinct stock ids, matching
/// rewards, and totals consistent with them.
[[nodiscard]] bool report_matches_schema(const CaseStudyReport& report, std::size_t shortlist, std::size_t stocks);

/// One market: SHVV shortlist on daily returns, then UCB-VV trading calls on
/// the shortlist, alongside a UCB1 mean-return baseline over every stock.
[[nodiscard]] CaseStudyReport run_case_study_market(const CaseStudyConfig& cfg, std::uint64_t env_seed,
                                                    std::uint64_t market_id = 0);
[[nodiscard]] std::vector<CaseStudyReport> run_case_study(const ExperimentConfig& cfg);

[[nodiscard]] std::vector<BoundRow> run_bound_sweep(const ExperimentConfig& cfg);

} // namespace varbandit
