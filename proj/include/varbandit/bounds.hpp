#pragma once

// Closed-form concentration, regret and error-probability bounds, plus a Monte
// Carlo tail-probability oracle to check them against.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "varbandit/environments.hpp"

namespace varbandit {

/// Probability bound after clamping to [0, 1]. `vacuous` is set when the raw
/// formula is >= 1 or its preconditions on the budget fail.
struct BoundValue {
    double value = 1.0;
    bool vacuous = true;
};

/// Gaps to the best arm (variance gaps for UCB-VV/SHVV, Sharpe gaps for
/// UCB-Sharpe). Exactly one gap is zero.
struct ProblemInstance {
    std::vector<double> gaps;
    std::optional<std::pair<double, double>> support;
    std::optional<double> subgauss_v2;
    std::uint64_t n = 0;

    [[nodiscard]] std::size_t num_arms() const noexcept { return gaps.size(); }
    /// Throws InputError on negative/non-finite gaps, no zero gap, or l >= u.
    void validate() const;

    /// Gaps max(v) - v_i from per-arm values (variances or Sharpe ratios).
    [[nodiscard]] static ProblemInstance from_values(const std::vector<double>& values, std::uint64_t n);
};

/// min(1, 2 exp(-2 n eps^2 / (u - l)^2)).
[[nodiscard]] BoundValue variance_concentration_bound(std::uint64_t n, double eps, double low, double high);

/// 8 sum ln(n)/delta_i + (1 + pi^2/3) sum delta_i over suboptimal arms.
/// Throws UnboundedBound if more than one gap is zero.
[[nodiscard]] double ucb_vv_regret_bound(const ProblemInstance& instance);

/// max_i i / delta_(i)^2 over suboptimal gaps sorted ascending, ranks from 2.
/// +inf when a suboptimal gap is zero.
[[nodiscard]] double complexity_h2(const ProblemInstance& instance);

/// Probability the best arm is dropped in round r, with i_r = K / 2^(r+2).
[[nodiscard]] BoundValue shvv_round_error_bound(std::size_t num_arms, std::uint64_t n, std::size_t round,
                                                double gap_at_ir);

/// 3 log2(K) exp(-(n - K log2 K)^2 / (8 n log2(K) H2)), clamped.
[[nodiscard]] BoundValue shvv_error_bound(std::size_t num_arms, std::uint64_t n, double h2);
[[nodiscard]] BoundValue shvv_error_bound(const ProblemInstance& instance);

/// min(1, 4 exp(-C n min(eps^2/v2^2, eps/v2))).
[[nodiscard]] BoundValue subgauss_variance_bound(std::uint64_t n, double eps, double v2, double C = 0.125);

/// min(1, 4 exp(-c n min(eta^2, eta))).
[[nodiscard]] BoundValue sharpe_concentration_bound(std::uint64_t n, double eta, double c = 0.125);

enum class SharpeBoundForm { statement, proof };

struct SharpeRegretBound {
    double leading = 0.0;       // log-n term
    double constant_term = 0.0; // O(1) part, per suboptimal arm times count
    [[nodiscard]] double total() const noexcept { return leading + constant_term; }
};

/// Statement form: sum 9 ln(n) / (c Delta_i). Proof form: sum Delta_i * 9
/// ln(4 n^2) / (c Delta_i^2). Throws UnboundedBound for a second zero gap.
[[nodiscard]] SharpeRegretBound ucb_sharpe_regret_bound(const ProblemInstance& instance, double c,
                                                        SharpeBoundForm form, double o1_constant = 0.0);

enum class TailStatistic { variance, sharpe };

struct TailEstimate {
    double probability = 0.0;
    double standard_error = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t replications = 0;
};

/// Fraction of replications where the n-sample unbiased variance (or Sharpe
/// ratio mean/variance) misses its true value by more than eps. Replication r
/// draws from its own seeded stream, so the result does not depend on
/// `threads`. Throws InputError for replications < 1000 or n < 2.
[[nodiscard]] TailEstimate empirical_tail_probability(const DistributionSpec& spec, std::uint64_t n, double eps,
                                                      std::uint64_t replications, std::uint64_t seed,
                                                      TailStatistic statistic = TailStatistic::variance,
                                                      std::size_t threads = 1);

/// One evaluated bound for export.
struct BoundRow {
    std::string name;
    std::vector<std::pair<std::string, double>> params;
    double value = 0.0;
    bool vacuous = false;
};

/// Evaluates a bound by name from a parameter map. Names: variance_concentration,
/// ucb_vv_regret, complexity_h2, shvv_round_error, shvv_error, subgauss_variance,
/// sharpe_concentration, ucb_sharpe_regret. Throws InputError on unknown names
/// or missing parameters.
[[nodiscard]] BoundRow evaluate_bound(const std::string& name,
                                      const std::vector<std::pair<std::string, double>>& params,
                                      const std::vector<double>& gaps = {});

/// CSV: bound_name,params,value,vacuous_flag with params as k=v;k=v.
void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows);

} // namespace varbandit
