#pragma once

// Sequential decision rules behind one Policy interface: UCB-VV (variance
// regret), SHVV (fixed-budget highest-variance identification), UCB-Sharpe,
// and the comparison baselines. Ties always break toward the lowest arm index.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varbandit/environments.hpp"
#include "varbandit/stats.hpp"

namespace varbandit {

/// What a policy sees before choosing: the 1-based step about to be played and
/// the per-arm statistics of everything observed so far.
struct PolicyContext {
    std::uint64_t t = 1;
    std::span<const RunningStats> per_arm;
    std::uint64_t horizon = 0;

    [[nodiscard]] std::size_t num_arms() const noexcept { return per_arm.size(); }
};

/// Lowest index attaining the maximum.
[[nodiscard]] std::size_t argmax_lowest(std::span<const double> values);

// --- UCB-VV ----------------------------------------------------------------

/// sqrt(2 ln t / count); +inf for count 0.
[[nodiscard]] double ucb_vv_bonus(std::uint64_t count, double t);
/// V_i + sqrt(2 ln t / s_i) with the biased variance; +inf for an unpulled arm.
[[nodiscard]] double ucb_vv_index(const RunningStats& stats, double t);

/// Round-robin pilot length. A fraction of 0 means the default single pass
/// (S_P = K/n).
struct PilotPlan {
    double fraction = 0.0;

    [[nodiscard]] std::uint64_t steps(std::size_t num_arms, std::uint64_t horizon) const;
};

[[nodiscard]] std::size_t ucb_vv_select(const PolicyContext& ctx, const PilotPlan& pilot);

// --- SHVV ------------------------------------------------------------------

struct ShvvRound {
    std::size_t round;
    std::size_t active_count;
    std::uint64_t pulls_per_arm; // t_r
};

/// ceil(log2 K) for K >= 1.
[[nodiscard]] std::size_t ceil_log2(std::size_t k);

/// Halving schedule with t_r = floor(n / (|A_r| ceil(log2 K))). Halving keeps
/// max(stop_at, ceil(|A_r|/2)) arms and stops once at most `stop_at` remain.
/// Throws InfeasibleBudget when n < K ceil(log2 K).
[[nodiscard]] std::vector<ShvvRound> shvv_schedule(std::size_t num_arms, std::uint64_t budget,
                                                   std::size_t stop_at = 1);

/// Sequential-halving state. Pull requests cycle over the surviving arms; when
/// every survivor has t_r pulls for the round, the arms with the largest
/// unbiased variance survive. Elimination uses all samples gathered so far, or
/// only the current round's samples when `round_only` is set.
class ShvvState {
public:
    ShvvState(std::size_t num_arms, std::uint64_t budget, bool round_only = false, std::size_t stop_at = 1);

    /// Next arm to pull. Throws std::logic_error once finished.
    [[nodiscard]] std::size_t next_arm() const;
    void record(std::size_t arm, double reward);

    [[nodiscard]] bool finished() const noexcept { return finished_; }
    [[nodiscard]] std::size_t round() const noexcept { return round_; }
    [[nodiscard]] const std::vector<std::size_t>& active() const noexcept { return active_; }
    [[nodiscard]] const std::vector<ShvvRound>& schedule() const noexcept { return schedule_; }
    [[nodiscard]] std::uint64_t pulls_this_round(std::size_t arm) const { return round_stats_.at(arm).count(); }
    /// Best-ranked survivor after the final round (J_n).
    [[nodiscard]] std::optional<std::size_t> recommendation() const;

private:
    void eliminate();
    [[nodiscard]] double elimination_statistic(std::size_t arm) const;

    bool round_only_;
    std::size_t stop_at_;
    std::vector<ShvvRound> schedule_;
    std::vector<std::size_t> active_;
    std::vector<RunningStats> round_stats_;
    std::vector<RunningStats> all_stats_;
    std::size_t round_ = 0;
    std::size_t cursor_ = 0;
    std::uint64_t round_pulls_ = 0;
    bool finished_ = false;
    std::optional<std::size_t> best_;
};

// --- UCB-Sharpe ------------------------------------------------------------

/// S_i + sqrt(ln(4 t^2) / (c s_i)); +inf when the Sharpe estimate is
/// degenerate or undefined.
[[nodiscard]] double ucb_sharpe_bonus(std::uint64_t count, double t, double c);
[[nodiscard]] double ucb_sharpe_index(const RunningStats& stats, double t, double c);
/// Pulls every arm up to two samples (lowest count first), then argmax index.
[[nodiscard]] std::size_t ucb_sharpe_select(const PolicyContext& ctx, double c);

// --- baselines -------------------------------------------------------------

/// Variance-greedy with uniform exploration. Bootstraps one pull per arm.
[[nodiscard]] std::size_t epsilon_greedy_v_select(const PolicyContext& ctx, double epsilon, Rng& rng);

/// Normal-Inverse-Gamma prior over (mu, sigma^2).
struct NigPrior {
    double mu0 = 0.5;
    double kappa0 = 1.0;
    double alpha0 = 2.0;
    double beta0 = 0.1;
};

/// One posterior draw of sigma^2 for an arm.
[[nodiscard]] double vts_sample_variance(const RunningStats& stats, const NigPrior& prior, Rng& rng);
/// Argmax of one posterior variance draw per arm (no bootstrap).
[[nodiscard]] std::size_t vts_select(const PolicyContext& ctx, const NigPrior& prior, Rng& rng);

/// Bernoulli KL divergence kl(p, q) with 0 log 0 = 0.
[[nodiscard]] double bernoulli_kl(double p, double q);
/// max{q in [p_hat, 1] : count * kl(p_hat, q) <= log_term}, by bisection.
[[nodiscard]] double kl_ucb_upper(double p_hat, std::uint64_t count, double log_term, double tol = 1e-9);
[[nodiscard]] std::size_t klucb_select(const PolicyContext& ctx);

/// Round-robin over all arms.
[[nodiscard]] std::size_t uniform_bai_select(const PolicyContext& ctx);
/// Argmax unbiased variance (arms with < 2 samples score 0).
[[nodiscard]] std::size_t uniform_bai_recommend(std::span<const RunningStats> per_arm);

/// mean + sqrt(2 ln(t-1) / s_i) after one pull per arm.
[[nodiscard]] std::size_t ucb1_select(const PolicyContext& ctx);

// --- Policy interface ------------------------------------------------------

class Policy {
public:
    virtual ~Policy() = default;

    [[nodiscard]] virtual std::string_view kind() const = 0;
    /// Called before each run. `seed` drives any internal randomness.
    virtual void reset(std::size_t num_arms, std::uint64_t horizon, std::uint64_t seed) = 0;
    [[nodiscard]] virtual std::size_t select(const PolicyContext& ctx) = 0;
    virtual void observe(std::size_t /*arm*/, double /*reward*/) {}

    /// Identification policies produce a recommendation and may stop early.
    [[nodiscard]] virtual bool identifies() const { return false; }
    [[nodiscard]] virtual bool finished() const { return false; }
    [[nodiscard]] virtual std::optional<std::size_t> recommendation() const { return std::nullopt; }
    [[nodiscard]] virtual bool bernoulli_only() const { return false; }
};

/// Declarative policy description: a kind name plus numeric parameters.
struct PolicyDescriptor {
    std::string name;
    std::map<std::string, double> params;
    std::string label; // defaults to name(k=v,...)

    [[nodiscard]] std::string display_label() const;
};

/// Throws ConfigError for unknown kinds or parameters, or invalid values.
[[nodiscard]] std::unique_ptr<Policy> make_policy(const PolicyDescriptor& descriptor);

class UcbVvPolicy final : public Policy {
public:
    explicit UcbVvPolicy(PilotPlan pilot = {}) : pilot_(pilot) {}
    std::string_view kind() const override { return "ucb_vv"; }
    void reset(std::size_t, std::uint64_t, std::uint64_t) override {}
    std::size_t select(const PolicyContext& ctx) override { return ucb_vv_select(ctx, pilot_); }

private:
    PilotPlan pilot_;
};

class ShvvPolicy final : public Policy {
public:
    explicit ShvvPolicy(bool round_only = false, std::size_t stop_at = 1)
        : round_only_(round_only), stop_at_(stop_at) {}
    std::string_view kind() const override { return "shvv"; }
    void reset(std::size_t num_arms, std::uint64_t horizon, std::uint64_t seed) override;
    std::size_t select(const PolicyContext& ctx) override;
    void observe(std::size_t arm, double reward) override;
    bool identifies() const override { return true; }
    bool finished() const override { return state_ && state_->finished(); }
    std::optional<std::size_t> recommendation() const override;
    [[nodiscard]] const ShvvState& state() const;

private:
    bool round_only_;
    std::size_t stop_at_;
    std::optional<ShvvState> state_;
};

class UcbSharpePolicy final : public Policy {
public:
    explicit UcbSharpePolicy(double c = 1.0) : c_(c) {}
    std::string_view kind() const override { return "ucb_sharpe"; }
    void reset(std::size_t, std::uint64_t, std::uint64_t) override {}
    std::size_t select(const PolicyContext& ctx) override { return ucb_sharpe_select(ctx, c_); }

private:
    double c_;
};

class EpsilonGreedyPolicy final : public Policy {
public:
    explicit EpsilonGreedyPolicy(double epsilon) : epsilon_(epsilon) {}
    std::string_view kind() const override { return "eps_greedy"; }
    void reset(std::size_t, std::uint64_t, std::uint64_t seed) override { rng_.seed(seed); }
    std::size_t select(const PolicyContext& ctx) override { return epsilon_greedy_v_select(ctx, epsilon_, rng_); }

private:
    double epsilon_;
    Rng rng_;
};

class VtsPolicy final : public Policy {
public:
    explicit VtsPolicy(NigPrior prior = {}) : prior_(prior) {}
    std::string_view kind() const override { return "vts"; }
    void reset(std::size_t, std::uint64_t, std::uint64_t seed) override { rng_.seed(seed); }
    /// Two round-robin pulls per arm, then posterior sampling.
    std::size_t select(const PolicyContext& ctx) override;

private:
    NigPrior prior_;
    Rng rng_;
};

class KlUcbPolicy final : public Policy {
public:
    std::string_view kind() const override { return "kl_ucb"; }
    void reset(std::size_t, std::uint64_t, std::uint64_t) override {}
    std::size_t select(const PolicyContext& ctx) override { return klucb_select(ctx); }
    /// Throws EnvironmentMismatch on a non-binary reward.
    void observe(std::size_t arm, double reward) override;
    bool bernoulli_only() const override { return true; }
};

class UniformBaiPolicy final : public Policy {
public:
    std::string_view kind() const override { return "uniform"; }
    void reset(std::size_t num_arms, std::uint64_t horizon, std::uint64_t seed) override;
    std::size_t select(const PolicyContext& ctx) override { return uniform_bai_select(ctx); }
    void observe(std::size_t arm, double reward) override;
    bool identifies() const override { return true; }
    bool finished() const override { return pulls_ >= horizon_; }
    std::optional<std::size_t> recommendation() const override;

private:
    std::vector<RunningStats> stats_;
    std::uint64_t horizon_ = 0;
    std::uint64_t pulls_ = 0;
};

class Ucb1Policy final : public Policy {
public:
    std::string_view kind() const override { return "ucb1"; }
    void reset(std::size_t, std::uint64_t, std::uint64_t) override {}
    std::size_t select(const PolicyContext& ctx) override { return ucb1_select(ctx); }
};

} // namespace varbandit
