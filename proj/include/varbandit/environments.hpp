#pragma once

// Reward-generating processes: parametric arms for synthetic experiments and a
// geometric-Brownian-motion market with call-option payoffs.

#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace varbandit {

using Rng = std::mt19937_64;

struct UniformArm {
    double low;
    double high;
};

struct BernoulliArm {
    double p;
};

struct GaussianArm {
    double mu;
    double sigma;
};

/// Parametric arm distribution. Construct through the named factories, which
/// validate parameters and throw InputError.
class DistributionSpec {
public:
    using Variant = std::variant<UniformArm, BernoulliArm, GaussianArm>;

    static DistributionSpec uniform(double low, double high);
    static DistributionSpec bernoulli(double p);
    static DistributionSpec gaussian(double mu, double sigma);
    /// Uniform centred at `centre` with the requested variance.
    static DistributionSpec uniform_with_variance(double centre, double variance);

    [[nodiscard]] const Variant& params() const noexcept { return params_; }
    [[nodiscard]] bool is_bernoulli() const noexcept;
    [[nodiscard]] bool is_bounded() const noexcept;
    /// (l, u) for bounded laws.
    [[nodiscard]] std::optional<std::pair<double, double>> support() const;
    /// Sub-Gaussian parameter v^2 (sigma^2) for Gaussian arms.
    [[nodiscard]] std::optional<double> subgauss_v2() const;
    [[nodiscard]] std::string describe() const;

private:
    explicit DistributionSpec(Variant v) : params_(v) {}
    Variant params_;
};

[[nodiscard]] double true_mean(const DistributionSpec& spec);
[[nodiscard]] double true_variance(const DistributionSpec& spec);
double sample(const DistributionSpec& spec, Rng& rng);

// --- GBM market ------------------------------------------------------------

inline constexpr double kTradingDay = 1.0 / 252.0;

struct GbmSpec {
    double s0 = 100.0;
    double drift = 0.0; // per unit time
    double vol = 0.2;   // per sqrt unit time; 0 gives a deterministic path
    double dt = kTradingDay;

    /// Throws InputError unless s0 > 0, vol >= 0, dt > 0.
    void validate() const;
};

/// Exact log-normal step: s_prev * exp((drift - vol^2/2) dt + vol sqrt(dt) z).
[[nodiscard]] double gbm_step(const GbmSpec& spec, double s_prev, double z);

/// Prices s_0 .. s_steps (steps + 1 values).
[[nodiscard]] std::vector<double> simulate_gbm_path(const GbmSpec& spec, std::size_t steps, Rng& rng);

struct GbmRanges {
    std::pair<double, double> drift{-0.05, 0.15};
    std::pair<double, double> vol{0.1, 0.6};
    std::pair<double, double> s0{50.0, 150.0};
    double dt = kTradingDay;
};

[[nodiscard]] std::vector<GbmSpec> sample_gbm_universe(const GbmRanges& ranges, std::size_t stocks, Rng& rng);

/// Black-Scholes price of a European call. Degenerate vol or maturity
/// returns the discounted intrinsic value.
[[nodiscard]] double black_scholes_call(double spot, double strike, double vol, double maturity,
                                        double rate = 0.0);

struct OptionQuote {
    double strike;  // R
    double premium; // P
};

/// Option contract rules, evaluated on the state just before the trade.
/// `window` holds the stock's most recent simple returns.
struct OptionTerms {
    std::function<double(double prev_close, std::span<const double> window, double dt)> strike_rule;
    std::function<double(double prev_close, double strike, std::span<const double> window, double dt)>
        premium_rule;

    /// Throws InputError if the rules produce R <= 0 or P < 0.
    [[nodiscard]] OptionQuote quote(double prev_close, std::span<const double> window, double dt) const;

    /// At-the-money strike on the previous close; Black-Scholes premium with
    /// the window's volatility, zero rate and one-step maturity.
    static OptionTerms at_the_money_black_scholes();
};

/// Buyer's net payoff max(0, s_t - R) - P.
[[nodiscard]] double option_payoff(double s_t, const OptionQuote& quote);

/// Per-stock price history with a rolling window of simple returns.
class MarketState {
public:
    /// Throws InputError when window < 2 or stocks == 0.
    MarketState(std::size_t stocks, std::size_t window);

    /// Appends one close per stock; all closes must be > 0.
    void push_closes(std::span<const double> closes);

    [[nodiscard]] std::size_t stocks() const noexcept { return prices_.size(); }
    [[nodiscard]] std::size_t window() const noexcept { return window_; }
    [[nodiscard]] std::size_t observed() const noexcept;
    [[nodiscard]] double last_close(std::size_t stock) const;
    [[nodiscard]] const std::vector<double>& prices(std::size_t stock) const;

    /// Last <= window simple returns, oldest first. Throws UndefinedStatistic
    /// with fewer than two prices.
    [[nodiscard]] std::vector<double> rolling_returns(std::size_t stock) const;

private:
    std::size_t window_;
    std::vector<std::vector<double>> prices_;
    std::vector<std::deque<double>> returns_;
};

/// Long-format CSV (step,stock_id,price) of a set of price paths.
void write_market_csv(std::ostream& out, const std::vector<std::vector<double>>& paths);

} // namespace varbandit
