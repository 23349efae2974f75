#include "varbandit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "varbandit/errors.hpp"
#include "varbandit/stats.hpp"

namespace varbandit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite(double x) { return std::isfinite(x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace

DistributionSpec DistributionSpec::uniform(double low, double high) {
    if (!finite(low) || !finite(high) || !(low < high)) {
        throw InputError(fmt::format("uniform arm needs finite low < high, got [{}, {}]", low, high));
    }
    return DistributionSpec(UniformArm{low, high});
}

DistributionSpec DistributionSpec::bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError(fmt::format("bernoulli arm needs 0 <= p <= 1, got {}", p));
    }
    return DistributionSpec(BernoulliArm{p});
}

DistributionSpec DistributionSpec::gaussian(double mu, double sigma) {
    if (!finite(mu) || !finite(sigma) || !(sigma > 0.0)) {
        throw InputError(fmt::format("gaussian arm needs finite mu and sigma > 0, got ({}, {})", mu, sigma));
    }
    return DistributionSpec(GaussianArm{mu, sigma});
}

DistributionSpec DistributionSpec::uniform_with_variance(double centre, double variance) {
    if (!(variance > 0.0)) {
        throw InputError(fmt::format("uniform arm needs positive variance, got {}", variance));
    }
    const double half = 0.5 * std::sqrt(12.0 * variance);
    return uniform(centre - half, centre + half);
}

bool DistributionSpec::is_bernoulli() const noexcept {
    return std::holds_alternative<BernoulliArm>(params_);
}

bool DistributionSpec::is_bounded() const noexcept {
    return !std::holds_alternative<GaussianArm>(params_);
}

std::optional<std::pair<double, double>> DistributionSpec::support() const {
    return std::visit(overloaded{
                          [](const UniformArm& u) -> std::optional<std::pair<double, double>> {
                              return std::pair{u.low, u.high};
                          },
                          [](const BernoulliArm&) -> std::optional<std::pair<double, double>> {
                              return std::pair{0.0, 1.0};
                          },
                          [](const GaussianArm&) -> std::optional<std::pair<double, double>> {
                              return std::nullopt;
                          },
                      },
                      params_);
}

std::optional<double> DistributionSpec::subgauss_v2() const {
    if (const auto* g = std::get_if<GaussianArm>(&params_)) {
        return g->sigma * g->sigma;
    }
    return std::nullopt;
}

std::string DistributionSpec::describe() const {
    return std::visit(overloaded{
                          [](const UniformArm& u) { return fmt::format("Uniform({}, {})", u.low, u.high); },
                          [](const BernoulliArm& b) { return fmt::format("Bernoulli({})", b.p); },
                          [](const GaussianArm& g) { return fmt::format("Gaussian({}, {})", g.mu, g.sigma); },
                      },
                      params_);
}

double true_mean(const DistributionSpec& spec) {
    return std::visit(overloaded{
                          [](const UniformArm& u) { return 0.5 * (u.low + u.high); },
                          [](const BernoulliArm& b) { return b.p; },
                          [](const GaussianArm& g) { return g.mu; },
                      },
                      spec.params());
}

double true_variance(const DistributionSpec& spec) {
    return std::visit(overloaded{
                          [](const UniformArm& u) {
                              const double w = u.high - u.low;
                              return w * w / 12.0;
                          },
                          [](const BernoulliArm& b) { return b.p * (1.0 - b.p); },
                          [](const GaussianArm& g) { return g.sigma * g.sigma; },
                      },
                      spec.params());
}

double sample(const DistributionSpec& spec, Rng& rng) {
    return std::visit(overloaded{
                          [&](const UniformArm& u) {
                              std::uniform_real_distribution<double> d(u.low, u.high);
                              return std::clamp(d(rng), u.low, u.high);
                          },
                          [&](const BernoulliArm& b) {
                              std::bernoulli_distribution d(b.p);
                              return d(rng) ? 1.0 : 0.0;
                          },
                          [&](const GaussianArm& g) {
                              std::normal_distribution<double> d(g.mu, g.sigma);
                              return d(rng);
                          },
                      },
                      spec.params());
}

// --- GBM -------------------------------------------------------------------

void GbmSpec::validate() const {
    if (!(s0 > 0.0) || !finite(s0)) {
        throw InputError(fmt::format("GBM s0 must be positive, got {}", s0));
    }
    if (!(vol >= 0.0) || !finite(vol)) {
        throw InputError(fmt::format("GBM vol must be nonnegative, got {}", vol));
    }
    if (!(dt > 0.0) || !finite(dt)) {
        throw InputError(fmt::format("GBM dt must be positive, got {}", dt));
    }
    if (!finite(drift)) {
        throw InputError("GBM drift must be finite");
    }
}

double gbm_step(const GbmSpec& spec, double s_prev, double z) {
    if (!(s_prev > 0.0)) {
        throw InputError("gbm_step: previous price must be positive");
    }
    const double log_inc =
        (spec.drift - 0.5 * spec.vol * spec.vol) * spec.dt + spec.vol * std::sqrt(spec.dt) * z;
    return s_prev * std::exp(log_inc);
}

std::vector<double> simulate_gbm_path(const GbmSpec& spec, std::size_t steps, Rng& rng) {
    spec.validate();
    std::vector<double> path;
    path.reserve(steps + 1);
    path.push_back(spec.s0);
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t i = 0; i < steps; ++i) {
        path.push_back(gbm_step(spec, path.back(), z(rng)));
    }
    return path;
}

std::vector<GbmSpec> sample_gbm_universe(const GbmRanges& ranges, std::size_t stocks, Rng& rng) {
    auto draw = [&rng](std::pair<double, double> r) {
        if (r.first == r.second) {
            return r.first;
        }
        std::uniform_real_distribution<double> d(r.first, r.second);
        return d(rng);
    };
    std::vector<GbmSpec> out;
    out.reserve(stocks);
    for (std::size_t i = 0; i < stocks; ++i) {
        GbmSpec spec;
        spec.drift = draw(ranges.drift);
        spec.vol = draw(ranges.vol);
        spec.s0 = draw(ranges.s0);
        spec.dt = ranges.dt;
        spec.validate();
        out.push_back(spec);
    }
    return out;
}

double black_scholes_call(double spot, double strike, double vol, double maturity, double rate) {
    const double discount = std::exp(-rate * maturity);
    const double intrinsic = std::max(0.0, spot - strike * discount);
    const double sd = vol * std::sqrt(maturity);
    if (!(sd > 0.0)) {
        return intrinsic;
    }
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / sd;
    const double d2 = d1 - sd;
    return spot * normal_cdf(d1) - strike * discount * normal_cdf(d2);
}

OptionQuote OptionTerms::quote(double prev_close, std::span<const double> window, double dt) const {
    const double strike = strike_rule(prev_close, window, dt);
    const double premium = premium_rule(prev_close, strike, window, dt);
    if (!(strike > 0.0)) {
        throw InputError(fmt::format("strike rule produced non-positive strike {}", strike));
    }
    if (!(premium >= 0.0)) {
        throw InputError(fmt::format("premium rule produced negative premium {}", premium));
    }
    return {strike, premium};
}

OptionTerms OptionTerms::at_the_money_black_scholes() {
    OptionTerms terms;
    terms.strike_rule = [](double prev_close, std::span<const double>, double) { return prev_close; };
    terms.premium_rule = [](double prev_close, double strike, std::span<const double> window, double dt) {
        double vol = 0.0;
        if (window.size() >= 2) {
            RunningStats s;
            for (double r : window) {
                s.push(r);
            }
            vol = std::sqrt(s.unbiased_variance() / dt);
        }
        return black_scholes_call(prev_close, strike, vol, dt);
    };
    return terms;
}

double option_payoff(double s_t, const OptionQuote& quote) {
    return std::max(0.0, s_t - quote.strike) - quote.premium;
}

// --- MarketState -----------------------------------------------------------

MarketState::MarketState(std::size_t stocks, std::size_t window)
    : window_(window), prices_(stocks), returns_(stocks) {
    if (window < 2) {
        throw InputError("MarketState: window must be at least 2");
    }
    if (stocks == 0) {
        throw InputError("MarketState: needs at least one stock");
    }
}

void MarketState::push_closes(std::span<const double> closes) {
    if (closes.size() != prices_.size()) {
        throw InputError(fmt::format("MarketState: expected {} closes, got {}", prices_.size(), closes.size()));
    }
    for (std::size_t i = 0; i < closes.size(); ++i) {
        if (!(closes[i] > 0.0) || !finite(closes[i])) {
            throw InputError("MarketState: closes must be positive");
        }
    }
    for (std::size_t i = 0; i < closes.size(); ++i) {
        auto& p = prices_[i];
        if (!p.empty()) {
            auto& r = returns_[i];
            r.push_back((closes[i] - p.back()) / p.back());
            if (r.size() > window_) {
                r.pop_front();
            }
        }
        p.push_back(closes[i]);
    }
}

std::size_t MarketState::observed() const noexcept { return prices_.front().size(); }

double MarketState::last_close(std::size_t stock) const {
    const auto& p = prices_.at(stock);
    if (p.empty()) {
        throw UndefinedStatistic("MarketState: no prices observed");
    }
    return p.back();
}

const std::vector<double>& MarketState::prices(std::size_t stock) const { return prices_.at(stock); }

std::vector<double> MarketState::rolling_returns(std::size_t stock) const {
    if (prices_.at(stock).size() < 2) {
        throw UndefinedStatistic("rolling_returns: insufficient history (need 2 prices)");
    }
    const auto& r = returns_[stock];
    return {r.begin(), r.end()};
}

void write_market_csv(std::ostream& out, const std::vector<std::vector<double>>& paths) {
    out << "step,stock_id,price\n";
    std::size_t steps = 0;
    for (const auto& p : paths) {
        steps = std::max(steps, p.size());
    }
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t s = 0; s < paths.size(); ++s) {
            if (t < paths[s].size()) {
                out << fmt::format("{},{},{}\n", t, s, paths[s][t]);
            }
        }
    }
}

} // namespace varbandit
