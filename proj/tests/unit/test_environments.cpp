#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "varbandit/errors.hpp"
#include "varbandit/environments.hpp"
#include "varbandit/stats.hpp"

using namespace varbandit;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

} // namespace

TEST_CASE("true_variance of the parametric laws") {
    CHECK(true_variance(DistributionSpec::uniform(0.0, 1.0)) == doctest::Approx(1.0 / 12.0));
    CHECK(true_variance(DistributionSpec::uniform(0.3, 0.7)) == doctest::Approx(0.4 * 0.4 / 12.0));
    const double p = 0.1838;
    CHECK(true_variance(DistributionSpec::bernoulli(p)) == doctest::Approx(p * (1 - p)));
    CHECK(true_variance(DistributionSpec::bernoulli(0.5)) - true_variance(DistributionSpec::bernoulli(p)) ==
          doctest::Approx(0.1).epsilon(1e-3));
    CHECK(true_variance(DistributionSpec::gaussian(0.2, 0.3)) == doctest::Approx(0.09));
    CHECK(true_mean(DistributionSpec::gaussian(0.2, 0.3)) == doctest::Approx(0.2));
}

TEST_CASE("uniform_with_variance keeps the centre and hits the variance") {
    const auto spec = DistributionSpec::uniform_with_variance(0.5, 0.02);
    CHECK(true_mean(spec) == doctest::Approx(0.5));
    CHECK(true_variance(spec) == doctest::Approx(0.02));
    const auto [l, u] = *spec.support();
    CHECK(u - l == doctest::Approx(std::sqrt(12.0 * 0.02)));
}

TEST_CASE("factories reject invalid parameters") {
    CHECK_THROWS_AS(DistributionSpec::uniform(1.0, 1.0), InputError);
    CHECK_THROWS_AS(DistributionSpec::bernoulli(1.5), InputError);
    CHECK_THROWS_AS(DistributionSpec::gaussian(0.0, -1.0), InputError);
    CHECK_THROWS_AS(DistributionSpec::uniform_with_variance(0.5, -0.1), InputError);
}

TEST_CASE("sample: degenerate and near-degenerate laws") {
    Rng rng(1);
    CHECK(sample(DistributionSpec::uniform(0.3, 0.3 + 1e-12), rng) == doctest::Approx(0.3));
    for (int i = 0; i < 100; ++i) {
        CHECK(sample(DistributionSpec::bernoulli(1.0), rng) == 1.0);
        CHECK(sample(DistributionSpec::bernoulli(0.0), rng) == 0.0);
    }
}

TEST_CASE("sample: bounded draws stay inside the support") {
    Rng rng(2);
    const std::vector<DistributionSpec> specs{DistributionSpec::uniform(0.0, 1.0), DistributionSpec::uniform(-2.0, 5.0),
                                              DistributionSpec::bernoulli(0.3),
                                              DistributionSpec::uniform_with_variance(0.5, 0.05)};
    for (const auto& spec : specs) {
        const auto [l, u] = *spec.support();
        for (int i = 0; i < 100000; ++i) {
            const double x = sample(spec, rng);
            REQUIRE(x >= l);
            REQUIRE(x <= u);
        }
    }
}

TEST_CASE("sample: Uniform(0,1) moments within three standard errors") {
    Rng rng(3);
    RunningStats s;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        s.push(sample(DistributionSpec::uniform(0.0, 1.0), rng));
    }
    // Var of the sample variance is (mu4 - sigma^4)/n with mu4 = 1/80.
    const double se = std::sqrt((1.0 / 80.0 - 1.0 / 144.0) / n);
    CHECK(std::abs(s.unbiased_variance() - 1.0 / 12.0) < 3 * se);
    CHECK(oracle::relative_error(s.unbiased_variance(), 1.0 / 12.0) < 0.01);
    CHECK(std::abs(s.mean() - 0.5) < 3 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("sample: Bernoulli and Gaussian means within three standard errors") {
    Rng rng(4);
    const int n = 200000;
    RunningStats b;
    RunningStats g;
    for (int i = 0; i < n; ++i) {
        b.push(sample(DistributionSpec::bernoulli(0.1838), rng));
        g.push(sample(DistributionSpec::gaussian(1.0, 0.5), rng));
    }
    CHECK(std::abs(b.mean() - 0.1838) < 3 * std::sqrt(0.1838 * 0.8162 / n));
    CHECK(std::abs(g.mean() - 1.0) < 3 * 0.5 / std::sqrt(double(n)));
    CHECK(std::abs(g.unbiased_variance() - 0.25) < 3 * 0.25 * std::sqrt(2.0 / n));
}

TEST_CASE("sample: same seed gives the same stream") {
    Rng a(77);
    Rng b(77);
    const auto spec = DistributionSpec::gaussian(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(sample(spec, a) == sample(spec, b));
    }
}

TEST_CASE("gbm_step closed forms") {
    const double dt = 1.0 / 252.0;
    const GbmSpec zero_vol{100.0, 0.05, 0.0, dt};
    CHECK(gbm_step(zero_vol, 100.0, 0.7) == doctest::Approx(100.0 * std::exp(0.05 * dt)));
    CHECK(gbm_step(zero_vol, 100.0, 0.0) == doctest::Approx(100.01984).epsilon(1e-7));

    const GbmSpec spec{100.0, 0.05, 0.2, dt};
    CHECK(gbm_step(spec, 100.0, 0.0) == doctest::Approx(100.0 * std::exp((0.05 - 0.02) * dt)));
    CHECK(gbm_step(spec, 100.0, 0.0) == doctest::Approx(100.01191).epsilon(1e-7));

    // Product of the +z and -z steps only keeps the drift term.
    for (double z : {0.3, 1.0, 2.5}) {
        const double up = gbm_step(spec, 100.0, z);
        const double down = gbm_step(spec, 100.0, -z);
        CHECK(up * down == doctest::Approx(100.0 * 100.0 * std::exp(2 * (0.05 - 0.02) * dt)));
    }
}

TEST_CASE("GBM log increments have the advertised moments") {
    const GbmSpec spec{100.0, 0.1, 0.3, 1.0 / 252.0};
    Rng rng(5);
    const auto path = simulate_gbm_path(spec, 200000, rng);
    REQUIRE(path.size() == 200001);
    RunningStats inc;
    for (std::size_t i = 1; i < path.size(); ++i) {
        REQUIRE(path[i] > 0.0);
        inc.push(std::log(path[i] / path[i - 1]));
    }
    const double m = (spec.drift - spec.vol * spec.vol / 2) * spec.dt;
    const double v = spec.vol * spec.vol * spec.dt;
    const double n = static_cast<double>(inc.count());
    CHECK(std::abs(inc.mean() - m) < 3 * std::sqrt(v / n));
    CHECK(std::abs(inc.unbiased_variance() - v) < 3 * v * std::sqrt(2.0 / n));
}

TEST_CASE("GbmSpec validation") {
    CHECK_NOTHROW((GbmSpec{100.0, 0.0, 0.0}.validate()));
    CHECK_THROWS_AS((GbmSpec{-1.0, 0.0, 0.2}.validate()), InputError);
    CHECK_THROWS_AS((GbmSpec{100.0, 0.0, -0.2}.validate()), InputError);
}

TEST_CASE("sample_gbm_universe respects the ranges") {
    Rng rng(6);
    const GbmRanges ranges;
    const auto uni = sample_gbm_universe(ranges, 100, rng);
    REQUIRE(uni.size() == 100);
    for (const auto& s : uni) {
        CHECK(s.drift >= ranges.drift.first);
        CHECK(s.drift <= ranges.drift.second);
        CHECK(s.vol >= ranges.vol.first);
        CHECK(s.vol <= ranges.vol.second);
        CHECK(s.s0 >= ranges.s0.first);
        CHECK(s.s0 <= ranges.s0.second);
    }
}

TEST_CASE("black_scholes_call") {
    // At the money with zero rate: S (2 N(sigma sqrt T / 2) - 1).
    CHECK(black_scholes_call(100.0, 100.0, 0.2, 1.0) == doctest::Approx(100.0 * (2 * normal_cdf(0.1) - 1)));
    CHECK(black_scholes_call(100.0, 100.0, 0.2, 1.0) == doctest::Approx(7.9656).epsilon(1e-4));
    CHECK(black_scholes_call(110.0, 100.0, 0.0, 1.0) == doctest::Approx(10.0));
    CHECK(black_scholes_call(90.0, 100.0, 0.0, 1.0) == 0.0);
    // Put-call parity with r = 0: C - P = S - K, and P >= 0 gives C >= S - K.
    CHECK(black_scholes_call(120.0, 100.0, 0.3, 0.5) >= 20.0);
}

TEST_CASE("option_payoff") {
    CHECK(option_payoff(105.0, {100.0, 3.0}) == doctest::Approx(2.0));
    CHECK(option_payoff(95.0, {100.0, 3.0}) == doctest::Approx(-3.0));
    CHECK(option_payoff(100.0, {100.0, 0.0}) == 0.0);
    for (double s : {1.0, 50.0, 99.0, 100.0, 101.0, 500.0}) {
        CHECK(option_payoff(s, {100.0, 2.5}) >= -2.5);
    }
}

TEST_CASE("OptionTerms: at-the-money Black-Scholes quote") {
    const auto terms = OptionTerms::at_the_money_black_scholes();
    const std::vector<double> flat(10, 0.0);
    const auto q = terms.quote(100.0, flat, 1.0 / 252.0);
    CHECK(q.strike == 100.0);
    CHECK(q.premium == doctest::Approx(0.0));

    const std::vector<double> window{0.01, -0.01, 0.02, -0.02};
    const auto q2 = terms.quote(100.0, window, 1.0 / 252.0);
    CHECK(q2.strike == 100.0);
    CHECK(q2.premium > 0.0);

    OptionTerms bad;
    bad.strike_rule = [](double, std::span<const double>, double) { return -1.0; };
    bad.premium_rule = [](double, double, std::span<const double>, double) { return 0.0; };
    CHECK_THROWS_AS((void)bad.quote(100.0, window, 1.0 / 252.0), InputError);
}

TEST_CASE("MarketState rolling window") {
    MarketState m(2, 5);
    CHECK_THROWS_AS((void)m.rolling_returns(0), UndefinedStatistic);
    m.push_closes(std::vector<double>{100.0, 50.0});
    CHECK_THROWS_AS((void)m.rolling_returns(0), UndefinedStatistic);
    m.push_closes(std::vector<double>{110.0, 50.0});
    auto r = m.rolling_returns(0);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(0.1));
    CHECK(m.rolling_returns(1)[0] == 0.0);

    for (int i = 0; i < 10; ++i) {
        m.push_closes(std::vector<double>{110.0, 50.0});
    }
    CHECK(m.rolling_returns(0).size() == 5);
    for (double x : m.rolling_returns(0)) {
        CHECK(x == 0.0);
    }
    CHECK(m.last_close(1) == 50.0);
    CHECK(m.observed() == 12);
    CHECK_THROWS_AS(m.push_closes(std::vector<double>{1.0}), InputError);
    CHECK_THROWS_AS(m.push_closes(std::vector<double>{1.0, 0.0}), InputError);
    CHECK_THROWS_AS(MarketState(2, 1), InputError);
}

TEST_CASE("write_market_csv long format") {
    std::ostringstream out;
    write_market_csv(out, {{100.0, 101.0}, {50.0, 49.5}});
    const std::string text = out.str();
    CHECK(text.rfind("step,stock_id,price\n", 0) == 0);
    CHECK(text.find("1,1,49.5\n") != std::string::npos);
}
