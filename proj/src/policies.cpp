#include "varbandit/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "varbandit/errors.hpp"

namespace varbandit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lowest-index arm whose count is below `min_count`, if any.
std::optional<std::size_t> first_under(const PolicyContext& ctx, std::uint64_t min_count) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < ctx.num_arms(); ++i) {
        const auto c = ctx.per_arm[i].count();
        if (c < min_count && (!best || c < ctx.per_arm[*best].count())) {
            best = i;
        }
    }
    return best;
}

void require_arms(const PolicyContext& ctx) {
    if (ctx.num_arms() == 0) {
        throw InputError("policy context has no arms");
    }
}

} // namespace

std::size_t argmax_lowest(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

// --- UCB-VV ----------------------------------------------------------------

double ucb_vv_bonus(std::uint64_t count, double t) {
    if (count == 0) {
        return kInf;
    }
    const double log_t = t > 1.0 ? std::log(t) : 0.0;
    return std::sqrt(2.0 * log_t / static_cast<double>(count));
}

double ucb_vv_index(const RunningStats& stats, double t) {
    if (stats.count() == 0) {
        return kInf;
    }
    return stats.biased_variance() + ucb_vv_bonus(stats.count(), t);
}

std::uint64_t PilotPlan::steps(std::size_t num_arms, std::uint64_t horizon) const {
    if (fraction <= 0.0) {
        return num_arms;
    }
    return static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(horizon) - 1e-9));
}

std::size_t ucb_vv_select(const PolicyContext& ctx, const PilotPlan& pilot) {
    require_arms(ctx);
    const std::size_t k = ctx.num_arms();
    if (ctx.t <= pilot.steps(k, ctx.horizon)) {
        return static_cast<std::size_t>((ctx.t - 1) % k);
    }
    // Index from the statistics after step t-1.
    const double t_prev = static_cast<double>(ctx.t - 1);
    std::vector<double> idx(k);
    for (std::size_t i = 0; i < k; ++i) {
        idx[i] = ucb_vv_index(ctx.per_arm[i], t_prev);
    }
    return argmax_lowest(idx);
}

// --- SHVV ------------------------------------------------------------------

std::size_t ceil_log2(std::size_t k) {
    std::size_t rounds = 0;
    while ((std::size_t{1} << rounds) < k) {
        ++rounds;
    }
    return rounds;
}

std::vector<ShvvRound> shvv_schedule(std::size_t num_arms, std::uint64_t budget, std::size_t stop_at) {
    if (num_arms < 2) {
        throw InputError("shvv_schedule: needs K >= 2");
    }
    if (stop_at < 1) {
        throw InputError("shvv_schedule: stop_at must be >= 1");
    }
    const std::size_t log_k = ceil_log2(num_arms);
    if (budget < static_cast<std::uint64_t>(num_arms) * log_k) {
        throw InfeasibleBudget(fmt::format("SHVV budget n={} below K*ceil(log2 K)={}", budget,
                                           num_arms * log_k));
    }
    std::vector<ShvvRound> out;
    std::size_t active = num_arms;
    while (active > stop_at) {
        const std::uint64_t t_r = budget / (static_cast<std::uint64_t>(active) * log_k);
        out.push_back({out.size(), active, t_r});
        active = std::max(stop_at, (active + 1) / 2);
    }
    return out;
}

ShvvState::ShvvState(std::size_t num_arms, std::uint64_t budget, bool round_only, std::size_t stop_at)
    : round_only_(round_only),
      stop_at_(stop_at),
      schedule_(shvv_schedule(num_arms, budget, stop_at)),
      active_(num_arms),
      round_stats_(num_arms),
      all_stats_(num_arms) {
    std::iota(active_.begin(), active_.end(), std::size_t{0});
    if (schedule_.empty()) {
        finished_ = true;
        best_ = 0;
    }
}

std::size_t ShvvState::next_arm() const {
    if (finished_) {
        throw std::logic_error("ShvvState: schedule exhausted");
    }
    return active_[cursor_];
}

void ShvvState::record(std::size_t arm, double reward) {
    if (finished_) {
        throw std::logic_error("ShvvState: schedule exhausted");
    }
    if (arm != active_[cursor_]) {
        throw std::logic_error("ShvvState: reward recorded for an arm that was not requested");
    }
    round_stats_[arm].push(reward);
    all_stats_[arm].push(reward);
    cursor_ = (cursor_ + 1) % active_.size();
    ++round_pulls_;
    if (round_pulls_ == schedule_[round_].pulls_per_arm * active_.size()) {
        eliminate();
    }
}

double ShvvState::elimination_statistic(std::size_t arm) const {
    const auto& s = round_only_ ? round_stats_[arm] : all_stats_[arm];
    return s.count() >= 2 ? s.unbiased_variance() : 0.0;
}

void ShvvState::eliminate() {
    std::vector<std::size_t> order = active_;
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
        return elimination_statistic(a) > elimination_statistic(b);
    });
    order.resize(std::max(stop_at_, (active_.size() + 1) / 2));
    best_ = order.front();
    std::sort(order.begin(), order.end());
    active_ = std::move(order);
    for (auto& s : round_stats_) {
        s.reset();
    }
    round_pulls_ = 0;
    cursor_ = 0;
    ++round_;
    if (round_ == schedule_.size()) {
        finished_ = true;
    }
}

std::optional<std::size_t> ShvvState::recommendation() const {
    if (!finished_) {
        return std::nullopt;
    }
    return best_;
}

// --- UCB-Sharpe ------------------------------------------------------------

double ucb_sharpe_bonus(std::uint64_t count, double t, double c) {
    if (count == 0) {
        return kInf;
    }
    return std::sqrt(std::log(4.0 * t * t) / (c * static_cast<double>(count)));
}

double ucb_sharpe_index(const RunningStats& stats, double t, double c) {
    if (stats.count() < 2) {
        return kInf;
    }
    try {
        return empirical_sharpe(stats) + ucb_sharpe_bonus(stats.count(), t, c);
    } catch (const DegenerateSharpe&) {
        return kInf;
    }
}

std::size_t ucb_sharpe_select(const PolicyContext& ctx, double c) {
    require_arms(ctx);
    if (auto arm = first_under(ctx, 2)) {
        return *arm;
    }
    std::vector<double> idx(ctx.num_arms());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = ucb_sharpe_index(ctx.per_arm[i], static_cast<double>(ctx.t), c);
    }
    return argmax_lowest(idx);
}

// --- epsilon-greedy --------------------------------------------------------

std::size_t epsilon_greedy_v_select(const PolicyContext& ctx, double epsilon, Rng& rng) {
    require_arms(ctx);
    if (auto arm = first_under(ctx, 1)) {
        return *arm;
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, ctx.num_arms() - 1);
        return pick(rng);
    }
    std::vector<double> v(ctx.num_arms());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = ctx.per_arm[i].biased_variance();
    }
    return argmax_lowest(v);
}

// --- VTS -------------------------------------------------------------------

double vts_sample_variance(const RunningStats& stats, const NigPrior& prior, Rng& rng) {
    const double n = static_cast<double>(stats.count());
    const double kappa_n = prior.kappa0 + n;
    const double alpha_n = prior.alpha0 + 0.5 * n;
    const double dev = stats.mean() - prior.mu0;
    const double beta_n =
        prior.beta0 + 0.5 * stats.sum_sq_dev() + (n > 0.0 ? prior.kappa0 * n * dev * dev / (2.0 * kappa_n) : 0.0);
    // sigma^2 ~ InvGamma(alpha_n, beta_n)
    std::gamma_distribution<double> gamma(alpha_n, 1.0);
    return beta_n / gamma(rng);
}

std::size_t vts_select(const PolicyContext& ctx, const NigPrior& prior, Rng& rng) {
    require_arms(ctx);
    std::vector<double> draws(ctx.num_arms());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        draws[i] = vts_sample_variance(ctx.per_arm[i], prior, rng);
    }
    return argmax_lowest(draws);
}

std::size_t VtsPolicy::select(const PolicyContext& ctx) {
    if (auto arm = first_under(ctx, 2)) {
        return *arm;
    }
    return vts_select(ctx, prior_, rng_);
}

// --- KL-UCB ----------------------------------------------------------------

double bernoulli_kl(double p, double q) {
    auto term = [](double a, double b) {
        if (a <= 0.0) {
            return 0.0;
        }
        if (b <= 0.0) {
            return kInf;
        }
        return a * std::log(a / b);
    };
    return term(p, q) + term(1.0 - p, 1.0 - q);
}

double kl_ucb_upper(double p_hat, std::uint64_t count, double log_term, double tol) {
    if (p_hat >= 1.0) {
        return 1.0;
    }
    if (count == 0) {
        return 1.0;
    }
    const double n = static_cast<double>(count);
    double lo = p_hat;
    double hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (n * bernoulli_kl(p_hat, mid) <= log_term) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

std::size_t klucb_select(const PolicyContext& ctx) {
    require_arms(ctx);
    if (auto arm = first_under(ctx, 1)) {
        return *arm;
    }
    const double log_t = std::log(static_cast<double>(ctx.t));
    std::vector<double> q(ctx.num_arms());
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = kl_ucb_upper(ctx.per_arm[i].mean(), ctx.per_arm[i].count(), log_t);
    }
    return argmax_lowest(q);
}

void KlUcbPolicy::observe(std::size_t arm, double reward) {
    if (reward != 0.0 && reward != 1.0) {
        throw EnvironmentMismatch(
            fmt::format("kl_ucb needs Bernoulli rewards; arm {} returned {}", arm, reward));
    }
}

// --- uniform sampling ------------------------------------------------------

std::size_t uniform_bai_select(const PolicyContext& ctx) {
    require_arms(ctx);
    return static_cast<std::size_t>((ctx.t - 1) % ctx.num_arms());
}

std::size_t uniform_bai_recommend(std::span<const RunningStats> per_arm) {
    std::vector<double> v(per_arm.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = per_arm[i].count() >= 2 ? per_arm[i].unbiased_variance() : 0.0;
    }
    return argmax_lowest(v);
}

void UniformBaiPolicy::reset(std::size_t num_arms, std::uint64_t horizon, std::uint64_t) {
    stats_.assign(num_arms, RunningStats{});
    horizon_ = horizon;
    pulls_ = 0;
}

void UniformBaiPolicy::observe(std::size_t arm, double reward) {
    stats_.at(arm).push(reward);
    ++pulls_;
}

std::optional<std::size_t> UniformBaiPolicy::recommendation() const {
    if (!finished()) {
        return std::nullopt;
    }
    return uniform_bai_recommend(stats_);
}

// --- UCB1 ------------------------------------------------------------------

std::size_t ucb1_select(const PolicyContext& ctx) {
    require_arms(ctx);
    if (auto arm = first_under(ctx, 1)) {
        return *arm;
    }
    const double log_t = ctx.t > 2 ? std::log(static_cast<double>(ctx.t - 1)) : 0.0;
    std::vector<double> idx(ctx.num_arms());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& s = ctx.per_arm[i];
        idx[i] = s.mean() + std::sqrt(2.0 * log_t / static_cast<double>(s.count()));
    }
    return argmax_lowest(idx);
}

// --- SHVV policy -----------------------------------------------------------

void ShvvPolicy::reset(std::size_t num_arms, std::uint64_t horizon, std::uint64_t) {
    state_.emplace(num_arms, horizon, round_only_, stop_at_);
}

std::size_t ShvvPolicy::select(const PolicyContext&) { return state().next_arm(); }

void ShvvPolicy::observe(std::size_t arm, double reward) {
    if (!state_) {
        throw std::logic_error("ShvvPolicy used before reset");
    }
    state_->record(arm, reward);
}

std::optional<std::size_t> ShvvPolicy::recommendation() const {
    return state_ ? state_->recommendation() : std::nullopt;
}

const ShvvState& ShvvPolicy::state() const {
    if (!state_) {
        throw std::logic_error("ShvvPolicy used before reset");
    }
    return *state_;
}

// --- factory ---------------------------------------------------------------

std::string PolicyDescriptor::display_label() const {
    if (!label.empty()) {
        return label;
    }
    if (params.empty()) {
        return name;
    }
    std::string out = name + "(";
    bool first = true;
    for (const auto& [k, v] : params) {
        out += fmt::format("{}{}={}", first ? "" : ",", k, v);
        first = false;
    }
    return out + ")";
}

namespace {

class ParamReader {
public:
    explicit ParamReader(const PolicyDescriptor& d) : d_(d) {}

    double get(const std::string& key, double fallback) {
        seen_.push_back(key);
        auto it = d_.params.find(key);
        return it == d_.params.end() ? fallback : it->second;
    }

    void finish() const {
        for (const auto& [k, v] : d_.params) {
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
                throw ConfigError(fmt::format("policy '{}' has no parameter '{}'", d_.name, k));
            }
        }
    }

private:
    const PolicyDescriptor& d_;
    std::vector<std::string> seen_;
};

void check(bool ok, const PolicyDescriptor& d, std::string_view what) {
    if (!ok) {
        throw ConfigError(fmt::format("policy '{}': {}", d.name, what));
    }
}

} // namespace

std::unique_ptr<Policy> make_policy(const PolicyDescriptor& d) {
    ParamReader p(d);
    std::unique_ptr<Policy> out;
    if (d.name == "ucb_vv") {
        const double fraction = p.get("pilot_fraction", 0.0);
        check(fraction >= 0.0 && fraction <= 1.0, d, "pilot_fraction must lie in [0, 1]");
        out = std::make_unique<UcbVvPolicy>(PilotPlan{fraction});
    } else if (d.name == "shvv") {
        const double round_only = p.get("round_only", 0.0);
        const double stop_at = p.get("stop_at", 1.0);
        check(round_only == 0.0 || round_only == 1.0, d, "round_only must be 0 or 1");
        check(stop_at >= 1.0 && stop_at == std::floor(stop_at), d, "stop_at must be a positive integer");
        out = std::make_unique<ShvvPolicy>(round_only == 1.0, static_cast<std::size_t>(stop_at));
    } else if (d.name == "ucb_sharpe") {
        const double c = p.get("c", 1.0);
        check(c > 0.0, d, "c must be positive");
        out = std::make_unique<UcbSharpePolicy>(c);
    } else if (d.name == "eps_greedy") {
        const double eps = p.get("epsilon", 0.1);
        check(eps >= 0.0 && eps <= 1.0, d, "epsilon must lie in [0, 1]");
        out = std::make_unique<EpsilonGreedyPolicy>(eps);
    } else if (d.name == "vts") {
        NigPrior prior;
        prior.mu0 = p.get("mu0", prior.mu0);
        prior.kappa0 = p.get("kappa0", prior.kappa0);
        prior.alpha0 = p.get("alpha0", prior.alpha0);
        prior.beta0 = p.get("beta0", prior.beta0);
        check(prior.kappa0 > 0.0 && prior.alpha0 > 0.0 && prior.beta0 > 0.0, d,
              "kappa0, alpha0 and beta0 must be positive");
        out = std::make_unique<VtsPolicy>(prior);
    } else if (d.name == "kl_ucb") {
        out = std::make_unique<KlUcbPolicy>();
    } else if (d.name == "uniform") {
        out = std::make_unique<UniformBaiPolicy>();
    } else if (d.name == "ucb1") {
        out = std::make_unique<Ucb1Policy>();
    } else {
        throw ConfigError(fmt::format("unknown policy '{}'", d.name));
    }
    p.finish();
    return out;
}

} // namespace varbandit
