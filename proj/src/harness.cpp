#include "varbandit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "varbandit/errors.hpp"
#include "varbandit/parallel.hpp"
#include "varbandit/seeding.hpp"
#include "varbandit/stats.hpp"

namespace varbandit {

namespace {

// Replications are computed in parallel chunks and folded in order.
constexpr std::size_t kChunk = 256;

std::size_t best_arm(const std::vector<DistributionSpec>& arms) {
    std::vector<double> v;
    v.reserve(arms.size());
    for (const auto& a : arms) {
        v.push_back(true_variance(a));
    }
    return argmax_lowest(v);
}

bool all_bernoulli(const std::vector<DistributionSpec>& arms) {
    return std::all_of(arms.begin(), arms.end(), [](const auto& a) { return a.is_bernoulli(); });
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::regret:
        return "regret";
    case ExperimentKind::bai:
        return "bai";
    case ExperimentKind::bound_sweep:
        return "bound_sweep";
    case ExperimentKind::case_study:
        return "case_study";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (replications < 1) {
        fail("replications must be >= 1");
    }
    if (parallelism < 1) {
        fail("parallelism must be >= 1");
    }
    if (output.trace_points < 1) {
        fail("output.trace_points must be >= 1");
    }
    switch (kind) {
    case ExperimentKind::regret: {
        if (arms.empty()) {
            fail("regret experiments need at least one arm");
        }
        if (horizon < 1) {
            fail("horizon must be >= 1");
        }
        if (policies.empty()) {
            fail("at least one policy is required");
        }
        for (const auto& d : policies) {
            const auto p = make_policy(d);
            if (p->identifies()) {
                fail(fmt::format("policy '{}' is an identification policy; use kind 'bai'", d.name));
            }
            if (p->bernoulli_only() && !all_bernoulli(arms)) {
                fail(fmt::format("policy '{}' needs Bernoulli arms", d.name));
            }
        }
        break;
    }
    case ExperimentKind::bai: {
        if (arms.empty() == !setup.has_value()) {
            fail("bai experiments need exactly one of 'arms' or 'setup'");
        }
        if (setup) {
            if (setup->experiment < 1 || setup->experiment > 6) {
                fail("setup.experiment must be in 1..6");
            }
            if (setup->arm_counts.empty()) {
                fail("setup.K must list at least one arm count");
            }
            for (auto k : setup->arm_counts) {
                if (k < 2) {
                    fail("setup.K values must be >= 2");
                }
            }
        } else if (arms.size() < 2) {
            fail("bai experiments need at least two arms");
        }
        if (horizon < 1 && !(setup && setup->experiment == 6)) {
            fail("horizon must be >= 1");
        }
        if (policies.empty()) {
            fail("at least one policy is required");
        }
        for (const auto& d : policies) {
            if (!make_policy(d)->identifies()) {
                fail(fmt::format("policy '{}' does not produce a recommendation; use kind 'regret'", d.name));
            }
        }
        break;
    }
    case ExperimentKind::case_study: {
        const auto& cs = case_study;
        if (cs.stocks < 2) {
            fail("case_study.stocks must be >= 2");
        }
        if (cs.shortlist < 1 || cs.shortlist >= cs.stocks) {
            fail("case_study.shortlist must be in [1, stocks)");
        }
        if (cs.window < 2) {
            fail("case_study.window must be >= 2");
        }
        if (cs.trading_steps < 1) {
            fail("case_study.trading_steps must be >= 1");
        }
        auto check_range = [&](std::pair<double, double> r, const char* name, double min) {
            if (!(r.first <= r.second) || r.first < min) {
                fail(fmt::format("case_study.{} must be an ordered range with lower end >= {}", name, min));
            }
        };
        check_range(cs.ranges.vol, "vol_range", 0.0);
        check_range(cs.ranges.s0, "s0_range", 1e-12);
        check_range(cs.ranges.drift, "drift_range", -1e300);
        if (!(cs.ranges.dt > 0.0)) {
            fail("case_study.dt must be positive");
        }
        break;
    }
    case ExperimentKind::bound_sweep:
        if (bounds.empty()) {
            fail("bound_sweep experiments need at least one bound entry");
        }
        for (const auto& b : bounds) {
            for (const auto& [name, values] : b.grid) {
                if (values.empty()) {
                    fail(fmt::format("bound '{}': grid '{}' is empty", b.name, name));
                }
            }
        }
        break;
    }
}

// --- single runs -----------------------------------------------------------

RewardTape::RewardTape(const std::vector<DistributionSpec>& arms, std::uint64_t env_seed) : arms_(&arms) {
    streams_.reserve(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) {
        streams_.emplace_back(arm_seed(env_seed, i));
    }
}

double RewardTape::pull(std::size_t arm) { return sample((*arms_)[arm], streams_.at(arm)); }

RunRecord run_policy(Policy& policy, const std::vector<DistributionSpec>& arms, std::uint64_t horizon,
                     std::uint64_t env_seed, std::uint64_t policy_seed, bool track_regret, bool keep_actions) {
    const std::size_t k = arms.size();
    policy.reset(k, horizon, policy_seed);
    RewardTape tape(arms, env_seed);
    std::vector<RunningStats> stats(k);

    std::vector<double> gaps(k, 0.0);
    if (track_regret) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : arms) {
            best = std::max(best, true_variance(a));
        }
        for (std::size_t i = 0; i < k; ++i) {
            gaps[i] = best - true_variance(arms[i]);
        }
    }

    RunRecord rec;
    if (track_regret) {
        rec.regret_trace.reserve(horizon);
    }
    double regret = 0.0;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        if (policy.identifies() && policy.finished()) {
            break;
        }
        const PolicyContext ctx{t, stats, horizon};
        const std::size_t a = policy.select(ctx);
        if (a >= k) {
            throw std::logic_error(fmt::format("policy '{}' selected arm {} of {}", policy.kind(), a, k));
        }
        const double x = tape.pull(a);
        stats[a].push(x);
        policy.observe(a, x);
        if (keep_actions) {
            rec.actions.push_back(static_cast<std::uint32_t>(a));
        }
        if (track_regret) {
            regret += gaps[a];
            rec.regret_trace.push_back(regret);
        }
    }
    rec.pull_counts.reserve(k);
    for (const auto& s : stats) {
        rec.pull_counts.push_back(s.count());
    }
    if (policy.identifies()) {
        rec.recommendation = policy.recommendation();
        if (!rec.recommendation) {
            throw std::logic_error(fmt::format("policy '{}' ended without a recommendation", policy.kind()));
        }
        rec.correct = *rec.recommendation == best_arm(arms);
    }
    return rec;
}

// --- regret ----------------------------------------------------------------

RegretResult run_regret_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::regret) {
        throw ConfigError("run_regret_experiment needs kind 'regret'");
    }
    cfg.validate();
    const std::size_t num_policies = cfg.policies.size();
    const std::uint64_t n = cfg.horizon;
    const std::size_t k = cfg.arms.size();

    std::vector<std::vector<RunningStats>> per_t(num_policies, std::vector<RunningStats>(n));
    RegretResult result;
    result.horizon = n;
    result.replications = cfg.replications;
    result.curves.resize(num_policies);
    for (std::size_t p = 0; p < num_policies; ++p) {
        result.curves[p].label = cfg.policies[p].display_label();
        result.curves[p].mean_pulls.assign(k, 0.0);
    }

    for (std::uint64_t r0 = 0; r0 < cfg.replications; r0 += kChunk) {
        const std::uint64_t r1 = std::min<std::uint64_t>(cfg.replications, r0 + kChunk);
        const std::size_t jobs = static_cast<std::size_t>(r1 - r0) * num_policies;
        std::vector<RunRecord> records(jobs);
        parallel_for(jobs, cfg.parallelism, [&](std::size_t j) {
            const std::uint64_t rep = r0 + j / num_policies;
            const std::size_t p = j % num_policies;
            auto policy = make_policy(cfg.policies[p]);
            records[j] = run_policy(*policy, cfg.arms, n, environment_seed(cfg.base_seed, rep),
                                    derive_seed(cfg.base_seed, rep, p), true);
            records[j].replication_id = rep;
        });
        for (std::size_t j = 0; j < jobs; ++j) {
            const std::size_t p = j % num_policies;
            const auto& rec = records[j];
            for (std::uint64_t t = 0; t < n; ++t) {
                per_t[p][t].push(rec.regret_trace[t]);
            }
            for (std::size_t i = 0; i < k; ++i) {
                result.curves[p].mean_pulls[i] += static_cast<double>(rec.pull_counts[i]);
            }
            result.curves[p].final_regret.push_back(rec.regret_trace.back());
        }
    }

    const double reps = static_cast<double>(cfg.replications);
    for (std::size_t p = 0; p < num_policies; ++p) {
        auto& c = result.curves[p];
        c.mean.resize(n);
        c.standard_error.resize(n);
        for (std::uint64_t t = 0; t < n; ++t) {
            const auto& s = per_t[p][t];
            c.mean[t] = s.mean();
            c.standard_error[t] = s.count() >= 2 ? std::sqrt(s.unbiased_variance() / reps) : 0.0;
        }
        for (auto& m : c.mean_pulls) {
            m /= reps;
        }
    }
    return result;
}

// --- BAI -------------------------------------------------------------------

std::vector<DistributionSpec> build_bai_setup(int experiment, std::size_t arm_count, Rng* rng) {
    if (arm_count < 2) {
        throw InputError("build_bai_setup: needs K >= 2");
    }
    constexpr double kBest = 1.0 / 12.0;
    std::vector<DistributionSpec> arms{DistributionSpec::uniform(0.0, 1.0)};
    if (experiment == 5) {
        if (rng == nullptr) {
            throw InputError("build_bai_setup: experiment 5 needs a random stream");
        }
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (std::size_t i = 2; i <= arm_count; ++i) {
            double l = 0.0;
            double u = 0.0;
            while (!(l < u)) {
                l = u01(*rng);
                u = u01(*rng);
                if (u < l) {
                    std::swap(l, u);
                }
            }
            arms.push_back(DistributionSpec::uniform(l, u));
        }
        return arms;
    }
    const std::size_t first_group_end = std::max<std::size_t>(2, arm_count / 2 - 2);
    for (std::size_t i = 2; i <= arm_count; ++i) {
        double v = 0.0;
        switch (experiment) {
        case 1:
        case 6:
            v = 1.0 / 15.0;
            break;
        case 2:
            v = i <= first_group_end ? 1.0 / 14.0 : 1.0 / 17.0;
            break;
        case 3:
            // The progression turns negative past i = 38; floor it.
            v = std::max(1.0 / 13.0 - 0.0021 * static_cast<double>(i - 2), 1e-3);
            break;
        case 4:
            v = kBest * std::pow(0.98, static_cast<double>(i));
            break;
        default:
            throw InputError(fmt::format("build_bai_setup: unknown experiment {}", experiment));
        }
        if (v > kBest) {
            throw InputError(fmt::format("build_bai_setup: arm {} target variance {} exceeds 1/12", i, v));
        }
        arms.push_back(DistributionSpec::uniform_with_variance(0.5, v));
    }
    return arms;
}

std::uint64_t bai_budget(int experiment, std::size_t arm_count, std::uint64_t n) {
    return experiment == 6 ? 125 * static_cast<std::uint64_t>(arm_count) : n;
}

std::vector<ErrorRate> run_bai_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::bai) {
        throw ConfigError("run_bai_experiment needs kind 'bai'");
    }
    cfg.validate();
    struct Cell {
        std::size_t k;
        std::uint64_t budget;
    };
    std::vector<Cell> cells;
    if (cfg.setup) {
        for (auto k : cfg.setup->arm_counts) {
            cells.push_back({k, bai_budget(cfg.setup->experiment, k, cfg.horizon)});
        }
    } else {
        cells.push_back({cfg.arms.size(), cfg.horizon});
    }
    // Reject infeasible schedules before any replication runs.
    for (const auto& d : cfg.policies) {
        if (d.name != "shvv") {
            continue;
        }
        const auto stop = d.params.count("stop_at") ? static_cast<std::size_t>(d.params.at("stop_at")) : 1;
        for (const auto& c : cells) {
            (void)shvv_schedule(c.k, c.budget, stop);
        }
    }

    const std::string setup_label = cfg.setup ? fmt::format("exp{}", cfg.setup->experiment) : "custom";
    const std::size_t num_policies = cfg.policies.size();
    std::vector<ErrorRate> rows;
    for (const auto& cell : cells) {
        std::vector<ErrorRate> cell_rows(num_policies);
        for (std::size_t p = 0; p < num_policies; ++p) {
            auto& row = cell_rows[p];
            row.setup = setup_label;
            row.policy = cfg.policies[p].display_label();
            row.arm_count = cell.k;
            row.budget = cell.budget;
            row.replications = cfg.replications;
            row.correct.resize(cfg.replications);
        }
        const std::size_t jobs = static_cast<std::size_t>(cfg.replications) * num_policies;
        parallel_for(jobs, cfg.parallelism, [&](std::size_t j) {
            const std::uint64_t rep = j / num_policies;
            const std::size_t p = j % num_policies;
            const std::uint64_t env = mix_seed(environment_seed(cfg.base_seed, rep), cell.k);
            std::vector<DistributionSpec> arms;
            if (cfg.setup) {
                Rng setup_rng(mix_seed(env, 0x5e7u));
                arms = build_bai_setup(cfg.setup->experiment, cell.k, &setup_rng);
            } else {
                arms = cfg.arms;
            }
            auto policy = make_policy(cfg.policies[p]);
            const auto rec = run_policy(*policy, arms, cell.budget, env, derive_seed(cfg.base_seed, rep, p), false);
            cell_rows[p].correct[rep] = rec.correct ? 1 : 0;
        });
        for (auto& row : cell_rows) {
            std::uint64_t wrong = 0;
            for (auto c : row.correct) {
                wrong += c ? 0 : 1;
            }
            const double reps = static_cast<double>(row.replications);
            row.error_rate = static_cast<double>(wrong) / reps;
            row.standard_error = std::sqrt(row.error_rate * (1.0 - row.error_rate) / reps);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// --- case study ------------------------------------------------------------

bool report_matches_schema(const CaseStudyReport& report, std::size_t shortlist, std::size_t stocks) {
    if (report.top_stocks.size() != shortlist || report.rewards.size() != shortlist) {
        return false;
    }
    std::set<std::size_t> ids(report.top_stocks.begin(), report.top_stocks.end());
    if (ids.size() != shortlist || *ids.rbegin() >= stocks) {
        return false;
    }
    double sum = 0.0;
    for (double r : report.rewards) {
        if (!std::isfinite(r)) {
            return false;
        }
        sum += r;
    }
    const double scale = std::max(1.0, std::abs(sum));
    return std::abs(sum - report.total_reward) <= 1e-9 * scale && report.total_premium >= 0.0 &&
           std::isfinite(report.total_premium);
}

CaseStudyReport run_case_study_market(const CaseStudyConfig& cfg, std::uint64_t env_seed, std::uint64_t market_id) {
    Rng spec_rng(mix_seed(env_seed, 0x6762u));
    const auto specs = sample_gbm_universe(cfg.ranges, cfg.stocks, spec_rng);

    const auto schedule = shvv_schedule(cfg.stocks, cfg.shortlist_budget, cfg.shortlist);
    std::uint64_t shortlist_days = 0;
    for (const auto& r : schedule) {
        shortlist_days += r.pulls_per_arm;
    }
    const std::size_t trade_start = cfg.window + static_cast<std::size_t>(shortlist_days);
    const std::size_t total_days = trade_start + static_cast<std::size_t>(cfg.trading_steps);

    std::vector<std::vector<double>> paths;
    paths.reserve(cfg.stocks);
    for (std::size_t s = 0; s < cfg.stocks; ++s) {
        Rng path_rng(arm_seed(env_seed, s));
        paths.push_back(simulate_gbm_path(specs[s], total_days, path_rng));
    }
    auto daily_return = [&](std::size_t stock, std::size_t day) {
        return (paths[stock][day] - paths[stock][day - 1]) / paths[stock][day - 1];
    };

    // Phase 1: the k-th pull of a stock yields its k-th return after warm-up.
    ShvvState shvv(cfg.stocks, cfg.shortlist_budget, cfg.round_only, cfg.shortlist);
    std::vector<std::size_t> pulls(cfg.stocks, 0);
    CaseStudyReport report;
    report.market_id = market_id;
    while (!shvv.finished()) {
        const std::size_t s = shvv.next_arm();
        ++pulls[s];
        shvv.record(s, daily_return(s, cfg.window + pulls[s]));
        ++report.shortlist_pulls;
    }
    report.top_stocks = shvv.active();
    const std::size_t m = report.top_stocks.size();
    report.rewards.assign(m, 0.0);

    MarketState market(cfg.stocks, cfg.window);
    std::vector<double> closes(cfg.stocks);
    auto push_day = [&](std::size_t day) {
        for (std::size_t s = 0; s < cfg.stocks; ++s) {
            closes[s] = paths[s][day];
        }
        market.push_closes(closes);
    };
    for (std::size_t day = 0; day <= trade_start; ++day) {
        push_day(day);
    }

    // Phase 2: UCB-VV on rolling-window variance over the shortlist, and the
    // UCB1 mean-return baseline over every stock, on the same trading days.
    std::vector<std::uint64_t> selections(m, 0);
    std::vector<RunningStats> baseline_stats(cfg.stocks);
    const double dt = cfg.ranges.dt;
    double pipeline_cum = 0.0;
    double baseline_cum = 0.0;
    auto trade = [&](std::size_t stock, std::size_t day, double& premium) {
        const auto window = market.rolling_returns(stock);
        const double prev = paths[stock][day - 1];
        const auto quote = cfg.terms.quote(prev, window, dt);
        const double close = paths[stock][day];
        if (close > quote.strike) {
            premium += quote.premium;
            return option_payoff(close, quote);
        }
        return 0.0;
    };
    for (std::uint64_t t = 1; t <= cfg.trading_steps; ++t) {
        const std::size_t day = trade_start + static_cast<std::size_t>(t);

        std::size_t j = 0;
        if (t <= m) {
            j = static_cast<std::size_t>(t - 1);
        } else {
            std::vector<double> idx(m);
            for (std::size_t i = 0; i < m; ++i) {
                RunningStats w;
                for (double r : market.rolling_returns(report.top_stocks[i])) {
                    w.push(r);
                }
                idx[i] = w.biased_variance() + ucb_vv_bonus(selections[i], static_cast<double>(t - 1));
            }
            j = argmax_lowest(idx);
        }
        ++selections[j];
        const double pay = trade(report.top_stocks[j], day, report.total_premium);
        report.rewards[j] += pay;
        pipeline_cum += pay;
        report.pipeline_profit.push_back(pipeline_cum);

        const PolicyContext ctx{t, baseline_stats, cfg.trading_steps};
        const std::size_t b = ucb1_select(ctx);
        baseline_cum += trade(b, day, report.baseline_premium);
        baseline_stats[b].push(daily_return(b, day));
        report.baseline_profit.push_back(baseline_cum);

        push_day(day);
    }
    for (double r : report.rewards) {
        report.total_reward += r;
    }
    return report;
}

std::vector<CaseStudyReport> run_case_study(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::case_study) {
        throw ConfigError("run_case_study needs kind 'case_study'");
    }
    cfg.validate();
    (void)shvv_schedule(cfg.case_study.stocks, cfg.case_study.shortlist_budget, cfg.case_study.shortlist);
    std::vector<CaseStudyReport> reports(cfg.replications);
    parallel_for(reports.size(), cfg.parallelism, [&](std::size_t m) {
        reports[m] = run_case_study_market(cfg.case_study, environment_seed(cfg.base_seed, m), m);
    });
    return reports;
}

// --- bound sweep -----------------------------------------------------------

std::vector<BoundRow> run_bound_sweep(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::bound_sweep) {
        throw ConfigError("run_bound_sweep needs kind 'bound_sweep'");
    }
    cfg.validate();
    std::vector<BoundRow> rows;
    for (const auto& entry : cfg.bounds) {
        std::vector<std::size_t> pos(entry.grid.size(), 0);
        // Odometer over the grid, last parameter fastest.
        auto advance = [&] {
            for (std::size_t g = entry.grid.size(); g-- > 0;) {
                if (++pos[g] < entry.grid[g].second.size()) {
                    return true;
                }
                pos[g] = 0;
            }
            return false;
        };
        do {
            std::vector<std::pair<std::string, double>> params;
            for (std::size_t g = 0; g < entry.grid.size(); ++g) {
                params.emplace_back(entry.grid[g].first, entry.grid[g].second.at(pos[g]));
            }
            rows.push_back(evaluate_bound(entry.name, params, entry.gaps));
        } while (advance());
    }
    return rows;
}

} // namespace varbandit
