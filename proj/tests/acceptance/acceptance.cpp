// Acceptance suite. Each criterion prints one line:
//   AC<n> PASS|FAIL <title> | <measurements> | <seconds>s (limit <limit>s)
// Run all criteria, or one with --criterion N. Exit status is nonzero if any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "varbandit/bounds.hpp"
#include "varbandit/config.hpp"
#include "varbandit/harness.hpp"
#include "varbandit/report.hpp"
#include "varbandit/seeding.hpp"
#include "varbandit/stats.hpp"

namespace {

using namespace varbandit;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += (ok ? "" : "VIOLATED ") + what;
    }
};

struct Criterion {
    int id;
    std::string title;
    double limit_seconds;
    std::function<Outcome()> run;
};

// Mean and standard error of paired differences a_r - b_r.
std::pair<double, double> paired(const std::vector<double>& a, const std::vector<double>& b) {
    RunningStats s;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s.push(a[i] - b[i]);
    }
    return {s.mean(), std::sqrt(s.unbiased_variance() / static_cast<double>(s.count()))};
}

std::vector<DistributionSpec> variance_pair(double delta) {
    return {DistributionSpec::uniform(0.0, 1.0), DistributionSpec::uniform_with_variance(0.5, 1.0 / 12.0 + delta)};
}

ExperimentConfig regret_config(double delta, std::uint64_t n, std::uint64_t reps,
                               std::vector<PolicyDescriptor> policies) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::regret;
    cfg.arms = variance_pair(delta);
    cfg.horizon = n;
    cfg.replications = reps;
    cfg.base_seed = 20240;
    cfg.policies = std::move(policies);
    return cfg;
}

// Two-pass reference in extended precision.
std::pair<long double, long double> two_pass(const std::vector<double>& xs) {
    long double sum = 0.0L;
    for (double x : xs) {
        sum += x;
    }
    const long double mean = sum / static_cast<long double>(xs.size());
    long double ss = 0.0L;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, ss};
}

Outcome estimator_oracle() {
    Outcome o;
    Rng rng(1);
    std::uniform_int_distribution<std::size_t> len(2, 10000);
    std::uniform_real_distribution<double> scale(-3.0, 3.0);
    double worst_mean = 0.0;
    double worst_var = 0.0;
    for (int seq = 0; seq < 1000; ++seq) {
        const std::size_t n = len(rng);
        const double s = std::pow(10.0, scale(rng));
        std::normal_distribution<double> z(s * 0.3, s);
        std::vector<double> xs(n);
        RunningStats st;
        for (auto& x : xs) {
            x = z(rng);
            st.push(x);
        }
        const auto [mean, ss] = two_pass(xs);
        const double ref_b = static_cast<double>(ss / n);
        const double ref_u = static_cast<double>(ss / (n - 1));
        worst_mean = std::max(worst_mean, std::abs(st.mean() - static_cast<double>(mean)) /
                                              std::max(std::abs(static_cast<double>(mean)), s * 1e-3));
        worst_var = std::max({worst_var, std::abs(st.biased_variance() - ref_b) / ref_b,
                              std::abs(st.unbiased_variance() - ref_u) / ref_u});
    }
    o.require(worst_var <= 1e-12, fmt::format("max rel. variance error {:.3g} <= 1e-12", worst_var));
    o.require(worst_mean <= 1e-12, fmt::format("max rel. mean error {:.3g} <= 1e-12", worst_mean));
    return o;
}

Outcome variance_bound_domination() {
    Outcome o;
    int points = 0;
    int ok = 0;
    double worst_margin = -1.0;
    for (const auto& spec : {DistributionSpec::uniform(0.0, 1.0), DistributionSpec::bernoulli(0.5)}) {
        for (std::uint64_t n : {20u, 50u, 100u, 200u}) {
            for (double eps : {0.05, 0.1, 0.2}) {
                const auto e = empirical_tail_probability(spec, n, eps, 10000, mix_seed(n, eps * 1000));
                const double bound = 2.0 * std::exp(-2.0 * n * eps * eps);
                const double margin = e.probability - (bound + 3 * e.standard_error);
                worst_margin = std::max(worst_margin, margin);
                ++points;
                ok += margin <= 0.0;
            }
        }
    }
    o.require(ok == points, fmt::format("{}/{} grid points dominated (largest p_hat - bound - 3SE = {:.4f})", ok,
                                        points, worst_margin));
    return o;
}

Outcome ucb_vv_log_shape() {
    Outcome o;
    const double delta = 0.1;
    const auto res = run_regret_experiment(regret_config(delta, 5000, 200, {{"ucb_vv", {}, ""}}));
    const auto& c = res.curves[0];
    ProblemInstance inst;
    inst.gaps = {delta, 0.0};
    inst.n = 5000;
    const double bound = ucb_vv_regret_bound(inst);
    const double r5000 = c.mean[4999];
    const double r2500 = c.mean[2499];
    const double slope = 8.0 * std::numbers::ln2 / delta;
    o.require(r5000 <= bound, fmt::format("mean regret(5000) {:.2f} (SE {:.2f}) <= bound {:.2f}", r5000,
                                          c.standard_error[4999], bound));
    o.require(r5000 - r2500 <= 1.2 * slope,
              fmt::format("R(5000)-R(2500) {:.2f} <= 1.2 x {:.2f} = {:.2f}", r5000 - r2500, slope, 1.2 * slope));
    return o;
}

Outcome regret_ordering() {
    Outcome o;
    const std::vector<PolicyDescriptor> pols{
        {"vts", {}, ""}, {"ucb_vv", {}, ""}, {"eps_greedy", {{"epsilon", 0.1}}, ""}, {"eps_greedy", {{"epsilon", 0.2}}, ""}};
    auto check = [&](const RegretResult& r, std::size_t lo, std::size_t hi, double delta) {
        const auto [d, se] = paired(r.curves[hi].final_regret, r.curves[lo].final_regret);
        o.require(d > 2 * se, fmt::format("delta={}: {} {:.2f} < {} {:.2f} (paired diff {:.2f}, 2SE {:.2f})", delta,
                                          r.curves[lo].label, r.curves[lo].mean.back(), r.curves[hi].label,
                                          r.curves[hi].mean.back(), d, 2 * se));
    };
    const auto narrow = run_regret_experiment(regret_config(0.1, 5000, 200, pols));
    check(narrow, 0, 1, 0.1);
    check(narrow, 1, 2, 0.1);
    const auto wide = run_regret_experiment(regret_config(0.5, 5000, 200, pols));
    check(wide, 1, 2, 0.5);
    check(wide, 1, 3, 0.5);
    return o;
}

Outcome bai_error_rates() {
    Outcome o;
    for (int setup = 1; setup <= 5; ++setup) {
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::bai;
        cfg.setup = BaiSetupSpec{setup, {16, 32, 64}};
        cfg.horizon = 2000;
        cfg.replications = 2000;
        cfg.base_seed = 31337;
        cfg.policies = {{"shvv", {}, ""}, {"uniform", {}, ""}};
        const auto rows = run_bai_experiment(cfg);
        std::vector<const ErrorRate*> shvv;
        std::string cells;
        for (std::size_t i = 0; i < rows.size(); i += 2) {
            const auto& s = rows[i];
            const auto& u = rows[i + 1];
            shvv.push_back(&s);
            o.require(s.error_rate <= u.error_rate, fmt::format("exp{} K={}: shvv {:.4f} <= uniform {:.4f}", setup,
                                                                s.arm_count, s.error_rate, u.error_rate));
        }
        if (setup <= 4) {
            for (std::size_t j = 1; j < shvv.size(); ++j) {
                const double tol = 3 * std::hypot(shvv[j]->standard_error, shvv[j - 1]->standard_error);
                o.require(shvv[j]->error_rate >= shvv[j - 1]->error_rate - tol,
                          fmt::format("exp{} shvv K={} {:.4f} >= K={} {:.4f} - 3SE", setup, shvv[j]->arm_count,
                                      shvv[j]->error_rate, shvv[j - 1]->arm_count, shvv[j - 1]->error_rate));
            }
        }
    }
    return o;
}

Outcome shvv_bound_domination() {
    Outcome o;
    const std::size_t k = 4;
    const std::uint64_t n = 100000;
    // Equal suboptimal gaps delta give H2 = 4 / delta^2; pick delta so the
    // bound equals 0.5 at n.
    const double log_k = std::log2(double(k));
    const double h2 = std::pow(n - k * log_k, 2) / (8.0 * n * log_k * std::log(3.0 * log_k / 0.5));
    const double delta = std::sqrt(4.0 / h2);
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::bai;
    cfg.arms = {DistributionSpec::uniform(0.0, 1.0)};
    for (std::size_t i = 1; i < k; ++i) {
        cfg.arms.push_back(DistributionSpec::uniform_with_variance(0.5, 1.0 / 12.0 - delta));
    }
    cfg.horizon = n;
    cfg.replications = 2000;
    cfg.base_seed = 99;
    cfg.policies = {{"shvv", {{"round_only", 1.0}}, ""}};
    std::vector<double> v;
    for (const auto& a : cfg.arms) {
        v.push_back(true_variance(a));
    }
    auto inst = ProblemInstance::from_values(v, n);
    const auto bound = shvv_error_bound(inst);
    const auto rows = run_bai_experiment(cfg);
    o.require(!bound.vacuous && std::abs(bound.value - 0.5) < 0.01,
              fmt::format("engineered gap {:.5f}, H2 {:.1f}, bound {:.4f}", delta, complexity_h2(inst), bound.value));
    o.require(rows[0].error_rate <= bound.value + 3 * rows[0].standard_error,
              fmt::format("empirical error {:.4f} (SE {:.4f}) <= bound + 3SE", rows[0].error_rate,
                          rows[0].standard_error));
    return o;
}

struct Fit {
    double slope;
    double r2;
};

Fit ols(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return {sxy / sxx, syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0};
}

Outcome decay_shape() {
    Outcome o;
    const std::vector<double> ns{50, 100, 200, 400};
    auto check = [&](const char* what, const DistributionSpec& spec, double eps, TailStatistic stat) {
        std::vector<double> logp;
        std::string probs;
        for (double n : ns) {
            const auto e = empirical_tail_probability(spec, static_cast<std::uint64_t>(n), eps, 200000,
                                                      mix_seed(static_cast<std::uint64_t>(n), 7), stat);
            logp.push_back(std::log(std::max(e.probability, 0.5 / 200000.0)));
            probs += fmt::format("{}{:.2e}", probs.empty() ? "" : ",", e.probability);
        }
        const auto all = ols(ns, logp);
        const double lower = (logp[1] - logp[0]) / (ns[1] - ns[0]);
        const double upper = (logp[3] - logp[2]) / (ns[3] - ns[2]);
        const double ratio = std::max(std::abs(lower), std::abs(upper)) / std::min(std::abs(lower), std::abs(upper));
        o.require(all.slope < 0.0 && all.r2 >= 0.9 && lower < 0.0 && upper < 0.0 && ratio <= 3.0,
                  fmt::format("{}: p=[{}], slope {:.4f}, R2 {:.3f}, half-grid slope ratio {:.2f}", what, probs,
                              all.slope, all.r2, ratio));
    };
    const auto g = DistributionSpec::gaussian(1.0, 1.0);
    check("|V-sigma2|>0.2", g, 0.2, TailStatistic::variance);
    check("|S-S*|>0.3", g, 0.3, TailStatistic::sharpe);
    return o;
}

Outcome ucb_sharpe_sanity() {
    Outcome o;
    const std::vector<DistributionSpec> arms{DistributionSpec::gaussian(1.0, std::sqrt(0.5)),
                                             DistributionSpec::gaussian(0.5, std::sqrt(0.5))};
    const int reps = 100;
    double share = 0.0;
    double sub_half = 0.0;
    double sub_full = 0.0;
    for (int r = 0; r < reps; ++r) {
        UcbSharpePolicy p(1.0);
        const auto rec = run_policy(p, arms, 5000, environment_seed(5, r), derive_seed(5, r, 0), false, true);
        std::uint64_t sub = 0;
        for (std::size_t t = 0; t < rec.actions.size(); ++t) {
            sub += rec.actions[t] == 1;
            if (t + 1 == 2500) {
                sub_half += static_cast<double>(sub) / reps;
            }
        }
        sub_full += static_cast<double>(sub) / reps;
        share += static_cast<double>(rec.pull_counts[0] - 2) / (5000.0 - 4.0) / reps;
    }
    o.require(share >= 0.9, fmt::format("optimal share of post-init pulls {:.4f} >= 0.9", share));
    o.require(sub_full / sub_half < 1.8, fmt::format("suboptimal pulls {:.1f} at 5000 / {:.1f} at 2500 = {:.3f} < 1.8",
                                                     sub_full, sub_half, sub_full / sub_half));
    return o;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome case_study() {
    Outcome o;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::case_study;
    cfg.replications = 50;
    cfg.base_seed = 2024;
    const auto reports = run_case_study(cfg);
    std::vector<double> pipeline;
    std::vector<double> baseline;
    int schema_ok = 0;
    for (const auto& r : reports) {
        pipeline.push_back(r.pipeline_profit.back());
        baseline.push_back(r.baseline_profit.back());
        schema_ok += report_matches_schema(r, 8, 100);
    }
    o.require(median(pipeline) >= median(baseline),
              fmt::format("median profit pipeline {:.2f} >= UCB1 {:.2f}", median(pipeline), median(baseline)));
    o.require(schema_ok == 50, fmt::format("{}/50 reports match the 8-stock schema", schema_ok));
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / fmt::format("varbandit_acceptance_{}", ::getpid());
    for (const char* name : {"quick_regret.json", "quick_bai.json", "quick_casestudy.json", "bounds.json"}) {
        const auto doc = load_config_json(fs::path(VARBANDIT_CONFIGS) / name);
        std::vector<fs::path> dirs;
        std::vector<std::string> files;
        for (std::size_t run = 0; run < 3; ++run) {
            auto cfg = parse_config(doc);
            cfg.parallelism = run == 2 ? 8 : 1;
            dirs.push_back(root / fmt::format("{}_{}", name, run));
            files = run_and_write(cfg, doc, dirs.back());
        }
        std::size_t csvs = 0;
        bool same = true;
        for (const auto& f : files) {
            if (fs::path(f).extension() != ".csv") {
                continue;
            }
            ++csvs;
            const auto a = slurp(dirs[0] / f);
            same = same && !a.empty() && a == slurp(dirs[1] / f) && a == slurp(dirs[2] / f);
        }
        o.require(same && csvs > 0, fmt::format("{}: {} CSVs identical across reruns at parallelism 1,1,8", name, csvs));
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    return o;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "Run one criterion (1-10); default all")->check(CLI::Range(0, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "estimator oracle equivalence", 10, estimator_oracle},
        {2, "Hoeffding-type variance bound domination", 120, variance_bound_domination},
        {3, "UCB-VV regret bound and logarithmic growth", 300, ucb_vv_log_shape},
        {4, "regret ordering VTS < UCB-VV < eps-greedy", 600, regret_ordering},
        {5, "SHVV vs uniform error rates across setups", 900, bai_error_rates},
        {6, "SHVV error bound domination where non-vacuous", 300, shvv_bound_domination},
        {7, "sub-Gaussian variance and Sharpe tail decay shape", 180, decay_shape},
        {8, "UCB-Sharpe concentrates on the best arm", 120, ucb_sharpe_sanity},
        {9, "case study pipeline vs UCB1 and report schema", 600, case_study},
        {10, "byte-identical outputs across reruns and workers", 120, determinism},
    };

    bool all_pass = true;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.require(false, fmt::format("exception: {}", e.what()));
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.require(secs < c.limit_seconds, fmt::format("runtime {:.1f}s < {:.0f}s", secs, c.limit_seconds));
        all_pass = all_pass && out.pass;
        std::cout << fmt::format("AC{} {} {} | {}\n", c.id, out.pass ? "PASS" : "FAIL", c.title, out.detail)
                  << std::flush;
    }
    return all_pass ? 0 : 1;
}
