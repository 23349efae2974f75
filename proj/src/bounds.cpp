#include "varbandit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "varbandit/errors.hpp"
#include "varbandit/parallel.hpp"
#include "varbandit/seeding.hpp"
#include "varbandit/stats.hpp"

namespace varbandit {

namespace {

BoundValue clamp_probability(double raw) {
    if (!(raw < 1.0)) {
        return {1.0, true};
    }
    return {std::max(0.0, raw), false};
}

std::vector<double> suboptimal_gaps(const ProblemInstance& instance) {
    instance.validate();
    std::vector<double> out;
    bool skipped_best = false;
    for (double g : instance.gaps) {
        if (g == 0.0 && !skipped_best) {
            skipped_best = true;
            continue;
        }
        out.push_back(g);
    }
    return out;
}

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw InputError(fmt::format("{} must be positive and finite, got {}", what, x));
    }
}

} // namespace

void ProblemInstance::validate() const {
    if (gaps.empty()) {
        throw InputError("problem instance has no arms");
    }
    bool has_zero = false;
    for (double g : gaps) {
        if (!std::isfinite(g) || g < 0.0) {
            throw InputError(fmt::format("gap {} must be finite and nonnegative", g));
        }
        has_zero = has_zero || g == 0.0;
    }
    if (!has_zero) {
        throw InputError("problem instance needs an optimal arm with gap 0");
    }
    if (support && !(support->first < support->second)) {
        throw InputError("problem instance support needs l < u");
    }
}

ProblemInstance ProblemInstance::from_values(const std::vector<double>& values, std::uint64_t n) {
    if (values.empty()) {
        throw InputError("problem instance has no arms");
    }
    const double best = *std::max_element(values.begin(), values.end());
    ProblemInstance inst;
    inst.n = n;
    for (double v : values) {
        inst.gaps.push_back(best - v);
    }
    return inst;
}

BoundValue variance_concentration_bound(std::uint64_t n, double eps, double low, double high) {
    if (n < 2) {
        throw InputError("variance_concentration_bound: n must be >= 2");
    }
    require_positive(eps, "eps");
    if (!(low < high)) {
        throw InputError("variance_concentration_bound: needs l < u");
    }
    const double w = high - low;
    return clamp_probability(2.0 * std::exp(-2.0 * static_cast<double>(n) * eps * eps / (w * w)));
}

double ucb_vv_regret_bound(const ProblemInstance& instance) {
    const auto gaps = suboptimal_gaps(instance);
    const double log_n = std::log(static_cast<double>(instance.n));
    double inverse_sum = 0.0;
    double gap_sum = 0.0;
    for (double g : gaps) {
        if (g == 0.0) {
            throw UnboundedBound("ucb_vv_regret_bound: a suboptimal arm has zero gap");
        }
        inverse_sum += log_n / g;
        gap_sum += g;
    }
    return 8.0 * inverse_sum + (1.0 + std::numbers::pi * std::numbers::pi / 3.0) * gap_sum;
}

double complexity_h2(const ProblemInstance& instance) {
    auto gaps = suboptimal_gaps(instance);
    std::sort(gaps.begin(), gaps.end());
    double h2 = 0.0;
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        if (gaps[k] == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        h2 = std::max(h2, static_cast<double>(k + 2) / (gaps[k] * gaps[k]));
    }
    return h2;
}

BoundValue shvv_round_error_bound(std::size_t num_arms, std::uint64_t n, std::size_t round, double gap_at_ir) {
    const double log_k = std::log2(static_cast<double>(num_arms));
    const double i_r = static_cast<double>(num_arms) / std::ldexp(1.0, static_cast<int>(round) + 2);
    const double nn = static_cast<double>(n);
    const double threshold = 4.0 * i_r * log_k;
    if (!(nn > threshold)) {
        return {1.0, true};
    }
    const double num = (nn - threshold) * (nn - threshold) * gap_at_ir * gap_at_ir;
    return clamp_probability(3.0 * std::exp(-num / (8.0 * nn * i_r * log_k)));
}

BoundValue shvv_error_bound(std::size_t num_arms, std::uint64_t n, double h2) {
    const double k = static_cast<double>(num_arms);
    const double log_k = std::log2(k);
    const double nn = static_cast<double>(n);
    if (!(nn > k * log_k) || !std::isfinite(h2)) {
        return {1.0, true};
    }
    const double slack = nn - k * log_k;
    return clamp_probability(3.0 * log_k * std::exp(-slack * slack / (8.0 * nn * log_k * h2)));
}

BoundValue shvv_error_bound(const ProblemInstance& instance) {
    return shvv_error_bound(instance.num_arms(), instance.n, complexity_h2(instance));
}

BoundValue subgauss_variance_bound(std::uint64_t n, double eps, double v2, double C) {
    require_positive(eps, "eps");
    require_positive(v2, "v2");
    require_positive(C, "C");
    if (n < 1) {
        throw InputError("subgauss_variance_bound: n must be >= 1");
    }
    const double rate = std::min(eps * eps / (v2 * v2), eps / v2);
    return clamp_probability(4.0 * std::exp(-C * static_cast<double>(n) * rate));
}

BoundValue sharpe_concentration_bound(std::uint64_t n, double eta, double c) {
    require_positive(eta, "eta");
    require_positive(c, "c");
    if (n < 1) {
        throw InputError("sharpe_concentration_bound: n must be >= 1");
    }
    return clamp_probability(4.0 * std::exp(-c * static_cast<double>(n) * std::min(eta * eta, eta)));
}

SharpeRegretBound ucb_sharpe_regret_bound(const ProblemInstance& instance, double c, SharpeBoundForm form,
                                          double o1_constant) {
    require_positive(c, "c");
    const auto gaps = suboptimal_gaps(instance);
    const double nn = static_cast<double>(instance.n);
    SharpeRegretBound out;
    for (double g : gaps) {
        if (g == 0.0) {
            throw UnboundedBound("ucb_sharpe_regret_bound: a suboptimal arm has zero Sharpe gap");
        }
        if (form == SharpeBoundForm::statement) {
            out.leading += 9.0 * std::log(nn) / (c * g);
        } else {
            out.leading += g * 9.0 * std::log(4.0 * nn * nn) / (c * g * g);
        }
        out.constant_term += o1_constant;
    }
    return out;
}

TailEstimate empirical_tail_probability(const DistributionSpec& spec, std::uint64_t n, double eps,
                                        std::uint64_t replications, std::uint64_t seed, TailStatistic statistic,
                                        std::size_t threads) {
    if (replications < 1000) {
        throw InputError("empirical_tail_probability: needs at least 1000 replications");
    }
    if (n < 2) {
        throw InputError("empirical_tail_probability: needs n >= 2");
    }
    require_positive(eps, "eps");
    const double var = true_variance(spec);
    double target = var;
    if (statistic == TailStatistic::sharpe) {
        if (!(var > kVarianceFloor)) {
            throw DegenerateSharpe("empirical_tail_probability: arm has zero variance");
        }
        target = true_mean(spec) / var;
    }

    std::vector<unsigned char> hit(replications, 0);
    parallel_for(replications, threads, [&](std::size_t r) {
        Rng rng(mix_seed(seed, r));
        RunningStats s;
        for (std::uint64_t i = 0; i < n; ++i) {
            s.push(sample(spec, rng));
        }
        double estimate = 0.0;
        if (statistic == TailStatistic::variance) {
            estimate = s.unbiased_variance();
        } else {
            const double v = s.unbiased_variance();
            // A degenerate sample cannot estimate the ratio; count it as a miss.
            estimate = v > kVarianceFloor ? s.mean() / v : std::numeric_limits<double>::infinity();
        }
        hit[r] = std::abs(estimate - target) > eps ? 1 : 0;
    });

    TailEstimate out;
    out.replications = replications;
    for (unsigned char h : hit) {
        out.hits += h;
    }
    const double reps = static_cast<double>(replications);
    out.probability = static_cast<double>(out.hits) / reps;
    out.standard_error = std::sqrt(out.probability * (1.0 - out.probability) / reps);
    return out;
}

// --- named evaluation and export --------------------------------------------

namespace {

class Params {
public:
    Params(const std::string& bound, const std::vector<std::pair<std::string, double>>& p) : bound_(bound), p_(p) {}

    double get(const std::string& key) const {
        for (const auto& [k, v] : p_) {
            if (k == key) {
                return v;
            }
        }
        throw InputError(fmt::format("bound '{}' needs parameter '{}'", bound_, key));
    }

    double get(const std::string& key, double fallback) const {
        for (const auto& [k, v] : p_) {
            if (k == key) {
                return v;
            }
        }
        return fallback;
    }

    std::uint64_t count(const std::string& key) const {
        const double v = get(key);
        if (!(v >= 0.0) || v != std::floor(v)) {
            throw InputError(fmt::format("bound '{}': '{}' must be a nonnegative integer", bound_, key));
        }
        return static_cast<std::uint64_t>(v);
    }

private:
    const std::string& bound_;
    const std::vector<std::pair<std::string, double>>& p_;
};

ProblemInstance instance_from(const std::string& name, const std::vector<double>& gaps, std::uint64_t n) {
    if (gaps.empty()) {
        throw InputError(fmt::format("bound '{}' needs a gap list", name));
    }
    ProblemInstance inst;
    inst.gaps = gaps;
    inst.n = n;
    return inst;
}

} // namespace

BoundRow evaluate_bound(const std::string& name, const std::vector<std::pair<std::string, double>>& params,
                        const std::vector<double>& gaps) {
    const Params p(name, params);
    BoundRow row{name, params, 0.0, false};
    auto set = [&row](BoundValue b) {
        row.value = b.value;
        row.vacuous = b.vacuous;
    };
    if (name == "variance_concentration") {
        set(variance_concentration_bound(p.count("n"), p.get("eps"), p.get("l", 0.0), p.get("u", 1.0)));
    } else if (name == "ucb_vv_regret") {
        row.value = ucb_vv_regret_bound(instance_from(name, gaps, p.count("n")));
    } else if (name == "complexity_h2") {
        row.value = complexity_h2(instance_from(name, gaps, 0));
    } else if (name == "shvv_round_error") {
        set(shvv_round_error_bound(p.count("K"), p.count("n"), p.count("r"), p.get("gap")));
    } else if (name == "shvv_error") {
        const auto k = p.count("K");
        const auto n = p.count("n");
        const double h2 = gaps.empty() ? p.get("h2") : complexity_h2(instance_from(name, gaps, n));
        set(shvv_error_bound(k, n, h2));
    } else if (name == "subgauss_variance") {
        set(subgauss_variance_bound(p.count("n"), p.get("eps"), p.get("v2"), p.get("C", 0.125)));
    } else if (name == "sharpe_concentration") {
        set(sharpe_concentration_bound(p.count("n"), p.get("eta"), p.get("c", 0.125)));
    } else if (name == "ucb_sharpe_regret") {
        const auto form = p.get("form", 0.0) == 0.0 ? SharpeBoundForm::statement : SharpeBoundForm::proof;
        row.value = ucb_sharpe_regret_bound(instance_from(name, gaps, p.count("n")), p.get("c", 0.125), form,
                                            p.get("o1", 0.0))
                        .total();
    } else {
        throw InputError(fmt::format("unknown bound '{}'", name));
    }
    return row;
}

void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows) {
    out << "bound_name,params,value,vacuous_flag\n";
    for (const auto& r : rows) {
        std::string params;
        for (const auto& [k, v] : r.params) {
            params += fmt::format("{}{}={}", params.empty() ? "" : ";", k, v);
        }
        out << fmt::format("{},{},{},{}\n", r.name, params, r.value, r.vacuous ? 1 : 0);
    }
}

} // namespace varbandit
