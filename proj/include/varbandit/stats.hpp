#pragma once

#include <cstdint>

namespace varbandit {

inline constexpr double kVarianceFloor = 1e-12;

/// Online count / mean / second-central-moment accumulator (Welford update).
///
/// One instance per arm. biased_variance() divides by the count and matches
/// the per-arm empirical variance used by UCB-VV; unbiased_variance() divides
/// by count - 1.
class RunningStats {
public:
    RunningStats() = default;

    /// Throws InputError on a non-finite sample.
    void push(double x);

    [[nodiscard]] std::uint64_t count() const noexcept { return count_; }
    [[nodiscard]] double mean() const noexcept { return mean_; }
    [[nodiscard]] double sum_sq_dev() const noexcept { return m2_; }

    /// sum_sq_dev / count. Throws UndefinedStatistic when empty.
    [[nodiscard]] double biased_variance() const;
    /// sum_sq_dev / (count - 1). Throws UndefinedStatistic below two samples.
    [[nodiscard]] double unbiased_variance() const;

    void reset() noexcept { *this = RunningStats{}; }

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Mean over unbiased variance (the variance-denominated Sharpe ratio).
/// Throws UndefinedStatistic below two samples and DegenerateSharpe when the
/// variance does not exceed `variance_floor`.
[[nodiscard]] double empirical_sharpe(const RunningStats& stats,
                                      double variance_floor = kVarianceFloor);

} // namespace varbandit
