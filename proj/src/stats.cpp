#include "varbandit/stats.hpp"

#include <cmath>
#include <string>

#include "varbandit/errors.hpp"

namespace varbandit {

void RunningStats::push(double x) {
    if (!std::isfinite(x)) {
        throw InputError("RunningStats::push: non-finite sample");
    }
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
    if (m2_ < 0.0) {
        m2_ = 0.0;
    }
}

double RunningStats::biased_variance() const {
    if (count_ == 0) {
        throw UndefinedStatistic("biased_variance: no samples");
    }
    return m2_ / static_cast<double>(count_);
}

double RunningStats::unbiased_variance() const {
    if (count_ < 2) {
        throw UndefinedStatistic("unbiased_variance: needs at least 2 samples, have " +
                                 std::to_string(count_));
    }
    return m2_ / static_cast<double>(count_ - 1);
}

double empirical_sharpe(const RunningStats& stats, double variance_floor) {
    const double var = stats.unbiased_variance();
    if (var <= variance_floor) {
        throw DegenerateSharpe("empirical_sharpe: variance below floor");
    }
    return stats.mean() / var;
}

} // namespace varbandit
