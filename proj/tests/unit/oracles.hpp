#pragma once

// Reference computations for tests, independent of the library's code paths.

#include <cmath>
#include <span>
#include <vector>

namespace oracle {

struct TwoPass {
    long double mean;
    long double sum_sq_dev;
};

// Two passes in extended precision: mean first, then squared deviations.
inline TwoPass two_pass(std::span<const double> xs) {
    long double sum = 0.0L;
    for (double x : xs) {
        sum += x;
    }
    const long double mean = sum / static_cast<long double>(xs.size());
    long double ss = 0.0L;
    for (double x : xs) {
        const long double d = static_cast<long double>(x) - mean;
        ss += d * d;
    }
    return {mean, ss};
}

inline double biased_variance(std::span<const double> xs) {
    const auto tp = two_pass(xs);
    return static_cast<double>(tp.sum_sq_dev / static_cast<long double>(xs.size()));
}

inline double unbiased_variance(std::span<const double> xs) {
    const auto tp = two_pass(xs);
    return static_cast<double>(tp.sum_sq_dev / static_cast<long double>(xs.size() - 1));
}

inline double relative_error(double got, double want) {
    const double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

} // namespace oracle
