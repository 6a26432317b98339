#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <system_error>

#include "error.hpp"

namespace dsrank {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc())
        throw InternalError("cannot format number");
    return std::string(buf, ptr);
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    CompensatedSum &operator+=(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            compensation_ += (sum_ - t) + x;
        else
            compensation_ += (x - t) + sum_;
        sum_ = t;
        return *this;
    }

    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
    CompensatedSum s;
    for (double v : values)
        s += v;
    return s.value();
}

/// Sample mean and (n-1)-normalized standard deviation.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;

    double standard_error() const noexcept {
        return count > 0 ? std / std::sqrt(static_cast<double>(count)) : 0.0;
    }
};

inline MeanStd mean_std(std::span<const double> values) noexcept {
    MeanStd out;
    out.count = values.size();
    if (values.empty())
        return out;
    out.mean = compensated_sum(values) / static_cast<double>(values.size());
    if (values.size() > 1) {
        CompensatedSum sq;
        for (double v : values)
            sq += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(sq.value() / static_cast<double>(values.size() - 1));
    }
    return out;
}

struct BisectionResult {
    double root;
    int iterations;
};

/**
 * Bisection for an increasing function f on [lo, hi] with f(lo) <= 0 <= f(hi).
 * Stops after `max_iterations` or when the bracket can no longer be split
 * in floating point.
 */
template <typename F>
BisectionResult bisect_increasing(F &&f, double lo, double hi, int max_iterations = 200) {
    double f_lo = f(lo);
    double f_hi = f(hi);
    if (!(f_lo <= 0.0 && f_hi >= 0.0))
        throw NumericalError("bisection: root is not bracketed");
    if (f_lo == 0.0)
        return {lo, 0};
    if (f_hi == 0.0)
        return {hi, 0};
    int it = 0;
    for (; it < max_iterations; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi)
            break;
        const double f_mid = f(mid);
        if (!std::isfinite(f_mid))
            throw NumericalError("bisection: non-finite objective");
        if (f_mid == 0.0)
            return {mid, it + 1};
        if (f_mid < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    return {(-f_lo <= f_hi) ? lo : hi, it};
}

} // namespace dsrank
