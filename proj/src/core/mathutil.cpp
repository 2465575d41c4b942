#include "core/mathutil.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "core/error.hpp"

namespace lsm {

double sample_mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) raise(ErrorCode::degenerate, "variance needs at least 2 values");
    double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double median(std::vector<double> xs) {
    if (xs.empty()) raise(ErrorCode::insufficient_data, "median of empty sample");
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double normal_cdf(double z) {
    static const boost::math::normal_distribution<double> norm(0.0, 1.0);
    return boost::math::cdf(norm, z);
}

double student_t_cdf(double t, double df) {
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::cdf(dist, t);
}

double student_t_quantile(double p, double df) {
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::quantile(dist, p);
}

double mean_ci_halfwidth(std::span<const double> xs, double confidence) {
    std::size_t n = xs.size();
    if (n < 2) raise(ErrorCode::degenerate, "confidence interval needs at least 2 values");
    double se = std::sqrt(sample_variance(xs) / static_cast<double>(n));
    double q = student_t_quantile(0.5 + confidence / 2.0, static_cast<double>(n - 1));
    return q * se;
}

} // namespace lsm
