#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lsm {

double sample_mean(std::span<const double> xs);
// Unbiased (n-1 divisor) sample variance.
double sample_variance(std::span<const double> xs);
double median(std::vector<double> xs); // by value, sorts its copy

double normal_cdf(double z);
double student_t_cdf(double t, double df);
// Two-sided upper quantile, e.g. p = 0.975 for a 95% interval.
double student_t_quantile(double p, double df);

// Mean confidence interval half-width, t-based; requires n >= 2.
double mean_ci_halfwidth(std::span<const double> xs, double confidence);

} // namespace lsm
