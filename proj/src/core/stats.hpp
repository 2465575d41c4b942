#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/matching.hpp"
#include "core/polls.hpp"

namespace lsm {

struct MannWhitneyResult {
    double u = 0.0;           // U statistic for the first sample (midranks under ties)
    double p_two_sided = 1.0;
    bool exact = false;       // enumeration (small samples, no ties) vs normal approx
};

// Exact two-sided p by counting arrangements when min(|a|,|b|) <= 8 and the
// pooled sample is tie-free; otherwise normal approximation with tie and
// continuity corrections.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p_two_sided = 1.0;
    double eta_squared = 0.0; // t^2 / (t^2 + df)
    bool pooled = false;
};

// Welch's unequal-variance form by default; pooled=true gives Student's form.
// Requires both samples of size >= 2 and at least one nonzero variance.
TTestResult t_test(std::span<const double> a, std::span<const double> b,
                   bool pooled = false);

// Product-moment correlation; requires equal lengths >= 3 and nonconstant
// inputs.
double pearson_r(std::span<const double> x, std::span<const double> y);

struct BandPoint {
    double x = 0.0;
    double fit = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct RegressionBand {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<BandPoint> band; // mean-response CI at each input x, input order
};

RegressionBand simple_regression_band(std::span<const double> x,
                                      std::span<const double> y,
                                      double confidence = 0.95);

struct PanelRow {
    std::string candidate;
    int election_year = 0;
    std::string debate_id;
    double z = 0.0;      // mean LSM z-score
    double p_diff = 0.0; // poll change
};

struct RegressionResult {
    std::vector<std::string> names; // "intercept", "z", dummy columns
    std::vector<double> coef;
    std::vector<double> std_error;
    std::vector<double> t_stat;
    std::vector<double> p_value;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    int df_resid = 0;
    int n_obs = 0;
    std::vector<std::string> absorbed; // factor levels behind the dummies

    int term_index(std::string_view name) const; // -1 when absent
};

// Least squares with dummy variables: intercept, the z regressor, and one
// dummy per factor level with the first (sorted) level as reference.
// Throws Error(validation) naming the collinear columns when the design is
// rank deficient.
RegressionResult fixed_effects_ols(std::span<const PanelRow> panel, bool candidate_fe,
                                   bool year_fe);

struct GroupStats {
    int n = 0;
    std::optional<double> mean;
    std::optional<double> median;
    std::optional<double> ci_low;  // 95% CI of the mean, needs n >= 2
    std::optional<double> ci_high;
};

struct MatcherSplit {
    std::vector<double> matcher_diffs;     // p_diff where mean_z > 0
    std::vector<double> non_matcher_diffs; // p_diff where mean_z < 0
    GroupStats matcher;
    GroupStats non_matcher;
    int joined = 0;   // rows matched between scores and diffs
    int excluded = 0; // mean_z == 0 or undefined
};

// Joins scores and poll diffs on (conversation id = debate id,
// speaker = candidate) and splits at mean z = 0; the boundary itself is
// excluded. Throws Error(insufficient_data) when the join is empty.
MatcherSplit group_by_matching(std::span<const MatchScore> scores,
                               std::span<const PollWindowDiff> diffs);

GroupStats describe_group(std::span<const double> xs);

} // namespace lsm
