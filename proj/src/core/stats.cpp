#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "core/error.hpp"
#include "core/mathutil.hpp"

namespace lsm {

namespace {

// Midranks of the pooled sample, returned split back into the two groups.
std::pair<std::vector<double>, std::vector<double>> midranks(
    std::span<const double> a, std::span<const double> b) {
    struct Entry {
        double value;
        bool from_a;
    };
    std::vector<Entry> pooled;
    pooled.reserve(a.size() + b.size());
    for (double v : a) pooled.push_back({v, true});
    for (double v : b) pooled.push_back({v, false});
    std::sort(pooled.begin(), pooled.end(),
              [](const Entry& x, const Entry& y) { return x.value < y.value; });
    std::vector<double> ra(a.size()), rb(b.size());
    std::size_t ia = 0, ib = 0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
        double rank = 0.5 * static_cast<double>(i + 1 + j); // average of i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].from_a)
                ra[ia++] = rank;
            else
                rb[ib++] = rank;
        }
        i = j;
    }
    return {std::move(ra), std::move(rb)};
}

bool has_ties(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

using uint128 = unsigned __int128;

// Number of arrangements of n X's and m Y's with exactly u (x beats y)
// pairs, tabulated for all u. Recurrence on the largest pooled element:
// an X contributes m beats, a Y contributes none, so
//   c(u; n, m) = c(u - m; n - 1, m) + c(u; n, m - 1).
// Counts fit in 128 bits comfortably for min(n, m) <= 8.
std::vector<uint128> u_distribution(int n, int m) {
    int u_max = n * m;
    std::vector<std::vector<uint128>> cur(static_cast<std::size_t>(n) + 1,
                                          std::vector<uint128>(u_max + 1, 0));
    for (int nn = 0; nn <= n; ++nn) cur[nn][0] = 1; // m = 0
    for (int mm = 1; mm <= m; ++mm) {
        auto prev = cur; // counts at m - 1
        for (int nn = 0; nn <= n; ++nn) {
            for (int u = 0; u <= u_max; ++u) {
                uint128 c = prev[nn][u];
                if (nn >= 1 && u >= mm) c += cur[nn - 1][u - mm];
                cur[nn][u] = c;
            }
        }
    }
    return cur[n];
}

double exact_two_sided_p(int u_obs, const std::vector<uint128>& dist) {
    uint128 total = 0, lo = 0, hi = 0;
    for (int u = 0; u < static_cast<int>(dist.size()); ++u) {
        total += dist[u];
        if (u <= u_obs) lo += dist[u];
        if (u >= u_obs) hi += dist[u];
    }
    uint128 tail = std::min(lo, hi);
    long double p = 2.0L * static_cast<long double>(tail) / static_cast<long double>(total);
    return static_cast<double>(std::min(p, 1.0L));
}

} // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        raise(ErrorCode::insufficient_data, "Mann-Whitney needs two nonempty samples");
    auto na = static_cast<double>(a.size());
    auto nb = static_cast<double>(b.size());
    auto [ra, rb] = midranks(a, b);
    double rank_sum_a = 0.0;
    for (double r : ra) rank_sum_a += r;
    double u_a = rank_sum_a - na * (na + 1.0) / 2.0;

    MannWhitneyResult res;
    res.u = u_a;

    bool tie_free = !has_ties(a, b);
    if (tie_free && std::min(a.size(), b.size()) <= 8) {
        res.exact = true;
        res.p_two_sided = exact_two_sided_p(
            static_cast<int>(std::llround(u_a)),
            u_distribution(static_cast<int>(a.size()), static_cast<int>(b.size())));
        return res;
    }

    // Normal approximation with tie correction and continuity correction.
    double n = na + nb;
    double tie_term = 0.0;
    {
        std::vector<double> pooled(a.begin(), a.end());
        pooled.insert(pooled.end(), b.begin(), b.end());
        std::sort(pooled.begin(), pooled.end());
        std::size_t i = 0;
        while (i < pooled.size()) {
            std::size_t j = i;
            while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
            double t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
    }
    double sigma_sq = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (sigma_sq <= 0.0) {
        res.p_two_sided = 1.0; // every pooled value identical
        return res;
    }
    double centered = u_a - na * nb / 2.0;
    double correction = centered > 0 ? -0.5 : (centered < 0 ? 0.5 : 0.0);
    double z = (centered + correction) / std::sqrt(sigma_sq);
    res.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(z))));
    return res;
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, bool pooled) {
    if (a.size() < 2 || b.size() < 2)
        raise(ErrorCode::insufficient_data, "t-test needs at least 2 values per sample");
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = sample_mean(a), mb = sample_mean(b);
    double va = sample_variance(a), vb = sample_variance(b);
    if (va == 0.0 && vb == 0.0)
        raise(ErrorCode::degenerate, "t-test degenerate: both samples have zero variance");

    TTestResult res;
    res.pooled = pooled;
    if (pooled) {
        double df = na + nb - 2.0;
        double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        res.t = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
        res.df = df;
    } else {
        double sa = va / na, sb = vb / nb;
        res.t = (ma - mb) / std::sqrt(sa + sb);
        res.df = (sa + sb) * (sa + sb) /
                 (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    }
    res.p_two_sided = 2.0 * (1.0 - student_t_cdf(std::fabs(res.t), res.df));
    res.eta_squared = res.t * res.t / (res.t * res.t + res.df);
    return res;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        raise(ErrorCode::validation, "correlation inputs differ in length");
    if (x.size() < 3)
        raise(ErrorCode::insufficient_data, "correlation needs at least 3 points");
    double mx = sample_mean(x), my = sample_mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        raise(ErrorCode::degenerate, "correlation undefined for a constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RegressionBand simple_regression_band(std::span<const double> x,
                                      std::span<const double> y, double confidence) {
    if (x.size() != y.size())
        raise(ErrorCode::validation, "regression inputs differ in length");
    std::size_t n = x.size();
    if (n < 3) raise(ErrorCode::insufficient_data, "regression needs at least 3 points");
    double mx = sample_mean(x), my = sample_mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) raise(ErrorCode::degenerate, "regression undefined for constant x");

    RegressionBand out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (out.intercept + out.slope * x[i]);
        sse += r * r;
    }
    double s2 = sse / static_cast<double>(n - 2);
    double tq = student_t_quantile(0.5 + confidence / 2.0, static_cast<double>(n - 2));
    out.band.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double fit = out.intercept + out.slope * x[i];
        double half = tq * std::sqrt(s2 * (1.0 / static_cast<double>(n) +
                                           (x[i] - mx) * (x[i] - mx) / sxx));
        out.band.push_back(BandPoint{x[i], fit, fit - half, fit + half});
    }
    return out;
}

int RegressionResult::term_index(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

RegressionResult fixed_effects_ols(std::span<const PanelRow> panel, bool candidate_fe,
                                   bool year_fe) {
    if (panel.size() < 3)
        raise(ErrorCode::insufficient_data, "panel regression needs at least 3 rows");

    std::set<std::string> candidates;
    std::set<int> years;
    for (const PanelRow& r : panel) {
        if (!std::isfinite(r.z) || !std::isfinite(r.p_diff))
            raise(ErrorCode::validation, "panel row with non-finite z or p_diff");
        candidates.insert(r.candidate);
        years.insert(r.election_year);
    }

    RegressionResult res;
    res.names = {"intercept", "z"};
    std::map<std::string, int> cand_col;
    std::map<int, int> year_col;
    if (candidate_fe) {
        bool first = true; // reference level dropped
        for (const std::string& c : candidates) {
            if (first) {
                first = false;
                continue;
            }
            cand_col[c] = static_cast<int>(res.names.size());
            res.names.push_back("candidate:" + c);
            res.absorbed.push_back("candidate:" + c);
        }
    }
    if (year_fe) {
        bool first = true;
        for (int y : years) {
            if (first) {
                first = false;
                continue;
            }
            year_col[y] = static_cast<int>(res.names.size());
            res.names.push_back("year:" + std::to_string(y));
            res.absorbed.push_back("year:" + std::to_string(y));
        }
    }

    auto n = static_cast<Eigen::Index>(panel.size());
    auto p = static_cast<Eigen::Index>(res.names.size());
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const PanelRow& r = panel[static_cast<std::size_t>(i)];
        X(i, 0) = 1.0;
        X(i, 1) = r.z;
        if (auto it = cand_col.find(r.candidate); it != cand_col.end())
            X(i, it->second) = 1.0;
        if (auto it = year_col.find(r.election_year); it != year_col.end())
            X(i, it->second) = 1.0;
        y(i) = r.p_diff;
    }

    if (n <= p)
        raise(ErrorCode::insufficient_data,
              "panel has " + std::to_string(n) + " rows but the model needs more than " +
                  std::to_string(p));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) {
        auto perm = qr.colsPermutation().indices();
        std::string cols;
        for (Eigen::Index j = qr.rank(); j < p; ++j) {
            if (!cols.empty()) cols += ", ";
            cols += res.names[static_cast<std::size_t>(perm[j])];
        }
        raise(ErrorCode::validation, "design matrix is rank deficient; collinear: " + cols);
    }

    Eigen::VectorXd beta = qr.solve(y);
    Eigen::VectorXd resid = y - X * beta;
    double sse = resid.squaredNorm();
    double sst = (y.array() - y.mean()).matrix().squaredNorm();
    int df = static_cast<int>(n - p);
    double sigma2 = sse / df;
    Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();

    res.n_obs = static_cast<int>(n);
    res.df_resid = df;
    res.r_squared = sst > 0.0 ? 1.0 - sse / sst : 1.0;
    res.adj_r_squared =
        1.0 - (1.0 - res.r_squared) * (static_cast<double>(n) - 1.0) / df;
    for (Eigen::Index j = 0; j < p; ++j) {
        double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
        double t = se > 0.0 ? beta(j) / se : 0.0;
        res.coef.push_back(beta(j));
        res.std_error.push_back(se);
        res.t_stat.push_back(t);
        res.p_value.push_back(
            se > 0.0 ? 2.0 * (1.0 - student_t_cdf(std::fabs(t), df)) : 1.0);
    }
    return res;
}

GroupStats describe_group(std::span<const double> xs) {
    GroupStats g;
    g.n = static_cast<int>(xs.size());
    if (xs.empty()) return g;
    g.mean = sample_mean(xs);
    g.median = median(std::vector<double>(xs.begin(), xs.end()));
    if (xs.size() >= 2) {
        double half = mean_ci_halfwidth(xs, 0.95);
        g.ci_low = *g.mean - half;
        g.ci_high = *g.mean + half;
    }
    return g;
}

MatcherSplit group_by_matching(std::span<const MatchScore> scores,
                               std::span<const PollWindowDiff> diffs) {
    MatcherSplit split;
    for (const MatchScore& s : scores) {
        for (const PollWindowDiff& d : diffs) {
            if (s.conversation_id != d.debate_id || s.focal_speaker != d.candidate)
                continue;
            ++split.joined;
            if (!s.mean_z || *s.mean_z == 0.0) {
                ++split.excluded;
            } else if (*s.mean_z > 0.0) {
                split.matcher_diffs.push_back(d.p_diff);
            } else {
                split.non_matcher_diffs.push_back(d.p_diff);
            }
        }
    }
    if (split.joined == 0)
        raise(ErrorCode::insufficient_data,
              "no (debate, candidate) rows shared between scores and poll diffs");
    split.matcher = describe_group(split.matcher_diffs);
    split.non_matcher = describe_group(split.non_matcher_diffs);
    return split;
}

} // namespace lsm
