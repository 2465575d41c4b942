#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core/error.hpp"
#include "core/mathutil.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

using namespace lsm;

namespace {

// Brute-force Mann-Whitney oracle: enumerate every assignment of pooled
// positions to the first sample and count arrangements by their U value.
struct MwOracle {
    double u = 0.0;
    double p = 1.0;
};

MwOracle mw_bruteforce(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    std::size_t n = a.size(), n_total = pooled.size();

    // observed U: pairs where an a-value beats a b-value
    long long u_obs = 0;
    for (double x : a)
        for (double y : b)
            if (x > y) ++u_obs;

    std::vector<char> pick(n_total, 0);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(n), 1);
    std::sort(pick.begin(), pick.end()); // lexicographic start for next_permutation
    unsigned long long total = 0, lo = 0, hi = 0;
    do {
        long long u = 0;
        long long seen_b = 0;
        for (std::size_t i = 0; i < n_total; ++i) {
            if (pick[i])
                u += seen_b; // this a-value beats every b-value before it
            else
                ++seen_b;
        }
        ++total;
        if (u <= u_obs) ++lo;
        if (u >= u_obs) ++hi;
    } while (std::next_permutation(pick.begin(), pick.end()));

    MwOracle out;
    out.u = static_cast<double>(u_obs);
    long double p = 2.0L * static_cast<long double>(std::min(lo, hi)) /
                    static_cast<long double>(total);
    out.p = static_cast<double>(std::min(p, 1.0L));
    return out;
}

} // namespace

TEST_CASE("mann-whitney exact p on the two-and-two example") {
    std::vector<double> a = {1, 2}, b = {3, 4};
    MannWhitneyResult r = mann_whitney_u(a, b);
    CHECK(r.exact);
    CHECK(r.u == doctest::Approx(0.0));
    CHECK(r.p_two_sided == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    MwOracle oracle = mw_bruteforce(a, b);
    CHECK(r.u == oracle.u);
    CHECK(r.p_two_sided == oracle.p);
}

TEST_CASE("mann-whitney equals brute force for every size pair up to 6") {
    Rng rng(2718);
    for (std::size_t na = 1; na <= 6; ++na) {
        for (std::size_t nb = 1; nb <= 6; ++nb) {
            for (int rep = 0; rep < 3; ++rep) {
                // distinct values by construction: shuffled integers
                std::vector<double> pool(na + nb);
                std::iota(pool.begin(), pool.end(), 1.0);
                shuffle(pool, rng);
                std::vector<double> a(pool.begin(), pool.begin() + static_cast<long>(na));
                std::vector<double> b(pool.begin() + static_cast<long>(na), pool.end());
                MannWhitneyResult r = mann_whitney_u(a, b);
                MwOracle oracle = mw_bruteforce(a, b);
                REQUIRE(r.exact);
                CHECK(r.u == oracle.u);
                CHECK(r.p_two_sided == oracle.p); // same counts, same arithmetic
            }
        }
    }
}

TEST_CASE("mann-whitney behaviour") {
    SUBCASE("identical multisets give p near one") {
        std::vector<double> a = {1, 2, 2, 3}, b = {1, 2, 2, 3};
        MannWhitneyResult r = mann_whitney_u(a, b); // ties force the normal path
        CHECK_FALSE(r.exact);
        CHECK(r.p_two_sided == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("U of the two orderings sums to the product of sizes") {
        Rng rng(5);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<double> a, b;
            std::size_t na = 1 + rng.below(9), nb = 1 + rng.below(9);
            for (std::size_t i = 0; i < na; ++i)
                a.push_back(static_cast<double>(rng.below(6))); // ties likely
            for (std::size_t i = 0; i < nb; ++i)
                b.push_back(static_cast<double>(rng.below(6)));
            double u_ab = mann_whitney_u(a, b).u;
            double u_ba = mann_whitney_u(b, a).u;
            CHECK(u_ab + u_ba == doctest::Approx(static_cast<double>(na * nb)).epsilon(1e-12));
        }
    }
    SUBCASE("large samples use the normal approximation sanely") {
        Rng rng(6);
        std::vector<double> a, b;
        for (int i = 0; i < 60; ++i) a.push_back(rng.next_unit());
        for (int i = 0; i < 50; ++i) b.push_back(rng.next_unit() + 0.4);
        MannWhitneyResult r = mann_whitney_u(a, b);
        CHECK_FALSE(r.exact);
        CHECK(r.p_two_sided < 0.001); // strong shift
        CHECK(r.p_two_sided >= 0.0);
    }
    SUBCASE("empty sample is an error") {
        std::vector<double> a = {1.0}, empty;
        CHECK_THROWS_AS(mann_whitney_u(a, empty), Error);
        CHECK_THROWS_AS(mann_whitney_u(empty, a), Error);
    }
}

TEST_CASE("t test") {
    SUBCASE("equal samples give t 0, p 1, eta 0") {
        std::vector<double> a = {1, 2, 3};
        TTestResult r = t_test(a, a);
        CHECK(r.t == doctest::Approx(0.0));
        CHECK(r.p_two_sided == doctest::Approx(1.0));
        CHECK(r.eta_squared == doctest::Approx(0.0));
    }
    SUBCASE("antisymmetric in t, symmetric in p under swap") {
        std::vector<double> a = {0, 0, 0, 1}, b = {1, 1, 1, 0};
        for (bool pooled : {false, true}) {
            TTestResult ab = t_test(a, b, pooled);
            TTestResult ba = t_test(b, a, pooled);
            CHECK(ab.t < 0.0);
            CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
            CHECK(ab.p_two_sided == doctest::Approx(ba.p_two_sided).epsilon(1e-12));
            CHECK(ab.eta_squared == doctest::Approx(ba.eta_squared).epsilon(1e-12));
        }
    }
    SUBCASE("eta squared follows t and df") {
        // the reference arithmetic: t = 2.59 on 68 degrees of freedom
        double eta = 2.59 * 2.59 / (2.59 * 2.59 + 68.0);
        CHECK(eta == doctest::Approx(0.0898).epsilon(1e-3));
        Rng rng(8);
        std::vector<double> a, b;
        for (int i = 0; i < 35; ++i) a.push_back(rng.next_unit());
        for (int i = 0; i < 35; ++i) b.push_back(rng.next_unit() + 0.3);
        TTestResult r = t_test(a, b, true);
        CHECK(r.df == doctest::Approx(68.0));
        CHECK(r.eta_squared ==
              doctest::Approx(r.t * r.t / (r.t * r.t + r.df)).epsilon(1e-12));
    }
    SUBCASE("welch and pooled differ under unequal variances") {
        std::vector<double> a = {0.0, 0.1, -0.1, 0.05, -0.05, 0.02};
        std::vector<double> b = {1.0, 3.0, -2.0, 4.0, -3.0, 2.0};
        TTestResult w = t_test(a, b, false);
        TTestResult p = t_test(a, b, true);
        CHECK(w.df != doctest::Approx(p.df));
    }
    SUBCASE("degenerate and undersized inputs") {
        std::vector<double> flat = {2, 2, 2}, one = {1.0};
        CHECK_THROWS_AS(t_test(flat, flat), Error);
        CHECK_THROWS_AS(t_test(one, flat), Error);
    }
}

TEST_CASE("pearson correlation") {
    SUBCASE("affine relations hit the boundary") {
        std::vector<double> x = {1, 2, 3, 4};
        std::vector<double> y, neg;
        for (double v : x) {
            y.push_back(2.0 * v + 1.0);
            neg.push_back(-v);
        }
        CHECK(pearson_r(x, y) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(pearson_r(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("independent noise stays near zero") {
        Rng rng(1000);
        std::vector<double> x, y;
        for (int i = 0; i < 1000; ++i) {
            x.push_back(rng.next_unit());
            y.push_back(rng.next_unit());
        }
        CHECK(std::fabs(pearson_r(x, y)) < 0.1);
    }
    SUBCASE("invariant under positive affine maps, sign flips under negation") {
        Rng rng(77);
        std::vector<double> x, y;
        for (int i = 0; i < 25; ++i) {
            x.push_back(rng.next_unit());
            y.push_back(rng.next_unit() + 0.5 * x.back());
        }
        double base = pearson_r(x, y);
        std::vector<double> xs = x, yn = y;
        for (double& v : xs) v = 3.0 * v + 11.0;
        CHECK(pearson_r(xs, y) == doctest::Approx(base).epsilon(1e-9));
        for (double& v : yn) v = -v;
        CHECK(pearson_r(x, yn) == doctest::Approx(-base).epsilon(1e-9));
    }
    SUBCASE("constant input is an error") {
        std::vector<double> c = {1, 1, 1}, x = {1, 2, 3};
        CHECK_THROWS_AS(pearson_r(c, x), Error);
        CHECK_THROWS_AS(pearson_r(x, c), Error);
    }
}

TEST_CASE("simple regression band") {
    SUBCASE("perfect line has zero-width band") {
        std::vector<double> x = {0, 1, 2}, y = {0, 1, 2};
        RegressionBand r = simple_regression_band(x, y);
        CHECK(r.slope == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.intercept == doctest::Approx(0.0));
        for (const BandPoint& p : r.band) {
            CHECK(p.ci_low == doctest::Approx(p.fit));
            CHECK(p.ci_high == doctest::Approx(p.fit));
        }
    }
    SUBCASE("constant y about a symmetric x gives slope zero") {
        std::vector<double> x = {-2, -1, 1, 2}, y = {3, 3, 3, 3};
        RegressionBand r = simple_regression_band(x, y);
        CHECK(r.slope == doctest::Approx(0.0));
        CHECK(r.intercept == doctest::Approx(3.0));
    }
    SUBCASE("textbook fit reproduced to 1e-9") {
        std::vector<double> x = {1, 2, 3, 4}, y = {2, 4, 5, 7};
        RegressionBand r = simple_regression_band(x, y, 0.95);
        CHECK(r.slope == doctest::Approx(1.6).epsilon(1e-12));
        CHECK(r.intercept == doctest::Approx(0.5).epsilon(1e-12));
        // s^2 = SSE/(n-2) = 0.2/2 = 0.1; half-width at the mean of x is
        // t(0.975, 2) * sqrt(s^2/n) with the tabled t = 4.302652729911.
        double half_at_mean = 4.302652729911 * std::sqrt(0.1 / 4.0);
        // x-mean 2.5 is not a sample point; check at x = 2:
        double expect_half_x2 =
            4.302652729911 * std::sqrt(0.1 * (0.25 + (2.0 - 2.5) * (2.0 - 2.5) / 5.0));
        const BandPoint& p2 = r.band[1];
        CHECK(p2.fit == doctest::Approx(3.7).epsilon(1e-12));
        CHECK(p2.ci_high - p2.fit == doctest::Approx(expect_half_x2).epsilon(1e-9));
        CHECK(expect_half_x2 > half_at_mean); // width grows away from the mean
    }
    SUBCASE("band width is smallest at the x mean") {
        std::vector<double> x = {0, 1, 2, 3, 4}, y = {1.1, 1.9, 3.2, 3.8, 5.1};
        RegressionBand r = simple_regression_band(x, y);
        double mid = r.band[2].ci_high - r.band[2].ci_low; // x=2 is the mean
        for (const BandPoint& p : r.band)
            CHECK(p.ci_high - p.ci_low >= mid - 1e-12);
    }
    SUBCASE("constant x is an error") {
        std::vector<double> x = {1, 1, 1}, y = {1, 2, 3};
        CHECK_THROWS_AS(simple_regression_band(x, y), Error);
    }
}

namespace {

std::vector<PanelRow> synthetic_panel(Rng& rng, int candidates, int years, double beta,
                                      double noise_sd,
                                      std::vector<double>* cand_effects = nullptr) {
    std::vector<PanelRow> panel;
    std::vector<double> alpha(static_cast<std::size_t>(candidates));
    for (double& a : alpha) a = 2.0 * rng.next_unit() - 1.0;
    if (cand_effects) *cand_effects = alpha;
    for (int c = 0; c < candidates; ++c) {
        for (int y = 0; y < years; ++y) {
            PanelRow row;
            row.candidate = "cand" + std::to_string(c);
            row.election_year = 1976 + 4 * y;
            row.debate_id = "d" + std::to_string(c) + "_" + std::to_string(y);
            row.z = 2.0 * rng.next_unit() - 1.0;
            double eps = 0.0;
            for (int k = 0; k < 12; ++k) eps += rng.next_unit() - 0.5; // ~N(0,1)
            row.p_diff = beta * row.z + alpha[static_cast<std::size_t>(c)] +
                         noise_sd * eps;
            panel.push_back(row);
        }
    }
    return panel;
}

} // namespace

TEST_CASE("fixed effects regression") {
    SUBCASE("noise-free additive panel is recovered exactly") {
        std::vector<PanelRow> panel;
        for (int c = 0; c < 2; ++c)
            for (int t = 0; t < 4; ++t) {
                PanelRow row;
                row.candidate = c == 0 ? "p" : "q";
                row.election_year = 2000 + 4 * t;
                row.debate_id = "d";
                row.z = 0.37 * t + (c == 0 ? 0.1 : -0.3);
                row.p_diff = 2.0 * row.z + (c == 0 ? 1.0 : -1.0);
                panel.push_back(row);
            }
        RegressionResult r = fixed_effects_ols(panel, true, false);
        int zi = r.term_index("z");
        REQUIRE(zi >= 0);
        CHECK(r.coef[static_cast<std::size_t>(zi)] == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(r.r_squared == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.absorbed.size() == 1); // one non-reference candidate level
    }
    SUBCASE("candidate-only model equals the within transform") {
        Rng rng(321);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<PanelRow> panel = synthetic_panel(rng, 5, 6, 0.8, 0.5);
            RegressionResult lsdv = fixed_effects_ols(panel, true, false);

            // within-transform oracle: demean y and z by candidate, slope
            // through the origin
            std::map<std::string, std::pair<double, double>> sums; // z, y
            std::map<std::string, int> counts;
            for (const PanelRow& r : panel) {
                sums[r.candidate].first += r.z;
                sums[r.candidate].second += r.p_diff;
                counts[r.candidate] += 1;
            }
            double num = 0.0, den = 0.0;
            for (const PanelRow& r : panel) {
                double zc = r.z - sums[r.candidate].first / counts[r.candidate];
                double yc = r.p_diff - sums[r.candidate].second / counts[r.candidate];
                num += zc * yc;
                den += zc * zc;
            }
            double within_slope = num / den;
            int zi = lsdv.term_index("z");
            REQUIRE(zi >= 0);
            CHECK(std::fabs(lsdv.coef[static_cast<std::size_t>(zi)] - within_slope) <=
                  1e-8);
        }
    }
    SUBCASE("no factors reduces to the simple regression") {
        Rng rng(11);
        std::vector<PanelRow> panel = synthetic_panel(rng, 4, 5, 1.2, 0.7);
        RegressionResult plain = fixed_effects_ols(panel, false, false);
        std::vector<double> x, y;
        for (const PanelRow& r : panel) {
            x.push_back(r.z);
            y.push_back(r.p_diff);
        }
        RegressionBand simple = simple_regression_band(x, y);
        CHECK(plain.coef[1] == doctest::Approx(simple.slope).epsilon(1e-10));
        CHECK(plain.coef[0] == doctest::Approx(simple.intercept).epsilon(1e-10));
    }
    SUBCASE("adding a factor never increases the residual sum of squares") {
        Rng rng(22);
        std::vector<PanelRow> panel = synthetic_panel(rng, 6, 5, 0.5, 1.0);
        double sst = 0.0;
        {
            std::vector<double> y;
            for (const PanelRow& r : panel) y.push_back(r.p_diff);
            double mean = sample_mean(y);
            for (double v : y) sst += (v - mean) * (v - mean);
        }
        double rss_plain = (1.0 - fixed_effects_ols(panel, false, false).r_squared) * sst;
        double rss_cand = (1.0 - fixed_effects_ols(panel, true, false).r_squared) * sst;
        double rss_both = (1.0 - fixed_effects_ols(panel, true, true).r_squared) * sst;
        CHECK(rss_cand <= rss_plain + 1e-9);
        CHECK(rss_both <= rss_cand + 1e-9);
    }
    SUBCASE("collinear design is reported with column names") {
        // each candidate appears in exactly one year: candidate dummies span
        // the year dummies
        std::vector<PanelRow> panel;
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 3; ++k) {
                PanelRow row;
                row.candidate = "c" + std::to_string(c);
                row.election_year = 2000 + 4 * c;
                row.debate_id = "d";
                row.z = 0.1 * c + 0.05 * k;
                row.p_diff = row.z;
                panel.push_back(row);
            }
        CHECK_THROWS_WITH_AS(fixed_effects_ols(panel, true, true),
                             doctest::Contains("collinear"), Error);
    }
    SUBCASE("adjusted r-squared never exceeds r-squared and p-values are sane") {
        Rng rng(33);
        std::vector<PanelRow> panel = synthetic_panel(rng, 5, 5, 0.9, 0.8);
        RegressionResult r = fixed_effects_ols(panel, true, true);
        CHECK(r.adj_r_squared <= r.r_squared);
        for (double p : r.p_value) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("matcher split") {
    auto score = [](const std::string& debate, const std::string& cand, double z) {
        MatchScore s;
        s.conversation_id = debate;
        s.focal_speaker = cand;
        s.mean_z = z;
        return s;
    };
    auto diff = [](const std::string& debate, const std::string& cand, double pd) {
        PollWindowDiff d;
        d.debate_id = debate;
        d.candidate = cand;
        d.p_diff = pd;
        return d;
    };
    SUBCASE("split at zero with exclusion of the boundary") {
        std::vector<MatchScore> scores = {score("d1", "a", 0.5), score("d1", "b", -0.4),
                                          score("d2", "a", 0.0), score("d2", "b", 1.2)};
        std::vector<PollWindowDiff> diffs = {diff("d1", "a", 2.0), diff("d1", "b", -1.0),
                                             diff("d2", "a", 3.0), diff("d2", "b", 1.0)};
        MatcherSplit split = group_by_matching(scores, diffs);
        CHECK(split.joined == 4);
        CHECK(split.excluded == 1);
        CHECK(split.matcher.n == 2);
        CHECK(split.non_matcher.n == 1);
        CHECK(*split.matcher.mean == doctest::Approx(1.5));
        CHECK(*split.non_matcher.median == doctest::Approx(-1.0));
        CHECK_FALSE(split.non_matcher.ci_low.has_value()); // n = 1
        CHECK(split.matcher.ci_low.has_value());
    }
    SUBCASE("all matchers leaves the other group empty but flagged") {
        std::vector<MatchScore> scores = {score("d1", "a", 0.5), score("d1", "b", 0.7)};
        std::vector<PollWindowDiff> diffs = {diff("d1", "a", 1.0), diff("d1", "b", 2.0)};
        MatcherSplit split = group_by_matching(scores, diffs);
        CHECK(split.non_matcher.n == 0);
        CHECK_FALSE(split.non_matcher.mean.has_value());
    }
    SUBCASE("empty join is an error") {
        std::vector<MatchScore> scores = {score("d1", "a", 0.5)};
        std::vector<PollWindowDiff> diffs = {diff("d9", "z", 1.0)};
        CHECK_THROWS_AS(group_by_matching(scores, diffs), Error);
    }
}
