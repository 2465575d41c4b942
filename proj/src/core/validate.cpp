#include "core/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/error.hpp"
#include "core/mathutil.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "core/synth.hpp"

namespace lsm {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Stream indices: keep suite randomness disjoint.
constexpr std::uint64_t kOracleStream = 1u << 20;
constexpr std::uint64_t kCalibrationStream = 2u << 20;
constexpr std::uint64_t kPlantedStream = 3u << 20;

SynthConfig random_null_config(Rng& rng, const Lexicon& lexicon, int n_utterances) {
    SynthConfig cfg;
    cfg.n_utterances = n_utterances;
    cfg.drive_rate = 0.3 + 0.4 * rng.next_unit();
    for (const auto& cat : lexicon.markers()) {
        MarkerRates r;
        r.q0 = 0.2 + 0.5 * rng.next_unit();
        r.q1 = r.q0; // independence: echo rate equals base rate
        cfg.per_marker[cat.name] = r;
    }
    cfg.seed = rng.next_u64();
    return cfg;
}

} // namespace

SuiteResult oracle_agreement_suite(const ValidateConfig& cfg, const Lexicon& lexicon) {
    SuiteResult suite;
    suite.name = "oracle-agreement";

    int n_conv = cfg.oracle_conversations;
    struct ConvOutcome {
        int cases = 0;
        int failures = 0;
        double worst_mean_gap = 0.0; // in standard errors
        double worst_z_gap = 0.0;
    };
    std::vector<ConvOutcome> outcomes(static_cast<std::size_t>(n_conv));

    parallel_tasks(static_cast<std::size_t>(n_conv), resolve_workers(cfg.workers),
                   [&](std::size_t i) {
        Rng rng = stream_rng(cfg.seed, kOracleStream + i);
        int span = cfg.oracle_max_focal - cfg.oracle_min_focal + 1;
        int focal = cfg.oracle_min_focal + static_cast<int>(rng.below(span));
        SynthConfig sc;
        sc.n_utterances = 2 * focal;
        sc.drive_rate = 0.2 + 0.6 * rng.next_unit();
        for (const auto& cat : lexicon.markers()) {
            MarkerRates r;
            r.q0 = 0.1 + 0.8 * rng.next_unit();
            r.q1 = 0.1 + 0.8 * rng.next_unit();
            sc.per_marker[cat.name] = r;
        }
        sc.seed = rng.next_u64();
        Conversation conv = generate(sc, lexicon).conversation;

        ScoreConfig mc;
        mc.method = NullMethod::monte_carlo;
        mc.n_permutations = cfg.oracle_permutations;
        mc.seed = rng.next_u64();
        mc.scheme = cfg.scheme;
        MatchScore ms = lsm_score(conv, "B", lexicon, mc);

        ScoreConfig an;
        an.method = NullMethod::analytic;
        MatchScore as = lsm_score(conv, "B", lexicon, an);

        ConvOutcome& out = outcomes[i];
        for (std::size_t m = 0; m < ms.per_marker.size(); ++m) {
            const MarkerMatchStat& sim = ms.per_marker[m];
            const MarkerMatchStat& ana = as.per_marker[m];
            if (!sim.defined || !ana.defined) continue;
            ++out.cases;
            double se = ana.null_std / std::sqrt(static_cast<double>(cfg.oracle_permutations));
            double mean_gap = std::fabs(sim.null_mean - ana.null_mean) / se;
            double z_gap = std::fabs(sim.z - ana.z);
            out.worst_mean_gap = std::max(out.worst_mean_gap, mean_gap);
            out.worst_z_gap = std::max(out.worst_z_gap, z_gap);
            if (mean_gap > 4.0 || z_gap > 0.1) ++out.failures;
        }
    });

    double worst_mean = 0.0, worst_z = 0.0;
    for (const ConvOutcome& o : outcomes) {
        suite.cases += o.cases;
        suite.failures += o.failures;
        worst_mean = std::max(worst_mean, o.worst_mean_gap);
        worst_z = std::max(worst_z, o.worst_z_gap);
    }
    double frac = suite.cases == 0
                      ? 0.0
                      : 1.0 - static_cast<double>(suite.failures) / suite.cases;
    suite.passed = suite.cases > 0 && frac >= cfg.oracle_pass_fraction;
    suite.details.push_back("defined markers checked: " + std::to_string(suite.cases));
    suite.details.push_back("within bounds: " + fmt("%.4f", frac) +
                            " (need >= " + fmt("%.2f", cfg.oracle_pass_fraction) + ")");
    suite.details.push_back("worst |mc-analytic| mean gap: " + fmt("%.3f", worst_mean) +
                            " standard errors");
    suite.details.push_back("worst |z_mc - z_analytic|: " + fmt("%.4f", worst_z));
    return suite;
}

SuiteResult null_calibration_suite(const ValidateConfig& cfg, const Lexicon& lexicon) {
    SuiteResult suite;
    suite.name = "null-calibration";

    int n_conv = cfg.calibration_conversations;
    std::vector<std::vector<double>> zs(static_cast<std::size_t>(n_conv));
    parallel_tasks(static_cast<std::size_t>(n_conv), resolve_workers(cfg.workers),
                   [&](std::size_t i) {
        Rng rng = stream_rng(cfg.seed, kCalibrationStream + i);
        SynthConfig sc = random_null_config(rng, lexicon, cfg.calibration_utterances);
        Conversation conv = generate(sc, lexicon).conversation;
        ScoreConfig mc;
        mc.method = NullMethod::monte_carlo;
        mc.n_permutations = cfg.calibration_permutations;
        mc.seed = rng.next_u64();
        mc.scheme = cfg.scheme;
        MatchScore s = lsm_score(conv, "B", lexicon, mc);
        for (const MarkerMatchStat& stat : s.per_marker)
            if (stat.defined) zs[i].push_back(stat.z);
    });

    std::vector<double> all;
    for (const auto& v : zs) all.insert(all.end(), v.begin(), v.end());
    suite.cases = static_cast<int>(all.size());
    if (all.empty()) {
        suite.passed = false;
        suite.details.push_back("no defined marker z-scores produced");
        return suite;
    }
    double mean = sample_mean(all);
    int tail = static_cast<int>(
        std::count_if(all.begin(), all.end(), [](double z) { return std::fabs(z) > 1.96; }));
    double tail_frac = static_cast<double>(tail) / all.size();
    bool mean_ok = std::fabs(mean) <= cfg.calibration_mean_tolerance;
    bool tail_ok =
        tail_frac >= cfg.calibration_tail_low && tail_frac <= cfg.calibration_tail_high;
    suite.passed = mean_ok && tail_ok;
    if (!mean_ok) ++suite.failures;
    if (!tail_ok) ++suite.failures;
    suite.details.push_back("marker z-scores: " + std::to_string(all.size()));
    suite.details.push_back("mean z: " + fmt("%.4f", mean) + " (|mean| <= " +
                            fmt("%.2f", cfg.calibration_mean_tolerance) + ")");
    suite.details.push_back("fraction |z| > 1.96: " + fmt("%.4f", tail_frac) +
                            " (need " + fmt("%.2f", cfg.calibration_tail_low) + " .. " +
                            fmt("%.2f", cfg.calibration_tail_high) + ")");
    return suite;
}

SuiteResult planted_recovery_suite(const ValidateConfig& cfg, const Lexicon& lexicon) {
    SuiteResult suite;
    suite.name = "planted-recovery";

    auto batch = [&](double q0, double q1, std::uint64_t stream_base) {
        std::vector<double> mean_zs(static_cast<std::size_t>(cfg.planted_seeds),
                                    std::nan(""));
        parallel_tasks(static_cast<std::size_t>(cfg.planted_seeds),
                       resolve_workers(cfg.workers), [&](std::size_t i) {
            Rng rng = stream_rng(cfg.seed, stream_base + i);
            SynthConfig sc;
            sc.n_utterances = cfg.planted_utterances;
            sc.drive_rate = 0.5;
            sc.default_rates.q0 = q0;
            sc.default_rates.q1 = q1;
            sc.seed = rng.next_u64();
            Conversation conv = generate(sc, lexicon).conversation;
            ScoreConfig mc;
            mc.method = NullMethod::monte_carlo;
            mc.n_permutations = cfg.planted_permutations;
            mc.seed = rng.next_u64();
            mc.scheme = cfg.scheme;
            MatchScore s = lsm_score(conv, "B", lexicon, mc);
            if (s.mean_z) mean_zs[i] = *s.mean_z;
        });
        std::erase_if(mean_zs, [](double v) { return std::isnan(v); });
        return mean_zs;
    };

    std::vector<double> planted = batch(cfg.planted_q0, cfg.planted_q1, kPlantedStream);
    std::vector<double> null_batch =
        batch(cfg.planted_q0, cfg.planted_q0, kPlantedStream + 100000);

    int positive = static_cast<int>(
        std::count_if(planted.begin(), planted.end(), [](double z) { return z > 0.0; }));
    MannWhitneyResult mw = mann_whitney_u(planted, null_batch);
    double planted_mean = planted.empty() ? 0.0 : sample_mean(planted);
    double null_mean = null_batch.empty() ? 0.0 : sample_mean(null_batch);

    bool positives_ok = positive >= cfg.planted_min_positive;
    bool mw_ok = mw.p_two_sided < cfg.planted_mw_p && planted_mean > null_mean;
    suite.cases = static_cast<int>(planted.size());
    suite.failures = static_cast<int>(planted.size()) - positive;
    suite.passed = positives_ok && mw_ok;
    suite.details.push_back("seeds with mean_z > 0: " + std::to_string(positive) + "/" +
                            std::to_string(planted.size()) + " (need >= " +
                            std::to_string(cfg.planted_min_positive) + ")");
    suite.details.push_back("planted vs null mean_z: " + fmt("%.3f", planted_mean) +
                            " vs " + fmt("%.3f", null_mean));
    suite.details.push_back("Mann-Whitney p: " + fmt("%.2e", mw.p_two_sided) +
                            " (need < " + fmt("%.2f", cfg.planted_mw_p) + ")");
    return suite;
}

std::vector<SuiteResult> run_validation(const ValidateConfig& cfg, const Lexicon& lexicon) {
    return {
        oracle_agreement_suite(cfg, lexicon),
        null_calibration_suite(cfg, lexicon),
        planted_recovery_suite(cfg, lexicon),
    };
}

bool all_passed(const std::vector<SuiteResult>& suites) {
    return std::all_of(suites.begin(), suites.end(),
                       [](const SuiteResult& s) { return s.passed; });
}

} // namespace lsm
