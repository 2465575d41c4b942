#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/lexicon.hpp"
#include "core/transcript.hpp"

namespace lsm {

enum class NullMethod {
    monte_carlo,       // resampled permutations, n replicates
    analytic,          // closed form implied by the randomization scheme
    exact_enumeration, // every arrangement; focal utterance count <= 8 only
};

std::string_view null_method_name(NullMethod m);
NullMethod parse_null_method(std::string_view name); // "mc" | "analytic" | "exact"

// What gets permuted in a replicate. The default redistributes the focal
// speaker's utterances across that speaker's own turn slots, holding everyone
// else fixed; `global_slots` permutes every utterance across all slots
// (speaker labels stay with slots). `biased_debug` deliberately breaks
// uniformity and exists for fault-injection tests only.
enum class ShuffleScheme { focal_slots, global_slots, biased_debug };

struct ScoreConfig {
    int n_permutations = 10000;
    std::uint64_t seed = 0;
    NullMethod method = NullMethod::monte_carlo;
    ShuffleScheme scheme = ShuffleScheme::focal_slots;
    int workers = 1; // <=1: no threading inside the scorer
};

struct ObservedCounts {
    int n_prev = 0;  // pairs whose predecessor contains the marker
    int n_joint = 0; // of those, pairs where the response contains it too
    bool defined() const { return n_prev > 0; }
    double p_obs() const { return static_cast<double>(n_joint) / n_prev; }
};

struct NullSummary {
    double mean = 0.0;
    double stddev = 0.0;
};

struct MarkerMatchStat {
    std::string marker;
    int n_prev = 0;
    int n_joint = 0;
    double p_obs = 0.0;    // meaningful only when n_prev > 0
    double null_mean = 0.0;
    double null_std = 0.0;
    double z = 0.0;        // meaningful only when defined
    bool defined = false;  // n_prev > 0 and null_std > 0
};

struct MatchScore {
    std::string conversation_id;
    std::string focal_speaker;
    std::vector<MarkerMatchStat> per_marker; // lexicon marker order
    std::optional<double> mean_z;            // absent when no marker is defined
    int n_permutations = 0;
    std::uint64_t seed = 0;
    NullMethod method = NullMethod::monte_carlo;
};

// Step 1: observed conditional probability of the focal speaker echoing a
// marker that the immediately preceding utterance contained.
ObservedCounts observed_probability(const Conversation& conv,
                                    std::string_view focal_speaker,
                                    std::string_view marker,
                                    const Lexicon& lexicon);

// Steps 2-4: Monte Carlo permutation distribution of the observed
// probability; returns its mean and population (divisor n) standard
// deviation. Replicate i draws from an independent stream keyed by
// (seed, i), so the result does not depend on worker count or execution
// order. Throws Error(degenerate) when no pair has a marked predecessor.
NullSummary permutation_null(const Conversation& conv, std::string_view focal_speaker,
                             std::string_view marker, const Lexicon& lexicon,
                             int n_permutations, std::uint64_t seed,
                             ShuffleScheme scheme = ShuffleScheme::focal_slots,
                             int workers = 1,
                             std::vector<double>* samples_out = nullptr);

// Closed form for the focal-slot scheme: under the shuffle the joint count is
// hypergeometric with population N (focal utterances), K of them marked, and
// n_prev draws, giving mean K/N and variance
// (K/N)(1-K/N)(N-n_prev) / ((N-1) n_prev) for the probability.
NullSummary analytic_null(const Conversation& conv, std::string_view focal_speaker,
                          std::string_view marker, const Lexicon& lexicon);

// Every arrangement of the focal utterances, equally weighted. Requires
// focal utterance count <= 8.
NullSummary exact_null(const Conversation& conv, std::string_view focal_speaker,
                       std::string_view marker, const Lexicon& lexicon);

// Step 5: z = (p_obs - null_mean) / null_std, so z > 0 means the speaker
// echoes markers more often than the shuffled baseline.
// Throws Error(degenerate) when null_std is zero.
double marker_z(double p_obs, double null_mean, double null_std);

// Full per-speaker score: every marker, plus the mean z over defined markers.
// Throws Error(degenerate) when no marker is defined.
MatchScore lsm_score(const Conversation& conv, std::string_view focal_speaker,
                     const Lexicon& lexicon, const ScoreConfig& config);

// Turn-by-turn similarity on category percentages:
// 1 - |p_a - p_b| / (p_a + p_b + 0.0001), averaged over the 8 markers and
// then over adjacent a/b turn pairs. Throws when a and b never speak in
// adjacent turns.
double turn_lsm(const Conversation& conv, std::string_view speaker_a,
                std::string_view speaker_b, const Lexicon& lexicon);

// mean_z(a) - mean_z(b); positive means a matches more than b.
double lsm_asymmetry(const Conversation& conv, std::string_view speaker_a,
                     std::string_view speaker_b, const Lexicon& lexicon,
                     const ScoreConfig& config);

// JSON record for one score (all marker stats, mean z, run parameters).
std::string score_to_json(const MatchScore& score);

} // namespace lsm
