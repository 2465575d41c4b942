#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/matching.hpp"
#include "core/polls.hpp"

namespace lsm {

// Contiguous [begin, end) ranges covering all utterances in order; sizes
// differ by at most one, longer ranges first. Requires n_utterances >= parts.
std::vector<std::pair<int, int>> segment(int n_utterances, int parts);

struct TemporalProfile {
    std::string conversation_id;
    std::string focal_speaker;
    int parts = 0;
    // Entry i-1: mean z over the first i parts; absent while no marker is
    // defined yet. The final entry equals the full-conversation mean z.
    std::vector<std::optional<double>> curve;
};

// Scores nested prefixes: entry i uses only parts 1..i, with the permutation
// null recomputed inside the prefix.
TemporalProfile prefix_curve(const Conversation& conv, std::string_view focal_speaker,
                             const Lexicon& lexicon, int parts,
                             const ScoreConfig& config);

struct CurvePoint {
    int prefix_index = 0; // 1-based
    int n = 0;
    std::optional<double> mean;
    std::optional<double> ci_low;  // 95%, needs n >= 2
    std::optional<double> ci_high;
};

struct GroupedCurves {
    std::vector<CurvePoint> gaining; // P_diff > 0
    std::vector<CurvePoint> losing;  // P_diff < 0
    int joined = 0;
};

// Joins profiles to poll diffs on (conversation id, speaker) and averages the
// curves within each sign group; P_diff = 0 rows are excluded. All profiles
// must share the same part count.
GroupedCurves grouped_curves(std::span<const TemporalProfile> profiles,
                             std::span<const PollWindowDiff> diffs);

} // namespace lsm
