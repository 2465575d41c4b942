#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "core/lexicon.hpp"
#include "core/transcript.hpp"

namespace lsm {

// Two shapes: "alternating" is A, B, A, B, ... ; "moderated" inserts a
// moderator between candidate turns: MOD, A, MOD, B, MOD, A, ...
// The rotation's lead speaker (A / MOD) drives the exchange: it emits each
// marker independently at drive_rate. Every other speaker responds, echoing
// a marker with probability q1 when the previous utterance contained it and
// emitting it spontaneously with probability q0 otherwise. Responder "B" is
// therefore the planted matcher when q1 > q0.
enum class Topology { alternating, moderated };

std::string_view topology_name(Topology t);
Topology parse_topology(std::string_view name);

struct MarkerRates {
    double q0 = 0.3;                // emit when the predecessor lacked the marker
    double q1 = 0.3;                // emit when the predecessor contained it
    std::optional<double> q1_end;   // ramp: q1 interpolates to this over the
                                    // conversation when set
    double q1_at(int index, int n_utterances) const;
};

struct SynthConfig {
    int n_utterances = 200;
    Topology topology = Topology::alternating;
    double drive_rate = 0.5;
    MarkerRates default_rates;
    std::map<std::string, MarkerRates> per_marker; // overrides by marker name
    int fillers_per_utterance = 6;
    std::uint64_t seed = 0;
    std::string id = "synthetic";
    Date date{2000, 1, 1};
    std::optional<int> election_year;

    void validate() const;
    const MarkerRates& rates_for(std::string_view marker) const;
};

// The generating parameters, embedded next to a generated conversation and
// recoverable afterwards.
struct SynthTruth {
    int n_utterances = 0;
    Topology topology = Topology::alternating;
    double drive_rate = 0.0;
    std::map<std::string, MarkerRates> rates; // resolved per marker
    int fillers_per_utterance = 0;
    std::uint64_t seed = 0;
};

std::string truth_to_json(const SynthTruth& truth);
SynthTruth parse_truth(std::string_view json_text);
SynthTruth load_truth_file(const std::string& path);

struct GeneratedConversation {
    Conversation conversation;
    SynthTruth truth;
};

// Deterministic in (config, lexicon). Marker tokens are drawn from pools of
// words unique to each marker category; pad tokens never match any marker.
// Throws Error(config) when a marker has no usable tokens.
GeneratedConversation generate(const SynthConfig& config, const Lexicon& lexicon);

} // namespace lsm
