#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lsm {

// Everything a run depends on, recorded verbatim into every output file.
// Re-running with an embedded manifest reproduces the file byte for byte.
// Worker count is deliberately not part of the manifest: results do not
// depend on it.
struct SynthParams {
    int conversations = 1;
    int utterances = 200;
    double q0 = 0.3;
    double q1 = 0.3;
    std::optional<double> q1_end;
    double drive_rate = 0.5;
    std::string topology = "alternating";
    int fillers = 6;
};

struct RunManifest {
    std::string command; // score | study1 | temporal | validate | synth
    std::vector<std::string> transcripts;
    std::string transcript_format = "json"; // json | text
    std::string speaker_map;                // sidecar for the text format
    std::string polls;
    std::vector<std::string> schedules;
    std::string lexicon;                    // empty = bundled lexicon
    std::string lexicon_format = "lex";     // lex | liwc
    int permutations = 10000;
    std::uint64_t seed = 0;
    std::string method = "mc";              // mc | analytic | exact
    int parts = 40;
    std::string out_dir = ".";
    std::string format = "table";           // table | record
    std::string debate_day = "after";       // after | before | exclude
    std::vector<std::string> exclude_roles;
    SynthParams synth;                      // synth command only

    std::string to_json() const;            // canonical single-line form
    static RunManifest from_json(std::string_view text);
};

struct RunResult {
    bool ok = true;                   // false = validation suites failed
    std::vector<std::string> files;   // paths written
    std::vector<std::string> warnings;
    std::string summary;              // human-readable report
};

// Executes the command described by the manifest, writing outputs under
// manifest.out_dir. Throws Error for configuration and data problems;
// returns ok = false only when a validate suite fails.
RunResult run_manifest(const RunManifest& manifest, int workers = 0);

} // namespace lsm
