// Command-line front end for liblsm. Parses flags into a run manifest and
// hands it to the shared library; all analysis lives behind the C API.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lsm/lsm.h"

namespace {

using json = nlohmann::ordered_json;

// Exit codes: 0 success, 1 validation suites failed, 2 configuration or
// usage problem, 3 bad input data, 4 internal error.
int exit_code(lsm_status status) {
    switch (status) {
        case LSM_OK: return 0;
        case LSM_ERR_SUITES_FAILED: return 1;
        case LSM_ERR_CONFIG:
        case LSM_ERR_IO: return 2;
        case LSM_ERR_PARSE:
        case LSM_ERR_VALIDATION:
        case LSM_ERR_NOT_FOUND:
        case LSM_ERR_INSUFFICIENT_DATA:
        case LSM_ERR_DEGENERATE: return 3;
        case LSM_ERR_INTERNAL: return 4;
    }
    return 4;
}

struct CommonFlags {
    std::vector<std::string> transcripts;
    std::string transcript_format = "json";
    std::string speaker_map;
    std::string polls;
    std::vector<std::string> schedules;
    std::string lexicon;
    std::string lexicon_format = "auto";
    int permutations = 10000;
    unsigned long long seed = 0;
    std::string method = "mc";
    int parts = 40;
    std::string out_dir = ".";
    std::string format = "table";
    std::string debate_day = "after";
    std::vector<std::string> exclude_roles;
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_transcripts) {
    if (with_transcripts) {
        cmd->add_option("transcripts", f.transcripts, "transcript files")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--transcript-format", f.transcript_format,
                        "transcript layout (default json)")
            ->check(CLI::IsMember({"json", "text"}));
        cmd->add_option("--speaker-map", f.speaker_map,
                        "speaker-to-role sidecar for --transcript-format text");
    }
    cmd->add_option("--lexicon", f.lexicon, "lexicon file (default: bundled)");
    cmd->add_option("--lexicon-format", f.lexicon_format,
                    "lex | liwc | auto (by extension, default)")
        ->check(CLI::IsMember({"lex", "liwc", "auto"}));
    cmd->add_option("--permutations", f.permutations, "Monte Carlo replicates (default 10000)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "random seed (default 0)");
    cmd->add_option("--method", f.method, "null model: mc | analytic | exact")
        ->check(CLI::IsMember({"mc", "analytic", "exact"}));
    cmd->add_option("--out", f.out_dir, "output directory (default .)");
    cmd->add_option("--format", f.format, "output style: table | record")
        ->check(CLI::IsMember({"table", "record"}));
    cmd->add_option("--exclude-role", f.exclude_roles,
                    "drop utterances with this role before scoring (repeatable)")
        ->check(CLI::IsMember({"candidate", "moderator", "questioner", "other"}));
    cmd->add_option("--workers", f.workers,
                    "worker threads (default: LSM_WORKERS env or hardware)");
}

void add_polls(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--polls", f.polls, "poll observations CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--schedule", f.schedules, "debate schedule JSON (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--debate-day", f.debate_day,
                    "window for polls taken on a debate date (default after)")
        ->check(CLI::IsMember({"after", "before", "exclude"}));
}

std::string resolve_lexicon_format(const CommonFlags& f) {
    if (f.lexicon_format != "auto") return f.lexicon_format;
    if (f.lexicon.size() >= 4 && f.lexicon.substr(f.lexicon.size() - 4) == ".dic")
        return "liwc";
    return "lex";
}

json manifest_base(const std::string& command, const CommonFlags& f) {
    json m;
    m["command"] = command;
    m["transcripts"] = f.transcripts;
    m["transcript_format"] = f.transcript_format;
    m["speaker_map"] = f.speaker_map;
    m["polls"] = f.polls;
    m["schedules"] = f.schedules;
    m["lexicon"] = f.lexicon;
    m["lexicon_format"] = resolve_lexicon_format(f);
    m["permutations"] = f.permutations;
    m["seed"] = f.seed;
    m["method"] = f.method;
    m["parts"] = f.parts;
    m["out_dir"] = f.out_dir;
    m["format"] = f.format;
    m["debate_day"] = f.debate_day;
    m["exclude_roles"] = f.exclude_roles;
    return m;
}

int run(const json& manifest, int workers) {
    char* summary = nullptr;
    lsm_status status = lsm_run_manifest(manifest.dump().c_str(), workers, &summary);
    if (summary) {
        std::fputs(summary, stdout);
        std::fputc('\n', stdout);
        lsm_string_free(summary);
    }
    if (status != LSM_OK && status != LSM_ERR_SUITES_FAILED)
        std::fprintf(stderr, "error: %s\n", lsm_last_error());
    if (status == LSM_ERR_SUITES_FAILED)
        std::fprintf(stderr, "validation suites failed\n");
    return exit_code(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("lsm ") + lsm_version() +
                 " - language style matching analytics for transcripts"};
    app.require_subcommand(1);

    CommonFlags score_f, study_f, temporal_f, validate_f, synth_f;

    CLI::App* score = app.add_subcommand(
        "score", "per-marker and mean LSM z-scores for every speaker");
    add_common(score, score_f, true);

    CLI::App* study1 = app.add_subcommand(
        "study1", "full battery: scores, poll joins, group tests, regressions");
    add_common(study1, study_f, true);
    add_polls(study1, study_f);

    CLI::App* temporal = app.add_subcommand(
        "temporal", "cumulative-prefix score curves grouped by poll change");
    add_common(temporal, temporal_f, true);
    add_polls(temporal, temporal_f);
    temporal->add_option("--parts", temporal_f.parts,
                         "time-ordered parts per conversation (default 40)")
        ->check(CLI::PositiveNumber);

    CLI::App* validate = app.add_subcommand(
        "validate", "estimator self-checks: oracle agreement, calibration, recovery");
    add_common(validate, validate_f, false);

    CLI::App* synth = app.add_subcommand(
        "synth", "generate synthetic conversations with known matching strength");
    add_common(synth, synth_f, false);
    int conversations = 1, utterances = 200, fillers = 6;
    double q0 = 0.3, q1 = 0.3, drive = 0.5, q1_end = -1.0;
    std::string topology = "alternating";
    synth->add_option("--conversations", conversations, "how many to generate (default 1)")
        ->check(CLI::PositiveNumber);
    synth->add_option("--utterances", utterances, "utterances per conversation (default 200)")
        ->check(CLI::PositiveNumber);
    synth->add_option("--q0", q0, "spontaneous marker rate (default 0.3)");
    synth->add_option("--q1", q1, "echo rate when the predecessor used the marker");
    synth->add_option("--q1-end", q1_end, "ramp q1 linearly to this value over time");
    synth->add_option("--drive-rate", drive, "lead speaker's marker rate (default 0.5)");
    synth->add_option("--topology", topology, "alternating | moderated")
        ->check(CLI::IsMember({"alternating", "moderated"}));
    synth->add_option("--fillers", fillers, "pad tokens per utterance (default 6)");

    CLI11_PARSE(app, argc, argv);

    if (score->parsed()) return run(manifest_base("score", score_f), score_f.workers);
    if (study1->parsed()) return run(manifest_base("study1", study_f), study_f.workers);
    if (temporal->parsed())
        return run(manifest_base("temporal", temporal_f), temporal_f.workers);
    if (validate->parsed())
        return run(manifest_base("validate", validate_f), validate_f.workers);
    if (synth->parsed()) {
        json m = manifest_base("synth", synth_f);
        json s;
        s["conversations"] = conversations;
        s["utterances"] = utterances;
        s["q0"] = q0;
        s["q1"] = q1;
        s["q1_end"] = q1_end >= 0.0 ? json(q1_end) : json(nullptr);
        s["drive_rate"] = drive;
        s["topology"] = topology;
        s["fillers"] = fillers;
        m["synth"] = s;
        return run(m, synth_f.workers);
    }
    return 2;
}
