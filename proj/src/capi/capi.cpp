#include "lsm/lsm.h"

#include <cstring>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/lexicon.hpp"
#include "core/matching.hpp"
#include "core/report.hpp"
#include "core/stats.hpp"
#include "core/synth.hpp"
#include "core/transcript.hpp"

extern "C" {
struct lsm_lexicon {
    lsm::Lexicon impl;
};
struct lsm_conversation {
    lsm::Conversation impl;
    std::optional<lsm::SynthTruth> truth;
    std::vector<std::string> speakers; // cached for stable const char* returns
};
struct lsm_score {
    lsm::MatchScore impl;
};
}

namespace {

thread_local std::string g_last_error;

lsm_status code_of(lsm::ErrorCode code) {
    switch (code) {
        case lsm::ErrorCode::parse: return LSM_ERR_PARSE;
        case lsm::ErrorCode::validation: return LSM_ERR_VALIDATION;
        case lsm::ErrorCode::not_found: return LSM_ERR_NOT_FOUND;
        case lsm::ErrorCode::insufficient_data: return LSM_ERR_INSUFFICIENT_DATA;
        case lsm::ErrorCode::degenerate: return LSM_ERR_DEGENERATE;
        case lsm::ErrorCode::config: return LSM_ERR_CONFIG;
        case lsm::ErrorCode::io: return LSM_ERR_IO;
        case lsm::ErrorCode::internal: return LSM_ERR_INTERNAL;
    }
    return LSM_ERR_INTERNAL;
}

template <typename Fn>
lsm_status guarded(Fn&& fn) {
    try {
        fn();
        return LSM_OK;
    } catch (const lsm::Error& e) {
        g_last_error = e.what();
        return code_of(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LSM_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return LSM_ERR_INTERNAL;
    }
}

lsm_status fail(lsm_status status, const char* message) {
    g_last_error = message;
    return status;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

lsm::LexiconFormat to_core(lsm_lexicon_format f) {
    return f == LSM_LEXICON_LIWC ? lsm::LexiconFormat::liwc : lsm::LexiconFormat::lex;
}

lsm::ScoreConfig to_core(const lsm_score_config* config) {
    lsm::ScoreConfig cfg;
    if (config) {
        cfg.n_permutations = config->n_permutations;
        cfg.seed = config->seed;
        switch (config->method) {
            case LSM_NULL_MONTE_CARLO: cfg.method = lsm::NullMethod::monte_carlo; break;
            case LSM_NULL_ANALYTIC: cfg.method = lsm::NullMethod::analytic; break;
            case LSM_NULL_EXACT: cfg.method = lsm::NullMethod::exact_enumeration; break;
        }
        cfg.workers = config->workers;
    }
    return cfg;
}

lsm_conversation* wrap(lsm::Conversation conv,
                       std::optional<lsm::SynthTruth> truth = std::nullopt) {
    auto* handle = new lsm_conversation;
    handle->impl = std::move(conv);
    handle->truth = std::move(truth);
    handle->speakers = handle->impl.speakers();
    return handle;
}

} // namespace

extern "C" {

const char* lsm_version(void) { return LSM_VERSION_STRING; }

const char* lsm_last_error(void) { return g_last_error.c_str(); }

void lsm_string_free(char* s) { delete[] s; }

/* ---- lexicon ---------------------------------------------------------- */

lsm_status lsm_lexicon_load_default(lsm_lexicon** out) {
    if (!out) return fail(LSM_ERR_CONFIG, "out is NULL");
    return guarded([&] { *out = new lsm_lexicon{lsm::Lexicon::bundled()}; });
}

lsm_status lsm_lexicon_load_file(const char* path, lsm_lexicon_format format,
                                 lsm_lexicon** out) {
    if (!path || !out) return fail(LSM_ERR_CONFIG, "path or out is NULL");
    return guarded(
        [&] { *out = new lsm_lexicon{lsm::Lexicon::load_file(path, to_core(format))}; });
}

lsm_status lsm_lexicon_load_text(const char* text, lsm_lexicon_format format,
                                 lsm_lexicon** out) {
    if (!text || !out) return fail(LSM_ERR_CONFIG, "text or out is NULL");
    return guarded(
        [&] { *out = new lsm_lexicon{lsm::Lexicon::parse(text, to_core(format))}; });
}

void lsm_lexicon_free(lsm_lexicon* lexicon) { delete lexicon; }

int lsm_lexicon_marker_count(const lsm_lexicon* lexicon) {
    return lexicon ? static_cast<int>(lexicon->impl.markers().size()) : 0;
}

const char* lsm_lexicon_marker_name(const lsm_lexicon* lexicon, int index) {
    if (!lexicon || index < 0 ||
        index >= static_cast<int>(lexicon->impl.markers().size()))
        return nullptr;
    return lexicon->impl.markers()[static_cast<std::size_t>(index)].name.c_str();
}

int lsm_lexicon_category_size(const lsm_lexicon* lexicon, const char* name) {
    if (!lexicon || !name) return -1;
    const lsm::MarkerCategory* cat = lexicon->impl.find(name);
    return cat ? static_cast<int>(cat->size()) : -1;
}

/* ---- conversations ---------------------------------------------------- */

lsm_status lsm_conversation_parse_file(const char* path, lsm_transcript_format format,
                                       const char* speaker_map_path,
                                       lsm_conversation** out) {
    if (!path || !out) return fail(LSM_ERR_CONFIG, "path or out is NULL");
    return guarded([&] {
        *out = wrap(lsm::load_transcript(path,
                                         format == LSM_TRANSCRIPT_TEXT
                                             ? lsm::TranscriptFormat::text
                                             : lsm::TranscriptFormat::json,
                                         speaker_map_path ? speaker_map_path : ""));
    });
}

lsm_status lsm_conversation_parse_text(const char* text, lsm_transcript_format format,
                                       const char* speaker_map_json,
                                       lsm_conversation** out) {
    if (!text || !out) return fail(LSM_ERR_CONFIG, "text or out is NULL");
    return guarded([&] {
        *out = wrap(lsm::parse_transcript(text,
                                          format == LSM_TRANSCRIPT_TEXT
                                              ? lsm::TranscriptFormat::text
                                              : lsm::TranscriptFormat::json,
                                          speaker_map_json ? speaker_map_json : ""));
    });
}

void lsm_conversation_free(lsm_conversation* conv) { delete conv; }

const char* lsm_conversation_id(const lsm_conversation* conv) {
    return conv ? conv->impl.id.c_str() : nullptr;
}

int lsm_conversation_utterance_count(const lsm_conversation* conv) {
    return conv ? static_cast<int>(conv->impl.utterances.size()) : 0;
}

int lsm_conversation_speaker_count(const lsm_conversation* conv) {
    return conv ? static_cast<int>(conv->speakers.size()) : 0;
}

const char* lsm_conversation_speaker(const lsm_conversation* conv, int index) {
    if (!conv || index < 0 || index >= static_cast<int>(conv->speakers.size()))
        return nullptr;
    return conv->speakers[static_cast<std::size_t>(index)].c_str();
}

lsm_status lsm_conversation_to_json(const lsm_conversation* conv, char** out_json) {
    if (!conv || !out_json) return fail(LSM_ERR_CONFIG, "conv or out_json is NULL");
    return guarded([&] { *out_json = dup_string(lsm::serialize_conversation(conv->impl)); });
}

/* ---- synthetic conversations ------------------------------------------ */

lsm_status lsm_synth_generate(const char* config_json, const lsm_lexicon* lexicon,
                              lsm_conversation** out) {
    if (!config_json || !lexicon || !out)
        return fail(LSM_ERR_CONFIG, "config_json, lexicon, or out is NULL");
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(config_json);
        } catch (const nlohmann::json::parse_error& e) {
            lsm::raise(lsm::ErrorCode::parse, std::string("synth config JSON: ") + e.what());
        }
        lsm::SynthConfig cfg;
        try {
            if (doc.contains("n_utterances")) cfg.n_utterances = doc["n_utterances"].get<int>();
            if (doc.contains("seed")) cfg.seed = doc["seed"].get<unsigned long long>();
            if (doc.contains("q0")) cfg.default_rates.q0 = doc["q0"].get<double>();
            if (doc.contains("q1")) cfg.default_rates.q1 = doc["q1"].get<double>();
            if (doc.contains("q1_end") && !doc["q1_end"].is_null())
                cfg.default_rates.q1_end = doc["q1_end"].get<double>();
            if (doc.contains("drive_rate")) cfg.drive_rate = doc["drive_rate"].get<double>();
            if (doc.contains("topology"))
                cfg.topology = lsm::parse_topology(doc["topology"].get<std::string>());
            if (doc.contains("fillers")) cfg.fillers_per_utterance = doc["fillers"].get<int>();
            if (doc.contains("id")) cfg.id = doc["id"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            lsm::raise(lsm::ErrorCode::parse, std::string("synth config JSON: ") + e.what());
        }
        lsm::GeneratedConversation gen = lsm::generate(cfg, lexicon->impl);
        *out = wrap(std::move(gen.conversation), std::move(gen.truth));
    });
}

lsm_status lsm_conversation_truth_json(const lsm_conversation* conv, char** out_json) {
    if (!conv || !out_json) return fail(LSM_ERR_CONFIG, "conv or out_json is NULL");
    if (!conv->truth)
        return fail(LSM_ERR_NOT_FOUND,
                    "conversation carries no generating parameters (not synthetic)");
    return guarded([&] { *out_json = dup_string(lsm::truth_to_json(*conv->truth)); });
}

/* ---- scoring ----------------------------------------------------------- */

void lsm_score_config_init(lsm_score_config* config) {
    if (!config) return;
    config->n_permutations = 10000;
    config->seed = 0;
    config->method = LSM_NULL_MONTE_CARLO;
    config->workers = 0;
}

lsm_status lsm_score_compute(const lsm_conversation* conv, const char* focal_speaker,
                             const lsm_lexicon* lexicon, const lsm_score_config* config,
                             lsm_score** out) {
    if (!conv || !focal_speaker || !lexicon || !out)
        return fail(LSM_ERR_CONFIG, "conv, focal_speaker, lexicon, or out is NULL");
    return guarded([&] {
        *out = new lsm_score{
            lsm::lsm_score(conv->impl, focal_speaker, lexicon->impl, to_core(config))};
    });
}

void lsm_score_free(lsm_score* score) { delete score; }

int lsm_score_marker_count(const lsm_score* score) {
    return score ? static_cast<int>(score->impl.per_marker.size()) : 0;
}

const char* lsm_score_marker_name(const lsm_score* score, int index) {
    if (!score || index < 0 ||
        index >= static_cast<int>(score->impl.per_marker.size()))
        return nullptr;
    return score->impl.per_marker[static_cast<std::size_t>(index)].marker.c_str();
}

lsm_status lsm_score_marker_stat(const lsm_score* score, int index,
                                 lsm_marker_stat* out) {
    if (!score || !out) return fail(LSM_ERR_CONFIG, "score or out is NULL");
    if (index < 0 || index >= static_cast<int>(score->impl.per_marker.size()))
        return fail(LSM_ERR_NOT_FOUND, "marker index out of range");
    const lsm::MarkerMatchStat& s = score->impl.per_marker[static_cast<std::size_t>(index)];
    out->n_prev = s.n_prev;
    out->n_joint = s.n_joint;
    out->p_obs = s.p_obs;
    out->null_mean = s.null_mean;
    out->null_std = s.null_std;
    out->z = s.z;
    out->defined = s.defined ? 1 : 0;
    return LSM_OK;
}

lsm_status lsm_score_mean_z(const lsm_score* score, double* out) {
    if (!score || !out) return fail(LSM_ERR_CONFIG, "score or out is NULL");
    if (!score->impl.mean_z)
        return fail(LSM_ERR_DEGENERATE, "no defined marker; mean z is undefined");
    *out = *score->impl.mean_z;
    return LSM_OK;
}

lsm_status lsm_score_to_json(const lsm_score* score, char** out_json) {
    if (!score || !out_json) return fail(LSM_ERR_CONFIG, "score or out_json is NULL");
    return guarded([&] { *out_json = dup_string(lsm::score_to_json(score->impl)); });
}

lsm_status lsm_turn_lsm(const lsm_conversation* conv, const char* speaker_a,
                        const char* speaker_b, const lsm_lexicon* lexicon, double* out) {
    if (!conv || !speaker_a || !speaker_b || !lexicon || !out)
        return fail(LSM_ERR_CONFIG, "an argument is NULL");
    return guarded(
        [&] { *out = lsm::turn_lsm(conv->impl, speaker_a, speaker_b, lexicon->impl); });
}

lsm_status lsm_asymmetry(const lsm_conversation* conv, const char* speaker_a,
                         const char* speaker_b, const lsm_lexicon* lexicon,
                         const lsm_score_config* config, double* out) {
    if (!conv || !speaker_a || !speaker_b || !lexicon || !out)
        return fail(LSM_ERR_CONFIG, "an argument is NULL");
    return guarded([&] {
        *out = lsm::lsm_asymmetry(conv->impl, speaker_a, speaker_b, lexicon->impl,
                                  to_core(config));
    });
}

/* ---- statistics on plain arrays ---------------------------------------- */

lsm_status lsm_mann_whitney_u(const double* a, int n_a, const double* b, int n_b,
                              double* out_u, double* out_p) {
    if (!a || !b || !out_u || !out_p) return fail(LSM_ERR_CONFIG, "an argument is NULL");
    if (n_a < 0 || n_b < 0) return fail(LSM_ERR_CONFIG, "negative sample size");
    return guarded([&] {
        lsm::MannWhitneyResult r = lsm::mann_whitney_u(
            std::span<const double>(a, static_cast<std::size_t>(n_a)),
            std::span<const double>(b, static_cast<std::size_t>(n_b)));
        *out_u = r.u;
        *out_p = r.p_two_sided;
    });
}

lsm_status lsm_t_test(const double* a, int n_a, const double* b, int n_b, int pooled,
                      double* out_t, double* out_df, double* out_p,
                      double* out_eta_squared) {
    if (!a || !b || !out_t || !out_df || !out_p || !out_eta_squared)
        return fail(LSM_ERR_CONFIG, "an argument is NULL");
    if (n_a < 0 || n_b < 0) return fail(LSM_ERR_CONFIG, "negative sample size");
    return guarded([&] {
        lsm::TTestResult r =
            lsm::t_test(std::span<const double>(a, static_cast<std::size_t>(n_a)),
                        std::span<const double>(b, static_cast<std::size_t>(n_b)),
                        pooled != 0);
        *out_t = r.t;
        *out_df = r.df;
        *out_p = r.p_two_sided;
        *out_eta_squared = r.eta_squared;
    });
}

lsm_status lsm_pearson_r(const double* x, const double* y, int n, double* out_r) {
    if (!x || !y || !out_r) return fail(LSM_ERR_CONFIG, "an argument is NULL");
    if (n < 0) return fail(LSM_ERR_CONFIG, "negative sample size");
    return guarded([&] {
        *out_r = lsm::pearson_r(std::span<const double>(x, static_cast<std::size_t>(n)),
                                std::span<const double>(y, static_cast<std::size_t>(n)));
    });
}

/* ---- pipeline ----------------------------------------------------------- */

lsm_status lsm_run_manifest(const char* manifest_json, int workers, char** out_summary) {
    if (!manifest_json) return fail(LSM_ERR_CONFIG, "manifest_json is NULL");
    bool suites_failed = false;
    lsm_status status = guarded([&] {
        lsm::RunManifest manifest = lsm::RunManifest::from_json(manifest_json);
        lsm::RunResult result = lsm::run_manifest(manifest, workers);
        std::string summary = result.summary;
        for (const std::string& w : result.warnings) summary += "\nwarning: " + w;
        if (out_summary) *out_summary = dup_string(summary);
        if (!result.ok) {
            suites_failed = true;
            g_last_error = "one or more validation suites failed";
        }
    });
    if (status != LSM_OK) return status;
    return suites_failed ? LSM_ERR_SUITES_FAILED : LSM_OK;
}

} /* extern "C" */
