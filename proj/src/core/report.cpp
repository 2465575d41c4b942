#include "core/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/matching.hpp"
#include "core/parallel.hpp"
#include "core/polls.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "core/synth.hpp"
#include "core/temporal.hpp"
#include "core/validate.hpp"

namespace lsm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

class TableWriter {
public:
    TableWriter(const RunManifest& manifest, std::vector<std::string> columns)
        : columns_(std::move(columns)) {
        body_ += "# manifest: " + manifest.to_json() + "\n";
        append_row(columns_);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            raise(ErrorCode::internal, "table row width mismatch");
        append_row(cells);
    }

    const std::string& text() const { return body_; }

private:
    void append_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += '\t';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    std::vector<std::string> columns_;
    std::string body_;
};

void write_file(const fs::path& path, const std::string& content,
                std::vector<std::string>& files) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::io, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) raise(ErrorCode::io, "write failed for '" + path.string() + "'");
    files.push_back(path.string());
}

json manifest_json_obj(const RunManifest& m) { return json::parse(m.to_json()); }

struct LoadedInputs {
    Lexicon lexicon;
    std::vector<Conversation> conversations;
    std::vector<PollObservation> polls;
    std::vector<DebateSchedule> schedules;
};

LoadedInputs load_inputs(const RunManifest& m, bool need_polls) {
    LoadedInputs in;
    if (m.lexicon.empty()) {
        in.lexicon = Lexicon::bundled();
    } else {
        in.lexicon = Lexicon::load_file(
            m.lexicon, m.lexicon_format == "liwc" ? LexiconFormat::liwc
                                                  : LexiconFormat::lex);
    }
    TranscriptFormat tf =
        m.transcript_format == "text" ? TranscriptFormat::text : TranscriptFormat::json;
    std::set<Role> excluded;
    for (const std::string& r : m.exclude_roles) excluded.insert(parse_role(r));
    for (const std::string& path : m.transcripts) {
        Conversation conv = load_transcript(path, tf, m.speaker_map);
        if (!excluded.empty()) conv = filter_roles(conv, excluded);
        in.conversations.push_back(std::move(conv));
    }
    std::sort(in.conversations.begin(), in.conversations.end(),
              [](const Conversation& a, const Conversation& b) { return a.id < b.id; });
    if (need_polls) {
        if (m.polls.empty()) raise(ErrorCode::config, "this command needs --polls");
        if (m.schedules.empty()) raise(ErrorCode::config, "this command needs --schedule");
        in.polls = load_polls_file(m.polls);
        for (const std::string& path : m.schedules)
            in.schedules.push_back(load_schedule_file(path));
    }
    return in;
}

ScoreConfig score_config(const RunManifest& m) {
    ScoreConfig cfg;
    cfg.n_permutations = m.permutations;
    cfg.seed = m.seed;
    cfg.method = parse_null_method(m.method);
    cfg.workers = 1; // the pipeline parallelizes across jobs instead
    return cfg;
}

// Speakers scored by a command: every speaker for plain scoring, candidates
// only when joining against polls.
std::vector<std::string> speakers_to_score(const Conversation& conv, bool candidates_only) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const Utterance& u : conv.utterances) {
        if (candidates_only && u.role != Role::candidate) continue;
        if (seen.insert(u.speaker).second) out.push_back(u.speaker);
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct ScoreJob {
    std::size_t conversation = 0;
    std::string speaker;
};

std::vector<MatchScore> score_jobs(const LoadedInputs& in,
                                   const std::vector<ScoreJob>& jobs,
                                   const ScoreConfig& cfg, int workers) {
    std::vector<MatchScore> scores(jobs.size());
    parallel_tasks(jobs.size(), resolve_workers(workers), [&](std::size_t i) {
        scores[i] =
            lsm_score(in.conversations[jobs[i].conversation], jobs[i].speaker,
                      in.lexicon, cfg);
    });
    return scores;
}

const std::vector<std::string> kScoreColumns = {
    "conversation", "speaker",  "row",     "marker", "n_prev",
    "n_joint",      "p_obs",    "null_mean", "null_std", "z",
    "defined",      "mean_z",   "defined_markers", "n_permutations", "seed", "method"};

void append_score_rows(TableWriter& table, const MatchScore& s) {
    int defined_markers = 0;
    for (const MarkerMatchStat& m : s.per_marker)
        if (m.defined) ++defined_markers;
    std::string n_perm = std::to_string(s.n_permutations);
    std::string seed = std::to_string(s.seed);
    std::string method{null_method_name(s.method)};
    for (const MarkerMatchStat& m : s.per_marker) {
        table.row({s.conversation_id, s.focal_speaker, "marker", m.marker,
                   std::to_string(m.n_prev), std::to_string(m.n_joint),
                   m.n_prev > 0 ? fmt(m.p_obs) : "NA",
                   m.defined ? fmt(m.null_mean) : "NA",
                   m.defined ? fmt(m.null_std) : "NA", m.defined ? fmt(m.z) : "NA",
                   m.defined ? "1" : "0", "NA", "NA", n_perm, seed, method});
    }
    table.row({s.conversation_id, s.focal_speaker, "summary", "NA", "NA", "NA", "NA",
               "NA", "NA", "NA", "NA", fmt_opt(s.mean_z),
               std::to_string(defined_markers), n_perm, seed, method});
}

json scores_record(const RunManifest& m, const std::vector<MatchScore>& scores) {
    json doc;
    doc["manifest"] = manifest_json_obj(m);
    doc["scores"] = json::array();
    for (const MatchScore& s : scores) doc["scores"].push_back(json::parse(score_to_json(s)));
    return doc;
}

RunResult run_score(const RunManifest& m, int workers) {
    LoadedInputs in = load_inputs(m, false);
    if (in.conversations.empty()) raise(ErrorCode::config, "no transcripts given");

    std::vector<ScoreJob> jobs;
    for (std::size_t c = 0; c < in.conversations.size(); ++c)
        for (const std::string& s : speakers_to_score(in.conversations[c], false))
            jobs.push_back(ScoreJob{c, s});
    std::vector<MatchScore> scores = score_jobs(in, jobs, score_config(m), workers);

    RunResult res;
    fs::create_directories(m.out_dir);
    if (m.format == "record") {
        write_file(fs::path(m.out_dir) / "scores.json",
                   scores_record(m, scores).dump(2) + "\n", res.files);
    } else {
        TableWriter table(m, kScoreColumns);
        for (const MatchScore& s : scores) append_score_rows(table, s);
        write_file(fs::path(m.out_dir) / "scores.tsv", table.text(), res.files);
    }
    res.summary = "scored " + std::to_string(scores.size()) + " (conversation, speaker) pairs";
    return res;
}

// Schedule lookup for a conversation; -1 when no schedule lists its id.
int schedule_for(const std::vector<DebateSchedule>& schedules, const std::string& id) {
    for (std::size_t i = 0; i < schedules.size(); ++i)
        if (schedules[i].debate_index(id) >= 0) return static_cast<int>(i);
    return -1;
}

struct Study1Data {
    std::vector<MatchScore> scores;            // candidates only
    std::vector<PanelRow> panel;
    std::vector<PollWindowDiff> diffs;         // aligned with panel
    std::vector<std::string> warnings;
};

Study1Data build_study1_data(const RunManifest& m, const LoadedInputs& in, int workers) {
    Study1Data data;
    std::vector<ScoreJob> jobs;
    for (std::size_t c = 0; c < in.conversations.size(); ++c)
        for (const std::string& s : speakers_to_score(in.conversations[c], true))
            jobs.push_back(ScoreJob{c, s});
    if (jobs.empty())
        raise(ErrorCode::insufficient_data, "no candidate-role speakers to score");
    data.scores = score_jobs(in, jobs, score_config(m), workers);

    DebateDayRule rule = parse_debate_day_rule(m.debate_day);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const Conversation& conv = in.conversations[jobs[i].conversation];
        const MatchScore& score = data.scores[i];
        int sched = schedule_for(in.schedules, conv.id);
        if (sched < 0) {
            data.warnings.push_back("no schedule lists debate '" + conv.id +
                                    "'; skipped in the panel");
            continue;
        }
        const DebateSchedule& schedule = in.schedules[static_cast<std::size_t>(sched)];
        if (conv.election_year && *conv.election_year != schedule.election_year)
            raise(ErrorCode::validation,
                  "conversation '" + conv.id + "' says election year " +
                      std::to_string(*conv.election_year) + " but the schedule says " +
                      std::to_string(schedule.election_year));
        if (!score.mean_z) {
            data.warnings.push_back("no defined marker for '" + score.focal_speaker +
                                    "' in '" + conv.id + "'; skipped in the panel");
            continue;
        }
        try {
            PollWindowDiff diff =
                poll_diff(in.polls, schedule, conv.id, score.focal_speaker, rule);
            data.diffs.push_back(diff);
            data.panel.push_back(PanelRow{score.focal_speaker, schedule.election_year,
                                          conv.id, *score.mean_z, diff.p_diff});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::insufficient_data) throw;
            data.warnings.push_back(std::string(e.what()) + "; skipped in the panel");
        }
    }
    if (data.panel.empty())
        raise(ErrorCode::insufficient_data,
              "empty join: no (debate, candidate) pair has both a score and poll data");
    return data;
}

void group_row(TableWriter& t, const char* name, const GroupStats& g) {
    t.row({name, std::to_string(g.n), fmt_opt(g.mean), fmt_opt(g.median),
           fmt_opt(g.ci_low), fmt_opt(g.ci_high)});
}

json group_json(const GroupStats& g) {
    json j;
    j["n"] = g.n;
    j["mean"] = g.mean ? json(*g.mean) : json(nullptr);
    j["median"] = g.median ? json(*g.median) : json(nullptr);
    j["ci_low"] = g.ci_low ? json(*g.ci_low) : json(nullptr);
    j["ci_high"] = g.ci_high ? json(*g.ci_high) : json(nullptr);
    return j;
}

struct TurnLsmRow {
    std::string debate;
    std::string candidate;
    std::string partner;
    double turn_score = 0.0;
    double mean_z = 0.0;
};

std::vector<TurnLsmRow> turn_lsm_rows(const LoadedInputs& in, const Study1Data& data,
                                      std::vector<std::string>& warnings) {
    std::vector<TurnLsmRow> rows;
    for (const Conversation& conv : in.conversations) {
        std::vector<std::string> candidates = speakers_to_score(conv, true);
        if (candidates.size() != 2) {
            warnings.push_back("turn-LSM needs exactly 2 candidates in '" + conv.id +
                               "', found " + std::to_string(candidates.size()));
            continue;
        }
        double score;
        try {
            score = turn_lsm(conv, candidates[0], candidates[1], in.lexicon);
        } catch (const Error& e) {
            warnings.push_back(std::string("turn-LSM skipped for '") + conv.id +
                               "': " + e.what());
            continue;
        }
        for (int side = 0; side < 2; ++side) {
            const std::string& cand = candidates[static_cast<std::size_t>(side)];
            const std::string& partner = candidates[static_cast<std::size_t>(1 - side)];
            for (const MatchScore& s : data.scores) {
                if (s.conversation_id == conv.id && s.focal_speaker == cand && s.mean_z)
                    rows.push_back(TurnLsmRow{conv.id, cand, partner, score, *s.mean_z});
            }
        }
    }
    return rows;
}

RunResult run_study1(const RunManifest& m, int workers) {
    LoadedInputs in = load_inputs(m, true);
    if (in.conversations.empty()) raise(ErrorCode::config, "no transcripts given");
    Study1Data data = build_study1_data(m, in, workers);

    RunResult res;
    res.warnings = data.warnings;
    fs::create_directories(m.out_dir);

    MatcherSplit split = group_by_matching(data.scores, data.diffs);

    // Inferential battery; any test that cannot run on this corpus is
    // reported as NA with a warning instead of aborting the rest.
    std::optional<MannWhitneyResult> mw;
    std::optional<TTestResult> welch, pooled;
    if (!split.matcher_diffs.empty() && !split.non_matcher_diffs.empty()) {
        mw = mann_whitney_u(split.matcher_diffs, split.non_matcher_diffs);
        if (split.matcher_diffs.size() >= 2 && split.non_matcher_diffs.size() >= 2) {
            try {
                welch = t_test(split.matcher_diffs, split.non_matcher_diffs, false);
                pooled = t_test(split.matcher_diffs, split.non_matcher_diffs, true);
            } catch (const Error& e) {
                res.warnings.push_back(std::string("t-test skipped: ") + e.what());
            }
        } else {
            res.warnings.push_back("t-test skipped: a group has fewer than 2 rows");
        }
    } else {
        res.warnings.push_back("matcher/non-matcher tests skipped: a group is empty");
    }

    std::vector<TurnLsmRow> turn_rows = turn_lsm_rows(in, data, res.warnings);
    std::optional<double> turn_r;
    {
        std::vector<double> ts, zs;
        for (const TurnLsmRow& r : turn_rows) {
            ts.push_back(r.turn_score);
            zs.push_back(r.mean_z);
        }
        if (ts.size() >= 3) {
            try {
                turn_r = pearson_r(ts, zs);
            } catch (const Error& e) {
                res.warnings.push_back(std::string("turn-LSM correlation skipped: ") +
                                       e.what());
            }
        } else {
            res.warnings.push_back("turn-LSM correlation skipped: fewer than 3 rows");
        }
    }

    std::optional<RegressionBand> band;
    {
        std::vector<std::size_t> order(data.panel.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data.panel[a].z < data.panel[b].z;
        });
        std::vector<double> zs, diffs;
        for (std::size_t i : order) {
            zs.push_back(data.panel[i].z);
            diffs.push_back(data.panel[i].p_diff);
        }
        try {
            band = simple_regression_band(zs, diffs, 0.95);
        } catch (const Error& e) {
            res.warnings.push_back(std::string("regression band skipped: ") + e.what());
        }
    }

    struct Model {
        const char* name;
        bool cand;
        bool year;
        std::optional<RegressionResult> fit;
    };
    std::vector<Model> models = {{"ols", false, false, {}},
                                 {"candidate_fe", true, false, {}},
                                 {"candidate_year_fe", true, true, {}}};
    for (Model& model : models) {
        try {
            model.fit = fixed_effects_ols(data.panel, model.cand, model.year);
        } catch (const Error& e) {
            res.warnings.push_back(std::string("regression '") + model.name +
                                   "' skipped: " + e.what());
        }
    }

    if (m.format == "record") {
        json doc;
        doc["manifest"] = manifest_json_obj(m);
        doc["scores"] = json::array();
        for (const MatchScore& s : data.scores)
            doc["scores"].push_back(json::parse(score_to_json(s)));
        doc["panel"] = json::array();
        for (const PanelRow& r : data.panel) {
            json j;
            j["debate"] = r.debate_id;
            j["candidate"] = r.candidate;
            j["election_year"] = r.election_year;
            j["z"] = r.z;
            j["p_diff"] = r.p_diff;
            doc["panel"].push_back(std::move(j));
        }
        doc["groups"]["matcher"] = group_json(split.matcher);
        doc["groups"]["non_matcher"] = group_json(split.non_matcher);
        doc["tests"] = json::object();
        if (mw) {
            doc["tests"]["mann_whitney_u"] = {{"u", mw->u},
                                              {"p", mw->p_two_sided},
                                              {"exact", mw->exact}};
        }
        for (const auto* t : {&welch, &pooled}) {
            if (!*t) continue;
            const char* key = (*t)->pooled ? "t_pooled" : "t_welch";
            doc["tests"][key] = {{"t", (*t)->t},
                                 {"df", (*t)->df},
                                 {"p", (*t)->p_two_sided},
                                 {"eta_squared", (*t)->eta_squared}};
        }
        if (turn_r) doc["tests"]["turn_lsm_pearson_r"] = *turn_r;
        if (band) {
            doc["fig1_regression"] = {{"slope", band->slope},
                                      {"intercept", band->intercept}};
            doc["fig1_band"] = json::array();
            for (const BandPoint& p : band->band)
                doc["fig1_band"].push_back({{"z", p.x},
                                            {"fit", p.fit},
                                            {"ci_low", p.ci_low},
                                            {"ci_high", p.ci_high}});
        }
        doc["regressions"] = json::array();
        for (const Model& model : models) {
            if (!model.fit) continue;
            json jm;
            jm["model"] = model.name;
            jm["n"] = model.fit->n_obs;
            jm["r_squared"] = model.fit->r_squared;
            jm["adj_r_squared"] = model.fit->adj_r_squared;
            jm["df_resid"] = model.fit->df_resid;
            jm["terms"] = json::array();
            for (std::size_t j = 0; j < model.fit->names.size(); ++j)
                jm["terms"].push_back({{"term", model.fit->names[j]},
                                       {"estimate", model.fit->coef[j]},
                                       {"std_error", model.fit->std_error[j]},
                                       {"t", model.fit->t_stat[j]},
                                       {"p", model.fit->p_value[j]}});
            doc["regressions"].push_back(std::move(jm));
        }
        doc["turn_lsm"] = json::array();
        for (const TurnLsmRow& r : turn_rows)
            doc["turn_lsm"].push_back({{"debate", r.debate},
                                       {"candidate", r.candidate},
                                       {"partner", r.partner},
                                       {"turn_lsm", r.turn_score},
                                       {"mean_z", r.mean_z}});
        write_file(fs::path(m.out_dir) / "study1.json", doc.dump(2) + "\n", res.files);
    } else {
        TableWriter scores_t(m, kScoreColumns);
        for (const MatchScore& s : data.scores) append_score_rows(scores_t, s);
        write_file(fs::path(m.out_dir) / "scores.tsv", scores_t.text(), res.files);

        TableWriter panel_t(m, {"debate", "candidate", "election_year", "z", "p_diff"});
        for (const PanelRow& r : data.panel)
            panel_t.row({r.debate_id, r.candidate, std::to_string(r.election_year),
                         fmt(r.z), fmt(r.p_diff)});
        write_file(fs::path(m.out_dir) / "panel.tsv", panel_t.text(), res.files);

        TableWriter groups_t(m, {"group", "n", "mean", "median", "ci_low", "ci_high"});
        group_row(groups_t, "matcher", split.matcher);
        group_row(groups_t, "non_matcher", split.non_matcher);
        write_file(fs::path(m.out_dir) / "groups.tsv", groups_t.text(), res.files);

        TableWriter tests_t(m, {"test", "statistic", "df", "p", "eta_squared", "n"});
        if (mw)
            tests_t.row({"mann_whitney_u", fmt(mw->u), "NA", fmt(mw->p_two_sided), "NA",
                         std::to_string(split.matcher_diffs.size() +
                                        split.non_matcher_diffs.size())});
        else
            tests_t.row({"mann_whitney_u", "NA", "NA", "NA", "NA", "NA"});
        for (const auto* t : {&welch, &pooled}) {
            const char* name = t == &welch ? "t_welch" : "t_pooled";
            if (*t)
                tests_t.row({name, fmt((*t)->t), fmt((*t)->df), fmt((*t)->p_two_sided),
                             fmt((*t)->eta_squared), "NA"});
            else
                tests_t.row({name, "NA", "NA", "NA", "NA", "NA"});
        }
        tests_t.row({"turn_lsm_pearson_r", turn_r ? fmt(*turn_r) : "NA", "NA", "NA", "NA",
                     std::to_string(turn_rows.size())});
        write_file(fs::path(m.out_dir) / "tests.tsv", tests_t.text(), res.files);

        TableWriter scatter_t(m, {"debate", "candidate", "election_year", "z", "p_diff"});
        for (const PanelRow& r : data.panel)
            scatter_t.row({r.debate_id, r.candidate, std::to_string(r.election_year),
                           fmt(r.z), fmt(r.p_diff)});
        write_file(fs::path(m.out_dir) / "fig1_scatter.tsv", scatter_t.text(), res.files);

        TableWriter band_t(m, {"z", "fit", "ci_low", "ci_high"});
        if (band)
            for (const BandPoint& p : band->band)
                band_t.row({fmt(p.x), fmt(p.fit), fmt(p.ci_low), fmt(p.ci_high)});
        write_file(fs::path(m.out_dir) / "fig1_band.tsv", band_t.text(), res.files);

        TableWriter models_t(m, {"model", "n", "r_squared", "adj_r_squared", "df_resid"});
        TableWriter coef_t(m, {"model", "term", "estimate", "std_error", "t", "p"});
        for (const Model& model : models) {
            if (!model.fit) continue;
            models_t.row({model.name, std::to_string(model.fit->n_obs),
                          fmt(model.fit->r_squared), fmt(model.fit->adj_r_squared),
                          std::to_string(model.fit->df_resid)});
            for (std::size_t j = 0; j < model.fit->names.size(); ++j)
                coef_t.row({model.name, model.fit->names[j], fmt(model.fit->coef[j]),
                            fmt(model.fit->std_error[j]), fmt(model.fit->t_stat[j]),
                            fmt(model.fit->p_value[j])});
        }
        write_file(fs::path(m.out_dir) / "regression_models.tsv", models_t.text(),
                   res.files);
        write_file(fs::path(m.out_dir) / "regression_coefficients.tsv", coef_t.text(),
                   res.files);

        TableWriter turn_t(m, {"debate", "candidate", "partner", "turn_lsm", "mean_z"});
        for (const TurnLsmRow& r : turn_rows)
            turn_t.row({r.debate, r.candidate, r.partner, fmt(r.turn_score), fmt(r.mean_z)});
        write_file(fs::path(m.out_dir) / "turn_lsm.tsv", turn_t.text(), res.files);
    }

    res.summary = "panel rows: " + std::to_string(data.panel.size()) +
                  "; matchers: " + std::to_string(split.matcher.n) +
                  "; non-matchers: " + std::to_string(split.non_matcher.n);
    return res;
}

RunResult run_temporal(const RunManifest& m, int workers) {
    LoadedInputs in = load_inputs(m, true);
    if (in.conversations.empty()) raise(ErrorCode::config, "no transcripts given");
    if (m.parts < 1) raise(ErrorCode::config, "parts must be at least 1");

    RunResult res;
    struct ProfileJob {
        std::size_t conversation;
        std::string speaker;
    };
    std::vector<ProfileJob> jobs;
    for (std::size_t c = 0; c < in.conversations.size(); ++c) {
        const Conversation& conv = in.conversations[c];
        if (static_cast<int>(conv.utterances.size()) < m.parts) {
            res.warnings.push_back("conversation '" + conv.id + "' has " +
                                   std::to_string(conv.utterances.size()) +
                                   " utterances, fewer than " + std::to_string(m.parts) +
                                   " parts; skipped");
            continue;
        }
        for (const std::string& s : speakers_to_score(conv, true))
            jobs.push_back(ProfileJob{c, s});
    }
    if (jobs.empty())
        raise(ErrorCode::insufficient_data, "no conversation is long enough to profile");

    ScoreConfig cfg = score_config(m);
    std::vector<TemporalProfile> profiles(jobs.size());
    parallel_tasks(jobs.size(), resolve_workers(workers), [&](std::size_t i) {
        profiles[i] = prefix_curve(in.conversations[jobs[i].conversation],
                                   jobs[i].speaker, in.lexicon, m.parts, cfg);
    });

    // Poll diffs for grouping.
    DebateDayRule rule = parse_debate_day_rule(m.debate_day);
    std::vector<PollWindowDiff> diffs;
    for (const TemporalProfile& p : profiles) {
        int sched = schedule_for(in.schedules, p.conversation_id);
        if (sched < 0) continue;
        try {
            diffs.push_back(poll_diff(in.polls, in.schedules[static_cast<std::size_t>(sched)],
                                      p.conversation_id, p.focal_speaker, rule));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::insufficient_data) throw;
            res.warnings.push_back(std::string(e.what()) + "; profile not grouped");
        }
    }
    GroupedCurves curves = grouped_curves(profiles, diffs);

    fs::create_directories(m.out_dir);
    if (m.format == "record") {
        json doc;
        doc["manifest"] = manifest_json_obj(m);
        doc["profiles"] = json::array();
        for (const TemporalProfile& p : profiles) {
            json jp;
            jp["conversation"] = p.conversation_id;
            jp["speaker"] = p.focal_speaker;
            jp["parts"] = p.parts;
            jp["curve"] = json::array();
            for (const auto& v : p.curve)
                jp["curve"].push_back(v ? json(*v) : json(nullptr));
            doc["profiles"].push_back(std::move(jp));
        }
        auto dump_curve = [](const std::vector<CurvePoint>& pts) {
            json arr = json::array();
            for (const CurvePoint& p : pts)
                arr.push_back({{"prefix_index", p.prefix_index},
                               {"n", p.n},
                               {"mean", p.mean ? json(*p.mean) : json(nullptr)},
                               {"ci_low", p.ci_low ? json(*p.ci_low) : json(nullptr)},
                               {"ci_high", p.ci_high ? json(*p.ci_high) : json(nullptr)}});
            return arr;
        };
        doc["curves"]["gaining"] = dump_curve(curves.gaining);
        doc["curves"]["losing"] = dump_curve(curves.losing);
        write_file(fs::path(m.out_dir) / "temporal.json", doc.dump(2) + "\n", res.files);
    } else {
        TableWriter prof_t(m, {"conversation", "speaker", "prefix_index", "mean_z"});
        for (const TemporalProfile& p : profiles)
            for (std::size_t i = 0; i < p.curve.size(); ++i)
                prof_t.row({p.conversation_id, p.focal_speaker,
                            std::to_string(i + 1), fmt_opt(p.curve[i])});
        write_file(fs::path(m.out_dir) / "profiles.tsv", prof_t.text(), res.files);

        TableWriter fig2_t(m, {"group", "prefix_index", "mean", "ci_low", "ci_high", "n"});
        auto rows = [&](const char* name, const std::vector<CurvePoint>& pts) {
            for (const CurvePoint& p : pts)
                fig2_t.row({name, std::to_string(p.prefix_index), fmt_opt(p.mean),
                            fmt_opt(p.ci_low), fmt_opt(p.ci_high), std::to_string(p.n)});
        };
        rows("gaining", curves.gaining);
        rows("losing", curves.losing);
        write_file(fs::path(m.out_dir) / "fig2.tsv", fig2_t.text(), res.files);
    }
    res.summary = "profiles: " + std::to_string(profiles.size()) +
                  "; grouped rows: " + std::to_string(curves.joined);
    return res;
}

RunResult run_validate(const RunManifest& m, int workers) {
    ValidateConfig cfg;
    cfg.seed = m.seed == 0 ? 17 : m.seed;
    cfg.oracle_permutations = m.permutations;
    cfg.workers = workers;
    Lexicon lexicon = m.lexicon.empty()
                          ? Lexicon::bundled()
                          : Lexicon::load_file(m.lexicon,
                                               m.lexicon_format == "liwc"
                                                   ? LexiconFormat::liwc
                                                   : LexiconFormat::lex);
    std::vector<SuiteResult> suites = run_validation(cfg, lexicon);

    RunResult res;
    fs::create_directories(m.out_dir);
    TableWriter table(m, {"suite", "cases", "failures", "passed"});
    std::string lines;
    for (const SuiteResult& s : suites) {
        table.row({s.name, std::to_string(s.cases), std::to_string(s.failures),
                   s.passed ? "1" : "0"});
        lines += (s.passed ? "PASS " : "FAIL ") + s.name + "\n";
        for (const std::string& d : s.details) lines += "  " + d + "\n";
    }
    write_file(fs::path(m.out_dir) / "validate.tsv", table.text(), res.files);
    res.ok = all_passed(suites);
    res.summary = lines + (res.ok ? "validation passed" : "validation FAILED");
    return res;
}

RunResult run_synth(const RunManifest& m, int) {
    Lexicon lexicon = m.lexicon.empty()
                          ? Lexicon::bundled()
                          : Lexicon::load_file(m.lexicon,
                                               m.lexicon_format == "liwc"
                                                   ? LexiconFormat::liwc
                                                   : LexiconFormat::lex);
    if (m.synth.conversations < 1)
        raise(ErrorCode::config, "synth needs at least 1 conversation");

    RunResult res;
    fs::create_directories(m.out_dir);
    for (int i = 0; i < m.synth.conversations; ++i) {
        SynthConfig sc;
        sc.n_utterances = m.synth.utterances;
        sc.topology = parse_topology(m.synth.topology);
        sc.drive_rate = m.synth.drive_rate;
        sc.default_rates.q0 = m.synth.q0;
        sc.default_rates.q1 = m.synth.q1;
        sc.default_rates.q1_end = m.synth.q1_end;
        sc.fillers_per_utterance = m.synth.fillers;
        sc.seed = stream_rng(m.seed, static_cast<std::uint64_t>(i)).next_u64();
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "%03d", i + 1);
        sc.id = "synthetic-" + std::string(suffix);
        GeneratedConversation gen = generate(sc, lexicon);

        json transcript = json::parse(serialize_conversation(gen.conversation));
        transcript["manifest"] = manifest_json_obj(m);
        write_file(fs::path(m.out_dir) / (sc.id + ".json"), transcript.dump(2) + "\n",
                   res.files);
        json truth = json::parse(truth_to_json(gen.truth));
        truth["manifest"] = manifest_json_obj(m);
        write_file(fs::path(m.out_dir) / (sc.id + ".truth.json"), truth.dump(2) + "\n",
                   res.files);
    }
    res.summary = "generated " + std::to_string(m.synth.conversations) +
                  " conversations of " + std::to_string(m.synth.utterances) +
                  " utterances";
    return res;
}

} // namespace

std::string RunManifest::to_json() const {
    json doc;
    doc["command"] = command;
    doc["transcripts"] = transcripts;
    doc["transcript_format"] = transcript_format;
    doc["speaker_map"] = speaker_map;
    doc["polls"] = polls;
    doc["schedules"] = schedules;
    doc["lexicon"] = lexicon;
    doc["lexicon_format"] = lexicon_format;
    doc["permutations"] = permutations;
    doc["seed"] = seed;
    doc["method"] = method;
    doc["parts"] = parts;
    doc["out_dir"] = out_dir;
    doc["format"] = format;
    doc["debate_day"] = debate_day;
    doc["exclude_roles"] = exclude_roles;
    if (command == "synth") {
        json s;
        s["conversations"] = synth.conversations;
        s["utterances"] = synth.utterances;
        s["q0"] = synth.q0;
        s["q1"] = synth.q1;
        s["q1_end"] = synth.q1_end ? json(*synth.q1_end) : json(nullptr);
        s["drive_rate"] = synth.drive_rate;
        s["topology"] = synth.topology;
        s["fillers"] = synth.fillers;
        doc["synth"] = std::move(s);
    }
    return doc.dump();
}

RunManifest RunManifest::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::parse, std::string("manifest JSON: ") + e.what());
    }
    RunManifest m;
    try {
        m.command = doc.at("command").get<std::string>();
        if (doc.contains("transcripts"))
            m.transcripts = doc["transcripts"].get<std::vector<std::string>>();
        if (doc.contains("transcript_format"))
            m.transcript_format = doc["transcript_format"].get<std::string>();
        if (doc.contains("speaker_map")) m.speaker_map = doc["speaker_map"].get<std::string>();
        if (doc.contains("polls")) m.polls = doc["polls"].get<std::string>();
        if (doc.contains("schedules"))
            m.schedules = doc["schedules"].get<std::vector<std::string>>();
        if (doc.contains("lexicon")) m.lexicon = doc["lexicon"].get<std::string>();
        if (doc.contains("lexicon_format"))
            m.lexicon_format = doc["lexicon_format"].get<std::string>();
        if (doc.contains("permutations")) m.permutations = doc["permutations"].get<int>();
        if (doc.contains("seed")) m.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("method")) m.method = doc["method"].get<std::string>();
        if (doc.contains("parts")) m.parts = doc["parts"].get<int>();
        if (doc.contains("out_dir")) m.out_dir = doc["out_dir"].get<std::string>();
        if (doc.contains("format")) m.format = doc["format"].get<std::string>();
        if (doc.contains("debate_day")) m.debate_day = doc["debate_day"].get<std::string>();
        if (doc.contains("exclude_roles"))
            m.exclude_roles = doc["exclude_roles"].get<std::vector<std::string>>();
        if (doc.contains("synth")) {
            const json& s = doc["synth"];
            if (s.contains("conversations")) m.synth.conversations = s["conversations"].get<int>();
            if (s.contains("utterances")) m.synth.utterances = s["utterances"].get<int>();
            if (s.contains("q0")) m.synth.q0 = s["q0"].get<double>();
            if (s.contains("q1")) m.synth.q1 = s["q1"].get<double>();
            if (s.contains("q1_end") && !s["q1_end"].is_null())
                m.synth.q1_end = s["q1_end"].get<double>();
            if (s.contains("drive_rate")) m.synth.drive_rate = s["drive_rate"].get<double>();
            if (s.contains("topology")) m.synth.topology = s["topology"].get<std::string>();
            if (s.contains("fillers")) m.synth.fillers = s["fillers"].get<int>();
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, std::string("manifest JSON: ") + e.what());
    }
    return m;
}

RunResult run_manifest(const RunManifest& manifest, int workers) {
    if (manifest.format != "table" && manifest.format != "record")
        raise(ErrorCode::config, "format must be 'table' or 'record'");
    if (manifest.command == "score") return run_score(manifest, workers);
    if (manifest.command == "study1") return run_study1(manifest, workers);
    if (manifest.command == "temporal") return run_temporal(manifest, workers);
    if (manifest.command == "validate") return run_validate(manifest, workers);
    if (manifest.command == "synth") return run_synth(manifest, workers);
    raise(ErrorCode::config, "unknown command '" + manifest.command + "'");
}

} // namespace lsm
