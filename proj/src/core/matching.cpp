#include "core/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace lsm {

std::string_view null_method_name(NullMethod m) {
    switch (m) {
        case NullMethod::monte_carlo: return "mc";
        case NullMethod::analytic: return "analytic";
        case NullMethod::exact_enumeration: return "exact";
    }
    return "mc";
}

NullMethod parse_null_method(std::string_view name) {
    if (name == "mc" || name == "monte-carlo") return NullMethod::monte_carlo;
    if (name == "analytic") return NullMethod::analytic;
    if (name == "exact" || name == "exact-enumeration") return NullMethod::exact_enumeration;
    raise(ErrorCode::config, "unknown null method '" + std::string(name) + "'");
}

namespace {

// Replicates are accumulated in fixed-size chunks; chunk partial sums are
// reduced in chunk order, so floating-point results are identical for any
// worker count.
constexpr int kReplicateChunk = 1024;

// Incidence bookkeeping for one (conversation, focal speaker) pair.
struct FocalTable {
    int n_focal = 0;                                 // N: focal utterance count
    std::vector<int> focal_positions;                // conversation index per slot
    std::vector<std::vector<std::uint8_t>> focal_inc; // [marker][slot]
    // Slots whose predecessor exists and contains the marker.
    std::vector<std::vector<int>> marked_slots;      // [marker] -> slot indices
    std::vector<int> marked_count;                   // K_m: focal utterances with marker

    // Whole-conversation incidence, for the global shuffle scheme.
    std::vector<std::vector<std::uint8_t>> all_inc;  // [marker][utterance index]

    ObservedCounts observed(std::size_t m) const {
        ObservedCounts c;
        c.n_prev = static_cast<int>(marked_slots[m].size());
        for (int k : marked_slots[m]) c.n_joint += focal_inc[m][k];
        return c;
    }
};

FocalTable build_table(const Conversation& conv, std::string_view focal,
                       const Lexicon& lexicon) {
    if (!conv.has_speaker(focal))
        raise(ErrorCode::not_found, "speaker '" + std::string(focal) +
                                        "' not present in conversation '" + conv.id + "'");
    std::size_t n_markers = lexicon.markers().size();
    FocalTable t;
    t.all_inc.assign(n_markers, {});
    for (auto& v : t.all_inc) v.resize(conv.utterances.size());
    for (const Utterance& u : conv.utterances) {
        auto inc = marker_incidence(lexicon, u.tokens);
        for (std::size_t m = 0; m < n_markers; ++m) t.all_inc[m][u.index] = inc[m];
        if (u.speaker == focal) t.focal_positions.push_back(u.index);
    }
    t.n_focal = static_cast<int>(t.focal_positions.size());
    t.focal_inc.assign(n_markers, std::vector<std::uint8_t>(t.n_focal, 0));
    t.marked_slots.assign(n_markers, {});
    t.marked_count.assign(n_markers, 0);
    for (int k = 0; k < t.n_focal; ++k) {
        int pos = t.focal_positions[k];
        for (std::size_t m = 0; m < n_markers; ++m) {
            t.focal_inc[m][k] = t.all_inc[m][pos];
            t.marked_count[m] += t.all_inc[m][pos];
            if (pos >= 1 && t.all_inc[m][pos - 1]) t.marked_slots[m].push_back(k);
        }
    }
    return t;
}

int resolve_marker(const Lexicon& lexicon, std::string_view marker) {
    int idx = lexicon.marker_index(marker);
    if (idx < 0)
        raise(ErrorCode::not_found, "unknown marker category '" + std::string(marker) + "'");
    return idx;
}

// Welford accumulation; a constant stream yields an exact zero variance,
// which degenerate-marker detection relies on. Merging follows Chan's
// pairwise update and is done in fixed chunk order, so the result is
// independent of which worker ran which chunk.
struct NullAccumulator {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double p) {
        ++count;
        double delta = p - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (p - mean);
    }
    void merge(const NullAccumulator& o) {
        if (o.count == 0) return;
        if (count == 0) {
            *this = o;
            return;
        }
        double delta = o.mean - mean;
        long total = count + o.count;
        mean += delta * static_cast<double>(o.count) / static_cast<double>(total);
        m2 += o.m2 + delta * delta * static_cast<double>(count) *
                         static_cast<double>(o.count) / static_cast<double>(total);
        count = total;
    }
    NullSummary summary() const {
        return NullSummary{mean,
                           std::sqrt(std::max(0.0, m2 / static_cast<double>(count)))};
    }
};

// Monte Carlo nulls for the selected markers, all sharing one permutation per
// replicate (one randomization of the debate scores every marker).
std::vector<NullSummary> monte_carlo_nulls(const FocalTable& t,
                                           const std::vector<std::size_t>& markers,
                                           int n_permutations, std::uint64_t seed,
                                           ShuffleScheme scheme, int workers,
                                           std::size_t samples_marker,
                                           std::vector<double>* samples_out) {
    if (n_permutations < 1)
        raise(ErrorCode::config, "permutation count must be at least 1");
    std::size_t n_sel = markers.size();
    int n_chunks = (n_permutations + kReplicateChunk - 1) / kReplicateChunk;
    std::vector<NullAccumulator> partials(static_cast<std::size_t>(n_chunks) * n_sel);
    if (samples_out) samples_out->assign(n_permutations, std::nan(""));

    bool global = scheme == ShuffleScheme::global_slots;
    std::size_t perm_size = global ? t.all_inc[0].size()
                                   : static_cast<std::size_t>(t.n_focal);

    auto run_chunk = [&](std::size_t chunk) {
        std::vector<std::uint32_t> perm(perm_size);
        int begin = static_cast<int>(chunk) * kReplicateChunk;
        int end = std::min(n_permutations, begin + kReplicateChunk);
        for (int r = begin; r < end; ++r) {
            Rng rng = stream_rng(seed, static_cast<std::uint64_t>(r));
            std::iota(perm.begin(), perm.end(), 0u);
            bool identity = scheme == ShuffleScheme::biased_debug && rng.next_unit() < 0.25;
            if (!identity) shuffle(perm, rng);
            for (std::size_t s = 0; s < n_sel; ++s) {
                std::size_t m = markers[s];
                double p;
                if (global) {
                    int prev = 0, joint = 0;
                    for (int pos : t.focal_positions) {
                        if (pos < 1) continue;
                        if (t.all_inc[m][perm[pos - 1]]) {
                            ++prev;
                            joint += t.all_inc[m][perm[pos]];
                        }
                    }
                    if (prev == 0) continue; // replicate carries no information
                    p = static_cast<double>(joint) / prev;
                } else {
                    const auto& slots = t.marked_slots[m];
                    int joint = 0;
                    for (int k : slots) joint += t.focal_inc[m][perm[k]];
                    p = static_cast<double>(joint) / static_cast<double>(slots.size());
                }
                partials[chunk * n_sel + s].add(p);
                if (samples_out && m == samples_marker) (*samples_out)[r] = p;
            }
        }
    };
    parallel_tasks(static_cast<std::size_t>(n_chunks), resolve_workers(workers), run_chunk);

    std::vector<NullSummary> out(n_sel);
    for (std::size_t s = 0; s < n_sel; ++s) {
        NullAccumulator total;
        for (int c = 0; c < n_chunks; ++c) total.merge(partials[c * n_sel + s]);
        if (total.count == 0)
            raise(ErrorCode::degenerate,
                  "permutation null undefined: no replicate had a marked predecessor");
        out[s] = total.summary();
    }
    return out;
}

std::vector<NullSummary> enumeration_nulls(const FocalTable& t,
                                           const std::vector<std::size_t>& markers) {
    if (t.n_focal > 8)
        raise(ErrorCode::config,
              "exact enumeration supports at most 8 focal utterances, got " +
                  std::to_string(t.n_focal));
    std::vector<NullAccumulator> acc(markers.size());
    std::vector<int> perm(t.n_focal);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        for (std::size_t s = 0; s < markers.size(); ++s) {
            const auto& slots = t.marked_slots[markers[s]];
            if (slots.empty()) continue;
            int joint = 0;
            for (int k : slots) joint += t.focal_inc[markers[s]][perm[k]];
            acc[s].add(static_cast<double>(joint) / static_cast<double>(slots.size()));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<NullSummary> out(markers.size());
    for (std::size_t s = 0; s < markers.size(); ++s) {
        if (acc[s].count == 0)
            raise(ErrorCode::degenerate, "exact null undefined: no marked predecessor");
        out[s] = acc[s].summary();
    }
    return out;
}

NullSummary analytic_null_from_table(const FocalTable& t, std::size_t m) {
    int n_prev = static_cast<int>(t.marked_slots[m].size());
    int big_n = t.n_focal;
    if (big_n < 2 || n_prev == 0)
        raise(ErrorCode::degenerate,
              "analytic null undefined (focal utterances " + std::to_string(big_n) +
                  ", marked predecessors " + std::to_string(n_prev) + ")");
    double k = static_cast<double>(t.marked_count[m]);
    double n = static_cast<double>(big_n);
    double mean = k / n;
    double var = mean * (1.0 - mean) * (n - n_prev) / ((n - 1.0) * n_prev);
    return NullSummary{mean, std::sqrt(std::max(0.0, var))};
}

} // namespace

ObservedCounts observed_probability(const Conversation& conv, std::string_view focal,
                                    std::string_view marker, const Lexicon& lexicon) {
    FocalTable t = build_table(conv, focal, lexicon);
    return t.observed(static_cast<std::size_t>(resolve_marker(lexicon, marker)));
}

NullSummary permutation_null(const Conversation& conv, std::string_view focal,
                             std::string_view marker, const Lexicon& lexicon,
                             int n_permutations, std::uint64_t seed, ShuffleScheme scheme,
                             int workers, std::vector<double>* samples_out) {
    FocalTable t = build_table(conv, focal, lexicon);
    auto m = static_cast<std::size_t>(resolve_marker(lexicon, marker));
    if (t.marked_slots[m].empty() && scheme != ShuffleScheme::global_slots)
        raise(ErrorCode::degenerate,
              "permutation null undefined: marker '" + std::string(marker) +
                  "' never appears in a predecessor");
    return monte_carlo_nulls(t, {m}, n_permutations, seed, scheme, workers, m,
                             samples_out)[0];
}

NullSummary analytic_null(const Conversation& conv, std::string_view focal,
                          std::string_view marker, const Lexicon& lexicon) {
    FocalTable t = build_table(conv, focal, lexicon);
    return analytic_null_from_table(
        t, static_cast<std::size_t>(resolve_marker(lexicon, marker)));
}

NullSummary exact_null(const Conversation& conv, std::string_view focal,
                       std::string_view marker, const Lexicon& lexicon) {
    FocalTable t = build_table(conv, focal, lexicon);
    auto m = static_cast<std::size_t>(resolve_marker(lexicon, marker));
    return enumeration_nulls(t, {m})[0];
}

double marker_z(double p_obs, double null_mean, double null_std) {
    if (!(null_std > 0.0))
        raise(ErrorCode::degenerate, "marker z undefined: null distribution is degenerate");
    return (p_obs - null_mean) / null_std;
}

MatchScore lsm_score(const Conversation& conv, std::string_view focal,
                     const Lexicon& lexicon, const ScoreConfig& config) {
    FocalTable t = build_table(conv, focal, lexicon);
    std::size_t n_markers = lexicon.markers().size();

    MatchScore score;
    score.conversation_id = conv.id;
    score.focal_speaker = std::string(focal);
    score.n_permutations =
        config.method == NullMethod::monte_carlo ? config.n_permutations : 0;
    score.seed = config.seed;
    score.method = config.method;
    score.per_marker.resize(n_markers);

    std::vector<std::size_t> live; // markers with at least one marked predecessor
    for (std::size_t m = 0; m < n_markers; ++m) {
        MarkerMatchStat& stat = score.per_marker[m];
        stat.marker = lexicon.markers()[m].name;
        ObservedCounts obs = t.observed(m);
        stat.n_prev = obs.n_prev;
        stat.n_joint = obs.n_joint;
        if (obs.defined()) {
            stat.p_obs = obs.p_obs();
            live.push_back(m);
        }
    }

    std::vector<NullSummary> nulls(live.size());
    switch (config.method) {
        case NullMethod::monte_carlo:
            if (!live.empty())
                nulls = monte_carlo_nulls(t, live, config.n_permutations, config.seed,
                                          config.scheme, config.workers,
                                          n_markers /* none */, nullptr);
            break;
        case NullMethod::exact_enumeration:
            if (!live.empty()) nulls = enumeration_nulls(t, live);
            break;
        case NullMethod::analytic:
            for (std::size_t s = 0; s < live.size(); ++s) {
                if (t.n_focal < 2) {
                    nulls[s] = NullSummary{0.0, 0.0}; // degenerate, flagged below
                    continue;
                }
                nulls[s] = analytic_null_from_table(t, live[s]);
            }
            break;
    }

    double z_sum = 0.0;
    int z_count = 0;
    for (std::size_t s = 0; s < live.size(); ++s) {
        MarkerMatchStat& stat = score.per_marker[live[s]];
        stat.null_mean = nulls[s].mean;
        stat.null_std = nulls[s].stddev;
        if (stat.null_std > 0.0) {
            stat.z = (stat.p_obs - stat.null_mean) / stat.null_std;
            stat.defined = true;
            z_sum += stat.z;
            ++z_count;
        }
    }
    if (z_count > 0) score.mean_z = z_sum / z_count;
    return score;
}

double turn_lsm(const Conversation& conv, std::string_view speaker_a,
                std::string_view speaker_b, const Lexicon& lexicon) {
    for (std::string_view s : {speaker_a, speaker_b})
        if (!conv.has_speaker(s))
            raise(ErrorCode::not_found, "speaker '" + std::string(s) +
                                            "' not present in conversation '" + conv.id + "'");

    // Marker percentages per utterance; zero-token utterances count as 0%.
    auto percentages = [&](const Utterance& u) {
        std::vector<double> out(lexicon.markers().size(), 0.0);
        if (u.tokens.empty()) return out;
        for (std::size_t m = 0; m < out.size(); ++m) {
            std::size_t hits = 0;
            for (const std::string& tok : u.tokens)
                if (lexicon.markers()[m].matches(tok)) ++hits;
            out[m] = 100.0 * static_cast<double>(hits) /
                     static_cast<double>(u.tokens.size());
        }
        return out;
    };

    double pair_sum = 0.0;
    int pair_count = 0;
    for (std::size_t i = 0; i + 1 < conv.utterances.size(); ++i) {
        const Utterance& u = conv.utterances[i];
        const Utterance& v = conv.utterances[i + 1];
        bool ab = u.speaker == speaker_a && v.speaker == speaker_b;
        bool ba = u.speaker == speaker_b && v.speaker == speaker_a;
        if (!ab && !ba) continue;
        std::vector<double> pa = percentages(ab ? u : v);
        std::vector<double> pb = percentages(ab ? v : u);
        double cat_sum = 0.0;
        for (std::size_t m = 0; m < pa.size(); ++m)
            cat_sum += 1.0 - std::fabs(pa[m] - pb[m]) / (pa[m] + pb[m] + 0.0001);
        pair_sum += cat_sum / static_cast<double>(pa.size());
        ++pair_count;
    }
    if (pair_count == 0)
        raise(ErrorCode::insufficient_data,
              "no adjacent turn pairs between '" + std::string(speaker_a) + "' and '" +
                  std::string(speaker_b) + "'");
    return pair_sum / pair_count;
}

double lsm_asymmetry(const Conversation& conv, std::string_view speaker_a,
                     std::string_view speaker_b, const Lexicon& lexicon,
                     const ScoreConfig& config) {
    MatchScore a = lsm_score(conv, speaker_a, lexicon, config);
    MatchScore b = lsm_score(conv, speaker_b, lexicon, config);
    if (!a.mean_z || !b.mean_z)
        raise(ErrorCode::degenerate,
              "asymmetry not computable: a speaker has no defined marker");
    return *a.mean_z - *b.mean_z;
}

std::string score_to_json(const MatchScore& score) {
    nlohmann::ordered_json doc;
    doc["conversation"] = score.conversation_id;
    doc["speaker"] = score.focal_speaker;
    doc["method"] = std::string(null_method_name(score.method));
    doc["n_permutations"] = score.n_permutations;
    doc["seed"] = score.seed;
    if (score.mean_z)
        doc["mean_z"] = *score.mean_z;
    else
        doc["mean_z"] = nullptr;
    doc["markers"] = nlohmann::ordered_json::array();
    for (const MarkerMatchStat& s : score.per_marker) {
        nlohmann::ordered_json m;
        m["marker"] = s.marker;
        m["n_prev"] = s.n_prev;
        m["n_joint"] = s.n_joint;
        m["defined"] = s.defined;
        if (s.n_prev > 0)
            m["p_obs"] = s.p_obs;
        else
            m["p_obs"] = nullptr;
        if (s.defined) {
            m["null_mean"] = s.null_mean;
            m["null_std"] = s.null_std;
            m["z"] = s.z;
        } else {
            m["null_mean"] = nullptr;
            m["null_std"] = nullptr;
            m["z"] = nullptr;
        }
        doc["markers"].push_back(std::move(m));
    }
    return doc.dump(2) + "\n";
}

} // namespace lsm
