#include "core/temporal.hpp"

#include <algorithm>

#include "core/error.hpp"
#include "core/mathutil.hpp"

namespace lsm {

std::vector<std::pair<int, int>> segment(int n_utterances, int parts) {
    if (parts < 1) raise(ErrorCode::config, "part count must be at least 1");
    if (n_utterances < parts)
        raise(ErrorCode::insufficient_data,
              "cannot split " + std::to_string(n_utterances) + " utterances into " +
                  std::to_string(parts) + " parts");
    int base = n_utterances / parts;
    int longer = n_utterances % parts;
    std::vector<std::pair<int, int>> ranges;
    ranges.reserve(parts);
    int begin = 0;
    for (int i = 0; i < parts; ++i) {
        int size = base + (i < longer ? 1 : 0);
        ranges.emplace_back(begin, begin + size);
        begin += size;
    }
    return ranges;
}

TemporalProfile prefix_curve(const Conversation& conv, std::string_view focal_speaker,
                             const Lexicon& lexicon, int parts,
                             const ScoreConfig& config) {
    auto ranges = segment(static_cast<int>(conv.utterances.size()), parts);
    TemporalProfile profile;
    profile.conversation_id = conv.id;
    profile.focal_speaker = std::string(focal_speaker);
    profile.parts = parts;
    profile.curve.resize(parts);

    Conversation prefix;
    prefix.id = conv.id;
    prefix.date = conv.date;
    prefix.election_year = conv.election_year;
    for (int i = 0; i < parts; ++i) {
        int end = ranges[static_cast<std::size_t>(i)].second;
        while (static_cast<int>(prefix.utterances.size()) < end)
            prefix.utterances.push_back(conv.utterances[prefix.utterances.size()]);
        if (!prefix.has_speaker(focal_speaker)) continue;
        try {
            MatchScore s = lsm_score(prefix, focal_speaker, lexicon, config);
            if (s.mean_z) profile.curve[static_cast<std::size_t>(i)] = *s.mean_z;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::degenerate) throw;
            // no defined marker yet: entry stays absent
        }
    }
    return profile;
}

GroupedCurves grouped_curves(std::span<const TemporalProfile> profiles,
                             std::span<const PollWindowDiff> diffs) {
    int parts = 0;
    for (const TemporalProfile& p : profiles) {
        if (parts == 0) parts = p.parts;
        if (p.parts != parts)
            raise(ErrorCode::validation, "profiles disagree on the part count");
    }

    GroupedCurves out;
    std::vector<const TemporalProfile*> gaining, losing;
    for (const TemporalProfile& p : profiles) {
        for (const PollWindowDiff& d : diffs) {
            if (p.conversation_id != d.debate_id || p.focal_speaker != d.candidate)
                continue;
            ++out.joined;
            if (d.p_diff > 0.0)
                gaining.push_back(&p);
            else if (d.p_diff < 0.0)
                losing.push_back(&p);
        }
    }
    if (out.joined == 0)
        raise(ErrorCode::insufficient_data,
              "no (conversation, speaker) rows shared between profiles and poll diffs");

    auto summarize = [&](const std::vector<const TemporalProfile*>& group) {
        std::vector<CurvePoint> curve;
        for (int i = 0; i < parts; ++i) {
            CurvePoint pt;
            pt.prefix_index = i + 1;
            std::vector<double> values;
            for (const TemporalProfile* p : group)
                if (p->curve[static_cast<std::size_t>(i)])
                    values.push_back(*p->curve[static_cast<std::size_t>(i)]);
            pt.n = static_cast<int>(values.size());
            if (!values.empty()) {
                pt.mean = sample_mean(values);
                if (values.size() >= 2) {
                    double half = mean_ci_halfwidth(values, 0.95);
                    pt.ci_low = *pt.mean - half;
                    pt.ci_high = *pt.mean + half;
                }
            }
            curve.push_back(pt);
        }
        return curve;
    };
    out.gaining = summarize(gaining);
    out.losing = summarize(losing);
    return out;
}

} // namespace lsm
