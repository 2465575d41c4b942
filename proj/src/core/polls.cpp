#include "core/polls.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/mathutil.hpp"

namespace lsm {

void DebateSchedule::validate() const {
    if (debates.empty())
        raise(ErrorCode::validation, "schedule has no debates");
    Date prev = window_start;
    for (const DebateRef& d : debates) {
        if (!(prev < d.date))
            raise(ErrorCode::validation,
                  "debate '" + d.id + "' (" + d.date.to_string() +
                      ") is not strictly after " + prev.to_string());
        prev = d.date;
    }
    if (!(prev < election_day))
        raise(ErrorCode::validation, "election day " + election_day.to_string() +
                                         " is not after the last debate");
}

int DebateSchedule::debate_index(std::string_view debate_id) const {
    for (std::size_t i = 0; i < debates.size(); ++i)
        if (debates[i].id == debate_id) return static_cast<int>(i);
    return -1;
}

DebateDayRule parse_debate_day_rule(std::string_view name) {
    if (name == "after") return DebateDayRule::after;
    if (name == "before") return DebateDayRule::before;
    if (name == "exclude") return DebateDayRule::exclude;
    raise(ErrorCode::config, "unknown debate-day rule '" + std::string(name) + "'");
}

std::string_view debate_day_rule_name(DebateDayRule rule) {
    switch (rule) {
        case DebateDayRule::after: return "after";
        case DebateDayRule::before: return "before";
        case DebateDayRule::exclude: return "exclude";
    }
    return "after";
}

bool DateWindow::contains(const Date& d) const {
    if (d < low || (d == low && !low_inclusive)) return false;
    if (high < d || (d == high && !high_inclusive)) return false;
    return true;
}

std::vector<DebateWindows> build_windows(const DebateSchedule& schedule,
                                         DebateDayRule rule) {
    schedule.validate();
    std::size_t n = schedule.debates.size();

    // Segment i spans debate i-1's date to debate i's date (with t_0 and the
    // election day as the outer fences); inclusivity of debate-date endpoints
    // follows the rule. Segment i is both after(d_i) and before(d_{i+1}).
    auto boundary_date = [&](std::size_t i) { // i in [0, n+1]
        if (i == 0) return schedule.window_start;
        if (i == n + 1) return schedule.election_day;
        return schedule.debates[i - 1].date;
    };
    auto segment = [&](std::size_t i) { // i in [0, n]
        DateWindow w;
        w.low = boundary_date(i);
        w.high = boundary_date(i + 1);
        // t_0 is never included; election day always is.
        bool low_is_debate = i >= 1;
        bool high_is_debate = i + 1 <= n;
        w.low_inclusive = low_is_debate && rule == DebateDayRule::after;
        w.high_inclusive = !high_is_debate || rule == DebateDayRule::before;
        return w;
    };

    std::vector<DebateWindows> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(DebateWindows{schedule.debates[i].id, segment(i), segment(i + 1)});
    return out;
}

std::vector<PollObservation> load_polls(std::string_view csv_text) {
    std::vector<PollObservation> out;
    std::istringstream in{std::string(csv_text)};
    std::string line;
    int row = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        if (!saw_header) {
            if (fields.size() != 3 || fields[0] != "candidate" || fields[1] != "date" ||
                fields[2] != "percent")
                raise(ErrorCode::parse,
                      "polls row " + std::to_string(row) +
                          ": expected header 'candidate,date,percent'");
            saw_header = true;
            continue;
        }
        if (fields.size() != 3)
            raise(ErrorCode::parse,
                  "polls row " + std::to_string(row) + ": expected 3 fields, got " +
                      std::to_string(fields.size()));
        PollObservation obs;
        obs.candidate = fields[0];
        try {
            obs.date = parse_date(fields[1]);
        } catch (const Error& e) {
            raise(ErrorCode::parse, "polls row " + std::to_string(row) + ": " + e.what());
        }
        try {
            std::size_t used = 0;
            obs.percent = std::stod(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument(fields[2]);
        } catch (const std::exception&) {
            raise(ErrorCode::parse, "polls row " + std::to_string(row) +
                                        ": bad percent '" + fields[2] + "'");
        }
        if (obs.percent < 0.0 || obs.percent > 100.0)
            raise(ErrorCode::validation, "polls row " + std::to_string(row) +
                                             ": percent " + fields[2] +
                                             " outside [0, 100]");
        out.push_back(std::move(obs));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PollObservation& a, const PollObservation& b) {
                         return a.date < b.date;
                     });
    return out;
}

std::vector<PollObservation> load_polls_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::config, "cannot open polls file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_polls(buf.str());
}

DebateSchedule parse_schedule(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorCode::parse, std::string("schedule JSON: ") + e.what());
    }
    DebateSchedule s;
    try {
        s.election_year = doc.at("election_year").get<int>();
        s.election_day = parse_date(doc.at("election_day").get<std::string>());
        if (doc.contains("window_start"))
            s.window_start = parse_date(doc["window_start"].get<std::string>());
        else
            s.window_start = Date{s.election_year, 9, 1};
        for (const auto& d : doc.at("debates"))
            s.debates.push_back(DebateRef{d.at("id").get<std::string>(),
                                          parse_date(d.at("date").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::parse, std::string("schedule JSON: ") + e.what());
    }
    s.validate();
    return s;
}

DebateSchedule load_schedule_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::config, "cannot open schedule file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_schedule(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

PollWindowDiff poll_diff(std::span<const PollObservation> observations,
                         const DebateSchedule& schedule, std::string_view debate_id,
                         std::string_view candidate, DebateDayRule rule) {
    int idx = schedule.debate_index(debate_id);
    if (idx < 0)
        raise(ErrorCode::not_found, "debate '" + std::string(debate_id) +
                                        "' not in the schedule");
    DebateWindows windows = build_windows(schedule, rule)[static_cast<std::size_t>(idx)];

    std::vector<double> before, after;
    for (const PollObservation& obs : observations) {
        if (obs.candidate != candidate) continue;
        if (windows.before.contains(obs.date)) before.push_back(obs.percent);
        if (windows.after.contains(obs.date)) after.push_back(obs.percent);
    }
    auto need = [&](const std::vector<double>& v, const char* which) {
        if (v.empty())
            raise(ErrorCode::insufficient_data,
                  std::string("no polls for '") + std::string(candidate) + "' in the " +
                      which + " window of debate '" + std::string(debate_id) + "'");
    };
    need(before, "before");
    need(after, "after");

    PollWindowDiff diff;
    diff.debate_id = std::string(debate_id);
    diff.candidate = std::string(candidate);
    diff.median_before = median(before);
    diff.median_after = median(after);
    diff.p_diff = diff.median_after - diff.median_before;
    diff.n_before = static_cast<int>(before.size());
    diff.n_after = static_cast<int>(after.size());
    return diff;
}

} // namespace lsm
