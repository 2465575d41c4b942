#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/date.hpp"

namespace lsm {

struct PollObservation {
    std::string candidate;
    Date date;
    double percent = 0.0; // in [0, 100]
};

struct DebateRef {
    std::string id;
    Date date;
};

struct DebateSchedule {
    int election_year = 0;
    Date window_start;          // t_0, defaults to September 1 of the election year
    Date election_day;          // t_{n+1}
    std::vector<DebateRef> debates; // dates strictly ascending, all inside (t_0, t_{n+1})

    void validate() const; // throws Error(validation) when ordering is broken
    int debate_index(std::string_view debate_id) const; // -1 when absent
};

// Where a poll taken exactly on a debate date belongs.
enum class DebateDayRule {
    after,   // counts toward the window after that debate (default)
    before,  // counts toward the window before it
    exclude, // dropped
};

DebateDayRule parse_debate_day_rule(std::string_view name);
std::string_view debate_day_rule_name(DebateDayRule rule);

struct DateWindow {
    Date low, high;
    bool low_inclusive = false;
    bool high_inclusive = false;

    bool contains(const Date& d) const;
};

struct DebateWindows {
    std::string debate_id;
    DateWindow before;
    DateWindow after;
};

// Consecutive debates partition the season (t_0, election day]; the before
// window of debate i and the after window of debate i-1 are the same span.
std::vector<DebateWindows> build_windows(const DebateSchedule& schedule,
                                         DebateDayRule rule = DebateDayRule::after);

struct PollWindowDiff {
    std::string debate_id;
    std::string candidate;
    double median_before = 0.0; // P_b
    double median_after = 0.0;  // P_a
    double p_diff = 0.0;        // P_a - P_b
    int n_before = 0;
    int n_after = 0;
};

// CSV with header "candidate,date,percent"; rows validated and returned
// sorted by date. Parse failures carry the row number.
std::vector<PollObservation> load_polls(std::string_view csv_text);
std::vector<PollObservation> load_polls_file(const std::string& path);

// JSON: {"election_year": int, "election_day": "YYYY-MM-DD",
//        "window_start"?: "YYYY-MM-DD", "debates": [{"id", "date"}]}.
// window_start defaults to September 1 of the election year.
DebateSchedule parse_schedule(std::string_view json_text);
DebateSchedule load_schedule_file(const std::string& path);

// Median poll level after the debate minus the median before it. Throws
// Error(insufficient_data) naming the window that has no observation.
PollWindowDiff poll_diff(std::span<const PollObservation> observations,
                         const DebateSchedule& schedule, std::string_view debate_id,
                         std::string_view candidate,
                         DebateDayRule rule = DebateDayRule::after);

} // namespace lsm
