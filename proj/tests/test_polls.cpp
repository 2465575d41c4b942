#include <doctest.h>

#include "core/error.hpp"
#include "core/polls.hpp"
#include "core/rng.hpp"

using namespace lsm;

namespace {

DebateSchedule two_debate_schedule() {
    DebateSchedule s;
    s.election_year = 2000;
    s.window_start = Date{2000, 9, 1};
    s.election_day = Date{2000, 11, 7};
    s.debates = {{"d1", Date{2000, 10, 3}}, {"d2", Date{2000, 10, 16}}};
    return s;
}

std::vector<PollObservation> obs_on(const std::vector<std::pair<Date, double>>& points,
                                    const std::string& candidate = "X") {
    std::vector<PollObservation> out;
    for (const auto& [date, pct] : points)
        out.push_back(PollObservation{candidate, date, pct});
    return out;
}

} // namespace

TEST_CASE("poll csv loading") {
    SUBCASE("well-formed rows come back sorted by date") {
        auto polls = load_polls("candidate,date,percent\n"
                                "X,2000-09-20,44\n"
                                "X,2000-09-05,42\n"
                                "Y,2000-09-10,47\n");
        REQUIRE(polls.size() == 3);
        CHECK(polls[0].date == Date{2000, 9, 5});
        CHECK(polls[1].candidate == "Y");
        CHECK(polls[2].percent == doctest::Approx(44));
    }
    SUBCASE("percent outside [0, 100] names the row") {
        CHECK_THROWS_WITH_AS(load_polls("candidate,date,percent\nX,2000-09-05,105\n"),
                             doctest::Contains("row 2"), Error);
    }
    SUBCASE("unparseable percent names the row") {
        CHECK_THROWS_WITH_AS(load_polls("candidate,date,percent\nX,2000-09-05,forty\n"),
                             doctest::Contains("row 2"), Error);
    }
    SUBCASE("bad date names the row") {
        CHECK_THROWS_AS(load_polls("candidate,date,percent\nX,2000-09-31,40\n"), Error);
    }
    SUBCASE("empty input gives an empty list") {
        CHECK(load_polls("candidate,date,percent\n").empty());
        CHECK(load_polls("").empty());
    }
    SUBCASE("wrong header is rejected") {
        CHECK_THROWS_AS(load_polls("who,when,how\nX,2000-09-05,40\n"), Error);
    }
}

TEST_CASE("schedule parsing and validation") {
    DebateSchedule s = parse_schedule(R"({
        "election_year": 2000,
        "election_day": "2000-11-07",
        "debates": [{"id": "d1", "date": "2000-10-03"},
                    {"id": "d2", "date": "2000-10-16"}]})");
    CHECK(s.window_start == Date{2000, 9, 1}); // defaulted
    CHECK(s.debates.size() == 2);
    CHECK(s.debate_index("d2") == 1);
    CHECK(s.debate_index("d9") == -1);

    SUBCASE("unordered debates are rejected") {
        DebateSchedule bad = s;
        std::swap(bad.debates[0], bad.debates[1]);
        CHECK_THROWS_AS(bad.validate(), Error);
    }
    SUBCASE("debate after election day is rejected") {
        DebateSchedule bad = s;
        bad.debates[1].date = Date{2000, 11, 20};
        CHECK_THROWS_AS(bad.validate(), Error);
    }
    SUBCASE("window start override") {
        DebateSchedule b = parse_schedule(R"({
            "election_year": 2000, "election_day": "2000-11-07",
            "window_start": "2000-08-15",
            "debates": [{"id": "d1", "date": "2000-10-03"}]})");
        CHECK(b.window_start == Date{2000, 8, 15});
    }
}

TEST_CASE("window construction for the two-debate season") {
    DebateSchedule s = two_debate_schedule();
    auto windows = build_windows(s);
    REQUIRE(windows.size() == 2);

    // d1: before (Sep 1, Oct 3), after [Oct 3, Oct 16)
    CHECK_FALSE(windows[0].before.contains(Date{2000, 9, 1}));
    CHECK(windows[0].before.contains(Date{2000, 9, 2}));
    CHECK(windows[0].before.contains(Date{2000, 10, 2}));
    CHECK_FALSE(windows[0].before.contains(Date{2000, 10, 3}));
    CHECK(windows[0].after.contains(Date{2000, 10, 3})); // debate-day poll -> after
    CHECK(windows[0].after.contains(Date{2000, 10, 15}));
    CHECK_FALSE(windows[0].after.contains(Date{2000, 10, 16}));

    // d2: before = d1's after; after (Oct 16, Nov 7]
    CHECK(windows[1].before.contains(Date{2000, 10, 3}));
    CHECK_FALSE(windows[1].before.contains(Date{2000, 10, 16}));
    CHECK(windows[1].after.contains(Date{2000, 10, 16}));
    CHECK(windows[1].after.contains(Date{2000, 11, 7})); // election day included
    CHECK_FALSE(windows[1].after.contains(Date{2000, 11, 8}));

    SUBCASE("single debate") {
        DebateSchedule one = s;
        one.debates = {{"d1", Date{2000, 10, 3}}};
        auto w = build_windows(one);
        REQUIRE(w.size() == 1);
        CHECK(w[0].before.contains(Date{2000, 9, 15}));
        CHECK(w[0].after.contains(Date{2000, 11, 7}));
    }
    SUBCASE("debate-day rule before") {
        auto w = build_windows(s, DebateDayRule::before);
        CHECK(w[0].before.contains(Date{2000, 10, 3}));
        CHECK_FALSE(w[0].after.contains(Date{2000, 10, 3}));
        CHECK(w[0].after.contains(Date{2000, 10, 16}));
        CHECK(w[1].before.contains(Date{2000, 10, 16}));
    }
    SUBCASE("debate-day rule exclude") {
        auto w = build_windows(s, DebateDayRule::exclude);
        CHECK_FALSE(w[0].before.contains(Date{2000, 10, 3}));
        CHECK_FALSE(w[0].after.contains(Date{2000, 10, 3}));
        CHECK_FALSE(w[1].before.contains(Date{2000, 10, 3}));
        CHECK(w[1].after.contains(Date{2000, 11, 7}));
    }
}

TEST_CASE("poll diff medians") {
    DebateSchedule s = two_debate_schedule();
    SUBCASE("median of odd and even window counts") {
        auto obs = obs_on({{Date{2000, 9, 10}, 45},
                           {Date{2000, 9, 15}, 47},
                           {Date{2000, 9, 20}, 46},
                           {Date{2000, 10, 5}, 48},
                           {Date{2000, 10, 10}, 50}});
        PollWindowDiff d = poll_diff(obs, s, "d1", "X");
        CHECK(d.median_before == doctest::Approx(46));
        CHECK(d.median_after == doctest::Approx(49));
        CHECK(d.p_diff == doctest::Approx(3));
        CHECK(d.n_before == 3);
        CHECK(d.n_after == 2);
    }
    SUBCASE("identical windows give zero change") {
        auto obs = obs_on({{Date{2000, 9, 10}, 44},
                           {Date{2000, 9, 12}, 46},
                           {Date{2000, 10, 6}, 44},
                           {Date{2000, 10, 8}, 46}});
        CHECK(poll_diff(obs, s, "d1", "X").p_diff == doctest::Approx(0));
    }
    SUBCASE("an empty window is named in the error") {
        auto obs = obs_on({{Date{2000, 9, 10}, 44}});
        CHECK_THROWS_WITH_AS(poll_diff(obs, s, "d1", "X"),
                             doctest::Contains("after window"), Error);
        auto obs2 = obs_on({{Date{2000, 10, 6}, 44}});
        CHECK_THROWS_WITH_AS(poll_diff(obs2, s, "d1", "X"),
                             doctest::Contains("before window"), Error);
    }
    SUBCASE("unknown debate id") {
        auto obs = obs_on({{Date{2000, 9, 10}, 44}});
        CHECK_THROWS_AS(poll_diff(obs, s, "nope", "X"), Error);
    }
    SUBCASE("other candidates' polls are ignored") {
        auto obs = obs_on({{Date{2000, 9, 10}, 44}, {Date{2000, 10, 6}, 44}});
        auto noise = obs_on({{Date{2000, 9, 11}, 10}, {Date{2000, 10, 7}, 90}}, "Y");
        obs.insert(obs.end(), noise.begin(), noise.end());
        CHECK(poll_diff(obs, s, "d1", "X").p_diff == doctest::Approx(0));
    }
}

TEST_CASE("shifting every poll by a constant leaves p_diff unchanged") {
    DebateSchedule s = two_debate_schedule();
    Rng rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<PollObservation> obs;
        auto random_date = [&] {
            int month = 9 + static_cast<int>(rng.below(3)); // Sep..Nov
            int day = 1 + static_cast<int>(rng.below(month == 11 ? 7 : 28));
            return Date{2000, month, day};
        };
        int n = 8 + static_cast<int>(rng.below(10));
        for (int i = 0; i < n; ++i)
            obs.push_back(PollObservation{"X", random_date(),
                                          30.0 + 40.0 * rng.next_unit()});
        double k = 5.0 * rng.next_unit();
        std::vector<PollObservation> shifted = obs;
        for (PollObservation& o : shifted) o.percent += k;
        for (const char* debate : {"d1", "d2"}) {
            PollWindowDiff base, moved;
            try {
                base = poll_diff(obs, s, debate, "X");
                moved = poll_diff(shifted, s, debate, "X");
            } catch (const Error&) {
                continue; // a window came up empty for this draw
            }
            CHECK(moved.p_diff == doctest::Approx(base.p_diff).epsilon(1e-12));
            CHECK(moved.median_before ==
                  doctest::Approx(base.median_before + k).epsilon(1e-12));
        }
    }
}

TEST_CASE("duplicating an observation at the window median changes nothing") {
    DebateSchedule s = two_debate_schedule();
    auto obs = obs_on({{Date{2000, 9, 10}, 44},
                       {Date{2000, 9, 12}, 46},
                       {Date{2000, 9, 14}, 48},
                       {Date{2000, 10, 6}, 50},
                       {Date{2000, 10, 8}, 52},
                       {Date{2000, 10, 10}, 54}});
    PollWindowDiff base = poll_diff(obs, s, "d1", "X");
    obs.push_back(PollObservation{"X", Date{2000, 9, 13}, base.median_before});
    obs.push_back(PollObservation{"X", Date{2000, 10, 9}, base.median_after});
    PollWindowDiff more = poll_diff(obs, s, "d1", "X");
    CHECK(more.p_diff == doctest::Approx(base.p_diff).epsilon(1e-12));
}

TEST_CASE("every date lands in at most one before and one after window") {
    DebateSchedule s = two_debate_schedule();
    for (DebateDayRule rule :
         {DebateDayRule::after, DebateDayRule::before, DebateDayRule::exclude}) {
        auto windows = build_windows(s, rule);
        for (int month = 9; month <= 11; ++month) {
            for (int day = 1; day <= 28; ++day) {
                Date d{2000, month, day};
                int in_before = 0, in_after = 0;
                for (const auto& w : windows) {
                    in_before += w.before.contains(d) ? 1 : 0;
                    in_after += w.after.contains(d) ? 1 : 0;
                }
                CHECK(in_before <= 1);
                CHECK(in_after <= 1);
            }
        }
    }
}
