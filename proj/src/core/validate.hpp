#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/lexicon.hpp"
#include "core/matching.hpp"

namespace lsm {

struct SuiteResult {
    std::string name;
    bool passed = false;
    int cases = 0;
    int failures = 0;
    std::vector<std::string> details; // human-readable statistics lines
};

// Knob defaults match the documented acceptance thresholds; tests shrink them
// for speed, the CLI runs them as-is.
struct ValidateConfig {
    std::uint64_t seed = 17;

    // Monte Carlo vs closed-form agreement on random conversations.
    int oracle_conversations = 100;
    int oracle_permutations = 10000;
    int oracle_min_focal = 5;
    int oracle_max_focal = 50;
    double oracle_pass_fraction = 0.95;

    // z calibration when responses are independent of predecessors.
    int calibration_conversations = 500;
    int calibration_utterances = 240;
    int calibration_permutations = 2000;
    double calibration_mean_tolerance = 0.1;
    double calibration_tail_low = 0.02;  // nominal 5% +/- 3%
    double calibration_tail_high = 0.08;

    // Planted-copying detection.
    int planted_seeds = 100;
    int planted_utterances = 200;
    int planted_permutations = 2000;
    double planted_q0 = 0.3;
    double planted_q1 = 0.9;
    int planted_min_positive = 95;
    double planted_mw_p = 0.01;

    ShuffleScheme scheme = ShuffleScheme::focal_slots; // fault injection hook
    int workers = 0;                                   // 0 = resolve from env
};

SuiteResult oracle_agreement_suite(const ValidateConfig& cfg, const Lexicon& lexicon);
SuiteResult null_calibration_suite(const ValidateConfig& cfg, const Lexicon& lexicon);
SuiteResult planted_recovery_suite(const ValidateConfig& cfg, const Lexicon& lexicon);

std::vector<SuiteResult> run_validation(const ValidateConfig& cfg, const Lexicon& lexicon);

bool all_passed(const std::vector<SuiteResult>& suites);

} // namespace lsm
