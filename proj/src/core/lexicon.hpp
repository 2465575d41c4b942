#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace lsm {

// The eight function-word marker categories, in the canonical order. A
// loadable lexicon must contain all of them; anything else it contains is
// kept as an auxiliary category used only for frequency reporting.
inline constexpr std::array<std::string_view, 8> kMarkerNames = {
    "quantifiers",     "conjunctions", "adverbs",           "auxiliary verbs",
    "prepositions",    "articles",     "personal pronouns", "impersonal pronouns",
};

enum class LexiconFormat {
    lex,  // native: "%category <name>" section headers, one pattern per line
    liwc, // two-part LIWC 2007 .dic layout
};

struct MarkerCategory {
    std::string name;
    std::vector<std::string> patterns; // file order; validated lowercase, unique

    MarkerCategory() = default;
    MarkerCategory(std::string name_, std::vector<std::string> patterns_)
        : name(std::move(name_)), patterns(std::move(patterns_)) {}

    // True when token equals a literal pattern or begins with a wildcard stem.
    bool matches(std::string_view token) const;

    std::size_t size() const { return patterns.size(); }

    void build_index();

private:
    std::unordered_set<std::string> exact_;
    std::vector<std::string> stems_; // wildcard patterns minus the trailing '*'
};

class Lexicon {
public:
    // Throws Error(parse) with a line number on malformed input and
    // Error(validation) on duplicate patterns, empty categories, or a
    // missing marker category.
    static Lexicon parse(std::string_view text, LexiconFormat format);
    static Lexicon load_file(const std::string& path, LexiconFormat format);

    // The lexicon compiled into the library (exact reference category sizes).
    static const Lexicon& bundled();

    std::span<const MarkerCategory> markers() const { return markers_; }
    std::span<const MarkerCategory> auxiliary() const { return auxiliary_; }

    // Marker index by name, -1 when absent.
    int marker_index(std::string_view name) const;
    // Any category (marker or auxiliary) by name, nullptr when absent.
    const MarkerCategory* find(std::string_view name) const;

private:
    std::vector<MarkerCategory> markers_;   // exactly the 8, file order
    std::vector<MarkerCategory> auxiliary_; // file order

    static Lexicon from_categories(std::vector<MarkerCategory> categories);
};

// Incidence vector over the lexicon's marker categories: entry m is true iff
// some token matches a pattern of marker m. Empty input gives all-false.
std::vector<std::uint8_t> marker_incidence(const Lexicon& lexicon,
                                           std::span<const std::string> tokens);

// Percentage of tokens matching each category (markers and auxiliary), in
// [0, 100]. A token matching k categories contributes to each of the k.
// Throws Error(degenerate) when tokens is empty.
std::map<std::string, double> category_percentages(const Lexicon& lexicon,
                                                   std::span<const std::string> tokens);

} // namespace lsm
