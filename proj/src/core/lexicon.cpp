#include "core/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "core/error.hpp"

namespace lsm {

namespace detail {
const char* bundled_lexicon_text(); // generated from data/default.lex
}

namespace {

std::string lowercased(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string trimmed(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

void check_pattern(const std::string& pat, int line_no) {
    if (pat.empty() || pat == "*")
        raise(ErrorCode::parse, "line " + std::to_string(line_no) + ": empty pattern");
    std::size_t star = pat.find('*');
    if (star != std::string::npos && star != pat.size() - 1)
        raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                    ": '*' is only allowed as the final character");
}

// LIWC 2007 category names for the eight markers.
const std::unordered_map<std::string, std::string>& liwc_aliases() {
    static const std::unordered_map<std::string, std::string> aliases = {
        {"quant", "quantifiers"},      {"conj", "conjunctions"},
        {"adverb", "adverbs"},         {"adverbs", "adverbs"},
        {"auxverb", "auxiliary verbs"},{"preps", "prepositions"},
        {"prep", "prepositions"},      {"article", "articles"},
        {"articles", "articles"},      {"ppron", "personal pronouns"},
        {"ipron", "impersonal pronouns"},
        {"posemo", "positive emotion"},{"negemo", "negative emotion"},
        {"negate", "negation"},        {"assent", "assent"},
    };
    return aliases;
}

std::vector<MarkerCategory> parse_lex_format(std::string_view text) {
    std::vector<MarkerCategory> cats;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trimmed(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("%category", 0) == 0) {
            std::string name = lowercased(trimmed(line.substr(9)));
            if (name.empty())
                raise(ErrorCode::parse,
                      "line " + std::to_string(line_no) + ": missing category name");
            cats.push_back(MarkerCategory{name, {}});
            continue;
        }
        if (line[0] == '%')
            raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                        ": unknown directive '" + line + "'");
        if (cats.empty())
            raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                        ": pattern before any %category header");
        std::string pat = lowercased(line);
        check_pattern(pat, line_no);
        cats.back().patterns.push_back(std::move(pat));
    }
    return cats;
}

std::vector<MarkerCategory> parse_liwc_format(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;

    // Header: category ids between two '%' lines.
    std::unordered_map<int, std::string> id_to_name;
    std::vector<int> id_order;
    bool in_header = false, header_done = false;
    std::vector<std::pair<std::string, int>> word_lines_pending; // (word, line)
    std::unordered_map<int, std::vector<std::string>> members;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trimmed(raw);
        if (line.empty()) continue;
        if (line == "%") {
            if (!in_header && !header_done) {
                in_header = true;
            } else if (in_header) {
                in_header = false;
                header_done = true;
            } else {
                raise(ErrorCode::parse,
                      "line " + std::to_string(line_no) + ": stray '%'");
            }
            continue;
        }
        std::istringstream fields(line);
        if (in_header) {
            int id;
            std::string name;
            if (!(fields >> id >> name))
                raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                            ": expected '<id> <name>'");
            std::string canon = lowercased(name);
            auto it = liwc_aliases().find(canon);
            if (it != liwc_aliases().end()) canon = it->second;
            if (!id_to_name.emplace(id, canon).second)
                raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                            ": duplicate category id " + std::to_string(id));
            id_order.push_back(id);
            continue;
        }
        if (!header_done)
            raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                        ": word entry before '%' header block");
        std::string word;
        fields >> word;
        std::string pat = lowercased(word);
        check_pattern(pat, line_no);
        int id;
        bool any = false;
        while (fields >> id) {
            any = true;
            if (!id_to_name.count(id))
                raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                            ": unknown category id " + std::to_string(id));
            members[id].push_back(pat);
        }
        if (!any)
            raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                        ": word '" + word + "' has no category ids");
    }
    if (!header_done)
        raise(ErrorCode::parse, "missing '%'-delimited category header block");

    std::vector<MarkerCategory> cats;
    for (int id : id_order) {
        auto it = members.find(id);
        cats.push_back(MarkerCategory{id_to_name[id],
                                      it == members.end() ? std::vector<std::string>{}
                                                          : std::move(it->second)});
    }
    // LIWC files list words, not categories, so drop categories the file
    // never populated rather than rejecting the whole dictionary.
    std::erase_if(cats, [](const MarkerCategory& c) { return c.patterns.empty(); });
    return cats;
}

} // namespace

bool MarkerCategory::matches(std::string_view token) const {
    if (exact_.count(std::string(token))) return true;
    for (const std::string& stem : stems_)
        if (token.size() >= stem.size() && token.substr(0, stem.size()) == stem)
            return true;
    return false;
}

void MarkerCategory::build_index() {
    exact_.clear();
    stems_.clear();
    for (const std::string& p : patterns) {
        if (p.back() == '*')
            stems_.push_back(p.substr(0, p.size() - 1));
        else
            exact_.insert(p);
    }
}

Lexicon Lexicon::from_categories(std::vector<MarkerCategory> categories) {
    // Per-category validation.
    for (auto& cat : categories) {
        if (cat.patterns.empty())
            raise(ErrorCode::validation, "category '" + cat.name + "' is empty");
        std::unordered_set<std::string> seen;
        for (const auto& p : cat.patterns)
            if (!seen.insert(p).second)
                raise(ErrorCode::validation, "duplicate pattern '" + p +
                                                 "' in category '" + cat.name + "'");
        cat.build_index();
    }

    Lexicon lex;
    for (std::string_view required : kMarkerNames) {
        auto it = std::find_if(categories.begin(), categories.end(),
                               [&](const MarkerCategory& c) { return c.name == required; });
        if (it == categories.end())
            raise(ErrorCode::validation,
                  "missing marker category '" + std::string(required) + "'");
    }
    // Markers keep file order; the remainder becomes auxiliary, also in
    // file order.
    for (auto& cat : categories) {
        bool is_marker = std::find(kMarkerNames.begin(), kMarkerNames.end(), cat.name) !=
                         kMarkerNames.end();
        if (is_marker) {
            if (lex.marker_index(cat.name) >= 0)
                raise(ErrorCode::validation,
                      "marker category '" + cat.name + "' appears twice");
            lex.markers_.push_back(std::move(cat));
        } else {
            if (lex.find(cat.name) != nullptr)
                raise(ErrorCode::validation,
                      "category '" + cat.name + "' appears twice");
            lex.auxiliary_.push_back(std::move(cat));
        }
    }
    return lex;
}

Lexicon Lexicon::parse(std::string_view text, LexiconFormat format) {
    std::vector<MarkerCategory> cats = format == LexiconFormat::lex
                                           ? parse_lex_format(text)
                                           : parse_liwc_format(text);
    return from_categories(std::move(cats));
}

Lexicon Lexicon::load_file(const std::string& path, LexiconFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::config, "cannot open lexicon file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), format);
}

const Lexicon& Lexicon::bundled() {
    static const Lexicon lex = parse(detail::bundled_lexicon_text(), LexiconFormat::lex);
    return lex;
}

int Lexicon::marker_index(std::string_view name) const {
    for (std::size_t i = 0; i < markers_.size(); ++i)
        if (markers_[i].name == name) return static_cast<int>(i);
    return -1;
}

const MarkerCategory* Lexicon::find(std::string_view name) const {
    for (const auto& c : markers_)
        if (c.name == name) return &c;
    for (const auto& c : auxiliary_)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<std::uint8_t> marker_incidence(const Lexicon& lexicon,
                                           std::span<const std::string> tokens) {
    std::vector<std::uint8_t> out(lexicon.markers().size(), 0);
    for (std::size_t m = 0; m < out.size(); ++m) {
        const MarkerCategory& cat = lexicon.markers()[m];
        for (const std::string& tok : tokens) {
            if (cat.matches(tok)) {
                out[m] = 1;
                break;
            }
        }
    }
    return out;
}

std::map<std::string, double> category_percentages(const Lexicon& lexicon,
                                                   std::span<const std::string> tokens) {
    if (tokens.empty())
        raise(ErrorCode::degenerate, "category percentages undefined for empty token list");
    std::map<std::string, double> out;
    auto tally = [&](const MarkerCategory& cat) {
        std::size_t hits = 0;
        for (const std::string& tok : tokens)
            if (cat.matches(tok)) ++hits;
        out[cat.name] = 100.0 * static_cast<double>(hits) /
                        static_cast<double>(tokens.size());
    };
    for (const auto& c : lexicon.markers()) tally(c);
    for (const auto& c : lexicon.auxiliary()) tally(c);
    return out;
}

} // namespace lsm
