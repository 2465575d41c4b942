#include "core/synth.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace lsm {

using json = nlohmann::ordered_json;

std::string_view topology_name(Topology t) {
    return t == Topology::alternating ? "alternating" : "moderated";
}

Topology parse_topology(std::string_view name) {
    if (name == "alternating") return Topology::alternating;
    if (name == "moderated") return Topology::moderated;
    raise(ErrorCode::config, "unknown topology '" + std::string(name) + "'");
}

double MarkerRates::q1_at(int index, int n_utterances) const {
    if (!q1_end || n_utterances <= 1) return q1;
    double t = static_cast<double>(index) / static_cast<double>(n_utterances - 1);
    return q1 + (*q1_end - q1) * t;
}

void SynthConfig::validate() const {
    if (n_utterances < 2)
        raise(ErrorCode::config, "synthetic conversation needs at least 2 utterances");
    if (fillers_per_utterance < 0)
        raise(ErrorCode::config, "negative filler count");
    auto check_rate = [](double r, const char* what) {
        if (!(r >= 0.0 && r <= 1.0))
            raise(ErrorCode::config, std::string(what) + " must lie in [0, 1]");
    };
    check_rate(drive_rate, "drive_rate");
    auto check_rates = [&](const MarkerRates& r) {
        check_rate(r.q0, "q0");
        check_rate(r.q1, "q1");
        if (r.q1_end) check_rate(*r.q1_end, "q1_end");
    };
    check_rates(default_rates);
    for (const auto& [name, r] : per_marker) check_rates(r);
}

const MarkerRates& SynthConfig::rates_for(std::string_view marker) const {
    auto it = per_marker.find(std::string(marker));
    return it == per_marker.end() ? default_rates : it->second;
}

namespace {

json rates_to_json(const MarkerRates& r) {
    json j;
    j["q0"] = r.q0;
    j["q1"] = r.q1;
    if (r.q1_end) j["q1_end"] = *r.q1_end;
    return j;
}

MarkerRates rates_from_json(const json& j) {
    MarkerRates r;
    r.q0 = j.at("q0").get<double>();
    r.q1 = j.at("q1").get<double>();
    if (j.contains("q1_end") && !j["q1_end"].is_null())
        r.q1_end = j["q1_end"].get<double>();
    return r;
}

// Pad vocabulary; generated text is nonsense on purpose, these only have to
// stay clear of every marker category.
const std::vector<std::string>& filler_candidates() {
    static const std::vector<std::string> words = {
        "zorp", "quix", "blenth", "vrang",  "snib",  "dwale", "crast", "plim",
        "fexo", "grudd", "trell", "mosk",   "brap",  "klev",  "jorn",  "thrung",
    };
    return words;
}

} // namespace

std::string truth_to_json(const SynthTruth& truth) {
    json doc;
    doc["n_utterances"] = truth.n_utterances;
    doc["topology"] = std::string(topology_name(truth.topology));
    doc["drive_rate"] = truth.drive_rate;
    doc["fillers_per_utterance"] = truth.fillers_per_utterance;
    doc["seed"] = truth.seed;
    doc["rates"] = json::object();
    for (const auto& [name, r] : truth.rates) doc["rates"][name] = rates_to_json(r);
    return doc.dump(2) + "\n";
}

SynthTruth parse_truth(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::parse, std::string("truth JSON: ") + e.what());
    }
    SynthTruth t;
    try {
        t.n_utterances = doc.at("n_utterances").get<int>();
        t.topology = parse_topology(doc.at("topology").get<std::string>());
        t.drive_rate = doc.at("drive_rate").get<double>();
        t.fillers_per_utterance = doc.at("fillers_per_utterance").get<int>();
        t.seed = doc.at("seed").get<std::uint64_t>();
        for (const auto& [name, r] : doc.at("rates").items())
            t.rates[name] = rates_from_json(r);
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, std::string("truth JSON: ") + e.what());
    }
    return t;
}

SynthTruth load_truth_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::not_found,
              "no ground-truth sidecar at '" + path + "' (conversation not generated?)");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_truth(buf.str());
}

GeneratedConversation generate(const SynthConfig& config, const Lexicon& lexicon) {
    config.validate();
    std::size_t n_markers = lexicon.markers().size();

    // Tokens usable for exactly one marker category.
    std::vector<std::vector<std::string>> pools(n_markers);
    for (std::size_t m = 0; m < n_markers; ++m) {
        for (const std::string& pat : lexicon.markers()[m].patterns) {
            if (pat.back() == '*') continue;
            auto toks = tokenize(pat);
            if (toks.size() != 1 || toks[0] != pat) continue;
            bool unique = true;
            for (std::size_t o = 0; o < n_markers && unique; ++o)
                if (o != m && lexicon.markers()[o].matches(pat)) unique = false;
            if (unique) pools[m].push_back(pat);
        }
        if (pools[m].empty())
            raise(ErrorCode::config, "marker '" + lexicon.markers()[m].name +
                                         "' has no tokens unique to it");
    }
    std::vector<std::string> fillers;
    for (const std::string& w : filler_candidates()) {
        bool clean = true;
        for (std::size_t m = 0; m < n_markers && clean; ++m)
            if (lexicon.markers()[m].matches(w)) clean = false;
        if (clean) fillers.push_back(w);
    }
    if (fillers.empty() && config.fillers_per_utterance > 0)
        raise(ErrorCode::config, "no filler token survives the lexicon");

    struct Slot {
        std::string speaker;
        Role role;
        bool driver;
    };
    std::vector<Slot> rotation;
    if (config.topology == Topology::alternating) {
        rotation = {{"A", Role::candidate, true}, {"B", Role::candidate, false}};
    } else {
        rotation = {{"MOD", Role::moderator, true},
                    {"A", Role::candidate, false},
                    {"MOD", Role::moderator, true},
                    {"B", Role::candidate, false}};
    }

    Rng rng(config.seed);
    Conversation conv;
    conv.id = config.id;
    conv.date = config.date;
    conv.election_year = config.election_year;

    std::vector<std::uint8_t> prev_inc(n_markers, 0);
    for (int t = 0; t < config.n_utterances; ++t) {
        const Slot& slot = rotation[static_cast<std::size_t>(t) % rotation.size()];
        std::vector<std::string> tokens;
        std::vector<std::uint8_t> inc(n_markers, 0);
        for (std::size_t m = 0; m < n_markers; ++m) {
            const MarkerRates& rates = config.rates_for(lexicon.markers()[m].name);
            double p;
            if (slot.driver || t == 0)
                p = config.drive_rate;
            else
                p = prev_inc[m] ? rates.q1_at(t, config.n_utterances) : rates.q0;
            if (rng.bernoulli(p)) {
                tokens.push_back(pools[m][rng.below(pools[m].size())]);
                inc[m] = 1;
            }
        }
        for (int f = 0; f < config.fillers_per_utterance; ++f)
            tokens.push_back(fillers[rng.below(fillers.size())]);

        Utterance u;
        u.index = t;
        u.speaker = slot.speaker;
        u.role = slot.role;
        std::string text;
        for (const std::string& tok : tokens) {
            if (!text.empty()) text += ' ';
            text += tok;
        }
        u.text = std::move(text);
        u.tokens = tokenize(u.text);
        conv.utterances.push_back(std::move(u));
        prev_inc = std::move(inc);
    }

    GeneratedConversation out;
    out.conversation = std::move(conv);
    out.truth.n_utterances = config.n_utterances;
    out.truth.topology = config.topology;
    out.truth.drive_rate = config.drive_rate;
    out.truth.fillers_per_utterance = config.fillers_per_utterance;
    out.truth.seed = config.seed;
    for (std::size_t m = 0; m < n_markers; ++m)
        out.truth.rates[lexicon.markers()[m].name] =
            config.rates_for(lexicon.markers()[m].name);
    return out;
}

} // namespace lsm
