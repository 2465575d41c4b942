#include "core/transcript.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace lsm {

using json = nlohmann::ordered_json;

std::string_view role_name(Role role) {
    switch (role) {
        case Role::candidate: return "candidate";
        case Role::moderator: return "moderator";
        case Role::questioner: return "questioner";
        case Role::other: return "other";
    }
    return "other";
}

Role parse_role(std::string_view name) {
    if (name == "candidate") return Role::candidate;
    if (name == "moderator") return Role::moderator;
    if (name == "questioner") return Role::questioner;
    if (name == "other") return Role::other;
    raise(ErrorCode::parse, "unknown role '" + std::string(name) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        bool keep = (c < 0x80 && (std::isalnum(c) || c == '\'')) || c >= 0x80;
        if (keep) {
            if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
            cur.push_back(static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::vector<std::string> Conversation::speakers() const {
    std::vector<std::string> out;
    for (const auto& u : utterances)
        if (std::find(out.begin(), out.end(), u.speaker) == out.end())
            out.push_back(u.speaker);
    return out;
}

bool Conversation::has_speaker(std::string_view speaker) const {
    return std::any_of(utterances.begin(), utterances.end(),
                       [&](const Utterance& u) { return u.speaker == speaker; });
}

namespace {

struct RawTurn {
    std::string speaker;
    Role role;
    std::string text;
};

Conversation assemble(std::string id, Date date, std::optional<int> election_year,
                      const std::vector<RawTurn>& turns) {
    Conversation conv;
    conv.id = std::move(id);
    conv.date = date;
    conv.election_year = election_year;
    for (const RawTurn& t : turns) {
        if (!conv.utterances.empty() && conv.utterances.back().speaker == t.speaker) {
            Utterance& prev = conv.utterances.back();
            if (!prev.text.empty() && !t.text.empty()) prev.text += ' ';
            prev.text += t.text;
        } else {
            Utterance u;
            u.index = static_cast<int>(conv.utterances.size());
            u.speaker = t.speaker;
            u.role = t.role;
            u.text = t.text;
            conv.utterances.push_back(std::move(u));
        }
    }
    for (Utterance& u : conv.utterances) u.tokens = tokenize(u.text);
    if (conv.speakers().size() < 2)
        raise(ErrorCode::validation,
              "conversation '" + conv.id + "' needs at least 2 distinct speakers");
    return conv;
}

Conversation parse_json_transcript(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::parse, std::string("transcript JSON: ") + e.what());
    }
    try {
        if (!doc.is_object()) raise(ErrorCode::parse, "transcript root must be an object");
        std::string id = doc.at("id").get<std::string>();
        Date date = parse_date(doc.at("date").get<std::string>());
        std::optional<int> year;
        if (doc.contains("election_year") && !doc["election_year"].is_null())
            year = doc["election_year"].get<int>();
        std::vector<RawTurn> turns;
        for (const auto& u : doc.at("utterances")) {
            turns.push_back(RawTurn{u.at("speaker").get<std::string>(),
                                    parse_role(u.at("role").get<std::string>()),
                                    u.at("text").get<std::string>()});
        }
        return assemble(std::move(id), date, year, turns);
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, std::string("transcript JSON: ") + e.what());
    }
}

// Sidecar for the plain-text format:
//   {"id": ..., "date": "YYYY-MM-DD", "election_year"?: int,
//    "speakers": {"NAME": "role", ...}}
// Unmapped speakers get role "other".
Conversation parse_text_transcript(std::string_view text, std::string_view sidecar) {
    if (sidecar.empty())
        raise(ErrorCode::config, "text transcripts need a speaker-map sidecar");
    json side;
    try {
        side = json::parse(sidecar);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::parse, std::string("speaker map JSON: ") + e.what());
    }
    std::string id;
    Date date;
    std::optional<int> year;
    std::unordered_map<std::string, Role> roles;
    try {
        id = side.at("id").get<std::string>();
        date = parse_date(side.at("date").get<std::string>());
        if (side.contains("election_year") && !side["election_year"].is_null())
            year = side["election_year"].get<int>();
        for (const auto& [name, role] : side.at("speakers").items())
            roles[name] = parse_role(role.get<std::string>());
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, std::string("speaker map JSON: ") + e.what());
    }

    std::vector<RawTurn> turns;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.find_first_not_of(" \t") == std::string::npos) continue;
        // A turn opens with an uppercase speaker label before a colon, e.g.
        // "SMITH:" or "MR. SMITH:". Anything else continues the prior turn.
        std::size_t colon = raw.find(':');
        bool new_turn = false;
        std::string name;
        if (colon != std::string::npos && colon > 0 && colon <= 40 && raw[0] != ' ' &&
            raw[0] != '\t') {
            name = raw.substr(0, colon);
            bool has_letter = false, label_like = true;
            for (unsigned char c : name) {
                if (std::isupper(c)) has_letter = true;
                else if (!(std::isdigit(c) || c == ' ' || c == '.' || c == '\'' ||
                           c == '-' || c == '_'))
                    label_like = false;
            }
            new_turn = has_letter && label_like;
        }
        if (new_turn) {
            std::string body = raw.substr(colon + 1);
            std::size_t b = body.find_first_not_of(" \t");
            body = b == std::string::npos ? std::string{} : body.substr(b);
            auto it = roles.find(name);
            turns.push_back(RawTurn{name, it == roles.end() ? Role::other : it->second,
                                    std::move(body)});
        } else {
            if (turns.empty())
                raise(ErrorCode::parse, "line " + std::to_string(line_no) +
                                            ": text before any 'SPEAKER:' label");
            std::size_t b = raw.find_first_not_of(" \t");
            std::string body = raw.substr(b);
            if (!turns.back().text.empty()) turns.back().text += ' ';
            turns.back().text += body;
        }
    }
    return assemble(std::move(id), date, year, turns);
}

} // namespace

Conversation parse_transcript(std::string_view text, TranscriptFormat format,
                              std::string_view sidecar_json) {
    return format == TranscriptFormat::json ? parse_json_transcript(text)
                                            : parse_text_transcript(text, sidecar_json);
}

Conversation load_transcript(const std::string& path, TranscriptFormat format,
                             const std::string& sidecar_path) {
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) raise(ErrorCode::config, "cannot open file '" + p + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    std::string text = slurp(path);
    std::string sidecar;
    if (format == TranscriptFormat::text) {
        if (sidecar_path.empty())
            raise(ErrorCode::config,
                  "text transcript '" + path + "' needs a --speaker-map sidecar");
        sidecar = slurp(sidecar_path);
    }
    try {
        return parse_transcript(text, format, sidecar);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

std::string serialize_conversation(const Conversation& conv) {
    json doc;
    doc["id"] = conv.id;
    doc["date"] = conv.date.to_string();
    if (conv.election_year) doc["election_year"] = *conv.election_year;
    doc["utterances"] = json::array();
    for (const Utterance& u : conv.utterances) {
        json ju;
        ju["speaker"] = u.speaker;
        ju["role"] = std::string(role_name(u.role));
        ju["text"] = u.text;
        doc["utterances"].push_back(std::move(ju));
    }
    return doc.dump(2) + "\n";
}

std::vector<AdjacentPair> adjacent_pairs(const Conversation& conv,
                                         std::string_view focal_speaker) {
    if (!conv.has_speaker(focal_speaker))
        raise(ErrorCode::not_found, "speaker '" + std::string(focal_speaker) +
                                        "' not present in conversation '" + conv.id + "'");
    std::vector<AdjacentPair> pairs;
    for (const Utterance& u : conv.utterances)
        if (u.index >= 1 && u.speaker == focal_speaker)
            pairs.push_back(AdjacentPair{u.index - 1, u.index});
    return pairs;
}

Conversation filter_roles(const Conversation& conv, const std::set<Role>& exclude) {
    std::vector<RawTurn> kept;
    for (const Utterance& u : conv.utterances)
        if (!exclude.count(u.role)) kept.push_back(RawTurn{u.speaker, u.role, u.text});
    return assemble(conv.id, conv.date, conv.election_year, kept);
}

} // namespace lsm
