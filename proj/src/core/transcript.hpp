#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/date.hpp"

namespace lsm {

enum class Role { candidate, moderator, questioner, other };

std::string_view role_name(Role role);
Role parse_role(std::string_view name); // throws Error(parse) on unknown name

struct Utterance {
    int index = 0; // 0-based position in the conversation
    std::string speaker;
    Role role = Role::other;
    std::string text;
    std::vector<std::string> tokens; // tokenize(text), fixed at construction
};

struct Conversation {
    std::string id;
    Date date;
    std::optional<int> election_year;
    std::vector<Utterance> utterances;

    std::vector<std::string> speakers() const; // distinct, order of appearance
    bool has_speaker(std::string_view speaker) const;
};

// A focal speaker's response together with the utterance spoken right before.
struct AdjacentPair {
    int predecessor_index = 0;
    int response_index = 0; // always predecessor_index + 1
};

enum class TranscriptFormat {
    json, // canonical: {id, date, election_year?, utterances:[{speaker, role, text}]}
    text, // "SPEAKER: text" lines; roles/date/id come from a sidecar mapping
};

// Lowercase tokens, split on any character that is not a letter, digit, or
// apostrophe; empty tokens dropped. Bytes >= 0x80 are kept verbatim so UTF-8
// words stay whole.
std::vector<std::string> tokenize(std::string_view text);

// Parses and turn-merges: consecutive raw turns by the same speaker collapse
// into one utterance with texts joined by a single space. Requires at least
// two distinct speakers. `sidecar_json` is required for the text format and
// ignored for json.
Conversation parse_transcript(std::string_view text, TranscriptFormat format,
                              std::string_view sidecar_json = {});
Conversation load_transcript(const std::string& path, TranscriptFormat format,
                             const std::string& sidecar_path = {});

// Canonical JSON serialization; parse(serialize(c)) == c.
std::string serialize_conversation(const Conversation& conv);

// One pair per focal utterance at index >= 1; a conversation-opening focal
// utterance yields none. Throws Error(not_found) when the speaker is absent.
std::vector<AdjacentPair> adjacent_pairs(const Conversation& conv,
                                         std::string_view focal_speaker);

// Drops utterances whose role is in `exclude`, re-merges neighbours that end
// up adjacent with the same speaker, and renumbers.
Conversation filter_roles(const Conversation& conv, const std::set<Role>& exclude);

} // namespace lsm
