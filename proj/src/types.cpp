#include "storymem/types.hpp"

#include "storymem/errors.hpp"
#include "storymem/text.hpp"

#include <algorithm>

namespace storymem {

const char* to_string(Speaker s) {
    return s == Speaker::User ? "user" : "chatbot";
}

Speaker speaker_from_string(const std::string& s) {
    if (s == "user") return Speaker::User;
    if (s == "chatbot" || s == "bot") return Speaker::Chatbot;
    throw InputError("unknown speaker '" + s + "' (expected user|chatbot)");
}

std::string Round::concatenated_text() const {
    auto label = [](Speaker s) { return s == Speaker::User ? "user" : "bot"; };
    return std::string(label(first.speaker)) + ": " + first.text + "\n" +
           label(second.speaker) + ": " + second.text;
}

void Transcript::validate() const {
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const auto& t = turns[i];
        if (t.turn_index != static_cast<int>(i))
            throw InputError("transcript gap: turn at position " + std::to_string(i) +
                                 " has index " + std::to_string(t.turn_index),
                             static_cast<int>(i));
        if (t.text.empty())
            throw InputError("turn " + std::to_string(t.turn_index) + " has empty text");
        if (i > 0 && t.speaker == turns[i - 1].speaker)
            throw InputError("turn " + std::to_string(t.turn_index) +
                             " repeats speaker; turns must alternate");
        if (!session_id.empty() && !t.session_id.empty() && t.session_id != session_id)
            throw InputError("turn " + std::to_string(t.turn_index) +
                             " belongs to session '" + t.session_id + "'");
    }
}

std::vector<Round> pair_rounds(const Transcript& transcript) {
    std::vector<Round> rounds;
    const auto& turns = transcript.turns;
    for (std::size_t i = 0; i + 1 < turns.size(); i += 2) {
        Round r;
        r.index = static_cast<int>(i / 2) + 1;
        r.first = turns[i];
        r.second = turns[i + 1];
        rounds.push_back(std::move(r));
    }
    return rounds;
}

const char* to_string(MemoryKind kind) {
    switch (kind) {
        case MemoryKind::NarrativeLevel1: return "narrative_level1";
        case MemoryKind::NarrativeLevel2: return "narrative_level2";
        case MemoryKind::NarrativeLevel3: return "narrative_level3";
        case MemoryKind::PersonaFact: return "persona_fact";
    }
    return "unknown";
}

MemoryKind memory_kind_from_string(const std::string& s) {
    if (s == "narrative_level1") return MemoryKind::NarrativeLevel1;
    if (s == "narrative_level2") return MemoryKind::NarrativeLevel2;
    if (s == "narrative_level3") return MemoryKind::NarrativeLevel3;
    if (s == "persona_fact") return MemoryKind::PersonaFact;
    throw InputError("unknown memory kind '" + s + "'");
}

void MemoryItem::record_retrieval(int round, std::size_t cap) {
    auto it = std::lower_bound(retrieval_rounds.begin(), retrieval_rounds.end(), round);
    if (it != retrieval_rounds.end() && *it == round) return;
    retrieval_rounds.insert(it, round);
    if (retrieval_rounds.size() > cap)
        retrieval_rounds.erase(retrieval_rounds.begin(),
                               retrieval_rounds.begin() + (retrieval_rounds.size() - cap));
}

long MemoryPool::total_chars() const {
    long total = 0;
    for (const auto& [id, item] : items)
        total += static_cast<long>(utf8_length(item.text));
    return total;
}

} // namespace storymem
