#pragma once
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace storymem {

enum class Speaker { User, Chatbot };

const char* to_string(Speaker s);
Speaker speaker_from_string(const std::string& s);

// One utterance by one speaker.
struct DialogueTurn {
    std::string session_id;
    int turn_index = 0;
    Speaker speaker = Speaker::User;
    std::string text;
    int round_index = 0; // derived: 1-based round this turn belongs to
};

// A pair of consecutive turns: an utterance and its direct response.
struct Round {
    int index = 0; // 1-based
    DialogueTurn first;
    DialogueTurn second;

    std::pair<int, int> turn_span() const { return {first.turn_index, second.turn_index}; }
    std::string concatenated_text() const;
};

struct Transcript {
    std::string session_id;
    std::vector<DialogueTurn> turns;

    // Throws InputError when turns are unsorted, gapped, empty-texted, or
    // break speaker alternation.
    void validate() const;
};

// Consecutive turns paired in order; a trailing unpaired turn is excluded
// from the round list but stays in the transcript.
std::vector<Round> pair_rounds(const Transcript& transcript);

enum class MemoryKind { NarrativeLevel1, NarrativeLevel2, NarrativeLevel3, PersonaFact };

const char* to_string(MemoryKind kind);
MemoryKind memory_kind_from_string(const std::string& s);

struct MemoryItem {
    std::string id;
    MemoryKind kind = MemoryKind::NarrativeLevel1;
    std::string text;
    int creation_round = 0;                  // symbol b
    std::vector<int> retrieval_rounds;       // symbol R_c; ascending, capped
    int suppression_halvings = 0;            // factor = 0.5^halvings, exact
    std::pair<int, int> source_span{0, 0};   // first/last raw turn index
    double last_score = 0.0;                 // cached effective score
    bool eviction_exempt = false;            // pending-aggregation units

    double suppression_factor() const { return std::ldexp(1.0, -suppression_halvings); }

    // Keeps only the most recent `cap` rounds; terms older than ~60 rounds
    // contribute almost nothing to the reinforcement sum.
    void record_retrieval(int round, std::size_t cap = 64);
};

struct MemoryPool {
    std::map<std::string, MemoryItem> items; // keyed by id; sorted iteration
    std::optional<long> capacity_chars;
    int current_round = 0; // symbol r_c: completed rounds so far

    long total_chars() const;
    bool contains(const std::string& id) const { return items.count(id) > 0; }
};

// Audit record for one eviction.
struct EvictionRecord {
    int round = 0;
    std::string evicted_id;
    double effective_score = 0.0;
    std::string policy;
};

} // namespace storymem
