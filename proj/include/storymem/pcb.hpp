#pragma once
#include "storymem/backends.hpp"
#include "storymem/config.hpp"
#include "storymem/types.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace storymem::pcb {

// Per-window extracted profile.
struct PersonaSnapshot {
    std::pair<int, int> window_span{0, 0}; // first/last round
    std::map<std::string, std::vector<std::string>> entries;
};

struct StampedValue {
    std::string value;
    int stamp = 0; // merge events since arrival; trajectory keys only

    bool operator==(const StampedValue&) const = default;
};

// Cumulative merged profile.
struct PersonaSketch {
    std::map<std::string, std::vector<StampedValue>> entries;
    int last_snapshot_round = 0;

    std::vector<std::string> values(const std::string& key) const;
};

// Prompts the backend with the schema keys and the window text, then parses
// its JSON object output. Keys absent from the schema are dropped with a
// warning record; schema keys the backend omitted come back as empty lists.
// Unparseable output raises ParseError carrying the raw text.
PersonaSnapshot extract_snapshot(std::span<const DialogueTurn> window,
                                 const std::vector<PersonaKeySchema>& schema,
                                 TextGenerator& backend,
                                 const PromptSet& prompts,
                                 int max_generation_chars,
                                 std::vector<std::string>* warnings = nullptr);

// Category merge rules. All of them treat empty new_values as "no merge
// event": the sketch is returned untouched and no backend call is made.
void merge_replace(PersonaSketch& sketch, const std::string& key,
                   const std::vector<std::string>& new_values);

void merge_append(PersonaSketch& sketch, const std::string& key,
                  const std::vector<std::string>& new_values);

void merge_trajectory(PersonaSketch& sketch, const std::string& key,
                      const std::vector<std::string>& new_values,
                      int current_round);

void merge_contradictory(PersonaSketch& sketch, const std::string& key,
                         const std::vector<std::string>& new_values,
                         SimilarityScorer& scorer, const PcbConfig& config);

void merge_complex(PersonaSketch& sketch, const std::string& key,
                   const std::vector<std::string>& new_values,
                   TextGenerator& backend, const PromptSet& prompts,
                   int max_generation_chars);

// Dispatches one key's new values to its category rule.
void merge_key(PersonaSketch& sketch, const PersonaKeySchema& key,
               const std::vector<std::string>& new_values,
               SimilarityScorer& scorer, TextGenerator& merge_backend,
               const PcbConfig& config, const PromptSet& prompts,
               int max_generation_chars);

// Pool item text for one persona key: "key: v1; v2; …".
std::string persona_item_text(const std::string& key,
                              const std::vector<StampedValue>& values);

} // namespace storymem::pcb
