#pragma once
#include "storymem/backends.hpp"
#include "storymem/config.hpp"
#include "storymem/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace storymem::nsb {

// A packaged or summarized plot element.
struct NarrativeUnit {
    int level = 1;          // 1..3
    int index_at_level = 1; // 1-based within its level
    std::string id;         // pool item id once committed
    std::string text;
    std::vector<std::string> child_ids;  // empty at level 1
    std::pair<int, int> span_rounds{0, 0};
    std::pair<int, int> span_turns{0, 0};
};

// Verbatim level-1 text: one "round k — user: …; bot: …" line per round,
// speakers in the order they actually spoke.
std::string render_level1_text(std::span<const Round> rounds);

// Packages the oldest theta1 rounds of the buffer into a level-1 unit and
// removes them; returns nothing while the buffer is still below threshold.
// The unit id is left empty for the caller to assign.
std::optional<NarrativeUnit> package_level1(std::vector<Round>& buffer,
                                            const NsbConfig& config,
                                            int next_index_at_level);

// Summarizes the oldest theta_{level+1} pending units of `level` into one
// level+1 unit via the backend, removing them from the pending queue.
// Returns nothing below threshold. Backend failures propagate and leave the
// queue untouched.
std::optional<NarrativeUnit> summarize_level(std::vector<NarrativeUnit>& pending,
                                             int level,
                                             TextGenerator& backend,
                                             const NsbConfig& config,
                                             const PromptSet& prompts,
                                             int next_index_at_level,
                                             int max_generation_chars);

} // namespace storymem::nsb
