#pragma once
#include "storymem/backends.hpp"
#include "storymem/config.hpp"
#include "storymem/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace storymem::forgetting {

// The (relevant, noisy, unactivated) split of one retrieval event.
struct RetrievalPartition {
    std::vector<std::string> relevant;    // top k, ordered
    std::vector<std::string> noisy;       // next k, ordered
    std::vector<std::string> unactivated; // the rest
};

// Importance score from temporal decay plus retrieval reinforcement:
//   alpha / (exp(gamma * (r_c - b)) + (1 - epsilon))
//   + beta * sum over r in R_c of 1 / (r_c - r + epsilon)
// The caller applies suppression_factor separately. Scores are computed
// before the current round's retrievals are recorded, so every recorded
// round must be strictly older than current_round; violations raise
// InvariantError rather than being silently computed over.
double compute_score(const MemoryItem& item, int current_round,
                     const ForgettingConfig& config);

// Ranks the pool against the query and splits it top-k / next-k / rest.
// Ties in rerank score break by higher effective score, then older
// creation_round, then id order.
RetrievalPartition partition_retrieval(const MemoryPool& pool,
                                       const std::string& query,
                                       Reranker& reranker,
                                       const ForgettingConfig& config);

// Relevant items record the round and drop back to suppression factor 1;
// noisy items have their factor halved (skipped when inhibit is false);
// unactivated items are untouched.
void apply_reinforcement_suppression(MemoryPool& pool,
                                     const RetrievalPartition& partition,
                                     int current_round, bool inhibit = true);

using ExemptPredicate = std::function<bool(const MemoryItem&)>;

// Evicts the lowest-effective-score non-exempt item until the pool fits its
// capacity; ties evict the oldest first, then the smaller id. Requires
// last_score caches to be current. Raises CapacityOverflowError when only
// exempt items remain above capacity.
std::vector<std::string> enforce_capacity(MemoryPool& pool,
                                          const ExemptPredicate& exempt = {});

// Comparison policies. Refreshes every last_score with the policy's own
// ranking (ebbinghaus retention, FIFO age order, or the Eq.-3 score for
// no_inhibition) and then evicts to capacity.
std::vector<std::string> baseline_policy_step(MemoryPool& pool,
                                              ForgettingPolicy policy,
                                              int current_round,
                                              const ForgettingConfig& config,
                                              const ExemptPredicate& exempt = {});

double ebbinghaus_retention(const MemoryItem& item, int current_round);

} // namespace storymem::forgetting
