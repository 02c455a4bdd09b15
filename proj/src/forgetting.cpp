#include "storymem/forgetting.hpp"

#include "storymem/errors.hpp"
#include "storymem/text.hpp"

#include <algorithm>
#include <cmath>

namespace storymem::forgetting {

double compute_score(const MemoryItem& item, int current_round,
                     const ForgettingConfig& config) {
    if (current_round < item.creation_round)
        throw InvariantError("compute_score: current round " + std::to_string(current_round) +
                             " precedes creation round " +
                             std::to_string(item.creation_round) + " of " + item.id);
    for (int r : item.retrieval_rounds) {
        if (r >= current_round)
            throw InvariantError("compute_score: retrieval round " + std::to_string(r) +
                                 " of " + item.id +
                                 " is not older than current round " +
                                 std::to_string(current_round));
        if (r < item.creation_round)
            throw InvariantError("compute_score: retrieval round " + std::to_string(r) +
                                 " of " + item.id + " precedes its creation round");
    }

    const double age = static_cast<double>(current_round - item.creation_round);
    double score = config.alpha /
                   (std::exp(config.gamma * age) + (1.0 - config.epsilon));
    for (int r : item.retrieval_rounds)
        score += config.beta /
                 (static_cast<double>(current_round - r) + config.epsilon);
    return score;
}

RetrievalPartition partition_retrieval(const MemoryPool& pool,
                                       const std::string& query,
                                       Reranker& reranker,
                                       const ForgettingConfig& config) {
    if (pool.items.empty()) throw InputError("partition_retrieval: pool is empty");
    if (query.empty()) throw InputError("partition_retrieval: query is empty");

    std::vector<std::pair<std::string, std::string>> candidates;
    candidates.reserve(pool.items.size());
    for (const auto& [id, item] : pool.items) candidates.emplace_back(id, item.text);

    std::vector<RerankEntry> ranked = reranker.rerank(query, candidates);

    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](const RerankEntry& a, const RerankEntry& b) {
                         if (a.score != b.score) return a.score > b.score;
                         const MemoryItem& ia = pool.items.at(a.id);
                         const MemoryItem& ib = pool.items.at(b.id);
                         if (ia.last_score != ib.last_score)
                             return ia.last_score > ib.last_score;
                         if (ia.creation_round != ib.creation_round)
                             return ia.creation_round < ib.creation_round;
                         return a.id < b.id;
                     });

    RetrievalPartition partition;
    const std::size_t k = static_cast<std::size_t>(config.k);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (i < k)
            partition.relevant.push_back(ranked[i].id);
        else if (i < 2 * k)
            partition.noisy.push_back(ranked[i].id);
        else
            partition.unactivated.push_back(ranked[i].id);
    }
    return partition;
}

void apply_reinforcement_suppression(MemoryPool& pool,
                                     const RetrievalPartition& partition,
                                     int current_round, bool inhibit) {
    for (const auto& id : partition.relevant) {
        auto it = pool.items.find(id);
        if (it == pool.items.end()) continue;
        it->second.record_retrieval(current_round);
        it->second.suppression_halvings = 0; // reinforcement overrides suppression
    }
    if (!inhibit) return;
    for (const auto& id : partition.noisy) {
        auto it = pool.items.find(id);
        if (it == pool.items.end()) continue;
        ++it->second.suppression_halvings;
    }
}

namespace {

// Total eviction order: lowest effective score first, then oldest, then id.
bool evicts_before(const MemoryItem& a, const MemoryItem& b) {
    if (a.last_score != b.last_score) return a.last_score < b.last_score;
    if (a.creation_round != b.creation_round) return a.creation_round < b.creation_round;
    return a.id < b.id;
}

} // namespace

std::vector<std::string> enforce_capacity(MemoryPool& pool,
                                          const ExemptPredicate& exempt) {
    std::vector<std::string> evicted;
    if (!pool.capacity_chars) return evicted;

    long total = pool.total_chars();
    while (total > *pool.capacity_chars) {
        const MemoryItem* victim = nullptr;
        for (const auto& [id, item] : pool.items) {
            if (item.eviction_exempt || (exempt && exempt(item))) continue;
            if (!victim || evicts_before(item, *victim)) victim = &item;
        }
        if (!victim)
            throw CapacityOverflowError(
                "pool holds " + std::to_string(total) + " chars against capacity " +
                std::to_string(*pool.capacity_chars) + " with only exempt items left");
        total -= static_cast<long>(utf8_length(victim->text));
        evicted.push_back(victim->id);
        pool.items.erase(victim->id);
    }
    return evicted;
}

double ebbinghaus_retention(const MemoryItem& item, int current_round) {
    const double age = static_cast<double>(current_round - item.creation_round);
    const double strength = 1.0 + static_cast<double>(item.retrieval_rounds.size());
    return std::exp(-age / strength);
}

std::vector<std::string> baseline_policy_step(MemoryPool& pool,
                                              ForgettingPolicy policy,
                                              int current_round,
                                              const ForgettingConfig& config,
                                              const ExemptPredicate& exempt) {
    switch (policy) {
        case ForgettingPolicy::Ebbinghaus:
            for (auto& [id, item] : pool.items)
                item.last_score = ebbinghaus_retention(item, current_round);
            break;
        case ForgettingPolicy::Fifo:
            // Age-ranked so the lowest score is the oldest item.
            for (auto& [id, item] : pool.items)
                item.last_score =
                    1.0 / (1.0 + static_cast<double>(current_round - item.creation_round));
            break;
        case ForgettingPolicy::NoInhibition:
            for (auto& [id, item] : pool.items)
                item.last_score = compute_score(item, current_round, config) *
                                  item.suppression_factor();
            break;
        default:
            throw InputError("baseline_policy_step: policy must be ebbinghaus, fifo, or "
                             "no_inhibition");
    }
    return enforce_capacity(pool, exempt);
}

} // namespace storymem::forgetting
