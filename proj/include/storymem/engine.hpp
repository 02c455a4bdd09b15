#pragma once
#include "storymem/backends.hpp"
#include "storymem/config.hpp"
#include "storymem/forgetting.hpp"
#include "storymem/nsb.hpp"
#include "storymem/pcb.hpp"
#include "storymem/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace storymem {

// Backend slots the engine calls into. Mock wiring keeps each slot an
// independent deterministic function so tests can swap them per role.
struct EngineBackends {
    std::shared_ptr<TextGenerator> summarizer;        // NSB level 2/3
    std::shared_ptr<TextGenerator> persona_extractor; // PCB snapshots
    std::shared_ptr<TextGenerator> persona_merger;    // PCB complex keys
    std::shared_ptr<SimilarityScorer> scorer;         // PCB contradictions
    std::shared_ptr<Reranker> reranker;               // retrieval partition

    std::map<std::string, std::string> identities() const;
};

EngineBackends mock_backends(MockBehavior summarizer_behavior = MockBehavior::TemplateSum);

// Structural record of a narrative unit, kept even after its pool item is
// evicted so the hierarchy stays auditable.
struct UnitRecord {
    std::string id;
    int level = 1;
    int index_at_level = 1;
    std::vector<std::string> child_ids;
    std::pair<int, int> span_rounds{0, 0};
    std::pair<int, int> span_turns{0, 0};
};

// Everything that persists across a save/load cycle.
struct EngineState {
    std::string session_id;
    int next_turn_index = 0;
    std::optional<Speaker> first_speaker;
    std::optional<DialogueTurn> pending_turn; // first half of the open round

    std::vector<Round> nsb_buffer;                  // rounds awaiting packaging
    std::vector<nsb::NarrativeUnit> pending_level1; // awaiting level-2 summary
    std::vector<nsb::NarrativeUnit> pending_level2; // awaiting level-3 summary
    int next_unit_index[3] = {1, 1, 1};
    std::map<std::string, UnitRecord> units;

    pcb::PersonaSketch sketch;
    std::map<std::string, std::string> persona_item_ids; // key -> pool id
    std::vector<DialogueTurn> pcb_window;                // turns since last snapshot

    MemoryPool pool;
    long next_item_seq = 1;

    int current_round() const { return pool.current_round; }
    int unit_count(int level) const;
};

struct IngestOutcome {
    bool round_completed = false;
    int round_index = 0;
    std::vector<std::string> new_item_ids;
    std::vector<std::string> evicted_ids;
};

struct RetrievedMemory {
    std::string id;
    MemoryKind kind = MemoryKind::NarrativeLevel1;
    std::string text;
    double rerank_score = 0.0;
    double effective_score = 0.0;
};

// Backend calls issued while processing one completed round.
struct RoundCallStats {
    int summarizer = 0;
    int extractor = 0;
    int merger = 0;
    int reranker = 0;
};

struct EngineStats {
    int turns = 0;
    int rounds = 0;
    int pool_items = 0;
    long pool_chars = 0;
    std::optional<long> capacity_chars;
    int level1_units = 0;
    int level2_units = 0;
    int level3_units = 0;
    int persona_items = 0;
    int evictions = 0;
};

// Single-writer per session. Each completed round runs NSB packaging and
// summarization, then the PCB snapshot, then the forgetting step, in that
// order, so memories created in a round compete for capacity in the same
// round. A failed round rolls the state back wholesale, which makes every
// backend error retriable by re-ingesting the same turn.
class Engine {
public:
    Engine(EngineConfig config, EngineBackends backends, std::string session_id = "");

    IngestOutcome ingest_turn(const DialogueTurn& turn);
    std::vector<IngestOutcome> ingest_transcript(const Transcript& transcript);

    // Read-only ranked retrieval; does not reinforce or suppress anything.
    std::vector<RetrievedMemory> retrieve(const std::string& query, int k) const;

    // Replaces the default query (the concatenated text of the round that
    // triggered the step) for the forgetting partition.
    using QueryHook = std::function<std::string(const Round&)>;
    void set_retrieval_query_hook(QueryHook hook) { query_hook_ = std::move(hook); }

    std::string save() const;
    static Engine load(const std::string& bytes, EngineConfig config,
                       EngineBackends backends);

    // Capacity is tunable state, not part of the config hash, so a saved
    // session can be resumed under a different memory budget.
    void set_capacity(std::optional<long> capacity_chars);

    const EngineState& state() const { return state_; }
    const EngineConfig& config() const { return config_; }
    const MemoryPool& pool() const { return state_.pool; }
    const pcb::PersonaSketch& sketch() const { return state_.sketch; }
    int current_round() const { return state_.current_round(); }

    const std::vector<EvictionRecord>& eviction_log() const { return eviction_log_; }
    std::vector<EvictionRecord> drain_eviction_log();
    const std::vector<std::string>& warnings() const { return warnings_; }
    const RoundCallStats& last_round_calls() const { return last_round_calls_; }
    EngineStats stats() const;

private:
    void validate_turn(const DialogueTurn& turn) const;
    std::vector<std::string> nsb_step(int round_index);
    std::vector<std::string> pcb_step(int round_index);
    std::vector<std::string> forget_step(const Round& round);
    std::vector<std::string> run_partition_policies(const std::string& query);
    std::string commit_unit(nsb::NarrativeUnit unit, int round_index);
    std::string mint_item_id();
    double scoring_round_score(const MemoryItem& item, int scoring_round) const;
    void refresh_scores(int scoring_round);

    EngineConfig config_;
    EngineBackends backends_;
    EngineState state_;
    QueryHook query_hook_;
    std::vector<EvictionRecord> eviction_log_;
    std::vector<std::string> warnings_;
    RoundCallStats last_round_calls_;
    int evictions_total_ = 0;
};

} // namespace storymem
