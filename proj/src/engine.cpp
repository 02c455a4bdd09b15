#include "storymem/engine.hpp"

#include "storymem/errors.hpp"
#include "storymem/store.hpp"
#include "storymem/text.hpp"

#include <algorithm>
#include <cstdio>

namespace storymem {

std::map<std::string, std::string> EngineBackends::identities() const {
    return {{"persona_extractor", persona_extractor->identity()},
            {"persona_merger", persona_merger->identity()},
            {"reranker", reranker->identity()},
            {"scorer", scorer->identity()},
            {"summarizer", summarizer->identity()}};
}

EngineBackends mock_backends(MockBehavior summarizer_behavior) {
    EngineBackends b;
    b.summarizer = mock_generator(summarizer_behavior);
    // Persona slots must honor their parse contracts, so mocks stay on the
    // canned JSON object regardless of the summarizer behavior.
    b.persona_extractor = mock_generator(MockBehavior::FixedJson);
    b.persona_merger = mock_generator(MockBehavior::FixedJson);
    b.scorer = lexical_scorer();
    b.reranker = lexical_reranker();
    return b;
}

int EngineState::unit_count(int level) const {
    return next_unit_index[level - 1] - 1;
}

Engine::Engine(EngineConfig config, EngineBackends backends, std::string session_id)
    : config_(std::move(config)), backends_(std::move(backends)) {
    config_.validate();
    if (!backends_.summarizer || !backends_.persona_extractor ||
        !backends_.persona_merger || !backends_.scorer || !backends_.reranker)
        throw InputError("engine requires all five backend slots");
    state_.session_id = std::move(session_id);
    state_.pool.capacity_chars = config_.capacity_chars;
}

void Engine::validate_turn(const DialogueTurn& turn) const {
    if (!state_.session_id.empty() && !turn.session_id.empty() &&
        turn.session_id != state_.session_id)
        throw InputError("turn belongs to session '" + turn.session_id +
                         "', engine session is '" + state_.session_id + "'");
    if (turn.turn_index != state_.next_turn_index)
        throw InputError("out-of-order turn index " + std::to_string(turn.turn_index) +
                             ", expected " + std::to_string(state_.next_turn_index),
                         state_.next_turn_index);
    if (turn.text.empty())
        throw InputError("turn " + std::to_string(turn.turn_index) + " has empty text");
    if (state_.first_speaker) {
        Speaker expected = turn.turn_index % 2 == 0
                               ? *state_.first_speaker
                               : (*state_.first_speaker == Speaker::User ? Speaker::Chatbot
                                                                         : Speaker::User);
        if (turn.speaker != expected)
            throw InputError("turn " + std::to_string(turn.turn_index) +
                             " breaks speaker alternation");
    }
}

std::string Engine::mint_item_id() {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "m%06ld", state_.next_item_seq++);
    return buf;
}

IngestOutcome Engine::ingest_turn(const DialogueTurn& turn) {
    validate_turn(turn);

    IngestOutcome outcome;
    EngineState backup = state_;
    try {
        DialogueTurn t = turn;
        t.round_index = t.turn_index / 2 + 1;
        if (state_.session_id.empty()) state_.session_id = t.session_id;
        if (!state_.first_speaker) state_.first_speaker = t.speaker;
        ++state_.next_turn_index;

        if (!state_.pending_turn) {
            state_.pending_turn = std::move(t);
            return outcome; // half-round; nothing triggers yet
        }

        Round round;
        round.index = state_.pool.current_round + 1;
        round.first = *state_.pending_turn;
        round.second = std::move(t);
        state_.pending_turn.reset();
        state_.pool.current_round = round.index;
        state_.nsb_buffer.push_back(round);
        state_.pcb_window.push_back(round.first);
        state_.pcb_window.push_back(round.second);

        outcome.round_completed = true;
        outcome.round_index = round.index;
        last_round_calls_ = {};

        auto narrative_ids = nsb_step(round.index);
        auto persona_ids = pcb_step(round.index);
        outcome.new_item_ids = std::move(narrative_ids);
        outcome.new_item_ids.insert(outcome.new_item_ids.end(), persona_ids.begin(),
                                    persona_ids.end());
        outcome.evicted_ids = forget_step(round);
        return outcome;
    } catch (...) {
        state_ = std::move(backup); // failed rounds leave no trace; retriable
        throw;
    }
}

std::vector<IngestOutcome> Engine::ingest_transcript(const Transcript& transcript) {
    transcript.validate();
    std::vector<IngestOutcome> outcomes;
    outcomes.reserve(transcript.turns.size());
    for (const auto& turn : transcript.turns) outcomes.push_back(ingest_turn(turn));
    return outcomes;
}

std::string Engine::commit_unit(nsb::NarrativeUnit unit, int round_index) {
    unit.id = mint_item_id();

    MemoryItem item;
    item.id = unit.id;
    item.kind = unit.level == 1   ? MemoryKind::NarrativeLevel1
                : unit.level == 2 ? MemoryKind::NarrativeLevel2
                                  : MemoryKind::NarrativeLevel3;
    item.text = unit.text;
    item.creation_round = round_index;
    item.source_span = unit.span_turns;
    item.eviction_exempt = unit.level < 3; // pending aggregation; released on consume
    state_.pool.items.emplace(item.id, std::move(item));

    UnitRecord record;
    record.id = unit.id;
    record.level = unit.level;
    record.index_at_level = unit.index_at_level;
    record.child_ids = unit.child_ids;
    record.span_rounds = unit.span_rounds;
    record.span_turns = unit.span_turns;
    state_.units.emplace(unit.id, std::move(record));

    ++state_.next_unit_index[unit.level - 1];
    std::string id = unit.id;
    if (unit.level == 1)
        state_.pending_level1.push_back(std::move(unit));
    else if (unit.level == 2)
        state_.pending_level2.push_back(std::move(unit));
    return id;
}

std::vector<std::string> Engine::nsb_step(int round_index) {
    std::vector<std::string> new_ids;

    while (auto unit = nsb::package_level1(state_.nsb_buffer, config_.nsb,
                                           state_.next_unit_index[0]))
        new_ids.push_back(commit_unit(std::move(*unit), round_index));

    auto release_children = [&](const std::vector<std::string>& child_ids) {
        for (const auto& id : child_ids) {
            auto it = state_.pool.items.find(id);
            if (it != state_.pool.items.end()) it->second.eviction_exempt = false;
        }
    };

    while (auto unit = nsb::summarize_level(state_.pending_level1, 1,
                                            *backends_.summarizer, config_.nsb,
                                            config_.prompts, state_.next_unit_index[1],
                                            config_.max_generation_chars)) {
        ++last_round_calls_.summarizer;
        release_children(unit->child_ids);
        new_ids.push_back(commit_unit(std::move(*unit), round_index));
    }

    while (auto unit = nsb::summarize_level(state_.pending_level2, 2,
                                            *backends_.summarizer, config_.nsb,
                                            config_.prompts, state_.next_unit_index[2],
                                            config_.max_generation_chars)) {
        ++last_round_calls_.summarizer;
        release_children(unit->child_ids);
        new_ids.push_back(commit_unit(std::move(*unit), round_index));
    }
    return new_ids;
}

std::vector<std::string> Engine::pcb_step(int round_index) {
    std::vector<std::string> touched_ids;
    if (round_index - state_.sketch.last_snapshot_round <
        config_.pcb.snapshot_interval_rounds)
        return touched_ids;

    pcb::PersonaSnapshot snapshot = pcb::extract_snapshot(
        state_.pcb_window, config_.pcb.schema, *backends_.persona_extractor,
        config_.prompts, config_.max_generation_chars, &warnings_);
    ++last_round_calls_.extractor;

    const int window_first_turn = state_.pcb_window.front().turn_index;
    const int window_last_turn = state_.pcb_window.back().turn_index;

    auto sketch_values = [&](const std::string& key) -> std::vector<pcb::StampedValue> {
        auto it = state_.sketch.entries.find(key);
        return it == state_.sketch.entries.end() ? std::vector<pcb::StampedValue>{}
                                                 : it->second;
    };
    std::map<std::string, std::vector<pcb::StampedValue>> before;
    for (const auto& key : config_.pcb.schema)
        before[key.key_name] = sketch_values(key.key_name);

    // Keys merge independently: one key's failure rolls back only that key,
    // and the first error surfaces after every key has been attempted.
    std::exception_ptr first_error;
    for (const auto& key : config_.pcb.schema) {
        const auto& new_values = snapshot.entries[key.key_name];
        if (new_values.empty()) continue;
        try {
            pcb::merge_key(state_.sketch, key, new_values, *backends_.scorer,
                           *backends_.persona_merger, config_.pcb, config_.prompts,
                           config_.max_generation_chars);
            if (key.category == MergeCategory::Complex) ++last_round_calls_.merger;
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
            if (before[key.key_name].empty())
                state_.sketch.entries.erase(key.key_name);
            else
                state_.sketch.entries[key.key_name] = before[key.key_name];
        }
    }

    // Empty entries (for example after a contradiction purge) leave the
    // sketch entirely so the serialized form stays canonical.
    for (auto it = state_.sketch.entries.begin(); it != state_.sketch.entries.end();)
        it = it->second.empty() ? state_.sketch.entries.erase(it) : std::next(it);

    std::vector<std::string> changed_keys;
    for (const auto& key : config_.pcb.schema)
        if (sketch_values(key.key_name) != before[key.key_name])
            changed_keys.push_back(key.key_name);

    for (const auto& key : changed_keys) {
        const auto values = sketch_values(key);
        auto id_it = state_.persona_item_ids.find(key);
        const bool have_item =
            id_it != state_.persona_item_ids.end() && state_.pool.contains(id_it->second);

        if (values.empty()) {
            // Contradiction cleared the key; its pool item goes with it.
            if (have_item) {
                state_.pool.items.erase(id_it->second);
                state_.persona_item_ids.erase(id_it);
            }
            continue;
        }
        const std::string text = pcb::persona_item_text(key, values);
        if (have_item) {
            MemoryItem& item = state_.pool.items.at(id_it->second);
            if (item.text == text) continue;
            item.text = text;
            item.source_span.second = window_last_turn;
            touched_ids.push_back(item.id);
        } else {
            MemoryItem item;
            item.id = mint_item_id();
            item.kind = MemoryKind::PersonaFact;
            item.text = text;
            item.creation_round = round_index;
            item.source_span = {window_first_turn, window_last_turn};
            state_.persona_item_ids[key] = item.id;
            touched_ids.push_back(item.id);
            state_.pool.items.emplace(item.id, std::move(item));
        }
    }

    state_.sketch.last_snapshot_round = round_index;
    state_.pcb_window.clear();
    if (first_error) std::rethrow_exception(first_error);
    return touched_ids;
}

double Engine::scoring_round_score(const MemoryItem& item, int scoring_round) const {
    switch (config_.forgetting.policy) {
        case ForgettingPolicy::Ebbinghaus:
            return forgetting::ebbinghaus_retention(item, scoring_round);
        case ForgettingPolicy::Fifo:
            return 1.0 / (1.0 + static_cast<double>(scoring_round - item.creation_round));
        default:
            return forgetting::compute_score(item, scoring_round, config_.forgetting) *
                   item.suppression_factor();
    }
}

void Engine::refresh_scores(int scoring_round) {
    for (auto& [id, item] : state_.pool.items)
        item.last_score = scoring_round_score(item, scoring_round);
}

std::vector<std::string> Engine::forget_step(const Round& round) {
    const ForgettingPolicy policy = config_.forgetting.policy;
    if (policy == ForgettingPolicy::None) return {};

    const int r_c = state_.pool.current_round;
    auto& pool = state_.pool;

    // Score pass: Eq.-3 scores see only retrievals from earlier rounds.
    std::map<std::string, double> base_scores;
    if (policy == ForgettingPolicy::CompetitionInhibition ||
        policy == ForgettingPolicy::NoInhibition) {
        for (auto& [id, item] : pool.items) {
            base_scores[id] = forgetting::compute_score(item, r_c, config_.forgetting);
            item.last_score = base_scores[id] * item.suppression_factor();
        }
    } else {
        refresh_scores(r_c);
    }

    // Retrieval pass: rank, reinforce the top k, suppress the next k.
    // FIFO keeps no retrieval bookkeeping at all.
    if (policy != ForgettingPolicy::Fifo && !pool.items.empty()) {
        std::string query =
            query_hook_ ? query_hook_(round) : round.concatenated_text();
        if (!query.empty()) {
            auto partition = forgetting::partition_retrieval(
                pool, query, *backends_.reranker, config_.forgetting);
            ++last_round_calls_.reranker;
            forgetting::apply_reinforcement_suppression(
                pool, partition, r_c,
                policy == ForgettingPolicy::CompetitionInhibition);
            // Eviction sees the updated suppression factors; the Eq.-3 term
            // still excludes this round's retrievals.
            if (policy == ForgettingPolicy::Ebbinghaus)
                refresh_scores(r_c);
            else
                for (auto& [id, item] : pool.items)
                    item.last_score = base_scores[id] * item.suppression_factor();
        }
    }

    std::map<std::string, double> score_of;
    for (const auto& [id, item] : pool.items) score_of[id] = item.last_score;

    auto evicted = forgetting::enforce_capacity(pool);
    for (const auto& id : evicted) {
        eviction_log_.push_back({r_c, id, score_of[id], to_string(policy)});
        ++evictions_total_;
    }
    return evicted;
}

std::vector<RetrievedMemory> Engine::retrieve(const std::string& query, int k) const {
    std::vector<RetrievedMemory> results;
    if (k < 1 || state_.pool.items.empty() || query.empty()) return results;

    // Scores as a retrieval in the next round would see them.
    const int scoring_round = state_.pool.current_round + 1;
    std::map<std::string, double> effective;
    for (const auto& [id, item] : state_.pool.items)
        effective[id] = scoring_round_score(item, scoring_round);

    std::vector<std::pair<std::string, std::string>> candidates;
    for (const auto& [id, item] : state_.pool.items) candidates.emplace_back(id, item.text);
    auto ranked = backends_.reranker->rerank(query, candidates);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](const RerankEntry& a, const RerankEntry& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (effective[a.id] != effective[b.id])
                             return effective[a.id] > effective[b.id];
                         const auto& ia = state_.pool.items.at(a.id);
                         const auto& ib = state_.pool.items.at(b.id);
                         if (ia.creation_round != ib.creation_round)
                             return ia.creation_round < ib.creation_round;
                         return a.id < b.id;
                     });

    for (const auto& entry : ranked) {
        if (static_cast<int>(results.size()) >= k) break;
        const MemoryItem& item = state_.pool.items.at(entry.id);
        results.push_back({item.id, item.kind, item.text, entry.score, effective[entry.id]});
    }
    return results;
}

std::string Engine::save() const {
    store::StateDocument doc;
    doc.config_hash = config_.config_hash();
    doc.backend_identities = backends_.identities();
    doc.state = state_;
    return store::save(doc);
}

Engine Engine::load(const std::string& bytes, EngineConfig config,
                    EngineBackends backends) {
    store::StateDocument doc = store::load(bytes);
    Engine engine(std::move(config), std::move(backends));
    if (doc.config_hash != engine.config_.config_hash())
        throw InputError("state file was produced under a different configuration "
                         "(config hash " + doc.config_hash + ")");
    engine.state_ = std::move(doc.state);
    // Cached scores are never trusted from disk.
    engine.refresh_scores(engine.state_.pool.current_round + 1);
    return engine;
}

void Engine::set_capacity(std::optional<long> capacity_chars) {
    if (capacity_chars && *capacity_chars < 1)
        throw InputError("capacity_chars must be positive when set");
    state_.pool.capacity_chars = capacity_chars;
    config_.capacity_chars = capacity_chars;
}

std::vector<EvictionRecord> Engine::drain_eviction_log() {
    std::vector<EvictionRecord> out;
    out.swap(eviction_log_);
    return out;
}

EngineStats Engine::stats() const {
    EngineStats s;
    s.turns = state_.next_turn_index;
    s.rounds = state_.pool.current_round;
    s.pool_items = static_cast<int>(state_.pool.items.size());
    s.pool_chars = state_.pool.total_chars();
    s.capacity_chars = state_.pool.capacity_chars;
    s.level1_units = state_.unit_count(1);
    s.level2_units = state_.unit_count(2);
    s.level3_units = state_.unit_count(3);
    for (const auto& [id, item] : state_.pool.items)
        if (item.kind == MemoryKind::PersonaFact) ++s.persona_items;
    s.evictions = evictions_total_;
    return s;
}

} // namespace storymem
