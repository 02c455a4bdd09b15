#pragma once
#include "storymem/engine.hpp"
#include "storymem/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace storymem::store {

inline constexpr int kFormatVersion = 1;

// Versioned, checksummed state document.
struct StateDocument {
    int format_version = kFormatVersion;
    std::string config_hash;
    std::map<std::string, std::string> backend_identities;
    EngineState state;
};

// Canonical serialization: sorted keys, integers only in state fields, any
// real value rendered at 9 significant digits. Identical states produce
// identical bytes; cached scores are recomputed on load, never persisted.
std::string save(const StateDocument& doc);

// Rejects unknown future versions (StoreVersion) and checksum or structure
// failures (StoreCorrupt).
StateDocument load(const std::string& bytes);

// Line-delimited turn records {session_id, turn_index, speaker, text}.
std::string turn_to_json_line(const DialogueTurn& turn);
DialogueTurn turn_from_json_line(const std::string& line);
Transcript read_transcript_file(const std::string& path);
void append_event_log(const std::string& path, const std::vector<DialogueTurn>& turns);

// Append-only eviction audit records {round, evicted_id, effective_score, policy}.
void append_eviction_log(const std::string& path, const std::vector<EvictionRecord>& records);
std::vector<EvictionRecord> read_eviction_log(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace storymem::store
