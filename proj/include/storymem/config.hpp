#pragma once
#include <optional>
#include <string>
#include <vector>

namespace storymem {

struct NsbConfig {
    int theta1 = 6; // rounds per level-1 package
    int theta2 = 5; // level-1 units per level-2 summary
    int theta3 = 5; // level-2 units per level-3 summary

    void validate() const; // all thresholds >= 2
};

enum class MergeCategory { Replace, Append, Trajectory, Contradictory, Complex };

const char* to_string(MergeCategory c);
MergeCategory merge_category_from_string(const std::string& s);

struct PersonaKeySchema {
    std::string key_name;
    MergeCategory category = MergeCategory::Replace;
    std::optional<std::string> conflict_partner; // iff Contradictory
};

struct PcbConfig {
    int snapshot_interval_rounds = 10;
    double contradiction_threshold = 0.8;
    std::vector<PersonaKeySchema> schema;

    PcbConfig();

    void validate() const;
    const PersonaKeySchema* find_key(const std::string& key_name) const;
};

std::vector<PersonaKeySchema> default_persona_schema();

enum class ForgettingPolicy { CompetitionInhibition, Ebbinghaus, Fifo, NoInhibition, None };

const char* to_string(ForgettingPolicy p);
ForgettingPolicy forgetting_policy_from_string(const std::string& s);

struct ForgettingConfig {
    double alpha = 0.1;
    double beta = 0.9;
    double gamma = 1.0;
    double epsilon = 1e-6;
    int k = 9;
    ForgettingPolicy policy = ForgettingPolicy::CompetitionInhibition;

    void validate() const;
};

// Prompt texts used for backend calls. Defaults are the templates shipped
// under prompts/; their contents feed the config hash.
struct PromptSet {
    std::string nsb_level2;
    std::string nsb_level3;
    std::string pcb_snapshot;
    std::string pcb_complex_merge;

    static PromptSet defaults();
};

struct RemoteEndpointConfig {
    std::string base_url;
    std::string model_name;
    int timeout_ms = 30000;
    int max_retries = 2;
    std::string api_key_env_var;
};

struct EngineConfig {
    NsbConfig nsb;
    PcbConfig pcb;
    ForgettingConfig forgetting;
    int retrieval_k = 9;
    int max_generation_chars = 600;
    std::optional<long> capacity_chars;
    PromptSet prompts = PromptSet::defaults();
    std::optional<RemoteEndpointConfig> remote;

    void validate() const;

    // Hash over every behavior-affecting knob plus the prompt texts, so a
    // state file can detect being resumed under a different configuration.
    std::string config_hash() const;
};

// Declarative config file (JSON). Missing keys keep their defaults.
EngineConfig load_engine_config(const std::string& path);
EngineConfig parse_engine_config(const std::string& json_text);

} // namespace storymem
