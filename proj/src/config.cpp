#include "storymem/config.hpp"

#include "storymem/errors.hpp"
#include "storymem/store.hpp"
#include "storymem/text.hpp"

#include <nlohmann/json.hpp>

#include <set>

using nlohmann::json;

namespace storymem {

void NsbConfig::validate() const {
    if (theta1 < 2 || theta2 < 2 || theta3 < 2)
        throw InputError("nsb thresholds must all be >= 2");
}

const char* to_string(MergeCategory c) {
    switch (c) {
        case MergeCategory::Replace: return "replace";
        case MergeCategory::Append: return "append";
        case MergeCategory::Trajectory: return "trajectory";
        case MergeCategory::Contradictory: return "contradictory";
        case MergeCategory::Complex: return "complex";
    }
    return "unknown";
}

MergeCategory merge_category_from_string(const std::string& s) {
    if (s == "replace") return MergeCategory::Replace;
    if (s == "append") return MergeCategory::Append;
    if (s == "trajectory") return MergeCategory::Trajectory;
    if (s == "contradictory") return MergeCategory::Contradictory;
    if (s == "complex") return MergeCategory::Complex;
    throw InputError("unknown merge category '" + s + "'");
}

std::vector<PersonaKeySchema> default_persona_schema() {
    using C = MergeCategory;
    return {
        {"Name", C::Replace, {}},
        {"Age", C::Replace, {}},
        {"Gender", C::Replace, {}},
        {"Profession", C::Replace, {}},
        {"Preferences", C::Append, {}},
        {"Skills", C::Append, {}},
        {"Hobbies", C::Append, {}},
        {"Background", C::Append, {}},
        {"RecentEvents", C::Trajectory, {}},
        {"Plans", C::Trajectory, {}},
        {"FavoriteAnimals", C::Contradictory, "DislikedAnimals"},
        {"DislikedAnimals", C::Contradictory, "FavoriteAnimals"},
        {"FavoriteFoods", C::Contradictory, "DislikedFoods"},
        {"DislikedFoods", C::Contradictory, "FavoriteFoods"},
        {"Personality", C::Complex, {}},
        {"Relationship", C::Complex, {}},
    };
}

PcbConfig::PcbConfig() : schema(default_persona_schema()) {}

void PcbConfig::validate() const {
    if (snapshot_interval_rounds < 1)
        throw InputError("snapshot_interval_rounds must be >= 1");
    if (contradiction_threshold < 0.0 || contradiction_threshold > 1.0)
        throw InputError("contradiction_threshold must be in [0,1]");
    if (schema.empty()) throw InputError("persona schema must be non-empty");

    std::set<std::string> names;
    for (const auto& key : schema) {
        if (key.key_name.empty()) throw InputError("empty persona key name");
        if (!names.insert(key.key_name).second)
            throw InputError("duplicate persona key '" + key.key_name + "'");
        if ((key.category == MergeCategory::Contradictory) != key.conflict_partner.has_value())
            throw InputError("key '" + key.key_name +
                             "': conflict_partner is required exactly for contradictory keys");
    }
    for (const auto& key : schema) {
        if (!key.conflict_partner) continue;
        const PersonaKeySchema* partner = find_key(*key.conflict_partner);
        if (!partner || !partner->conflict_partner || *partner->conflict_partner != key.key_name)
            throw InputError("key '" + key.key_name +
                             "': conflict partnership must be symmetric");
    }
}

const PersonaKeySchema* PcbConfig::find_key(const std::string& key_name) const {
    for (const auto& key : schema)
        if (key.key_name == key_name) return &key;
    return nullptr;
}

const char* to_string(ForgettingPolicy p) {
    switch (p) {
        case ForgettingPolicy::CompetitionInhibition: return "competition_inhibition";
        case ForgettingPolicy::Ebbinghaus: return "ebbinghaus";
        case ForgettingPolicy::Fifo: return "fifo";
        case ForgettingPolicy::NoInhibition: return "no_inhibition";
        case ForgettingPolicy::None: return "none";
    }
    return "unknown";
}

ForgettingPolicy forgetting_policy_from_string(const std::string& s) {
    if (s == "competition_inhibition") return ForgettingPolicy::CompetitionInhibition;
    if (s == "ebbinghaus") return ForgettingPolicy::Ebbinghaus;
    if (s == "fifo") return ForgettingPolicy::Fifo;
    if (s == "no_inhibition") return ForgettingPolicy::NoInhibition;
    if (s == "none") return ForgettingPolicy::None;
    throw InputError("unknown forgetting policy '" + s + "'");
}

void ForgettingConfig::validate() const {
    if (alpha < 0.0 || beta < 0.0) throw InputError("alpha and beta must be >= 0");
    if (epsilon <= 0.0) throw InputError("epsilon must be > 0");
    if (k < 1) throw InputError("k must be >= 1");
}

namespace {

// Embedded copies of the files under prompts/, so the engine behaves the
// same regardless of working directory.
constexpr const char* kNsbLevel2 =
    "You are the memory keeper of an ongoing role-play story. Condense the story\n"
    "segments below into one paragraph that keeps the key events, conflicts and\n"
    "turning points in the order they happened. Keep names and concrete details.\n"
    "\n"
    "SOURCE IDS: {{unit_ids}}\n"
    "\n"
    "SEGMENTS:\n"
    "{{unit_texts}}\n"
    "\n"
    "Reply with the summary paragraph only.\n";

constexpr const char* kNsbLevel3 =
    "You are the memory keeper of an ongoing role-play story. The summaries below\n"
    "each cover a stretch of the story. Distill them into one high-level account\n"
    "of the story arc so far: the core conflict, how it developed, and where\n"
    "things stand now. Keep names and decisive events.\n"
    "\n"
    "SOURCE IDS: {{unit_ids}}\n"
    "\n"
    "SUMMARIES:\n"
    "{{unit_texts}}\n"
    "\n"
    "Reply with the distilled account only.\n";

constexpr const char* kPcbSnapshot =
    "Extract what the dialogue window below reveals about the user. Use only the\n"
    "following keys:\n"
    "{{keys}}\n"
    "\n"
    "Return one JSON object. Each value must be a JSON array of short strings.\n"
    "Omit keys the window says nothing new about. Do not add other keys.\n"
    "\n"
    "DIALOGUE:\n"
    "{{window}}\n"
    "\n"
    "JSON:\n";

constexpr const char* kPcbComplexMerge =
    "You maintain the persona profile entry \"{{key}}\" for a role-play user.\n"
    "Merge the new observations into the existing values: drop statements the new\n"
    "ones supersede, combine statements that say the same thing, keep everything\n"
    "still true.\n"
    "\n"
    "EXISTING: {{old_values}}\n"
    "NEW: {{new_values}}\n"
    "\n"
    "Reply with a single JSON array of strings holding the merged values.\n";

} // namespace

PromptSet PromptSet::defaults() {
    return PromptSet{kNsbLevel2, kNsbLevel3, kPcbSnapshot, kPcbComplexMerge};
}

void EngineConfig::validate() const {
    nsb.validate();
    pcb.validate();
    forgetting.validate();
    if (retrieval_k < 1) throw InputError("retrieval_k must be >= 1");
    if (max_generation_chars < 1) throw InputError("max_generation_chars must be >= 1");
    if (capacity_chars && *capacity_chars < 1)
        throw InputError("capacity_chars must be positive when set");
}

std::string EngineConfig::config_hash() const {
    json j;
    j["nsb"] = {{"theta1", nsb.theta1}, {"theta2", nsb.theta2}, {"theta3", nsb.theta3}};
    json schema = json::array();
    for (const auto& key : pcb.schema) {
        json k = {{"key_name", key.key_name}, {"category", to_string(key.category)}};
        if (key.conflict_partner) k["conflict_partner"] = *key.conflict_partner;
        schema.push_back(k);
    }
    j["pcb"] = {{"snapshot_interval_rounds", pcb.snapshot_interval_rounds},
                {"contradiction_threshold", canonical_real(pcb.contradiction_threshold)},
                {"schema", schema}};
    j["forgetting"] = {{"alpha", canonical_real(forgetting.alpha)},
                       {"beta", canonical_real(forgetting.beta)},
                       {"gamma", canonical_real(forgetting.gamma)},
                       {"epsilon", canonical_real(forgetting.epsilon)},
                       {"k", forgetting.k},
                       {"policy", to_string(forgetting.policy)}};
    j["retrieval_k"] = retrieval_k;
    j["max_generation_chars"] = max_generation_chars;
    // capacity_chars stays out: it is runtime-tunable pool state.
    j["prompts"] = {{"nsb_level2", prompts.nsb_level2},
                    {"nsb_level3", prompts.nsb_level3},
                    {"pcb_snapshot", prompts.pcb_snapshot},
                    {"pcb_complex_merge", prompts.pcb_complex_merge}};
    return fnv1a64_hex(j.dump());
}

EngineConfig parse_engine_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config must be a JSON object");

    EngineConfig cfg;
    if (j.contains("nsb")) {
        const auto& n = j["nsb"];
        cfg.nsb.theta1 = n.value("theta1", cfg.nsb.theta1);
        cfg.nsb.theta2 = n.value("theta2", cfg.nsb.theta2);
        cfg.nsb.theta3 = n.value("theta3", cfg.nsb.theta3);
    }
    if (j.contains("pcb")) {
        const auto& p = j["pcb"];
        cfg.pcb.snapshot_interval_rounds =
            p.value("snapshot_interval_rounds", cfg.pcb.snapshot_interval_rounds);
        cfg.pcb.contradiction_threshold =
            p.value("contradiction_threshold", cfg.pcb.contradiction_threshold);
        if (p.contains("schema")) {
            cfg.pcb.schema.clear();
            for (const auto& k : p["schema"]) {
                PersonaKeySchema key;
                key.key_name = k.value("key_name", "");
                key.category = merge_category_from_string(k.value("category", "replace"));
                if (k.contains("conflict_partner") && !k["conflict_partner"].is_null())
                    key.conflict_partner = k["conflict_partner"].get<std::string>();
                cfg.pcb.schema.push_back(std::move(key));
            }
        }
    }
    if (j.contains("forgetting")) {
        const auto& f = j["forgetting"];
        cfg.forgetting.alpha = f.value("alpha", cfg.forgetting.alpha);
        cfg.forgetting.beta = f.value("beta", cfg.forgetting.beta);
        cfg.forgetting.gamma = f.value("gamma", cfg.forgetting.gamma);
        cfg.forgetting.epsilon = f.value("epsilon", cfg.forgetting.epsilon);
        cfg.forgetting.k = f.value("k", cfg.forgetting.k);
        if (f.contains("policy"))
            cfg.forgetting.policy = forgetting_policy_from_string(f["policy"].get<std::string>());
    }
    cfg.retrieval_k = j.value("retrieval_k", cfg.retrieval_k);
    cfg.max_generation_chars = j.value("max_generation_chars", cfg.max_generation_chars);
    if (j.contains("capacity_chars") && !j["capacity_chars"].is_null())
        cfg.capacity_chars = j["capacity_chars"].get<long>();
    if (j.contains("prompts")) {
        const auto& p = j["prompts"];
        auto load_override = [&](const char* name, std::string& slot) {
            if (p.contains(name) && !p[name].is_null())
                slot = store::read_file(p[name].get<std::string>());
        };
        load_override("nsb_level2", cfg.prompts.nsb_level2);
        load_override("nsb_level3", cfg.prompts.nsb_level3);
        load_override("pcb_snapshot", cfg.prompts.pcb_snapshot);
        load_override("pcb_complex_merge", cfg.prompts.pcb_complex_merge);
    }
    if (j.contains("remote")) {
        const auto& r = j["remote"];
        RemoteEndpointConfig rc;
        rc.base_url = r.value("base_url", "");
        rc.model_name = r.value("model_name", "");
        rc.timeout_ms = r.value("timeout_ms", rc.timeout_ms);
        rc.max_retries = r.value("max_retries", rc.max_retries);
        rc.api_key_env_var = r.value("api_key_env_var", "");
        cfg.remote = std::move(rc);
    }
    cfg.validate();
    return cfg;
}

EngineConfig load_engine_config(const std::string& path) {
    return parse_engine_config(store::read_file(path));
}

} // namespace storymem
