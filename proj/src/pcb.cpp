#include "storymem/pcb.hpp"

#include "storymem/errors.hpp"
#include "storymem/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

using nlohmann::json;

namespace storymem::pcb {

namespace {

// LLM outputs often wrap the payload in prose; take the outermost span of
// the expected bracket pair before giving up.
json parse_enclosed(const std::string& raw, char open, char close) {
    std::string text = trim(raw);
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        std::size_t begin = text.find(open);
        std::size_t end = text.rfind(close);
        if (begin == std::string::npos || end == std::string::npos || end <= begin)
            throw;
        return json::parse(text.substr(begin, end - begin + 1));
    }
}

std::vector<std::string> value_list(const json& v) {
    std::vector<std::string> out;
    if (v.is_string()) {
        if (!v.get<std::string>().empty()) out.push_back(v.get<std::string>());
        return out;
    }
    if (!v.is_array()) throw json::type_error::create(302, "value is not an array", &v);
    for (const auto& e : v) {
        if (!e.is_string()) throw json::type_error::create(302, "value is not a string", &e);
        if (!e.get<std::string>().empty()) out.push_back(e.get<std::string>());
    }
    return out;
}

bool contains_value(const std::vector<StampedValue>& values, const std::string& v) {
    return std::any_of(values.begin(), values.end(),
                       [&](const StampedValue& sv) { return sv.value == v; });
}

} // namespace

std::vector<std::string> PersonaSketch::values(const std::string& key) const {
    std::vector<std::string> out;
    auto it = entries.find(key);
    if (it == entries.end()) return out;
    for (const auto& sv : it->second) out.push_back(sv.value);
    return out;
}

PersonaSnapshot extract_snapshot(std::span<const DialogueTurn> window,
                                 const std::vector<PersonaKeySchema>& schema,
                                 TextGenerator& backend,
                                 const PromptSet& prompts,
                                 int max_generation_chars,
                                 std::vector<std::string>* warnings) {
    if (window.empty()) throw InputError("extract_snapshot: window is empty");

    std::vector<std::string> key_names;
    for (const auto& key : schema) key_names.push_back(key.key_name);
    std::vector<std::string> lines;
    for (const auto& t : window)
        lines.push_back(std::string(to_string(t.speaker)) + ": " + t.text);

    std::string prompt = render_template(prompts.pcb_snapshot,
                                         {{"keys", join(key_names, ", ")},
                                          {"window", join(lines, "\n")}});
    std::string raw = backend.generate(prompt, max_generation_chars);

    json parsed;
    try {
        parsed = parse_enclosed(raw, '{', '}');
        if (!parsed.is_object())
            throw ParseError("snapshot output is not a JSON object", raw);
    } catch (const json::exception& e) {
        throw ParseError(std::string("snapshot output unparseable: ") + e.what(), raw);
    }

    PersonaSnapshot snapshot;
    snapshot.window_span = {window.front().round_index, window.back().round_index};
    for (const auto& name : key_names) snapshot.entries[name] = {};
    for (const auto& [name, value] : parsed.items()) {
        auto it = snapshot.entries.find(name);
        if (it == snapshot.entries.end()) {
            if (warnings)
                warnings->push_back("snapshot: dropped unknown persona key '" + name + "'");
            continue;
        }
        try {
            it->second = value_list(value);
        } catch (const json::exception& e) {
            throw ParseError("snapshot key '" + name + "' unparseable: " + e.what(), raw);
        }
    }
    return snapshot;
}

void merge_replace(PersonaSketch& sketch, const std::string& key,
                   const std::vector<std::string>& new_values) {
    if (new_values.empty()) return;
    sketch.entries[key] = {StampedValue{new_values.back(), 0}};
}

void merge_append(PersonaSketch& sketch, const std::string& key,
                  const std::vector<std::string>& new_values) {
    if (new_values.empty()) return;
    auto& values = sketch.entries[key];
    for (const auto& v : new_values)
        if (!contains_value(values, v)) values.push_back({v, 0});
}

void merge_trajectory(PersonaSketch& sketch, const std::string& key,
                      const std::vector<std::string>& new_values,
                      int /*current_round*/) {
    if (new_values.empty()) return; // no merge event without new values
    auto& values = sketch.entries[key];
    for (auto& sv : values) ++sv.stamp;
    for (const auto& v : new_values) values.push_back({v, 0});
}

void merge_contradictory(PersonaSketch& sketch, const std::string& key,
                         const std::vector<std::string>& new_values,
                         SimilarityScorer& scorer, const PcbConfig& config) {
    if (new_values.empty()) return;
    const PersonaKeySchema* schema_key = config.find_key(key);
    if (!schema_key || !schema_key->conflict_partner)
        throw InputError("merge_contradictory: key '" + key + "' has no conflict partner");

    // Score against the partner first so a scorer failure leaves the sketch
    // untouched.
    std::vector<std::string> doomed;
    auto partner_it = sketch.entries.find(*schema_key->conflict_partner);
    if (partner_it != sketch.entries.end()) {
        for (const auto& existing : partner_it->second) {
            bool contradicted = false;
            for (const auto& v : new_values) {
                if (scorer.score(existing.value, v) >= config.contradiction_threshold) {
                    contradicted = true;
                    break;
                }
            }
            if (contradicted) doomed.push_back(existing.value);
        }
    }

    auto& values = sketch.entries[key];
    for (const auto& v : new_values)
        if (!contains_value(values, v)) values.push_back({v, 0});
    if (partner_it != sketch.entries.end()) {
        auto& partner_values = partner_it->second;
        partner_values.erase(
            std::remove_if(partner_values.begin(), partner_values.end(),
                           [&](const StampedValue& sv) {
                               return std::find(doomed.begin(), doomed.end(), sv.value) !=
                                      doomed.end();
                           }),
            partner_values.end());
    }
}

void merge_complex(PersonaSketch& sketch, const std::string& key,
                   const std::vector<std::string>& new_values,
                   TextGenerator& backend, const PromptSet& prompts,
                   int max_generation_chars) {
    if (new_values.empty()) return;
    std::vector<std::string> old_values;
    auto it = sketch.entries.find(key);
    if (it != sketch.entries.end())
        for (const auto& sv : it->second) old_values.push_back(sv.value);

    std::string prompt = render_template(
        prompts.pcb_complex_merge,
        {{"key", key},
         {"old_values", json(old_values).dump()},
         {"new_values", json(new_values).dump()}});
    std::string raw = backend.generate(prompt, max_generation_chars);

    std::vector<std::string> merged;
    try {
        json parsed = parse_enclosed(raw, '[', ']');
        merged = value_list(parsed);
    } catch (const json::exception& e) {
        throw ParseError("complex merge for '" + key + "' unparseable: " + e.what(), raw);
    }
    auto& values = sketch.entries[key];
    values.clear();
    for (const auto& v : merged) values.push_back({v, 0});
}

void merge_key(PersonaSketch& sketch, const PersonaKeySchema& key,
               const std::vector<std::string>& new_values,
               SimilarityScorer& scorer, TextGenerator& merge_backend,
               const PcbConfig& config, const PromptSet& prompts,
               int max_generation_chars) {
    switch (key.category) {
        case MergeCategory::Replace:
            merge_replace(sketch, key.key_name, new_values);
            break;
        case MergeCategory::Append:
            merge_append(sketch, key.key_name, new_values);
            break;
        case MergeCategory::Trajectory:
            merge_trajectory(sketch, key.key_name, new_values, sketch.last_snapshot_round);
            break;
        case MergeCategory::Contradictory:
            merge_contradictory(sketch, key.key_name, new_values, scorer, config);
            break;
        case MergeCategory::Complex:
            merge_complex(sketch, key.key_name, new_values, merge_backend, prompts,
                          max_generation_chars);
            break;
    }
}

std::string persona_item_text(const std::string& key,
                              const std::vector<StampedValue>& values) {
    std::vector<std::string> parts;
    for (const auto& sv : values) parts.push_back(sv.value);
    return key + ": " + join(parts, "; ");
}

} // namespace storymem::pcb
