#include "storymem/nsb.hpp"

#include "storymem/errors.hpp"
#include "storymem/text.hpp"

namespace storymem::nsb {

std::string render_level1_text(std::span<const Round> rounds) {
    std::vector<std::string> lines;
    lines.reserve(rounds.size());
    for (const auto& r : rounds) {
        auto label = [](Speaker s) { return s == Speaker::User ? "user" : "bot"; };
        lines.push_back("round " + std::to_string(r.index) + " — " +
                        label(r.first.speaker) + ": " + r.first.text + "; " +
                        label(r.second.speaker) + ": " + r.second.text);
    }
    return join(lines, "\n");
}

std::optional<NarrativeUnit> package_level1(std::vector<Round>& buffer,
                                            const NsbConfig& config,
                                            int next_index_at_level) {
    if (static_cast<int>(buffer.size()) < config.theta1) return std::nullopt;

    NarrativeUnit unit;
    unit.level = 1;
    unit.index_at_level = next_index_at_level;
    unit.span_rounds = {buffer.front().index,
                        buffer[static_cast<std::size_t>(config.theta1) - 1].index};
    unit.span_turns = {buffer.front().first.turn_index,
                       buffer[static_cast<std::size_t>(config.theta1) - 1].second.turn_index};
    unit.text = render_level1_text(
        std::span<const Round>(buffer.data(), static_cast<std::size_t>(config.theta1)));
    buffer.erase(buffer.begin(), buffer.begin() + config.theta1);
    return unit;
}

std::optional<NarrativeUnit> summarize_level(std::vector<NarrativeUnit>& pending,
                                             int level,
                                             TextGenerator& backend,
                                             const NsbConfig& config,
                                             const PromptSet& prompts,
                                             int next_index_at_level,
                                             int max_generation_chars) {
    if (level != 1 && level != 2)
        throw InputError("summarize_level: level must be 1 or 2, got " +
                         std::to_string(level));
    const int trigger = level == 1 ? config.theta2 : config.theta3;
    if (static_cast<int>(pending.size()) < trigger) return std::nullopt;

    std::vector<std::string> ids, texts;
    for (int i = 0; i < trigger; ++i) {
        ids.push_back(pending[static_cast<std::size_t>(i)].id);
        texts.push_back(pending[static_cast<std::size_t>(i)].text);
    }
    const std::string& tmpl = level == 1 ? prompts.nsb_level2 : prompts.nsb_level3;
    std::string prompt = render_template(
        tmpl, {{"unit_ids", join(ids, ",")}, {"unit_texts", join(texts, "\n---\n")}});

    // Generate before touching the queue so a backend failure commits nothing.
    std::string summary = backend.generate(prompt, max_generation_chars);

    NarrativeUnit unit;
    unit.level = level + 1;
    unit.index_at_level = next_index_at_level;
    unit.text = std::move(summary);
    unit.child_ids = ids;
    unit.span_rounds = {pending.front().span_rounds.first,
                        pending[static_cast<std::size_t>(trigger) - 1].span_rounds.second};
    unit.span_turns = {pending.front().span_turns.first,
                       pending[static_cast<std::size_t>(trigger) - 1].span_turns.second};
    pending.erase(pending.begin(), pending.begin() + trigger);
    return unit;
}

} // namespace storymem::nsb
