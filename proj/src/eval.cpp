#include "storymem/eval.hpp"

#include "storymem/errors.hpp"
#include "storymem/store.hpp"
#include "storymem/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

using nlohmann::json;

namespace storymem::eval {

double best_match_score(const std::vector<MemoryLabel>& labels,
                        const std::vector<std::string>& memories,
                        SimilarityScorer& scorer) {
    if (labels.empty()) throw InputError("best_match_score: labels are empty");
    double sum = 0.0;
    for (const auto& label : labels) {
        double best = 0.0;
        for (const auto& memory : memories)
            best = std::max(best, scorer.score(label.text, memory));
        sum += best;
    }
    return sum / static_cast<double>(labels.size());
}

std::vector<std::string> eval_tokens(const std::string& text) {
    return mixed_tokens(text);
}

namespace {

double rouge2(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
    if (cand.size() < 2) return 0.0; // no bigrams to be precise about
    auto bigrams = [](const std::vector<std::string>& tokens) {
        std::map<std::string, int> counts;
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
            ++counts[tokens[i] + "\x1f" + tokens[i + 1]];
        return counts;
    };
    std::map<std::string, int> cand_counts = bigrams(cand);
    std::map<std::string, int> ref_counts = bigrams(ref);
    long matched = 0;
    for (const auto& [bigram, count] : cand_counts) {
        auto it = ref_counts.find(bigram);
        if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    return static_cast<double>(matched) / static_cast<double>(cand.size() - 1);
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                curr[j] = prev[j - 1] + 1;
            else
                curr[j] = std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

// First integer found in the output, or nothing.
std::optional<int> parse_leading_int(const std::string& raw) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(raw[i]))) {
            std::size_t end = i;
            while (end < raw.size() && std::isdigit(static_cast<unsigned char>(raw[end])))
                ++end;
            return std::stoi(raw.substr(i, end - i));
        }
    }
    return std::nullopt;
}

std::optional<int> parse_choice(const std::string& raw) {
    auto number = parse_leading_int(raw);
    if (number && *number >= 0 && *number <= 3) return number;
    for (char c : trim(raw)) {
        if (c >= 'A' && c <= 'D') return c - 'A';
        if (c >= 'a' && c <= 'd') return c - 'a';
    }
    return std::nullopt;
}

std::optional<int> parse_grade(const std::string& raw) {
    auto number = parse_leading_int(raw);
    if (number && *number >= 0 && *number <= 5) return number;
    return std::nullopt;
}

void log_entry(EvalLog* log, const std::string& context, const std::string& raw) {
    if (log) log->push_back({context, raw});
}

} // namespace

double rouge_precision(const std::string& candidate, const std::string& reference,
                       RougeVariant variant) {
    std::vector<std::string> cand = eval_tokens(candidate);
    std::vector<std::string> ref = eval_tokens(reference);
    if (cand.empty()) return 0.0;
    if (variant == RougeVariant::Rouge2) return rouge2(cand, ref);
    return static_cast<double>(lcs_length(cand, ref)) / static_cast<double>(cand.size());
}

double mem_score(const std::vector<std::string>& memories,
                 const std::vector<MemoryLabel>& labels,
                 SimilarityScorer& scorer, TextGenerator& judge, EvalLog* log) {
    if (labels.empty()) throw InputError("mem_score: labels are empty");
    std::vector<int> label_best(labels.size(), 0);
    for (const auto& memory : memories) {
        std::size_t best_label = 0;
        double best_sim = -1.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            double sim = scorer.score(memory, labels[i].text);
            if (sim > best_sim) {
                best_sim = sim;
                best_label = i;
            }
        }
        std::string raw = judge.generate(
            render_judge_prompt(memory, labels[best_label].text), 16);
        auto grade = parse_grade(raw);
        if (!grade) {
            log_entry(log, "mem_score: unparseable judge output for memory '" +
                               utf8_truncate(memory, 40) + "'",
                      raw);
            continue; // the pair scores 0
        }
        label_best[best_label] = std::max(label_best[best_label], *grade);
    }
    long sum = 0;
    for (int g : label_best) sum += g;
    return static_cast<double>(sum) / static_cast<double>(labels.size());
}

std::string render_probe_prompt(const std::vector<std::string>& memories,
                                const std::string& question,
                                const std::array<std::string, 4>& options) {
    std::string prompt = "MEMORIES:\n";
    prompt += memories.empty() ? "(none)\n" : join(memories, "\n") + "\n";
    prompt += "QUESTION: " + question + "\nOPTIONS:\n";
    for (int i = 0; i < 4; ++i)
        prompt += std::to_string(i) + ") " + options[static_cast<std::size_t>(i)] + "\n";
    prompt += "Reply with the option number only.";
    return prompt;
}

std::string render_answer_prompt(const std::vector<std::string>& memories,
                                 const std::string& question) {
    std::string prompt = "MEMORIES:\n";
    prompt += memories.empty() ? "(none)\n" : join(memories, "\n") + "\n";
    prompt += "Using the memories above, answer the user.\nUSER: " + question;
    return prompt;
}

std::string render_judge_prompt(const std::string& candidate,
                                const std::string& reference) {
    return "Score how well CANDIDATE conveys REFERENCE on a 0-5 scale, where 5 is a "
           "faithful match and 0 is unrelated.\nCANDIDATE: " +
           candidate + "\nREFERENCE: " + reference + "\nReply with one integer 0-5.";
}

double probe_qa_precision(const std::vector<ProbeQuestion>& probes,
                          const MemoryProvider& memory_provider,
                          TextGenerator& answerer, EvalLog* log) {
    if (probes.empty()) throw InputError("probe_qa_precision: no probes given");
    int correct = 0;
    for (const auto& probe : probes) {
        std::vector<std::string> memories = memory_provider(probe.turn);
        std::string raw = answerer.generate(
            render_probe_prompt(memories, probe.question, probe.options), 16);
        auto choice = parse_choice(raw);
        if (!choice) {
            log_entry(log, "probe_qa: unparseable answer for '" + probe.question + "'", raw);
            continue; // counts wrong
        }
        if (*choice == probe.answer_index) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probes.size());
}

double probe_table_eval(const std::vector<ProbeTriplet>& triplets, Engine& engine,
                        TextGenerator& answerer, TextGenerator& judge, EvalLog* log) {
    if (triplets.empty()) throw InputError("probe_table_eval: no triplets given");

    auto next_speaker = [&]() -> Speaker {
        const auto& st = engine.state();
        if (!st.first_speaker) return Speaker::User;
        return st.next_turn_index % 2 == 0
                   ? *st.first_speaker
                   : (*st.first_speaker == Speaker::User ? Speaker::Chatbot : Speaker::User);
    };
    auto inject = [&](Speaker speaker, const std::string& text) {
        DialogueTurn turn;
        turn.session_id = engine.state().session_id;
        turn.turn_index = engine.state().next_turn_index;
        turn.speaker = speaker;
        turn.text = text;
        engine.ingest_turn(turn);
    };

    double sum = 0.0;
    for (const auto& triplet : triplets) {
        // P enters the dialogue as a user turn; filler keeps alternation legal
        // and a neutral response closes the round so the branches advance.
        if (next_speaker() == Speaker::Chatbot) inject(Speaker::Chatbot, "(continues)");
        inject(Speaker::User, triplet.info_dialogue);
        inject(Speaker::Chatbot, "Noted.");

        std::vector<std::string> memories;
        for (const auto& m :
             engine.retrieve(triplet.retrieval_dialogue, engine.config().retrieval_k))
            memories.push_back(m.text);
        std::string response = answerer.generate(
            render_answer_prompt(memories, triplet.retrieval_dialogue),
            engine.config().max_generation_chars);
        std::string raw =
            judge.generate(render_judge_prompt(response, triplet.reference_answer), 16);
        auto grade = parse_grade(raw);
        if (!grade)
            log_entry(log, "probe_table: unparseable judge output", raw);
        sum += grade.value_or(0);
    }
    return sum / static_cast<double>(triplets.size());
}

namespace {

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file '" + path + "'");
    std::vector<json> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace

std::vector<MemoryLabel> read_labels_file(const std::string& path) {
    std::vector<MemoryLabel> labels;
    for (const auto& j : read_jsonl(path)) {
        MemoryLabel label;
        label.text = j.at("text").get<std::string>();
        label.turn = j.value("turn", 0);
        if (label.text.empty()) throw InputError(path + ": label with empty text");
        labels.push_back(std::move(label));
    }
    return labels;
}

std::vector<ProbeQuestion> read_probes_file(const std::string& path) {
    std::vector<ProbeQuestion> probes;
    for (const auto& j : read_jsonl(path)) {
        ProbeQuestion p;
        p.question = j.at("question").get<std::string>();
        auto options = j.at("options").get<std::vector<std::string>>();
        if (options.size() != 4)
            throw InputError(path + ": probe needs exactly 4 options");
        std::copy(options.begin(), options.end(), p.options.begin());
        p.answer_index = j.at("answer_index").get<int>();
        if (p.answer_index < 0 || p.answer_index > 3)
            throw InputError(path + ": answer_index out of range");
        p.turn = j.value("turn", 0);
        probes.push_back(std::move(p));
    }
    return probes;
}

std::vector<ProbeTriplet> read_triplets_file(const std::string& path) {
    std::vector<ProbeTriplet> triplets;
    for (const auto& j : read_jsonl(path)) {
        ProbeTriplet t;
        t.info_dialogue = j.at("P").get<std::string>();
        t.retrieval_dialogue = j.at("Q").get<std::string>();
        t.reference_answer = j.at("A").get<std::string>();
        if (t.info_dialogue.empty() || t.retrieval_dialogue.empty() ||
            t.reference_answer.empty())
            throw InputError(path + ": triplet fields must be non-empty");
        triplets.push_back(std::move(t));
    }
    return triplets;
}

} // namespace storymem::eval
