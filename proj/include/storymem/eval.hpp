#pragma once
#include "storymem/backends.hpp"
#include "storymem/engine.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace storymem::eval {

// A human-annotated memory point and the turn where it appeared.
struct MemoryLabel {
    std::string text;
    int turn = 0;
};

// Multiple-choice memory probe: four candidate responses, one correct.
struct ProbeQuestion {
    std::string question;
    std::array<std::string, 4> options;
    int answer_index = 0;
    int turn = 0;
};

// Insertion-recall probe: information dialogue P, retrieval dialogue Q,
// reference answer A.
struct ProbeTriplet {
    std::string info_dialogue;      // P
    std::string retrieval_dialogue; // Q
    std::string reference_answer;   // A
};

struct EvalLogEntry {
    std::string context;
    std::string raw_output;
};
using EvalLog = std::vector<EvalLogEntry>;

// Mean over labels of the best similarity any memory achieves against the
// label. No memories means every label scores 0.
double best_match_score(const std::vector<MemoryLabel>& labels,
                        const std::vector<std::string>& memories,
                        SimilarityScorer& scorer);

enum class RougeVariant { Rouge2, RougeL };

// Precision-side ROUGE with mixed tokenization: CJK codepoints are
// per-character tokens, everything else splits on whitespace.
// ROUGE-2: clipped bigram matches / candidate bigrams (one-token or empty
// candidates score 0). ROUGE-L: LCS length / candidate token count.
double rouge_precision(const std::string& candidate, const std::string& reference,
                       RougeVariant variant);

std::vector<std::string> eval_tokens(const std::string& text);

// Judge-based fidelity in [0,5]: each memory is matched to its best label by
// the scorer, the judge grades the pair 0-5, each label keeps its best grade
// and unmatched labels score 0; the result is the label mean. Unparseable
// judge output grades the pair 0 and is logged.
double mem_score(const std::vector<std::string>& memories,
                 const std::vector<MemoryLabel>& labels,
                 SimilarityScorer& scorer, TextGenerator& judge,
                 EvalLog* log = nullptr);

// Memory texts available at a probe's turn.
using MemoryProvider = std::function<std::vector<std::string>(int turn)>;

// Fraction of probes whose parsed answer matches answer_index; unparseable
// answers count wrong and are logged. Empty probe lists are an error.
double probe_qa_precision(const std::vector<ProbeQuestion>& probes,
                          const MemoryProvider& memory_provider,
                          TextGenerator& answerer, EvalLog* log = nullptr);

// Injects each P as a user turn (plus a neutral response to close the
// round), poses Q against retrieved memories, and averages the judge's 0-5
// grades of the answer against A.
double probe_table_eval(const std::vector<ProbeTriplet>& triplets, Engine& engine,
                        TextGenerator& answerer, TextGenerator& judge,
                        EvalLog* log = nullptr);

// Prompt renderers, exposed so mock answerers and judges can key on the
// exact layout the harness sends.
std::string render_probe_prompt(const std::vector<std::string>& memories,
                                const std::string& question,
                                const std::array<std::string, 4>& options);
std::string render_answer_prompt(const std::vector<std::string>& memories,
                                 const std::string& question);
std::string render_judge_prompt(const std::string& candidate,
                                const std::string& reference);

// File formats: labels {text, turn}; probes {question, options[4],
// answer_index, turn}; triplets {P, Q, A}. One JSON object per line.
std::vector<MemoryLabel> read_labels_file(const std::string& path);
std::vector<ProbeQuestion> read_probes_file(const std::string& path);
std::vector<ProbeTriplet> read_triplets_file(const std::string& path);

} // namespace storymem::eval
