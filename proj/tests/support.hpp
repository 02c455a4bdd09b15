#pragma once
#include "storymem/engine.hpp"
#include "storymem/eval.hpp"
#include "storymem/types.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using namespace storymem;

inline DialogueTurn make_turn(int index, Speaker speaker, std::string text,
                              std::string session = "s1") {
    DialogueTurn t;
    t.session_id = std::move(session);
    t.turn_index = index;
    t.speaker = speaker;
    t.text = std::move(text);
    return t;
}

// Alternating user/chatbot turns with predictable texts.
inline Transcript simple_transcript(int turn_count, const std::string& session = "s1") {
    Transcript transcript;
    transcript.session_id = session;
    for (int i = 0; i < turn_count; ++i) {
        Speaker speaker = i % 2 == 0 ? Speaker::User : Speaker::Chatbot;
        std::string text = (speaker == Speaker::User ? "user line " : "bot line ") +
                           std::to_string(i / 2 + 1);
        transcript.turns.push_back(make_turn(i, speaker, text, session));
    }
    return transcript;
}

struct FuzzOptions {
    int rounds = 300;
    uint64_t seed = 20260810;
    // Every mention_every-th round the user repeats the planted phrase from
    // round 1, keeping that early memory retrievable.
    std::string planted_phrase;
    int mention_every = 5;
};

// Random dialogue over a small shared vocabulary so rerank scores stay
// granular; every turn also carries a unique token.
inline Transcript fuzz_transcript(const FuzzOptions& opts) {
    static const std::vector<std::string> kLexicon = {
        "journey", "forest",  "market", "dragon", "letter", "harbor", "lantern",
        "teacher", "promise", "storm",  "bridge", "song",   "garden", "shadow",
        "coin",    "river",   "tower",  "secret", "feast",  "map"};
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<int> word_count(3, 7);
    std::uniform_int_distribution<std::size_t> pick(0, kLexicon.size() - 1);

    Transcript transcript;
    transcript.session_id = "fuzz";
    int turn_index = 0;
    for (int round = 1; round <= opts.rounds; ++round) {
        for (int half = 0; half < 2; ++half) {
            Speaker speaker = half == 0 ? Speaker::User : Speaker::Chatbot;
            std::string text;
            const int words = word_count(rng);
            for (int w = 0; w < words; ++w) {
                if (w) text += " ";
                text += kLexicon[pick(rng)];
            }
            text += " tk" + std::to_string(turn_index);
            if (!opts.planted_phrase.empty() && speaker == Speaker::User &&
                (round == 1 || round % opts.mention_every == 0))
                text += " " + opts.planted_phrase;
            transcript.turns.push_back(make_turn(turn_index, speaker, text, "fuzz"));
            ++turn_index;
        }
    }
    return transcript;
}

// --- Independent ROUGE oracles -------------------------------------------
// Deliberately different algorithms from the implementation: greedy multiset
// matching for bigrams, memoized recursion for the LCS.

inline double oracle_rouge2(const std::vector<std::string>& cand,
                            const std::vector<std::string>& ref) {
    if (cand.size() < 2) return 0.0;
    std::vector<std::pair<std::string, std::string>> ref_bigrams;
    for (std::size_t i = 0; i + 1 < ref.size(); ++i)
        ref_bigrams.emplace_back(ref[i], ref[i + 1]);
    int matched = 0;
    for (std::size_t i = 0; i + 1 < cand.size(); ++i) {
        auto it = std::find(ref_bigrams.begin(), ref_bigrams.end(),
                            std::make_pair(cand[i], cand[i + 1]));
        if (it != ref_bigrams.end()) {
            ++matched;
            ref_bigrams.erase(it); // consume so counts clip naturally
        }
    }
    return static_cast<double>(matched) / static_cast<double>(cand.size() - 1);
}

inline std::size_t oracle_lcs(const std::vector<std::string>& a,
                              const std::vector<std::string>& b, std::size_t i,
                              std::size_t j, std::map<std::pair<std::size_t, std::size_t>,
                                                      std::size_t>& memo) {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::size_t best;
    if (a[i] == b[j])
        best = 1 + oracle_lcs(a, b, i + 1, j + 1, memo);
    else
        best = std::max(oracle_lcs(a, b, i + 1, j, memo), oracle_lcs(a, b, i, j + 1, memo));
    memo[key] = best;
    return best;
}

inline double oracle_rougeL(const std::vector<std::string>& cand,
                            const std::vector<std::string>& ref) {
    if (cand.empty()) return 0.0;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    return static_cast<double>(oracle_lcs(cand, ref, 0, 0, memo)) /
           static_cast<double>(cand.size());
}

// Random token strings over a tiny alphabet so overlaps are common.
inline std::string random_token_string(std::mt19937_64& rng, int max_tokens) {
    static const std::vector<std::string> kTokens = {"a", "b", "c", "d", "e"};
    std::uniform_int_distribution<int> count(0, max_tokens);
    std::uniform_int_distribution<std::size_t> pick(0, kTokens.size() - 1);
    const int n = count(rng);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += " ";
        out += kTokens[pick(rng)];
    }
    return out;
}

} // namespace testsupport
