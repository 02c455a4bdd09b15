#pragma once
#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace storymem {

// Text generation backend. Mock implementations are pure functions of the
// prompt; every call site goes through this interface.
class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string generate(const std::string& prompt, int max_length) = 0;
    virtual std::string identity() const = 0;
};

class SimilarityScorer {
public:
    virtual ~SimilarityScorer() = default;
    // Symmetric for the mock; result in [0,1].
    virtual double score(const std::string& a, const std::string& b) = 0;
    virtual std::string identity() const = 0;
};

struct RerankEntry {
    std::string id;
    double score = 0.0; // in [0,1]
};

class Reranker {
public:
    virtual ~Reranker() = default;
    // Returns a permutation of the input ids ordered by descending score;
    // equal-scored candidates keep input order.
    virtual std::vector<RerankEntry> rerank(
        const std::string& query,
        const std::vector<std::pair<std::string, std::string>>& candidates) = 0;
    virtual std::string identity() const = 0;
};

enum class MockBehavior { Echo, TemplateSum, FixedJson };

// echo: prompt truncated to max_length codepoints.
// template_sum: "SUM[<ids>]" where <ids> come from the prompt's SOURCE IDS line.
// fixed_json: a canned parseable persona object, verbatim.
std::unique_ptr<TextGenerator> mock_generator(MockBehavior behavior);

// Marker line the summarization prompts embed so the template_sum mock can
// recover the child unit ids.
inline constexpr const char* kSourceIdsMarker = "SOURCE IDS:";

// Adapter for test doubles built from a lambda.
class CallableGenerator : public TextGenerator {
public:
    using Fn = std::function<std::string(const std::string&, int)>;
    CallableGenerator(std::string identity, Fn fn)
        : identity_(std::move(identity)), fn_(std::move(fn)) {}

    std::string generate(const std::string& prompt, int max_length) override {
        return fn_(prompt, max_length);
    }
    std::string identity() const override { return identity_; }

private:
    std::string identity_;
    Fn fn_;
};

// Dice token overlap; offline stand-in for an embedding scorer.
std::unique_ptr<SimilarityScorer> lexical_scorer();

// Ranks candidates by Dice similarity to the query; stable on ties.
std::unique_ptr<Reranker> lexical_reranker();

// Counts calls through a generator; optionally enforces a call budget and
// raises BackendError(BackendBudget) once it is exhausted.
class CountingGenerator : public TextGenerator {
public:
    explicit CountingGenerator(std::shared_ptr<TextGenerator> inner,
                               std::optional<int> max_calls = std::nullopt)
        : inner_(std::move(inner)), max_calls_(max_calls) {}

    std::string generate(const std::string& prompt, int max_length) override;
    std::string identity() const override { return inner_->identity(); }

    int calls() const { return calls_.load(); }
    void reset() { calls_ = 0; }

private:
    std::shared_ptr<TextGenerator> inner_;
    std::optional<int> max_calls_;
    std::atomic<int> calls_{0};
};

} // namespace storymem
