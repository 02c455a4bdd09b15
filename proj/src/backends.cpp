#include "storymem/backends.hpp"

#include "storymem/errors.hpp"
#include "storymem/text.hpp"

#include <algorithm>

namespace storymem {

namespace {

class EchoGenerator : public TextGenerator {
public:
    std::string generate(const std::string& prompt, int max_length) override {
        return utf8_truncate(prompt, static_cast<std::size_t>(std::max(0, max_length)));
    }
    std::string identity() const override { return "mock:echo"; }
};

class TemplateSumGenerator : public TextGenerator {
public:
    std::string generate(const std::string& prompt, int max_length) override {
        std::string ids;
        std::size_t pos = prompt.find(kSourceIdsMarker);
        if (pos != std::string::npos) {
            pos += std::string(kSourceIdsMarker).size();
            std::size_t end = prompt.find('\n', pos);
            ids = trim(prompt.substr(pos, end == std::string::npos ? std::string::npos
                                                                   : end - pos));
        }
        return utf8_truncate("SUM[" + ids + "]",
                             static_cast<std::size_t>(std::max(0, max_length)));
    }
    std::string identity() const override { return "mock:template_sum"; }
};

class FixedJsonGenerator : public TextGenerator {
public:
    std::string generate(const std::string&, int) override {
        return R"({"Name": ["Wei"]})";
    }
    std::string identity() const override { return "mock:fixed_json"; }
};

class LexicalScorer : public SimilarityScorer {
public:
    double score(const std::string& a, const std::string& b) override {
        return dice_similarity(a, b);
    }
    std::string identity() const override { return "lexical"; }
};

class LexicalReranker : public Reranker {
public:
    std::vector<RerankEntry> rerank(
        const std::string& query,
        const std::vector<std::pair<std::string, std::string>>& candidates) override {
        std::vector<RerankEntry> out;
        out.reserve(candidates.size());
        for (const auto& [id, text] : candidates)
            out.push_back({id, dice_similarity(query, text)});
        std::stable_sort(out.begin(), out.end(),
                         [](const RerankEntry& a, const RerankEntry& b) {
                             return a.score > b.score;
                         });
        return out;
    }
    std::string identity() const override { return "lexical"; }
};

} // namespace

std::unique_ptr<TextGenerator> mock_generator(MockBehavior behavior) {
    switch (behavior) {
        case MockBehavior::Echo: return std::make_unique<EchoGenerator>();
        case MockBehavior::TemplateSum: return std::make_unique<TemplateSumGenerator>();
        case MockBehavior::FixedJson: return std::make_unique<FixedJsonGenerator>();
    }
    throw InputError("unknown mock behavior");
}

std::unique_ptr<SimilarityScorer> lexical_scorer() {
    return std::make_unique<LexicalScorer>();
}

std::unique_ptr<Reranker> lexical_reranker() {
    return std::make_unique<LexicalReranker>();
}

std::string CountingGenerator::generate(const std::string& prompt, int max_length) {
    int used = calls_.fetch_add(1) + 1;
    if (max_calls_ && used > *max_calls_)
        throw BackendError(ErrorKind::BackendBudget,
                           "generator call budget of " + std::to_string(*max_calls_) +
                               " exhausted");
    return inner_->generate(prompt, max_length);
}

} // namespace storymem
