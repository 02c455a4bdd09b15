#include "storymem/remote_client.hpp"

#include "storymem/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

using nlohmann::json;

namespace storymem {

namespace {

constexpr const char* kCompletionsPath = "/v1/chat/completions";

class RemoteGenerator : public TextGenerator {
public:
    explicit RemoteGenerator(RemoteEndpointConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty())
            throw InputError("remote backend requires base_url");
        if (!config_.api_key_env_var.empty()) {
            if (const char* key = std::getenv(config_.api_key_env_var.c_str()))
                api_key_ = key;
        }
    }

    std::string generate(const std::string& prompt, int max_length) override {
        json body = {{"model", config_.model_name},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"max_tokens", max_length}};
        const std::string payload = body.dump();

        std::string last_failure;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) backoff(attempt);

            httplib::Client client(config_.base_url);
            client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
            client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
            httplib::Headers headers;
            if (!api_key_.empty())
                headers.emplace("Authorization", "Bearer " + api_key_);

            auto res = client.Post(kCompletionsPath, headers, payload, "application/json");
            if (!res) {
                last_failure = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403)
                throw BackendError(ErrorKind::BackendAuth,
                                   "endpoint rejected credentials (HTTP " +
                                       std::to_string(res->status) + ")");
            if (res->status >= 500) {
                last_failure = "server error HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw BackendError(ErrorKind::BackendProtocol,
                                   "unexpected HTTP " + std::to_string(res->status));
            return extract_text(res->body);
        }
        throw BackendError(ErrorKind::BackendTransport,
                           last_failure + " after " +
                               std::to_string(config_.max_retries + 1) + " attempts");
    }

    std::string identity() const override {
        return "remote:" + config_.model_name + "@" + config_.base_url;
    }

private:
    static std::string extract_text(const std::string& body) {
        json parsed;
        try {
            parsed = json::parse(body);
        } catch (const json::exception& e) {
            throw BackendError(ErrorKind::BackendProtocol,
                               std::string("malformed response body: ") + e.what());
        }
        if (parsed.contains("choices") && parsed["choices"].is_array() &&
            !parsed["choices"].empty()) {
            const auto& first = parsed["choices"][0];
            if (first.contains("message") && first["message"].contains("content"))
                return first["message"]["content"].get<std::string>();
            if (first.contains("text")) return first["text"].get<std::string>();
        }
        if (parsed.contains("content") && parsed["content"].is_string())
            return parsed["content"].get<std::string>();
        throw BackendError(ErrorKind::BackendProtocol,
                           "response carries no completion text");
    }

    void backoff(int attempt) {
        std::uniform_int_distribution<int> jitter(0, 50);
        int ms = 100 * (1 << (attempt - 1)) + jitter(rng_);
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    RemoteEndpointConfig config_;
    std::string api_key_;
    std::mt19937 rng_{std::random_device{}()};
};

} // namespace

std::unique_ptr<TextGenerator> remote_generator(const RemoteEndpointConfig& config) {
    return std::make_unique<RemoteGenerator>(config);
}

} // namespace storymem
