#include "storymem/server.hpp"

#include "storymem/errors.hpp"
#include "storymem/store.hpp"
#include "storymem/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <mutex>
#include <thread>

using nlohmann::json;

namespace storymem {

namespace {

int status_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Input:
        case ErrorKind::Parse:
            return 400;
        case ErrorKind::BackendTransport:
        case ErrorKind::BackendAuth:
        case ErrorKind::BackendProtocol:
        case ErrorKind::BackendBudget:
            return 502;
        case ErrorKind::CapacityOverflow:
            return 507;
        default:
            return 500;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json error_body(const Error& e) {
    return {{"error", e.what()}, {"kind", to_string(e.kind())}};
}

} // namespace

struct MemoryServer::Impl {
    explicit Impl(std::unique_ptr<Engine> eng) : engine(std::move(eng)) { wire(); }

    void wire() {
        server.Post("/turns", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&]() -> json {
                json body = json::parse(req.body);
                json turns = body.is_array() ? body : json::array({body});
                json results = json::array();
                std::lock_guard<std::mutex> lock(mutex);
                for (const auto& t : turns) {
                    DialogueTurn turn = store::turn_from_json_line(t.dump());
                    IngestOutcome outcome = engine->ingest_turn(turn);
                    results.push_back({{"round_completed", outcome.round_completed},
                                       {"round_index", outcome.round_index},
                                       {"new_item_ids", outcome.new_item_ids},
                                       {"evicted_ids", outcome.evicted_ids}});
                }
                return {{"results", results}};
            });
        });

        server.Get("/memories", [this](const httplib::Request&, httplib::Response& res) {
            handle(res, [&]() -> json {
                std::lock_guard<std::mutex> lock(mutex);
                json items = json::array();
                for (const auto& [id, item] : engine->pool().items)
                    items.push_back({{"id", item.id},
                                     {"kind", to_string(item.kind)},
                                     {"text", item.text},
                                     {"creation_round", item.creation_round},
                                     {"retrieval_rounds", item.retrieval_rounds},
                                     {"suppression_factor", item.suppression_factor()},
                                     {"eviction_exempt", item.eviction_exempt}});
                return {{"items", items}};
            });
        });

        server.Post("/retrieve", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&]() -> json {
                json body = json::parse(req.body);
                const std::string query = body.at("query").get<std::string>();
                const int k = body.value("k", engine->config().retrieval_k);
                std::lock_guard<std::mutex> lock(mutex);
                json results = json::array();
                for (const auto& m : engine->retrieve(query, k))
                    results.push_back({{"id", m.id},
                                       {"kind", to_string(m.kind)},
                                       {"text", m.text},
                                       {"rerank_score", m.rerank_score},
                                       {"effective_score", m.effective_score}});
                return {{"results", results}};
            });
        });

        server.Get("/persona", [this](const httplib::Request&, httplib::Response& res) {
            handle(res, [&]() -> json {
                std::lock_guard<std::mutex> lock(mutex);
                json entries = json::object();
                for (const auto& [key, values] : engine->sketch().entries) {
                    json list = json::array();
                    for (const auto& sv : values)
                        list.push_back({{"value", sv.value}, {"stamp", sv.stamp}});
                    entries[key] = list;
                }
                return {{"entries", entries},
                        {"last_snapshot_round", engine->sketch().last_snapshot_round}};
            });
        });

        server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
            handle(res, [&]() -> json {
                std::lock_guard<std::mutex> lock(mutex);
                EngineStats s = engine->stats();
                return {{"turns", s.turns},
                        {"rounds", s.rounds},
                        {"pool_items", s.pool_items},
                        {"pool_chars", s.pool_chars},
                        {"capacity_chars",
                         s.capacity_chars ? json(*s.capacity_chars) : json(nullptr)},
                        {"level1_units", s.level1_units},
                        {"level2_units", s.level2_units},
                        {"level3_units", s.level3_units},
                        {"persona_items", s.persona_items},
                        {"evictions", s.evictions}};
            });
        });
    }

    template <typename Fn>
    void handle(httplib::Response& res, Fn&& fn) {
        try {
            send_json(res, 200, fn());
        } catch (const Error& e) {
            send_json(res, status_for(e), error_body(e));
        } catch (const json::exception& e) {
            send_json(res, 400, {{"error", e.what()}, {"kind", "input"}});
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", e.what()}, {"kind", "internal"}});
        }
    }

    std::unique_ptr<Engine> engine;
    std::mutex mutex;
    httplib::Server server;
    std::thread worker;
};

MemoryServer::MemoryServer(std::unique_ptr<Engine> engine)
    : impl_(std::make_unique<Impl>(std::move(engine))) {}

MemoryServer::~MemoryServer() { stop(); }

int MemoryServer::start(const std::string& host) {
    int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) throw InputError("cannot bind server on host " + host);
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

bool MemoryServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

void MemoryServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

Engine& MemoryServer::engine() { return *impl_->engine; }

} // namespace storymem
