#pragma once
#include "storymem/engine.hpp"

#include <memory>
#include <string>

namespace storymem {

// Local HTTP service over one engine session. Endpoints:
//   POST /turns     ingest one turn or an array of turns
//   GET  /memories  pool contents
//   POST /retrieve  {query, k?} -> ranked memories
//   GET  /persona   current sketch
//   GET  /stats     round/pool counters
// Writes serialize through the engine's single-writer lock; handlers return
// 400 for input errors, 502 for backend failures, 507 for capacity overflow.
class MemoryServer {
public:
    MemoryServer(std::unique_ptr<Engine> engine);
    ~MemoryServer();

    // Binds and serves until stop(); returns the bound port immediately via
    // start() for tests, or blocks with listen().
    int start(const std::string& host);           // ephemeral port, non-blocking
    bool listen(const std::string& host, int port); // blocking
    void stop();

    Engine& engine();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace storymem
