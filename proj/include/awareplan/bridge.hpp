#pragma once

#include "awareplan/cli_io.hpp"
#include "awareplan/sim.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace awareplan::bridge {

using json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;

struct SessionOptions {
    double heatmap_threshold = 1e-4;  // cells below this mass are left out of snapshots
    bool start_paused = false;
};

/// Protocol state machine for one interactive simulation, without any
/// networking. Not thread-safe: the server drives it from a single thread.
class BridgeSession {
public:
    explicit BridgeSession(ScenarioConfig config, SessionOptions options = {});

    struct Outcome {
        std::optional<json> reply;     // to the sender only
        std::vector<json> broadcast;   // to every client
    };

    /// One client text frame. Malformed frames produce an error reply and
    /// leave the session untouched; observers may not send commands or controls.
    Outcome handle_message(const std::string& text, bool controller);

    /// Periodic tick: consumes the latest command (none means stand still).
    /// Returns nothing while paused or after the episode ends.
    std::optional<json> tick();

    json hello(bool controller) const;
    json sync() const;
    json heartbeat() const;
    static json error(const std::string& message);

    bool paused() const { return paused_; }
    bool done() const { return sim_.done(); }
    int tick_index() const { return sim_.tick_index(); }
    const Simulation& simulation() const { return sim_; }
    const std::optional<Vec2>& pending_command() const { return mailbox_; }

private:
    json snapshot(const StepRecord& rec, const Vec2& command) const;
    json advance();

    Simulation sim_;
    SessionOptions options_;
    bool paused_ = false;
    std::optional<Vec2> mailbox_;
    std::optional<json> last_snapshot_;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 8765;  // 0 picks a free port
    double tick_period_s = -1.0;  // negative: the scenario's dt
    double heartbeat_s = 5.0;
    std::size_t max_backlog = 64;  // per-client queued frames before snapshots are dropped
    bool handle_signals = false;   // stop on SIGINT / SIGTERM
    SessionOptions session;
};

/// WebSocket front end. The first connected client controls the session,
/// later ones observe. Throws Error when the endpoint cannot be opened.
class Server {
public:
    Server(ScenarioConfig config, ServerOptions options = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;
    void run();    // blocks until stop()
    void start();  // runs on a background thread
    void stop();

private:
    friend class Connection;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace awareplan::bridge
