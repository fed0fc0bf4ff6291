#include "awareplan/bridge.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <doctest.h>

#include <string>
#include <vector>

using namespace awareplan;
using bridge::BridgeSession;
using bridge::json;

namespace {

ScenarioConfig sec4() { return *io::builtin_scenario("paper-sec4"); }

std::string cmd(double x, double y) { return json{{"type", "command"}, {"velocity", {x, y}}}.dump(); }
std::string control(const std::string& action) { return json{{"type", "control"}, {"action", action}}.dump(); }

std::vector<std::string> replay(BridgeSession& s, std::uint64_t seed, const std::vector<Vec2>& commands) {
    std::vector<std::string> frames;
    auto out = s.handle_message(json{{"type", "control"}, {"action", "reset"}, {"seed", seed}}.dump(), true);
    for (const auto& b : out.broadcast) frames.push_back(b.dump());
    for (const auto& c : commands) {
        s.handle_message(cmd(c.x(), c.y()), true);
        if (auto snap = s.tick()) frames.push_back(snap->dump());
    }
    return frames;
}

}  // namespace

TEST_CASE("session forces external control and holds position without commands") {
    BridgeSession s(sec4());
    CHECK(s.simulation().config().human_control == HumanControl::External);
    const auto snap = s.tick();
    REQUIRE(snap);
    CHECK((*snap)["type"] == "snapshot");
    CHECK((*snap)["version"] == bridge::kProtocolVersion);
    CHECK((*snap)["human_action"] == json::array({0.0, 0.0}));
    CHECK((*snap)["human"] == json::array({-5.0, 0.0}));
    CHECK((*snap)["tick"] == 1);
    CHECK((*snap)["heatmap"].size() == 5);
    CHECK((*snap)["plan"].size() == 6);
}

TEST_CASE("commands are projected and consumed once, latest wins") {
    BridgeSession s(sec4());
    s.handle_message(cmd(-0.4, 0.6), true);
    s.handle_message(cmd(0.9, 0.1), true);
    CHECK(*s.pending_command() == Vec2(0.9, 0.1));
    const auto a = s.tick();
    CHECK((*a)["human_action"] == json::array({1.0, 0.0}));
    CHECK((*a)["human"] == json::array({-4.5, 0.0}));
    CHECK(!s.pending_command());
    const auto b = s.tick();
    CHECK((*b)["human_action"] == json::array({0.0, 0.0}));
}

TEST_CASE("malformed and unauthorized messages are rejected without side effects") {
    BridgeSession s(sec4());
    for (const std::string bad : {std::string("{oops"), std::string("[]"), json{{"type", 3}}.dump(),
                                  json{{"type", "dance"}}.dump(), json{{"type", "command"}}.dump(),
                                  json{{"type", "command"}, {"velocity", {1, "x"}}}.dump(),
                                  json{{"type", "command"}, {"velocity", {1, 2}}, {"version", 99}}.dump(),
                                  json{{"type", "control"}, {"action", "explode"}}.dump(),
                                  json{{"type", "control"}, {"action", "reset"}, {"seed", -4}}.dump()}) {
        CAPTURE(bad);
        const auto out = s.handle_message(bad, true);
        REQUIRE(out.reply);
        CHECK((*out.reply)["type"] == "error");
        CHECK(out.broadcast.empty());
    }
    CHECK(!s.pending_command());
    const auto obs = s.handle_message(cmd(1, 0), false);
    CHECK((*obs.reply)["message"] == "observer connections are read-only");
    CHECK(!s.pending_command());
    CHECK((*s.handle_message(json{{"type", "ping"}}.dump(), false).reply)["type"] == "heartbeat");
    CHECK(s.tick_index() == 0);
    CHECK(s.tick());
}

TEST_CASE("pause, step and resume") {
    BridgeSession s(sec4());
    auto out = s.handle_message(control("pause"), true);
    REQUIRE(out.broadcast.size() == 1);
    CHECK(out.broadcast[0]["type"] == "sync");
    CHECK(out.broadcast[0]["paused"] == true);
    CHECK(!s.tick());
    out = s.handle_message(control("step"), true);
    REQUIRE(out.broadcast.size() == 1);
    CHECK(out.broadcast[0]["tick"] == 1);
    CHECK(out.broadcast[0]["flags"]["paused"] == true);
    s.handle_message(control("resume"), true);
    const auto snap = s.tick();
    REQUIRE(snap);
    CHECK((*snap)["tick"] == 2);
}

TEST_CASE("reset with a seed and a replayed command log reproduces the stream") {
    ScenarioConfig c = *io::builtin_scenario("paper-sec5-noisy");
    BridgeSession s(c);
    const std::vector<Vec2> log = {{0, 0}, {-0.07, 0}, {-0.035, 0.035}, {-0.07, -0.01}, {0, 0}, {-0.07, 0}};
    const auto first = replay(s, 7, log);
    s.handle_message(cmd(0.07, 0.07), true);  // stray command is discarded by the reset
    const auto second = replay(s, 7, log);
    CHECK(first.size() == log.size() + 1);
    CHECK(first == second);
    // Ticks increase by one per snapshot.
    for (std::size_t i = 1; i < first.size(); ++i) CHECK(json::parse(first[i])["tick"] == static_cast<int>(i));
}

TEST_CASE("episode end is reported") {
    ScenarioConfig c = sec4();
    c.max_steps = 2;
    BridgeSession s(c);
    CHECK(s.tick());
    const auto last = s.tick();
    CHECK((*last)["flags"]["done"] == true);
    CHECK(!s.tick());
    CHECK((*s.handle_message(control("step"), true).reply)["type"] == "error");
    s.handle_message(control("reset"), true);
    CHECK(!s.done());
}

namespace {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Client {
    net::io_context ioc;
    websocket::stream<tcp::socket> ws{ioc};

    explicit Client(unsigned short port) {
        tcp::resolver resolver(ioc);
        net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws.handshake("127.0.0.1", "/");
    }

    json read() {
        beast::flat_buffer buf;
        ws.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    }

    // Skips frames of other types (heartbeats, syncs from other clients' controls).
    json read_type(const std::string& type) {
        for (int i = 0; i < 50; ++i) {
            json j = read();
            if (j["type"] == type) return j;
        }
        throw std::runtime_error("no frame of type " + type);
    }

    void send(const std::string& s) { ws.write(net::buffer(s)); }
};

}  // namespace

TEST_CASE("websocket round trip") {
    bridge::ServerOptions opt;
    opt.port = 0;
    opt.tick_period_s = 3600.0;  // only explicit steps advance the engine
    bridge::Server server(sec4(), opt);
    server.start();

    Client a(server.port());
    CHECK(a.read()["role"] == "controller");
    const json sync = a.read();
    CHECK(sync["type"] == "sync");
    CHECK(sync["tick"] == 0);
    CHECK(sync["config"]["name"] == "paper-sec4");

    Client b(server.port());
    CHECK(b.read()["role"] == "observer");
    CHECK(b.read()["type"] == "sync");

    a.send(cmd(0.9, 0.1));
    a.send(control("step"));
    const json snap = a.read_type("snapshot");
    CHECK(snap["human_action"] == json::array({1.0, 0.0}));
    CHECK(snap["human"] == json::array({-4.5, 0.0}));
    CHECK(b.read_type("snapshot") == snap);

    b.send(cmd(1, 0));
    CHECK(b.read_type("error")["message"] == "observer connections are read-only");
    a.send("not json");
    CHECK(a.read_type("error")["message"] == "malformed JSON");

    // Endpoint already taken.
    bridge::ServerOptions clash = opt;
    clash.port = server.port();
    CHECK_THROWS_AS(bridge::Server(sec4(), clash), Error);
    server.stop();
}
