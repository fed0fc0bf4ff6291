#include "awareplan/bridge.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <thread>

namespace awareplan::bridge {

namespace {

json versioned(const char* type) { return {{"type", type}, {"version", kProtocolVersion}}; }

ScenarioConfig external(ScenarioConfig c) {
    c.human_control = HumanControl::External;
    return c;
}

}  // namespace

BridgeSession::BridgeSession(ScenarioConfig config, SessionOptions options)
    : sim_(external(std::move(config))), options_(options), paused_(options.start_paused) {}

json BridgeSession::error(const std::string& message) {
    json e = versioned("error");
    e["message"] = message;
    return e;
}

json BridgeSession::hello(bool controller) const {
    json h = versioned("hello");
    h["role"] = controller ? "controller" : "observer";
    return h;
}

json BridgeSession::sync() const {
    json s = versioned("sync");
    s["config"] = io::scenario_to_json(sim_.config());
    s["tick"] = sim_.tick_index();
    s["paused"] = paused_;
    s["done"] = sim_.done();
    s["robot"] = io::vec_to_json(sim_.robot_state().position);
    s["human"] = io::vec_to_json(sim_.human_state().position);
    s["belief"] = sim_.belief().p_concerned;
    s["last_snapshot"] = last_snapshot_ ? *last_snapshot_ : json(nullptr);
    return s;
}

json BridgeSession::heartbeat() const {
    json h = versioned("heartbeat");
    h["tick"] = sim_.tick_index();
    h["paused"] = paused_;
    return h;
}

json BridgeSession::snapshot(const StepRecord& rec, const Vec2& command) const {
    const Grid& g = sim_.config().grid;
    json heat = json::array();
    for (std::size_t k = 0; k < rec.prediction.steps.size(); ++k) {
        const PredictionStep& st = rec.prediction.steps[k];
        json cells = json::array();
        for (const auto& [id, m] : st.distribution.cells()) {
            if (m < options_.heatmap_threshold) continue;
            const CellIndex c = g.unlinear(id);
            cells.push_back({c.ix, c.iy, m});
        }
        json forb = json::array();
        for (int id : st.forbidden) {
            const CellIndex c = g.unlinear(id);
            forb.push_back({c.ix, c.iy});
        }
        heat.push_back({{"step", k + 1},
                        {"p_coll", st.collision_probability},
                        {"cells", std::move(cells)},
                        {"forbidden", std::move(forb)}});
    }
    json plan = json::array();
    for (const auto& x : rec.plan.predicted_states) plan.push_back(io::vec_to_json(x.position));

    json s = versioned("snapshot");
    s["tick"] = sim_.tick_index();
    s["robot"] = io::vec_to_json(sim_.robot_state().position);
    s["human"] = io::vec_to_json(sim_.human_state().position);
    s["robot_action"] = io::vec_to_json(rec.robot_action.velocity);
    s["human_action"] = io::vec_to_json(rec.human_action.velocity);
    s["command"] = io::vec_to_json(command);
    s["plan"] = std::move(plan);
    s["belief"] = rec.belief;
    s["heatmap"] = std::move(heat);
    s["flags"] = {{"plan_feasible", rec.plan.feasible},
                  {"done", sim_.done()},
                  {"reached_goals", sim_.reached_goals()},
                  {"paused", paused_}};
    return s;
}

json BridgeSession::advance() {
    const Vec2 command = mailbox_.value_or(Vec2::Zero());
    mailbox_.reset();
    const StepRecord& rec = sim_.tick(command);
    last_snapshot_ = snapshot(rec, rec.human_action.velocity);
    return *last_snapshot_;
}

std::optional<json> BridgeSession::tick() {
    if (paused_ || sim_.done()) return std::nullopt;
    return advance();
}

BridgeSession::Outcome BridgeSession::handle_message(const std::string& text, bool controller) {
    Outcome out;
    json m;
    try {
        m = json::parse(text);
    } catch (const json::parse_error&) {
        out.reply = error("malformed JSON");
        return out;
    }
    if (!m.is_object() || !m.contains("type") || !m["type"].is_string()) {
        out.reply = error("message needs a string 'type'");
        return out;
    }
    if (m.contains("version") && m["version"] != kProtocolVersion) {
        out.reply = error("unsupported protocol version");
        return out;
    }
    const std::string type = m["type"];
    if (type == "ping") {
        out.reply = heartbeat();
        return out;
    }
    if (type != "command" && type != "control") {
        out.reply = error("unknown message type '" + type + "'");
        return out;
    }
    if (!controller) {
        out.reply = error("observer connections are read-only");
        return out;
    }

    if (type == "command") {
        const auto it = m.find("velocity");
        if (it == m.end() || !it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
            !(*it)[1].is_number()) {
            out.reply = error("command.velocity must be [vx, vy]");
            return out;
        }
        const Vec2 v((*it)[0].get<double>(), (*it)[1].get<double>());
        if (!is_finite(v)) {
            out.reply = error("command.velocity must be finite");
            return out;
        }
        mailbox_ = v;  // latest wins
        return out;
    }

    const std::string action = m.value("action", "");
    if (action == "pause" || action == "resume") {
        paused_ = action == "pause";
        out.broadcast.push_back(sync());
    } else if (action == "reset") {
        std::optional<std::uint64_t> seed;
        if (m.contains("seed")) {
            if (!m["seed"].is_number_unsigned()) {
                out.reply = error("control.seed must be a non-negative integer");
                return out;
            }
            seed = m["seed"].get<std::uint64_t>();
        }
        sim_.reset(seed);
        mailbox_.reset();
        last_snapshot_.reset();
        out.broadcast.push_back(sync());
    } else if (action == "step") {
        if (sim_.done()) {
            out.reply = error("episode finished; send a reset");
        } else {
            out.broadcast.push_back(advance());
        }
    } else {
        out.reply = error("unknown control action '" + action + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

class Connection;

struct Server::Impl {
    Impl(ScenarioConfig config, ServerOptions opts)
        : options(opts),
          session(std::move(config), opts.session),
          acceptor(ioc),
          tick_timer(ioc),
          heartbeat_timer(ioc),
          signals(ioc) {}

    void open();
    void do_accept();
    void schedule_tick();
    void schedule_heartbeat();
    void on_open(const std::shared_ptr<Connection>& c);
    void on_close(const std::shared_ptr<Connection>& c);
    void on_message(const std::shared_ptr<Connection>& c, const std::string& text);
    void broadcast(const json& j, bool droppable);
    bool is_controller(const Connection* c) const { return !clients.empty() && clients.front().get() == c; }

    ServerOptions options;
    BridgeSession session;
    net::io_context ioc{1};
    tcp::acceptor acceptor;
    net::steady_timer tick_timer;
    net::steady_timer heartbeat_timer;
    net::signal_set signals;
    std::vector<std::shared_ptr<Connection>> clients;  // connection order; front controls
    std::thread worker;
    unsigned short bound_port = 0;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
    }

    void send(std::shared_ptr<const std::string> frame, bool droppable) {
        if (closed_) return;
        if (droppable && queue_.size() >= server_.options.max_backlog) {
            ++dropped_;
            return;
        }
        queue_.push_back(std::move(frame));
        if (!writing_) do_write();
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        server_.on_open(shared_from_this());
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            closed_ = true;
            server_.on_close(shared_from_this());
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        server_.on_message(shared_from_this(), text);
        do_read();
    }

    void do_write() {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*queue_.front()),
                        beast::bind_front_handler(&Connection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        queue_.pop_front();
        if (ec) {
            writing_ = false;
            close();
            return;
        }
        if (queue_.empty()) {
            writing_ = false;
        } else {
            do_write();
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    Server::Impl& server_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    bool writing_ = false;
    bool closed_ = false;
    std::size_t dropped_ = 0;
};

void Server::Impl::open() {
    beast::error_code ec;
    const auto address = net::ip::make_address(options.host, ec);
    if (ec) throw Error("bridge: bad host '" + options.host + "': " + ec.message());
    const tcp::endpoint ep(address, options.port);
    const std::string where = options.host + ":" + std::to_string(options.port);
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw Error("bridge: cannot listen on " + where + ": " + ec.message());
    bound_port = acceptor.local_endpoint().port();
}

void Server::Impl::do_accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<Connection>(std::move(socket), *this)->start();
        do_accept();
    });
}

void Server::Impl::schedule_tick() {
    const double period = options.tick_period_s > 0.0 ? options.tick_period_s : session.simulation().config().dt;
    tick_timer.expires_after(std::chrono::duration_cast<net::steady_timer::duration>(
        std::chrono::duration<double>(period)));
    tick_timer.async_wait([this](beast::error_code ec) {
        if (ec) return;
        // The engine only runs while somebody is watching.
        if (!clients.empty()) {
            try {
                if (auto snap = session.tick()) broadcast(*snap, true);
            } catch (const std::exception& e) {
                broadcast(BridgeSession::error(std::string("engine: ") + e.what()), false);
            }
        }
        schedule_tick();
    });
}

void Server::Impl::schedule_heartbeat() {
    heartbeat_timer.expires_after(std::chrono::duration_cast<net::steady_timer::duration>(
        std::chrono::duration<double>(options.heartbeat_s)));
    heartbeat_timer.async_wait([this](beast::error_code ec) {
        if (ec) return;
        broadcast(session.heartbeat(), true);
        schedule_heartbeat();
    });
}

void Server::Impl::on_open(const std::shared_ptr<Connection>& c) {
    clients.push_back(c);
    c->send(std::make_shared<const std::string>(session.hello(is_controller(c.get())).dump()), false);
    c->send(std::make_shared<const std::string>(session.sync().dump()), false);
}

void Server::Impl::on_close(const std::shared_ptr<Connection>& c) {
    const bool was_controller = is_controller(c.get());
    std::erase(clients, c);
    if (was_controller && !clients.empty()) {
        // Oldest observer takes over.
        clients.front()->send(std::make_shared<const std::string>(session.hello(true).dump()), false);
    }
}

void Server::Impl::on_message(const std::shared_ptr<Connection>& c, const std::string& text) {
    BridgeSession::Outcome out;
    try {
        out = session.handle_message(text, is_controller(c.get()));
    } catch (const std::exception& e) {
        out.reply = BridgeSession::error(e.what());
    }
    if (out.reply) c->send(std::make_shared<const std::string>(out.reply->dump()), false);
    for (const auto& b : out.broadcast) broadcast(b, b["type"] == "snapshot");
}

void Server::Impl::broadcast(const json& j, bool droppable) {
    auto frame = std::make_shared<const std::string>(j.dump());
    for (const auto& c : clients) c->send(frame, droppable);
}

Server::Server(ScenarioConfig config, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), options)) {
    impl_->open();
}

Server::~Server() {
    stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

unsigned short Server::port() const { return impl_->bound_port; }

void Server::run() {
    Impl& s = *impl_;
    if (s.options.handle_signals) {
        s.signals.add(SIGINT);
        s.signals.add(SIGTERM);
        s.signals.async_wait([this](beast::error_code, int) { stop(); });
    }
    s.do_accept();
    s.schedule_tick();
    s.schedule_heartbeat();
    s.ioc.run();
}

void Server::start() {
    impl_->worker = std::thread([this] { run(); });
}

void Server::stop() {
    Impl& s = *impl_;
    net::post(s.ioc, [&s] {
        beast::error_code ec;
        s.acceptor.close(ec);
        s.tick_timer.cancel();
        s.heartbeat_timer.cancel();
        s.signals.cancel(ec);
        for (const auto& c : s.clients) c->close();
        s.clients.clear();
        s.ioc.stop();
    });
}

}  // namespace awareplan::bridge
