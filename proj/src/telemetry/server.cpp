#include "pilotstack/telemetry/server.hpp"

#include <atomic>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "pilotstack/errors.hpp"
#include "pilotstack/telemetry/messages.hpp"

namespace pilotstack::telemetry {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxPendingReplies = 64;

constexpr const char* kFallbackPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>pilotstack</title></head>
<body><h1>pilotstack</h1>
<p>UI assets are not installed. Telemetry is available on <code>/ws</code> and health on <code>/healthz</code>.</p>
</body></html>
)";

std::string mime_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".png") return "image/png";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".ico") return "image/x-icon";
    return "application/octet-stream";
}

std::pair<std::string, std::string> split_target(beast::string_view beast_target) {
    const std::string_view target(beast_target.data(), beast_target.size());
    const auto q = target.find('?');
    if (q == std::string_view::npos) return {std::string(target), ""};
    return {std::string(target.substr(0, q)), std::string(target.substr(q + 1))};
}

std::optional<std::string> query_param(std::string_view query, std::string_view key) {
    std::size_t pos = 0;
    while (pos < query.size()) {
        std::size_t end = query.find('&', pos);
        if (end == std::string_view::npos) end = query.size();
        const std::string_view pair = query.substr(pos, end - pos);
        const std::size_t eq = pair.find('=');
        if (eq != std::string_view::npos && pair.substr(0, eq) == key) return std::string(pair.substr(eq + 1));
        pos = end + 1;
    }
    return std::nullopt;
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_bind(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw ConfigError("bind address must look like host:port, got '" + std::string(text) + "'");
    }
    const std::string host(text.substr(0, colon));
    const std::string port_text(text.substr(colon + 1));
    char* end = nullptr;
    const long port = std::strtol(port_text.c_str(), &end, 10);
    if (port_text.empty() || *end != '\0' || port < 0 || port > 65535) {
        throw ConfigError("invalid port in bind address '" + std::string(text) + "'");
    }
    return {host, static_cast<std::uint16_t>(port)};
}

std::filesystem::path default_web_dir() {
#ifdef PILOTSTACK_WEB_DIR
    return PILOTSTACK_WEB_DIR;
#else
    return "web";
#endif
}

ServerConfig server_config_from_env() {
    ServerConfig cfg;
    cfg.web_dir = default_web_dir();
    if (const char* bind = std::getenv("PILOTSTACK_BIND"); bind != nullptr && *bind != '\0') {
        std::tie(cfg.host, cfg.port) = parse_bind(bind);
    }
    if (const char* token = std::getenv("PILOTSTACK_TOKEN"); token != nullptr && *token != '\0') cfg.token = token;
    return cfg;
}

struct TelemetryServer::Impl {
    ServerConfig cfg;
    TelemetryHub& hub;
    ControlHandler control;
    StatusProvider status;

    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread thread;
    std::uint16_t bound_port = 0;
    bool running = false;

    std::mutex subs_mu;
    std::vector<std::weak_ptr<Subscription>> subs;

    Impl(ServerConfig c, TelemetryHub& h, ControlHandler ctl, StatusProvider st)
        : cfg(std::move(c)), hub(h), control(std::move(ctl)), status(std::move(st)) {}

    void track(const std::shared_ptr<Subscription>& sub) {
        std::lock_guard lock(subs_mu);
        std::erase_if(subs, [](const auto& w) { return w.expired(); });
        subs.push_back(sub);
    }

    bool authorized(const http::request<http::string_body>& req) const {
        if (!cfg.token) return true;
        const auto [path, query] = split_target(req.target());
        if (auto t = query_param(query, "token"); t && *t == *cfg.token) return true;
        const auto auth = req[http::field::authorization];
        return std::string_view(auth.data(), auth.size()) == "Bearer " + *cfg.token;
    }

    void do_accept();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, TelemetryServer::Impl& srv) : ws_(std::move(socket)), srv_(srv) {}

    ~WsSession() {
        if (sub_) {
            sub_->set_notify(nullptr);
            sub_->close();
            srv_.hub.unsubscribe(sub_);
        }
    }

    void run(http::request<http::string_body> req) {
        beast::get_lowest_layer(ws_).expires_never();
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        sub_ = srv_.hub.subscribe();
        srv_.track(sub_);
        std::weak_ptr<WsSession> weak = shared_from_this();
        auto pending = wake_pending_;
        auto ex = ws_.get_executor();
        sub_->set_notify([weak, pending, ex] {
            if (pending->exchange(true)) return;
            net::post(ex, [weak] {
                if (auto self = weak.lock()) self->on_wake();
            });
        });
        do_read();
        maybe_write();
    }

    void on_wake() {
        wake_pending_->store(false);
        if (sub_->closed()) {
            close_socket();  // sustained overflow: the client is not keeping up
            return;
        }
        maybe_write();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            close_socket();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        nlohmann::json reply;
        try {
            reply = srv_.control(text);
        } catch (const std::exception& e) {
            reply = error_reply(e.what());
        }
        if (replies_.size() >= kMaxPendingReplies) {
            close_socket();
            return;
        }
        replies_.push_back(std::make_shared<const std::string>(reply.dump()));
        maybe_write();
        do_read();
    }

    void maybe_write() {
        if (writing_ || closing_) return;
        if (!replies_.empty()) {
            current_ = std::move(replies_.front());
            replies_.pop_front();
        } else if (auto m = sub_ ? sub_->try_pop() : std::nullopt) {
            current_ = std::move(*m);
        } else {
            return;
        }
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*current_), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        writing_ = false;
        current_.reset();
        if (ec) {
            close_socket();
            return;
        }
        maybe_write();
    }

    void close_socket() {
        if (closing_) return;
        closing_ = true;
        beast::error_code ec;
        auto& sock = beast::get_lowest_layer(ws_).socket();
        sock.shutdown(tcp::socket::shutdown_both, ec);
        sock.close(ec);
    }

    websocket::stream<beast::tcp_stream> ws_;
    TelemetryServer::Impl& srv_;
    beast::flat_buffer buffer_;
    std::shared_ptr<Subscription> sub_;
    std::shared_ptr<std::atomic<bool>> wake_pending_ = std::make_shared<std::atomic<bool>>(false);
    std::deque<Message> replies_;
    Message current_;
    bool writing_ = false;
    bool closing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, TelemetryServer::Impl& srv) : stream_(std::move(socket)), srv_(srv) {}

    void run() { do_read(); }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (ec) return;

        const auto [path, query] = split_target(req_.target());
        if (websocket::is_upgrade(req_)) {
            if (path != "/ws") return send(text_response(http::status::not_found, "unknown endpoint\n"));
            if (!srv_.authorized(req_)) return send(text_response(http::status::unauthorized, "missing or wrong token\n"));
            std::make_shared<WsSession>(stream_.release_socket(), srv_)->run(std::move(req_));
            return;
        }
        send(handle(path));
    }

    http::response<http::string_body> text_response(http::status status, std::string body,
                                                    std::string type = "text/plain; charset=utf-8") {
        http::response<http::string_body> res{status, req_.version()};
        res.set(http::field::content_type, type);
        res.set(http::field::cache_control, "no-store");
        res.keep_alive(req_.keep_alive());
        res.body() = std::move(body);
        res.prepare_payload();
        return res;
    }

    http::response<http::string_body> handle(const std::string& path) {
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            return text_response(http::status::method_not_allowed, "GET only\n");
        }
        if (path == "/healthz") return text_response(http::status::ok, srv_.status().dump() + "\n", "application/json");
        if (path == "/ws") return text_response(http::status::upgrade_required, "WebSocket endpoint\n");

        const std::string rel = path == "/" ? "index.html" : path.substr(1);
        if (rel.find("..") != std::string::npos || rel.find('\\') != std::string::npos) {
            return text_response(http::status::bad_request, "bad path\n");
        }
        const auto file = srv_.cfg.web_dir / rel;
        std::error_code fec;
        if (!srv_.cfg.web_dir.empty() && std::filesystem::is_regular_file(file, fec)) {
            std::ifstream in(file, std::ios::binary);
            std::ostringstream body;
            body << in.rdbuf();
            return text_response(http::status::ok, body.str(), mime_type(file));
        }
        if (path == "/") return text_response(http::status::ok, kFallbackPage, "text/html; charset=utf-8");
        return text_response(http::status::not_found, "not found\n");
    }

    void send(http::response<http::string_body> res) {
        const bool head = req_.method() == http::verb::head;
        res_ = std::make_shared<http::response<http::string_body>>(std::move(res));
        if (head) {
            const auto len = res_->body().size();
            res_->body().clear();
            res_->content_length(len);
        }
        http::async_write(stream_, *res_,
                          [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
    }

    void on_write(beast::error_code ec) {
        if (ec) return;
        if (!res_->keep_alive()) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        res_.reset();
        do_read();
    }

    beast::tcp_stream stream_;
    TelemetryServer::Impl& srv_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::shared_ptr<http::response<http::string_body>> res_;
};

}  // namespace

void TelemetryServer::Impl::do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec == net::error::operation_aborted) return;
        } else {
            beast::error_code opt_ec;
            socket.set_option(net::socket_base::send_buffer_size(cfg.socket_send_buffer), opt_ec);
            socket.set_option(tcp::no_delay(true), opt_ec);
            std::make_shared<HttpSession>(std::move(socket), *this)->run();
        }
        do_accept();
    });
}

TelemetryServer::TelemetryServer(ServerConfig cfg, TelemetryHub& hub, ControlHandler control, StatusProvider status)
    : impl_(std::make_unique<Impl>(std::move(cfg), hub, std::move(control), std::move(status))) {}

TelemetryServer::~TelemetryServer() { stop(); }

void TelemetryServer::start() {
    if (impl_->running) return;
    beast::error_code ec;
    const auto address = net::ip::make_address(impl_->cfg.host, ec);
    if (ec) throw std::runtime_error("invalid bind host '" + impl_->cfg.host + "'");
    const tcp::endpoint endpoint{address, impl_->cfg.port};
    auto& acc = impl_->acceptor;
    const auto fail = [&](const char* what) {
        throw std::runtime_error(std::string("cannot ") + what + " " + impl_->cfg.host + ":" +
                                 std::to_string(impl_->cfg.port) + ": " + ec.message());
    };
    acc.open(endpoint.protocol(), ec);
    if (ec) fail("open");
    acc.set_option(net::socket_base::reuse_address(true), ec);
    acc.bind(endpoint, ec);
    if (ec) fail("bind");
    acc.listen(net::socket_base::max_listen_connections, ec);
    if (ec) fail("listen on");
    impl_->bound_port = acc.local_endpoint().port();
    impl_->do_accept();
    impl_->running = true;
    impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void TelemetryServer::stop() {
    if (!impl_ || !impl_->running) return;
    net::post(impl_->ioc, [this] {
        beast::error_code ec;
        impl_->acceptor.close(ec);
    });
    impl_->ioc.stop();
    impl_->thread.join();
    impl_->running = false;
    std::lock_guard lock(impl_->subs_mu);
    for (auto& weak : impl_->subs) {
        if (auto sub = weak.lock()) {
            sub->set_notify(nullptr);
            sub->close();
            impl_->hub.unsubscribe(sub);
        }
    }
    impl_->subs.clear();
}

std::uint16_t TelemetryServer::port() const { return impl_->bound_port; }

std::string TelemetryServer::url() const {
    return "http://" + impl_->cfg.host + ":" + std::to_string(impl_->bound_port);
}

}  // namespace pilotstack::telemetry
