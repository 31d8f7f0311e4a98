#include "normgame/server/ws_server.hpp"

#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <iostream>

namespace normgame::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

class WsServer::Session : public std::enable_shared_from_this<Session> {
 public:
  Session(WsServer& server, SessionId id, tcp::socket socket)
      : server_(server), id_(id), ws_(std::move(socket)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(1 << 20);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->accepted_ = true;
      self->read();
    });
  }

  void send(std::string text) {
    if (closed_ || !accepted_) return;
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void shutdown() {
    if (closed_) return;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      if (!self->ws_.got_text()) {
        self->buffer_.consume(self->buffer_.size());
        self->send(encode(error_message("", "", "bad_request", "only text frames are accepted")));
      } else {
        std::string text = beast::buffers_to_string(self->buffer_.data());
        self->buffer_.consume(self->buffer_.size());
        self->server_.on_message(self->id_, text);
      }
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    queue_.clear();
    server_.on_closed(id_);
  }

  WsServer& server_;
  SessionId id_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool accepted_ = false;
  bool closed_ = false;
};

WsServer::WsServer(asio::io_context& io, const tcp::endpoint& endpoint, RoomManager& rooms,
                   std::chrono::milliseconds tick)
    : io_(io), acceptor_(io), timer_(io), tick_(tick), rooms_(rooms) {
  acceptor_.open(endpoint.protocol());
  acceptor_.set_option(asio::socket_base::reuse_address(true));
  acceptor_.bind(endpoint);
  acceptor_.listen();
}

WsServer::~WsServer() = default;

unsigned short WsServer::port() const { return acceptor_.local_endpoint().port(); }

void WsServer::start() {
  accept();
  schedule_tick();
}

void WsServer::stop() {
  stopped_ = true;
  beast::error_code ec;
  acceptor_.close(ec);
  timer_.cancel();
  for (auto& [id, weak] : sessions_)
    if (auto s = weak.lock()) s->shutdown();
}

void WsServer::accept() {
  acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (stopped_) return;
    if (!ec) {
      const SessionId id = next_id_++;
      auto session = std::make_shared<Session>(*this, id, std::move(socket));
      sessions_[id] = session;
      session->start();
    }
    accept();
  });
}

void WsServer::schedule_tick() {
  timer_.expires_after(tick_);
  timer_.async_wait([this](beast::error_code ec) {
    if (ec || stopped_) return;
    deliver(rooms_.tick(Clock::now()));
    schedule_tick();
  });
}

void WsServer::deliver(const Outbox& out) {
  for (const auto& o : out) {
    auto it = sessions_.find(o.session);
    if (it == sessions_.end()) continue;
    if (auto s = it->second.lock()) s->send(encode(o.message));
  }
}

void WsServer::on_message(SessionId id, const std::string& text) {
  Outbox out;
  try {
    out = rooms_.handle_text(id, text, Clock::now());
  } catch (const std::exception& e) {
    std::cerr << "session " << id << ": " << e.what() << "\n";
    out.push_back({id, error_message("", "", "internal_error", e.what())});
  }
  deliver(out);
}

void WsServer::on_closed(SessionId id) {
  sessions_.erase(id);
  deliver(rooms_.disconnect(id, Clock::now()));
}

}  // namespace normgame::server
