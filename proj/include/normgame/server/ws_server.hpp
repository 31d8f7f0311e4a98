#pragma once

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>

#include <chrono>
#include <map>
#include <memory>

#include "normgame/server/room_manager.hpp"

namespace normgame::server {

// WebSocket front end: one text frame per Message. Everything runs on the
// io_context's thread, so RoomManager sees one message at a time.
class WsServer {
 public:
  WsServer(boost::asio::io_context& io, const boost::asio::ip::tcp::endpoint& endpoint, RoomManager& rooms,
           std::chrono::milliseconds tick = std::chrono::milliseconds(100));
  ~WsServer();

  void start();
  void stop();
  unsigned short port() const;

 private:
  class Session;
  friend class Session;

  void accept();
  void schedule_tick();
  void deliver(const Outbox& out);
  void on_message(SessionId id, const std::string& text);
  void on_closed(SessionId id);

  boost::asio::io_context& io_;
  boost::asio::ip::tcp::acceptor acceptor_;
  boost::asio::steady_timer timer_;
  std::chrono::milliseconds tick_;
  RoomManager& rooms_;
  SessionId next_id_ = 1;
  std::map<SessionId, std::weak_ptr<Session>> sessions_;
  bool stopped_ = false;
};

}  // namespace normgame::server
