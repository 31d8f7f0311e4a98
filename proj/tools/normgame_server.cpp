// Hosts live rooms over WebSocket.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <boost/asio/signal_set.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "normgame/server/room_manager.hpp"
#include "normgame/server/ws_server.hpp"

namespace fs = std::filesystem;
namespace asio = boost::asio;
using namespace normgame;
using namespace normgame::server;

int main(int argc, char** argv) {
  CLI::App app{"Game server for live rooms"};
  std::string bind = "127.0.0.1";
  unsigned short port = 8080;
  fs::path storage = "rooms";
  double timeout_s = 30.0;
  std::vector<fs::path> room_files;
  app.add_option("--bind", bind, "Listen address")->capture_default_str();
  app.add_option("--port", port, "Listen port; 0 picks a free one")->capture_default_str();
  app.add_option("--storage", storage, "Directory holding one subdirectory per room")->capture_default_str();
  app.add_option("--round-timeout", timeout_s, "Seconds before silent seats are skipped")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--room", room_files, "Create a room from a JSON file at startup (repeatable)")
      ->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    ServerOptions options;
    options.storage = storage;
    options.round_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
    RoomManager rooms(options);
    const auto now = Clock::now();
    for (const auto& code : rooms.recover(now)) {
      const auto snap = rooms.snapshot(code);
      fmt::print("recovered room {} ({}{})\n", code, to_string(snap.status),
                 snap.frozen_reason.empty() ? "" : ": " + snap.frozen_reason);
    }
    for (const auto& file : room_files) {
      std::ifstream in(file);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
      }
      const RoomSetup setup = room_setup_from_json(j);
      // A named room survives restarts; do not recreate it.
      if (!setup.room_code.empty() && rooms.has_room(setup.room_code)) continue;
      fmt::print("room {}\n", rooms.create_room(setup, now));
    }

    asio::io_context io;
    WsServer server(io, asio::ip::tcp::endpoint(asio::ip::make_address(bind), port), rooms);
    server.start();
    asio::signal_set signals(io, SIGINT, SIGTERM);
    signals.async_wait([&](const boost::system::error_code&, int) {
      server.stop();
      io.stop();
    });
    fmt::print("listening on {}:{}\n", bind, server.port());
    std::fflush(stdout);
    io.run();
  } catch (const std::exception& e) {
    std::cerr << "normgame-server: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
