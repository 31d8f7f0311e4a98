#pragma once

#include <sys/types.h>

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "normgame/event.hpp"

namespace normgame::server {

// Append-only JSON Lines file. A batch is either fully durable or absent:
// a short or failed write is cut back to the pre-batch length and raises
// IoError. Not shared between threads.
class FileSink {
 public:
  explicit FileSink(std::filesystem::path path);
  virtual ~FileSink();
  FileSink(const FileSink&) = delete;
  FileSink& operator=(const FileSink&) = delete;

  void append_lines(std::span<const std::string> lines);
  void append(std::span<const Event> events);

  const std::filesystem::path& path() const { return path_; }

 protected:
  // Overridden by tests to inject faults.
  virtual ssize_t do_write(int fd, const char* data, std::size_t size);
  virtual int do_fsync(int fd);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

using SinkFactory = std::function<std::unique_ptr<FileSink>(const std::filesystem::path&)>;
SinkFactory default_sink_factory();

}  // namespace normgame::server
