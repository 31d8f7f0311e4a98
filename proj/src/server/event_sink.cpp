#include "normgame/server/event_sink.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "normgame/error.hpp"

namespace normgame::server {

FileSink::FileSink(std::filesystem::path path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open '" + path_.string() + "': " + std::strerror(errno));
}

FileSink::~FileSink() {
  if (fd_ >= 0) ::close(fd_);
}

ssize_t FileSink::do_write(int fd, const char* data, std::size_t size) { return ::write(fd, data, size); }

int FileSink::do_fsync(int fd) { return ::fsync(fd); }

void FileSink::append_lines(std::span<const std::string> lines) {
  if (lines.empty()) return;
  std::string buffer;
  for (const auto& l : lines) {
    buffer += l;
    buffer += '\n';
  }
  struct stat st{};
  if (::fstat(fd_, &st) != 0) throw IoError("cannot stat '" + path_.string() + "': " + std::strerror(errno));
  const off_t start = st.st_size;

  auto rollback = [&](const std::string& why) {
    // Leave no partial line behind.
    if (::ftruncate(fd_, start) != 0)
      throw IoError("write to '" + path_.string() + "' failed (" + why + ") and rollback failed: " +
                    std::strerror(errno));
    throw IoError("write to '" + path_.string() + "' failed: " + why);
  };

  std::size_t done = 0;
  while (done < buffer.size()) {
    const ssize_t n = do_write(fd_, buffer.data() + done, buffer.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      rollback(std::strerror(errno));
    }
    if (n == 0) rollback("no progress");
    done += static_cast<std::size_t>(n);
  }
  if (do_fsync(fd_) != 0) rollback(std::string("fsync: ") + std::strerror(errno));
}

void FileSink::append(std::span<const Event> events) {
  std::vector<std::string> lines;
  lines.reserve(events.size());
  for (const auto& e : events) lines.push_back(to_json_line(e));
  append_lines(lines);
}

SinkFactory default_sink_factory() {
  return [](const std::filesystem::path& p) { return std::make_unique<FileSink>(p); };
}

}  // namespace normgame::server
