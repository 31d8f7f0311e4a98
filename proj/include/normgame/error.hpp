#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace normgame {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidAction : public Error {
 public:
  using Error::Error;
};

class LifecycleError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised by replay and metric extraction; seq() is the first offending event.
class CorruptionError : public Error {
 public:
  CorruptionError(std::uint64_t seq, const std::string& what)
      : Error("corrupt event log at seq " + std::to_string(seq) + ": " + what), seq_(seq) {}
  std::uint64_t seq() const noexcept { return seq_; }

 private:
  std::uint64_t seq_;
};

}  // namespace normgame
