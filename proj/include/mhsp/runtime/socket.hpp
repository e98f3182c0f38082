#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace mhsp::runtime {

inline constexpr std::size_t kDefaultMaxFrameBytes = 64u << 20;

struct Endpoint {
  std::string host;
  int port = 0;
};

// Parses "host:port"; throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

// Length-prefixed framing: 4-byte big-endian payload length, then payload.
std::string encode_frame(const std::string& payload);

class Connection {
 public:
  Connection() = default;
  explicit Connection(int fd) : fd_(fd) {}
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  bool valid() const { return fd_ >= 0; }
  void close();

  void send_frame(const std::string& payload);
  void send_raw(const std::string& bytes);
  // Throws TransportError on EOF, I/O failure or a frame above the limit.
  std::string receive_frame(std::size_t max_bytes = kDefaultMaxFrameBytes);

 private:
  void read_exact(char* data, std::size_t size);
  int fd_ = -1;
};

Connection connect_to(const Endpoint& endpoint, double timeout_seconds = 10.0);

class Listener {
 public:
  explicit Listener(const Endpoint& endpoint);
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  ~Listener();

  int port() const { return port_; }
  Connection accept();

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace mhsp::runtime
