#include "mhsp/runtime/socket.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "mhsp/common/error.hpp"

namespace mhsp::runtime {

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw ConfigError("endpoint '" + text + "' must look like host:port");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.empty()) ep.host = "0.0.0.0";
  try {
    std::size_t used = 0;
    ep.port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("endpoint '" + text + "' has an invalid port");
  }
  if (ep.port < 0 || ep.port > 65535) throw ConfigError("endpoint '" + text + "' port out of range");
  return ep;
}

std::string encode_frame(const std::string& payload) {
  if (payload.size() > 0xffffffffu) throw TransportError("payload too large to frame");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out(4, '\0');
  out[0] = static_cast<char>((n >> 24) & 0xff);
  out[1] = static_cast<char>((n >> 16) & 0xff);
  out[2] = static_cast<char>((n >> 8) & 0xff);
  out[3] = static_cast<char>(n & 0xff);
  return out + payload;
}

Connection::Connection(Connection&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

Connection::~Connection() { close(); }

void Connection::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Connection::send_raw(const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void Connection::send_frame(const std::string& payload) { send_raw(encode_frame(payload)); }

void Connection::read_exact(char* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd_, data + got, size - got, 0);
    if (n == 0) throw TransportError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("receive failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
}

std::string Connection::receive_frame(std::size_t max_bytes) {
  unsigned char header[4];
  read_exact(reinterpret_cast<char*>(header), 4);
  const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                          (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (n > max_bytes) {
    throw TransportError("frame of " + std::to_string(n) + " bytes exceeds the limit of " +
                         std::to_string(max_bytes));
  }
  std::string payload(n, '\0');
  if (n > 0) read_exact(payload.data(), n);
  return payload;
}

namespace {

addrinfo* resolve(const Endpoint& endpoint, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(endpoint.port);
  const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0) {
    throw TransportError("cannot resolve " + endpoint.host + ": " + ::gai_strerror(rc));
  }
  return result;
}

}  // namespace

Connection connect_to(const Endpoint& endpoint, double timeout_seconds) {
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_seconds);
  std::string last_error;
  for (;;) {
    addrinfo* info = resolve(endpoint, false);
    const int fd = ::socket(info->ai_family, info->ai_socktype, info->ai_protocol);
    if (fd < 0) {
      ::freeaddrinfo(info);
      throw TransportError(std::string("socket failed: ") + std::strerror(errno));
    }
    const int rc = ::connect(fd, info->ai_addr, info->ai_addrlen);
    ::freeaddrinfo(info);
    if (rc == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Connection(fd);
    }
    last_error = std::strerror(errno);
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("cannot connect to " + endpoint.host + ":" +
                           std::to_string(endpoint.port) + ": " + last_error);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

Listener::Listener(const Endpoint& endpoint) {
  addrinfo* info = resolve(endpoint, true);
  fd_ = ::socket(info->ai_family, info->ai_socktype, info->ai_protocol);
  if (fd_ < 0) {
    ::freeaddrinfo(info);
    throw TransportError(std::string("socket failed: ") + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd_, info->ai_addr, info->ai_addrlen) != 0 || ::listen(fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::freeaddrinfo(info);
    ::close(fd_);
    throw TransportError("cannot listen on " + endpoint.host + ":" + std::to_string(endpoint.port) +
                         ": " + err);
  }
  ::freeaddrinfo(info);
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

Connection Listener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Connection(fd);
    }
    if (errno != EINTR) throw TransportError(std::string("accept failed: ") + std::strerror(errno));
  }
}

}  // namespace mhsp::runtime
