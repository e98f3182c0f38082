#pragma once

#include <future>
#include <string>
#include <thread>

#include "mhsp/runtime/evaluator.hpp"

namespace toy {

// Runs serve_worker on an ephemeral loopback port in a background thread.
class WorkerThread {
 public:
  explicit WorkerThread(mhsp::runtime::WorkerOptions options = {}) {
    std::promise<int> bound;
    std::future<int> port = bound.get_future();
    thread_ = std::thread([options, p = std::move(bound)]() mutable {
      mhsp::runtime::serve_worker("127.0.0.1:0", options, [&](int port) { p.set_value(port); });
    });
    port_ = port.get();
  }
  WorkerThread(const WorkerThread&) = delete;
  WorkerThread& operator=(const WorkerThread&) = delete;
  ~WorkerThread() {
    if (thread_.joinable()) thread_.join();
  }

  std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }
  // Blocks until the worker has received Shutdown.
  void join() { thread_.join(); }

 private:
  std::thread thread_;
  int port_ = 0;
};

}  // namespace toy
