#include <iostream>

#include "CLI11.hpp"
#include "mhsp/runtime/evaluator.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Subproblem evaluation worker"};
  std::string listen;
  std::size_t max_frame = 0;
  app.add_option("--listen", listen, "host:port (port 0 picks a free port)")->required();
  app.add_option("--max-frame-bytes", max_frame, "largest accepted frame");
  CLI11_PARSE(app, argc, argv);
  try {
    mhsp::runtime::WorkerOptions opts;
    if (max_frame > 0) opts.max_frame_bytes = max_frame;
    mhsp::runtime::serve_worker(listen, opts, [](int port) { std::cerr << "listening on port " << port << std::endl; });
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":{\"kind\":\"transport\",\"message\":\"" << e.what() << "\"},\"exit_code\":5}\n";
    return 5;
  }
  return 0;
}
