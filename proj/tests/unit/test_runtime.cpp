#include <chrono>
#include <cstring>

#include "../support/toy.hpp"
#include "../support/worker_thread.hpp"
#include "doctest.h"
#include "mhsp/common/error.hpp"
#include "mhsp/model/evaluate.hpp"
#include "mhsp/runtime/assignment.hpp"
#include "mhsp/runtime/evaluator.hpp"
#include "mhsp/runtime/messages.hpp"
#include "mhsp/runtime/socket.hpp"

using namespace mhsp;
using namespace mhsp::runtime;

namespace {

EvalRequest request_for(const model::MhspInstance& inst, double x, int iteration = 1) {
  EvalRequest req;
  req.iteration = iteration;
  for (const auto& sp : inst.subproblems) req.items.push_back({sp.id, {x}, sp.coefficients});
  return req;
}

model::MhspInstance demand_family(int n) {
  std::vector<model::OperationalSubproblem> subs;
  for (int k = 0; k < n; ++k) subs.push_back(toy::sp0(0.25 + 0.1 * k, 1.0 / n));
  return toy::single_node(subs, 0.0, 2.0);
}

void shutdown(const std::string& endpoint) {
  Connection c = connect_to(parse_endpoint(endpoint));
  c.send_frame(Json{{"type", "shutdown"}}.dump());
  CHECK(Json::parse(c.receive_frame())["type"] == "bye");
}

}  // namespace

TEST_CASE("round-robin assignment splits subproblems and cores") {
  const WorkerAssignment a = assign_subproblems(105, 3, 8, Mode::kDistributed);
  REQUIRE(a.subproblems.size() == 3);
  for (const auto& ids : a.subproblems) CHECK(ids.size() == 35);
  CHECK(a.subproblems[1][0] == 1);
  CHECK(a.worker_of(104) == 2);

  const WorkerAssignment b = assign_subproblems(4, 1, 16);
  REQUIRE(b.cores.size() == 1);
  CHECK(b.cores[0] == std::vector<int>{4, 4, 4, 4});

  const WorkerAssignment c = assign_subproblems(5, 2, 1);
  CHECK(c.subproblems[0] == std::vector<int>{0, 2, 4});
  CHECK(c.subproblems[1] == std::vector<int>{1, 3});
  CHECK(c.cores[0] == std::vector<int>{1, 1, 1});

  const WorkerAssignment d = assign_subproblems(3, 1, 8);
  CHECK(d.cores[0] == std::vector<int>{3, 3, 2});
  CHECK(mode_from_string(to_string(Mode::kInProcess)) == Mode::kInProcess);
}

TEST_CASE("serial evaluator matches direct subproblem evaluation") {
  const auto inst = demand_family(5);
  LocalEvaluator serial(inst, 1);
  CHECK(serial.mode() == Mode::kSerial);
  for (double x : {0.0, 0.3, 0.6, 2.0}) {
    const EvalResult r = serial.evaluate_round(request_for(inst, x));
    REQUIRE(r.outcomes.size() == 5);
    for (const auto& o : r.outcomes) {
      const auto direct = model::evaluate_subproblem(inst.subproblems[o.subproblem], {x}, {});
      CHECK(o.theta == doctest::Approx(direct.theta));
      CHECK(o.lambda == direct.lambda);
    }
  }
  CHECK(serial.timings().size() == 4);
}

TEST_CASE("in-process evaluation gives the same canonical payload as serial") {
  const auto inst = demand_family(7);
  LocalEvaluator serial(inst, 1);
  LocalEvaluator threaded(inst, 3);
  CHECK(threaded.mode() == Mode::kInProcess);
  for (double x : {0.1, 0.6, 1.0}) {
    EvalRequest req = request_for(inst, x);
    const std::string a = canonical_payload(serial.evaluate_round(req));
    std::reverse(req.items.begin(), req.items.end());
    const std::string b = canonical_payload(threaded.evaluate_round(req));
    CHECK(a == b);
  }
}

TEST_CASE("unknown subproblem id is reported by id") {
  const auto inst = demand_family(2);
  LocalEvaluator serial(inst, 1);
  EvalRequest req = request_for(inst, 0.0);
  req.items.push_back({9, {0.0}, {}});
  try {
    serial.evaluate_round(req);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("9") != std::string::npos);
  }
}

TEST_CASE("padding stretches every evaluation") {
  const auto inst = demand_family(2);
  EvaluatorOptions opts;
  opts.min_solve_seconds = 0.02;
  LocalEvaluator serial(inst, 1, opts);
  const EvalResult r = serial.evaluate_round(request_for(inst, 0.0));
  for (const auto& o : r.outcomes) CHECK(o.solve_seconds >= 0.02);
  CHECK(serial.timings().back().solving_seconds >= 0.04);
}

TEST_CASE("frame encoding is a big-endian length prefix") {
  const std::string f = encode_frame("abc");
  REQUIRE(f.size() == 7);
  CHECK(f[0] == 0);
  CHECK(f[3] == 3);
  CHECK(f.substr(4) == "abc");
  CHECK_THROWS_AS(parse_endpoint("nohost"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("h:70000"), ConfigError);
}

TEST_CASE("worker hello and shutdown lifecycle") {
  toy::WorkerThread worker;
  {
    Connection c = connect_to(parse_endpoint(worker.endpoint()));
    c.send_frame(Json{{"type", "hello"}, {"version", 1}, {"role", "master"}}.dump());
    const Json reply = Json::parse(c.receive_frame());
    CHECK(reply["type"] == "hello");
    CHECK(reply["role"] == "worker");
  }
  shutdown(worker.endpoint());
  worker.join();
}

TEST_CASE("distributed evaluation of a single demand subproblem") {
  const auto inst = toy::single_node({toy::sp0(2.0)}, 0.0, 4.0);
  toy::WorkerThread worker;
  DistributedEvaluator dist(inst, {worker.endpoint()}, 1);
  const EvalResult r = dist.evaluate_round(request_for(inst, 0.0));
  REQUIRE(r.outcomes.size() == 1);
  CHECK(r.outcomes[0].theta == doctest::Approx(2.0));
  CHECK(r.outcomes[0].lambda == std::vector<double>{-1.0});
  dist.shutdown_workers();
  worker.join();
}

TEST_CASE("distributed payload is byte-identical to serial") {
  const auto inst = demand_family(6);
  toy::WorkerThread w1;
  toy::WorkerThread w2;
  LocalEvaluator serial(inst, 1);
  DistributedEvaluator dist(inst, {w1.endpoint(), w2.endpoint()}, 2);
  CHECK(dist.assignment().subproblems[1] == std::vector<int>{1, 3, 5});
  for (int it = 1; it <= 3; ++it) {
    const EvalRequest req = request_for(inst, 0.2 * it, it);
    CHECK(canonical_payload(serial.evaluate_round(req)) == canonical_payload(dist.evaluate_round(req)));
  }
  dist.shutdown_workers();
  w1.join();
  w2.join();
}

TEST_CASE("duplicate ids are rejected before dispatch") {
  const auto inst = demand_family(2);
  toy::WorkerThread worker;
  DistributedEvaluator dist(inst, {worker.endpoint()}, 1);
  EvalRequest bad = request_for(inst, 0.0);
  bad.items.push_back({9, {0.0}, {}});
  CHECK_THROWS_AS(dist.evaluate_round(bad), ValidationError);
  const EvalResult ok = dist.evaluate_round(request_for(inst, 0.1, 3));
  CHECK(ok.outcomes.size() == 2);
  dist.shutdown_workers();
  worker.join();
}

TEST_CASE("worker rejects unknown ids and oversized or malformed frames") {
  WorkerOptions opts;
  opts.max_frame_bytes = 1024;
  toy::WorkerThread worker(opts);
  {
    Connection c = connect_to(parse_endpoint(worker.endpoint()));
    c.send_frame(Json{{"type", "assign"}, {"subproblems", Json::array()}, {"cores", 1}}.dump());
    CHECK(Json::parse(c.receive_frame())["type"] == "assigned");
    EvalRequest req;
    req.items.push_back({42, {0.0}, {}});
    c.send_frame(request_to_json(req).dump());
    const Json reply = Json::parse(c.receive_frame());
    CHECK(reply["type"] == "error");
    CHECK(reply["message"].get<std::string>().find("42") != std::string::npos);
    // Connection stays usable.
    c.send_frame(Json{{"type", "hello"}}.dump());
    CHECK(Json::parse(c.receive_frame())["type"] == "hello");
  }
  {
    Connection c = connect_to(parse_endpoint(worker.endpoint()));
    c.send_frame(std::string(4096, 'x'));
    const Json reply = Json::parse(c.receive_frame());
    CHECK(reply["type"] == "error");
    CHECK_THROWS_AS(c.receive_frame(), TransportError);
  }
  {
    Connection c = connect_to(parse_endpoint(worker.endpoint()));
    c.send_frame("{not json");
    CHECK(Json::parse(c.receive_frame())["type"] == "error");
    CHECK_THROWS_AS(c.receive_frame(), TransportError);
  }
  shutdown(worker.endpoint());
  worker.join();
}

TEST_CASE("a vanished worker fails the round with a transport error") {
  const auto inst = demand_family(2);
  Listener listener(parse_endpoint("127.0.0.1:0"));
  // Answers the handshake, then drops the connection.
  std::thread fake([&] {
    Connection c = listener.accept();
    c.receive_frame();
    c.send_frame(Json{{"type", "hello"}, {"role", "worker"}}.dump());
    c.receive_frame();
    c.send_frame(Json{{"type", "assigned"}}.dump());
  });
  DistributedEvaluator dist(inst, {"127.0.0.1:" + std::to_string(listener.port())}, 1);
  fake.join();
  CHECK_THROWS_AS(dist.evaluate_round(request_for(inst, 0.0)), TransportError);
}
