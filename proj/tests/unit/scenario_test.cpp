#include <doctest.h>

#include "fixtures.hpp"
#include "mpsdn/harness.hpp"
#include "mpsdn/scenario.hpp"

using namespace mpsdn;

TEST_SUITE("scenario") {

TEST_CASE("every bundled scenario round-trips through the writer") {
  for (const auto& path : list_scenarios(fixtures::scenario_dir())) {
    CAPTURE(path.string());
    const auto cfg = load_scenario_file(path.string());
    CHECK(load_scenario(write_scenario(cfg)) == cfg);
  }
}

TEST_CASE("defaults") {
  const auto cfg = load_scenario("nodes { A B }\nlink A <-> B { latency_ms = 5 }\nflow f { src = A  dst = B }\n");
  CHECK(cfg.duration_s == 30.0);
  CHECK(cfg.seed == 1);
  CHECK(cfg.controller.reorder_threshold == 0.15);
  CHECK(cfg.controller.aggregation_cutoff == 0.40);
  CHECK(cfg.controller.poll_interval_ms == 2000.0);
  CHECK(cfg.controller.max_paths == 2);
  CHECK(cfg.wrr_round_size == kDefaultWrrRoundSize);
  CHECK(cfg.lrf == kDefaultLossRecoveryFactor);
  REQUIRE(cfg.flows.size() == 1);
  CHECK(cfg.flows[0].type == FlowType::Tcp);
  CHECK(cfg.flow_stop_s(cfg.flows[0]) == 30.0);
}

TEST_CASE("tcp and controller keys are read") {
  const auto cfg = load_scenario(
      "scenario s { duration_s = 12  seed = 9  interval_ms = 500 }\n"
      "controller { reorder_threshold = 0.2  aggregation_cutoff = 0.3  poll_interval_ms = 1000  max_paths = 3 "
      " wrr_round_size = 32  lrf = 10 }\n"
      "tcp { mss = 1000  initial_window = 4  min_rto_ms = 100  initial_rto_ms = 500  reordering_window = 0.5 "
      " dsack_undo = false }\n"
      "nodes { A B }\nlink A <-> B { latency_ms = 5 }\n"
      "flow u { type = udp  src = A  dst = B  start_s = 1  stop_s = 4  rate_mbps = 2 }\n");
  CHECK(cfg.name == "s");
  CHECK(cfg.duration_s == 12);
  CHECK(cfg.seed == 9);
  CHECK(cfg.interval_ms == 500);
  CHECK(cfg.controller.reorder_threshold == 0.2);
  CHECK(cfg.controller.max_paths == 3);
  CHECK(cfg.wrr_round_size == 32);
  CHECK(cfg.lrf == 10);
  CHECK(cfg.tcp.mss == 1000);
  CHECK(cfg.tcp.initial_window_segments == 4);
  CHECK(cfg.tcp.min_rto_ms == 100);
  CHECK(cfg.tcp.initial_rto_ms == 500);
  CHECK(cfg.tcp.reordering_window == 0.5);
  CHECK_FALSE(cfg.tcp.dsack_undo);
  REQUIRE(cfg.flows.size() == 1);
  CHECK(cfg.flows[0].type == FlowType::Udp);
  CHECK(cfg.flows[0].rate_bps == 2e6);
  CHECK(cfg.flow_stop_s(cfg.flows[0]) == 4);
  CHECK(load_scenario(write_scenario(cfg)) == cfg);
}

TEST_CASE("sweep block") {
  const auto cfg = fixtures::bundled("mdi-sweep");
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->base_latency_ms == 25);
  CHECK(cfg.sweep->capacities_mbps == std::vector<double>{10, 10});
  CHECK(cfg.sweep->flow_seconds == 15);
  CHECK(cfg.sweep->mdi_points.size() == 10);
}

TEST_CASE("malformed and invalid scenarios") {
  const char* parse_errors[] = {
      "bogus { }\n",
      "nodes { A B }\nlink A <-> B { latency_ms = 5 }\nflow f { type = sctp  src = A  dst = B }\n",
      "nodes { A B }\nlink A <-> B { latency_ms = 5 }\nflow f { src = A  dst = B  colour = red }\n",
      "tcp { window = 3 }\nnodes { A B }\n",
      "sweep pareto { points = [ 0 ] }\n",
  };
  for (const char* t : parse_errors) {
    CAPTURE(t);
    CHECK_THROWS_AS(load_scenario(t), ParseError);
  }
  const char* invalid[] = {
      "scenario s { duration_s = 0 }\nnodes { A B }\n",
      "nodes { A B }\nlink A <-> B { latency_ms = 5 }\nflow f { type = udp  src = A  dst = B }\n",
      "nodes { A B }\nlink A <-> B { latency_ms = 5 }\nflow f { src = A  dst = B  start_s = 5  stop_s = 2 }\n",
      "nodes { A B }\nlink A <-> B { latency_ms = 5 }\nflow f { src = A  dst = Q }\n",
      "tcp { reordering_window = -1 }\nnodes { A B }\n",
      "controller { reorder_threshold = 0.45 }\nnodes { A B }\n",
  };
  for (const char* t : invalid) {
    CAPTURE(t);
    CHECK_THROWS_AS(load_scenario(t), ValidationError);
  }
  CHECK_THROWS_AS(load_scenario_file("/nonexistent/x.scn"), ValidationError);
}

TEST_CASE("two-path topology helper") {
  const std::vector<double> cap{10, 20};
  const std::vector<double> lat{25, 60};
  const auto t = two_path_topology(cap, lat);
  CHECK(t.nodes().size() == 4);
  CHECK(t.reachable(NodeId("SRC"), NodeId("DST")));
  const auto paths = max_flow_paths(t, NodeId("SRC"), NodeId("DST"), 2);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].path_delay_ms == doctest::Approx(25));
  CHECK(paths[1].path_delay_ms == doctest::Approx(60));
  CHECK(paths[1].allocated_rate_bps == doctest::Approx(20e6));
}

}  // TEST_SUITE
