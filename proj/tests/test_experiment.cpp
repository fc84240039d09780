#include <gtest/gtest.h>

#include <sstream>

#include <experiment.hpp>

using namespace acrlnc;
using namespace acrlnc::exp;

namespace {

json smoke() {
  return json::parse(R"({
    "paths": 2, "rtt": 10,
    "eps": [["e1", 0.3]],
    "sweep": {"e1": [0.1, 0.5]},
    "protocols": ["mp_acrlnc", "sr_arq"],
    "iterations": 3, "base_seed": 7, "packet_count": 200
  })");
}

std::string runs_csv(const Experiment& e, int workers) {
  std::vector<std::size_t> cells{0, 1};
  std::ostringstream os;
  write_runs_csv(os, e, run_tasks(e, all_tasks(e, cells), workers));
  return os.str();
}

} // namespace

TEST(Experiment, ParsesDefaultsAndSweep) {
  Experiment e = parse_experiment(smoke());
  EXPECT_EQ(e.cells(), 2u);
  EXPECT_EQ(e.protocols.size(), 2u);
  EXPECT_EQ(topology_at(e, 1).eps[0][0], 0.5);
  EXPECT_EQ(topology_at(e, 1).eps[0][1], 0.3);
  EXPECT_EQ(e.packets, 200u);
  EXPECT_DOUBLE_EQ(e.th, 0.0);
  EXPECT_NO_THROW(validate(e));
  EXPECT_EQ(e.hash.size(), 16u);
  json other = smoke();
  other["rtt"] = 12;
  EXPECT_NE(parse_experiment(other).hash, e.hash);
}

TEST(Experiment, PathMajorLayoutIsTransposed) {
  json j = json::parse(R"({
    "hops": 3, "paths": 2, "rtt": 12, "eps_layout": "path_major",
    "eps": [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]
  })");
  Topology t = topology_at(parse_experiment(j), 0);
  EXPECT_EQ(t.eps, (std::vector<std::vector<double>>{{0.1, 0.4}, {0.2, 0.5}, {0.3, 0.6}}));
}

TEST(Experiment, WindowFactorFollowsTheSender) {
  json j = smoke();
  j["window_factor"] = 2.0;
  Experiment e = parse_experiment(j);
  EXPECT_EQ(sim_config(e, 0, Protocol::MpAcrlnc).o_bar, 36u);
  EXPECT_EQ(sim_config(e, 0, Protocol::SpAcrlncPerPath).o_bar, 18u);
}

TEST(Experiment, InvalidConfigsNameTheProblem) {
  auto message = [](json j) {
    try {
      validate(parse_experiment(j));
    } catch (const std::invalid_argument& ex) {
      return std::string(ex.what());
    }
    return std::string();
  };
  json j = smoke();
  j["rtt"] = 7;
  EXPECT_NE(message(j).find("rtt"), std::string::npos);
  j = smoke();
  j["eps"] = json::parse(R"([["e9", 0.3]])");
  EXPECT_NE(message(j).find("e9"), std::string::npos);
  j = smoke();
  j["sweep"]["e2"] = {0.1};
  EXPECT_NE(message(j).find("equal length"), std::string::npos);
  j = smoke();
  j["protocols"] = {"tcp"};
  EXPECT_NE(message(j).find("tcp"), std::string::npos);
  j = smoke();
  j.erase("paths");
  EXPECT_NE(message(j).find("config"), std::string::npos);
  j = smoke();
  j["iterations"] = 0;
  EXPECT_NE(message(j).find("iterations"), std::string::npos);
}

TEST(Experiment, RowsIndependentOfWorkerCount) {
  Experiment e = parse_experiment(smoke());
  std::string a = runs_csv(e, 1), b = runs_csv(e, 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 2 * 2 * 3);
  EXPECT_NE(a.find(e.hash), std::string::npos);
}

TEST(Experiment, PairedSeedsAcrossProtocols) {
  Experiment e = parse_experiment(smoke());
  auto rows = run_tasks(e, all_tasks(e, {0}), 1);
  for (auto& r : rows) EXPECT_EQ(r.seed, 7u + r.iteration);
}

TEST(Experiment, CompareJoinsOnCell) {
  Experiment e = parse_experiment(smoke());
  std::stringstream sim, bnd, out;
  write_runs_csv(sim, e, run_tasks(e, all_tasks(e, {0, 1}), 2));
  e.bounds.lambda = 0.01;
  write_bounds_csv(bnd, e, {0, 1});
  Table s = read_csv(sim), b = read_csv(bnd);
  write_compare_csv(out, s, b);
  Table c = read_csv(out);
  ASSERT_EQ(c.rows.size(), 4u);
  int thr = c.column("throughput"), f = c.column("F_capacity"), genie = c.column("F_D_mean");
  for (auto& r : c.rows) {
    EXPECT_GT(std::stod(r[thr]), 0.0);
    EXPECT_LE(std::stod(r[f]), 1.05);
    EXPECT_GE(std::stod(r[genie]), 1.0);
  }
}

TEST(Csv, SplitKeepsTrailingEmptyField) {
  EXPECT_EQ(split_csv_line("a,b,"), (std::vector<std::string>{"a", "b", ""}));
  std::istringstream empty;
  EXPECT_THROW(read_csv(empty), std::invalid_argument);
}
