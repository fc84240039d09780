#include <gtest/gtest.h>

#include <acrlnc/allocation.hpp>
#include <acrlnc/network.hpp>

#include <random>

#include "oracles.hpp"

using namespace acrlnc;

TEST(BitFill, ZeroDeltaKeepsEveryPathOnNewPackets) {
  Partition p = bit_fill({{0.9, 0.1, 0.5}, 0.0});
  EXPECT_TRUE(p.fbfec_paths.empty());
  EXPECT_EQ(p.new_paths, (std::vector<int>{0, 1, 2}));
  EXPECT_TRUE(bit_fill({{0.9}, -1.0}).fbfec_paths.empty());
}

TEST(BitFill, PicksTheCheapestCoveringSubset) {
  Partition p = bit_fill({{0.8, 0.6, 0.4, 0.2}, 0.5});
  EXPECT_EQ(p.fbfec_paths, (std::vector<int>{2, 3}));
  EXPECT_EQ(p.new_paths, (std::vector<int>{0, 1}));
  EXPECT_EQ(oracle::fbfec_reference({0.8, 0.6, 0.4, 0.2}, 0.5), p.fbfec_paths);
}

TEST(BitFill, TieOnMassPrefersSlowerPaths) {
  // {0.6} and {0.4, 0.2} both carry 0.6.
  Partition p = bit_fill({{0.8, 0.6, 0.4, 0.2}, 0.55});
  EXPECT_EQ(p.fbfec_paths, (std::vector<int>{2, 3}));
}

TEST(BitFill, InfeasibleDeltaTurnsEveryPathToRepair) {
  Partition p = bit_fill({{0.3, 0.3}, 1.0});
  EXPECT_EQ(p.fbfec_paths, (std::vector<int>{0, 1}));
  EXPECT_TRUE(p.new_paths.empty());
}

TEST(BitFill, SinglePath) {
  EXPECT_EQ(bit_fill({{0.7}, 0.1}).fbfec_paths, (std::vector<int>{0}));
  EXPECT_EQ(bit_fill_oracle({{0.7}, 0.1}).fbfec_paths, (std::vector<int>{0}));
}

TEST(BitFill, OracleRefusesLargeInstances) {
  EXPECT_THROW(bit_fill_oracle({std::vector<double>(21, 0.5), 1.0}), std::invalid_argument);
}

TEST(BitFill, PureFunction) {
  AllocationProblem pr{{0.35, 0.9, 0.1, 0.55, 0.4}, 0.75};
  Partition a = bit_fill(pr), b = bit_fill(pr);
  EXPECT_EQ(a.fbfec_paths, b.fbfec_paths);
  EXPECT_EQ(a.new_paths, b.new_paths);
}

// Random instances including deliberate ties (rates on a coarse grid).
TEST(BitFill, MatchesExhaustiveReferenceOnRandomInstances) {
  Rng rng(31337);
  std::uniform_int_distribution<int> np(1, 12), grid(0, 10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 1000; ++it) {
    int n = np(rng);
    bool coarse = it % 2 == 0;
    std::vector<double> r(n);
    for (auto& x : r) x = coarse ? grid(rng) / 10.0 : u(rng);
    double total = 0;
    for (double x : r) total += x;
    double delta = (u(rng) * 1.2 - 0.1) * total;
    if (coarse) delta = std::round(delta * 10.0) / 10.0;
    AllocationProblem pr{r, delta};
    Partition got = bit_fill(pr);
    std::vector<int> want = oracle::fbfec_reference(r, delta);
    ASSERT_EQ(got.fbfec_paths, want) << "instance " << it;
    EXPECT_EQ(bit_fill_oracle(pr).fbfec_paths, want);
    EXPECT_EQ(got.new_paths.size() + got.fbfec_paths.size(), r.size());
  }
}
