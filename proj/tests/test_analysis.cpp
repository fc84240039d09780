#include <gtest/gtest.h>

#include <acrlnc/analysis.hpp>

using namespace acrlnc;

namespace {

BoundInputs four_paths(int rtt = 20) {
  BoundInputs in;
  in.eps = {0.2, 0.4, 0.6, 0.8};
  in.rtt = rtt;
  return in;
}

// Per-path erasure grid [hop][link] of the three-hop example, with e1 and e2 swept.
std::vector<std::vector<double>> mh_eps(double e1, double e2) {
  std::vector<std::vector<double>> by_path = {{e1, 0.6, 0.3}, {0.8, e1, e1}, {0.2, e2, 0.7}, {e2, 0.4, e2}};
  std::vector<std::vector<double>> g(3, std::vector<double>(4));
  for (int p = 0; p < 4; ++p)
    for (int h = 0; h < 3; ++h) g[h][p] = by_path[p][h];
  return g;
}

} // namespace

TEST(Bhattacharyya, Basics) {
  EXPECT_DOUBLE_EQ(bhattacharyya_bernoulli(0.37, 0.37), 0.0);
  EXPECT_TRUE(std::isinf(bhattacharyya_bernoulli(1.0, 0.0)));
  // 40-digit reference evaluation
  EXPECT_NEAR(bhattacharyya_bernoulli(0.8, 0.6), 0.024638002691794981, 1e-15);
  EXPECT_NEAR(window_distance(0.8, 0.6, 20), 20 * 0.024638002691794981, 1e-13);
}

TEST(ThroughputBounds, ErasureFreePathsReachOnePerPath) {
  BoundInputs in;
  in.eps = {0.0, 0.0, 0.0};
  in.rtt = 20;
  EXPECT_DOUBLE_EQ(throughput_ub(in), 3.0);
  EXPECT_DOUBLE_EQ(capacity_of(in), 3.0);
  // the end-of-window loss shrinks with the window factor
  in.o_bar = static_cast<std::uint64_t>(1 * in.window());
  double lb1 = throughput_lb(in);
  in.o_bar = static_cast<std::uint64_t>(50 * in.window());
  double lb50 = throughput_lb(in);
  EXPECT_LT(lb1, lb50);
  EXPECT_GT(lb50, 0.99 * throughput_ub(in));
}

TEST(ThroughputBounds, FourPathReferenceValues) {
  BoundInputs in = four_paths();
  EXPECT_NEAR(throughput_ub(in), 1.7205406361296425, 1e-12);
  EXPECT_NEAR(throughput_lb(in), 1.5046927823061205, 1e-12);
  in.rtt = 100;
  EXPECT_NEAR(throughput_ub(in), 1.7521864779827432, 1e-12);
}

TEST(ThroughputBounds, UpperBoundPlateausNearNinetyPercent) {
  BoundInputs in = four_paths(100);
  double ratio = throughput_ub(in) / capacity_of(in);
  EXPECT_GE(ratio, 0.85);
  EXPECT_LE(ratio, 0.95);
}

// The rounded FEC count makes the curve ripple by about 1e-3; the trend still rises.
TEST(ThroughputBounds, UpperBoundRisesWithRtt) {
  double cap = capacity_of(four_paths());
  double at2 = throughput_ub(four_paths(2)), at20 = throughput_ub(four_paths(20)), at100 = throughput_ub(four_paths(100));
  EXPECT_LT(at2, at20);
  EXPECT_LT(at20, at100);
  double prev = 0;
  for (int rtt = 2; rtt <= 100; rtt += 2) {
    double ub = throughput_ub(four_paths(rtt));
    EXPECT_LE(ub, cap);
    EXPECT_GE(ub, prev - 2e-3) << "rtt " << rtt;
    prev = std::max(prev, ub);
  }
}

TEST(ThroughputBounds, SandwichAndFactorsGrowWithWindow) {
  double prev_eta = 0, prev_cap = 0, prev_lb = 0;
  for (double f : {1.0, 2.0, 4.0, 10.0, 100.0}) {
    BoundInputs in = four_paths();
    in.o_bar = static_cast<std::uint64_t>(std::llround(f * in.window()));
    BoundReport b = bounds(in);
    EXPECT_LE(b.throughput_lb, b.throughput_ub);
    EXPECT_LE(b.throughput_ub, b.capacity + 1e-12);
    EXPECT_GE(b.f_eta, prev_eta);
    EXPECT_GE(b.f_capacity, prev_cap);
    EXPECT_GT(b.throughput_lb, prev_lb);
    prev_eta = b.f_eta;
    prev_cap = b.f_capacity;
    prev_lb = b.throughput_lb;
  }
  EXPECT_GT(prev_eta, 99.0);
  BoundInputs in = four_paths();
  in.o_bar = static_cast<std::uint64_t>(in.window() / 2);
  EXPECT_THROW(throughput_lb(in), std::invalid_argument);
}

TEST(MeanDelay, ErasureFreeClosedForm) {
  BoundInputs in;
  in.eps = {0.0, 0.0};
  in.rtt = 10;
  in.lambda = 0.25;
  // k_p = rtt - 1; the ACK state still pays one round trip
  EXPECT_NEAR(mean_delay_ub(in), 0.25 * 9 + 0.75 * (9 + 10), 1e-12);
}

TEST(MeanDelay, FourPathReference) {
  BoundInputs in = four_paths();
  EXPECT_DOUBLE_EQ(mean_erasure(in.eps), 0.5);
  in.lambda = 0.005;
  EXPECT_NEAR(mean_delay_ub(in), 35.989131295180856, 1e-9);
  in.lambda = 1.5;
  EXPECT_THROW(mean_delay_ub(in), std::invalid_argument);
}

TEST(MeanDelay, SaturatedChannelIsInfinite) {
  BoundInputs in;
  in.eps = {0.999, 0.999};
  in.rtt = 4;
  EXPECT_TRUE(std::isinf(mean_delay_ub(in)));
}

TEST(MaxDelay, FourPathReference) {
  BoundInputs in = four_paths();
  MaxDelay m = max_delay_ub(in);
  EXPECT_DOUBLE_EQ(m.t_max, 333.0);
  EXPECT_DOUBLE_EQ(m.d_max, 94.0);
}

TEST(MaxDelay, NoConfidenceTermWhenTargetEqualsWorstErasure) {
  BoundInputs in = four_paths();
  in.p_e = 0.8;
  double o = in.size_limit();
  EXPECT_DOUBLE_EQ(max_delay_ub(in).t_max, std::ceil(1 + (o - 1) / 0.5));
}

TEST(MaxDelay, IncreasingInWindowAndErasure) {
  double prev = 0;
  for (std::uint64_t o : {20u, 40u, 80u, 160u, 320u}) {
    BoundInputs in = four_paths();
    in.o_bar = o;
    double t = max_delay_ub(in).t_max;
    EXPECT_GT(t, prev);
    prev = t;
  }
  prev = 0;
  for (double e : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    BoundInputs in;
    in.eps = {e, e};
    in.o_bar = 40;
    double t = max_delay_ub(in).t_max;
    EXPECT_GT(t, prev);
    prev = t;
  }
  BoundInputs bad = four_paths();
  bad.p_e = 0.0;
  EXPECT_THROW(max_delay_ub(bad), std::invalid_argument);
}

TEST(DelayLowerBounds, GenieAndProduct) {
  BoundInputs in = four_paths();
  EXPECT_DOUBLE_EQ(genie_delay_lb(in), 12.0);
  EXPECT_LE(prod_delay_lb(in), genie_delay_lb(in));
  in.eps = {0.0, 0.9};
  EXPECT_DOUBLE_EQ(prod_delay_lb(in), 11.0);
  for (double a = 0; a < 1; a += 0.1)
    for (double b = 0; b < 1; b += 0.1) {
      BoundInputs x;
      x.eps = {a, b};
      EXPECT_LE(prod_delay_lb(x), genie_delay_lb(x) + 1e-12);
    }
}

TEST(MultiHopBounds, SingleHopMatchesMultipath) {
  BoundInputs in = four_paths();
  RateGrid r = rates_from_eps({in.eps});
  BoundReport a = bounds(in), b = mh_bounds(in, identity_matching(4, 1), r);
  EXPECT_NEAR(a.throughput_ub, b.throughput_ub, 1e-12);
  EXPECT_NEAR(a.throughput_lb, b.throughput_lb, 1e-12);
  EXPECT_NEAR(a.capacity, b.capacity, 1e-12);
  EXPECT_NEAR(a.mean_delay_ub, b.mean_delay_ub, 1e-12);
  EXPECT_EQ(a.max_delay_ub, b.max_delay_ub);
}

// About 85% of the matched global-path rate at large rtt; lower against the min cut,
// which the bottlenecks keep out of reach.
TEST(MultiHopBounds, ThreeHopUpperBoundAgainstMatchedRate) {
  for (double e : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}) {
    RateGrid r = rates_from_eps(mh_eps(e, e));
    Matching m = natural_match(r);
    BoundInputs in;
    in.rtt = 100;
    BoundReport far = mh_bounds(in, m, r);
    EXPECT_GE(far.throughput_ub / eta_max(m, r), 0.84) << e;
    EXPECT_LE(far.throughput_ub / eta_max(m, r), 0.90) << e;
    in.rtt = 12;
    BoundReport b = mh_bounds(in, m, r);
    EXPECT_GT(b.throughput_ub / b.capacity, 0.65) << e;
    EXPECT_LT(b.throughput_ub / b.capacity, 0.85) << e;
    EXPECT_LE(b.throughput_lb, b.throughput_ub);
  }
}

TEST(MultiHopBounds, RemovingBottlenecksRaisesTheBound) {
  // The worked three-hop example and a variant whose links of each global path agree.
  RateGrid r = {{0.9, 0.2, 0.8, 0.7}, {0.4, 0.9, 0.6, 0.7}, {0.9, 0.7, 0.2, 0.8}};
  RateGrid flat = r;
  flat[0][1] = 0.4;  // r21
  flat[0][2] = 0.6;  // r31
  flat[2][2] = 0.4;  // r33
  flat[2][3] = 0.6;  // r43
  BoundInputs in;
  in.rtt = 12;
  double with = mh_bounds(in, natural_match(r), r).throughput_ub;
  double without = mh_bounds(in, natural_match(flat), flat).throughput_ub;
  EXPECT_GT(without, with);
}

TEST(MultiHopBounds, ForwardingUsesTheProduct) {
  RateGrid r = {{0.5}, {0.5}};
  auto g = global_rates(identity_matching(1, 2), r, true);
  EXPECT_DOUBLE_EQ(g[0], 0.25);
  EXPECT_DOUBLE_EQ(global_rates(identity_matching(1, 2), r)[0], 0.5);
}
