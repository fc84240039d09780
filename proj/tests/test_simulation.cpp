#include <gtest/gtest.h>

#include <acrlnc/simulation.hpp>

using namespace acrlnc;

namespace {

SimConfig mp_config(std::vector<double> eps, int rtt, std::uint64_t packets) {
  SimConfig c;
  c.topo = Topology::single_hop(std::move(eps), rtt);
  c.packets = packets;
  return c;
}

SimConfig mh_config(double e1, double e2, Protocol p, std::uint64_t packets) {
  std::vector<std::vector<double>> by_path = {{e1, 0.6, 0.3}, {0.8, e1, e1}, {0.2, e2, 0.7}, {e2, 0.4, e2}};
  SimConfig c;
  c.topo.hops = 3;
  c.topo.paths = 4;
  c.topo.rtt = 12;
  c.topo.eps.assign(3, std::vector<double>(4));
  for (int p = 0; p < 4; ++p)
    for (int h = 0; h < 3; ++h) c.topo.eps[h][p] = by_path[p][h];
  c.protocol = p;
  c.packets = packets;
  return c;
}

bool same(const Trace& a, const Trace& b) {
  return a.first_send == b.first_send && a.in_order == b.in_order && a.sent == b.sent &&
         a.innovative_per_path == b.innovative_per_path && a.silent_slots == b.silent_slots;
}

} // namespace

TEST(Simulation, SinglePathMultipathEqualsSinglePath) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SimConfig c = mp_config({0.3}, 20, 800);
    Trace mp = simulate(c, seed);
    c.protocol = Protocol::SpAcrlncPerPath;
    Trace sp = simulate(c, seed);
    EXPECT_TRUE(same(mp, sp)) << seed;
  }
}

TEST(Simulation, SameSeedSameTrace) {
  for (Protocol p : {Protocol::MpAcrlnc, Protocol::SpAcrlncPerPath, Protocol::SrArq}) {
    SimConfig c = mp_config({0.2, 0.4, 0.6, 0.8}, 20, 600);
    c.protocol = p;
    EXPECT_TRUE(same(simulate(c, 11), simulate(c, 11))) << to_string(p);
    EXPECT_FALSE(same(simulate(c, 11), simulate(c, 12))) << to_string(p);
  }
  for (Protocol p : {Protocol::MhAcrlnc, Protocol::SrArqHopByHop}) {
    SimConfig c = mh_config(0.3, 0.3, p, 400);
    EXPECT_TRUE(same(simulate(c, 5), simulate(c, 5))) << to_string(p);
  }
}

TEST(Simulation, ErasureFreeEveryPathCarriesOnePacketPerSlot) {
  SimConfig c = mp_config({0.0, 0.0, 0.0}, 10, 900);
  c.prior = 1.0;
  RunMetrics m = measure(simulate(c, 1));
  EXPECT_DOUBLE_EQ(m.throughput, 3.0);
  EXPECT_DOUBLE_EQ(m.max_delay, 5.0);
}

// Size limit of 7 on four paths with the first eleven transmissions erased and repairs
// held back: seven News fill the window, then only size-limit repeats flow and the
// eighteenth transmission completes the decoding in the fifth slot.
TEST(Simulation, SizeLimitOfSevenWorstCase) {
  SimConfig c = mp_config({0.0, 0.0, 0.0, 0.0}, 20, 7);
  c.o_bar = 7;
  c.th = 1e9;
  auto count = std::make_shared<int>(0);
  auto lost = [count](std::int64_t, int) { return ++*count <= 11; };
  Trace t = simulate(c, 1, lost);
  RunMetrics m = measure(t);
  EXPECT_EQ(t.sent_new, 7u);
  EXPECT_EQ(t.in_order[0], 4 + 10);
  // slots are counted from 0, so five slots of transmissions end at slot 4
  EXPECT_DOUBLE_EQ(m.max_delay, 4 + c.topo.rtt / 2);
}

TEST(Simulation, PayloadRoundTrip) {
  SimConfig c = mp_config({0.3, 0.6}, 10, 300);
  auto r = run_coded_streams({2}, 10, sender_config(c), 300, 4,
                             forwarding_erasures(c.topo, identity_matching(2, 1), 4), true, 24);
  EXPECT_TRUE(r.payload_ok);
  auto s = run_coded_streams({1, 1}, 10, sender_config(c), 300, 4,
                             forwarding_erasures(c.topo, identity_matching(2, 1), 4), true, 24);
  EXPECT_TRUE(s.payload_ok);
}

TEST(Simulation, SelectiveRepeatSingleLoss) {
  auto once = [](std::int64_t s, int) { return s == 0; };
  Trace t = run_sr_arq(1, 20, 20, 5, once);
  // lost at 0, NACK back at rtt, delivered rtt/2 later
  EXPECT_EQ(t.in_order[0], 20 + 10);
  EXPECT_EQ(t.in_order[1], t.in_order[0]);
  Trace clean = run_sr_arq(2, 20, 20, 50, [](std::int64_t, int) { return false; });
  RunMetrics m = measure(clean);
  EXPECT_DOUBLE_EQ(m.throughput, 2.0);
  EXPECT_DOUBLE_EQ(m.max_delay, 10.0);
}

TEST(Simulation, ZeroErasureLivenessUnderHeavyLoss) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig c = mp_config({0.95, 0.9, 0.99, 0.5}, 8, 200);
    for (Protocol p : {Protocol::MpAcrlnc, Protocol::SpAcrlncPerPath, Protocol::SrArq}) {
      c.protocol = p;
      Trace t = simulate(c, seed);
      ASSERT_NO_THROW(measure(t)) << to_string(p) << " seed " << seed;
    }
  }
}

TEST(Simulation, RecodingBeatsForwarding) {
  SimConfig c = mh_config(0.5, 0.5, Protocol::MhAcrlnc, 1000);
  double rec = 0, fwd = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.recode = RecodeMode::SelectiveMix;
    rec += measure(simulate(c, seed)).throughput;
    c.recode = RecodeMode::ForwardOnly;
    fwd += measure(simulate(c, seed)).throughput;
  }
  EXPECT_GT(rec, 1.5 * fwd);
}

TEST(Simulation, MultiHopLivenessAllModes) {
  for (RecodeMode mode : {RecodeMode::SelectiveMix, RecodeMode::PerPathIndependent, RecodeMode::ForwardOnly})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SimConfig c = mh_config(0.9, 0.9, Protocol::MhAcrlnc, 200);
      c.recode = mode;
      ASSERT_NO_THROW(measure(simulate(c, seed))) << to_string(mode);
    }
  SimConfig c = mh_config(0.9, 0.9, Protocol::SrArqHopByHop, 200);
  ASSERT_NO_THROW(measure(simulate(c, 2)));
}

TEST(Simulation, InOrderSlotsRespectFlightTime) {
  SimConfig c = mp_config({0.2, 0.4, 0.6, 0.8}, 20, 500);
  Trace t = simulate(c, 3);
  std::uint64_t innov = 0;
  for (auto x : t.innovative_per_path) innov += x;
  EXPECT_EQ(innov, 500u);
  for (std::size_t i = 0; i < t.packets(); ++i) {
    EXPECT_GE(t.in_order[i], t.first_send[i] + 10);
    if (i) EXPECT_GE(t.in_order[i], t.in_order[i - 1]);
  }
  EXPECT_LE(measure(t).throughput, 4.0);
}

TEST(Simulation, BestGlobalPathBaseline) {
  SimConfig c = mh_config(0.5, 0.5, Protocol::BestPathAcrlnc, 1000);
  Topology one = best_global_path(c.topo);
  EXPECT_EQ(one.paths, 1);
  EXPECT_EQ(one.eps, (std::vector<std::vector<double>>{{0.2}, {0.4}, {0.3}}));
  double best = 0, mh = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    best += measure(simulate(c, seed)).throughput / 3;
    c.protocol = Protocol::MhAcrlnc;
    mh += measure(simulate(c, seed)).throughput / 3;
    c.protocol = Protocol::BestPathAcrlnc;
  }
  // one path cannot beat its bottleneck link
  EXPECT_LT(best, 0.6 + 0.02);
  EXPECT_GT(best, 0.4);
  EXPECT_GT(mh, best);
}

TEST(Simulation, InvalidConfigRejected) {
  SimConfig c = mp_config({0.2}, 7, 10);
  EXPECT_THROW(simulate(c, 1), std::invalid_argument);
  c = mp_config({0.2}, 10, 0);
  EXPECT_THROW(simulate(c, 1), std::invalid_argument);
  c = mh_config(0.2, 0.2, Protocol::MhAcrlnc, 10);
  c.topo.feedback = FeedbackMode::HopByHop;
  EXPECT_THROW(simulate(c, 1), std::invalid_argument);
}
