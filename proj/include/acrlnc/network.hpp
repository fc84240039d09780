#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "coding.hpp"

namespace acrlnc {

enum class FeedbackMode { EndToEnd, HopByHop };

// eps[h][p]: erasure probability of link p on hop h.
struct Topology {
  int hops = 1;
  int paths = 1;
  std::vector<std::vector<double>> eps;
  int rtt = 20;
  FeedbackMode feedback = FeedbackMode::EndToEnd;

  static Topology single_hop(std::vector<double> e, int rtt) {
    Topology t;
    t.paths = static_cast<int>(e.size());
    t.eps = {std::move(e)};
    t.rtt = rtt;
    return t;
  }

  int hop_latency() const { return rtt / (2 * hops); }
};

// Throws std::invalid_argument naming the first violated constraint.
inline void validate(const Topology& t) {
  if (t.hops < 1) throw std::invalid_argument("topology: hops must be >= 1");
  if (t.paths < 1) throw std::invalid_argument("topology: paths must be >= 1");
  if (static_cast<int>(t.eps.size()) != t.hops)
    throw std::invalid_argument("topology: eps must have one row per hop");
  for (auto& row : t.eps) {
    if (static_cast<int>(row.size()) != t.paths)
      throw std::invalid_argument("topology: every hop must have exactly `paths` links");
    for (double e : row)
      if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("topology: erasure probability outside [0,1]");
  }
  if (t.rtt <= 0 || t.rtt % 2 != 0) throw std::invalid_argument("topology: rtt must be a positive even slot count");
  if (t.rtt < 2 * t.hops) throw std::invalid_argument("topology: rtt must be at least 2*hops");
  if (t.rtt % (2 * t.hops) != 0) throw std::invalid_argument("topology: rtt/(2*hops) must be an integer");
}

inline bool sample_erasure(Rng& rng, double eps) {
  if (eps <= 0.0) return false;
  if (eps >= 1.0) return true;
  std::bernoulli_distribution d(eps);
  return d(rng);
}

// One independent stream per (hop, link), so that different protocols run on the same
// seed see the same erasure sequence on every link.
class Channels {
public:
  Channels(const Topology& t, std::uint64_t seed) : topo_(t) {
    for (int h = 0; h < t.hops; ++h)
      for (int p = 0; p < t.paths; ++p) {
        std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(p), 0xe5u};
        rngs_.emplace_back(ss);
      }
  }

  bool erase(int hop, int link) { return sample_erasure(rngs_[hop * topo_.paths + link], topo_.eps[hop][link]); }

private:
  Topology topo_;
  std::vector<Rng> rngs_;
};

enum class Verdict { Ack, Nack };

struct FeedbackMsg {
  std::uint64_t about_seq = 0;
  Verdict verdict = Verdict::Nack;
  int path = 0;
  std::int64_t deliver_slot = 0;
  std::uint64_t decoded_prefix = 0;  // receiver state when the packet was due
  std::uint64_t rank = 0;
};

struct InFlight {
  CodedPacket pkt;
  std::int64_t arrive_slot = 0;
  bool erased = false;
};

// Items become visible at a fixed future slot.
template <class T>
class DelayLine {
public:
  void push(std::int64_t at, T item) { q_[at].push_back(std::move(item)); }

  std::vector<T> take(std::int64_t now) {
    std::vector<T> out;
    auto it = q_.find(now);
    if (it != q_.end()) {
      out = std::move(it->second);
      q_.erase(it);
    }
    return out;
  }

  bool empty() const { return q_.empty(); }
  std::size_t size() const {
    std::size_t n = 0;
    for (auto& [s, v] : q_) n += v.size();
    return n;
  }

private:
  std::map<std::int64_t, std::vector<T>> q_;
};

struct SlotEvents {
  std::int64_t slot = 0;
  std::vector<InFlight> arrivals;      // erased ones included, flagged
  std::vector<FeedbackMsg> feedback;
};

// Single-hop world: a packet sent at t is observed at t + rtt/2, feedback lands at t + rtt.
class World {
public:
  World(const Topology& t, std::uint64_t seed) : topo_((validate(t), t)), channels_(t, seed) {}

  std::int64_t now() const { return now_; }
  const Topology& topology() const { return topo_; }

  // Erasure drawn at send time.
  bool send(CodedPacket pkt) {
    bool erased = channels_.erase(0, pkt.path);
    send_with(std::move(pkt), erased);
    return erased;
  }

  void send_with(CodedPacket pkt, bool erased) {
    std::int64_t at = now_ + topo_.rtt / 2;
    pkt.send_slot = now_;
    forward_.push(at, InFlight{std::move(pkt), at, erased});
  }

  void feedback(FeedbackMsg m) { back_.push(m.deliver_slot, m); }

  // Moves the clock one slot and hands out everything due then.
  SlotEvents advance_slot() {
    ++now_;
    SlotEvents ev;
    ev.slot = now_;
    ev.arrivals = forward_.take(now_);
    ev.feedback = back_.take(now_);
    return ev;
  }

  bool idle() const { return forward_.empty() && back_.empty(); }

private:
  Topology topo_;
  Channels channels_;
  std::int64_t now_ = 0;
  DelayLine<InFlight> forward_;
  DelayLine<FeedbackMsg> back_;
};

} // namespace acrlnc
