#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "allocation.hpp"
#include "coding.hpp"
#include "network.hpp"

namespace acrlnc {

// x.5 rounds away from zero.
inline std::int64_t round_half_away(double x) { return static_cast<std::int64_t>(std::llround(x)); }

// r_p = 1 - nacks/total. Before any feedback the prior is returned.
// horizon > 0 keeps only the last `horizon` verdicts per path.
class RateEstimator {
public:
  explicit RateEstimator(int paths = 1, double prior = 0.5, std::size_t horizon = 0)
      : prior_(prior), horizon_(horizon), acks_(paths, 0), total_(paths, 0), recent_(paths) {}

  void record(int path, bool ack) {
    acks_[path] += ack ? 1 : 0;
    total_[path] += 1;
    if (horizon_ > 0) {
      auto& q = recent_[path];
      q.push_back(ack);
      if (q.size() > horizon_) {
        acks_[path] -= q.front() ? 1 : 0;
        total_[path] -= 1;
        q.pop_front();
      }
    }
  }

  double rate(int path) const {
    if (total_[path] == 0) return prior_;
    return static_cast<double>(acks_[path]) / static_cast<double>(total_[path]);
  }
  double erasure(int path) const { return 1.0 - rate(path); }
  std::uint64_t observations(int path) const { return total_[path]; }
  int paths() const { return static_cast<int>(total_.size()); }

private:
  double prior_;
  std::size_t horizon_;
  std::vector<std::uint64_t> acks_, total_;
  std::vector<std::deque<bool>> recent_;
};

enum class FbStatus { Pending, Acked, Nacked };

enum class Decision { SizeLimitRepeat, Fec, FbFec, New, EwFec };

inline PacketKind kind_of(Decision d) {
  switch (d) {
    case Decision::New: return PacketKind::New;
    case Decision::FbFec: return PacketKind::FbFec;
    case Decision::SizeLimitRepeat: return PacketKind::EndWindowRepeat;
    default: return PacketKind::Fec;
  }
}

struct LogEntry {
  std::uint64_t seq = 0;
  int path = 0;
  std::int64_t slot = 0;
  bool repeated = false;
  std::uint64_t w_max = 0;  // the entry depends on undecoded data while w_max > decoded prefix
  FbStatus status = FbStatus::Pending;
};

struct DofSnapshot {
  double md1 = 0, md2 = 0, ad1 = 0, ad2 = 0;
  double md_g = 0, ad_g = 0;
  double d = 0;
  double delta = 0;
  bool unbounded = false;  // ad_g == 0 while md_g > 0

  bool retransmit() const { return unbounded || delta > 0.0; }
  // Repair mass handed to the allocator.
  double demand() const { return unbounded ? md_g : delta; }
};

inline bool fbfec_needed(const DofSnapshot& s) { return s.retransmit(); }

// Builds a snapshot from the four counts; d and delta follow from them.
inline DofSnapshot make_snapshot(double md1, double md2, double ad1, double ad2, int paths, double th) {
  DofSnapshot s{md1, md2, ad1, ad2, md1 + md2, ad1 + ad2};
  if (s.ad_g > 0.0) {
    s.d = s.md_g / s.ad_g;
    s.delta = paths * (s.d - 1.0 - th);
  } else if (s.md_g > 0.0) {
    s.d = std::numeric_limits<double>::infinity();
    s.delta = std::numeric_limits<double>::infinity();
    s.unbounded = true;
  }
  return s;
}

struct SenderConfig {
  int paths = 1;
  int rtt = 20;
  std::uint64_t o_bar = 0;  // 0: twice the window length
  double th = 0.0;
  double prior = 0.5;
  std::size_t rate_horizon = 0;
};

struct Assignment {
  int path = 0;
  Decision decision = Decision::New;
  std::uint64_t seq = 0;
  std::uint64_t w_min = 1, w_max = 0;
  PacketKind kind() const { return kind_of(decision); }
};

// Multipath AC-RLNC sender. One call to schedule_slot per slot, after the
// feedback due at that slot has been applied.
class MpSender {
public:
  explicit MpSender(const SenderConfig& c)
      : cfg_(c),
        k_(static_cast<std::uint64_t>(c.paths) * static_cast<std::uint64_t>(c.rtt - 1)),
        o_bar_(c.o_bar ? c.o_bar : 2 * k_),
        rates_(c.paths, c.prior, c.rate_horizon),
        m_(c.paths, 0) {
    if (c.paths < 1 || c.rtt < 2) throw std::invalid_argument("sender: need paths >= 1 and rtt >= 2");
    if (k_ == 0 || o_bar_ == 0) throw std::invalid_argument("sender: empty window");
  }

  std::uint64_t k() const { return k_; }
  std::uint64_t o_bar() const { return o_bar_; }
  std::uint64_t w_min() const { return w_min_; }
  std::uint64_t w_max() const { return w_max_; }
  std::uint64_t decoded_prefix() const { return w_min_ - 1; }
  bool window_empty() const { return w_min_ > w_max_; }
  std::uint64_t span() const { return window_empty() ? 0 : w_max_ - w_min_ + 1; }
  bool size_limited() const { return size_limited_; }
  const std::vector<std::int64_t>& fec_left() const { return m_; }
  const RateEstimator& rates() const { return rates_; }

  // Multi-hop: the rate of a global path comes from hop-local link estimates, not from
  // the end-to-end verdicts. An empty vector restores the verdict-based estimate.
  void set_path_rates(std::vector<double> r) {
    if (!r.empty() && static_cast<int>(r.size()) != cfg_.paths) throw std::invalid_argument("sender: rate vector size");
    rate_override_ = std::move(r);
  }
  double path_rate(int p) const { return rate_override_.empty() ? rates_.rate(p) : rate_override_[p]; }
  double path_erasure(int p) const { return 1.0 - path_rate(p); }
  const std::deque<LogEntry>& log() const { return log_; }
  const SenderConfig& config() const { return cfg_; }

  DofSnapshot compute_dof() const {
    double md1 = 0, md2 = 0, ad1 = 0, ad2 = 0;
    std::uint64_t dp = decoded_prefix();
    for (const auto& e : log_) {
      if (e.w_max <= dp) continue;
      if (!e.repeated) {
        if (e.status == FbStatus::Nacked) md1 += 1;
        else if (e.status == FbStatus::Pending) md2 += path_erasure(e.path);
      } else {
        if (e.status == FbStatus::Acked) ad1 += 1;
        else if (e.status == FbStatus::Pending) ad2 += path_rate(e.path);
      }
    }
    return make_snapshot(md1, md2, ad1, ad2, cfg_.paths, cfg_.th);
  }

  // can_open() is asked right before a new raw packet would enter the window and
  // returns false once the source is exhausted.
  template <class Source>
  std::vector<Assignment> schedule_slot(std::int64_t now, Source&& can_open) {
    std::vector<Assignment> out;
    const int P = cfg_.paths;
    std::vector<char> busy(P, 0);
    auto emit = [&](int p, Decision d) {
      Assignment a{p, d, next_seq_++, w_min_, w_max_};
      log_.push_back(LogEntry{a.seq, p, now, d != Decision::New, w_max_, FbStatus::Pending});
      busy[p] = 1;
      out.push_back(a);
    };

    if (size_limited_) {
      if (!window_empty())
        for (int p = 0; p < P; ++p) emit(p, Decision::SizeLimitRepeat);
      return out;
    }

    if (window_empty()) std::fill(m_.begin(), m_.end(), 0);
    for (int p = 0; p < P; ++p)
      if (m_[p] > 0) {
        emit(p, Decision::Fec);
        --m_[p];
      }

    std::vector<int> free_paths;
    for (int p = 0; p < P; ++p)
      if (!busy[p]) free_paths.push_back(p);

    if (!free_paths.empty() && !window_empty()) {
      DofSnapshot s = compute_dof();
      if (s.retransmit()) {
        AllocationProblem pr;
        for (int p : free_paths) pr.rates.push_back(path_rate(p));
        pr.delta = s.demand();
        Partition part = bit_fill(pr);
        for (int j : part.fbfec_paths) emit(free_paths[j], Decision::FbFec);
      }
    }

    for (int p = 0; p < P; ++p) {
      if (busy[p]) continue;
      if (size_limited_) {
        emit(p, Decision::SizeLimitRepeat);
        continue;
      }
      if (m_[p] > 0) {
        emit(p, Decision::EwFec);
        --m_[p];
        continue;
      }
      if (!window_empty() && span() >= o_bar_) {
        size_limited_ = true;
        emit(p, Decision::SizeLimitRepeat);
        continue;
      }
      if (exhausted_ || !can_open()) {
        exhausted_ = true;
        if (!window_empty()) emit(p, Decision::FbFec);
        continue;
      }
      ++w_max_;
      ++new_in_window_;
      emit(p, Decision::New);
      if (new_in_window_ >= k_) open_fec_round();
    }
    return out;
  }

  void on_feedback(const FeedbackMsg& msg) {
    if (log_.empty() || msg.about_seq < log_.front().seq || msg.about_seq >= next_seq_)
      throw std::logic_error("sender: feedback for unknown packet");
    LogEntry& e = log_[msg.about_seq - log_.front().seq];
    if (e.status != FbStatus::Pending) throw std::logic_error("sender: duplicate feedback");
    bool ack = msg.verdict == Verdict::Ack;
    e.status = ack ? FbStatus::Acked : FbStatus::Nacked;
    rates_.record(msg.path, ack);
    if (msg.decoded_prefix + 1 > w_min_) w_min_ = msg.decoded_prefix + 1;
    if (size_limited_ && window_empty()) {
      size_limited_ = false;
      new_in_window_ = 0;
      std::fill(m_.begin(), m_.end(), 0);
    }
    std::uint64_t dp = decoded_prefix();
    while (!log_.empty() && log_.front().status != FbStatus::Pending && log_.front().w_max <= dp) log_.pop_front();
  }

  // Source exhausted and the receiver is known to hold everything.
  bool done() const { return exhausted_ && window_empty(); }

private:
  void open_fec_round() {
    new_in_window_ = 0;
    for (int q = 0; q < cfg_.paths; ++q)
      m_[q] = std::max<std::int64_t>(0, round_half_away(path_erasure(q) * (cfg_.rtt - 1)));
  }

  SenderConfig cfg_;
  std::uint64_t k_;
  std::uint64_t o_bar_;
  RateEstimator rates_;
  std::vector<double> rate_override_;
  std::vector<std::int64_t> m_;
  std::deque<LogEntry> log_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t w_min_ = 1, w_max_ = 0;
  std::uint64_t new_in_window_ = 0;
  bool size_limited_ = false;
  bool exhausted_ = false;
};

} // namespace acrlnc
