#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coding.hpp"

namespace acrlnc {

// rates[h][i]: success rate of link i on hop h.
using RateGrid = std::vector<std::vector<double>>;

// 0-based. local[i][h] is the hop-h link fed by link i of hop h-1 (column 0 is the
// identity); global[p][h] is the hop-h link carrying global path p.
struct Matching {
  std::vector<std::vector<int>> local;
  std::vector<std::vector<int>> global;

  int paths() const { return static_cast<int>(global.size()); }
  int hops() const { return global.empty() ? 0 : static_cast<int>(global[0].size()); }
};

inline RateGrid rates_from_eps(const std::vector<std::vector<double>>& eps) {
  RateGrid r = eps;
  for (auto& row : r)
    for (auto& x : row) x = 1.0 - x;
  return r;
}

inline void check_grid(const RateGrid& r) {
  if (r.empty() || r[0].empty()) throw std::invalid_argument("matching: empty rate grid");
  for (auto& row : r)
    if (row.size() != r[0].size()) throw std::invalid_argument("matching: ragged rate grid");
}

// Builds local from global.
inline Matching from_global(std::vector<std::vector<int>> g) {
  Matching m;
  int P = static_cast<int>(g.size());
  int H = P ? static_cast<int>(g[0].size()) : 0;
  m.local.assign(P, std::vector<int>(H, 0));
  for (int i = 0; i < P; ++i) m.local[i][0] = i;
  for (int p = 0; p < P; ++p)
    for (int h = 1; h < H; ++h) m.local[g[p][h - 1]][h] = g[p][h];
  m.global = std::move(g);
  return m;
}

inline Matching identity_matching(int paths, int hops) {
  std::vector<std::vector<int>> g(paths, std::vector<int>(hops));
  for (int p = 0; p < paths; ++p)
    for (int h = 0; h < hops; ++h) g[p][h] = p;
  return from_global(std::move(g));
}

// Links of one hop, best first; equal rates keep index order.
inline std::vector<int> rank_links(const std::vector<double>& r) {
  std::vector<int> order(r.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r[a] > r[b]; });
  return order;
}

// Rank-to-rank matching of every hop.
inline Matching natural_match(const RateGrid& rates) {
  check_grid(rates);
  int H = static_cast<int>(rates.size());
  int P = static_cast<int>(rates[0].size());
  std::vector<std::vector<int>> order(H);
  for (int h = 0; h < H; ++h) order[h] = rank_links(rates[h]);
  std::vector<int> pos0(P);
  for (int j = 0; j < P; ++j) pos0[order[0][j]] = j;
  std::vector<std::vector<int>> g(P, std::vector<int>(H));
  for (int p = 0; p < P; ++p)
    for (int h = 0; h < H; ++h) g[p][h] = order[h][pos0[p]];
  return from_global(std::move(g));
}

// The same matching computed node by node: each node only sees its outgoing rates and
// the order token forwarded by its upstream neighbour.
inline Matching natural_match_decentralized(const RateGrid& rates) {
  check_grid(rates);
  int H = static_cast<int>(rates.size());
  int P = static_cast<int>(rates[0].size());
  Matching m;
  m.local.assign(P, std::vector<int>(H, 0));
  for (int i = 0; i < P; ++i) m.local[i][0] = i;
  std::vector<int> token = rank_links(rates[0]);  // sent downstream by the source
  for (int h = 1; h < H; ++h) {
    std::vector<int> mine = rank_links(rates[h]);
    for (int j = 0; j < P; ++j) m.local[token[j]][h] = mine[j];
    token = mine;
  }
  m.global.assign(P, std::vector<int>(H, 0));
  for (int p = 0; p < P; ++p) {
    m.global[p][0] = p;
    for (int h = 1; h < H; ++h) m.global[p][h] = m.local[m.global[p][h - 1]][h];
  }
  return m;
}

inline bool admissible(const Matching& m) {
  int P = m.paths(), H = m.hops();
  for (int h = 0; h < H; ++h) {
    std::vector<char> seen(P, 0), seen_l(P, 0);
    for (int p = 0; p < P; ++p) {
      int g = m.global[p][h], l = m.local[p][h];
      if (g < 0 || g >= P || seen[g] || l < 0 || l >= P || seen_l[l]) return false;
      seen[g] = seen_l[l] = 1;
    }
  }
  for (int p = 0; p < P; ++p) {
    if (m.global[p][0] != p) return false;
    for (int h = 1; h < H; ++h)
      if (m.global[p][h] != m.local[m.global[p][h - 1]][h]) return false;
  }
  return true;
}

// Per global path rate: the weakest link, or the product when nodes only forward.
inline std::vector<double> global_rates(const Matching& m, const RateGrid& rates, bool forward_only = false) {
  std::vector<double> out;
  for (int p = 0; p < m.paths(); ++p) {
    double r = forward_only ? 1.0 : 2.0;
    for (int h = 0; h < m.hops(); ++h) {
      double x = rates[h][m.global[p][h]];
      r = forward_only ? r * x : std::min(r, x);
    }
    out.push_back(r);
  }
  return out;
}

inline double eta_max(const Matching& m, const RateGrid& rates) {
  auto g = global_rates(m, rates);
  return std::accumulate(g.begin(), g.end(), 0.0);
}

// Min over hops of the hop's total rate.
inline double min_cut_capacity(const RateGrid& rates) {
  double c = 1e300;
  for (auto& row : rates) c = std::min(c, std::accumulate(row.begin(), row.end(), 0.0));
  return c;
}

// Exhaustive search over the permutations of hops 2..H.
inline Matching brute_force_match(const RateGrid& rates) {
  check_grid(rates);
  int H = static_cast<int>(rates.size());
  int P = static_cast<int>(rates[0].size());
  if (P > 6 || H > 4) throw std::invalid_argument("brute_force_match: limited to 6 paths and 4 hops");
  std::vector<std::vector<int>> perms;
  std::vector<int> base(P);
  std::iota(base.begin(), base.end(), 0);
  do perms.push_back(base);
  while (std::next_permutation(base.begin(), base.end()));

  double best = -1.0;
  std::vector<int> choice(H, 0), best_choice(H, 0);
  auto rec = [&](auto&& self, int h, const std::vector<double>& mins) -> void {
    if (h == H) {
      double s = std::accumulate(mins.begin(), mins.end(), 0.0);
      if (s > best + 1e-12) {
        best = s;
        best_choice = choice;
      }
      return;
    }
    std::vector<double> next(P);
    for (std::size_t k = 0; k < perms.size(); ++k) {
      for (int p = 0; p < P; ++p) next[p] = std::min(mins[p], rates[h][perms[k][p]]);
      choice[h] = static_cast<int>(k);
      self(self, h + 1, next);
    }
  };
  std::vector<double> first(P);
  for (int p = 0; p < P; ++p) first[p] = rates[0][p];
  rec(rec, 1, first);

  std::vector<std::vector<int>> g(P, std::vector<int>(H));
  for (int p = 0; p < P; ++p) {
    g[p][0] = p;
    for (int h = 1; h < H; ++h) g[p][h] = perms[best_choice[h]][p];
  }
  return from_global(std::move(g));
}

struct BalancingObjectives {
  double sum_min = 0.0;
  double sum_absdiff = 0.0;
};

// Link i upstream feeds link perm[i] downstream.
inline BalancingObjectives balancing_objectives(const std::vector<double>& in, const std::vector<double>& out,
                                                const std::vector<int>& perm) {
  if (in.size() != out.size() || perm.size() != in.size())
    throw std::invalid_argument("balancing_objectives: length mismatch");
  BalancingObjectives b;
  for (std::size_t i = 0; i < in.size(); ++i) {
    double o = out[perm[i]];
    b.sum_min += std::min(in[i], o);
    b.sum_absdiff += std::fabs(in[i] - o);
  }
  return b;
}

enum class RecodeMode { SelectiveMix, PerPathIndependent, ForwardOnly };

// Intermediate node; buffers are indexed by global path. With prune set, columns below
// the sender's floor are dropped, which is only sound in symbolic mode.
class NodeState {
public:
  NodeState(int paths, RecodeMode mode, bool prune = true)
      : mode_(mode), prune_(prune), per_path_(paths), last_kind_(paths, PacketKind::New) {}

  RecodeMode mode() const { return mode_; }
  const Subspace& new_buffer() const { return fresh_; }
  const Subspace& repair_buffer() const { return repair_; }
  const Subspace& path_buffer(int p) const { return per_path_[p]; }

  // arrivals[p] is what came in on global path p this slot, if anything.
  std::vector<std::optional<CodedPacket>> recode(const std::vector<std::optional<CodedPacket>>& arrivals, Rng& rng) {
    int P = static_cast<int>(arrivals.size());
    std::vector<std::optional<CodedPacket>> out(P);
    if (mode_ == RecodeMode::ForwardOnly) {
      for (int p = 0; p < P; ++p) out[p] = arrivals[p];
      return out;
    }
    for (int p = 0; p < P; ++p) {
      if (!arrivals[p]) continue;
      const CodedPacket& a = *arrivals[p];
      raise_floor(a.floor);
      if (a.span() == 0) continue;
      if (mode_ == RecodeMode::PerPathIndependent) per_path_[p].insert(to_combination(a));
      else if (is_repair(a.kind)) repair_.insert(to_combination(a));
      else fresh_.insert(to_combination(a));
    }
    for (int p = 0; p < P; ++p) {
      const Subspace* src = nullptr;
      PacketKind kind = PacketKind::New;
      if (mode_ == RecodeMode::PerPathIndependent) {
        src = &per_path_[p];
        if (arrivals[p]) kind = arrivals[p]->kind;
      } else {
        // With no arrival the path keeps the kind it carried last.
        if (arrivals[p]) last_kind_[p] = arrivals[p]->kind;
        kind = last_kind_[p];
        src = is_repair(kind) ? &repair_ : &fresh_;
        if (src->empty()) {
          src = is_repair(kind) ? &fresh_ : &repair_;
          kind = is_repair(kind) ? PacketKind::New : PacketKind::Fec;
        }
      }
      if (src->empty()) continue;
      Combination c = src->recode(rng);
      CodedPacket pkt;
      pkt.w_min = c.lo;
      pkt.w_max = c.hi();
      pkt.coeffs = std::move(c.coef);
      pkt.payload = std::move(c.payload);
      pkt.kind = kind;
      pkt.path = p;
      pkt.floor = floor_;
      if (arrivals[p]) {
        pkt.seq_id = arrivals[p]->seq_id;
        pkt.send_slot = arrivals[p]->send_slot;
      }
      out[p] = std::move(pkt);
    }
    return out;
  }

private:
  void raise_floor(std::uint64_t f) {
    if (!prune_ || f <= floor_) return;
    floor_ = f;
    fresh_.set_floor(f);
    repair_.set_floor(f);
    for (auto& s : per_path_) s.set_floor(f);
  }

  RecodeMode mode_;
  bool prune_;
  std::uint64_t floor_ = 1;
  Subspace fresh_, repair_;
  std::vector<Subspace> per_path_;
  std::vector<PacketKind> last_kind_;
};

} // namespace acrlnc
