#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace acrlnc {

struct AllocationProblem {
  std::vector<double> rates;  // free paths only
  double delta = 0.0;
};

// Indices refer to positions in AllocationProblem::rates, ascending.
struct Partition {
  std::vector<int> new_paths;
  std::vector<int> fbfec_paths;
};

namespace detail {

inline constexpr double alloc_tol = 1e-12;

struct Candidate {
  double sum = 0.0;
  double top = 0.0;        // highest rate in the set
  std::vector<int> idx;    // sorted
};

// Smaller repair mass first, then the slowest top member, then index order.
inline bool preferred(const Candidate& a, const Candidate& b) {
  if (a.sum < b.sum - alloc_tol) return true;
  if (a.sum > b.sum + alloc_tol) return false;
  if (a.top < b.top - alloc_tol) return true;
  if (a.top > b.top + alloc_tol) return false;
  return a.idx < b.idx;
}

inline Partition split(std::size_t n, const std::vector<int>& fb) {
  Partition out;
  out.fbfec_paths = fb;
  std::sort(out.fbfec_paths.begin(), out.fbfec_paths.end());
  for (int i = 0; i < static_cast<int>(n); ++i)
    if (!std::binary_search(out.fbfec_paths.begin(), out.fbfec_paths.end(), i)) out.new_paths.push_back(i);
  return out;
}

inline Candidate make_candidate(const std::vector<double>& r, std::vector<int> idx) {
  Candidate c;
  std::sort(idx.begin(), idx.end());
  for (int i : idx) {
    c.sum += r[i];
    c.top = std::max(c.top, r[i]);
  }
  c.idx = std::move(idx);
  return c;
}

// Trivial cases shared by both solvers; returns true when `out` is settled.
inline bool degenerate(const AllocationProblem& pr, Partition& out) {
  const auto& r = pr.rates;
  if (pr.delta <= 0.0) {
    out = split(r.size(), {});
    return true;
  }
  double total = std::accumulate(r.begin(), r.end(), 0.0);
  if (total < pr.delta - alloc_tol) {
    std::vector<int> all(r.size());
    std::iota(all.begin(), all.end(), 0);
    out = split(r.size(), all);
    return true;
  }
  return false;
}

} // namespace detail

// Smallest repair subset whose rate mass covers delta; the rest carry new packets.
// Depth-first search over rate-sorted paths with bound pruning.
inline Partition bit_fill(const AllocationProblem& pr) {
  if (pr.rates.empty()) throw std::invalid_argument("bit_fill: no paths");
  Partition out;
  if (detail::degenerate(pr, out)) return out;

  const auto& r = pr.rates;
  std::vector<int> order(r.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r[a] < r[b]; });
  std::vector<double> tail(order.size() + 1, 0.0);
  for (std::size_t i = order.size(); i-- > 0;) tail[i] = tail[i + 1] + r[order[i]];

  bool have = false;
  detail::Candidate best;
  std::vector<int> pick;

  auto dfs = [&](auto&& self, std::size_t pos, double sum) -> void {
    if (have && sum > best.sum + detail::alloc_tol) return;
    if (sum >= pr.delta - detail::alloc_tol) {
      auto c = detail::make_candidate(r, pick);
      if (!have || detail::preferred(c, best)) {
        best = std::move(c);
        have = true;
      }
      return;
    }
    if (pos == order.size() || sum + tail[pos] < pr.delta - detail::alloc_tol) return;
    pick.push_back(order[pos]);
    self(self, pos + 1, sum + r[order[pos]]);
    pick.pop_back();
    self(self, pos + 1, sum);
  };
  dfs(dfs, 0, 0.0);
  return detail::split(r.size(), best.idx);
}

// Exhaustive reference over all 2^P subsets.
inline Partition bit_fill_oracle(const AllocationProblem& pr) {
  const auto& r = pr.rates;
  if (r.empty()) throw std::invalid_argument("bit_fill_oracle: no paths");
  if (r.size() > 20) throw std::invalid_argument("bit_fill_oracle: more than 20 paths");
  Partition out;
  if (detail::degenerate(pr, out)) return out;
  bool have = false;
  detail::Candidate best;
  for (std::uint32_t mask = 0; mask < (1u << r.size()); ++mask) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (mask >> i & 1u) idx.push_back(static_cast<int>(i));
    auto c = detail::make_candidate(r, idx);
    if (c.sum < pr.delta - detail::alloc_tol) continue;
    if (!have || detail::preferred(c, best)) {
      best = std::move(c);
      have = true;
    }
  }
  return detail::split(r.size(), best.idx);
}

} // namespace acrlnc
