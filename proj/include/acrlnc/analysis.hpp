#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "multihop.hpp"
#include "protocol.hpp"

namespace acrlnc {

struct BoundInputs {
  std::vector<double> eps;  // per path, or 1 - r for global paths
  int rtt = 20;
  std::uint64_t o_bar = 0;  // 0: 2k with k = P(rtt-1)
  double p_e = 1e-3;
  double lambda = 0.0;
  double capacity = -1.0;   // < 0: sum of (1 - eps)

  int paths() const { return static_cast<int>(eps.size()); }
  double window() const { return static_cast<double>(paths()) * (rtt - 1); }
  double size_limit() const { return o_bar ? static_cast<double>(o_bar) : 2.0 * window(); }
  double window_factor() const { return size_limit() / window(); }
};

struct BoundReport {
  double throughput_ub = 0, throughput_lb = 0, capacity = 0;
  double mean_delay_ub = 0, max_delay_ub = 0, t_max = 0;
  double genie_delay_lb = 0, prod_delay_lb = 0;
  double f_eta = 0, f_capacity = 0;
};

inline double mean_erasure(const std::vector<double>& eps) {
  if (eps.empty()) throw std::invalid_argument("bounds: no paths");
  return std::accumulate(eps.begin(), eps.end(), 0.0) / static_cast<double>(eps.size());
}

// Per-slot distance between two Bernoulli(received) laws.
inline double bhattacharyya_bernoulli(double r, double r_prime) {
  double bc = std::sqrt(r * r_prime) + std::sqrt((1.0 - r) * (1.0 - r_prime));
  if (bc <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -std::log(std::min(bc, 1.0)));
}

// Distance between the two laws over a run of rtt independent slots.
inline double window_distance(double r, double r_prime, int rtt) {
  double l = bhattacharyya_bernoulli(r, r_prime);
  return std::isinf(l) ? l : rtt * l;
}

inline std::int64_t fec_count(double eps, int rtt) { return round_half_away(eps * (rtt - 1)); }

// Highest rate a path can show within one round trip.
inline double rate_upper(double eps, int rtt) {
  if (rtt < 2) throw std::invalid_argument("bounds: rtt must be >= 2");
  double denom = static_cast<double>(rtt - 1 + fec_count(eps, rtt));
  double r = (1.0 - eps) + std::sqrt(rtt * eps * (1.0 - eps)) / denom;
  return std::clamp(r, 0.0, 1.0);
}

inline double capacity_of(const BoundInputs& in) {
  if (in.capacity >= 0.0) return in.capacity;
  double c = 0.0;
  for (double e : in.eps) c += 1.0 - e;
  return c;
}

inline double path_throughput_ub(double eps, int rtt) {
  double r = 1.0 - eps;
  return std::max(0.0, r - window_distance(rate_upper(eps, rtt), r, rtt));
}

inline double throughput_ub(const BoundInputs& in) {
  double s = 0.0;
  for (double e : in.eps) s += path_throughput_ub(e, in.rtt);
  return s;
}

// Share of useless transmissions over a full window of a path.
inline double end_window_loss(double eps, int rtt, double f) {
  double k = rtt - 1;
  double n_ew = (1.0 - std::erf(1.0 / std::sqrt(2.0))) * (1.0 - eps) * rtt;
  double n_w = (k + k * eps + k * eps * eps) * f + 1.0;
  return n_ew / n_w;
}

inline double throughput_lb(const BoundInputs& in) {
  double f = in.window_factor();
  if (f < 1.0) throw std::invalid_argument("bounds: window factor below 1");
  double s = 0.0;
  for (double e : in.eps) s += std::max(0.0, path_throughput_ub(e, in.rtt) - end_window_loss(e, in.rtt, f));
  return s;
}

inline double binomial_pmf(int n, int i, double p) {
  if (p <= 0.0) return i == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return i == n ? 1.0 : 0.0;
  double lg = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
  return std::exp(lg + i * std::log(p) + (n - i) * std::log1p(-p));
}

struct MeanDelayTerms {
  double eps_bar = 0, eps_bar_max = 0, p_end = 0, p_no_retx = 0;
  double no_feedback = 0, nack = 0, ack = 0, bound = 0;
};

inline MeanDelayTerms mean_delay_terms(const BoundInputs& in) {
  if (!(in.lambda >= 0.0 && in.lambda <= 1.0)) throw std::invalid_argument("bounds: lambda outside [0,1]");
  MeanDelayTerms t;
  const double rtt = in.rtt;
  t.eps_bar = mean_erasure(in.eps);
  t.eps_bar_max = t.eps_bar + std::sqrt(2.0 * rtt * (1.0 - t.eps_bar) * t.eps_bar) / (2.0 * rtt);
  if (t.eps_bar_max >= 1.0) {
    t.bound = std::numeric_limits<double>::infinity();
    return t;
  }
  const double o = in.size_limit();
  const int n = static_cast<int>(std::llround(o));
  const double k_p = in.window() / in.paths();
  const double m_e = o * t.eps_bar;
  t.p_end = std::pow(1.0 - t.eps_bar, o);
  int top = static_cast<int>(std::floor(o * t.eps_bar_max));
  for (int i = 1; i <= std::min(top, n); ++i) t.p_no_retx += binomial_pmf(n, i, t.eps_bar);
  const double q = 1.0 / (1.0 - t.eps_bar_max);
  const double fresh = t.p_end * (m_e + k_p);
  t.no_feedback = q * (fresh + (1.0 - t.p_end) * rtt);
  t.nack = t.eps_bar_max * q *
           (t.p_no_retx * ((1.0 - t.p_end) * rtt + fresh) + (1.0 - t.p_no_retx) * (rtt + fresh));
  t.ack = (1.0 - t.eps_bar_max) * (fresh + t.p_no_retx * rtt + (1.0 - t.p_no_retx) * rtt);
  t.bound = in.lambda * t.no_feedback + (1.0 - in.lambda) * (t.nack + t.ack);
  return t;
}

inline double mean_delay_ub(const BoundInputs& in) { return mean_delay_terms(in).bound; }

struct MaxDelay {
  double t_max = 0;
  double d_max = 0;
};

inline MaxDelay max_delay_ub(const BoundInputs& in) {
  if (!(in.p_e > 0.0 && in.p_e < 1.0)) throw std::invalid_argument("bounds: P_e must lie in (0,1)");
  double eb = mean_erasure(in.eps);
  if (eb >= 1.0) throw std::invalid_argument("bounds: mean erasure of 1");
  double e_max = *std::max_element(in.eps.begin(), in.eps.end());
  double alpha = e_max > 0.0 ? std::max(0.0, std::log(e_max / in.p_e)) : 0.0;
  double o = in.size_limit();
  double s = 1.0 - eb;
  double t = 1.0 + (o - 1.0) / s + alpha / (4.0 * s * s) + std::sqrt(alpha * (alpha + 4.0 * s * (o - 1.0))) / 2.0;
  MaxDelay m;
  m.t_max = std::ceil(t);
  m.d_max = std::ceil(in.rtt / 2.0) + std::ceil(m.t_max / in.paths());
  return m;
}

inline double genie_delay_lb(const BoundInputs& in) {
  double eb = mean_erasure(in.eps);
  if (eb >= 1.0) throw std::invalid_argument("bounds: mean erasure of 1");
  return in.rtt / 2.0 + 1.0 / (1.0 - eb);
}

inline double prod_delay_lb(const BoundInputs& in) {
  double prod = 1.0;
  for (double e : in.eps) prod *= e;
  if (prod >= 1.0) throw std::invalid_argument("bounds: every path always erased");
  return in.rtt / 2.0 + 1.0 / (1.0 - prod);
}

inline BoundReport bounds(const BoundInputs& in) {
  BoundReport b;
  b.capacity = capacity_of(in);
  b.throughput_ub = throughput_ub(in);
  b.throughput_lb = throughput_lb(in);
  b.mean_delay_ub = mean_delay_ub(in);
  MaxDelay md = max_delay_ub(in);
  b.t_max = md.t_max;
  b.max_delay_ub = md.d_max;
  b.genie_delay_lb = genie_delay_lb(in);
  b.prod_delay_lb = prod_delay_lb(in);
  b.f_eta = b.throughput_ub > 0 ? 100.0 * b.throughput_lb / b.throughput_ub : 0.0;
  b.f_capacity = b.capacity > 0 ? 100.0 * b.throughput_lb / b.capacity : 0.0;
  return b;
}

// Multi-hop: each global path behaves like a single link with rate r_Gp; capacity is the min cut.
inline BoundReport mh_bounds(BoundInputs in, const Matching& m, const RateGrid& rates, bool forward_only = false) {
  auto rg = global_rates(m, rates, forward_only);
  in.eps.clear();
  for (double r : rg) in.eps.push_back(1.0 - r);
  in.capacity = min_cut_capacity(rates);
  return bounds(in);
}

} // namespace acrlnc
