#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace acrlnc {

// What a run leaves behind. Vectors are indexed by raw packet (0-based here).
struct Trace {
  int rtt = 0;
  int paths = 1;
  std::vector<std::int64_t> first_send;
  std::vector<std::int64_t> in_order;        // -1 while undelivered
  std::vector<std::uint64_t> innovative_per_path;
  std::int64_t sender_slots = 0;             // slots simulated at the sender
  std::int64_t silent_slots = 0;             // slots in which no feedback reached the sender
  std::uint64_t sent = 0;
  std::uint64_t sent_new = 0, sent_fec = 0, sent_fbfec = 0, sent_repeat = 0;

  std::size_t packets() const { return first_send.size(); }
  double lambda() const {
    return sender_slots > 0 ? static_cast<double>(silent_slots) / static_cast<double>(sender_slots) : 0.0;
  }
};

struct RunMetrics {
  double throughput = 0.0;  // packets per slot, all paths together
  double mean_delay = 0.0;
  double max_delay = 0.0;
};

// Throughput counts slots from the first transmission to the transmission that
// completed the last in-order delivery (arrival minus the rtt/2 flight).
inline RunMetrics measure(const Trace& t) {
  if (t.first_send.empty()) throw std::invalid_argument("measure: empty trace");
  if (t.in_order.size() != t.first_send.size()) throw std::invalid_argument("measure: malformed trace");
  RunMetrics m;
  std::int64_t last = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < t.first_send.size(); ++i) {
    if (t.in_order[i] < 0 || t.first_send[i] < 0)
      throw std::runtime_error("measure: packet " + std::to_string(i + 1) + " never delivered in order");
    double d = static_cast<double>(t.in_order[i] - t.first_send[i]);
    sum += d;
    m.max_delay = std::max(m.max_delay, d);
    last = std::max(last, t.in_order[i]);
  }
  m.mean_delay = sum / static_cast<double>(t.first_send.size());
  double slots = static_cast<double>(last - t.rtt / 2 + 1);
  m.throughput = static_cast<double>(t.first_send.size()) / slots;
  return m;
}

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

inline Stat mean_std(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("aggregate: no values");
  Stat s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct Summary {
  Stat throughput, mean_delay, max_delay;
  std::size_t runs = 0;
};

inline Summary aggregate(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: empty list");
  std::vector<double> a, b, c;
  for (auto& r : runs) {
    a.push_back(r.throughput);
    b.push_back(r.mean_delay);
    c.push_back(r.max_delay);
  }
  return Summary{mean_std(a), mean_std(b), mean_std(c), runs.size()};
}

} // namespace acrlnc
