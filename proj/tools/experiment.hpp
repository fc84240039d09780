#pragma once

// Experiment files: parsing, sweep expansion, seeded runs and result writing.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include <acrlnc/analysis.hpp>
#include <acrlnc/simulation.hpp>

namespace acrlnc::exp {

using json = nlohmann::json;

// An eps entry is either a number or the name of a swept variable.
using EpsCell = std::variant<double, std::string>;

struct BoundsSettings {
  double p_e = 1e-3;
  std::optional<double> lambda;        // unset: measured from a paired MP run
  std::vector<int> rtt_sweep;
  std::vector<double> f_sweep;
  bool forward_only = false;
};

struct Experiment {
  std::string name = "experiment";
  int hops = 1, paths = 1, rtt = 20;
  std::vector<std::vector<EpsCell>> eps;  // [hop][link]
  std::map<std::string, std::vector<double>> sweep;
  FeedbackMode feedback = FeedbackMode::EndToEnd;
  std::vector<Protocol> protocols{Protocol::MpAcrlnc};
  RecodeMode recode = RecodeMode::SelectiveMix;
  bool natural_matching = true;
  double th = 0.0;
  std::uint64_t o_bar = 0;
  double window_factor = 0.0;  // > 0 overrides o_bar with f * P * (rtt - 1)
  double prior = 0.5;
  std::size_t rate_horizon = 0;
  int iterations = 1;
  std::uint64_t base_seed = 1;
  std::uint64_t packets = 5000;
  std::int64_t sr_window = -1;
  BoundsSettings bounds;
  std::string hash;  // of the canonical config text

  std::size_t cells() const { return sweep.empty() ? 1 : sweep.begin()->second.size(); }
};

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline FeedbackMode parse_feedback(const std::string& s) {
  if (s == "end_to_end") return FeedbackMode::EndToEnd;
  if (s == "hop_by_hop") return FeedbackMode::HopByHop;
  throw std::invalid_argument("config: unknown feedback mode '" + s + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace detail

inline const char* to_string(FeedbackMode f) { return f == FeedbackMode::EndToEnd ? "end_to_end" : "hop_by_hop"; }

inline Experiment parse_experiment(const json& j) {
  Experiment e;
  try {
    e.name = detail::get_or<std::string>(j, "name", e.name);
    e.hops = detail::get_or(j, "hops", 1);
    e.paths = j.at("paths").get<int>();
    e.rtt = j.at("rtt").get<int>();
    const json& rows = j.at("eps");
    bool by_path = detail::get_or<std::string>(j, "eps_layout", "hop_major") == "path_major";
    std::vector<std::vector<EpsCell>> grid;
    for (const auto& row : rows) {
      std::vector<EpsCell> r;
      for (const auto& v : row) {
        if (v.is_number()) r.emplace_back(v.get<double>());
        else if (v.is_string()) r.emplace_back(v.get<std::string>());
        else throw std::invalid_argument("config: eps entries must be numbers or sweep names");
      }
      grid.push_back(std::move(r));
    }
    if (by_path) {
      std::vector<std::vector<EpsCell>> t;
      if (!grid.empty())
        for (std::size_t h = 0; h < grid[0].size(); ++h) {
          std::vector<EpsCell> r;
          for (auto& row : grid) {
            if (row.size() != grid[0].size()) throw std::invalid_argument("config: ragged eps matrix");
            r.push_back(row[h]);
          }
          t.push_back(std::move(r));
        }
      grid = std::move(t);
    }
    e.eps = std::move(grid);
    if (j.contains("sweep"))
      for (auto& [k, v] : j.at("sweep").items()) e.sweep[k] = v.get<std::vector<double>>();
    e.feedback = detail::parse_feedback(detail::get_or<std::string>(j, "feedback", "end_to_end"));
    if (j.contains("protocols")) {
      e.protocols.clear();
      for (auto& p : j.at("protocols")) e.protocols.push_back(parse_protocol(p.get<std::string>()));
    }
    e.recode = parse_recode(detail::get_or<std::string>(j, "recode", "selective_mix"));
    e.natural_matching = detail::get_or(j, "natural_matching", true);
    e.th = detail::get_or(j, "th", 0.0);
    e.o_bar = detail::get_or<std::uint64_t>(j, "o_bar", 0);
    e.window_factor = detail::get_or(j, "window_factor", 0.0);
    e.prior = detail::get_or(j, "prior", 0.5);
    e.rate_horizon = detail::get_or<std::size_t>(j, "rate_horizon", 0);
    e.iterations = detail::get_or(j, "iterations", 1);
    e.base_seed = detail::get_or<std::uint64_t>(j, "base_seed", 1);
    e.packets = detail::get_or<std::uint64_t>(j, "packet_count", 5000);
    e.sr_window = detail::get_or<std::int64_t>(j, "sr_window", -1);
    if (j.contains("bounds")) {
      const json& b = j.at("bounds");
      e.bounds.p_e = detail::get_or(b, "p_e", 1e-3);
      if (b.contains("lambda") && b.at("lambda").is_number()) e.bounds.lambda = b.at("lambda").get<double>();
      e.bounds.rtt_sweep = detail::get_or(b, "rtt_sweep", std::vector<int>{});
      e.bounds.f_sweep = detail::get_or(b, "f_sweep", std::vector<double>{});
      e.bounds.forward_only = detail::get_or(b, "forward_only", false);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("config: ") + ex.what());
  }
  e.hash = fnv1a_hex(j.dump());
  return e;
}

inline Experiment load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument("config: " + path + ": " + ex.what());
  }
  return parse_experiment(j);
}

// Values of the swept variables in one cell.
inline std::map<std::string, double> cell_values(const Experiment& e, std::size_t cell) {
  std::map<std::string, double> v;
  for (auto& [k, xs] : e.sweep) v[k] = xs.at(cell);
  return v;
}

inline Topology topology_at(const Experiment& e, std::size_t cell) {
  auto vals = cell_values(e, cell);
  Topology t;
  t.hops = e.hops;
  t.paths = e.paths;
  t.rtt = e.rtt;
  t.feedback = e.feedback;
  for (auto& row : e.eps) {
    std::vector<double> r;
    for (auto& c : row) {
      if (auto* x = std::get_if<double>(&c)) {
        r.push_back(*x);
        continue;
      }
      const auto& name = std::get<std::string>(c);
      auto it = vals.find(name);
      if (it == vals.end()) throw std::invalid_argument("config: eps refers to unknown sweep variable '" + name + "'");
      r.push_back(it->second);
    }
    t.eps.push_back(std::move(r));
  }
  return t;
}

inline SimConfig sim_config(const Experiment& e, std::size_t cell, Protocol p) {
  SimConfig c;
  c.topo = topology_at(e, cell);
  c.protocol = p;
  c.recode = e.recode;
  c.natural_matching = e.natural_matching;
  c.th = e.th;
  c.o_bar = e.o_bar;
  if (e.window_factor > 0.0) {
    // The window in use: all paths for the multipath senders, one path otherwise.
    int senders_paths = p == Protocol::SpAcrlncPerPath || p == Protocol::BestPathAcrlnc ? 1 : e.paths;
    c.o_bar = static_cast<std::uint64_t>(std::llround(e.window_factor * senders_paths * (e.rtt - 1)));
  }
  c.prior = e.prior;
  c.rate_horizon = e.rate_horizon;
  c.packets = e.packets;
  c.sr_window = e.sr_window;
  return c;
}

// Everything that can be checked before a run.
inline void validate(const Experiment& e) {
  if (e.iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
  if (e.protocols.empty()) throw std::invalid_argument("config: no protocols");
  std::size_t n = e.cells();
  for (auto& [k, xs] : e.sweep)
    if (xs.size() != n) throw std::invalid_argument("config: sweep lists must have equal length ('" + k + "')");
  if (e.window_factor != 0.0 && e.window_factor < 1.0) throw std::invalid_argument("config: window_factor below 1");
  for (std::size_t c = 0; c < n; ++c)
    for (Protocol p : e.protocols) acrlnc::validate(sim_config(e, c, p));
}

struct RunRow {
  std::size_t cell = 0;
  Protocol protocol = Protocol::MpAcrlnc;
  int iteration = 0;
  std::uint64_t seed = 0;
  RunMetrics m;
  double lambda = 0.0;
  std::uint64_t sent = 0;
};

struct Task {
  std::size_t cell;
  Protocol protocol;
  int iteration;
};

// Runs fn(i) for i in [0, n) on `workers` threads. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next++;
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// Seeds depend on the iteration only, so every protocol and cell sees the same
// erasure realization for a given iteration.
inline std::uint64_t seed_for(const Experiment& e, int iteration) { return e.base_seed + static_cast<std::uint64_t>(iteration); }

inline std::vector<RunRow> run_tasks(const Experiment& e, const std::vector<Task>& tasks, int workers) {
  std::vector<RunRow> rows(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    RunRow r;
    r.cell = t.cell;
    r.protocol = t.protocol;
    r.iteration = t.iteration;
    r.seed = seed_for(e, t.iteration);
    Trace tr = simulate(sim_config(e, t.cell, t.protocol), r.seed);
    r.m = measure(tr);
    r.lambda = tr.lambda();
    r.sent = tr.sent;
    rows[i] = r;
  });
  return rows;
}

inline std::vector<Task> all_tasks(const Experiment& e, const std::vector<std::size_t>& cells) {
  std::vector<Task> out;
  for (std::size_t c : cells)
    for (Protocol p : e.protocols)
      for (int it = 0; it < e.iterations; ++it) out.push_back(Task{c, p, it});
  return out;
}

inline std::string sweep_header(const Experiment& e) {
  std::string s;
  for (auto& [k, _] : e.sweep) s += "," + k;
  return s;
}

inline std::string sweep_fields(const Experiment& e, std::size_t cell) {
  std::ostringstream o;
  o.precision(10);
  for (auto& [k, v] : cell_values(e, cell)) o << "," << v;
  return o.str();
}

inline void write_runs_csv(std::ostream& os, const Experiment& e, const std::vector<RunRow>& rows) {
  os << "config_hash,cell" << sweep_header(e)
     << ",protocol,iteration,seed,throughput,mean_delay,max_delay,lambda,sent\n";
  os.precision(10);
  for (auto& r : rows)
    os << e.hash << "," << r.cell << sweep_fields(e, r.cell) << "," << to_string(r.protocol) << "," << r.iteration
       << "," << r.seed << "," << r.m.throughput << "," << r.m.mean_delay << "," << r.m.max_delay << "," << r.lambda
       << "," << r.sent << "\n";
}

// One JSON object per (cell, protocol), in input order.
inline void write_summary_jsonl(std::ostream& os, const Experiment& e, const std::vector<RunRow>& rows) {
  std::map<std::pair<std::size_t, int>, std::vector<RunMetrics>> groups;
  std::vector<std::pair<std::size_t, int>> order;
  std::map<std::pair<std::size_t, int>, double> lambda;
  for (auto& r : rows) {
    auto key = std::make_pair(r.cell, static_cast<int>(r.protocol));
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r.m);
    lambda[key] += r.lambda;
  }
  for (auto& key : order) {
    auto& g = groups[key];
    Summary s = aggregate(g);
    json o;
    o["config_hash"] = e.hash;
    o["name"] = e.name;
    o["cell"] = key.first;
    for (auto& [k, v] : cell_values(e, key.first)) o["sweep"][k] = v;
    o["protocol"] = to_string(static_cast<Protocol>(key.second));
    o["base_seed"] = e.base_seed;
    o["iterations"] = s.runs;
    o["throughput"] = {{"mean", s.throughput.mean}, {"std", s.throughput.std}};
    o["mean_delay"] = {{"mean", s.mean_delay.mean}, {"std", s.mean_delay.std}};
    o["max_delay"] = {{"mean", s.max_delay.mean}, {"std", s.max_delay.std}};
    o["lambda"] = lambda[key] / static_cast<double>(g.size());
    os << o.dump() << "\n";
  }
}

// Bounds of one cell. For multi-hop topologies the global paths of the natural
// matching (or the identity, when matching is off) stand in for the paths.
inline BoundReport cell_bounds(const Experiment& e, std::size_t cell, int rtt, double f, double lambda) {
  Topology t = topology_at(e, cell);
  BoundInputs in;
  in.rtt = rtt;
  in.p_e = e.bounds.p_e;
  in.lambda = lambda;
  if (f > 0.0) in.o_bar = static_cast<std::uint64_t>(std::llround(f * e.paths * (rtt - 1)));
  else if (e.o_bar) in.o_bar = e.o_bar;
  if (t.hops == 1) {
    for (double x : t.eps[0]) in.eps.push_back(x);
    return bounds(in);
  }
  SimConfig c;
  c.topo = t;
  c.natural_matching = e.natural_matching;
  Matching m = matching_for(c);
  return mh_bounds(in, m, rates_from_eps(t.eps), e.bounds.forward_only);
}

// lambda of the MP protocol on this cell: mean over `iterations` paired runs.
inline double measured_lambda(const Experiment& e, std::size_t cell, int iterations) {
  Protocol p = e.hops > 1 ? Protocol::MhAcrlnc : Protocol::MpAcrlnc;
  double acc = 0.0;
  for (int it = 0; it < iterations; ++it) acc += simulate(sim_config(e, cell, p), seed_for(e, it)).lambda();
  return acc / iterations;
}

inline void write_bounds_csv(std::ostream& os, const Experiment& e, const std::vector<std::size_t>& cells) {
  os << "config_hash,cell" << sweep_header(e)
     << ",rtt,window_factor,lambda,capacity,throughput_ub,throughput_lb,mean_delay_ub,t_max,max_delay_ub,"
        "genie_delay_lb,prod_delay_lb,f_eta,f_capacity\n";
  os.precision(10);
  std::vector<int> rtts = e.bounds.rtt_sweep.empty() ? std::vector<int>{e.rtt} : e.bounds.rtt_sweep;
  std::vector<double> fs = e.bounds.f_sweep.empty() ? std::vector<double>{0.0} : e.bounds.f_sweep;
  for (std::size_t cell : cells) {
    double lambda = e.bounds.lambda ? *e.bounds.lambda : measured_lambda(e, cell, 1);
    for (int rtt : rtts)
      for (double f : fs) {
        BoundReport b = cell_bounds(e, cell, rtt, f, lambda);
        double f_used = f > 0.0 ? f : (e.o_bar ? static_cast<double>(e.o_bar) / (e.paths * (rtt - 1)) : 2.0);
        os << e.hash << "," << cell << sweep_fields(e, cell) << "," << rtt << "," << f_used << "," << lambda << ","
           << b.capacity << "," << b.throughput_ub << "," << b.throughput_lb << "," << b.mean_delay_ub << ","
           << b.t_max << "," << b.max_delay_ub << "," << b.genie_delay_lb << "," << b.prod_delay_lb << ","
           << b.f_eta << "," << b.f_capacity << "\n";
      }
  }
}

// Minimal CSV reading for files this tool wrote (no quoting).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("csv: missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file");
  t.header = split_csv_line(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  return t;
}

// Joins per-iteration simulation rows with bound rows on the cell index and emits
// per-(cell, protocol) factors against the bounds.
inline void write_compare_csv(std::ostream& os, const Table& sim, const Table& bnd) {
  int s_cell = sim.column("cell"), s_proto = sim.column("protocol"), s_thr = sim.column("throughput"),
      s_mean = sim.column("mean_delay"), s_max = sim.column("max_delay");
  int b_cell = bnd.column("cell"), b_ub = bnd.column("throughput_ub"), b_lb = bnd.column("throughput_lb"),
      b_cap = bnd.column("capacity"), b_mean = bnd.column("mean_delay_ub"), b_max = bnd.column("max_delay_ub"),
      b_genie = bnd.column("genie_delay_lb");
  std::map<std::string, const std::vector<std::string>*> by_cell;
  for (auto& r : bnd.rows)
    if (!by_cell.count(r[b_cell])) by_cell[r[b_cell]] = &r;  // first bound row of a cell

  struct Acc {
    std::vector<double> thr, mean, max;
  };
  std::map<std::pair<long, std::string>, Acc> acc;
  for (auto& r : sim.rows) {
    auto& a = acc[{std::stol(r[s_cell]), r[s_proto]}];
    a.thr.push_back(std::stod(r[s_thr]));
    a.mean.push_back(std::stod(r[s_mean]));
    a.max.push_back(std::stod(r[s_max]));
  }
  os << "cell,protocol,throughput,mean_delay,max_delay,F_eta_ub,F_eta_lb,F_capacity,F_D_mean,F_D_mean_ub,F_D_max_ub\n";
  os.precision(10);
  for (auto& [key, a] : acc) {
    auto it = by_cell.find(std::to_string(key.first));
    if (it == by_cell.end()) throw std::invalid_argument("compare: no bounds for cell " + std::to_string(key.first));
    const auto& b = *it->second;
    double thr = mean_std(a.thr).mean, dm = mean_std(a.mean).mean, dx = mean_std(a.max).mean;
    os << key.first << "," << key.second << "," << thr << "," << dm << "," << dx << ","
       << thr / std::stod(b[b_ub]) << "," << thr / std::stod(b[b_lb]) << "," << thr / std::stod(b[b_cap]) << ","
       << dm / std::stod(b[b_genie]) << "," << dm / std::stod(b[b_mean]) << "," << dx / std::stod(b[b_max]) << "\n";
  }
}

} // namespace acrlnc::exp
