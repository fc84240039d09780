#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "baselines.hpp"
#include "coding.hpp"
#include "metrics.hpp"
#include "multihop.hpp"
#include "network.hpp"
#include "protocol.hpp"

namespace acrlnc {

enum class Protocol { MpAcrlnc, SpAcrlncPerPath, SrArq, SrArqHopByHop, MhAcrlnc, BestPathAcrlnc };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::MpAcrlnc: return "mp_acrlnc";
    case Protocol::SpAcrlncPerPath: return "sp_acrlnc_per_path";
    case Protocol::SrArq: return "sr_arq";
    case Protocol::SrArqHopByHop: return "sr_arq_hop_by_hop";
    case Protocol::MhAcrlnc: return "mh_acrlnc";
    case Protocol::BestPathAcrlnc: return "best_path_acrlnc";
  }
  return "?";
}

inline Protocol parse_protocol(const std::string& s) {
  for (Protocol p : {Protocol::MpAcrlnc, Protocol::SpAcrlncPerPath, Protocol::SrArq, Protocol::SrArqHopByHop,
                     Protocol::MhAcrlnc, Protocol::BestPathAcrlnc})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown protocol '" + s + "'");
}

inline const char* to_string(RecodeMode m) {
  switch (m) {
    case RecodeMode::SelectiveMix: return "selective_mix";
    case RecodeMode::PerPathIndependent: return "per_path";
    case RecodeMode::ForwardOnly: return "forward_only";
  }
  return "?";
}

inline RecodeMode parse_recode(const std::string& s) {
  for (RecodeMode m : {RecodeMode::SelectiveMix, RecodeMode::PerPathIndependent, RecodeMode::ForwardOnly})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown recode mode '" + s + "'");
}

struct SimConfig {
  Topology topo;
  Protocol protocol = Protocol::MpAcrlnc;
  RecodeMode recode = RecodeMode::SelectiveMix;
  bool natural_matching = true;
  double th = 0.0;
  std::uint64_t o_bar = 0;       // 0: twice the window of the sender in use
  double prior = 0.5;
  std::size_t rate_horizon = 0;
  std::uint64_t packets = 5000;
  std::int64_t sr_window = -1;   // -1: one round trip worth of packets, 0: unlimited
  bool payload = false;          // carry real bytes (coded protocols, single-hop only)
  std::size_t payload_bytes = 16;
};

inline void validate(const SimConfig& c) {
  validate(c.topo);
  if (c.packets == 0) throw std::invalid_argument("config: packet_count must be positive");
  if ((c.protocol == Protocol::MhAcrlnc || c.protocol == Protocol::BestPathAcrlnc) &&
      c.topo.feedback == FeedbackMode::HopByHop)
    throw std::invalid_argument(std::string("config: ") + to_string(c.protocol) +
                                " supports end-to-end feedback only");
  if (c.payload && c.topo.hops > 1) throw std::invalid_argument("config: payload mode is single-hop only");
  if (c.th < 0.0) throw std::invalid_argument("config: th must be non-negative");
}

// (slot, path) -> erased. The path index is a global path.
using ErasureFn = std::function<bool(std::int64_t, int)>;

namespace detail {

inline std::vector<Bytes> make_raw(std::uint64_t n, std::size_t bytes, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<Bytes> raw(n, Bytes(bytes));
  for (auto& b : raw)
    for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 0xff);
  return raw;
}

inline std::int64_t slot_budget(std::uint64_t packets, int rtt) {
  return static_cast<std::int64_t>(packets) * 2000 + 100 * static_cast<std::int64_t>(rtt) + 10000;
}

// Global in-order slot of packet g is the latest decode slot among 0..g.
inline void close_trace(Trace& t, const std::vector<std::int64_t>& decoded_at) {
  std::int64_t run = -1;
  for (std::size_t g = 0; g < decoded_at.size(); ++g) {
    if (decoded_at[g] < 0) throw std::runtime_error("simulation: packet never delivered");
    run = std::max(run, decoded_at[g]);
    t.in_order[g] = run;
  }
}

inline void count_kind(Trace& t, PacketKind k) {
  ++t.sent;
  switch (k) {
    case PacketKind::New: ++t.sent_new; break;
    case PacketKind::Fec: ++t.sent_fec; break;
    case PacketKind::FbFec: ++t.sent_fbfec; break;
    case PacketKind::EndWindowRepeat: ++t.sent_repeat; break;
  }
}

} // namespace detail

// Coded streams over a one-hop-equivalent network: stream i drives `split[i]` consecutive
// paths. One stream over all paths is MP AC-RLNC; one stream per path is per-path SP.
// ACK iff the packet was not erased.
struct CodedRunResult {
  Trace trace;
  bool payload_ok = true;
};

inline CodedRunResult run_coded_streams(const std::vector<int>& split, int rtt, const SenderConfig& base,
                                        std::uint64_t packets, std::uint64_t seed, const ErasureFn& erased,
                                        bool payload = false, std::size_t payload_bytes = 16) {
  struct Stream {
    MpSender snd;
    Decoder dec;
    int first_path;
    std::vector<std::uint64_t> global_of;  // local index - 1 -> global index
  };
  struct Flight {
    int stream;
    CodedPacket pkt;
    bool erased;
  };
  struct Back {
    int stream;
    FeedbackMsg msg;
  };

  int total_paths = 0;
  std::vector<Stream> streams;
  for (int n : split) {
    SenderConfig c = base;
    c.paths = n;
    c.rtt = rtt;
    streams.push_back(Stream{MpSender(c), Decoder(), total_paths, {}});
    total_paths += n;
  }

  std::vector<Bytes> raw;
  if (payload) raw = detail::make_raw(packets, payload_bytes, seed);
  Rng coef_rng(seed * 0x2545f4914f6cdd1dull + 17);

  CodedRunResult res;
  Trace& t = res.trace;
  t.rtt = rtt;
  t.paths = total_paths;
  t.first_send.assign(packets, -1);
  t.in_order.assign(packets, -1);
  t.innovative_per_path.assign(total_paths, 0);
  std::vector<std::int64_t> decoded_at(packets, -1);
  std::uint64_t decoded = 0, next_global = 0;

  DelayLine<Flight> forward;
  DelayLine<Back> back;
  const std::int64_t budget = detail::slot_budget(packets, rtt);

  for (std::int64_t s = 0;; ++s) {
    if (s > budget) throw std::runtime_error("simulation: slot budget exhausted (liveness failure)");
    for (auto& f : forward.take(s)) {
      Stream& st = streams[f.stream];
      if (!f.erased) {
        std::uint64_t before = st.dec.decoded_prefix();
        IngestReport rep = st.dec.ingest(f.pkt);
        if (rep.innovative) ++t.innovative_per_path[st.first_path + f.pkt.path];
        for (std::uint64_t i = before + 1; i <= st.dec.decoded_prefix(); ++i) {
          decoded_at[st.global_of[i - 1]] = s;
          ++decoded;
        }
      }
      FeedbackMsg m;
      m.about_seq = f.pkt.seq_id;
      m.verdict = f.erased ? Verdict::Nack : Verdict::Ack;
      m.path = f.pkt.path;
      m.deliver_slot = f.pkt.send_slot + rtt;
      m.decoded_prefix = st.dec.decoded_prefix();
      m.rank = st.dec.rank();
      back.push(m.deliver_slot, Back{f.stream, m});
    }
    if (decoded == packets) break;

    auto fb = back.take(s);
    if (fb.empty()) ++t.silent_slots;
    for (auto& b : fb) streams[b.stream].snd.on_feedback(b.msg);
    ++t.sender_slots;

    for (int i = 0; i < static_cast<int>(streams.size()); ++i) {
      Stream& st = streams[i];
      auto can_open = [&]() {
        if (next_global >= packets) return false;
        st.global_of.push_back(next_global);
        t.first_send[next_global] = s;
        ++next_global;
        return true;
      };
      for (const Assignment& a : st.snd.schedule_slot(s, can_open)) {
        CodedPacket pkt = encode_symbolic(a.w_min, a.w_max, coef_rng);
        if (payload) {
          pkt.payload.assign(payload_bytes, 0);
          for (std::uint64_t j = a.w_min; j <= a.w_max; ++j)
            Gf256::axpy(pkt.payload.data(), raw[st.global_of[j - 1]].data(), pkt.coeffs[j - a.w_min],
                        payload_bytes);
        }
        pkt.seq_id = a.seq;
        pkt.kind = a.kind();
        pkt.path = a.path;
        pkt.send_slot = s;
        pkt.floor = st.snd.w_min();
        detail::count_kind(t, pkt.kind);
        bool e = erased(s, st.first_path + a.path);
        forward.push(s + rtt / 2, Flight{i, std::move(pkt), e});
      }
    }
  }
  detail::close_trace(t, decoded_at);
  if (payload) {
    for (auto& st : streams)
      for (std::size_t j = 0; j < st.dec.recovered().size(); ++j)
        if (st.dec.recovered()[j] != raw[st.global_of[j]]) res.payload_ok = false;
  }
  return res;
}

// Selective repeat on every path of a one-hop-equivalent network, sharing one source.
inline Trace run_sr_arq(int paths, int rtt, std::int64_t window, std::uint64_t packets, const ErasureFn& erased) {
  struct Flight {
    int path;
    std::uint64_t seq, item;
    bool erased;
  };
  struct Back {
    int path;
    std::uint64_t seq;
    bool ack;
  };
  std::vector<SrArqState> link(paths);
  for (auto& l : link) {
    l.window = window;
    l.timeout = rtt + 1;
  }
  Trace t;
  t.rtt = rtt;
  t.paths = paths;
  t.first_send.assign(packets, -1);
  t.in_order.assign(packets, -1);
  t.innovative_per_path.assign(paths, 0);
  std::vector<std::int64_t> decoded_at(packets, -1);
  std::uint64_t decoded = 0, next_item = 0;
  DelayLine<Flight> forward;
  DelayLine<Back> back;
  const std::int64_t budget = detail::slot_budget(packets, rtt);

  for (std::int64_t s = 0;; ++s) {
    if (s > budget) throw std::runtime_error("simulation: slot budget exhausted (liveness failure)");
    for (auto& f : forward.take(s)) {
      if (!f.erased && decoded_at[f.item] < 0) {
        decoded_at[f.item] = s;
        ++decoded;
        ++t.innovative_per_path[f.path];
      }
      back.push(s + rtt / 2, Back{f.path, f.seq, !f.erased});
    }
    if (decoded == packets) break;
    auto fb = back.take(s);
    if (fb.empty()) ++t.silent_slots;
    for (auto& b : fb) sr_arq_feedback(link[b.path], b.seq, b.ack);
    ++t.sender_slots;
    for (int p = 0; p < paths; ++p) {
      auto pull = [&](std::uint64_t& item) {
        if (next_item >= packets) return false;
        item = next_item++;
        t.first_send[item] = s;
        return true;
      };
      auto snd = sr_arq_step(link[p], s, pull);
      if (!snd) continue;
      detail::count_kind(t, snd->retransmission ? PacketKind::FbFec : PacketKind::New);
      forward.push(s + rtt / 2, Flight{p, snd->seq, snd->item, erased(s, p)});
    }
  }
  detail::close_trace(t, decoded_at);
  return t;
}

// Selective repeat run independently on each hop of each global path, with
// store-and-forward queues at the intermediate nodes.
inline Trace run_sr_arq_hop_by_hop(const Topology& topo, const Matching& m, std::int64_t window,
                                   std::uint64_t packets, std::uint64_t seed) {
  const int P = topo.paths, H = topo.hops, L = topo.hop_latency();
  const int hop_rtt = 2 * L;
  Channels ch(topo, seed);
  struct Flight {
    int path, hop;
    std::uint64_t seq, item;
    bool erased;
  };
  struct Back {
    int path, hop;
    std::uint64_t seq;
    bool ack;
  };
  std::vector<std::vector<SrArqState>> link(P, std::vector<SrArqState>(H));
  for (auto& row : link)
    for (auto& l : row) {
      l.window = window < 0 ? hop_rtt : window;
      l.timeout = hop_rtt + 1;
    }
  std::vector<std::vector<std::deque<std::uint64_t>>> queue(P, std::vector<std::deque<std::uint64_t>>(H));

  Trace t;
  t.rtt = topo.rtt;
  t.paths = P;
  t.first_send.assign(packets, -1);
  t.in_order.assign(packets, -1);
  t.innovative_per_path.assign(P, 0);
  std::vector<std::int64_t> decoded_at(packets, -1);
  std::uint64_t decoded = 0, next_item = 0;
  DelayLine<Flight> forward;
  DelayLine<Back> back;
  const std::int64_t budget = detail::slot_budget(packets, topo.rtt);

  for (std::int64_t s = 0;; ++s) {
    if (s > budget) throw std::runtime_error("simulation: slot budget exhausted (liveness failure)");
    for (auto& f : forward.take(s)) {
      if (!f.erased) {
        if (f.hop == H - 1) {
          if (decoded_at[f.item] < 0) {
            decoded_at[f.item] = s;
            ++decoded;
            ++t.innovative_per_path[f.path];
          }
        } else {
          queue[f.path][f.hop + 1].push_back(f.item);
        }
      }
      back.push(s + L, Back{f.path, f.hop, f.seq, !f.erased});
    }
    if (decoded == packets) break;
    auto fb = back.take(s);
    bool source_heard = false;
    for (auto& b : fb) {
      sr_arq_feedback(link[b.path][b.hop], b.seq, b.ack);
      source_heard |= b.hop == 0;
    }
    if (!source_heard) ++t.silent_slots;
    ++t.sender_slots;
    for (int p = 0; p < P; ++p)
      for (int h = 0; h < H; ++h) {
        auto pull = [&](std::uint64_t& item) {
          if (h == 0) {
            if (next_item >= packets) return false;
            item = next_item++;
            t.first_send[item] = s;
            return true;
          }
          auto& q = queue[p][h];
          if (q.empty()) return false;
          item = q.front();
          q.pop_front();
          return true;
        };
        auto snd = sr_arq_step(link[p][h], s, pull);
        if (!snd) continue;
        if (h == 0) detail::count_kind(t, snd->retransmission ? PacketKind::FbFec : PacketKind::New);
        bool e = ch.erase(h, m.global[p][h]);
        forward.push(s + L, Flight{p, h, snd->seq, snd->item, e});
      }
  }
  detail::close_trace(t, decoded_at);
  return t;
}

// AC-RLNC over global paths with recoding nodes. ACK(t,p) iff the receiver found the
// packet arriving on global path p at t + rtt/2 innovative.
inline Trace run_mh_recoding(const Topology& topo, const Matching& m, const SenderConfig& base, RecodeMode mode,
                             std::uint64_t packets, std::uint64_t seed) {
  const int P = topo.paths, H = topo.hops, L = topo.hop_latency(), rtt = topo.rtt;
  Channels ch(topo, seed);
  Rng coef_rng(seed * 0x2545f4914f6cdd1dull + 17);
  Rng node_rng(seed * 0x9e3779b97f4a7c15ull + 3);
  SenderConfig c = base;
  c.paths = P;
  c.rtt = rtt;
  MpSender snd(c);
  Decoder dec;
  std::vector<NodeState> nodes;
  for (int h = 1; h < H; ++h) nodes.emplace_back(P, mode);

  struct Hop {
    int path;
    CodedPacket pkt;
  };
  std::vector<DelayLine<Hop>> line(H);  // line[h]: arrivals at the far end of hop h
  // Hop-local verdicts, indexed by hop and link, reach the sender one round trip later.
  struct LinkVerdict {
    int hop, link;
    bool ok;
  };
  DelayLine<LinkVerdict> link_back;
  std::vector<RateEstimator> link_rates(H, RateEstimator(P, base.prior, base.rate_horizon));
  auto transmit = [&](std::int64_t now, int hop, int p) {
    int link = m.global[p][hop];
    bool lost = ch.erase(hop, link);
    link_back.push(now + rtt, LinkVerdict{hop, link, !lost});
    return !lost;
  };
  DelayLine<FeedbackMsg> back;
  // seq sent on path p at slot t, kept for one round trip
  std::vector<std::vector<std::optional<std::uint64_t>>> sent(rtt, std::vector<std::optional<std::uint64_t>>(P));

  Trace t;
  t.rtt = rtt;
  t.paths = P;
  t.first_send.assign(packets, -1);
  t.in_order.assign(packets, -1);
  t.innovative_per_path.assign(P, 0);
  std::vector<std::int64_t> decoded_at(packets, -1);
  std::uint64_t next_global = 0;
  const std::int64_t budget = detail::slot_budget(packets, rtt);

  for (std::int64_t s = 0;; ++s) {
    if (s > budget) throw std::runtime_error("simulation: slot budget exhausted (liveness failure)");
    std::vector<char> innovative(P, 0);
    for (auto& a : line[H - 1].take(s)) {
      std::uint64_t before = dec.decoded_prefix();
      if (dec.ingest(a.pkt).innovative) {
        innovative[a.path] = 1;
        ++t.innovative_per_path[a.path];
      }
      for (std::uint64_t i = before + 1; i <= dec.decoded_prefix(); ++i) decoded_at[i - 1] = s;
    }
    std::int64_t origin = s - rtt / 2;
    if (origin >= 0) {
      auto& row = sent[origin % rtt];
      for (int p = 0; p < P; ++p) {
        if (!row[p]) continue;
        FeedbackMsg msg;
        msg.about_seq = *row[p];
        msg.verdict = innovative[p] ? Verdict::Ack : Verdict::Nack;
        msg.path = p;
        msg.deliver_slot = origin + rtt;
        msg.decoded_prefix = dec.decoded_prefix();
        msg.rank = dec.rank();
        back.push(msg.deliver_slot, msg);
        row[p].reset();
      }
    }
    if (dec.decoded_prefix() >= packets) break;

    for (int h = 0; h + 1 < H; ++h) {
      std::vector<std::optional<CodedPacket>> arr(P);
      for (auto& a : line[h].take(s)) arr[a.path] = std::move(a.pkt);
      auto out = nodes[h].recode(arr, node_rng);
      for (int p = 0; p < P; ++p)
        if (out[p] && transmit(s, h + 1, p)) line[h + 1].push(s + L, Hop{p, std::move(*out[p])});
    }

    auto fb = back.take(s);
    if (fb.empty()) ++t.silent_slots;
    for (auto& f : fb) snd.on_feedback(f);
    ++t.sender_slots;
    for (auto& v : link_back.take(s)) link_rates[v.hop].record(v.link, v.ok);
    std::vector<double> path_rates(P, 1.0);
    for (int p = 0; p < P; ++p)
      for (int h = 0; h < H; ++h) path_rates[p] = std::min(path_rates[p], link_rates[h].rate(m.global[p][h]));
    snd.set_path_rates(std::move(path_rates));

    auto can_open = [&]() {
      if (next_global >= packets) return false;
      t.first_send[next_global] = s;
      ++next_global;
      return true;
    };
    for (const Assignment& a : snd.schedule_slot(s, can_open)) {
      CodedPacket pkt = encode_symbolic(a.w_min, a.w_max, coef_rng);
      pkt.seq_id = a.seq;
      pkt.kind = a.kind();
      pkt.path = a.path;
      pkt.send_slot = s;
      pkt.floor = snd.w_min();
      detail::count_kind(t, pkt.kind);
      sent[s % rtt][a.path] = a.seq;
      if (transmit(s, 0, a.path)) line[0].push(s + L, Hop{a.path, std::move(pkt)});
    }
  }
  detail::close_trace(t, decoded_at);
  return t;
}

inline Matching matching_for(const SimConfig& c) {
  if (c.topo.hops == 1 || !c.natural_matching) return identity_matching(c.topo.paths, c.topo.hops);
  return natural_match(rates_from_eps(c.topo.eps));
}

// Erasure of a whole global path when nodes only forward.
inline ErasureFn forwarding_erasures(const Topology& topo, const Matching& m, std::uint64_t seed) {
  auto ch = std::make_shared<Channels>(topo, seed);
  return [ch, m, H = topo.hops](std::int64_t, int p) {
    bool lost = false;
    for (int h = 0; h < H; ++h) lost |= ch->erase(h, m.global[p][h]);
    return lost;
  };
}

// One global path made of the best link of every hop.
inline Topology best_global_path(const Topology& t) {
  Topology one = t;
  one.paths = 1;
  for (auto& row : one.eps) row = {*std::min_element(row.begin(), row.end())};
  return one;
}

inline SenderConfig sender_config(const SimConfig& c) {
  SenderConfig s;
  s.paths = c.topo.paths;
  s.rtt = c.topo.rtt;
  s.o_bar = c.o_bar;
  s.th = c.th;
  s.prior = c.prior;
  s.rate_horizon = c.rate_horizon;
  return s;
}

// One seeded run of the configured protocol.
inline Trace simulate(const SimConfig& c, std::uint64_t seed, const ErasureFn& override_erasures = nullptr) {
  validate(c);
  const Topology& topo = c.topo;
  Matching m = matching_for(c);
  ErasureFn erased = override_erasures ? override_erasures : forwarding_erasures(topo, m, seed);
  const int P = topo.paths;
  switch (c.protocol) {
    case Protocol::MpAcrlnc:
      return run_coded_streams({P}, topo.rtt, sender_config(c), c.packets, seed, erased, c.payload,
                               c.payload_bytes)
          .trace;
    case Protocol::SpAcrlncPerPath:
      return run_coded_streams(std::vector<int>(P, 1), topo.rtt, sender_config(c), c.packets, seed, erased,
                               c.payload, c.payload_bytes)
          .trace;
    case Protocol::SrArq:
      return run_sr_arq(P, topo.rtt, c.sr_window < 0 ? topo.rtt : c.sr_window, c.packets, erased);
    case Protocol::SrArqHopByHop:
      return run_sr_arq_hop_by_hop(topo, m, c.sr_window, c.packets, seed);
    case Protocol::MhAcrlnc:
      if (c.recode == RecodeMode::ForwardOnly)
        return run_coded_streams({P}, topo.rtt, sender_config(c), c.packets, seed, erased).trace;
      return run_mh_recoding(topo, m, sender_config(c), c.recode, c.packets, seed);
    case Protocol::BestPathAcrlnc: {
      SenderConfig s = sender_config(c);
      s.paths = 1;
      return run_mh_recoding(best_global_path(topo), identity_matching(1, topo.hops), s, c.recode, c.packets, seed);
    }
  }
  throw std::logic_error("simulate: unhandled protocol");
}

} // namespace acrlnc
