#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>

#include "protocol.hpp"

namespace acrlnc {

// Selective repeat on one link. Items are opaque ids (raw packet indices).
// window == 0 means no window limit.
struct SrArqState {
  std::int64_t window = 0;
  std::int64_t timeout = 0;  // slots without feedback before a blind resend

  struct Outstanding {
    std::uint64_t item = 0;
    std::int64_t sent = 0;
    bool acked = false;
    bool queued = false;
  };
  std::map<std::uint64_t, Outstanding> out;  // by link sequence number
  std::deque<std::uint64_t> retransmit;
  std::uint64_t next_seq = 0;
  std::uint64_t base = 0;  // oldest unacknowledged sequence number

  std::size_t unacked() const { return out.size(); }
};

struct SrArqSend {
  std::uint64_t seq = 0;
  std::uint64_t item = 0;
  bool retransmission = false;
};

// pull(item) fetches the next fresh item and returns false when none is ready.
template <class Pull>
std::optional<SrArqSend> sr_arq_step(SrArqState& s, std::int64_t now, Pull&& pull) {
  if (s.timeout > 0)
    for (auto& [seq, o] : s.out)
      if (!o.acked && !o.queued && now - o.sent > s.timeout) {
        o.queued = true;
        s.retransmit.push_back(seq);
      }
  while (!s.retransmit.empty()) {
    std::uint64_t seq = s.retransmit.front();
    s.retransmit.pop_front();
    auto it = s.out.find(seq);
    if (it == s.out.end() || it->second.acked) continue;
    it->second.queued = false;
    it->second.sent = now;
    return SrArqSend{seq, it->second.item, true};
  }
  if (s.window > 0 && s.next_seq >= s.base + static_cast<std::uint64_t>(s.window)) return std::nullopt;
  std::uint64_t item = 0;
  if (!pull(item)) return std::nullopt;
  std::uint64_t seq = s.next_seq++;
  s.out[seq] = SrArqState::Outstanding{item, now, false, false};
  return SrArqSend{seq, item, false};
}

inline void sr_arq_feedback(SrArqState& s, std::uint64_t seq, bool ack) {
  auto it = s.out.find(seq);
  if (it == s.out.end()) return;
  if (ack) {
    s.out.erase(it);
    s.base = s.out.empty() ? s.next_seq : s.out.begin()->first;
  } else if (!it->second.queued) {
    it->second.queued = true;
    s.retransmit.push_back(seq);
  }
}

// Single-path AC-RLNC is the multipath sender on one path.
inline SenderConfig sp_config(int rtt, double th = 0.0, std::uint64_t o_bar = 0) {
  SenderConfig c;
  c.paths = 1;
  c.rtt = rtt;
  c.th = th;
  c.o_bar = o_bar;
  return c;
}

template <class Source>
std::vector<Assignment> sp_acrlnc_step(MpSender& s, std::int64_t now, Source&& can_open) {
  return s.schedule_slot(now, std::forward<Source>(can_open));
}

} // namespace acrlnc
