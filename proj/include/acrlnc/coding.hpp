#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "gf256.hpp"

namespace acrlnc {

using Bytes = std::vector<std::uint8_t>;
using Rng = std::mt19937_64;

enum class PacketKind { New, Fec, FbFec, EndWindowRepeat };

inline const char* to_string(PacketKind k) {
  switch (k) {
    case PacketKind::New: return "new";
    case PacketKind::Fec: return "fec";
    case PacketKind::FbFec: return "fbfec";
    case PacketKind::EndWindowRepeat: return "repeat";
  }
  return "?";
}

inline bool is_repair(PacketKind k) { return k != PacketKind::New; }

// Raw packets are numbered from 1. A window [w_min, w_max] is empty when w_min > w_max.
struct CodedPacket {
  std::uint64_t seq_id = 0;
  std::uint64_t w_min = 1;
  std::uint64_t w_max = 0;
  Bytes coeffs;             // one per index of the window
  Bytes payload;            // empty in symbolic mode
  PacketKind kind = PacketKind::New;
  int path = 0;
  std::int64_t send_slot = 0;
  std::uint64_t floor = 1;  // sender's view of the first undecoded index

  std::uint64_t span() const { return w_max >= w_min ? w_max - w_min + 1 : 0; }
};

inline std::uint8_t random_nonzero(Rng& rng) {
  std::uniform_int_distribution<int> d(1, 255);
  return static_cast<std::uint8_t>(d(rng));
}

// Coefficients only; the payload stays empty.
inline CodedPacket encode_symbolic(std::uint64_t w_min, std::uint64_t w_max, Rng& rng) {
  if (w_min == 0 || w_max < w_min) throw std::invalid_argument("encode: empty window");
  CodedPacket c;
  c.w_min = w_min;
  c.w_max = w_max;
  c.floor = w_min;
  c.coeffs.resize(w_max - w_min + 1);
  for (auto& x : c.coeffs) x = random_nonzero(rng);
  return c;
}

// raw[i-1] is raw packet i; all payloads must share a length.
inline CodedPacket encode_window(const std::vector<Bytes>& raw, std::uint64_t w_min, std::uint64_t w_max,
                                 Rng& rng) {
  if (w_max > raw.size()) throw std::invalid_argument("encode: window beyond raw data");
  CodedPacket c = encode_symbolic(w_min, w_max, rng);
  c.payload.assign(raw[w_min - 1].size(), 0);
  for (std::uint64_t i = w_min; i <= w_max; ++i)
    Gf256::axpy(c.payload.data(), raw[i - 1].data(), c.coeffs[i - w_min], c.payload.size());
  return c;
}

// A linear combination over a contiguous index range [lo, lo + coef.size() - 1].
struct Combination {
  std::uint64_t lo = 1;
  Bytes coef;
  Bytes payload;

  bool empty() const { return coef.empty(); }
  std::uint64_t hi() const { return lo + coef.size() - 1; }
};

// Row space kept in echelon form keyed by the highest nonzero index of each row.
// A vector supported on [.., b] lies in the span iff it lies in the span of the rows
// whose pivot is <= b, so a prefix is recoverable as soon as its pivots are contiguous.
//
// Indices below floor() count as known. In symbolic mode they are simply dropped;
// with payloads they are substituted from `known` (raw packet i at known[i-1]).
class Subspace {
public:
  explicit Subspace(const std::vector<Bytes>* known = nullptr) : known_(known) {}

  std::size_t rank() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::uint64_t floor() const { return floor_; }
  const std::map<std::uint64_t, Combination>& rows() const { return rows_; }

  void bind_known(const std::vector<Bytes>* known) { known_ = known; }

  bool has_pivot(std::uint64_t i) const { return rows_.count(i) != 0; }
  const Combination& at(std::uint64_t pivot) const { return rows_.at(pivot); }
  void erase(std::uint64_t pivot) { rows_.erase(pivot); }

  // Raises the floor and forgets rows living entirely below it.
  void set_floor(std::uint64_t f) {
    if (f <= floor_) return;
    floor_ = f;
    rows_.erase(rows_.begin(), rows_.lower_bound(f));
  }

  // Returns true iff the rank grew.
  bool insert(Combination v) {
    trim(v);
    while (!v.empty()) {
      auto it = rows_.find(v.hi());
      if (it == rows_.end()) {
        std::uint8_t lead = v.coef.back();
        if (lead != 1) {
          std::uint8_t s = Gf256::inv(lead);
          Gf256::scale(v.coef.data(), s, v.coef.size());
          if (!v.payload.empty()) Gf256::scale(v.payload.data(), s, v.payload.size());
        }
        std::uint64_t p = v.hi();
        rows_.emplace(p, std::move(v));
        return true;
      }
      eliminate(v, it->second);
      trim(v);
    }
    return false;
  }

  // Random nonzero combination of all stored rows.
  Combination recode(Rng& rng) const {
    Combination out;
    if (rows_.empty()) return out;
    std::uint64_t lo = rows_.rbegin()->first;
    for (auto& [p, r] : rows_) lo = std::min(lo, r.lo);
    lo = std::max(lo, floor_);
    std::uint64_t hi = rows_.rbegin()->first;
    out.lo = lo;
    out.coef.assign(hi - lo + 1, 0);
    bool with_payload = !rows_.begin()->second.payload.empty();
    if (with_payload) out.payload.assign(rows_.begin()->second.payload.size(), 0);
    for (auto& [p, r] : rows_) {
      std::uint8_t a = random_nonzero(rng);
      std::uint64_t from = std::max(r.lo, lo);
      Gf256::axpy(out.coef.data() + (from - lo), r.coef.data() + (from - r.lo), a, p - from + 1);
      if (with_payload) {
        // Known columns cut off by the floor are folded back into the payload.
        Bytes pl = r.payload;
        if (r.lo < from) {
          for (std::uint64_t i = r.lo; i < from; ++i) {
            std::uint8_t c = r.coef[i - r.lo];
            if (c != 0) Gf256::axpy(pl.data(), known_->at(i - 1).data(), c, pl.size());
          }
        }
        Gf256::axpy(out.payload.data(), pl.data(), a, pl.size());
      }
    }
    return out;
  }

  // Removes columns below the floor and zero padding at both ends.
  void trim(Combination& v) const {
    if (v.empty()) return;
    if (v.lo < floor_) {
      std::uint64_t cut = std::min<std::uint64_t>(floor_ - v.lo, v.coef.size());
      if (!v.payload.empty()) {
        for (std::uint64_t j = 0; j < cut; ++j) {
          std::uint8_t c = v.coef[j];
          if (c == 0) continue;
          if (!known_) throw std::logic_error("subspace: payload below floor without known data");
          const Bytes& x = known_->at(v.lo + j - 1);
          Gf256::axpy(v.payload.data(), x.data(), c, v.payload.size());
        }
      }
      v.coef.erase(v.coef.begin(), v.coef.begin() + static_cast<std::ptrdiff_t>(cut));
      v.lo += cut;
    }
    while (!v.coef.empty() && v.coef.back() == 0) v.coef.pop_back();
    std::size_t z = 0;
    while (z < v.coef.size() && v.coef[z] == 0) ++z;
    if (z > 0) {
      v.coef.erase(v.coef.begin(), v.coef.begin() + static_cast<std::ptrdiff_t>(z));
      v.lo += z;
    }
  }

private:
  // v[hi] is cleared using the row with the same pivot (normalized to 1 there).
  static void eliminate(Combination& v, const Combination& r) {
    std::uint8_t c = v.coef.back();
    if (r.lo < v.lo) {
      v.coef.insert(v.coef.begin(), v.lo - r.lo, 0);
      v.lo = r.lo;
    }
    Gf256::axpy(v.coef.data() + (r.lo - v.lo), r.coef.data(), c, r.coef.size());
    if (!v.payload.empty()) Gf256::axpy(v.payload.data(), r.payload.data(), c, v.payload.size());
  }

  std::map<std::uint64_t, Combination> rows_;
  std::uint64_t floor_ = 1;
  const std::vector<Bytes>* known_;
};

inline Combination to_combination(const CodedPacket& p) {
  return Combination{p.w_min, p.coeffs, p.payload};
}

struct IngestReport {
  bool innovative = false;
  std::uint64_t newly_in_order = 0;
};

// Receiver side: Gaussian elimination plus in-order prefix tracking.
class Decoder {
public:
  Decoder() : sub_(&recovered_) {}
  Decoder(const Decoder& o) : recovered_(o.recovered_), sub_(o.sub_), received_(o.received_) { rebind(); }
  Decoder(Decoder&& o) noexcept
      : recovered_(std::move(o.recovered_)), sub_(std::move(o.sub_)), received_(o.received_) { rebind(); }
  Decoder& operator=(Decoder o) noexcept {
    recovered_ = std::move(o.recovered_);
    sub_ = std::move(o.sub_);
    received_ = o.received_;
    rebind();
    return *this;
  }

  // Largest i with raw packets 1..i recovered.
  std::uint64_t decoded_prefix() const { return sub_.floor() - 1; }
  std::uint64_t rank() const { return decoded_prefix() + sub_.rank(); }
  std::uint64_t received_count() const { return received_; }
  const std::vector<Bytes>& recovered() const { return recovered_; }
  const Subspace& pending() const { return sub_; }

  IngestReport ingest(const CodedPacket& pkt) {
    if (pkt.coeffs.size() != pkt.span()) throw std::invalid_argument("decoder: malformed coefficients");
    ++received_;
    IngestReport rep;
    if (pkt.span() == 0) return rep;
    rep.innovative = sub_.insert(to_combination(pkt));
    std::uint64_t before = decoded_prefix();
    advance();
    rep.newly_in_order = decoded_prefix() - before;
    return rep;
  }

private:
  void advance() {
    for (;;) {
      std::uint64_t next = sub_.floor();
      if (!sub_.has_pivot(next)) return;
      const Combination& r = sub_.at(next);
      if (!r.payload.empty()) {
        Combination x = r;
        // Drop the pivot column, then substitute the already recovered ones.
        x.coef.back() = 0;
        Bytes out = x.payload;
        for (std::uint64_t i = x.lo; i < next; ++i) {
          std::uint8_t c = x.coef[i - x.lo];
          if (c != 0) Gf256::axpy(out.data(), recovered_.at(i - 1).data(), c, out.size());
        }
        recovered_.push_back(std::move(out));
      }
      sub_.erase(next);
      sub_.set_floor(next + 1);
    }
  }
  void rebind() { sub_.bind_known(&recovered_); }

  std::vector<Bytes> recovered_;
  Subspace sub_;
  std::uint64_t received_ = 0;
};

} // namespace acrlnc
