#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "manet/sim_core.hpp"

namespace manet {

inline constexpr NodeId kBroadcast = 0xfffffffeu;

// Shared beacon schedule. Interval k spans [k*T, (k+1)*T) and opens with an
// ATIM window of length atim_window.
struct PsmSchedule {
  SimTime beacon_interval = SimTime::ms(100);
  SimTime atim_window = SimTime::ms(20);

  bool valid() const {
    return atim_window.count() > 0 && atim_window < beacon_interval;
  }
  std::uint64_t interval_index(SimTime t) const { return t.count() / beacon_interval.count(); }
  SimTime interval_start(std::uint64_t k) const { return beacon_interval * k; }
  SimTime window_end(std::uint64_t k) const { return interval_start(k) + atim_window; }
  SimTime next_beacon(SimTime t) const { return interval_start(interval_index(t) + 1); }
  bool in_atim_window(SimTime t) const { return t < window_end(interval_index(t)); }
};

// Earliest instant a frame can go on air when its next hop may be dozing.
// Inside a window the frame can still be advertised in that window; after the
// window it waits for the next one.
inline SimTime earliest_psm_transmission(SimTime arrival, const PsmSchedule& s) {
  const auto k = s.interval_index(arrival);
  if (s.in_atim_window(arrival)) return s.window_end(k);
  return s.window_end(k + 1);
}

struct AtimAd {
  NodeId dest;
  bool needs_ack;
  friend bool operator==(const AtimAd&, const AtimAd&) = default;
};

struct AtimResponse {
  bool ack = false;
  bool pledge_awake = false;
};

// Reaction of `self` to an ATIM from any sender. Frames outside the window are
// discarded.
inline AtimResponse on_atim(NodeId self, NodeId atim_dest, SimTime t, const PsmSchedule& s) {
  if (!s.in_atim_window(t)) return {};
  if (atim_dest == kBroadcast) return {false, true};
  if (atim_dest == self) return {true, true};
  return {};
}

// Back-to-back transmission plan for marked frames starting at `start`.
// Frames that would not finish before `deadline` are left out.
struct FlushPlan {
  std::vector<SimTime> starts;
  std::size_t fit = 0;
};

inline FlushPlan plan_flush(const std::vector<SimTime>& airtimes, SimTime start, SimTime deadline) {
  FlushPlan plan;
  SimTime t = start;
  for (SimTime air : airtimes) {
    if (t + air > deadline) break;
    plan.starts.push_back(t);
    t += air;
    ++plan.fit;
  }
  return plan;
}

// Per-node power-save buffer. Payload is whatever the network layer queues.
template <typename Payload>
class MacBuffer {
 public:
  struct Entry {
    Payload payload;
    NodeId next_hop = kBroadcast;
    bool marked = false;
    bool advertised = false;
    std::uint32_t retries = 0;
    SimTime enqueued_at{};
  };

  explicit MacBuffer(std::size_t capacity = 64) : capacity_(capacity) {}

  // Returns false (and keeps the buffer unchanged) when full; the newest frame
  // is the one dropped.
  bool push(Payload p, NodeId next_hop, SimTime now) {
    if (entries_.size() >= capacity_) return false;
    entries_.push_back(Entry{std::move(p), next_hop, false, false, 0, now});
    return true;
  }

  // Requeues a frame that could not go out, keeping its retry history.
  bool push_back(Entry e) {
    if (entries_.size() >= capacity_) return false;
    e.marked = false;
    entries_.push_back(std::move(e));
    return true;
  }

  // One advertisement per distinct destination among frames not yet
  // advertised this interval, in buffer order. Every advertised entry is
  // flagged so the next interval counts a retry if it is
  // still waiting.
  std::vector<AtimAd> advertise() {
    std::vector<AtimAd> ads;
    for (auto& e : entries_) {
      if (e.marked || e.advertised) continue;
      e.advertised = true;
      const bool seen = std::any_of(ads.begin(), ads.end(),
                                    [&](const AtimAd& a) { return a.dest == e.next_hop; });
      if (!seen) ads.push_back(AtimAd{e.next_hop, e.next_hop != kBroadcast});
    }
    return ads;
  }

  // Marks every frame queued for dest. Used for acks and for broadcast ATIMs.
  std::size_t mark(NodeId dest) {
    std::size_t n = 0;
    for (auto& e : entries_) {
      if (e.next_hop == dest && !e.marked) {
        e.marked = true;
        e.advertised = true;
        ++n;
      }
    }
    return n;
  }

  // Acks count only when they arrive inside the ATIM window.
  std::size_t mark_on_ack(NodeId dest, SimTime ack_at, SimTime window_end) {
    if (ack_at > window_end) return 0;
    return mark(dest);
  }

  std::vector<Entry> take_marked() {
    std::vector<Entry> out;
    std::deque<Entry> keep;
    for (auto& e : entries_) {
      if (e.marked) {
        out.push_back(std::move(e));
      } else {
        keep.push_back(std::move(e));
      }
    }
    entries_ = std::move(keep);
    return out;
  }

  // Start of a beacon interval: frames that went through a window without
  // leaving count one retry; those past retry_max are returned as drops.
  // Marks from the previous interval are cleared.
  std::vector<Entry> on_interval_start(std::uint32_t retry_max) {
    std::vector<Entry> dropped;
    std::deque<Entry> keep;
    for (auto& e : entries_) {
      if (e.advertised) ++e.retries;
      e.marked = false;
      e.advertised = false;
      if (e.retries > retry_max) {
        dropped.push_back(std::move(e));
      } else {
        keep.push_back(std::move(e));
      }
    }
    entries_ = std::move(keep);
    return dropped;
  }

  std::vector<Entry> drain() {
    std::vector<Entry> out(std::make_move_iterator(entries_.begin()),
                           std::make_move_iterator(entries_.end()));
    entries_.clear();
    return out;
  }

  bool has_unadvertised() const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [](const Entry& e) { return !e.marked && !e.advertised; });
  }
  bool has_marked() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const Entry& e) { return e.marked; });
  }
  std::size_t count_for(NodeId dest) const {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [&](const Entry& e) { return e.next_hop == dest; }));
  }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

}  // namespace manet
