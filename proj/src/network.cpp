#include "manet/network.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>

namespace manet {

namespace {

constexpr std::uint32_t kAtimBytes = 28;
constexpr std::uint32_t kAtimAckBytes = 14;
constexpr std::uint32_t kFeedbackBytes = 32;
constexpr std::uint32_t kTcpAckBytes = 40;
constexpr SimTime kSifs = SimTime::us(10);

struct TxItem {
  Frame frame;
  SimTime ready_at;
  std::uint32_t retries = 0;
};

struct Rx {
  NodeId node;
  std::uint64_t epoch;
  bool ok;
};

struct Transmission {
  Frame frame;
  std::vector<Rx> rx;
};

struct Node {
  NodeId id = 0;
  Trajectory traj;
  EnergyLedger ledger;
  bool alive = true;
  bool awake = true;
  int tx_active = 0;
  int rx_active = 0;
  double tx_power = 0.0;
  SimTime accrued_to{};
  std::uint64_t doze_epoch = 0;
  std::vector<std::pair<std::uint64_t, std::size_t>> receiving;  // (transmission, rx slot)

  MacBuffer<Packet> buffer{64};
  std::deque<TxItem> txq;
  bool tx_busy = false;
  bool pump_pending = false;
  bool atim_pending = false;
  SimTime atim_cursor{};
  std::vector<NodeId> acked;  // destinations marked this interval
  bool pledged = false;

  NeighborTable table;
  AeergState aeerg;
  DuplicateCache seen;
  std::vector<std::pair<Packet, NodeId>> held;  // isolated packets and their previous hop
  std::uint64_t net_seq = 0;

  std::vector<NodeId> near;  // superset of everyone in range until the next refresh
  Vec2 pos{};
  SimTime pos_at{};
  bool pos_ok = false;
};

struct Custody {
  std::uint32_t live = 0;
  bool delivered = false;
  std::optional<DropCause> worst;
};

struct Flow {
  FlowKind kind = FlowKind::kCbr;
  std::uint32_t id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  CbrFlow cbr;
  std::unique_ptr<TcpLiteSender> snd;
  TcpLiteReceiver rcv;
  SimTime stop{};
  std::uint64_t offered = 0;
  bool aborted = false;

  FlowCounters counters;
  std::vector<bool> delivered_seq;
  std::vector<bool> arrived_seq;
  std::vector<std::uint64_t> log;
  std::unordered_map<std::uint64_t, Custody> custody;
  std::map<DropCause, std::uint64_t> drops;
  std::vector<NodeId> oneshot_nodes;

  std::optional<FeedbackWindow> fb;
  std::uint64_t fb_generation = 0;
  std::uint32_t reverse_fanout = 1;
  SimTime last_feedback{};
};

bool grow_flag(std::vector<bool>& v, std::uint64_t i) {
  if (v.size() <= i) v.resize(i + 1, false);
  if (v[i]) return false;
  v[i] = true;
  return true;
}

}  // namespace

struct Network::Impl {
  Impl(const ScenarioConfig& c, Simulator& s)
      : cfg(c),
        sim(s),
        rng_mobility(s.stream("mobility")),
        rng_sleep(s.stream("sleep")),
        rng_gossip(s.stream("gossip")),
        rng_mac(s.stream("mac")),
        rng_fault(s.stream("fault")) {
    cfg.validate_or_throw();
    power = PowerTable{cfg.p_tx_w, cfg.p_rx_w, cfg.p_idle_w, cfg.p_doze_w};
    law = PathLoss{cfg.path_loss_alpha, 0.1};
    region = Region{cfg.area_w_m, cfg.area_h_m};
    psm.beacon_interval = SimTime::seconds(cfg.beacon_interval_ms / 1000.0);
    psm.atim_window = SimTime::seconds(cfg.atim_window_ms / 1000.0);
    gossip = GossipConfig{cfg.p_gossip, cfg.hops_forced};
    atim_air = tx_duration(kAtimBytes, cfg.rate_bps);
    ack_air = tx_duration(kAtimAckBytes, cfg.rate_bps);
  }

  ScenarioConfig cfg;
  Simulator& sim;
  RngStream& rng_mobility;
  RngStream& rng_sleep;
  RngStream& rng_gossip;
  RngStream& rng_mac;
  RngStream& rng_fault;
  PowerTable power;
  PathLoss law;
  Region region;
  PsmSchedule psm;
  GossipConfig gossip;
  SimTime atim_air;
  SimTime ack_air;

  std::vector<Node> nodes;
  std::vector<Flow> flows;
  std::unordered_map<std::uint64_t, Transmission> on_air;
  std::uint64_t next_tx_id = 0;
  NetworkStats stats;
  std::function<void(NodeId, std::uint32_t)> b_observer;
  bool started = false;
  bool finished = false;

  std::vector<Vec2> pos_cache;
  SimTime pos_time{};
  bool pos_valid = false;

  // ---------------------------------------------------------------- setup

  void init_nodes(std::vector<Vec2> fixed) {
    const bool is_static = !fixed.empty();
    const std::size_t n = is_static ? fixed.size() : cfg.n_nodes;
    nodes.resize(n);
    for (NodeId i = 0; i < n; ++i) {
      Node& nd = nodes[i];
      nd.id = i;
      nd.ledger = EnergyLedger(cfg.initial_energy_j);
      nd.buffer = MacBuffer<Packet>(cfg.mac_buffer_cap);
      nd.aeerg = AeergState{1, cfg.rt, cfg.p_sleep, std::nullopt};
      if (is_static) {
        nd.traj = Trajectory(fixed[i], 0.0, 0.0, nullptr, region);
      } else {
        const Vec2 p = uniform_point(rng_mobility, region);
        // Legs come from a per-node stream so a trajectory does not depend on
        // the order in which positions are queried.
        RngStream& legs = sim.stream("mobility/" + std::to_string(i));
        nd.traj = Trajectory(p, cfg.speed_mps, cfg.pause_s, &legs, region);
      }
    }
  }

  bool psm_on() const { return cfg.psm; }
  bool aeerg_on() const { return cfg.protocol == Protocol::kAeerg; }

  Vec2 where(Node& n) {
    if (!n.pos_ok || n.pos_at != sim.now()) {
      n.pos = n.traj.position(sim.now());
      n.pos_at = sim.now();
      n.pos_ok = true;
    }
    return n.pos;
  }

  const std::vector<Vec2>& positions() {
    if (!pos_valid || pos_time != sim.now()) {
      pos_cache.resize(nodes.size());
      for (auto& nd : nodes) pos_cache[nd.id] = where(nd);
      pos_time = sim.now();
      pos_valid = true;
    }
    return pos_cache;
  }

  SimTime jitter() {
    if (cfg.mac_jitter_ms <= 0.0) return SimTime{};
    return SimTime::us(rng_mac.below(static_cast<std::uint64_t>(cfg.mac_jitter_ms * 1000.0) + 1));
  }

  // --------------------------------------------------------------- energy

  RadioMode mode_of(const Node& n) const {
    if (n.tx_active > 0) return RadioMode::kTransmit;
    if (n.rx_active > 0) return RadioMode::kReceive;
    return n.awake ? RadioMode::kIdle : RadioMode::kDoze;
  }

  void accrue(Node& n) {
    const SimTime now = sim.now();
    if (now <= n.accrued_to) return;
    const double dt = (now - n.accrued_to).to_seconds();
    const RadioMode m = mode_of(n);
    std::optional<double> override_w;
    if (m == RadioMode::kTransmit) override_w = n.tx_power;
    n.ledger.accrue(m, dt, power, override_w);
    n.accrued_to = now;
    if (n.ledger.dead() && n.alive) kill(n);
  }

  void set_awake(Node& n, bool awake) {
    if (n.awake == awake) return;
    accrue(n);
    n.awake = awake;
    if (!awake) ++n.doze_epoch;
  }

  void kill(Node& n) {
    n.alive = false;
    for (auto& e : n.buffer.drain()) release(e.payload, DropCause::kEnergy);
    for (auto& item : n.txq) release(item.frame.packet, DropCause::kEnergy);
    n.txq.clear();
    for (auto& [p, prev] : n.held) release(p, DropCause::kEnergy);
    n.held.clear();
  }

  // -------------------------------------------------------------- custody

  Custody* custody_of(const Packet& p) {
    if (!p.tracked || p.kind != PacketKind::kData) return nullptr;
    return &flows[p.flow].custody[p.seq];
  }

  void acquire(const Packet& p, std::uint32_t copies = 1) {
    if (Custody* c = custody_of(p)) c->live += copies;
  }

  void note(const Packet& p, DropCause cause) {
    if (!p.tracked || p.kind != PacketKind::kData) return;
    auto& map = flows[p.flow].custody;
    auto it = map.find(p.seq);
    if (it == map.end()) return;
    if (!it->second.worst || cause < *it->second.worst) it->second.worst = cause;
  }

  void release(const Packet& p, std::optional<DropCause> cause) {
    if (!p.tracked || p.kind != PacketKind::kData) return;
    Flow& f = flows[p.flow];
    auto it = f.custody.find(p.seq);
    if (it == f.custody.end() || it->second.live == 0) {
      throw std::logic_error("custody released without a live copy");
    }
    Custody& c = it->second;
    if (cause && (!c.worst || *cause < *c.worst)) c.worst = cause;
    if (--c.live > 0) return;
    if (!c.delivered) ++f.drops[c.worst.value_or(DropCause::kChannel)];
    f.custody.erase(it);
  }

  // --------------------------------------------------------------- frames

  Frame data_frame(NodeId sender, const Packet& p, std::vector<NodeId> targets, double dist) {
    Frame f;
    f.kind = FrameKind::kData;
    f.sender = sender;
    f.targets = std::move(targets);
    f.packet = p;
    f.airtime = tx_duration(p.bytes, cfg.rate_bps);
    if (aeerg_on() && !f.targets.empty()) {
      f.power_w = tx_power_for_distance(std::min(dist, cfg.range_m), cfg.range_m, power, law);
      f.reach_m = reach_for_power(f.power_w, cfg.range_m, power, law);
    } else {
      f.power_w = power.p_tx;
      f.reach_m = cfg.range_m;
    }
    return f;
  }

  Frame control_frame(FrameKind kind, NodeId sender, NodeId addressee) {
    Frame f;
    f.kind = kind;
    f.sender = sender;
    f.addressee = addressee;
    f.power_w = power.p_tx;
    f.reach_m = cfg.range_m;
    f.airtime = kind == FrameKind::kAtim ? atim_air : ack_air;
    return f;
  }

  double table_distance(const Node& n, NodeId other) const {
    for (const auto& e : n.table.entries()) {
      if (e.id == other) return e.distance;
    }
    return cfg.range_m;
  }

  // ------------------------------------------------------------ MAC layer

  void enqueue(Node& n, Frame f, SimTime delay, std::uint32_t retries = 0) {
    n.txq.push_back(TxItem{std::move(f), sim.now() + delay, retries});
    pump(n);
  }

  // The frame's single custody copy becomes one buffered copy per next hop.
  void buffer_frame(Node& n, const Frame& f, std::uint32_t retries) {
    std::vector<NodeId> hops = f.targets;
    if (hops.empty()) hops.push_back(kBroadcast);
    if (hops.size() > 1) acquire(f.packet, static_cast<std::uint32_t>(hops.size() - 1));
    for (NodeId h : hops) buffer_packet(n, f.packet, h, retries);
  }

  void buffer_packet(Node& n, const Packet& p, NodeId next_hop, std::uint32_t retries = 0) {
    bool ok;
    if (retries == 0) {
      ok = n.buffer.push(p, next_hop, sim.now());
    } else {
      MacBuffer<Packet>::Entry e{p, next_hop, false, false, retries, sim.now()};
      ok = n.buffer.push_back(std::move(e));
    }
    if (!ok) {
      release(p, DropCause::kBuffer);
      return;
    }
    if (psm.in_atim_window(sim.now())) {
      if (std::find(n.acked.begin(), n.acked.end(), next_hop) != n.acked.end()) {
        n.buffer.mark(next_hop);
      } else {
        request_advertise(n);
      }
    }
  }

  bool awake_now(NodeId id) const { return nodes[id].alive && nodes[id].awake; }

  // Splits a data frame by receiver state: awake targets go out now, dozing
  // ones wait in the power-save buffer.
  void dispatch(Node& n, Frame f, SimTime delay) {
    if (!psm_on()) {
      enqueue(n, std::move(f), delay);
      return;
    }
    if (psm.in_atim_window(sim.now())) {
      buffer_frame(n, f, 0);
      return;
    }
    if (f.targets.empty()) {
      const bool all_awake = std::all_of(n.table.entries().begin(), n.table.entries().end(),
                                         [&](const Neighbor& nb) { return awake_now(nb.id); });
      if (all_awake) {
        enqueue(n, std::move(f), delay);
      } else {
        buffer_frame(n, f, 0);
      }
      return;
    }
    std::vector<NodeId> awake_targets;
    std::vector<NodeId> dozing;
    for (NodeId t : f.targets) (awake_now(t) ? awake_targets : dozing).push_back(t);
    if (dozing.empty()) {
      enqueue(n, std::move(f), delay);
      return;
    }
    if (!awake_targets.empty()) acquire(f.packet, static_cast<std::uint32_t>(dozing.size()));
    else if (dozing.size() > 1) acquire(f.packet, static_cast<std::uint32_t>(dozing.size() - 1));
    for (NodeId t : dozing) buffer_packet(n, f.packet, t);
    if (!awake_targets.empty()) {
      double far = 0.0;
      for (NodeId t : awake_targets) far = std::max(far, table_distance(n, t));
      enqueue(n, data_frame(n.id, f.packet, std::move(awake_targets), far), delay);
    }
  }

  void schedule_pump(Node& n, SimTime at) {
    if (n.pump_pending) return;
    n.pump_pending = true;
    const NodeId id = n.id;
    sim.schedule(at, EventKind::kJitterRelease, id, [this, id] {
      nodes[id].pump_pending = false;
      pump(nodes[id]);
    });
  }

  void pump(Node& n) {
    while (n.alive && !n.tx_busy && !n.txq.empty()) {
      TxItem& front = n.txq.front();
      if (front.ready_at > sim.now()) {
        schedule_pump(n, front.ready_at);
        return;
      }
      TxItem item = std::move(front);
      n.txq.pop_front();
      if (psm_on()) {
        const SimTime now = sim.now();
        if (psm.in_atim_window(now) || now + item.frame.airtime > psm.next_beacon(now)) {
          buffer_frame(n, item.frame, item.retries);
          continue;
        }
        // Receivers only change state at window boundaries, but a queued frame
        // may have crossed into a later interval.
        if (!item.frame.targets.empty()) {
          const bool all_awake = std::all_of(item.frame.targets.begin(), item.frame.targets.end(),
                                             [&](NodeId t) { return awake_now(t); });
          if (!all_awake) {
            dispatch(n, std::move(item.frame), SimTime{});
            continue;
          }
        }
      }
      if (!n.awake) set_awake(n, true);
      start_tx(n, std::move(item.frame));
    }
  }

  void start_tx(Node& n, Frame f) {
    const SimTime now = sim.now();
    if (!n.awake) ++stats.doze_violations;
    const bool control = f.control();
    if (!control && psm_on() && psm.in_atim_window(now)) ++stats.atim_window_violations;
    accrue(n);
    ++n.tx_active;
    n.tx_power = f.power_w;
    ++stats.transmissions;
    if (control) {
      ++stats.control_transmissions;
    } else {
      ++stats.data_transmissions;
      n.tx_busy = true;
      // Half duplex: our own data transmission ruins data we were receiving.
      for (auto [tid, slot] : n.receiving) {
        auto it = on_air.find(tid);
        if (it != on_air.end() && !it->second.frame.control()) it->second.rx[slot].ok = false;
      }
    }

    const std::uint64_t id = next_tx_id++;
    Transmission tx{std::move(f), {}};
    const Vec2 origin = where(n);
    for (NodeId mid : n.near) {
      Node& m = nodes[mid];
      if (!m.alive || !m.awake) continue;
      if (!control && m.tx_active > 0) continue;
      if (!in_range(origin, where(m), tx.frame.reach_m)) continue;
      accrue(m);
      ++m.rx_active;
      bool ok = true;
      if (cfg.collisions && !control) {
        for (auto [tid, slot] : m.receiving) {
          auto it = on_air.find(tid);
          if (it == on_air.end() || it->second.frame.control()) continue;
          if (it->second.rx[slot].ok) ++stats.collisions;
          it->second.rx[slot].ok = false;
          ok = false;
        }
        if (!ok) ++stats.collisions;
      }
      tx.rx.push_back(Rx{m.id, m.doze_epoch, ok});
      // Control frames never collide, so only data receptions are tracked.
      if (!control) m.receiving.emplace_back(id, tx.rx.size() - 1);
    }
    const SimTime end = now + tx.frame.airtime;
    on_air.emplace(id, std::move(tx));
    sim.schedule(end, EventKind::kTxEnd, n.id, [this, id] { end_tx(id); }, id);
  }

  void end_tx(std::uint64_t id) {
    auto it = on_air.find(id);
    Transmission tx = std::move(it->second);
    on_air.erase(it);
    Node& n = nodes[tx.frame.sender];
    accrue(n);
    --n.tx_active;
    const bool control = tx.frame.control();
    if (!control) n.tx_busy = false;

    std::vector<NodeId> got;
    for (const Rx& rx : tx.rx) {
      Node& m = nodes[rx.node];
      accrue(m);
      --m.rx_active;
      auto& rv = m.receiving;
      if (!control) rv.erase(std::remove_if(rv.begin(), rv.end(), [&](const auto& e) { return e.first == id; }),
               rv.end());
      if (rx.ok && m.alive && m.awake && m.doze_epoch == rx.epoch) got.push_back(m.id);
    }

    if (control) {
      on_control_end(n, tx.frame, got);
    } else {
      for (NodeId mid : got) {
        if (cfg.fault_loss > 0.0 && rng_fault.bernoulli(cfg.fault_loss)) {
          ++stats.fault_losses;
          continue;
        }
        handle_data(nodes[mid], tx.frame);
      }
      release(tx.frame.packet, got.empty() ? std::optional<DropCause>(DropCause::kChannel)
                                           : std::nullopt);
    }
    pump(n);
  }

  // ----------------------------------------------------------- power save

  void request_advertise(Node& n) {
    if (n.atim_pending || !psm.in_atim_window(sim.now())) return;
    n.atim_pending = true;
    const NodeId id = n.id;
    const SimTime at = std::max(sim.now(), n.atim_cursor);
    sim.schedule(at, EventKind::kAtimSend, id, [this, id] { advertise(nodes[id]); });
  }

  void advertise(Node& n) {
    n.atim_pending = false;
    if (!n.alive) return;
    const SimTime now = sim.now();
    if (!psm.in_atim_window(now)) return;
    const SimTime wend = psm.window_end(psm.interval_index(now));
    SimTime t = std::max(now, n.atim_cursor);
    for (const AtimAd& ad : n.buffer.advertise()) {
      const SimTime need = atim_air + (ad.needs_ack ? kSifs + ack_air : SimTime{});
      if (t + need >= wend) break;
      const NodeId id = n.id;
      const NodeId dest = ad.dest;
      sim.schedule(t, EventKind::kAtimSend, id, [this, id, dest] {
        start_tx(nodes[id], control_frame(FrameKind::kAtim, id, dest));
      }, dest);
      t += need + kSifs;
    }
    n.atim_cursor = t;
  }

  void on_control_end(Node& sender, const Frame& f, const std::vector<NodeId>& got) {
    const SimTime now = sim.now();
    if (f.kind == FrameKind::kAtim) {
      if (f.addressee == kBroadcast) {
        sender.buffer.mark(kBroadcast);
        sender.acked.push_back(kBroadcast);
      }
      for (NodeId mid : got) {
        Node& m = nodes[mid];
        const AtimResponse r = on_atim(m.id, f.addressee, now, psm);
        if (r.pledge_awake) m.pledged = true;
        if (r.ack) {
          const NodeId to = f.sender;
          sim.schedule(now + kSifs, EventKind::kAtimAck, mid, [this, mid, to] {
            if (nodes[mid].alive) start_tx(nodes[mid], control_frame(FrameKind::kAtimAck, mid, to));
          }, to);
        }
      }
      return;
    }
    // ATIM-ACK
    const SimTime wend = psm.window_end(psm.interval_index(now));
    for (NodeId mid : got) {
      if (mid != f.addressee) continue;
      Node& m = nodes[mid];
      if (now > wend || !psm.in_atim_window(now - SimTime::us(1))) continue;
      m.buffer.mark_on_ack(f.sender, now, wend);
      m.acked.push_back(f.sender);
    }
  }

  void on_beacon(std::uint64_t k) {
    const SimTime now = sim.now();
    for (Node& n : nodes) {
      if (!n.alive) continue;
      set_awake(n, true);
      n.pledged = false;
      n.acked.clear();
      n.atim_cursor = now;
      for (auto& e : n.buffer.on_interval_start(cfg.mac_retry_max)) {
        release(e.payload, DropCause::kRetry);
      }
      if (!n.buffer.empty()) {
        const SimTime quarter = SimTime::us(psm.atim_window.count() / 4);
        const SimTime off = SimTime::us(rng_mac.below(quarter.count() + 1));
        n.atim_cursor = now + off;
        request_advertise(n);
      }
    }
    sim.schedule(psm.window_end(k), EventKind::kAtimEnd, kHarness, [this] { on_window_end(); }, k);
    sim.schedule(psm.interval_start(k + 1), EventKind::kBeacon, kHarness,
                 [this, k] { on_beacon(k + 1); }, k + 1);
  }

  void on_window_end() {
    for (Node& n : nodes) {
      if (!n.alive) continue;
      const bool forced = n.pledged || n.buffer.has_marked() || !n.txq.empty() ||
                          n.tx_active > 0 || n.tx_busy;
      bool sleep;
      if (aeerg_on()) {
        sleep = sleep_decide(n.aeerg, forced, rng_sleep) == SleepDecision::kSleep;
      } else {
        sleep = !forced;
      }
      if (sleep) set_awake(n, false);
    }
    for (Node& n : nodes) {
      if (!n.alive) continue;
      auto marked = n.buffer.take_marked();
      if (marked.empty()) continue;
      const SimTime first = jitter();
      // Copies of one packet announced to several next hops leave as a single
      // multi-target frame.
      std::vector<bool> merged(marked.size(), false);
      for (std::size_t i = 0; i < marked.size(); ++i) {
        if (merged[i]) continue;
        const auto& e = marked[i];
        std::vector<NodeId> targets;
        double dist = cfg.range_m;
        if (e.next_hop != kBroadcast) {
          dist = 0.0;
          for (std::size_t j = i; j < marked.size(); ++j) {
            const auto& o = marked[j];
            if (merged[j] || o.next_hop == kBroadcast || o.payload.uid != e.payload.uid) continue;
            merged[j] = true;
            if (j != i) release(o.payload, std::nullopt);
            targets.push_back(o.next_hop);
            dist = std::max(dist, table_distance(n, o.next_hop));
          }
        }
        n.txq.push_back(TxItem{data_frame(n.id, e.payload, std::move(targets), dist),
                               sim.now() + first, e.retries});
      }
      pump(n);
    }
  }

  // --------------------------------------------------------------- routing

  void refresh_tables() {
    const auto& pos = positions();
    const auto alive = std::make_unique<bool[]>(nodes.size());
    for (const Node& n : nodes) alive[n.id] = n.alive;
    const std::span<const bool> alive_span(alive.get(), nodes.size());
    // Nodes that can come within range before the next refresh.
    const double slack = cfg.range_m + 2.0 * cfg.speed_mps * cfg.neighbor_tick_s + 1.0;
    for (Node& n : nodes) {
      n.near.clear();
      if (!n.alive) continue;
      for (const Node& m : nodes) {
        if (m.id != n.id && m.alive && in_range(pos[n.id], pos[m.id], slack)) n.near.push_back(m.id);
      }
      n.table = NeighborTable::build(n.id, pos, cfg.range_m, alive_span);
      if (aeerg_on()) {
        n.aeerg.B = clamp_B(n.aeerg.B, n.table.size());
        const std::size_t upper = std::max<std::size_t>(1, n.table.size());
        if (n.aeerg.B < 1 || n.aeerg.B > upper) ++stats.b_violations;
      }
    }
  }

  void on_neighbor_tick() {
    refresh_tables();
    if (aeerg_on()) {
      for (const Flow& fl : flows) {
        if (fl.kind == FlowKind::kOneShot || !nodes[fl.src].alive) continue;
        stats.source_b_sum += nodes[fl.src].aeerg.B;
        ++stats.source_b_samples;
      }
    }
    for (Node& n : nodes) {
      if (!n.alive || n.held.empty()) continue;
      auto held = std::move(n.held);
      n.held.clear();
      for (auto& [p, prev] : held) route_out(n, p, prev, false, false);
    }
    sim.schedule_in(SimTime::seconds(cfg.neighbor_tick_s), EventKind::kNeighborTick, kHarness,
                    [this] { on_neighbor_tick(); });
  }

  // Sends a packet the node holds one custody copy of.
  void route_out(Node& n, const Packet& p, NodeId prev, bool is_source, bool may_hold) {
    const SimTime delay = is_source ? SimTime{} : jitter();
    if (!aeerg_on()) {
      dispatch(n, data_frame(n.id, p, {}, cfg.range_m), delay);
      return;
    }
    std::vector<Neighbor> cands;
    for (const auto& e : n.table.entries()) {
      if (e.id == prev || e.id == p.origin || !nodes[e.id].alive) continue;
      cands.push_back(e);
    }
    const NeighborTable view(std::move(cands));
    const std::uint32_t B = clamp_B(p.fanout, view.size());
    TargetSelection sel = select_targets(B, view);
    if (sel.targets.empty()) {
      if (may_hold) {
        n.held.emplace_back(p, prev);
      } else {
        release(p, DropCause::kIsolated);
      }
      return;
    }
    dispatch(n, data_frame(n.id, p, std::move(sel.targets), sel.farthest), delay);
  }

  void originate(Node& n, Packet p) {
    if (!n.alive) return;
    p.origin = n.id;
    p.uid = (static_cast<std::uint64_t>(n.id) << 40) | n.net_seq++;
    p.hops = 0;
    n.seen.first_sight(p.uid);
    acquire(p);
    if (!n.awake) set_awake(n, true);
    route_out(n, p, n.id, true, true);
  }

  void handle_data(Node& m, const Frame& f) {
    if (!m.awake) ++stats.doze_violations;
    Packet p = f.packet;
    p.hops += 1;
    const bool is_target =
        f.targets.empty() || std::find(f.targets.begin(), f.targets.end(), m.id) != f.targets.end();
    const bool is_dest = p.dst == m.id || p.dst == kBroadcast;
    if (!is_target && !is_dest) return;
    if (!m.seen.first_sight(p.uid)) {
      note(p, DropCause::kSuppressed);
      return;
    }
    if (is_dest) {
      deliver(m, p);
      if (p.dst == m.id) return;
    }
    if (!is_target) return;
    if (p.hops >= cfg.ttl) {
      note(p, DropCause::kTtl);
      return;
    }
    if (!aeerg_on() && !gossip_decide(gossip, p.hops, rng_gossip)) {
      note(p, DropCause::kGossip);
      return;
    }
    acquire(p);
    route_out(m, p, f.sender, false, true);
  }

  // ----------------------------------------------------------- endpoints

  void count_delivery(Flow& fl, std::uint64_t seq, SimTime origin_time, std::uint32_t bytes) {
    ++fl.counters.received;
    fl.log.push_back(seq);
    if (origin_time.to_seconds() >= cfg.warmup_s) {
      fl.counters.delay_sum += (sim.now() - origin_time).to_seconds();
      ++fl.counters.delay_samples;
      fl.counters.bytes_received += bytes;
    }
  }

  void deliver(Node& m, const Packet& p) {
    Flow& fl = flows[p.flow];
    switch (p.kind) {
      case PacketKind::kData: {
        if (Custody* c = custody_of(p)) c->delivered = true;
        if (fl.kind == FlowKind::kOneShot) {
          fl.oneshot_nodes.push_back(m.id);
          if (fl.counters.received == 0) count_delivery(fl, p.seq, p.origin_time, p.bytes);
          return;
        }
        const bool first_arrival = grow_flag(fl.arrived_seq, p.seq);
        if (first_arrival && aeerg_on()) feedback_on_arrival(fl, p);
        if (fl.kind == FlowKind::kCbr) {
          if (!grow_flag(fl.delivered_seq, p.seq)) {
            ++stats.duplicate_app_deliveries;
            return;
          }
          count_delivery(fl, p.seq, p.origin_time, p.bytes);
          return;
        }
        for (const auto& d : fl.rcv.on_data(p.seq, p.origin_time)) {
          if (!grow_flag(fl.delivered_seq, d.seq)) {
            ++stats.duplicate_app_deliveries;
            continue;
          }
          count_delivery(fl, d.seq, d.origin_time, p.bytes);
        }
        Packet ack;
        ack.kind = PacketKind::kTcpAck;
        ack.dst = fl.src;
        ack.flow = fl.id;
        ack.seq = fl.rcv.ack();
        ack.origin_time = sim.now();
        ack.fanout = fl.reverse_fanout;
        ack.bytes = kTcpAckBytes;
        originate(m, ack);
        return;
      }
      case PacketKind::kFeedback: {
        if (!aeerg_on()) return;
        fl.last_feedback = sim.now();
        set_B(m, adjust_B(m.aeerg, p.feedback_D, m.table.size()));
        return;
      }
      case PacketKind::kTcpAck: {
        if (!fl.snd || fl.aborted) return;
        fl.snd->on_ack(p.seq, sim.now());
        tcp_pump(fl);
        return;
      }
    }
  }

  void set_B(Node& n, const AeergState& s) {
    n.aeerg = s;
    ++stats.b_adjustments;
    const std::size_t upper = std::max<std::size_t>(1, n.table.size());
    if (n.aeerg.B < 1 || n.aeerg.B > upper) ++stats.b_violations;
    if (b_observer) b_observer(n.id, n.aeerg.B);
  }

  void feedback_on_arrival(Flow& fl, const Packet& p) {
    fl.reverse_fanout = p.fanout;
    if (!fl.fb) {
      fl.fb.emplace(fl.id, cfg.feedback_window_pkts);
      arm_feedback_timer(fl);
    }
    if (auto frame = fl.fb->on_data(p.seq)) {
      send_feedback(fl, *frame);
      arm_feedback_timer(fl);
    }
  }

  void arm_feedback_timer(Flow& fl) {
    const std::uint64_t gen = ++fl.fb_generation;
    const std::uint32_t id = fl.id;
    sim.schedule_in(SimTime::seconds(cfg.feedback_window_s), EventKind::kFeedbackTimer, fl.dst,
                    [this, id, gen] {
                      Flow& f = flows[id];
                      if (f.fb_generation != gen) return;
                      send_feedback(f, f.fb->close());
                      arm_feedback_timer(f);
                    }, id);
  }

  void send_feedback(Flow& fl, const FeedbackFrame& fr) {
    ++stats.feedback_frames;
    Packet p;
    p.kind = PacketKind::kFeedback;
    p.dst = fl.src;
    p.flow = fl.id;
    p.seq = fr.window;
    p.origin_time = sim.now();
    p.fanout = fl.reverse_fanout;
    p.bytes = kFeedbackBytes;
    p.feedback_D = fr.D;
    originate(nodes[fl.dst], p);
  }

  void arm_silence_timer(std::uint32_t id) {
    sim.schedule_in(SimTime::seconds(cfg.feedback_window_s), EventKind::kFeedbackTimer,
                    flows[id].src, [this, id] {
                      Flow& f = flows[id];
                      Node& src = nodes[f.src];
                      if (!src.alive) return;
                      const double silent = (sim.now() - f.last_feedback).to_seconds();
                      if (silent >= 2.0 * cfg.feedback_window_s - 1e-9) {
                        f.last_feedback = sim.now();
                        set_B(src, adjust_B(src.aeerg, 0.0, src.table.size()));
                      }
                      arm_silence_timer(id);
                    }, id);
  }

  Packet data_packet(const Flow& fl, std::uint64_t seq, SimTime origin_time) const {
    Packet p;
    p.kind = PacketKind::kData;
    p.dst = fl.dst;
    p.flow = fl.id;
    p.seq = seq;
    p.origin_time = origin_time;
    p.bytes = cfg.cbr_pkt_bytes;
    p.fanout = nodes[fl.src].aeerg.B;
    p.tracked = fl.kind != FlowKind::kTcp;
    return p;
  }

  void cbr_tick(std::uint32_t id) {
    Flow& fl = flows[id];
    if (cfg.max_packets_per_flow > 0 && fl.cbr.next_seq >= cfg.max_packets_per_flow) return;
    const CbrEmission e = cbr_emit(fl.cbr, sim.now());
    ++fl.counters.sent;
    originate(nodes[fl.src], data_packet(fl, e.seq, e.origin_time));
    if (e.next) {
      sim.schedule(*e.next, EventKind::kAppEmit, fl.src, [this, id] { cbr_tick(id); }, id);
    }
  }

  void tcp_app_tick(std::uint32_t id) {
    Flow& fl = flows[id];
    if (sim.now() > fl.stop || fl.aborted) return;
    if (cfg.max_packets_per_flow > 0 && fl.offered >= cfg.max_packets_per_flow) return;
    fl.snd->offer(1);
    ++fl.offered;
    tcp_pump(fl);
    const SimTime next = sim.now() + SimTime::seconds(1.0 / cfg.tcp_app_rate_pps);
    if (next <= fl.stop) {
      sim.schedule(next, EventKind::kAppEmit, fl.src, [this, id] { tcp_app_tick(id); }, id);
    }
  }

  void tcp_pump(Flow& fl) {
    if (fl.aborted || !nodes[fl.src].alive) return;
    for (const auto& e : fl.snd->send_window(sim.now())) {
      ++fl.counters.sent;
      tcp_transmit(fl, e);
    }
  }

  void tcp_transmit(Flow& fl, const TcpLiteSender::Emission& e) {
    originate(nodes[fl.src], data_packet(fl, e.seq, e.origin_time));
    const std::uint32_t id = fl.id;
    const std::uint64_t seq = e.seq;
    const std::uint64_t token = e.timer_token;
    sim.schedule_in(e.rto, EventKind::kTcpTimeout, fl.src, [this, id, seq, token] {
      Flow& f = flows[id];
      if (f.aborted) return;
      const auto r = f.snd->on_timeout(seq, token, sim.now());
      if (r.action == TcpLiteSender::TimeoutAction::kRetransmit) {
        ++stats.tcp_retransmissions;
        tcp_transmit(f, r.emission);
      } else if (r.action == TcpLiteSender::TimeoutAction::kAbort) {
        ++stats.tcp_aborts;
        f.aborted = true;
      }
    }, seq);
  }

  Flow& new_flow(FlowKind kind, NodeId src, NodeId dst) {
    if (src >= nodes.size() || (dst != kBroadcast && dst >= nodes.size()) || src == dst) {
      throw std::invalid_argument("flow endpoints must be distinct existing nodes");
    }
    Flow& fl = flows.emplace_back();
    fl.kind = kind;
    fl.id = static_cast<std::uint32_t>(flows.size() - 1);
    fl.src = src;
    fl.dst = dst;
    return fl;
  }

  void start_feedback_loop(Flow& fl, SimTime start) {
    if (!aeerg_on()) return;
    fl.last_feedback = start;
    const std::uint32_t id = fl.id;
    sim.schedule(start, EventKind::kFeedbackTimer, fl.src, [this, id] { arm_silence_timer(id); },
                 id);
  }
};

// ------------------------------------------------------------------ public

Network::Network(const ScenarioConfig& cfg, Simulator& sim) : impl_(std::make_unique<Impl>(cfg, sim)) {
  impl_->init_nodes({});
}

Network::Network(const ScenarioConfig& cfg, Simulator& sim, std::vector<Vec2> positions)
    : impl_(std::make_unique<Impl>(cfg, sim)) {
  if (positions.empty()) throw std::invalid_argument("static network needs at least one node");
  impl_->init_nodes(std::move(positions));
}

Network::~Network() = default;

void Network::start() {
  Impl& m = *impl_;
  if (m.started) throw ContractViolation("Network::start called twice");
  m.started = true;
  m.refresh_tables();
  m.sim.schedule_in(SimTime::seconds(m.cfg.neighbor_tick_s), EventKind::kNeighborTick, kHarness,
                    [&m] { m.on_neighbor_tick(); });
  if (m.psm_on()) {
    const std::uint64_t k = m.psm.interval_index(m.sim.now());
    const SimTime at = m.psm.interval_start(k) == m.sim.now() ? m.sim.now()
                                                              : m.psm.interval_start(k + 1);
    const std::uint64_t first = m.psm.interval_index(at);
    m.sim.schedule(at, EventKind::kBeacon, kHarness, [&m, first] { m.on_beacon(first); }, first);
  }
}

std::uint32_t Network::add_cbr_flow(NodeId src, NodeId dst, SimTime start, SimTime stop) {
  Impl& m = *impl_;
  Flow& fl = m.new_flow(FlowKind::kCbr, src, dst);
  fl.cbr = CbrFlow{src, dst, m.cfg.cbr_pkt_bytes, SimTime::seconds(1.0 / m.cfg.cbr_rate_pps),
                   start, stop, 0};
  fl.stop = stop;
  const std::uint32_t id = fl.id;
  if (start <= stop) {
    m.sim.schedule(start, EventKind::kAppEmit, src, [&m, id] { m.cbr_tick(id); }, id);
  }
  m.start_feedback_loop(fl, start);
  return id;
}

std::uint32_t Network::add_tcp_flow(NodeId src, NodeId dst, SimTime start, SimTime stop) {
  Impl& m = *impl_;
  Flow& fl = m.new_flow(FlowKind::kTcp, src, dst);
  TcpLiteConfig tc;
  tc.window = m.cfg.tcp_window;
  tc.rto_min = SimTime::seconds(m.cfg.tcp_rto_min_ms / 1000.0);
  tc.rto_initial = tc.rto_min;
  tc.rto_max = SimTime::seconds(m.cfg.tcp_rto_max_ms / 1000.0);
  tc.max_retx = m.cfg.tcp_max_retx;
  fl.snd = std::make_unique<TcpLiteSender>(tc);
  fl.stop = stop;
  const std::uint32_t id = fl.id;
  if (m.cfg.tcp_app_rate_pps <= 0.0) {
    fl.snd->set_greedy(m.cfg.max_packets_per_flow == 0);
    if (m.cfg.max_packets_per_flow > 0) {
      fl.snd->offer(m.cfg.max_packets_per_flow);
      fl.offered = m.cfg.max_packets_per_flow;
    }
    m.sim.schedule(start, EventKind::kAppEmit, src, [&m, id] { m.tcp_pump(m.flows[id]); }, id);
  } else {
    m.sim.schedule(start, EventKind::kAppEmit, src, [&m, id] { m.tcp_app_tick(id); }, id);
  }
  m.start_feedback_loop(fl, start);
  return id;
}

std::uint32_t Network::add_one_shot(NodeId src, NodeId dst, SimTime at) {
  Impl& m = *impl_;
  Flow& fl = m.new_flow(FlowKind::kOneShot, src, dst);
  const std::uint32_t id = fl.id;
  m.sim.schedule(at, EventKind::kAppEmit, src, [&m, id] {
    Flow& f = m.flows[id];
    ++f.counters.sent;
    m.originate(m.nodes[f.src], m.data_packet(f, 0, m.sim.now()));
  }, id);
  return id;
}

void Network::finish() {
  Impl& m = *impl_;
  for (Node& n : m.nodes) m.accrue(n);
  m.finished = true;
}

std::size_t Network::size() const { return impl_->nodes.size(); }
std::uint32_t Network::flow_count() const { return static_cast<std::uint32_t>(impl_->flows.size()); }
const FlowCounters& Network::counters(std::uint32_t flow) const { return impl_->flows.at(flow).counters; }

std::vector<NodeId> Network::delivered_nodes(std::uint32_t flow) const {
  auto v = impl_->flows.at(flow).oneshot_nodes;
  std::sort(v.begin(), v.end());
  return v;
}

const std::vector<std::uint64_t>& Network::delivery_log(std::uint32_t flow) const {
  return impl_->flows.at(flow).log;
}

const TcpLiteSender* Network::tcp_sender(std::uint32_t flow) const {
  return impl_->flows.at(flow).snd.get();
}

bool Network::flow_aborted(std::uint32_t flow) const { return impl_->flows.at(flow).aborted; }
const EnergyLedger& Network::ledger(NodeId n) const { return impl_->nodes.at(n).ledger; }
const AeergState& Network::aeerg(NodeId n) const { return impl_->nodes.at(n).aeerg; }
const NeighborTable& Network::table(NodeId n) const { return impl_->nodes.at(n).table; }
bool Network::awake(NodeId n) const { return impl_->nodes.at(n).awake; }
Vec2 Network::position(NodeId n) { return impl_->positions().at(n); }
const NetworkStats& Network::stats() const { return impl_->stats; }
const PowerTable& Network::power_table() const { return impl_->power; }
void Network::set_b_observer(std::function<void(NodeId, std::uint32_t)> fn) {
  impl_->b_observer = std::move(fn);
}

AuditReport Network::audit() const {
  const Impl& m = *impl_;
  AuditReport r;
  for (const Flow& fl : m.flows) {
    FlowAudit a;
    a.flow = fl.id;
    a.sent = fl.counters.sent;
    a.received = fl.counters.received;
    if (fl.kind == FlowKind::kTcp) {
      const TcpLiteSender& s = *fl.snd;
      if (fl.counters.received != fl.rcv.ack()) {
        r.failures.push_back("tcp flow " + std::to_string(fl.id) +
                             ": application count disagrees with receiver state");
      }
      if (s.cum_ack() > fl.rcv.ack()) {
        r.failures.push_back("tcp flow " + std::to_string(fl.id) + ": ack beyond delivery");
      }
      if (s.next_seq() != a.sent) {
        r.failures.push_back("tcp flow " + std::to_string(fl.id) + ": sent counter mismatch");
      }
      const std::uint64_t pending = a.sent - std::min(a.sent, fl.rcv.ack());
      if (fl.aborted) {
        if (pending > 0) a.drops[DropCause::kRetry] = pending;
      } else {
        // Everything past the receiver's edge must still be tracked by the sender.
        std::uint64_t tracked = 0;
        for (const auto& [seq, inf] : s.inflight()) tracked += seq >= fl.rcv.ack() ? 1 : 0;
        a.inflight = tracked;
      }
    } else {
      std::uint64_t inflight = 0;
      for (const auto& [seq, c] : fl.custody) inflight += (!c.delivered && c.live > 0) ? 1 : 0;
      a.inflight = inflight;
      a.drops = fl.drops;
      if (fl.kind == FlowKind::kCbr) {
        const auto flagged = static_cast<std::uint64_t>(
            std::count(fl.delivered_seq.begin(), fl.delivered_seq.end(), true));
        if (flagged != a.received) {
          r.failures.push_back("cbr flow " + std::to_string(fl.id) + ": delivery flags disagree");
        }
      }
    }
    r.flows.push_back(std::move(a));
  }
  const double elapsed = m.sim.now().to_seconds();
  for (const Node& n : m.nodes) {
    r.energy.push_back(EnergyAudit{n.id, n.ledger.accounted_seconds(), elapsed,
                                   n.ledger.consumed(), n.ledger.recomputed(m.power)});
  }
  check_flows(r);
  check_energy(r);
  if (m.stats.duplicate_app_deliveries > 0) r.failures.push_back("duplicate application delivery");
  if (m.stats.doze_violations > 0) r.failures.push_back("frame handled by a dozing node");
  if (m.stats.atim_window_violations > 0) r.failures.push_back("data sent inside an ATIM window");
  if (m.stats.b_violations > 0) r.failures.push_back("B left [1, |neighbors|]");
  return r;
}

MetricsRow Network::metrics_row() const {
  const Impl& m = *impl_;
  MetricsRow row;
  row.protocol = to_string(m.cfg.protocol);
  row.traffic = to_string(m.cfg.traffic);
  row.nodes = static_cast<std::uint32_t>(m.nodes.size());
  row.sim_time_s = m.cfg.sim_time_s;
  row.seed = m.cfg.seed;
  FlowCounters total;
  for (const Flow& fl : m.flows) {
    if (fl.kind == FlowKind::kOneShot) continue;
    total.sent += fl.counters.sent;
    total.received += fl.counters.received;
    total.delay_sum += fl.counters.delay_sum;
    total.delay_samples += fl.counters.delay_samples;
    total.bytes_received += fl.counters.bytes_received;
    for (const auto& [cause, n] : fl.drops) row.drops_by_cause[cause] += n;
    if (fl.kind == FlowKind::kTcp && fl.aborted) {
      row.drops_by_cause[DropCause::kRetry] += fl.counters.sent - fl.counters.received;
    }
  }
  row.pdr = pdr(total);
  row.delay_defined = total.delay_samples > 0;
  row.avg_delay_ms = avg_delay(total) * 1000.0;
  row.throughput_bps = throughput(total, m.cfg.sim_time_s - m.cfg.warmup_s);
  double energy = 0.0;
  for (const Node& n : m.nodes) energy += n.ledger.consumed();
  row.energy_j = energy;
  return row;
}

}  // namespace manet
