use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashMap};
use std::hash::{Hash, Hasher};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mac::{
    AccessParams, AccessRegistry, AccessTimer, Admission, BeaconTracker, ChannelAccess, DropReason,
    Frame, FrameKind, GtsAllocation, MacAction, MacCtx, SlotKind, SlotPosition, SyncEvent,
};
use crate::medium::{Medium, NodeId, OngoingTransmission, ReceptionOutcome, TxId};
use crate::regulatory::AirtimeLedger;
use crate::sim::metrics::{Collector, Metrics, SyncRecord};
use crate::sim::scenario::{Role, Scenario, COORDINATOR};
use crate::sim::traffic::{ArrivalProcess, TrafficRegistry};
use crate::time::SimTime;

/// Same-instant ordering classes.
const PHASE_TX_END: u8 = 0;
const PHASE_SLOT: u8 = 1;
const PHASE_TX_START: u8 = 2;
const PHASE_CCA: u8 = 3;
const PHASE_OTHER: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EventKind {
    TxEnd {
        tx: TxId,
    },
    Slot {
        abs_slot: u64,
    },
    Mac {
        timer: AccessTimer,
    },
    SendAck {
        to: NodeId,
        for_frame: u64,
        channel: u8,
    },
    Arrival,
    Interfere,
}

impl EventKind {
    fn tag(&self) -> &'static str {
        match self {
            EventKind::TxEnd { .. } => "tx_end",
            EventKind::Slot { .. } => "slot",
            EventKind::Mac {
                timer: AccessTimer::Cca { .. },
            } => "cca",
            EventKind::Mac {
                timer: AccessTimer::TxStart { .. },
            } => "tx_start",
            EventKind::Mac {
                timer: AccessTimer::AckTimeout { .. },
            } => "ack_timeout",
            EventKind::SendAck { .. } => "send_ack",
            EventKind::Arrival => "arrival",
            EventKind::Interfere => "interfere",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    time: SimTime,
    phase: u8,
    node: NodeId,
    seq: u64,
}

struct NodeState {
    role: Role,
    tx_power: f64,
    rx_on_when_idle: bool,
    access: Option<Box<dyn ChannelAccess>>,
    process: Option<Box<dyn ArrivalProcess>>,
    traffic_rng: ChaCha8Rng,
    mac_rng: ChaCha8Rng,
    tracker: BeaconTracker,
    ack_wait: Option<u8>,
    rx_allocs: Vec<GtsAllocation>,
    tx_allocs: Vec<GtsAllocation>,
}

impl NodeState {
    fn synced(&self) -> bool {
        self.tracker.is_synced()
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<Metrics> {
    Simulation::new(
        scenario,
        &AccessRegistry::default(),
        &TrafficRegistry::default(),
    )?
    .run(None)
}

/// Runs a scenario and writes one line per processed event to `trace`.
pub fn run_with_trace(scenario: &Scenario, trace: &mut dyn Write) -> Result<Metrics> {
    Simulation::new(
        scenario,
        &AccessRegistry::default(),
        &TrafficRegistry::default(),
    )?
    .run(Some(trace))
}

pub struct Simulation<'a> {
    sc: &'a Scenario,
    medium: Medium,
    heap: BinaryHeap<Reverse<Key>>,
    payloads: HashMap<u64, EventKind>,
    seq: u64,
    now: SimTime,
    nodes: Vec<NodeState>,
    slot_allocs: HashMap<(u32, u32), Vec<GtsAllocation>>,
    ledger: AirtimeLedger,
    metrics: Collector,
    hasher: DefaultHasher,
    next_frame: u64,
    actions: Vec<MacAction>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        sc: &'a Scenario,
        access: &AccessRegistry,
        traffic: &TrafficRegistry,
    ) -> Result<Self> {
        let mut nodes = Vec::with_capacity(sc.nodes.len());
        for (i, spec) in sc.nodes.iter().enumerate() {
            if spec.id as usize != i {
                return Err(Error::InvalidConfig(
                    "node ids must be dense and ordered".into(),
                ));
            }
            let tx_allocs: Vec<GtsAllocation> = sc
                .allocations
                .iter()
                .filter(|a| a.owner_tx == spec.id)
                .copied()
                .collect();
            let rx_allocs = sc
                .allocations
                .iter()
                .filter(|a| a.peer_rx == spec.id)
                .copied()
                .collect();
            let access = if spec.role.is_dsme_child() {
                Some(access.create(
                    &sc.service,
                    &AccessParams {
                        node: spec.id,
                        mac: &sc.mac,
                        tx_allocations: tx_allocs.clone(),
                    },
                )?)
            } else {
                None
            };
            let process = match (&spec.flow, &spec.interferer) {
                (Some(f), _) => Some(traffic.create(&f.process)?),
                (None, Some(j)) => Some(traffic.create(&j.process)?),
                _ => None,
            };
            let mut traffic_rng = ChaCha8Rng::seed_from_u64(sc.seed);
            traffic_rng.set_stream(2 * spec.id as u64);
            let mut mac_rng = ChaCha8Rng::seed_from_u64(sc.seed);
            mac_rng.set_stream(2 * spec.id as u64 + 1);
            nodes.push(NodeState {
                role: spec.role,
                tx_power: spec.tx_power_dbm,
                rx_on_when_idle: spec.rx_on_when_idle,
                access,
                process,
                traffic_rng,
                mac_rng,
                tracker: BeaconTracker::new(sc.mac.missed_beacon_threshold),
                ack_wait: None,
                rx_allocs,
                tx_allocs,
            });
        }
        let mut slot_allocs: HashMap<(u32, u32), Vec<GtsAllocation>> = HashMap::new();
        for a in &sc.allocations {
            slot_allocs
                .entry((a.superframe_index, a.slot_index))
                .or_default()
                .push(*a);
        }
        let mut metrics = Collector::default();
        metrics.out.seed = sc.seed;
        metrics.out.duration_s = (sc.duration - sc.warmup).as_secs_f64();
        Ok(Simulation {
            sc,
            medium: Medium::new(sc.capture)?,
            heap: BinaryHeap::new(),
            payloads: HashMap::new(),
            seq: 0,
            now: SimTime::ZERO,
            nodes,
            slot_allocs,
            ledger: AirtimeLedger::new(sc.airtime_window),
            metrics,
            hasher: DefaultHasher::new(),
            next_frame: 0,
            actions: Vec::new(),
        })
    }

    fn push(&mut self, time: SimTime, node: NodeId, kind: EventKind) {
        let phase = match kind {
            EventKind::TxEnd { .. } => PHASE_TX_END,
            EventKind::Slot { .. } => PHASE_SLOT,
            EventKind::Mac {
                timer: AccessTimer::Cca { .. },
            } => PHASE_CCA,
            EventKind::Mac {
                timer: AccessTimer::TxStart { .. },
            }
            | EventKind::SendAck { .. }
            | EventKind::Interfere => PHASE_TX_START,
            EventKind::Mac {
                timer: AccessTimer::AckTimeout { .. },
            }
            | EventKind::Arrival => PHASE_OTHER,
        };
        let seq = self.seq;
        self.seq += 1;
        self.payloads.insert(seq, kind);
        self.heap.push(Reverse(Key {
            time,
            phase,
            node,
            seq,
        }));
    }

    pub fn run(mut self, mut trace: Option<&mut dyn Write>) -> Result<Metrics> {
        let sc = self.sc;
        let hard_end = sc.duration + sc.drain;
        self.push(SimTime::ZERO, COORDINATOR, EventKind::Slot { abs_slot: 0 });
        for id in 0..self.nodes.len() {
            let node = id as NodeId;
            let spec = &sc.nodes[id];
            if spec.flow.is_some() {
                let jitter = if sc.start_jitter > SimTime::ZERO {
                    SimTime(
                        self.nodes[id]
                            .traffic_rng
                            .random_range(0..=sc.start_jitter.as_micros()),
                    )
                } else {
                    SimTime::ZERO
                };
                let at = jitter + self.draw_gap(id);
                if at < sc.duration {
                    self.push(at, node, EventKind::Arrival);
                }
            } else if let Some(j) = &spec.interferer {
                let at = j.start + self.draw_gap(id);
                if at < sc.duration {
                    self.push(at, node, EventKind::Interfere);
                }
            }
        }

        while let Some(Reverse(key)) = self.heap.pop() {
            if key.time > hard_end {
                break;
            }
            let kind = self
                .payloads
                .remove(&key.seq)
                .expect("payload for every key");
            self.now = key.time;
            (key.time, key.phase, key.node).hash(&mut self.hasher);
            kind.hash(&mut self.hasher);
            self.metrics.out.events += 1;
            if let Some(w) = trace.as_deref_mut() {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{:?}",
                    key.time.as_micros(),
                    key.node,
                    kind.tag(),
                    kind
                )
                .map_err(|e| Error::InvalidArgument(format!("trace write failed: {e}")))?;
            }
            match kind {
                EventKind::TxEnd { tx } => self.on_tx_end(tx)?,
                EventKind::Slot { abs_slot } => self.on_slot(abs_slot)?,
                EventKind::Mac { timer } => self.on_mac_timer(key.node, timer)?,
                EventKind::SendAck {
                    to,
                    for_frame,
                    channel,
                } => self.on_send_ack(key.node, to, for_frame, channel)?,
                EventKind::Arrival => self.on_arrival(key.node)?,
                EventKind::Interfere => self.on_interfere(key.node)?,
            }
            if self.now >= sc.duration && self.metrics.outstanding == 0 {
                break;
            }
        }

        let mut out_airtime = self.ledger.totals();
        out_airtime.retain(|_, v| *v > 0.0);
        self.metrics.out.airtime = out_airtime;
        self.metrics.out.end_time_s = self.now.as_secs_f64();
        self.metrics.out.event_log_hash = self.hasher.finish();
        Ok(self.metrics.finish())
    }

    fn draw_gap(&mut self, id: usize) -> SimTime {
        let n = &mut self.nodes[id];
        let p = n.process.as_mut().expect("node has a process");
        SimTime::from_secs_f64(p.sample(&mut n.traffic_rng)).max(SimTime(1))
    }

    fn position_now(&self) -> SlotPosition {
        let g = &self.sc.geometry;
        g.position(g.slot_at(self.now))
    }

    /// Receiver state a node wants when it has nothing in flight.
    fn desired_channel(&self, id: usize, pos: &SlotPosition) -> Option<u8> {
        let n = &self.nodes[id];
        if !n.role.is_dsme_child() {
            return None;
        }
        let common = self.sc.plan.common_channel();
        match pos.kind {
            SlotKind::Beacon => (pos.superframe_in_bi == 0).then_some(common),
            _ if !n.synced() => None,
            SlotKind::Cap => n.rx_on_when_idle.then_some(common),
            SlotKind::Cfp { gts_index } => n
                .rx_allocs
                .iter()
                .find(|a| a.superframe_index == pos.superframe_in_msf && a.slot_index == gts_index)
                .map(|a| a.channel(&self.sc.plan, pos.msf)),
        }
    }

    fn retune(&mut self, id: usize, pos: &SlotPosition) {
        if self.nodes[id].ack_wait.is_some() || self.medium.is_transmitting(id as NodeId) {
            return;
        }
        let ch = self.desired_channel(id, pos);
        self.medium.set_listening(id as NodeId, ch, self.now);
    }

    fn on_slot(&mut self, abs_slot: u64) -> Result<()> {
        let sc = self.sc;
        let geo = &sc.geometry;
        let pos = geo.position(abs_slot);
        if pos.kind == SlotKind::Beacon {
            self.account_superframe(&pos);
        }
        for id in 0..self.nodes.len() {
            self.retune(id, &pos);
        }
        match pos.kind {
            SlotKind::Beacon if pos.superframe_in_bi == 0 => {
                let id = self.frame_id();
                let beacon = Frame {
                    id,
                    kind: FrameKind::Beacon,
                    src: COORDINATOR,
                    dest: None,
                    mac_bytes: sc.mac.beacon_bytes,
                    confirmed: false,
                    priority: crate::mac::Priority::High,
                    scheduled_at: self.now,
                    retries: 0,
                };
                self.metrics.out.tx.beacons += 1;
                self.start_tx(COORDINATOR, beacon, sc.plan.common_channel())?;
            }
            SlotKind::Cfp { gts_index } => {
                let allocs = self
                    .slot_allocs
                    .get(&(pos.superframe_in_msf, gts_index))
                    .cloned()
                    .unwrap_or_default();
                for a in allocs {
                    let owner = a.owner_tx as usize;
                    if !self.nodes[owner].synced() || self.medium.is_transmitting(a.owner_tx) {
                        continue;
                    }
                    let ch = a.channel(&sc.plan, pos.msf);
                    self.with_access(owner, |acc, ctx| acc.on_gts_slot(&a, ch, ctx))?;
                }
            }
            _ => {}
        }
        let next = abs_slot + 1;
        let t = geo.slot_start(next);
        if t <= sc.duration + sc.drain {
            self.push(t, COORDINATOR, EventKind::Slot { abs_slot: next });
        }
        Ok(())
    }

    /// Passive energy for the superframe starting now.
    fn account_superframe(&mut self, pos: &SlotPosition) {
        let sc = self.sc;
        let c = &sc.energy;
        let geo = &sc.geometry;
        for (id, n) in self.nodes.iter().enumerate() {
            if !n.role.is_dsme_child() {
                continue;
            }
            let mut e = if pos.superframe_in_bi == 0 {
                c.bs_rx
            } else {
                c.bs_off
            };
            if geo.has_cap(pos.superframe_in_msf) {
                e += if n.rx_on_when_idle && n.synced() {
                    c.cap_rx_idle
                } else {
                    c.cap_off
                };
            }
            let tx = n
                .tx_allocs
                .iter()
                .filter(|a| a.superframe_index == pos.superframe_in_msf)
                .count();
            let rx = n
                .rx_allocs
                .iter()
                .filter(|a| a.superframe_index == pos.superframe_in_msf)
                .count();
            e += if tx + rx == 0 {
                c.cfp_off
            } else {
                tx as f64 * c.cfp_tx_idle_per_gts + rx as f64 * c.cfp_rx_idle_per_gts
            };
            *self
                .metrics
                .out
                .energy_mj
                .entry(id as NodeId)
                .or_insert(0.0) += e;
        }
    }

    fn frame_id(&mut self) -> u64 {
        self.next_frame += 1;
        self.next_frame
    }

    fn with_access<R>(
        &mut self,
        id: usize,
        f: impl FnOnce(&mut dyn ChannelAccess, &mut MacCtx<'_>) -> R,
    ) -> Result<R> {
        let sc = self.sc;
        let mut actions = std::mem::take(&mut self.actions);
        let n = &mut self.nodes[id];
        let Some(access) = n.access.as_mut() else {
            return Err(Error::ProtocolViolation(format!("node {id} has no MAC")));
        };
        let mut ctx = MacCtx {
            now: self.now,
            node: id as NodeId,
            rng: &mut n.mac_rng,
            medium: &self.medium,
            geometry: &sc.geometry,
            mac: &sc.mac,
            phy: &sc.phy,
            plan: &sc.plan,
            actions: &mut actions,
        };
        let r = f(access.as_mut(), &mut ctx);
        for a in actions.drain(..) {
            self.apply(id, a)?;
        }
        self.actions = actions;
        Ok(r)
    }

    fn apply(&mut self, id: usize, action: MacAction) -> Result<()> {
        match action {
            MacAction::Transmit { frame, channel } => {
                self.metrics.transmitted(frame.id);
                self.start_tx(id as NodeId, frame, channel)?;
            }
            MacAction::Timer { at, timer } => self.push(at, id as NodeId, EventKind::Mac { timer }),
            MacAction::Drop { frame, reason } => self.metrics.finalize(frame.id, Some(reason)),
            MacAction::Done { frame } => self.metrics.finalize(frame.id, None),
            MacAction::Cca { busy } => {
                if busy {
                    self.metrics.out.tx.cca_busy += 1;
                } else {
                    self.metrics.out.tx.cca_clear += 1;
                }
            }
        }
        Ok(())
    }

    fn start_tx(&mut self, sender: NodeId, frame: Frame, channel: u8) -> Result<()> {
        let sc = self.sc;
        let toa = sc.phy.time_on_air(frame.phy_bytes())?;
        let end = self.now + toa;
        let c = &sc.energy;
        let cap = matches!(self.position_now().kind, SlotKind::Cap);
        match frame.kind {
            FrameKind::Data => {
                self.metrics.out.tx.data_tx += 1;
                *self
                    .metrics
                    .out
                    .data_transmissions
                    .entry(sender)
                    .or_insert(0) += 1;
                *self.metrics.out.energy_mj.entry(sender).or_insert(0.0) +=
                    if cap { c.cap_tx } else { c.gts_tx };
            }
            FrameKind::Ack { .. } => self.metrics.out.tx.acks_sent += 1,
            FrameKind::Noise => self.metrics.out.tx.noise_tx += 1,
            FrameKind::Beacon => {}
        }
        if let Ok(entry) = sc.plan.entry(channel) {
            self.ledger
                .record_airtime(sender, &entry.band, self.now, toa)?;
        }
        let tx = self.medium.begin_transmission(OngoingTransmission {
            sender,
            channel,
            start: self.now,
            end,
            tx_power_dbm: self.nodes[sender as usize].tx_power,
            frame,
        })?;
        self.push(end, sender, EventKind::TxEnd { tx });
        Ok(())
    }

    fn outcome_at(&self, receiver: NodeId, tx: TxId) -> Result<ReceptionOutcome> {
        let n = &self.nodes[receiver as usize];
        if n.role.is_dsme_child() && !n.synced() {
            return Ok(ReceptionOutcome::NotListening);
        }
        self.medium.resolve_reception(receiver, tx)
    }

    fn on_tx_end(&mut self, tx: TxId) -> Result<()> {
        let sc = self.sc;
        let t = self.medium.end_transmission(tx)?.clone();
        let sender = t.sender as usize;
        match t.frame.kind {
            FrameKind::Data => {
                let dest = t.frame.dest.expect("data frames are unicast");
                let outcome = self.outcome_at(dest, tx)?;
                let stats = &mut self.metrics.out.tx;
                match outcome {
                    ReceptionOutcome::Ok => stats.data_ok += 1,
                    ReceptionOutcome::Captured => stats.data_captured += 1,
                    ReceptionOutcome::Collided => stats.data_collided += 1,
                    ReceptionOutcome::NotListening => stats.data_not_listening += 1,
                }
                self.metrics.reception(t.frame.id, outcome, self.now);
                if outcome.is_success() {
                    let cap = matches!(self.position_now().kind, SlotKind::Cap);
                    let c = &sc.energy;
                    *self.metrics.out.energy_mj.entry(dest).or_insert(0.0) +=
                        if cap { c.cap_rx } else { c.gts_rx };
                    if t.frame.confirmed {
                        let at = self.now + sc.mac.ack_turnaround();
                        self.push(
                            at,
                            dest,
                            EventKind::SendAck {
                                to: t.sender,
                                for_frame: t.frame.id,
                                channel: t.channel,
                            },
                        );
                    }
                }
                if t.frame.confirmed {
                    self.nodes[sender].ack_wait = Some(t.channel);
                    self.medium
                        .set_listening(t.sender, Some(t.channel), self.now);
                }
                let id = t.frame.id;
                if self.nodes[sender].access.is_some() {
                    self.with_access(sender, |acc, ctx| acc.on_tx_end(id, ctx))?;
                }
            }
            FrameKind::Ack { for_frame } => {
                let to = t.frame.dest.expect("acks are unicast");
                let outcome = self.outcome_at(to, tx)?;
                if outcome.is_success() && self.nodes[to as usize].ack_wait.is_some() {
                    self.metrics.out.tx.acks_ok += 1;
                    self.nodes[to as usize].ack_wait = None;
                    self.with_access(to as usize, |acc, ctx| acc.on_ack(for_frame, ctx))?;
                    let pos = self.position_now();
                    self.retune(to as usize, &pos);
                }
            }
            FrameKind::Beacon => {
                for id in 0..self.nodes.len() {
                    if !self.nodes[id].role.is_dsme_child() {
                        continue;
                    }
                    let heard = self
                        .medium
                        .resolve_reception(id as NodeId, tx)?
                        .is_success();
                    if !heard {
                        self.metrics.out.tx.beacons_missed += 1;
                    }
                    match self.nodes[id].tracker.on_beacon(heard) {
                        SyncEvent::None => {}
                        SyncEvent::Desynchronized => {
                            self.metrics.out.sync_events.push(SyncRecord {
                                node: id as NodeId,
                                time_s: self.now.as_secs_f64(),
                                desynchronized: true,
                            });
                            self.nodes[id].ack_wait = None;
                            self.with_access(id, |acc, ctx| {
                                acc.flush(DropReason::Desynchronized, ctx)
                            })?;
                        }
                        SyncEvent::Resynchronized => {
                            self.metrics.out.sync_events.push(SyncRecord {
                                node: id as NodeId,
                                time_s: self.now.as_secs_f64(),
                                desynchronized: false,
                            });
                        }
                    }
                }
            }
            FrameKind::Noise => {}
        }
        self.medium.retire(tx);
        let pos = self.position_now();
        self.retune(sender, &pos);
        Ok(())
    }

    fn on_mac_timer(&mut self, node: NodeId, timer: AccessTimer) -> Result<()> {
        let id = node as usize;
        if matches!(timer, AccessTimer::AckTimeout { .. }) && self.nodes[id].ack_wait.is_some() {
            self.nodes[id].ack_wait = None;
            let pos = self.position_now();
            self.retune(id, &pos);
        }
        if matches!(timer, AccessTimer::TxStart { .. }) && self.medium.is_transmitting(node) {
            return Err(Error::ProtocolViolation(format!(
                "node {node} scheduled a frame while on the air"
            )));
        }
        self.with_access(id, |acc, ctx| acc.on_timer(timer, ctx))
    }

    fn on_send_ack(&mut self, node: NodeId, to: NodeId, for_frame: u64, channel: u8) -> Result<()> {
        if self.medium.is_transmitting(node) {
            return Ok(());
        }
        let id = self.frame_id();
        let ack = Frame::ack(id, node, to, for_frame, self.now);
        self.start_tx(node, ack, channel)
    }

    fn on_arrival(&mut self, node: NodeId) -> Result<()> {
        let sc = self.sc;
        let id = node as usize;
        let flow = sc.nodes[id]
            .flow
            .as_ref()
            .expect("arrivals only for sources");
        let frame_id = self.frame_id();
        let mut frame = Frame::data(
            frame_id,
            node,
            flow.dest,
            flow.payload_bytes,
            flow.confirmed,
            self.now,
        );
        frame.priority = flow.priority;
        let counted = self.now >= sc.warmup && self.now < sc.duration;
        let queued = self.nodes[id]
            .access
            .as_ref()
            .map_or(0, |a| a.queue_len(flow.dest));
        self.metrics
            .schedule(frame_id, node, flow.dest, self.now, counted, queued);
        if !self.nodes[id].synced() {
            self.metrics
                .finalize(frame_id, Some(DropReason::Desynchronized));
        } else {
            match self.with_access(id, |acc, ctx| acc.enqueue(frame, ctx))? {
                Ok(Admission::Accepted) => {}
                Ok(Admission::Dropped(r)) => self.metrics.finalize(frame_id, Some(r)),
                Err(Error::NoRoute { .. }) => {
                    self.metrics.finalize(frame_id, Some(DropReason::NoRoute))
                }
                Err(e) => return Err(e),
            }
        }
        let next = self.now + self.draw_gap(id);
        if next < sc.duration {
            self.push(next, node, EventKind::Arrival);
        }
        Ok(())
    }

    fn on_interfere(&mut self, node: NodeId) -> Result<()> {
        let sc = self.sc;
        let id = node as usize;
        let spec = sc.nodes[id].interferer.as_ref().expect("interferer spec");
        if !self.medium.is_transmitting(node) {
            let k = self.nodes[id]
                .traffic_rng
                .random_range(0..spec.channels.len());
            let frame_id = self.frame_id();
            let noise = Frame {
                id: frame_id,
                kind: FrameKind::Noise,
                src: node,
                dest: None,
                mac_bytes: spec.payload_bytes,
                confirmed: false,
                priority: crate::mac::Priority::Regular,
                scheduled_at: self.now,
                retries: 0,
            };
            self.start_tx(node, noise, spec.channels[k])?;
        }
        let next = self.now + self.draw_gap(id);
        if next < sc.duration {
            self.push(next, node, EventKind::Interfere);
        }
        Ok(())
    }
}
