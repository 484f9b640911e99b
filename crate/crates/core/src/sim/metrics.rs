//! Per-packet bookkeeping during a run and the summary it produces.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::mac::DropReason;
use crate::medium::{NodeId, ReceptionOutcome};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketFate {
    Delivered,
    /// Transmitted without acknowledgement and never received.
    Lost,
    Dropped(DropReason),
}

impl PacketFate {
    pub fn label(self) -> &'static str {
        match self {
            PacketFate::Delivered => "delivered",
            PacketFate::Lost => "lost",
            PacketFate::Dropped(r) => r.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketSummary {
    pub id: u64,
    pub src: NodeId,
    pub dest: NodeId,
    pub scheduled_s: f64,
    pub delay_s: Option<f64>,
    pub transmissions: u32,
    pub collided: bool,
    pub fate: PacketFate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TxStats {
    pub data_tx: u64,
    pub data_ok: u64,
    pub data_captured: u64,
    pub data_collided: u64,
    pub data_not_listening: u64,
    pub acks_sent: u64,
    pub acks_ok: u64,
    pub beacons: u64,
    pub beacons_missed: u64,
    pub cca_busy: u64,
    pub cca_clear: u64,
    pub noise_tx: u64,
}

impl TxStats {
    fn add(&mut self, o: &TxStats) {
        self.data_tx += o.data_tx;
        self.data_ok += o.data_ok;
        self.data_captured += o.data_captured;
        self.data_collided += o.data_collided;
        self.data_not_listening += o.data_not_listening;
        self.acks_sent += o.acks_sent;
        self.acks_ok += o.acks_ok;
        self.beacons += o.beacons;
        self.beacons_missed += o.beacons_missed;
        self.cca_busy += o.cca_busy;
        self.cca_clear += o.cca_clear;
        self.noise_tx += o.noise_tx;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncRecord {
    pub node: NodeId,
    pub time_s: f64,
    pub desynchronized: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub seed: u64,
    pub duration_s: f64,
    pub end_time_s: f64,
    /// Counted packets, ordered by id.
    pub packets: Vec<PacketSummary>,
    /// Queue length towards the destination seen by each counted arrival.
    pub queue_samples: Vec<u32>,
    pub tx: TxStats,
    /// Seconds on air per (node, band).
    pub airtime: BTreeMap<(NodeId, String), f64>,
    pub data_transmissions: BTreeMap<NodeId, u64>,
    pub energy_mj: BTreeMap<NodeId, f64>,
    pub sync_events: Vec<SyncRecord>,
    pub events: u64,
    pub event_log_hash: u64,
}

impl Metrics {
    pub fn scheduled(&self) -> usize {
        self.packets.len()
    }

    pub fn delivered(&self) -> usize {
        self.packets
            .iter()
            .filter(|p| p.fate == PacketFate::Delivered)
            .count()
    }

    pub fn prr(&self) -> f64 {
        if self.packets.is_empty() {
            return 0.0;
        }
        self.delivered() as f64 / self.packets.len() as f64
    }

    /// PRR over packets scheduled before `t_s`.
    pub fn prr_before(&self, t_s: f64) -> Option<f64> {
        let early: Vec<_> = self
            .packets
            .iter()
            .filter(|p| p.scheduled_s < t_s)
            .collect();
        if early.is_empty() {
            return None;
        }
        Some(
            early
                .iter()
                .filter(|p| p.fate == PacketFate::Delivered)
                .count() as f64
                / early.len() as f64,
        )
    }

    pub fn fate_counts(&self) -> BTreeMap<PacketFate, u64> {
        let mut m = BTreeMap::new();
        for p in &self.packets {
            *m.entry(p.fate).or_insert(0) += 1;
        }
        m
    }

    pub fn drops(&self) -> BTreeMap<DropReason, u64> {
        let mut m = BTreeMap::new();
        for p in &self.packets {
            if let PacketFate::Dropped(r) = p.fate {
                *m.entry(r).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn fraction(&self, fate: PacketFate) -> f64 {
        if self.packets.is_empty() {
            return 0.0;
        }
        self.packets.iter().filter(|p| p.fate == fate).count() as f64 / self.packets.len() as f64
    }

    /// Share of scheduled packets that went on air at least once.
    pub fn transmitted_fraction(&self) -> f64 {
        if self.packets.is_empty() {
            return 0.0;
        }
        self.packets.iter().filter(|p| p.transmissions > 0).count() as f64
            / self.packets.len() as f64
    }

    /// Share of scheduled packets with at least one collided transmission.
    pub fn collided_fraction(&self) -> f64 {
        if self.packets.is_empty() {
            return 0.0;
        }
        self.packets.iter().filter(|p| p.collided).count() as f64 / self.packets.len() as f64
    }

    pub fn delays(&self) -> Vec<f64> {
        self.packets.iter().filter_map(|p| p.delay_s).collect()
    }

    pub fn mean_delay(&self) -> Option<f64> {
        let d = self.delays();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }

    pub fn mean_retransmissions(&self) -> f64 {
        let tx: Vec<_> = self
            .packets
            .iter()
            .filter(|p| p.transmissions > 0)
            .collect();
        if tx.is_empty() {
            return 0.0;
        }
        tx.iter().map(|p| (p.transmissions - 1) as f64).sum::<f64>() / tx.len() as f64
    }

    /// Empirical pmf of the queue samples, indices 0..=max.
    pub fn queue_pmf(&self, max: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; max + 1];
        if self.queue_samples.is_empty() {
            return pmf;
        }
        for &q in &self.queue_samples {
            if (q as usize) <= max {
                pmf[q as usize] += 1.0;
            }
        }
        let n = self.queue_samples.len() as f64;
        pmf.iter_mut().for_each(|v| *v /= n);
        pmf
    }

    pub fn first_desync_s(&self) -> Option<f64> {
        self.sync_events
            .iter()
            .find(|e| e.desynchronized)
            .map(|e| e.time_s)
    }

    /// Pools replicas into one sample set; hashes are combined in order.
    pub fn merge(runs: &[Metrics]) -> Metrics {
        let mut out = Metrics::default();
        let mut id_base = 0;
        for r in runs {
            out.duration_s += r.duration_s;
            out.end_time_s = out.end_time_s.max(r.end_time_s);
            let max_id = r.packets.iter().map(|p| p.id).max().unwrap_or(0);
            out.packets.extend(r.packets.iter().map(|p| PacketSummary {
                id: p.id + id_base,
                ..p.clone()
            }));
            id_base += max_id + 1;
            out.queue_samples.extend_from_slice(&r.queue_samples);
            out.tx.add(&r.tx);
            for (k, v) in &r.airtime {
                *out.airtime.entry(k.clone()).or_insert(0.0) += v;
            }
            for (k, v) in &r.data_transmissions {
                *out.data_transmissions.entry(*k).or_insert(0) += v;
            }
            for (k, v) in &r.energy_mj {
                *out.energy_mj.entry(*k).or_insert(0.0) += v;
            }
            out.sync_events.extend_from_slice(&r.sync_events);
            out.events += r.events;
            out.event_log_hash = out.event_log_hash.rotate_left(5) ^ r.event_log_hash;
        }
        out.seed = runs.first().map_or(0, |r| r.seed);
        out
    }
}

/// Empirical CDF of `samples` evaluated at `points`.
pub fn empirical_cdf(samples: &[f64], points: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    points
        .iter()
        .map(|x| {
            if s.is_empty() {
                0.0
            } else {
                s.partition_point(|v| v <= x) as f64 / s.len() as f64
            }
        })
        .collect()
}

#[derive(Debug)]
struct Pending {
    src: NodeId,
    dest: NodeId,
    scheduled_at: SimTime,
    counted: bool,
    delivered_at: Option<SimTime>,
    transmissions: u32,
    collided: bool,
}

/// Live state while the engine runs.
#[derive(Debug, Default)]
pub(crate) struct Collector {
    pending: HashMap<u64, Pending>,
    pub outstanding: u64,
    pub out: Metrics,
}

impl Collector {
    pub fn schedule(
        &mut self,
        id: u64,
        src: NodeId,
        dest: NodeId,
        at: SimTime,
        counted: bool,
        queue_len: usize,
    ) {
        self.pending.insert(
            id,
            Pending {
                src,
                dest,
                scheduled_at: at,
                counted,
                delivered_at: None,
                transmissions: 0,
                collided: false,
            },
        );
        if counted {
            self.outstanding += 1;
            self.out.queue_samples.push(queue_len as u32);
        }
    }

    pub fn transmitted(&mut self, id: u64) {
        if let Some(p) = self.pending.get_mut(&id) {
            p.transmissions += 1;
        }
    }

    pub fn reception(&mut self, id: u64, outcome: ReceptionOutcome, at: SimTime) {
        let Some(p) = self.pending.get_mut(&id) else {
            return;
        };
        if outcome == ReceptionOutcome::Collided {
            p.collided = true;
        }
        if outcome.is_success() && p.delivered_at.is_none() {
            p.delivered_at = Some(at);
        }
    }

    /// The MAC is done with the frame; `drop` is set when it gave up.
    pub fn finalize(&mut self, id: u64, drop: Option<DropReason>) {
        let Some(p) = self.pending.remove(&id) else {
            return;
        };
        if !p.counted {
            return;
        }
        self.outstanding -= 1;
        let fate = match (p.delivered_at, drop) {
            (Some(_), _) => PacketFate::Delivered,
            (None, Some(r)) => PacketFate::Dropped(r),
            (None, None) => PacketFate::Lost,
        };
        self.out.packets.push(PacketSummary {
            id,
            src: p.src,
            dest: p.dest,
            scheduled_s: p.scheduled_at.as_secs_f64(),
            delay_s: p.delivered_at.map(|t| (t - p.scheduled_at).as_secs_f64()),
            transmissions: p.transmissions,
            collided: p.collided,
            fate,
        });
    }

    /// Packets still inside a MAC when the run stops count as dropped by
    /// nothing in particular: delivered if received, lost otherwise.
    pub fn finish(mut self) -> Metrics {
        let mut ids: Vec<u64> = self.pending.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            self.finalize(id, None);
        }
        self.out.packets.sort_by_key(|p| p.id);
        self.out
    }
}
