//! DSME MAC: superframe timing, queues, frames and the channel-access strategies.

mod access;
mod csma;
mod gts;
mod queues;
mod sync;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::NodeId;
use crate::phy::{ChannelPlan, FCS_BYTES, MAC_SYMBOL_TIME};
use crate::time::SimTime;

pub use access::{AccessParams, AccessRegistry, AccessTimer, ChannelAccess, MacAction, MacCtx};
pub use csma::CsmaAccess;
pub use gts::GtsAccess;
pub use queues::{CfpQueues, FifoQueue};
pub use sync::{BeaconTracker, SyncEvent};

pub const DATA_HEADER_BYTES: usize = 9;
pub const ACK_MAC_BYTES: usize = 3;
pub const BASE_SLOT_SYMBOLS: u64 = 60;
pub const SLOTS_PER_SUPERFRAME: u32 = 16;
pub const CAP_SLOTS: u32 = 8;
pub const UNIT_BACKOFF_SYMBOLS: u64 = 20;
pub const MAX_ORDER: u8 = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacConfig {
    pub mac_min_be: u8,
    pub mac_max_be: u8,
    pub mac_max_csma_backoffs: u8,
    pub mac_max_frame_retries: u8,
    pub so: u8,
    pub mo: u8,
    pub bo: u8,
    pub cap_reduction: bool,
    pub rx_on_when_idle: bool,
    pub queue_capacity: usize,
    pub cap_queue_capacity: usize,
    pub ack_turnaround_symbols: u64,
    pub ack_wait_margin_symbols: u64,
    pub missed_beacon_threshold: u32,
    pub beacon_bytes: usize,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            mac_min_be: 7,
            mac_max_be: 8,
            mac_max_csma_backoffs: 5,
            mac_max_frame_retries: 4,
            so: 3,
            mo: 3,
            bo: 4,
            cap_reduction: false,
            rx_on_when_idle: false,
            queue_capacity: 22,
            cap_queue_capacity: 22,
            ack_turnaround_symbols: 12,
            ack_wait_margin_symbols: 4,
            missed_beacon_threshold: 4,
            beacon_bytes: 35,
        }
    }
}

impl MacConfig {
    /// 802.15.4 default backoff parameters (macMinBE 3, macMaxBE 5, 4 backoffs).
    pub fn standard_be() -> Self {
        MacConfig {
            mac_min_be: 3,
            mac_max_be: 5,
            mac_max_csma_backoffs: 4,
            ..MacConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.so <= self.mo && self.mo <= self.bo && self.bo <= MAX_ORDER) {
            return Err(Error::InvalidConfig(format!(
                "orders must satisfy 0 <= SO <= MO <= BO <= 14, got SO={} MO={} BO={}",
                self.so, self.mo, self.bo
            )));
        }
        if self.mac_min_be > self.mac_max_be {
            return Err(Error::InvalidConfig(format!(
                "mac_min_be {} exceeds mac_max_be {}",
                self.mac_min_be, self.mac_max_be
            )));
        }
        if self.mac_max_be > 20 {
            return Err(Error::InvalidConfig(format!(
                "mac_max_be {} too large",
                self.mac_max_be
            )));
        }
        if self.queue_capacity == 0 || self.cap_queue_capacity == 0 {
            return Err(Error::InvalidConfig(
                "queue capacities must be positive".into(),
            ));
        }
        if self.missed_beacon_threshold == 0 {
            return Err(Error::InvalidConfig(
                "missed_beacon_threshold must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn ack_turnaround(&self) -> SimTime {
        SimTime::from_duration(MAC_SYMBOL_TIME * self.ack_turnaround_symbols as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Beacon,
    Cap,
    Cfp { gts_index: u32 },
}

/// Where an absolute slot number sits in the superframe structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotPosition {
    pub abs_slot: u64,
    pub slot_in_superframe: u32,
    pub superframe: u64,
    pub superframe_in_msf: u32,
    pub msf: u64,
    pub superframe_in_bi: u32,
    pub beacon_interval: u64,
    pub kind: SlotKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperframeGeometry {
    pub slot_duration: Duration,
    pub superframe_duration: Duration,
    pub superframes_per_msf: u32,
    pub msf_duration: Duration,
    pub beacon_interval: Duration,
    pub superframes_per_bi: u32,
    pub gts_per_msf: u32,
    pub channels: u32,
    pub cap_reduction: bool,
}

pub fn derive_geometry(cfg: &MacConfig) -> Result<SuperframeGeometry> {
    cfg.validate()?;
    let slot_duration = MAC_SYMBOL_TIME * (BASE_SLOT_SYMBOLS << cfg.so) as u32;
    let superframe_duration = slot_duration * SLOTS_PER_SUPERFRAME;
    let superframes_per_msf = 1u32 << (cfg.mo - cfg.so);
    let superframes_per_bi = 1u32 << (cfg.bo - cfg.so);
    let gts_per_msf = if cfg.cap_reduction {
        7 + 15 * (superframes_per_msf - 1)
    } else {
        7 * superframes_per_msf
    };
    Ok(SuperframeGeometry {
        slot_duration,
        superframe_duration,
        superframes_per_msf,
        msf_duration: superframe_duration * superframes_per_msf,
        beacon_interval: superframe_duration * superframes_per_bi,
        superframes_per_bi,
        gts_per_msf,
        channels: 16,
        cap_reduction: cfg.cap_reduction,
    })
}

impl SuperframeGeometry {
    pub fn slot(&self) -> SimTime {
        SimTime::from_duration(self.slot_duration)
    }

    pub fn backoff_period(&self) -> SimTime {
        SimTime::from_duration(MAC_SYMBOL_TIME * UNIT_BACKOFF_SYMBOLS as u32)
    }

    pub fn has_cap(&self, superframe_in_msf: u32) -> bool {
        !self.cap_reduction || superframe_in_msf == 0
    }

    /// Number of GTS in a given superframe of the multisuperframe.
    pub fn gts_in_superframe(&self, superframe_in_msf: u32) -> u32 {
        if self.has_cap(superframe_in_msf) {
            SLOTS_PER_SUPERFRAME - 1 - CAP_SLOTS
        } else {
            SLOTS_PER_SUPERFRAME - 1
        }
    }

    pub fn position(&self, abs_slot: u64) -> SlotPosition {
        let sps = SLOTS_PER_SUPERFRAME as u64;
        let slot_in_superframe = (abs_slot % sps) as u32;
        let superframe = abs_slot / sps;
        let superframe_in_msf = (superframe % self.superframes_per_msf as u64) as u32;
        let n_gts = self.gts_in_superframe(superframe_in_msf);
        let kind = if slot_in_superframe == 0 {
            SlotKind::Beacon
        } else if slot_in_superframe >= SLOTS_PER_SUPERFRAME - n_gts {
            SlotKind::Cfp {
                gts_index: slot_in_superframe - (SLOTS_PER_SUPERFRAME - n_gts),
            }
        } else {
            SlotKind::Cap
        };
        SlotPosition {
            abs_slot,
            slot_in_superframe,
            superframe,
            superframe_in_msf,
            msf: superframe / self.superframes_per_msf as u64,
            superframe_in_bi: (superframe % self.superframes_per_bi as u64) as u32,
            beacon_interval: superframe / self.superframes_per_bi as u64,
            kind,
        }
    }

    pub fn slot_start(&self, abs_slot: u64) -> SimTime {
        SimTime(self.slot().as_micros() * abs_slot)
    }

    /// Slot number containing instant `t`.
    pub fn slot_at(&self, t: SimTime) -> u64 {
        t.as_micros() / self.slot().as_micros()
    }

    /// The CAP window containing `t`, or the next one after it.
    pub fn cap_window(&self, t: SimTime) -> (SimTime, SimTime) {
        let sd = SimTime::from_duration(self.superframe_duration).as_micros();
        let slot = self.slot().as_micros();
        let mut sf = t.as_micros() / sd;
        loop {
            let sf_in_msf = (sf % self.superframes_per_msf as u64) as u32;
            if self.has_cap(sf_in_msf) {
                let start = sf * sd + slot;
                let end = start + CAP_SLOTS as u64 * slot;
                if t.as_micros() < end {
                    return (SimTime(start), SimTime(end));
                }
            }
            sf += 1;
        }
    }

    /// First backoff boundary at or after `t` that lies inside a CAP, then
    /// `periods` further backoff periods counted only while a CAP is running.
    pub fn cap_advance(&self, t: SimTime, periods: u64) -> SimTime {
        let bp = self.backoff_period().as_micros();
        let (mut start, mut end) = self.cap_window(t);
        let mut b = if t <= start {
            start.as_micros()
        } else {
            start.as_micros() + (t.as_micros() - start.as_micros()).div_ceil(bp) * bp
        };
        let mut k = periods;
        loop {
            if b >= end.as_micros() {
                (start, end) = self.cap_window(end);
                b = start.as_micros();
                continue;
            }
            let remaining = (end.as_micros() - b) / bp;
            if k < remaining {
                return SimTime(b + k * bp);
            }
            k -= remaining;
            b = end.as_micros();
        }
    }

    /// Time left in the CAP that contains `t` (zero outside a CAP).
    pub fn cap_remaining(&self, t: SimTime) -> SimTime {
        let (start, end) = self.cap_window(t);
        if t >= start && t < end {
            end - t
        } else {
            SimTime::ZERO
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "kebab-case")]
pub enum Priority {
    High,
    #[default]
    Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Service {
    Csma,
    Aloha,
    Gts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Data,
    Ack { for_frame: u64 },
    Beacon,
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: u64,
    pub kind: FrameKind,
    pub src: NodeId,
    pub dest: Option<NodeId>,
    /// MPDU length without the FCS.
    pub mac_bytes: usize,
    pub confirmed: bool,
    pub priority: Priority,
    pub scheduled_at: SimTime,
    pub retries: u8,
}

impl Frame {
    pub fn data(
        id: u64,
        src: NodeId,
        dest: NodeId,
        payload: usize,
        confirmed: bool,
        at: SimTime,
    ) -> Self {
        Frame {
            id,
            kind: FrameKind::Data,
            src,
            dest: Some(dest),
            mac_bytes: DATA_HEADER_BYTES + payload,
            confirmed,
            priority: Priority::Regular,
            scheduled_at: at,
            retries: 0,
        }
    }

    pub fn ack(id: u64, src: NodeId, dest: NodeId, for_frame: u64, at: SimTime) -> Self {
        Frame {
            id,
            kind: FrameKind::Ack { for_frame },
            src,
            dest: Some(dest),
            mac_bytes: ACK_MAC_BYTES,
            confirmed: false,
            priority: Priority::High,
            scheduled_at: at,
            retries: 0,
        }
    }

    pub fn phy_bytes(&self) -> usize {
        match self.kind {
            FrameKind::Noise => self.mac_bytes,
            _ => self.mac_bytes + FCS_BYTES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    CsmaFailure,
    RetryExhausted,
    QueueOverflow,
    NoRoute,
    Desynchronized,
}

impl DropReason {
    pub const ALL: [DropReason; 5] = [
        DropReason::CsmaFailure,
        DropReason::RetryExhausted,
        DropReason::QueueOverflow,
        DropReason::NoRoute,
        DropReason::Desynchronized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::CsmaFailure => "csma_failure",
            DropReason::RetryExhausted => "retry_exhausted",
            DropReason::QueueOverflow => "queue_overflow",
            DropReason::NoRoute => "no_route",
            DropReason::Desynchronized => "desynchronized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Accepted,
    Dropped(DropReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtsAllocation {
    pub owner_tx: NodeId,
    pub peer_rx: NodeId,
    pub superframe_index: u32,
    pub slot_index: u32,
    pub channel_offset: u8,
}

impl GtsAllocation {
    pub fn channel(&self, plan: &ChannelPlan, msf: u64) -> u8 {
        plan.hop(self.channel_offset, msf)
    }
}

/// Checks that the allocation table fits the geometry and is collision free.
pub fn validate_allocations(allocs: &[GtsAllocation], geo: &SuperframeGeometry) -> Result<()> {
    for (i, a) in allocs.iter().enumerate() {
        if a.owner_tx == a.peer_rx {
            return Err(Error::InvalidConfig(format!(
                "GTS of node {} points at itself",
                a.owner_tx
            )));
        }
        if a.superframe_index >= geo.superframes_per_msf {
            return Err(Error::InvalidConfig(format!(
                "GTS superframe index {} outside multisuperframe of {}",
                a.superframe_index, geo.superframes_per_msf
            )));
        }
        if a.slot_index >= geo.gts_in_superframe(a.superframe_index) {
            return Err(Error::InvalidConfig(format!(
                "GTS slot index {} outside superframe {}",
                a.slot_index, a.superframe_index
            )));
        }
        if a.channel_offset as u32 >= geo.channels {
            return Err(Error::InvalidConfig(format!(
                "channel offset {} out of range",
                a.channel_offset
            )));
        }
        for b in &allocs[..i] {
            if (a.superframe_index, a.slot_index) != (b.superframe_index, b.slot_index) {
                continue;
            }
            if a.channel_offset == b.channel_offset {
                return Err(Error::InvalidConfig(format!(
                    "GTS ({}, {}) offset {} allocated twice",
                    a.superframe_index, a.slot_index, a.channel_offset
                )));
            }
            let nodes = [a.owner_tx, a.peer_rx];
            if nodes.contains(&b.owner_tx) || nodes.contains(&b.peer_rx) {
                return Err(Error::InvalidConfig(format!(
                    "node needs two radios in GTS ({}, {})",
                    a.superframe_index, a.slot_index
                )));
            }
        }
    }
    Ok(())
}
