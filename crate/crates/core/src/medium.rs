//! Shared radio medium: who is on the air, who is listening, and what survives.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::Frame;
use crate::time::SimTime;

pub type NodeId = u32;
pub type TxId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaptureRule {
    pub enabled: bool,
    pub power_margin_db: f64,
}

impl Default for CaptureRule {
    fn default() -> Self {
        CaptureRule {
            enabled: false,
            power_margin_db: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OngoingTransmission {
    pub sender: NodeId,
    pub channel: u8,
    pub start: SimTime,
    pub end: SimTime,
    pub tx_power_dbm: f64,
    pub frame: Frame,
}

#[derive(Debug, Clone)]
struct Record {
    tx: OngoingTransmission,
    /// Received power of the strongest overlapping transmission.
    strongest_interferer: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CadResult {
    Busy,
    Clear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceptionOutcome {
    Ok,
    Collided,
    Captured,
    NotListening,
}

impl ReceptionOutcome {
    pub fn is_success(self) -> bool {
        matches!(self, ReceptionOutcome::Ok | ReceptionOutcome::Captured)
    }
}

#[derive(Debug, Clone, Copy)]
struct Listening {
    channel: u8,
    since: SimTime,
}

#[derive(Debug, Clone, Default)]
pub struct Medium {
    capture: CaptureRule,
    next_id: TxId,
    active: BTreeMap<TxId, Record>,
    finished: HashMap<TxId, Record>,
    transmitting: HashMap<NodeId, TxId>,
    listening: HashMap<NodeId, Listening>,
}

impl Medium {
    pub fn new(capture: CaptureRule) -> Result<Self> {
        if !(capture.power_margin_db >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "capture margin {} dB must be non-negative",
                capture.power_margin_db
            )));
        }
        Ok(Medium {
            capture,
            ..Medium::default()
        })
    }

    pub fn begin_transmission(&mut self, tx: OngoingTransmission) -> Result<TxId> {
        if let Some(id) = self.transmitting.get(&tx.sender) {
            return Err(Error::ProtocolViolation(format!(
                "node {} starts a transmission while tx {id} is on the air",
                tx.sender
            )));
        }
        if tx.end <= tx.start {
            return Err(Error::InvalidArgument(
                "transmission must have positive length".into(),
            ));
        }
        let id = self.next_id;
        self.next_id += 1;
        let mut strongest: Option<f64> = None;
        for other in self.active.values_mut() {
            if other.tx.channel == tx.channel && other.tx.end > tx.start {
                other.strongest_interferer = Some(
                    other
                        .strongest_interferer
                        .map_or(tx.tx_power_dbm, |p| p.max(tx.tx_power_dbm)),
                );
                strongest =
                    Some(strongest.map_or(other.tx.tx_power_dbm, |p| p.max(other.tx.tx_power_dbm)));
            }
        }
        self.listening.remove(&tx.sender);
        self.transmitting.insert(tx.sender, id);
        self.active.insert(
            id,
            Record {
                tx,
                strongest_interferer: strongest,
            },
        );
        Ok(id)
    }

    /// Takes `id` off the air. The record stays available for
    /// [`Medium::resolve_reception`] until [`Medium::retire`].
    pub fn end_transmission(&mut self, id: TxId) -> Result<&OngoingTransmission> {
        let rec = self
            .active
            .remove(&id)
            .ok_or_else(|| Error::InvalidArgument(format!("tx {id} is not on the air")))?;
        self.transmitting.remove(&rec.tx.sender);
        let rec = self.finished.entry(id).or_insert(rec);
        Ok(&rec.tx)
    }

    pub fn retire(&mut self, id: TxId) {
        self.finished.remove(&id);
    }

    pub fn is_transmitting(&self, node: NodeId) -> bool {
        self.transmitting.contains_key(&node)
    }

    /// Tunes the receiver. Re-tuning to the current channel keeps continuity.
    pub fn set_listening(&mut self, node: NodeId, channel: Option<u8>, at: SimTime) {
        match channel {
            None => {
                self.listening.remove(&node);
            }
            Some(ch) => {
                if self.transmitting.contains_key(&node) {
                    return;
                }
                match self.listening.get(&node) {
                    Some(l) if l.channel == ch => {}
                    _ => {
                        self.listening.insert(
                            node,
                            Listening {
                                channel: ch,
                                since: at,
                            },
                        );
                    }
                }
            }
        }
    }

    pub fn listening_channel(&self, node: NodeId) -> Option<u8> {
        self.listening.get(&node).map(|l| l.channel)
    }

    /// Channel activity detection at an instant. Whether a transmission
    /// starting at the same instant is seen depends on event order: only one
    /// already begun counts.
    pub fn cad_probe(&self, _node: NodeId, channel: u8, at: SimTime) -> CadResult {
        let busy = self
            .active
            .values()
            .any(|r| r.tx.channel == channel && r.tx.start <= at && r.tx.end > at);
        if busy {
            CadResult::Busy
        } else {
            CadResult::Clear
        }
    }

    pub fn resolve_reception(&self, receiver: NodeId, id: TxId) -> Result<ReceptionOutcome> {
        let rec = self
            .finished
            .get(&id)
            .ok_or_else(|| Error::InvalidArgument(format!("tx {id} has not finished")))?;
        let heard = self
            .listening
            .get(&receiver)
            .is_some_and(|l| l.channel == rec.tx.channel && l.since <= rec.tx.start);
        if !heard || receiver == rec.tx.sender {
            return Ok(ReceptionOutcome::NotListening);
        }
        Ok(match rec.strongest_interferer {
            None => ReceptionOutcome::Ok,
            Some(p)
                if self.capture.enabled
                    && rec.tx.tx_power_dbm - p >= self.capture.power_margin_db =>
            {
                ReceptionOutcome::Captured
            }
            Some(_) => ReceptionOutcome::Collided,
        })
    }

    /// Whether the finished transmission overlapped any other one.
    pub fn was_interfered(&self, id: TxId) -> Option<bool> {
        self.finished
            .get(&id)
            .map(|r| r.strongest_interferer.is_some())
    }
}
