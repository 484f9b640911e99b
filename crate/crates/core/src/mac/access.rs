use std::collections::BTreeMap;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::mac::{
    Admission, CsmaAccess, DropReason, Frame, GtsAccess, GtsAllocation, MacConfig,
    SuperframeGeometry,
};
use crate::medium::{Medium, NodeId};
use crate::phy::{ChannelPlan, PhyConfig};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessTimer {
    Cca { token: u64, probe: u8 },
    TxStart { token: u64 },
    AckTimeout { token: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MacAction {
    Transmit {
        frame: Frame,
        channel: u8,
    },
    Timer {
        at: SimTime,
        timer: AccessTimer,
    },
    Drop {
        frame: Frame,
        reason: DropReason,
    },
    /// The frame left the MAC after its last transmission.
    Done {
        frame: Frame,
    },
    Cca {
        busy: bool,
    },
}

/// Everything a strategy may look at or ask for during one callback.
pub struct MacCtx<'a> {
    pub now: SimTime,
    pub node: NodeId,
    pub rng: &'a mut dyn RngCore,
    pub medium: &'a Medium,
    pub geometry: &'a SuperframeGeometry,
    pub mac: &'a MacConfig,
    pub phy: &'a PhyConfig,
    pub plan: &'a ChannelPlan,
    pub actions: &'a mut Vec<MacAction>,
}

impl MacCtx<'_> {
    pub fn push(&mut self, a: MacAction) {
        self.actions.push(a);
    }

    pub fn timer(&mut self, at: SimTime, timer: AccessTimer) {
        self.actions.push(MacAction::Timer { at, timer });
    }

    pub fn airtime(&self, frame: &Frame) -> SimTime {
        SimTime::from_duration(
            self.phy
                .time_on_air(frame.phy_bytes())
                .expect("frame sizes are validated"),
        )
    }

    /// How long after the end of a confirmed frame the ACK must have arrived.
    pub fn ack_wait(&self) -> SimTime {
        let ack = Frame::ack(0, 0, 0, 0, SimTime::ZERO);
        self.mac.ack_turnaround()
            + self.airtime(&ack)
            + SimTime::from_millis(self.mac.ack_wait_margin_symbols)
    }
}

/// A channel-access discipline driven by the event loop.
pub trait ChannelAccess: Send {
    fn name(&self) -> &'static str;

    fn enqueue(&mut self, frame: Frame, ctx: &mut MacCtx<'_>) -> Result<Admission>;

    fn on_timer(&mut self, timer: AccessTimer, ctx: &mut MacCtx<'_>);

    /// Start of an owned TX GTS.
    fn on_gts_slot(&mut self, _alloc: &GtsAllocation, _channel: u8, _ctx: &mut MacCtx<'_>) {}

    fn on_tx_end(&mut self, frame_id: u64, ctx: &mut MacCtx<'_>);

    fn on_ack(&mut self, frame_id: u64, ctx: &mut MacCtx<'_>);

    /// Discards every queued frame.
    fn flush(&mut self, reason: DropReason, ctx: &mut MacCtx<'_>);

    fn queue_len(&self, dest: NodeId) -> usize;

    fn total_queued(&self) -> usize;
}

pub struct AccessParams<'a> {
    pub node: NodeId,
    pub mac: &'a MacConfig,
    pub tx_allocations: Vec<GtsAllocation>,
}

pub type AccessFactory = fn(&AccessParams<'_>) -> Box<dyn ChannelAccess>;

#[derive(Clone)]
pub struct AccessRegistry {
    factories: BTreeMap<String, AccessFactory>,
}

impl Default for AccessRegistry {
    fn default() -> Self {
        let mut r = AccessRegistry {
            factories: BTreeMap::new(),
        };
        r.register("csma", |p| Box::new(CsmaAccess::new(p.mac, true)));
        r.register("aloha", |p| Box::new(CsmaAccess::new(p.mac, false)));
        r.register("gts", |p| {
            Box::new(GtsAccess::new(p.mac, p.tx_allocations.clone()))
        });
        r
    }
}

impl AccessRegistry {
    pub fn register(&mut self, name: &str, factory: AccessFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn create(&self, name: &str, params: &AccessParams<'_>) -> Result<Box<dyn ChannelAccess>> {
        let f = self.factories.get(name).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown channel access '{name}' (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        Ok(f(params))
    }
}
