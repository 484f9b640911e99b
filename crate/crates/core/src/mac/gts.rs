//! Frame service in owned transmit GTS.

use crate::error::{Error, Result};
use crate::mac::access::{AccessTimer, ChannelAccess, MacAction, MacCtx};
use crate::mac::{Admission, CfpQueues, DropReason, Frame, GtsAllocation, MacConfig};
use crate::medium::NodeId;

struct InFlight {
    frame: Frame,
    token: u64,
    awaiting_ack: bool,
}

pub struct GtsAccess {
    queues: CfpQueues,
    allocations: Vec<GtsAllocation>,
    in_flight: Option<InFlight>,
    token: u64,
    max_retries: u8,
}

impl GtsAccess {
    pub fn new(mac: &MacConfig, allocations: Vec<GtsAllocation>) -> Self {
        GtsAccess {
            queues: CfpQueues::new(mac.queue_capacity),
            allocations,
            in_flight: None,
            token: 0,
            max_retries: mac.mac_max_frame_retries,
        }
    }
}

impl ChannelAccess for GtsAccess {
    fn name(&self) -> &'static str {
        "gts"
    }

    fn enqueue(&mut self, frame: Frame, _ctx: &mut MacCtx<'_>) -> Result<Admission> {
        let dest = frame.dest.unwrap_or(NodeId::MAX);
        if !self.allocations.iter().any(|a| a.peer_rx == dest) {
            return Err(Error::NoRoute {
                src: frame.src,
                dest,
            });
        }
        Ok(match self.queues.push(frame) {
            Ok(()) => Admission::Accepted,
            Err(_) => Admission::Dropped(DropReason::QueueOverflow),
        })
    }

    fn on_gts_slot(&mut self, alloc: &GtsAllocation, channel: u8, ctx: &mut MacCtx<'_>) {
        if self.in_flight.is_some() {
            return;
        }
        let Some(head) = self.queues.front(alloc.peer_rx) else {
            return;
        };
        let frame = head.clone();
        if !frame.confirmed {
            self.queues.remove(alloc.peer_rx, frame.id);
        }
        self.token += 1;
        self.in_flight = Some(InFlight {
            frame: frame.clone(),
            token: self.token,
            awaiting_ack: false,
        });
        ctx.push(MacAction::Transmit { frame, channel });
    }

    fn on_tx_end(&mut self, frame_id: u64, ctx: &mut MacCtx<'_>) {
        let Some(f) = self
            .in_flight
            .as_mut()
            .filter(|f| f.frame.id == frame_id && !f.awaiting_ack)
        else {
            return;
        };
        if f.frame.confirmed {
            f.awaiting_ack = true;
            let (at, token) = (ctx.now + ctx.ack_wait(), f.token);
            ctx.timer(at, AccessTimer::AckTimeout { token });
        } else {
            let f = self.in_flight.take().expect("checked above");
            ctx.push(MacAction::Done { frame: f.frame });
        }
    }

    fn on_ack(&mut self, frame_id: u64, ctx: &mut MacCtx<'_>) {
        if !self
            .in_flight
            .as_ref()
            .is_some_and(|f| f.frame.id == frame_id && f.awaiting_ack)
        {
            return;
        }
        let f = self.in_flight.take().expect("checked above");
        let dest = f.frame.dest.expect("data frames are unicast");
        if let Some(frame) = self.queues.remove(dest, frame_id) {
            ctx.push(MacAction::Done { frame });
        }
    }

    fn on_timer(&mut self, timer: AccessTimer, ctx: &mut MacCtx<'_>) {
        let AccessTimer::AckTimeout { token } = timer else {
            return;
        };
        if !self
            .in_flight
            .as_ref()
            .is_some_and(|f| f.token == token && f.awaiting_ack)
        {
            return;
        }
        let f = self.in_flight.take().expect("checked above");
        let dest = f.frame.dest.expect("data frames are unicast");
        let Some(head) = self.queues.front_mut(dest).filter(|h| h.id == f.frame.id) else {
            return;
        };
        head.retries += 1;
        if head.retries > self.max_retries {
            let frame = self.queues.remove(dest, f.frame.id).expect("head exists");
            ctx.push(MacAction::Drop {
                frame,
                reason: DropReason::RetryExhausted,
            });
        }
    }

    fn flush(&mut self, reason: DropReason, ctx: &mut MacCtx<'_>) {
        for frame in self.queues.drain() {
            ctx.push(MacAction::Drop { frame, reason });
        }
        // an unconfirmed frame on the air has already left the queue
        if let Some(f) = self.in_flight.take().filter(|f| !f.frame.confirmed) {
            ctx.push(MacAction::Drop {
                frame: f.frame,
                reason,
            });
        }
        self.token += 1;
    }

    fn queue_len(&self, dest: NodeId) -> usize {
        self.queues.len_for(dest)
    }

    fn total_queued(&self) -> usize {
        self.queues.len()
    }
}
