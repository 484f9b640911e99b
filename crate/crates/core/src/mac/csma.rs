//! Slotted CSMA-CA in the CAP. With CCA disabled it degenerates to ALOHA
//! with the same backoff draws.

use rand::Rng;

use crate::error::Result;
use crate::mac::access::{AccessTimer, ChannelAccess, MacAction, MacCtx};
use crate::mac::{Admission, DropReason, FifoQueue, Frame, MacConfig};
use crate::medium::{CadResult, NodeId};
use crate::time::SimTime;

const CCA_PROBES: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Idle,
    Backoff,
    Transmitting,
    AwaitAck,
}

pub struct CsmaAccess {
    cca: bool,
    queue: FifoQueue,
    state: State,
    token: u64,
    nb: u8,
    be: u8,
    min_be: u8,
    max_be: u8,
    max_backoffs: u8,
    max_retries: u8,
}

impl CsmaAccess {
    pub fn new(mac: &MacConfig, cca: bool) -> Self {
        CsmaAccess {
            cca,
            queue: FifoQueue::new(mac.cap_queue_capacity),
            state: State::Idle,
            token: 0,
            nb: 0,
            be: mac.mac_min_be,
            min_be: mac.mac_min_be,
            max_be: mac.mac_max_be,
            max_backoffs: mac.mac_max_csma_backoffs,
            max_retries: mac.mac_max_frame_retries,
        }
    }

    fn start_service(&mut self, from: SimTime, ctx: &mut MacCtx<'_>) {
        self.state = State::Idle;
        if self.queue.is_empty() {
            return;
        }
        self.nb = 0;
        self.be = self.min_be;
        self.schedule_backoff(from, ctx);
    }

    /// Time from the first CCA to the end of the exchange.
    fn exchange_length(&self, ctx: &MacCtx<'_>) -> SimTime {
        let head = self.queue.front().expect("head in service");
        let bp = ctx.geometry.backoff_period();
        let mut need = SimTime(bp.as_micros() * CCA_PROBES as u64) + ctx.airtime(head);
        if head.confirmed {
            need += ctx.ack_wait();
        }
        need
    }

    /// Random backoff counted from the first boundary at or after `from`.
    fn schedule_backoff(&mut self, from: SimTime, ctx: &mut MacCtx<'_>) {
        let need = self.exchange_length(ctx);
        let (cap_start, cap_end) = ctx.geometry.cap_window(ctx.now);
        if need > cap_end - cap_start {
            self.drop_head(DropReason::CsmaFailure, ctx);
            return self.start_service(from, ctx);
        }
        let mut from = from;
        let t = loop {
            let periods = ctx.rng.random_range(0..1u64 << self.be);
            let t = ctx.geometry.cap_advance(from, periods);
            let (_, end) = ctx.geometry.cap_window(t);
            if t + need <= end {
                break t;
            }
            // not enough CAP left: draw again from the start of the next one
            from = ctx.geometry.cap_window(end).0;
        };
        self.token += 1;
        self.state = State::Backoff;
        ctx.timer(
            t,
            AccessTimer::Cca {
                token: self.token,
                probe: 0,
            },
        );
    }

    fn drop_head(&mut self, reason: DropReason, ctx: &mut MacCtx<'_>) {
        if let Some(frame) = self.queue.pop() {
            ctx.push(MacAction::Drop { frame, reason });
        }
    }

    fn finish_head(&mut self, ctx: &mut MacCtx<'_>) {
        if let Some(frame) = self.queue.pop() {
            ctx.push(MacAction::Done { frame });
        }
        self.start_service(ctx.now, ctx);
    }
}

impl ChannelAccess for CsmaAccess {
    fn name(&self) -> &'static str {
        if self.cca {
            "csma"
        } else {
            "aloha"
        }
    }

    fn enqueue(&mut self, frame: Frame, ctx: &mut MacCtx<'_>) -> Result<Admission> {
        if self.queue.push(frame).is_err() {
            return Ok(Admission::Dropped(DropReason::QueueOverflow));
        }
        if self.state == State::Idle {
            self.start_service(ctx.now, ctx);
        }
        Ok(Admission::Accepted)
    }

    fn on_timer(&mut self, timer: AccessTimer, ctx: &mut MacCtx<'_>) {
        match timer {
            AccessTimer::Cca { token, probe }
                if token == self.token && self.state == State::Backoff =>
            {
                let busy = self.cca
                    && ctx
                        .medium
                        .cad_probe(ctx.node, ctx.plan.common_channel(), ctx.now)
                        == CadResult::Busy;
                if self.cca {
                    ctx.push(MacAction::Cca { busy });
                }
                let bp = ctx.geometry.backoff_period();
                if busy {
                    self.nb += 1;
                    self.be = (self.be + 1).min(self.max_be);
                    if self.nb > self.max_backoffs {
                        self.drop_head(DropReason::CsmaFailure, ctx);
                        self.start_service(ctx.now + bp, ctx);
                    } else {
                        // the CCA used up this backoff period
                        self.schedule_backoff(ctx.now + bp, ctx);
                    }
                } else if probe + 1 < CCA_PROBES {
                    ctx.timer(
                        ctx.now + bp,
                        AccessTimer::Cca {
                            token,
                            probe: probe + 1,
                        },
                    );
                } else {
                    ctx.timer(ctx.now + bp, AccessTimer::TxStart { token });
                }
            }
            AccessTimer::TxStart { token }
                if token == self.token && self.state == State::Backoff =>
            {
                let frame = self.queue.front().expect("head in service").clone();
                self.state = State::Transmitting;
                ctx.push(MacAction::Transmit {
                    frame,
                    channel: ctx.plan.common_channel(),
                });
            }
            AccessTimer::AckTimeout { token }
                if token == self.token && self.state == State::AwaitAck =>
            {
                let head = self.queue.front_mut().expect("head in service");
                head.retries += 1;
                if head.retries > self.max_retries {
                    self.drop_head(DropReason::RetryExhausted, ctx);
                    self.start_service(ctx.now, ctx);
                } else {
                    self.nb = 0;
                    self.be = self.min_be;
                    self.schedule_backoff(ctx.now, ctx);
                }
            }
            _ => {}
        }
    }

    fn on_tx_end(&mut self, frame_id: u64, ctx: &mut MacCtx<'_>) {
        if self.state != State::Transmitting || self.queue.front().map(|f| f.id) != Some(frame_id) {
            return;
        }
        if self.queue.front().is_some_and(|f| f.confirmed) {
            self.token += 1;
            self.state = State::AwaitAck;
            let at = ctx.now + ctx.ack_wait();
            ctx.timer(at, AccessTimer::AckTimeout { token: self.token });
        } else {
            self.finish_head(ctx);
        }
    }

    fn on_ack(&mut self, frame_id: u64, ctx: &mut MacCtx<'_>) {
        if self.state == State::AwaitAck && self.queue.front().map(|f| f.id) == Some(frame_id) {
            self.token += 1;
            self.finish_head(ctx);
        }
    }

    fn flush(&mut self, reason: DropReason, ctx: &mut MacCtx<'_>) {
        for frame in self.queue.drain() {
            ctx.push(MacAction::Drop { frame, reason });
        }
        self.token += 1;
        self.state = State::Idle;
    }

    fn queue_len(&self, _dest: NodeId) -> usize {
        self.queue.len()
    }

    fn total_queued(&self) -> usize {
        self.queue.len()
    }
}
