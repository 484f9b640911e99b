//! IEEE 802.15.4 DSME over LoRa: a discrete-event network simulator, an
//! analytic model of GTS queueing delay, duty-cycle planning and energy
//! accounting.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod mac;
pub mod medium;
pub mod phy;
pub mod queue_model;
pub mod regulatory;
pub mod sim;
pub mod time;

pub use error::{Error, Result};
pub use time::SimTime;
