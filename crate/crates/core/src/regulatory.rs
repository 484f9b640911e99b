//! Duty-cycle budgets and airtime bookkeeping per (node, band).

use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::NodeId;
use crate::time::SimTime;

pub const HOUR: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone, PartialEq)]
pub struct BandBudget {
    pub band_id: String,
    pub duty_cycle_pct: f64,
    pub window: Duration,
}

impl BandBudget {
    pub fn hourly(band_id: impl Into<String>, duty_cycle_pct: f64) -> Self {
        BandBudget {
            band_id: band_id.into(),
            duty_cycle_pct,
            window: HOUR,
        }
    }

    pub fn budget_seconds(&self) -> f64 {
        self.duty_cycle_pct / 100.0 * self.window.as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    #[default]
    Sliding,
    /// Aligned windows [k W, (k + 1) W).
    Fixed,
}

#[derive(Debug, Clone, Default)]
pub struct AirtimeLedger {
    window: Duration,
    mode: WindowMode,
    records: BTreeMap<(NodeId, String), VecDeque<(SimTime, Duration)>>,
}

impl AirtimeLedger {
    pub fn new(mode: WindowMode) -> Self {
        AirtimeLedger {
            window: HOUR,
            mode,
            records: BTreeMap::new(),
        }
    }

    pub fn with_window(window: Duration, mode: WindowMode) -> Self {
        AirtimeLedger {
            window,
            mode,
            records: BTreeMap::new(),
        }
    }

    pub fn record_airtime(
        &mut self,
        node: NodeId,
        band: &str,
        at: SimTime,
        duration: Duration,
    ) -> Result<()> {
        if duration.is_zero() {
            return Err(Error::InvalidArgument(
                "airtime record needs a positive duration".into(),
            ));
        }
        self.records
            .entry((node, band.to_string()))
            .or_default()
            .push_back((at, duration));
        Ok(())
    }

    fn window_start(&self, at: SimTime) -> Option<SimTime> {
        let w = SimTime::from_duration(self.window).as_micros();
        match self.mode {
            // exclusive lower bound
            WindowMode::Sliding => at.as_micros().checked_sub(w).map(SimTime),
            WindowMode::Fixed => (at.as_micros() >= w).then(|| SimTime(at.as_micros() / w * w - 1)),
        }
    }

    pub fn window_airtime(&self, node: NodeId, band: &str, at: SimTime) -> f64 {
        let Some(recs) = self.records.get(&(node, band.to_string())) else {
            return 0.0;
        };
        let lower = self.window_start(at);
        recs.iter()
            .filter(|(t, _)| *t <= at && lower.is_none_or(|l| *t > l))
            .map(|(_, d)| d.as_secs_f64())
            .sum()
    }

    pub fn compliant(
        &self,
        node: NodeId,
        band: &str,
        at: SimTime,
        next: Duration,
        budget: &BandBudget,
    ) -> bool {
        self.window_airtime(node, band, at) + next.as_secs_f64() <= budget.budget_seconds() + 1e-9
    }

    /// Drops records that can no longer fall inside any window ending at or after `at`.
    pub fn prune(&mut self, at: SimTime) {
        let Some(lower) = self.window_start(at) else {
            return;
        };
        for recs in self.records.values_mut() {
            while recs.front().is_some_and(|(t, _)| *t <= lower) {
                recs.pop_front();
            }
        }
    }

    /// Total airtime ever recorded, per (node, band), in seconds.
    pub fn totals(&self) -> BTreeMap<(NodeId, String), f64> {
        self.records
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|(_, d)| d.as_secs_f64()).sum()))
            .collect()
    }
}

/// Per-source rate limit (packets/hour) for confirmed traffic to one sink.
pub fn max_rate_star(
    n_sources: u32,
    data_toa: Duration,
    ack_toa: Duration,
    data_band_pct: f64,
    ack_band_pct: f64,
) -> Result<f64> {
    if n_sources == 0 {
        return Err(Error::InvalidArgument("need at least one source".into()));
    }
    if data_toa.is_zero() || ack_toa.is_zero() {
        return Err(Error::InvalidArgument("airtimes must be positive".into()));
    }
    let src = BandBudget::hourly("data", data_band_pct).budget_seconds() / data_toa.as_secs_f64();
    let sink = BandBudget::hourly("ack", ack_band_pct).budget_seconds()
        / ack_toa.as_secs_f64()
        / n_sources as f64;
    Ok(src.min(sink))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOA: Duration = Duration::from_millis(67);

    #[test]
    fn budgets() {
        assert!((BandBudget::hourly("g", 1.0).budget_seconds() - 36.0).abs() < 1e-12);
        assert!((BandBudget::hourly("g3", 10.0).budget_seconds() - 360.0).abs() < 1e-12);
    }

    #[test]
    fn hourly_limit_boundary() {
        let budget = BandBudget::hourly("g", 1.0);
        let mut l = AirtimeLedger::new(WindowMode::Sliding);
        let end = SimTime::from_secs_f64(3599.0);
        for i in 0..536u64 {
            l.record_airtime(1, "g", SimTime::from_millis(i * 6_000), TOA)
                .unwrap();
        }
        assert!((l.window_airtime(1, "g", end) - 35.912).abs() < 1e-9);
        assert!(l.compliant(1, "g", end, Duration::ZERO, &budget));
        l.record_airtime(1, "g", SimTime::from_millis(536 * 6_000), TOA)
            .unwrap();
        l.record_airtime(1, "g", SimTime::from_millis(537 * 6_000), TOA)
            .unwrap();
        assert!(!l.compliant(1, "g", end, Duration::ZERO, &budget));
    }

    #[test]
    fn empty_and_other_band() {
        let l = AirtimeLedger::new(WindowMode::Sliding);
        assert_eq!(l.window_airtime(3, "g", SimTime::from_millis(10)), 0.0);
        let mut l = AirtimeLedger::new(WindowMode::Sliding);
        l.record_airtime(3, "g3", SimTime::ZERO, Duration::from_secs(60))
            .unwrap();
        assert!(l.compliant(
            3,
            "g3",
            SimTime::from_millis(1),
            TOA,
            &BandBudget::hourly("g3", 10.0)
        ));
        assert_eq!(l.window_airtime(3, "g", SimTime::from_millis(1)), 0.0);
        assert!(l
            .record_airtime(3, "g", SimTime::ZERO, Duration::ZERO)
            .is_err());
    }

    #[test]
    fn window_slides() {
        let mut l = AirtimeLedger::new(WindowMode::Sliding);
        l.record_airtime(1, "g", SimTime::from_secs_f64(10.0), TOA)
            .unwrap();
        assert!(l.window_airtime(1, "g", SimTime::from_secs_f64(3609.0)) > 0.0);
        assert_eq!(
            l.window_airtime(1, "g", SimTime::from_secs_f64(3610.0)),
            0.0
        );
    }

    #[test]
    fn fixed_window_resets() {
        let mut l = AirtimeLedger::new(WindowMode::Fixed);
        l.record_airtime(1, "g", SimTime::from_secs_f64(3500.0), TOA)
            .unwrap();
        assert!(l.window_airtime(1, "g", SimTime::from_secs_f64(3599.0)) > 0.0);
        assert_eq!(
            l.window_airtime(1, "g", SimTime::from_secs_f64(3600.0)),
            0.0
        );
    }

    #[test]
    fn planner_values() {
        let data = Duration::from_micros(66_816);
        let ack = Duration::from_micros(30_976);
        let r = max_rate_star(115, data, ack, 1.0, 1.0).unwrap();
        assert!((r - 10.1).abs() < 0.1);
        assert!(max_rate_star(0, data, ack, 1.0, 1.0).is_err());
    }
}
