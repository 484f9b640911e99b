use std::time::Duration;

use dsme_lora::phy::*;
use dsme_lora::regulatory::*;
use dsme_lora::{Error, SimTime};
use proptest::prelude::*;

/// Floating point time on air from the transceiver datasheet.
#[allow(clippy::too_many_arguments)]
fn toa_oracle(
    pl: usize,
    sf: u32,
    bw: f64,
    cr: u32,
    preamble: u32,
    crc: bool,
    header: bool,
    ldro: bool,
) -> f64 {
    let tsym = f64::powi(2.0, sf as i32) / bw;
    let de = ldro as i32 as f64;
    let ih = (!header) as i32 as f64;
    let num = 8.0 * pl as f64 - 4.0 * sf as f64 + 28.0 + 16.0 * crc as i32 as f64 - 20.0 * ih;
    let blocks = (num / (4.0 * (sf as f64 - 2.0 * de))).ceil().max(0.0);
    let symbols = 8.0 + blocks * (cr as f64 + 4.0);
    (preamble as f64 + 4.25 + symbols) * tsym
}

#[test]
fn airtime_anchors() {
    let phy = PhyConfig::default();
    let data = phy.time_on_air(27).unwrap().as_secs_f64();
    let ack = phy.time_on_air(5).unwrap().as_secs_f64();
    assert!((data - 0.067).abs() <= 0.002, "{data}");
    assert!((ack - 0.031).abs() <= 0.002, "{ack}");
    // a 67 ms frame every 7.68 s for an hour
    let hourly = 3600.0 / 7.68 * data;
    assert!((hourly - 31.4).abs() < 0.5);
}

#[test]
fn oversize_rejected() {
    let phy = PhyConfig::default();
    assert!(phy.time_on_air(255).is_ok());
    assert!(matches!(
        phy.time_on_air(256),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn channel_plan_layout() {
    let plan = ChannelPlan::eu868();
    assert_eq!(plan.entries().len(), 16);
    assert_eq!(plan.common_channel(), 26);
    let e = plan.entry(26).unwrap();
    assert_eq!(e.duty_cycle_pct, 10.0);
    assert!((e.frequency_mhz - 869.525).abs() < 1e-9);
    for ch in 11..=25u8 {
        let e = plan.entry(ch).unwrap();
        assert_eq!(e.duty_cycle_pct, 1.0);
        assert!((e.frequency_mhz - (865.1 + 0.2 * (ch - 11) as f64)).abs() < 1e-9);
    }
    assert!(plan.entry(27).is_err());
}

#[test]
fn hopping_walks_all_channels() {
    let plan = ChannelPlan::eu868();
    for offset in 0..16 {
        let mut seen: Vec<u8> = (0..16).map(|n| plan.hop(offset, n)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (11..=26).collect::<Vec<u8>>());
        assert_eq!(plan.hop(offset, 3), plan.hop(offset, 19));
    }
}

#[test]
fn duplicate_frequency_rejected() {
    let mut entries = ChannelPlan::eu868().entries().to_vec();
    entries[1].frequency_mhz = entries[0].frequency_mhz;
    assert!(ChannelPlan::new(entries).is_err());
}

#[test]
fn hourly_budget_boundary() {
    let budget = BandBudget::hourly("g", 1.0);
    let mut ledger = AirtimeLedger::new(WindowMode::Sliding);
    let toa = Duration::from_millis(60);
    for i in 0..600u64 {
        ledger
            .record_airtime(1, "g", SimTime::from_millis(i * 5000), toa)
            .unwrap();
    }
    let end = SimTime::from_millis(599 * 5000);
    assert!((ledger.window_airtime(1, "g", end) - 36.0).abs() < 1e-9);
    assert!(!ledger.compliant(1, "g", end, toa, &budget));
    assert!(ledger.compliant(2, "g", end, toa, &budget));
    assert!(ledger.record_airtime(1, "g", end, Duration::ZERO).is_err());
}

proptest! {
    #[test]
    fn toa_matches_oracle(pl in 0usize..=255, sf in 7u8..=12, cr in 5u8..=8, pre in 6u16..=16, crc: bool, header: bool) {
        for bw in [125_000u32, 250_000, 500_000] {
            let cfg = PhyConfig {
                spreading_factor: sf,
                bandwidth_hz: bw,
                coding_rate_denominator: cr,
                preamble_symbols: pre,
                explicit_header: header,
                payload_crc: crc,
                ..PhyConfig::default()
            };
            let ldro = f64::powi(2.0, sf as i32) / bw as f64 >= 0.016;
            let want = toa_oracle(pl, sf as u32, bw as f64, cr as u32 - 4, pre as u32, crc, header, ldro);
            let got = cfg.time_on_air(pl).unwrap().as_secs_f64();
            prop_assert!((got - want).abs() < 1e-8, "{} vs {}", got, want);
        }
    }

    #[test]
    fn toa_monotone(pl in 0usize..255) {
        let phy = PhyConfig::default();
        prop_assert!(phy.time_on_air(pl + 1).unwrap() >= phy.time_on_air(pl).unwrap());
    }

    #[test]
    fn window_additivity(gaps in proptest::collection::vec(1u64..200_000, 1..60), lens in proptest::collection::vec(1u64..500, 60)) {
        let mut ledger = AirtimeLedger::new(WindowMode::Sliding);
        let mut t = 0u64;
        let mut total = 0.0;
        for (g, l) in gaps.iter().zip(&lens) {
            t += g;
            ledger.record_airtime(7, "g", SimTime::from_millis(t), Duration::from_millis(*l)).unwrap();
            total += *l as f64 / 1000.0;
        }
        let sum: f64 = ledger.totals().values().sum();
        prop_assert!((sum - total).abs() < 1e-9);
        // a window covering everything sees all of it
        let mut wide = AirtimeLedger::with_window(Duration::from_secs(1_000_000), WindowMode::Sliding);
        let mut t = 0u64;
        for (g, l) in gaps.iter().zip(&lens) {
            t += g;
            wide.record_airtime(7, "g", SimTime::from_millis(t), Duration::from_millis(*l)).unwrap();
        }
        prop_assert!((wide.window_airtime(7, "g", SimTime::from_millis(t)) - total).abs() < 1e-9);
    }

    #[test]
    fn compliance_monotone(used in 0u64..40_000, next in 1u64..5_000, extra in 0u64..5_000) {
        let budget = BandBudget::hourly("g", 1.0);
        let mut ledger = AirtimeLedger::new(WindowMode::Sliding);
        ledger.record_airtime(1, "g", SimTime::ZERO, Duration::from_millis(used.max(1))).unwrap();
        let at = SimTime::from_millis(1000);
        // a longer frame is never allowed when a shorter one is refused
        if !ledger.compliant(1, "g", at, Duration::from_millis(next), &budget) {
            prop_assert!(!ledger.compliant(1, "g", at, Duration::from_millis(next + extra), &budget));
        }
    }
}
