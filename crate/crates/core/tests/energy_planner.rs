use std::time::Duration;

use dsme_lora::energy::*;
use dsme_lora::phy::PhyConfig;
use dsme_lora::regulatory::max_rate_star;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn sender(mo: u8, bo: u8, tx_interval_s: f64) -> NodeEnergyProfile {
    let mut p = NodeEnergyProfile::s2(tx_interval_s);
    p.mac.mo = mo;
    p.mac.bo = bo;
    p
}

#[test]
fn passive_rows() {
    let c = EnergyConstants::default();
    let s1 = passive_energy_per_beacon_interval(&NodeEnergyProfile::s1(20.0), &c).unwrap();
    let s2 = passive_energy_per_beacon_interval(&NodeEnergyProfile::s2(20.0), &c).unwrap();
    let s3 = passive_energy_per_beacon_interval(&NodeEnergyProfile::s3(20.0), &c).unwrap();
    assert!(rel(s1.cap_mj, 292.23) < 0.02);
    assert!(rel(s1.cfp_mj, 1.38) < 0.02);
    assert!(rel(s2.cfp_mj, 4.40) < 0.02);
    assert!(rel(s3.cfp_mj, 38.62) < 0.02);
    for b in [s1, s2, s3] {
        assert!(rel(b.beacon_mj, 18.36) < 0.02);
    }
}

#[test]
fn scenario_totals() {
    let c = EnergyConstants::default();
    let s1 = energy_per_beacon_interval(&NodeEnergyProfile::s1(20.0), &c).unwrap();
    let s3 = energy_per_beacon_interval(&NodeEnergyProfile::s3(20.0), &c).unwrap();
    assert!(rel(s1.total_mj(), 323.09) < 0.05, "{}", s1.total_mj());
    assert!(rel(s3.total_mj(), 63.89) < 0.05, "{}", s3.total_mj());
    // S2 active is measured at about twice the per-frame composition, so only
    // the active term's tolerance applies
    let s2 = energy_per_beacon_interval(&NodeEnergyProfile::s2(20.0), &c).unwrap();
    assert!(rel(s2.active_mj, 16.91) < 0.55);
}

#[test]
fn power_endpoints() {
    let c = EnergyConstants::default();
    // passive only: beacon + CAP off + one TX GTS idle per superframe
    let bo3 = (18.28 + 0.50 + 2.20) / 7.68;
    let bo7 = (18.28 + 15.0 * 0.08 + 16.0 * 0.50 + 16.0 * 2.20) / 122.88;
    let p3 = average_power(&sender(3, 3, f64::INFINITY), &c).unwrap();
    let p7 = average_power(&sender(3, 7, f64::INFINITY), &c).unwrap();
    assert!((p3 - bo3).abs() < 1e-9 && (p7 - bo7).abs() < 1e-9);
    assert!(rel(p3, 2.73) < 0.05);
    assert!(rel(p7, 0.49) < 0.05);
}

#[test]
fn lifetime_table() {
    let c = EnergyConstants::default();
    let rows = [
        (3, 0.58, 1.82),
        (4, 0.47, 2.24),
        (5, 0.42, 2.53),
        (6, 0.39, 2.71),
        (7, 0.38, 2.81),
    ];
    let load = |mo| average_power(&sender(mo, 7, 900.0), &c).unwrap();
    let v = calibrate_voltage(1.82, load(3), 2800.0, 0.9).unwrap();
    let battery = Battery {
        capacity_mah: 2800.0,
        voltage_v: v,
        regulator_efficiency: 0.9,
    };
    for (mo, power, years) in rows {
        let l = load(mo);
        assert!(rel(battery.battery_power_mw(l), power) < 0.05, "MO {mo}");
        assert!(rel(lifetime(l, &battery).unwrap(), years) < 0.05, "MO {mo}");
    }
}

#[test]
fn lifetime_by_hand() {
    let b = Battery {
        capacity_mah: 1000.0,
        voltage_v: 3.0,
        regulator_efficiency: 0.5,
    };
    // 10.8 kJ, half usable, at 1 mW
    let want = 5400.0 / 1e-3 / (365.0 * 86400.0);
    assert!(rel(lifetime(1.0, &b).unwrap(), want) < 1e-12);
}

#[test]
fn invalid_inputs() {
    let c = EnergyConstants {
        cap_off: -1.0,
        ..EnergyConstants::default()
    };
    assert!(c.validate().is_err());
    let p = NodeEnergyProfile {
        tx_rate: -1.0,
        ..NodeEnergyProfile::s2(10.0)
    };
    assert!(active_energy_per_beacon_interval(&p, &EnergyConstants::default()).is_err());
    let b = Battery {
        capacity_mah: 1.0,
        voltage_v: 1.0,
        regulator_efficiency: 1.5,
    };
    assert!(lifetime(1.0, &b).is_err());
}

#[test]
fn planner_points() {
    let phy = PhyConfig::default();
    let data = phy.time_on_air(27).unwrap();
    let ack = phy.time_on_air(5).unwrap();
    let r115 = max_rate_star(115, data, ack, 1.0, 1.0).unwrap();
    assert!(rel(r115, 10.0) < 0.10, "{r115}");
    let r10 = max_rate_star(10, data, ack, 1.0, 1.0).unwrap();
    assert!(rel(r10, 100.0) < 0.20, "{r10}");
    let r10_g3 = max_rate_star(10, data, ack, 10.0, 10.0).unwrap();
    assert!(rel(r10_g3, 1000.0) < 0.20, "{r10_g3}");
    // one source: the sender's own budget binds
    let r1 = max_rate_star(1, data, ack, 1.0, 1.0).unwrap();
    assert!(rel(r1, 36.0 / data.as_secs_f64()) < 1e-12);
    assert!(max_rate_star(0, data, ack, 1.0, 1.0).is_err());
    assert!(max_rate_star(3, Duration::ZERO, ack, 1.0, 1.0).is_err());
}
