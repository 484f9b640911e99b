//! Energy accounting from per-period consumption constants.
//!
//! Each superframe period costs a fixed amount depending on whether the radio
//! listens, stays idle in an allocated GTS or sleeps. Frames add a per-frame
//! cost on top.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::{derive_geometry, MacConfig};

/// Per-period consumption in mJ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConstants {
    pub bs_rx: f64,
    pub bs_off: f64,
    pub cap_rx_idle: f64,
    pub cap_off: f64,
    pub cfp_tx_idle_per_gts: f64,
    pub cfp_rx_idle_per_gts: f64,
    pub cfp_off: f64,
    pub cap_tx: f64,
    pub cap_rx: f64,
    pub gts_tx: f64,
    pub gts_rx: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        EnergyConstants {
            bs_rx: 18.28,
            bs_off: 0.08,
            cap_rx_idle: 146.12,
            cap_off: 0.50,
            cfp_tx_idle_per_gts: 2.20,
            cfp_rx_idle_per_gts: 19.31,
            cfp_off: 0.69,
            cap_tx: 12.04,
            cap_rx: 6.44,
            gts_tx: 11.27,
            gts_rx: 6.44,
        }
    }
}

impl EnergyConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.bs_rx,
            self.bs_off,
            self.cap_rx_idle,
            self.cap_off,
            self.cfp_tx_idle_per_gts,
            self.cfp_rx_idle_per_gts,
            self.cfp_off,
            self.cap_tx,
            self.cap_rx,
            self.gts_tx,
            self.gts_rx,
        ];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "energy constants must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyRole {
    CsmaActive,
    GtsSender,
    GtsReceiver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEnergyProfile {
    pub role: EnergyRole,
    pub mac: MacConfig,
    /// Allocations per multisuperframe, all placed in its first superframe.
    pub tx_gts_per_msf: u32,
    pub rx_gts_per_msf: u32,
    /// Frames per second sent (or received, for a receiver).
    pub tx_rate: f64,
}

impl NodeEnergyProfile {
    /// CSMA source listening through the CAP, no GTS.
    pub fn s1(tx_interval_s: f64) -> Self {
        NodeEnergyProfile {
            role: EnergyRole::CsmaActive,
            mac: MacConfig {
                rx_on_when_idle: true,
                ..MacConfig::default()
            },
            tx_gts_per_msf: 0,
            rx_gts_per_msf: 0,
            tx_rate: 1.0 / tx_interval_s,
        }
    }

    /// GTS source with one TX slot and the CAP switched off.
    pub fn s2(tx_interval_s: f64) -> Self {
        NodeEnergyProfile {
            role: EnergyRole::GtsSender,
            mac: MacConfig::default(),
            tx_gts_per_msf: 1,
            rx_gts_per_msf: 0,
            tx_rate: 1.0 / tx_interval_s,
        }
    }

    /// GTS sink with one RX slot and the CAP switched off.
    pub fn s3(tx_interval_s: f64) -> Self {
        NodeEnergyProfile {
            role: EnergyRole::GtsReceiver,
            mac: MacConfig::default(),
            tx_gts_per_msf: 0,
            rx_gts_per_msf: 1,
            tx_rate: 1.0 / tx_interval_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub beacon_mj: f64,
    pub cap_mj: f64,
    pub cfp_mj: f64,
    pub active_mj: f64,
}

impl EnergyBreakdown {
    pub fn passive_mj(&self) -> f64 {
        self.beacon_mj + self.cap_mj + self.cfp_mj
    }

    pub fn total_mj(&self) -> f64 {
        self.passive_mj() + self.active_mj
    }
}

/// Passive consumption of one beacon interval; `active_mj` is left at zero.
pub fn passive_energy_per_beacon_interval(
    p: &NodeEnergyProfile,
    c: &EnergyConstants,
) -> Result<EnergyBreakdown> {
    let geo = derive_geometry(&p.mac)?;
    let n_sf = geo.superframes_per_bi as f64;
    let beacon_mj = c.bs_rx + (n_sf - 1.0) * c.bs_off;
    let mut cap_mj = 0.0;
    let mut cfp_mj = 0.0;
    for sf in 0..geo.superframes_per_bi {
        let sf_in_msf = sf % geo.superframes_per_msf;
        if geo.has_cap(sf_in_msf) {
            cap_mj += if p.mac.rx_on_when_idle {
                c.cap_rx_idle
            } else {
                c.cap_off
            };
        }
        let allocated = sf_in_msf == 0 && p.tx_gts_per_msf + p.rx_gts_per_msf > 0;
        cfp_mj += if allocated {
            p.tx_gts_per_msf as f64 * c.cfp_tx_idle_per_gts
                + p.rx_gts_per_msf as f64 * c.cfp_rx_idle_per_gts
        } else {
            c.cfp_off
        };
    }
    Ok(EnergyBreakdown {
        beacon_mj,
        cap_mj,
        cfp_mj,
        active_mj: 0.0,
    })
}

pub fn active_energy_per_beacon_interval(
    p: &NodeEnergyProfile,
    c: &EnergyConstants,
) -> Result<f64> {
    if !(p.tx_rate >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tx rate {} is negative",
            p.tx_rate
        )));
    }
    let geo = derive_geometry(&p.mac)?;
    let per_frame = match p.role {
        EnergyRole::CsmaActive => c.cap_tx,
        EnergyRole::GtsSender => c.gts_tx,
        EnergyRole::GtsReceiver => c.gts_rx,
    };
    Ok(p.tx_rate * geo.beacon_interval.as_secs_f64() * per_frame)
}

pub fn energy_per_beacon_interval(
    p: &NodeEnergyProfile,
    c: &EnergyConstants,
) -> Result<EnergyBreakdown> {
    let mut b = passive_energy_per_beacon_interval(p, c)?;
    b.active_mj = active_energy_per_beacon_interval(p, c)?;
    Ok(b)
}

/// Average power drawn by the radio subsystem, in mW.
pub fn average_power(p: &NodeEnergyProfile, c: &EnergyConstants) -> Result<f64> {
    let geo = derive_geometry(&p.mac)?;
    Ok(energy_per_beacon_interval(p, c)?.total_mj() / geo.beacon_interval.as_secs_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Battery {
    pub capacity_mah: f64,
    pub voltage_v: f64,
    pub regulator_efficiency: f64,
}

impl Battery {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_mah > 0.0 && self.voltage_v > 0.0)
            || !(self.regulator_efficiency > 0.0 && self.regulator_efficiency <= 1.0)
        {
            return Err(Error::InvalidArgument(
                "battery needs positive capacity and voltage and efficiency in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn energy_j(&self) -> f64 {
        self.capacity_mah * 3.6 * self.voltage_v
    }

    /// Power taken from the battery for a given load power.
    pub fn battery_power_mw(&self, load_mw: f64) -> f64 {
        load_mw / self.regulator_efficiency
    }
}

const SECONDS_PER_YEAR: f64 = 365.0 * 24.0 * 3600.0;

/// Years until the battery is empty at a constant load power.
pub fn lifetime(load_power_mw: f64, battery: &Battery) -> Result<f64> {
    battery.validate()?;
    if !(load_power_mw > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power {load_power_mw} mW must be positive"
        )));
    }
    let joules = battery.energy_j() * battery.regulator_efficiency;
    Ok(joules / (load_power_mw * 1e-3) / SECONDS_PER_YEAR)
}

/// Voltage for which `lifetime(load_power_mw)` equals `target_years`.
pub fn calibrate_voltage(
    target_years: f64,
    load_power_mw: f64,
    capacity_mah: f64,
    regulator_efficiency: f64,
) -> Result<f64> {
    if !(target_years > 0.0) {
        return Err(Error::InvalidArgument(
            "target lifetime must be positive".into(),
        ));
    }
    let unit = Battery {
        capacity_mah,
        voltage_v: 1.0,
        regulator_efficiency,
    };
    Ok(target_years / lifetime(load_power_mw, &unit)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        ((a - b) / b).abs() <= rel
    }

    #[test]
    fn s2_passive_rows() {
        let b = passive_energy_per_beacon_interval(
            &NodeEnergyProfile::s2(20.0),
            &EnergyConstants::default(),
        )
        .unwrap();
        assert!((b.beacon_mj - 18.36).abs() < 1e-9);
        assert!((b.cap_mj - 1.00).abs() < 1e-9);
        assert!((b.cfp_mj - 4.40).abs() < 1e-9);
    }

    #[test]
    fn no_allocation_cap_off() {
        let p = NodeEnergyProfile {
            tx_gts_per_msf: 0,
            ..NodeEnergyProfile::s2(20.0)
        };
        let b = passive_energy_per_beacon_interval(&p, &EnergyConstants::default()).unwrap();
        assert!((b.passive_mj() - (18.36 + 2.0 * (0.50 + 0.69))).abs() < 1e-9);
    }

    #[test]
    fn s1_and_s3() {
        let c = EnergyConstants::default();
        let b = passive_energy_per_beacon_interval(&NodeEnergyProfile::s1(20.0), &c).unwrap();
        assert!((b.cap_mj - 292.24).abs() < 1e-9);
        let b = passive_energy_per_beacon_interval(&NodeEnergyProfile::s3(20.0), &c).unwrap();
        assert!((b.cfp_mj - 38.62).abs() < 1e-9);
    }

    #[test]
    fn power_falls_with_bo() {
        let c = EnergyConstants::default();
        let mut last = f64::INFINITY;
        for bo in 3..=7 {
            let mut p = NodeEnergyProfile::s2(f64::INFINITY);
            p.mac.bo = bo;
            let w = average_power(&p, &c).unwrap();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn lifetime_round_trip() {
        let v = calibrate_voltage(1.82, 0.5807 * 0.9, 2800.0, 0.9).unwrap();
        let years = lifetime(
            0.5807 * 0.9,
            &Battery {
                capacity_mah: 2800.0,
                voltage_v: v,
                regulator_efficiency: 0.9,
            },
        )
        .unwrap();
        assert!(close(years, 1.82, 1e-12));
        assert!(lifetime(
            0.0,
            &Battery {
                capacity_mah: 1.0,
                voltage_v: 1.0,
                regulator_efficiency: 0.9
            }
        )
        .is_err());
    }
}
