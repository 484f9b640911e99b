use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use dsme_lora::energy::{
    average_power, calibrate_voltage, energy_per_beacon_interval, lifetime, Battery,
    EnergyConstants, NodeEnergyProfile,
};
use dsme_lora::mac::derive_geometry;
use dsme_lora::queue_model::{mean_delay, ModelParams};

use crate::table::{f, say, Table};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// CSMA sender listening through the CAP.
    S1,
    /// GTS sender, CAP off.
    S2,
    /// GTS receiver, CAP off.
    S3,
}

#[derive(clap::Args)]
pub struct Args {
    /// Profiles to report; all three when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub profile: Vec<Profile>,
    /// Mean interarrival time in seconds (default 20, or 900 for --lifetime-table).
    #[arg(long)]
    pub tx_interval: Option<f64>,
    #[arg(long)]
    pub mo: Option<u8>,
    #[arg(long)]
    pub bo: Option<u8>,
    /// Passive power of a GTS sender for BO = 3..=7.
    #[arg(long)]
    pub bo_sweep: bool,
    /// Delay, power and lifetime of a GTS sender over MO = 3..=7.
    #[arg(long)]
    pub lifetime_table: bool,
    #[arg(long, default_value_t = 2800.0)]
    pub capacity_mah: f64,
    #[arg(long, default_value_t = 0.9)]
    pub efficiency: f64,
    /// Battery voltage; calibrated from --target-years on the MO=3 row when omitted.
    #[arg(long)]
    pub voltage: Option<f64>,
    #[arg(long, default_value_t = 1.82)]
    pub target_years: f64,
    /// TOML file overriding the per-period constants.
    #[arg(long)]
    pub constants: Option<PathBuf>,
    #[arg(long)]
    pub csv: bool,
}

fn constants(a: &Args) -> Result<EnergyConstants> {
    let c = match &a.constants {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<EnergyConstants>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => EnergyConstants::default(),
    };
    c.validate()?;
    Ok(c)
}

fn profile(p: Profile, a: &Args) -> NodeEnergyProfile {
    let tx = a.tx_interval.unwrap_or(20.0);
    let mut n = match p {
        Profile::S1 => NodeEnergyProfile::s1(tx),
        Profile::S2 => NodeEnergyProfile::s2(tx),
        Profile::S3 => NodeEnergyProfile::s3(tx),
    };
    if let Some(mo) = a.mo {
        n.mac.mo = mo;
        n.mac.bo = n.mac.bo.max(mo);
    }
    if let Some(bo) = a.bo {
        n.mac.bo = bo;
    }
    n
}

pub fn run(a: Args) -> Result<()> {
    if a.tx_interval.is_some_and(|t| !(t > 0.0)) {
        bail!("--tx-interval must be positive");
    }
    let c = constants(&a)?;
    if a.bo_sweep {
        let mut t = Table::new(["bo", "beacon_interval_s", "passive_power_mw"]);
        for bo in 3..=7u8 {
            let mut p = NodeEnergyProfile::s2(f64::INFINITY);
            p.mac.bo = bo;
            let bi = derive_geometry(&p.mac)?.beacon_interval.as_secs_f64();
            t.row([bo.to_string(), f(bi, 2), f(average_power(&p, &c)?, 4)]);
        }
        return t.print(a.csv);
    }
    if a.lifetime_table {
        return lifetime_table(&a, &c);
    }
    let chosen = if a.profile.is_empty() {
        vec![Profile::S1, Profile::S2, Profile::S3]
    } else {
        a.profile.clone()
    };
    let mut t = Table::new([
        "profile",
        "beacon_mj",
        "cap_mj",
        "cfp_mj",
        "passive_mj",
        "active_mj",
        "total_mj",
        "power_mw",
    ]);
    for p in chosen {
        let n = profile(p, &a);
        let b = energy_per_beacon_interval(&n, &c)?;
        let name = match p {
            Profile::S1 => "s1",
            Profile::S2 => "s2",
            Profile::S3 => "s3",
        };
        t.row([
            name.to_string(),
            f(b.beacon_mj, 2),
            f(b.cap_mj, 2),
            f(b.cfp_mj, 2),
            f(b.passive_mj(), 2),
            f(b.active_mj, 2),
            f(b.total_mj(), 2),
            f(average_power(&n, &c)?, 4),
        ]);
    }
    t.print(a.csv)
}

fn lifetime_table(a: &Args, c: &EnergyConstants) -> Result<()> {
    let tx = a.tx_interval.unwrap_or(900.0);
    let sender = |mo: u8| {
        let mut p = NodeEnergyProfile::s2(tx);
        p.mac.mo = mo;
        p.mac.bo = a.bo.unwrap_or(7).max(mo);
        p
    };
    let voltage = match a.voltage {
        Some(v) => v,
        None => calibrate_voltage(
            a.target_years,
            average_power(&sender(3), c)?,
            a.capacity_mah,
            a.efficiency,
        )?,
    };
    let battery = Battery {
        capacity_mah: a.capacity_mah,
        voltage_v: voltage,
        regulator_efficiency: a.efficiency,
    };
    battery.validate()?;
    let mut t = Table::new([
        "mo",
        "mean_delay_s",
        "load_power_mw",
        "battery_power_mw",
        "lifetime_years",
    ]);
    for mo in 3..=7u8 {
        let p = sender(mo);
        let m = ModelParams::for_mo(mo, tx)?;
        let delay = mean_delay(m.lambda, m.t_msf).map_or("unstable".to_string(), |d| f(d, 2));
        let load = average_power(&p, c)?;
        t.row([
            mo.to_string(),
            delay,
            f(load, 4),
            f(battery.battery_power_mw(load), 4),
            f(lifetime(load, &battery)?, 3),
        ]);
    }
    t.print(a.csv)?;
    if !a.csv {
        say(format!(
            "\nbattery {:.0} mAh at {:.3} V, regulator efficiency {}",
            a.capacity_mah, voltage, a.efficiency
        ))?;
    }
    Ok(())
}
