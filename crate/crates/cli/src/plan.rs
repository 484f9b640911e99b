use anyhow::{bail, Result};
use dsme_lora::mac::{ACK_MAC_BYTES, DATA_HEADER_BYTES};
use dsme_lora::phy::{PhyConfig, FCS_BYTES};
use dsme_lora::regulatory::max_rate_star;

use crate::table::{f, Table};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, default_value_t = 1)]
    pub min_sources: u32,
    #[arg(long, default_value_t = 200)]
    pub max_sources: u32,
    #[arg(long, default_value_t = 1)]
    pub step: u32,
    #[arg(long, default_value_t = 16)]
    pub payload: usize,
    /// Duty cycle limits in percent; data and ACKs use the same band.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0])]
    pub bands: Vec<f64>,
    #[arg(long, default_value_t = 7)]
    pub sf: u8,
    #[arg(long)]
    pub csv: bool,
}

pub fn run(a: Args) -> Result<()> {
    if a.min_sources == 0 || a.max_sources < a.min_sources || a.step == 0 {
        bail!("need 1 <= --min-sources <= --max-sources and a positive --step");
    }
    if a.bands.iter().any(|b| !(*b > 0.0 && *b <= 100.0)) {
        bail!("band limits must be in (0, 100] percent");
    }
    let phy = PhyConfig {
        spreading_factor: a.sf,
        ..PhyConfig::default()
    };
    let data = phy.time_on_air(DATA_HEADER_BYTES + a.payload + FCS_BYTES)?;
    let ack = phy.time_on_air(ACK_MAC_BYTES + FCS_BYTES)?;
    let mut headers = vec!["n_sources".to_string()];
    headers.extend(a.bands.iter().map(|b| format!("rate_{b}pct_per_h")));
    let mut t = Table::new(headers);
    for n in (a.min_sources..=a.max_sources).step_by(a.step as usize) {
        let mut row = vec![n.to_string()];
        for &b in &a.bands {
            row.push(f(max_rate_star(n, data, ack, b, b)?, 3));
        }
        t.row(row);
    }
    t.print(a.csv)
}
