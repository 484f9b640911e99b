use anyhow::{bail, Result};
use dsme_lora::queue_model::{
    delay_cdf, max_throughput, mean_delay, mean_queue_length, msf_duration_s, pi0_closed_form,
    queue_length_pmf, rho_max, stationary_pi, ModelParams, DEFAULT_CONFIDENCE, DEFAULT_TRUNCATION,
};
use dsme_lora::Error;

use crate::table::{f, say, Table};

#[derive(clap::Args)]
pub struct Args {
    /// Load per multisuperframe (lambda * T_msf).
    #[arg(long, conflicts_with_all = ["lambda", "mo"])]
    pub rho: Option<f64>,
    /// Arrival rate in packets per second, together with --t-msf.
    #[arg(long, requires = "t_msf", conflicts_with = "mo")]
    pub lambda: Option<f64>,
    /// Multisuperframe duration in seconds.
    #[arg(long)]
    pub t_msf: Option<f64>,
    /// Multisuperframe order (SO = 3), together with --tx-interval.
    #[arg(long, requires = "tx_interval")]
    pub mo: Option<u8>,
    /// Mean interarrival time in seconds.
    #[arg(long)]
    pub tx_interval: Option<f64>,
    /// Largest queue length / delay bound (in multisuperframes) to tabulate.
    #[arg(long, default_value_t = 30)]
    pub max_queue: usize,
    /// Maximum throughput per MO for the default queue.
    #[arg(long)]
    pub table5: bool,
    /// Mean delay over MO x TX interval.
    #[arg(long)]
    pub heatmap: bool,
    /// TX intervals (s) for --heatmap.
    #[arg(long, value_delimiter = ',', default_values_t = [40.0, 80.0, 160.0, 320.0, 900.0])]
    pub intervals: Vec<f64>,
    /// Queue capacity used for the throughput search.
    #[arg(long, default_value_t = 22)]
    pub capacity: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    /// CSV on stdout instead of an aligned table.
    #[arg(long)]
    pub csv: bool,
}

fn explain(e: Error) -> anyhow::Error {
    match e {
        Error::NonConvergent(rho) => anyhow::anyhow!(
            "load rho = {rho:.4} is not below 1: a single GTS per multisuperframe serves at most one packet \
             per T_msf, so the queue grows without bound. Lower the rate or the multisuperframe order."
        ),
        e => e.into(),
    }
}

pub fn run(a: Args) -> Result<()> {
    if a.table5 {
        return table5(&a);
    }
    if a.heatmap {
        return heatmap(&a);
    }
    let p = match (a.rho, a.lambda, a.t_msf, a.mo, a.tx_interval) {
        (Some(rho), ..) => {
            if !(rho > 0.0) {
                bail!("--rho must be positive");
            }
            ModelParams { lambda: rho, t_msf: 1.0, rho, d: 1 }
        }
        (None, Some(l), Some(t), ..) => ModelParams::new(l, t)?,
        (None, None, _, Some(mo), Some(tx)) => ModelParams::for_mo(mo, tx)?,
        _ => bail!("give --rho, --lambda with --t-msf, or --mo with --tx-interval (or --table5 / --heatmap)"),
    };
    distribution(&a, &p)
}

fn distribution(a: &Args, p: &ModelParams) -> Result<()> {
    let pi = stationary_pi(p.rho, DEFAULT_TRUNCATION.max(a.max_queue + 1)).map_err(explain)?;
    let pmf = queue_length_pmf(p.rho, a.max_queue).map_err(explain)?;
    let mut t = Table::new([
        "n",
        "embedded_pmf",
        "queue_pmf",
        "queue_cdf",
        "delay_bound_s",
        "delay_cdf",
    ]);
    let mut cdf = 0.0;
    for (n, q) in pmf.iter().enumerate() {
        cdf += q;
        let bound = (n + 1) as f64 * p.t_msf;
        let d = delay_cdf(n as i64 + 1, p.rho).map_err(explain)?;
        t.row([
            n.to_string(),
            format!("{:.6e}", pi.pi[n]),
            format!("{q:.6e}"),
            f(cdf, 9),
            f(bound, 3),
            f(d, 9),
        ]);
    }
    t.print(a.csv)?;
    if !a.csv {
        let l = mean_queue_length(p.rho).map_err(explain)?;
        say(format!(
            "\nrho {:.6}  pi0 {:.6}  mean queue {:.4}",
            p.rho,
            pi0_closed_form(p.rho),
            l
        ))?;
        if a.rho.is_none() {
            say(format!(
                "mean delay {:.3} s",
                mean_delay(p.lambda, p.t_msf).map_err(explain)?
            ))?;
        }
    }
    Ok(())
}

fn table5(a: &Args) -> Result<()> {
    let r = rho_max(a.capacity, a.confidence)?;
    let mut t = Table::new(["mo", "t_msf_s", "rho_max", "throughput_pkt_per_h"]);
    for mo in 3..=6u8 {
        let thr = max_throughput(mo, a.capacity, a.confidence)?;
        t.row([mo.to_string(), f(msf_duration_s(mo), 2), f(r, 5), f(thr, 2)]);
    }
    t.print(a.csv)
}

fn heatmap(a: &Args) -> Result<()> {
    let mut headers = vec!["mo".to_string()];
    headers.extend(a.intervals.iter().map(|tx| format!("tx_{tx}s")));
    let mut t = Table::new(headers);
    for mo in 3..=6u8 {
        let mut row = vec![mo.to_string()];
        for &tx in &a.intervals {
            let p = ModelParams::for_mo(mo, tx)?;
            // unstable cells have no finite delay
            row.push(match mean_delay(p.lambda, p.t_msf) {
                Ok(d) => f(d, 2),
                Err(Error::NonConvergent(_)) => "unstable".into(),
                Err(e) => return Err(e.into()),
            });
        }
        t.row(row);
    }
    t.print(a.csv)
}
