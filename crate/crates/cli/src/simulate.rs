use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use dsme_lora::mac::DropReason;
use dsme_lora::sim::{
    empirical_cdf, run_replicas, run_with_trace, Metrics, PacketFate, Role, Scenario, ScenarioFile,
    TrafficRegistry,
};

use crate::presets;
use crate::table::{f, say, Table};

#[derive(clap::Args)]
pub struct Args {
    /// Scenario file (TOML).
    #[arg(conflicts_with = "preset")]
    pub path: Option<PathBuf>,
    /// Built-in scenario; see --list-presets.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub list_presets: bool,
    /// Seed of the first replica; replica k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated time in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub sources: Option<u32>,
    #[arg(long)]
    pub sinks: Option<u32>,
    /// Mean interarrival time in seconds; the process keeps its shape.
    #[arg(long)]
    pub tx_interval: Option<f64>,
    /// Channel access: gts, csma or aloha.
    #[arg(long)]
    pub service: Option<String>,
    /// Multisuperframe order; the beacon order is raised to match if needed.
    #[arg(long)]
    pub mo: Option<u8>,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    /// Output directory.
    #[arg(long, env = "DSME_LORA_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Write one line per event to this file (single replica only).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

pub fn run(a: Args) -> Result<()> {
    if a.list_presets {
        let mut t = Table::new(["preset", "description"]);
        for name in presets::names() {
            t.row([
                name,
                presets::describe(presets::get(name).unwrap_or_default()),
            ]);
        }
        return t.print(false);
    }
    let file = load(&a)?;
    let scenario = file.resolve().context("invalid scenario")?;
    if a.replicas == 0 {
        bail!("--replicas must be at least 1");
    }
    if a.trace.is_some() && a.replicas > 1 {
        bail!("--trace needs a single replica");
    }
    let seeds: Vec<u64> = (0..a.replicas).map(|k| scenario.seed + k).collect();

    let started = Instant::now();
    let runs = match &a.trace {
        Some(path) => {
            let out =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(out);
            vec![run_with_trace(&scenario, &mut w)?]
        }
        None => run_replicas(&scenario, &seeds)?,
    };
    let elapsed = started.elapsed();

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let merged = Metrics::merge(&runs);
    let hours: f64 = runs.iter().map(|m| m.end_time_s).sum::<f64>() / 3600.0;
    write_outputs(&a.out, &scenario, &merged, hours)?;
    if runs.len() > 1 {
        for m in &runs {
            let dir = a.out.join(format!("replica_{}", m.seed));
            fs::create_dir_all(&dir)?;
            write_outputs(&dir, &scenario, m, m.end_time_s / 3600.0)?;
        }
    }
    summary(&scenario, &merged, runs.len(), elapsed.as_secs_f64()).print(false)?;
    say(format!("outputs in {}", a.out.display()))
}

fn load(a: &Args) -> Result<ScenarioFile> {
    let (text, origin) = match (&a.path, &a.preset) {
        (Some(p), _) => (
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            p.display().to_string(),
        ),
        (None, Some(name)) => match presets::get(name) {
            Some(t) => (t.to_string(), format!("preset {name}")),
            None => bail!(
                "unknown preset '{name}' (known: {})",
                presets::names().collect::<Vec<_>>().join(", ")
            ),
        },
        (None, None) => bail!("give a scenario file or --preset"),
    };
    let mut file =
        ScenarioFile::from_toml_str(&text).with_context(|| format!("parsing {origin}"))?;
    if let Some(s) = a.seed {
        file.seed = s;
    }
    if let Some(d) = a.duration {
        file.duration_s = d;
    }
    if let Some(n) = a.sources {
        file.topology.sources = n;
    }
    if let Some(n) = a.sinks {
        file.topology.sinks = n;
    }
    if let Some(s) = &a.service {
        file.traffic.service = s.clone();
    }
    if let Some(mo) = a.mo {
        file.mac.mo = mo;
        file.mac.bo = file.mac.bo.max(mo);
    }
    if let Some(t) = a.tx_interval {
        if !(t > 0.0) {
            bail!("--tx-interval must be positive");
        }
        let mean = TrafficRegistry::default()
            .create(&file.traffic.process)?
            .mean();
        let k = t / mean;
        file.traffic
            .process
            .params
            .values_mut()
            .for_each(|v| *v *= k);
    }
    Ok(file)
}

fn role_label(r: Role) -> &'static str {
    match r {
        Role::Coordinator => "coordinator",
        Role::Source => "source",
        Role::Sink => "sink",
        Role::Peer => "peer",
        Role::Jammer => "jammer",
        Role::Lorawan => "lorawan",
    }
}

fn write_outputs(dir: &Path, sc: &Scenario, m: &Metrics, hours: f64) -> Result<()> {
    let delays = m.delays();
    let mut t = Table::new(["delay_s", "cdf"]);
    if let Some(max) = delays.iter().copied().reduce(f64::max) {
        let pts: Vec<f64> = (0..=1000).map(|i| max * i as f64 / 1000.0).collect();
        for (x, c) in pts.iter().zip(empirical_cdf(&delays, &pts)) {
            t.row([f(*x, 4), f(c, 6)]);
        }
    }
    t.save(&dir.join("delay_cdf.csv"))?;

    let mut t = Table::new(["source", "dest", "scheduled", "delivered", "prr"]);
    let mut flows: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
    for p in &m.packets {
        let e = flows.entry((p.src, p.dest)).or_default();
        e.0 += 1;
        e.1 += (p.fate == PacketFate::Delivered) as u64;
    }
    for ((s, d), (n, ok)) in &flows {
        t.row([
            s.to_string(),
            d.to_string(),
            n.to_string(),
            ok.to_string(),
            f(*ok as f64 / *n as f64, 6),
        ]);
    }
    t.row([
        "all".into(),
        "all".into(),
        m.scheduled().to_string(),
        m.delivered().to_string(),
        f(m.prr(), 6),
    ]);
    t.save(&dir.join("prr.csv"))?;

    let mut t = Table::new(["reason", "count", "fraction"]);
    let drops = m.drops();
    let total = m.scheduled().max(1) as f64;
    for r in DropReason::ALL {
        let n = drops.get(&r).copied().unwrap_or(0);
        t.row([
            r.as_str().to_string(),
            n.to_string(),
            f(n as f64 / total, 6),
        ]);
    }
    let lost = m.fate_counts().get(&PacketFate::Lost).copied().unwrap_or(0);
    t.row([
        "lost".to_string(),
        lost.to_string(),
        f(lost as f64 / total, 6),
    ]);
    t.save(&dir.join("drops.csv"))?;

    let mut t = Table::new([
        "node",
        "role",
        "band",
        "airtime_s",
        "airtime_per_hour_s",
        "data_transmissions",
    ]);
    for ((node, band), secs) in &m.airtime {
        let role = sc
            .nodes
            .get(*node as usize)
            .map_or("unknown", |n| role_label(n.role));
        let tx = m.data_transmissions.get(node).copied().unwrap_or(0);
        t.row([
            node.to_string(),
            role.into(),
            band.clone(),
            f(*secs, 6),
            f(secs / hours, 6),
            tx.to_string(),
        ]);
    }
    t.save(&dir.join("airtime.csv"))?;

    let mut t = Table::new(["queue_length", "probability"]);
    let max = m.queue_samples.iter().copied().max().unwrap_or(0) as usize;
    for (i, p) in m.queue_pmf(max).iter().enumerate() {
        t.row([i.to_string(), f(*p, 8)]);
    }
    t.save(&dir.join("queue_pmf.csv"))?;

    let mut t = Table::new(["node", "role", "energy_mj", "average_power_mw"]);
    for (node, mj) in &m.energy_mj {
        let role = sc
            .nodes
            .get(*node as usize)
            .map_or("unknown", |n| role_label(n.role));
        t.row([
            node.to_string(),
            role.into(),
            f(*mj, 3),
            f(mj / (hours * 3600.0), 6),
        ]);
    }
    t.save(&dir.join("energy.csv"))?;
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    Some(sorted[i])
}

fn summary(sc: &Scenario, m: &Metrics, replicas: usize, wall_s: f64) -> Table {
    let mut t = Table::new(["metric", "value"]);
    let name = if sc.name.is_empty() { "-" } else { &sc.name };
    let mut delays = m.delays();
    delays.sort_by(f64::total_cmp);
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| f(v, 3));
    let rows: Vec<(&str, String)> = vec![
        ("scenario", name.to_string()),
        ("service", sc.service.clone()),
        ("replicas", replicas.to_string()),
        ("scheduled", m.scheduled().to_string()),
        ("delivered", m.delivered().to_string()),
        ("prr", f(m.prr(), 4)),
        ("mean_delay_s", opt(m.mean_delay())),
        ("p50_delay_s", opt(quantile(&delays, 0.5))),
        ("p90_delay_s", opt(quantile(&delays, 0.9))),
        ("p99_delay_s", opt(quantile(&delays, 0.99))),
        ("mean_retransmissions", f(m.mean_retransmissions(), 3)),
        ("transmitted_fraction", f(m.transmitted_fraction(), 4)),
        ("collided_fraction", f(m.collided_fraction(), 4)),
        ("beacons_missed", m.tx.beacons_missed.to_string()),
        ("first_desync_s", opt(m.first_desync_s())),
        ("events", m.events.to_string()),
        ("event_log_hash", format!("{:016x}", m.event_log_hash)),
        ("wall_time_s", f(wall_s, 2)),
    ];
    for (k, v) in rows {
        t.row([k.to_string(), v]);
    }
    for (r, n) in m.drops() {
        t.row([format!("dropped_{}", r.as_str()), n.to_string()]);
    }
    t
}
