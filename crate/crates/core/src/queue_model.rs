//! Discrete-time queueing model of a single GTS flow.
//!
//! One GTS per multisuperframe serves a Poisson arrival stream. The embedded
//! chain observes the queue right after each slot, and time-average
//! quantities follow by convolving with the number of arrivals since the
//! last slot.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 500;
pub const DEFAULT_QUEUE_CAPACITY: usize = 22;
pub const DEFAULT_CONFIDENCE: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub t_msf: f64,
    pub rho: f64,
    pub d: u32,
}

impl ModelParams {
    pub fn new(lambda: f64, t_msf: f64) -> Result<Self> {
        if !(lambda > 0.0 && t_msf > 0.0) || !lambda.is_finite() || !t_msf.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda ({lambda}) and T_msf ({t_msf}) must be positive"
            )));
        }
        Ok(ModelParams {
            lambda,
            t_msf,
            rho: lambda * t_msf,
            d: 1,
        })
    }

    /// Multisuperframe duration for SO = 3: 7.68 s * 2^(MO - 3).
    pub fn for_mo(mo: u8, tx_interval_s: f64) -> Result<Self> {
        if !(3..=14).contains(&mo) {
            return Err(Error::InvalidArgument(format!("MO {mo} outside 3..=14")));
        }
        ModelParams::new(1.0 / tx_interval_s, msf_duration_s(mo))
    }
}

pub fn msf_duration_s(mo: u8) -> f64 {
    7.68 * f64::powi(2.0, mo as i32 - 3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub truncation_n: usize,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if rho >= 1.0 {
        return Err(Error::NonConvergent(rho));
    }
    Ok(())
}

fn poisson_pmf(i: usize, rho: f64) -> f64 {
    // log space keeps large i finite
    let ln = i as f64 * rho.ln() - rho - ln_factorial(i);
    ln.exp()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Probability of exactly `i` arrivals during one multisuperframe.
pub fn arrivals_per_msf_pmf(i: i64, rho: f64) -> Result<f64> {
    if i < 0 {
        return Err(Error::InvalidArgument(format!(
            "arrival count {i} is negative"
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must be positive, got {rho}"
        )));
    }
    Ok(poisson_pmf(i as usize, rho))
}

fn arrivals(rho: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| poisson_pmf(i, rho)).collect()
}

/// Truncated transition matrix of the embedded chain L' = max(L + A - 1, 0).
pub fn build_markov_matrix(rho: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "truncation {n} must be at least 2"
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let k = arrivals(rho, n);
    let mut p = vec![vec![0.0; n]; n];
    for (i, row) in p.iter_mut().enumerate() {
        if i == 0 {
            row[0] = k[0] + k[1];
            row[1..n].copy_from_slice(&k[2..=n]);
        } else {
            row[i - 1] = k[0];
            for j in i..n {
                row[j] = k[j - i + 1];
            }
        }
    }
    Ok(p)
}

pub fn stationary_pi(rho: f64, n: usize) -> Result<StationaryDistribution> {
    check_rho(rho)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "truncation {n} must be at least 2"
        )));
    }
    let k = arrivals(rho, n);
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    x[1] = (1.0 - k[0] - k[1]) / k[0];
    for i in 2..n {
        let mut acc = (1.0 - k[1]) * x[i - 1];
        for j in 0..=i - 2 {
            acc -= k[i - j] * x[j];
        }
        x[i] = acc / k[0];
    }
    // the far tail is pure cancellation noise; once it stops being a clean
    // decreasing sequence it carries no information
    let mut cut = n;
    for i in 1..n {
        if !(x[i] >= 0.0) || x[i] > x[i - 1] && x[i] < 1e-12 {
            cut = i;
            break;
        }
    }
    for v in x.iter_mut().skip(cut) {
        *v = 0.0;
    }
    let total: f64 = x.iter().sum();
    let pi = x.into_iter().map(|v| v / total).collect();
    Ok(StationaryDistribution {
        pi,
        truncation_n: n,
    })
}

/// Max |(pi P)_j - pi_j| over the columns the truncation represents exactly.
pub fn eigen_residual(rho: f64, dist: &StationaryDistribution) -> Result<f64> {
    let n = dist.pi.len();
    let p = build_markov_matrix(rho, n)?;
    let mut worst: f64 = 0.0;
    for (j, &pj) in dist.pi.iter().enumerate().take(n - 1) {
        let s: f64 = (0..=(j + 1).min(n - 1)).map(|i| dist.pi[i] * p[i][j]).sum();
        worst = worst.max((s - pj).abs());
    }
    Ok(worst)
}

pub fn pi0_closed_form(rho: f64) -> f64 {
    (1.0 - rho) * rho.exp()
}

pub fn pi0_polynomial(rho: f64) -> f64 {
    -0.24 * rho.powi(4) - 0.21 * rho.powi(3) - 0.55 * rho.powi(2) + 0.01 * rho + 1.0
}

/// Probability that `j` packets arrived between the last slot and a random instant.
pub fn arrival_phase_pmf(j: usize, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if j == 0 {
        return Ok(-(-rho).exp_m1() / rho);
    }
    // P{Poisson(rho) >= j + 1}, summed upward to stay accurate in the tail
    let mut term = poisson_pmf(j + 1, rho);
    let mut tail = 0.0;
    let mut m = j + 1;
    while term > 0.0 {
        tail += term;
        m += 1;
        term *= rho / m as f64;
        if term < tail * 1e-17 {
            break;
        }
    }
    Ok(tail / rho)
}

/// Distribution of the queue length L(t) at an arbitrary instant, indices 0..=i_max.
pub fn queue_length_pmf(rho: f64, i_max: usize) -> Result<Vec<f64>> {
    let n = DEFAULT_TRUNCATION.max(i_max + 1);
    let dist = stationary_pi(rho, n)?;
    let phase: Vec<f64> = (0..=i_max)
        .map(|j| arrival_phase_pmf(j, rho))
        .collect::<Result<_>>()?;
    Ok((0..=i_max)
        .map(|i| (0..=i).map(|j| dist.pi[i - j] * phase[j]).sum())
        .collect())
}

pub fn queue_length_cdf(rho: f64, i: usize) -> Result<f64> {
    Ok(queue_length_pmf(rho, i)?.iter().sum())
}

pub fn mean_embedded_queue(rho: f64) -> Result<f64> {
    let d = stationary_pi(rho, DEFAULT_TRUNCATION)?;
    Ok(d.pi.iter().enumerate().map(|(i, p)| i as f64 * p).sum())
}

pub fn mean_queue_length(rho: f64) -> Result<f64> {
    Ok(mean_embedded_queue(rho)? + rho / 2.0)
}

/// P{W <= n T_msf}.
pub fn delay_cdf(n_msf: i64, rho: f64) -> Result<f64> {
    if n_msf <= 0 {
        return Err(Error::InvalidArgument(format!(
            "delay bound {n_msf} must be at least 1"
        )));
    }
    queue_length_cdf(rho, (n_msf - 1) as usize)
}

pub fn mean_delay(lambda: f64, t_msf: f64) -> Result<f64> {
    let p = ModelParams::new(lambda, t_msf)?;
    Ok(mean_queue_length(p.rho)? / lambda)
}

/// Load at which the `confidence` quantile of L(t) reaches `queue_capacity`.
pub fn rho_max(queue_capacity: usize, confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence {confidence} outside (0,1)"
        )));
    }
    let f = |rho: f64| queue_length_cdf(rho, queue_capacity).map(|c| c - confidence);
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    if f(lo)? < 0.0 || f(hi)? > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "no load reaches the {confidence} quantile at capacity {queue_capacity}"
        )));
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximum schedule rate in packets per hour for SO = 3 and the given MO.
pub fn max_throughput(mo: u8, queue_capacity: usize, confidence: f64) -> Result<f64> {
    if !(3..=7).contains(&mo) {
        return Err(Error::InvalidArgument(format!("MO {mo} outside 3..=7")));
    }
    Ok(rho_max(queue_capacity, confidence)? / msf_duration_s(mo) * 3600.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DestinationLoad {
    pub dest: u32,
    pub params: ModelParams,
    pub slots_per_msf: u32,
}

/// Distribution of the total queue over independent per-destination sub-queues.
pub fn multi_gts_total_pmf(per_dest: &[DestinationLoad], i_max: usize) -> Result<Vec<f64>> {
    if per_dest.is_empty() {
        return Err(Error::InvalidArgument("no destinations".into()));
    }
    for (i, d) in per_dest.iter().enumerate() {
        if d.slots_per_msf != 1 {
            return Err(Error::InvalidAllocation(format!(
                "destination {} has {} slots per multisuperframe, the model needs exactly one",
                d.dest, d.slots_per_msf
            )));
        }
        if per_dest[..i].iter().any(|o| o.dest == d.dest) {
            return Err(Error::InvalidAllocation(format!(
                "destination {} allocated more than once",
                d.dest
            )));
        }
    }
    let mut total = queue_length_pmf(per_dest[0].params.rho, i_max)?;
    for d in &per_dest[1..] {
        let next = queue_length_pmf(d.params.rho, i_max)?;
        total = (0..=i_max)
            .map(|i| (0..=i).map(|j| total[i - j] * next[j]).sum())
            .collect();
    }
    Ok(total)
}
