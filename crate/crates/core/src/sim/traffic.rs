//! Interarrival processes, selected by name from scenario files.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::RngCore;
use rand_distr::{Distribution, Exp, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait ArrivalProcess: Send {
    /// Seconds until the next arrival.
    fn sample(&mut self, rng: &mut dyn RngCore) -> f64;

    fn mean(&self) -> f64;
}

pub fn next_arrival(process: &mut dyn ArrivalProcess, rng: &mut dyn RngCore) -> Duration {
    Duration::from_secs_f64(process.sample(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl ProcessSpec {
    pub fn exponential(mean_s: f64) -> Self {
        ProcessSpec {
            kind: "exponential".into(),
            params: [("mean_s".to_string(), mean_s)].into(),
        }
    }

    pub fn uniform(lo_s: f64, hi_s: f64) -> Self {
        ProcessSpec {
            kind: "uniform".into(),
            params: [("lo_s".to_string(), lo_s), ("hi_s".to_string(), hi_s)].into(),
        }
    }

    pub fn periodic(period_s: f64) -> Self {
        ProcessSpec {
            kind: "periodic".into(),
            params: [("period_s".to_string(), period_s)].into(),
        }
    }

    fn take(&self, allowed: &[&str]) -> Result<Vec<f64>> {
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidConfig(format!(
                "process '{}' has no parameter '{k}' (expects {})",
                self.kind,
                allowed.join(", ")
            )));
        }
        allowed
            .iter()
            .map(|name| {
                let v = *self.params.get(*name).ok_or_else(|| {
                    Error::InvalidConfig(format!("process '{}' needs '{name}'", self.kind))
                })?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "process '{}' parameter '{name}' must be positive, got {v}",
                        self.kind
                    )));
                }
                Ok(v)
            })
            .collect()
    }
}

struct Exponential {
    mean: f64,
    dist: Exp<f64>,
}

impl ArrivalProcess for Exponential {
    fn sample(&mut self, mut rng: &mut dyn RngCore) -> f64 {
        self.dist.sample(&mut rng)
    }

    fn mean(&self) -> f64 {
        self.mean
    }
}

struct UniformGap {
    lo: f64,
    hi: f64,
    dist: Uniform<f64>,
}

impl ArrivalProcess for UniformGap {
    fn sample(&mut self, mut rng: &mut dyn RngCore) -> f64 {
        self.dist.sample(&mut rng)
    }

    fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

struct Periodic(f64);

impl ArrivalProcess for Periodic {
    fn sample(&mut self, _rng: &mut dyn RngCore) -> f64 {
        self.0
    }

    fn mean(&self) -> f64 {
        self.0
    }
}

pub type ProcessFactory = fn(&ProcessSpec) -> Result<Box<dyn ArrivalProcess>>;

#[derive(Clone)]
pub struct TrafficRegistry {
    factories: BTreeMap<String, ProcessFactory>,
}

impl Default for TrafficRegistry {
    fn default() -> Self {
        let mut r = TrafficRegistry {
            factories: BTreeMap::new(),
        };
        r.register("exponential", |s| {
            let [mean] = s.take(&["mean_s"])?[..] else {
                unreachable!()
            };
            let dist = Exp::new(1.0 / mean).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(Box::new(Exponential { mean, dist }))
        });
        r.register("uniform", |s| {
            let [lo, hi] = s.take(&["lo_s", "hi_s"])?[..] else {
                unreachable!()
            };
            let dist = Uniform::new_inclusive(lo, hi)
                .map_err(|e| Error::InvalidConfig(format!("uniform({lo}, {hi}): {e}")))?;
            Ok(Box::new(UniformGap { lo, hi, dist }))
        });
        r.register("periodic", |s| {
            let [p] = s.take(&["period_s"])?[..] else {
                unreachable!()
            };
            Ok(Box::new(Periodic(p)))
        });
        r
    }
}

impl TrafficRegistry {
    pub fn register(&mut self, name: &str, factory: ProcessFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn create(&self, spec: &ProcessSpec) -> Result<Box<dyn ArrivalProcess>> {
        let f = self.factories.get(&spec.kind).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown traffic process '{}' (known: {})",
                spec.kind,
                self.factories
                    .keys()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
        f(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_mean() {
        let mut p = TrafficRegistry::default()
            .create(&ProcessSpec::exponential(20.0))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mean = (0..n).map(|_| p.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 20.0).abs() < 0.5, "{mean}");
    }

    #[test]
    fn uniform_bounds() {
        let mut p = TrafficRegistry::default()
            .create(&ProcessSpec::uniform(7.0, 13.0))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000)
            .map(|_| p.sample(&mut rng))
            .all(|x| (7.0..=13.0).contains(&x)));
    }

    #[test]
    fn same_seed_same_sequence() {
        let reg = TrafficRegistry::default();
        let draw = |seed| {
            let mut p = reg.create(&ProcessSpec::exponential(5.0)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| p.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn rejects_bad_specs() {
        let reg = TrafficRegistry::default();
        assert!(reg.create(&ProcessSpec::exponential(0.0)).is_err());
        assert!(reg.create(&ProcessSpec::uniform(5.0, 1.0)).is_err());
        let mut s = ProcessSpec::periodic(1.0);
        s.params.insert("jitter".into(), 1.0);
        assert!(reg.create(&s).is_err());
        let s = ProcessSpec {
            kind: "pareto".into(),
            params: BTreeMap::new(),
        };
        assert!(reg.create(&s).is_err());
    }
}
