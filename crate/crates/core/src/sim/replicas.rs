use std::num::NonZeroUsize;
use std::thread;

use crate::error::Result;
use crate::sim::{run, Metrics, Scenario};

/// Runs one independent copy of `scenario` per seed, in parallel, and returns
/// the results in seed order.
pub fn run_replicas(scenario: &Scenario, seeds: &[u64]) -> Result<Vec<Metrics>> {
    let workers = thread::available_parallelism()
        .map_or(1, NonZeroUsize::get)
        .min(seeds.len().max(1));
    let mut results: Vec<Option<Result<Metrics>>> = (0..seeds.len()).map(|_| None).collect();
    for chunk in seeds.iter().enumerate().collect::<Vec<_>>().chunks(workers) {
        let done: Vec<(usize, Result<Metrics>)> = thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(i, &seed)| {
                    s.spawn(move || {
                        let mut sc = scenario.clone();
                        sc.seed = seed;
                        (i, run(&sc))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("replica thread panicked"))
                .collect()
        });
        for (i, r) in done {
            results[i] = Some(r);
        }
    }
    results
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect()
}
