use dsme_lora::queue_model::*;
use dsme_lora::Error;
use proptest::prelude::*;

/// Stationary distribution by power iteration on a freshly built chain,
/// sharing no code with the library.
fn power_iteration_pi(rho: f64, n: usize) -> Vec<f64> {
    let mut k = vec![(-rho).exp()];
    for i in 1..=n + 1 {
        let prev = k[i - 1];
        k.push(prev * rho / i as f64);
    }
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..20_000 {
        let mut next = vec![0.0; n];
        for (i, &p) in pi.iter().enumerate() {
            // this msf's arrivals join, then the slot serves one
            let mut left = 1.0;
            for (a, &ka) in k.iter().enumerate() {
                let j = (i + a).saturating_sub(1);
                if j >= n - 1 {
                    break;
                }
                next[j] += p * ka;
                left -= ka;
            }
            next[n - 1] += p * left;
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}

fn poisson_tail_ge(m: usize, rho: f64) -> f64 {
    let mut cdf = 0.0;
    let mut term = (-rho).exp();
    for i in 0..m {
        cdf += term;
        term *= rho / (i + 1) as f64;
    }
    1.0 - cdf
}

#[test]
fn stationary_matches_power_iteration() {
    for rho in [0.1, 0.384, 0.6, 0.85] {
        let lib = stationary_pi(rho, 200).unwrap().pi;
        let oracle = power_iteration_pi(rho, 200);
        for i in 0..60 {
            assert!(
                (lib[i] - oracle[i]).abs() < 1e-10,
                "rho {rho} i {i}: {} vs {}",
                lib[i],
                oracle[i]
            );
        }
    }
}

#[test]
fn pi0_agrees_with_closed_form() {
    for i in 1..=19 {
        let rho = 0.05 * i as f64;
        let pi0 = stationary_pi(rho, DEFAULT_TRUNCATION).unwrap().pi[0];
        assert!((pi0 - pi0_closed_form(rho)).abs() < 1e-9, "rho {rho}");
    }
}

#[test]
fn pi0_polynomial_fit() {
    let worst = (1..=19)
        .map(|i| 0.05 * i as f64)
        .map(|rho| {
            (pi0_polynomial(rho) - stationary_pi(rho, DEFAULT_TRUNCATION).unwrap().pi[0]).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "{worst}");
}

#[test]
fn eigen_residual_small() {
    for rho in [0.2, 0.5, 0.856, 0.95] {
        let d = stationary_pi(rho, 500).unwrap();
        assert!(eigen_residual(rho, &d).unwrap() < 1e-8);
    }
}

#[test]
fn phase_pmf_is_poisson_tail_over_rho() {
    for rho in [0.05, 0.384, 0.9] {
        for j in 0..12 {
            let want = poisson_tail_ge(j + 1, rho) / rho;
            let got = arrival_phase_pmf(j, rho).unwrap();
            assert!((got - want).abs() < 1e-12 + want * 1e-9, "j {j}");
        }
    }
}

#[test]
fn queue_tail_at_known_point() {
    // P{L > 5} at rho = 0.384
    let tail = 1.0 - queue_length_cdf(0.384, 5).unwrap();
    assert!((tail - 6.1708e-5).abs() < 5e-8, "{tail}");
}

#[test]
fn table_throughput() {
    for (mo, want) in [(3, 401.24), (4, 200.58), (5, 100.29), (6, 50.15)] {
        let got = max_throughput(mo, DEFAULT_QUEUE_CAPACITY, DEFAULT_CONFIDENCE).unwrap();
        assert!(((got - want) / want).abs() < 1e-3, "MO {mo}: {got}");
    }
}

#[test]
fn rho_max_value() {
    let r = rho_max(DEFAULT_QUEUE_CAPACITY, DEFAULT_CONFIDENCE).unwrap();
    assert!((r - 0.856).abs() < 0.005, "{r}");
    assert!((queue_length_cdf(r, 22).unwrap() - 0.999).abs() < 1e-6);
}

#[test]
fn lifetime_table_delays() {
    for (mo, want) in [(3, 3.87), (4, 7.81), (5, 15.9), (6, 32.97), (7, 71.16)] {
        let p = ModelParams::for_mo(mo, 900.0).unwrap();
        let got = mean_delay(p.lambda, p.t_msf).unwrap();
        assert!(((got - want) / want).abs() < 0.02, "MO {mo}: {got}");
    }
}

#[test]
fn heatmap_cell() {
    let p = ModelParams::for_mo(5, 160.0).unwrap();
    let d = mean_delay(p.lambda, p.t_msf).unwrap();
    assert!((d - 19.01).abs() < 0.1, "{d}");
}

#[test]
fn unstable_load_rejected() {
    assert_eq!(
        stationary_pi(1.0, 100).unwrap_err(),
        Error::NonConvergent(1.0)
    );
    assert!(matches!(
        queue_length_pmf(1.2, 10),
        Err(Error::NonConvergent(_))
    ));
    assert!(matches!(
        mean_delay(1.0 / 5.0, 7.68),
        Err(Error::NonConvergent(_))
    ));
    assert!(matches!(
        stationary_pi(-0.1, 100),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn multi_gts_validity() {
    let p = ModelParams::new(1.0 / 40.0, 7.68).unwrap();
    let two = [
        DestinationLoad {
            dest: 1,
            params: p,
            slots_per_msf: 1,
        },
        DestinationLoad {
            dest: 2,
            params: p,
            slots_per_msf: 1,
        },
    ];
    let total = multi_gts_total_pmf(&two, 60).unwrap();
    let single = queue_length_pmf(p.rho, 60).unwrap();
    let conv0 = single[0] * single[0];
    assert!((total[0] - conv0).abs() < 1e-15);
    assert!((total.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let dup = [two[0], two[0]];
    assert!(matches!(
        multi_gts_total_pmf(&dup, 10),
        Err(Error::InvalidAllocation(_))
    ));
    let wide = [DestinationLoad {
        slots_per_msf: 2,
        ..two[0]
    }];
    assert!(matches!(
        multi_gts_total_pmf(&wide, 10),
        Err(Error::InvalidAllocation(_))
    ));
}

proptest! {
    #[test]
    fn pmfs_normalize(rho in 0.01f64..0.97) {
        let pi: f64 = stationary_pi(rho, 500).unwrap().pi.iter().sum();
        prop_assert!((pi - 1.0).abs() < 1e-9);
        let phase: f64 = (0..400).map(|j| arrival_phase_pmf(j, rho).unwrap()).sum();
        prop_assert!((phase - 1.0).abs() < 1e-9);
        let l: f64 = queue_length_pmf(rho, 499).unwrap().iter().sum();
        prop_assert!((l - 1.0).abs() < 1e-9);
    }

    #[test]
    fn littles_law(rho in 0.05f64..0.95, t_msf in 1.0f64..100.0) {
        let lambda = rho / t_msf;
        let pmf = queue_length_pmf(rho, 499).unwrap();
        let mean_l: f64 = pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
        let w = mean_delay(lambda, t_msf).unwrap();
        prop_assert!((mean_l - lambda * w).abs() < 1e-6 * mean_l.max(1.0));
    }

    #[test]
    fn delay_cdf_identity(rho in 0.05f64..0.95, n in 1i64..40) {
        let a = delay_cdf(n, rho).unwrap();
        let b = queue_length_cdf(rho, (n - 1) as usize).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(delay_cdf(n + 1, rho).unwrap() >= a);
    }

    #[test]
    fn truncation_invariance(rho in 0.05f64..0.95) {
        let a = stationary_pi(rho, 500).unwrap().pi;
        let b = stationary_pi(rho, 1000).unwrap().pi;
        for i in 0..100 {
            prop_assert!((a[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn arrivals_pmf_sums(rho in 0.01f64..5.0) {
        let s: f64 = (0..200).map(|i| arrivals_per_msf_pmf(i, rho).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }
}
