mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinthermo::montecarlo::{
    autocorrelation, dead_band, escape_time, log_spaced_lags, magnetization_autocorrelation,
    read_dump, run_chain, spin_autocorrelation, write_dump, Chain, ChainConfig, Observable,
};
use spinthermo::replica::ReplicaModel;
use spinthermo::ErrorKind;

fn exact_distribution(j: f64, t: f64, nr: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0usize..1 << (2 * nr))
        .map(|s| {
            let a: f64 = (0..nr).map(|k| common::spin(s, k)).sum();
            let b: f64 = (nr..2 * nr).map(|k| common::spin(s, k)).sum();
            -j * a * b / (nr as f64 * t)
        })
        .collect();
    let z = common::ln_sum_exp(&logs);
    logs.iter().map(|l| (l - z).exp()).collect()
}

#[test]
fn small_chain_samples_the_boltzmann_distribution() {
    let model = ReplicaModel::new(1.5, 1.0, 2).unwrap();
    let exact = exact_distribution(1.5, 1.0, 2);
    let mut chain = Chain::new(&model, 7, 0);
    let (batches, per_batch) = (40, 5000);
    let mut freq = vec![vec![0.0; 16]; batches];
    for _ in 0..1000 {
        chain.sweep();
    }
    for batch in freq.iter_mut() {
        for _ in 0..per_batch {
            chain.sweep();
            batch[chain.state_index()] += 1.0 / per_batch as f64;
        }
    }
    for s in 0..16 {
        let mean: f64 = freq.iter().map(|b| b[s]).sum::<f64>() / batches as f64;
        let var: f64 =
            freq.iter().map(|b| (b[s] - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        assert!(
            (mean - exact[s]).abs() < 4.0 * se + 1e-4,
            "state {s}: {mean} vs {}",
            exact[s]
        );
    }
}

#[test]
fn sweep_kernel_is_reversible() {
    let model = ReplicaModel::new(1.5, 1.0, 2).unwrap();
    let mut chain = Chain::new(&model, 11, 0);
    let mut flow = vec![vec![0.0f64; 16]; 16];
    let mut prev = chain.state_index();
    for _ in 0..200_000 {
        chain.sweep();
        let now = chain.state_index();
        flow[prev][now] += 1.0;
        prev = now;
    }
    for i in 0..16 {
        for j in (i + 1)..16 {
            let (f, b) = (flow[i][j], flow[j][i]);
            assert!(
                (f - b).abs() <= 4.0 * (f + b).sqrt() + 5.0,
                "{i}->{j}: {f} vs {b}"
            );
        }
    }
}

#[test]
fn identical_seeds_give_identical_trajectories() {
    let model = ReplicaModel::new(1.5, 1.0, 8).unwrap();
    let mut cfg = ChainConfig::new(model, 42, 3000);
    cfg.record_spins = true;
    let a = run_chain(&cfg).unwrap();
    assert_eq!(a, run_chain(&cfg).unwrap());
    cfg.stream = 1;
    assert_ne!(a.a, run_chain(&cfg).unwrap().a);
}

#[test]
fn temperature_limits() {
    let hot = ReplicaModel::new(1.5, 1e9, 8).unwrap();
    let traj = run_chain(&ChainConfig::new(hot, 1, 2000)).unwrap();
    assert!(traj.acceptance > 0.999);

    let cold = ReplicaModel::new(1.5, 1e-6, 8).unwrap();
    let spins: Vec<i8> = (0..16).map(|s| if s < 8 { 1 } else { -1 }).collect();
    let mut chain = Chain::from_spins(&cold, spins, 5).unwrap();
    let e0 = chain.energy();
    for _ in 0..500 {
        assert_eq!(chain.sweep(), 0);
    }
    assert_eq!(chain.energy(), e0);
}

#[test]
fn independent_samples_are_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words: Vec<u64> = (0..20_000).map(|_| rng.random()).collect();
    let lags = log_spaced_lags(1000, 5);
    let c = spin_autocorrelation(&words, 64, &lags, 1).unwrap();
    assert_eq!(c.values[0], 1.0);
    for (v, var) in c.values.iter().zip(&c.estimator_variance).skip(1) {
        assert!(v.abs() < 3.0 * var.sqrt(), "{v} vs {}", var.sqrt());
    }
    let a: Vec<i64> = (0..20_000)
        .map(|_| rng.random_range(-1..=1i64) * 2)
        .collect();
    let c = magnetization_autocorrelation(&a, 2, &lags, 1).unwrap();
    for (v, var) in c.values.iter().zip(&c.estimator_variance).skip(1) {
        assert!(v.abs() < 3.0 * var.sqrt());
    }
}

#[test]
fn telegraph_signal_escape_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for rate in [0.02, 0.005] {
        let mut s = 10i64;
        let a: Vec<i64> = (0..400_000)
            .map(|_| {
                if rng.random::<f64>() < rate {
                    s = -s;
                }
                s + rng.random_range(-3..=3)
            })
            .collect();
        let est = escape_time(&a, 1, dead_band(20, 0.8));
        assert!(!est.censored);
        assert!(
            (est.mean_time * rate - 1.0).abs() < 0.2,
            "rate {rate}: {}",
            est.mean_time
        );
    }
    let est = escape_time(&[5, 5, 5, 5], 3, 2.0);
    assert!(est.censored && est.transitions == 0 && est.mean_time == 12.0);
}

#[test]
fn no_time_scale_separation_above_criticality() {
    let model = ReplicaModel::new(1.5, 10.0, 16).unwrap();
    let mut cfg = ChainConfig::new(model, 42, 60_000);
    cfg.burn_in = 100;
    cfg.record_spins = true;
    let traj = run_chain(&cfg).unwrap();
    let c = autocorrelation(&traj, Observable::SingleSpin).unwrap();
    // single-stage decay: correlation gone within a few sweeps
    let at = |lag: usize| c.values[c.lags.iter().position(|&l| l >= lag).unwrap()];
    assert!(at(10) < 0.05);
    let est = escape_time(&traj.a, traj.spacing(), dead_band(16, 0.3));
    assert!(est.mean_time < 20.0, "{}", est.mean_time);
}

#[test]
fn dump_round_trip() {
    let model = ReplicaModel::new(1.5, 1.0, 4).unwrap();
    let mut cfg = ChainConfig::new(model, 5, 50);
    cfg.burn_in = 10;
    cfg.thinning = 4;
    let traj = run_chain(&cfg).unwrap();
    let mut buf = Vec::new();
    write_dump(&mut buf, &cfg, &traj).unwrap();
    let dump = read_dump(buf.as_slice()).unwrap();
    assert_eq!(dump.rows.len(), traj.len());
    assert_eq!(dump.rows[0], (traj.steps[0], traj.a[0], traj.b[0]));
    assert!(dump.header.contains(&("seed".to_string(), "5".to_string())));
    assert!(dump.header.iter().any(|(k, _)| k == "rng"));
}

#[test]
fn short_series_and_bad_schedules_are_rejected() {
    let err = magnetization_autocorrelation(&[1; 100], 1, &[0, 1], 1).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Usage);
    let model = ReplicaModel::new(1.5, 1.0, 4).unwrap();
    let mut cfg = ChainConfig::new(model, 1, 10);
    cfg.burn_in = 10;
    assert!(run_chain(&cfg).is_err());
}
