use intermit_core::limits::{
    beta_a_1ma_cdf, lamperti_cdf, lamperti_zg_cdf, sample_gd_pair, sample_lamperti_joint, sample_zg_joint,
    StableParams,
};
use intermit_core::stats::{ks_pvalue, ks_statistic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 20_000;

fn accept(sample: &[f64], cdf: impl Fn(f64) -> f64, what: &str) {
    let d = ks_statistic(sample, cdf).unwrap();
    let p = ks_pvalue(d, sample.len() as f64);
    assert!(p > 1e-3, "{what}: D = {d}, p = {p}");
}

#[test]
fn lamperti_orientation_follows_beta() {
    let params = StableParams::new(0.3, vec![0.2, 0.8]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws: Vec<_> = (0..N).map(|_| sample_lamperti_joint(&params, &mut rng)).collect();
    let z1: Vec<f64> = draws.iter().map(|s| s.z[0]).collect();
    let z2: Vec<f64> = draws.iter().map(|s| s.z[1]).collect();
    accept(&z1, |x| lamperti_cdf(x.clamp(0.0, 1.0), 0.3, 0.2).unwrap(), "z1");
    accept(&z2, |x| lamperti_cdf(x.clamp(0.0, 1.0), 0.3, 0.8).unwrap(), "z2");
    // the wrong orientation is rejected
    let d = ks_statistic(&z1, |x| lamperti_cdf(x.clamp(0.0, 1.0), 0.3, 0.8).unwrap()).unwrap();
    assert!(d > 0.1, "{d}");
}

#[test]
fn last_exit_is_generalized_arcsine() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for alpha in [0.3, 0.5, 0.7] {
        let g: Vec<f64> = (0..N).map(|_| sample_gd_pair(alpha, 1.0, &mut rng).0).collect();
        accept(&g, |u| beta_a_1ma_cdf(u.clamp(0.0, 1.0), alpha).unwrap(), "G");
    }
}

#[test]
fn occupation_before_last_exit() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (alpha, beta) in [(0.5, vec![0.5, 0.5]), (0.4, vec![0.3, 0.7])] {
        let params = StableParams::new(alpha, beta.clone()).unwrap();
        let s = sample_zg_joint(&params, N, 8, &mut rng).unwrap();
        for j in 0..2 {
            let zg: Vec<f64> = s.iter().map(|v| v.zg[j]).collect();
            let p = beta[j];
            accept(&zg, |x| lamperti_zg_cdf(x.clamp(0.0, 1.0), alpha, p).unwrap(), "zg");
        }
    }
}

#[test]
fn ks_null_rejection_rate() {
    // 1.63 / sqrt(N) is the asymptotic 1% point
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 1000;
    let within = (0..100)
        .filter(|_| {
            let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            ks_statistic(&s, |x| x.clamp(0.0, 1.0)).unwrap() < 1.63 / (n as f64).sqrt()
        })
        .count();
    assert!(within >= 95, "{within}");
}
