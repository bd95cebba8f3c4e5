//! Statistics oracles: raw-sum Levene, statrs F distribution, set-based Dice.

use std::collections::HashSet;

use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::Mix;

pub fn normal(rng: &mut Mix) -> f64 {
    let u1 = 1.0 - rng.unit();
    let u2 = rng.unit();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// 2 to 5 normal groups of 3 to 40 values with random centers and spreads.
pub fn random_groups(rng: &mut Mix) -> Vec<Vec<f64>> {
    let k = 2 + rng.below(4) as usize;
    (0..k)
        .map(|_| {
            let n = 3 + rng.below(38) as usize;
            let (mu, sigma) = (rng.unit() * 10.0 - 5.0, 0.1 + rng.unit() * 3.0);
            (0..n).map(|_| mu + sigma * normal(rng)).collect()
        })
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn sample_variance(g: &[f64]) -> f64 {
    let m = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (g.len() - 1) as f64
}

/// Levene's W through the raw-sum formulation, p from statrs.
pub fn levene_oracle(groups: &[Vec<f64>]) -> (f64, f64) {
    let z: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let k = z.len() as f64;
    let n: f64 = z.iter().map(|g| g.len() as f64).sum();
    let zbar_i: Vec<f64> = z.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let zbar = z.iter().flatten().sum::<f64>() / n;
    let between: f64 = z.iter().zip(&zbar_i).map(|(g, m)| g.len() as f64 * m * m).sum::<f64>() - n * zbar * zbar;
    let within: f64 = z.iter().flatten().map(|v| v * v).sum::<f64>()
        - z.iter().zip(&zbar_i).map(|(g, m)| g.len() as f64 * m * m).sum::<f64>();
    let w = (n - k) / (k - 1.0) * between / within;
    let p = FisherSnedecor::new(k - 1.0, n - k).unwrap().sf(w);
    (w, p)
}

/// Two-sided p of `va / vb` under F(da, db).
pub fn f_oracle(va: f64, vb: f64, da: f64, db: f64) -> f64 {
    let d = FisherSnedecor::new(da, db).unwrap();
    let f = va / vb;
    (2.0 * d.cdf(f).min(d.sf(f))).min(1.0)
}

/// Random labels for an 8x8x4 map.
pub fn random_labels(rng: &mut Mix, labels: u64) -> Vec<u32> {
    (0..8 * 8 * 4).map(|_| rng.below(labels) as u32).collect()
}

/// Set-based Dice over voxel indices; two empty sets score 1.
pub fn brute_force_dice(a: &[u32], b: &[u32], label: u32) -> f64 {
    let set =
        |m: &[u32]| -> HashSet<usize> { m.iter().enumerate().filter(|(_, &l)| l == label).map(|(i, _)| i).collect() };
    let (sa, sb) = (set(a), set(b));
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    2.0 * sa.intersection(&sb).count() as f64 / (sa.len() + sb.len()) as f64
}
