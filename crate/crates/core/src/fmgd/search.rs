use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FmgdHyperparams, Optimizer, Trainer};
use crate::ir::GatedFactorGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRateRange {
    pub min: f64,
    pub max: f64,
}

/// Sampling ranges for random hyperparameter search. Each list is sampled
/// uniformly; the learning rate is log-uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperDistribution {
    pub version: u32,
    pub learning_rate: LearningRateRange,
    pub alpha: Vec<f64>,
    pub optimizer: Vec<Optimizer>,
    pub clip_norm: Vec<Option<f64>>,
    pub noise_eta: Vec<f64>,
    pub noise_gamma: Vec<f64>,
    pub entropy_rho: Vec<f64>,
    pub entropy_decay: Vec<f64>,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub loss_threshold: f64,
}

impl Default for HyperDistribution {
    fn default() -> Self {
        HyperDistribution {
            version: 1,
            learning_rate: LearningRateRange { min: 1e-3, max: 1.0 },
            alpha: vec![0.2, 1.0, 5.0],
            optimizer: vec![Optimizer::Sgd, Optimizer::RmsProp],
            clip_norm: vec![None, Some(1.0), Some(10.0)],
            noise_eta: vec![0.0, 0.01, 0.1],
            noise_gamma: vec![0.55],
            entropy_rho: vec![0.0, 0.01, 0.1],
            entropy_decay: vec![0.999, 0.9999],
            epsilon: 1e-12,
            max_epochs: FmgdHyperparams::vanilla().max_epochs,
            loss_threshold: FmgdHyperparams::vanilla().loss_threshold,
        }
    }
}

impl HyperDistribution {
    /// The distribution that always yields `h`.
    pub fn point(h: &FmgdHyperparams) -> Self {
        HyperDistribution {
            version: 1,
            learning_rate: LearningRateRange { min: h.learning_rate, max: h.learning_rate },
            alpha: vec![h.alpha],
            optimizer: vec![h.optimizer],
            clip_norm: vec![h.clip_norm],
            noise_eta: vec![h.noise_eta],
            noise_gamma: vec![h.noise_gamma],
            entropy_rho: vec![h.entropy_rho],
            entropy_decay: vec![h.entropy_decay],
            epsilon: h.epsilon,
            max_epochs: h.max_epochs,
            loss_threshold: h.loss_threshold,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let lr = &self.learning_rate;
        if !(lr.min > 0.0 && lr.max >= lr.min) {
            return Err("learning_rate range must satisfy 0 < min <= max".into());
        }
        if self.alpha.is_empty()
            || self.optimizer.is_empty()
            || self.clip_norm.is_empty()
            || self.noise_eta.is_empty()
            || self.noise_gamma.is_empty()
            || self.entropy_rho.is_empty()
            || self.entropy_decay.is_empty()
        {
            return Err("every choice list must be non-empty".into());
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> FmgdHyperparams {
        fn pick<T: Clone>(v: &[T], rng: &mut impl Rng) -> T {
            v[rng.gen_range(0..v.len())].clone()
        }
        let (lo, hi) = (self.learning_rate.min.ln(), self.learning_rate.max.ln());
        let learning_rate = if hi > lo { rng.gen_range(lo..hi).exp() } else { self.learning_rate.min };
        FmgdHyperparams {
            alpha: pick(&self.alpha, rng),
            optimizer: pick(&self.optimizer, rng),
            learning_rate,
            clip_norm: pick(&self.clip_norm, rng),
            noise_eta: pick(&self.noise_eta, rng),
            noise_gamma: pick(&self.noise_gamma, rng),
            entropy_rho: pick(&self.entropy_rho, rng),
            entropy_decay: pick(&self.entropy_decay, rng),
            epsilon: self.epsilon,
            max_epochs: self.max_epochs,
            loss_threshold: self.loss_threshold,
        }
    }
}

/// Mixes a master seed with a setting and seed index (SplitMix64 finalizer).
pub fn derive_seed(master: u64, setting: u64, seed: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ setting) ^ seed.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingResult {
    pub hyperparams: FmgdHyperparams,
    pub successes: usize,
    pub runs: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub settings: Vec<SettingResult>,
    pub best_setting: usize,
    /// "Best Hypers": the highest per-setting success fraction.
    pub best_fraction: f64,
    /// "Average Hypers": successes over all runs of all settings.
    pub aggregate_fraction: f64,
}

/// Seeds used by run `seed` of every setting. Runs with the same index share
/// the initialization seed across settings so comparisons are matched.
pub fn run_seed(master: u64, seed: usize) -> u64 {
    derive_seed(master, u64::MAX, seed as u64)
}

pub fn random_search(
    g: &GatedFactorGraph,
    dist: &HyperDistribution,
    n_settings: usize,
    n_seeds: usize,
    master_seed: u64,
) -> SearchReport {
    let settings: Vec<FmgdHyperparams> = (0..n_settings)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, i as u64, u64::MAX));
            dist.sample(&mut rng)
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..n_settings).flat_map(|s| (0..n_seeds).map(move |k| (s, k))).collect();
    let outcomes: Vec<bool> = jobs
        .par_iter()
        .map_init(
            || Trainer::new(g),
            |tr, &(s, k)| tr.train(&settings[s], run_seed(master_seed, k)).converged(),
        )
        .collect();
    let mut results = Vec::new();
    for (s, h) in settings.into_iter().enumerate() {
        let successes = outcomes[s * n_seeds..(s + 1) * n_seeds].iter().filter(|&&b| b).count();
        let fraction = if n_seeds == 0 { 0.0 } else { successes as f64 / n_seeds as f64 };
        results.push(SettingResult { hyperparams: h, successes, runs: n_seeds, fraction });
    }
    let mut best_setting = 0;
    for (i, r) in results.iter().enumerate() {
        if r.fraction > results[best_setting].fraction {
            best_setting = i;
        }
    }
    let total: usize = results.iter().map(|r| r.successes).sum();
    let runs = n_settings * n_seeds;
    SearchReport {
        best_fraction: results.get(best_setting).map_or(0.0, |r| r.fraction),
        aggregate_fraction: if runs == 0 { 0.0 } else { total as f64 / runs as f64 },
        best_setting,
        settings: results,
    }
}
