//! Forward marginals gradient descent.
//!
//! Every variable carries a local unary marginal. Parameters are softmaxes of
//! learnable logits, factors push marginals through their tables, and gate
//! families average the marginals of their branches by the marginal of the
//! condition. The loss is the cross entropy of the observed values.

mod program;
mod search;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::ir::{GatedFactorGraph, ParamAssignment, VarId};

pub use program::{MarginalTape, NumericError, Program, Site};
pub use search::{derive_seed, random_search, run_seed, HyperDistribution, LearningRateRange, SearchReport, SettingResult};
pub use train::{train, train_from, TracePoint, TrainResult, TrainStatus, Trainer};

/// Learnable log-parameters, one vector per free parameter cell, in the
/// order of `GatedFactorGraph::free_params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logits {
    pub params: Vec<VarId>,
    pub m: Vec<Vec<f64>>,
}

impl Logits {
    pub fn zeros(g: &GatedFactorGraph) -> Logits {
        Logits {
            params: g.free_params.clone(),
            m: g.free_params.iter().map(|&p| vec![0.0; g.variables[p].domain]).collect(),
        }
    }

    /// Logits whose softmax puts all but `e^-scale`-order mass on `assignment`.
    pub fn saturated(g: &GatedFactorGraph, assignment: &ParamAssignment, scale: f64) -> Logits {
        let mut l = Logits::zeros(g);
        for (i, &p) in l.params.iter().enumerate() {
            let x = assignment.get(p).unwrap_or(0) as usize;
            for (k, m) in l.m[i].iter_mut().enumerate() {
                *m = if k == x { scale } else { -scale };
            }
        }
        l
    }

    /// Logits `log(mu)` for the given distributions, with zeros mapped to `-scale`.
    pub fn from_probs(params: Vec<VarId>, probs: &[Vec<f64>], scale: f64) -> Logits {
        let m = probs
            .iter()
            .map(|p| p.iter().map(|&x| if x > 0.0 { x.ln() } else { -scale }).collect())
            .collect();
        Logits { params, m }
    }

    pub fn softmax(&self, i: usize) -> Vec<f64> {
        softmax(&self.m[i])
    }

    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |a, x| a.max(x.abs()))
    }
}

pub fn softmax(m: &[f64]) -> Vec<f64> {
    let mx = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = m.iter().map(|x| (x - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[serde(rename = "rmsprop")]
    RmsProp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FmgdHyperparams {
    pub alpha: f64,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    pub noise_eta: f64,
    pub noise_gamma: f64,
    pub entropy_rho: f64,
    pub entropy_decay: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub loss_threshold: f64,
}

impl Default for FmgdHyperparams {
    fn default() -> Self {
        FmgdHyperparams::vanilla()
    }
}

impl FmgdHyperparams {
    /// Plain RMSProp with no clipping, noise or entropy bonus.
    pub fn vanilla() -> Self {
        FmgdHyperparams {
            alpha: 1.0,
            optimizer: Optimizer::RmsProp,
            learning_rate: 0.1,
            clip_norm: None,
            noise_eta: 0.0,
            noise_gamma: 0.55,
            entropy_rho: 0.0,
            entropy_decay: 0.9999,
            epsilon: 1e-12,
            max_epochs: 2000,
            loss_threshold: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let bad = |what: &str| Err(format!("invalid hyperparameter: {what}"));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be > 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad("clip_norm must be > 0");
            }
        }
        if !(self.noise_eta >= 0.0) || !(self.noise_gamma >= 0.0) {
            return bad("noise parameters must be >= 0");
        }
        if !(self.entropy_rho >= 0.0) {
            return bad("entropy_rho must be >= 0");
        }
        if !(self.entropy_decay > 0.0 && self.entropy_decay <= 1.0) {
            return bad("entropy_decay must be in (0, 1]");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0");
        }
        if !(self.loss_threshold > 0.0) {
            return bad("loss_threshold must be > 0");
        }
        Ok(())
    }
}

/// Draws `exp(m_p) ~ Dirichlet(alpha)` independently for each free parameter.
pub fn init_params(g: &GatedFactorGraph, alpha: f64, seed: u64) -> Logits {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_with(g, alpha, &mut rng)
}

pub(crate) fn init_with(g: &GatedFactorGraph, alpha: f64, rng: &mut ChaCha8Rng) -> Logits {
    assert!(alpha > 0.0, "alpha must be positive");
    let mut l = Logits::zeros(g);
    for m in l.m.iter_mut() {
        dirichlet_log(alpha, m, rng);
    }
    l
}

/// Fills `out` with the logarithm of a Dirichlet(alpha, ..., alpha) sample.
/// Small shapes use log G(a) = log G(a + 1) + log(U) / a so the log stays finite.
fn dirichlet_log(alpha: f64, out: &mut [f64], rng: &mut ChaCha8Rng) {
    let boost = alpha < 1.0;
    let gamma = Gamma::new(if boost { alpha + 1.0 } else { alpha }, 1.0).expect("gamma shape");
    for x in out.iter_mut() {
        let mut lg = gamma.sample(rng).max(f64::MIN_POSITIVE).ln();
        if boost {
            let u: f64 = rand::Rng::gen_range(rng, f64::MIN_POSITIVE..1.0);
            lg += u.ln() / alpha;
        }
        *x = lg;
    }
    let mx = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + out.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
    for x in out.iter_mut() {
        *x -= lse;
    }
}

/// Result of a single forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub loss: f64,
    pub tape: MarginalTape,
    pub program: Program,
}

impl Forward {
    /// The global-scope marginal of `v`.
    pub fn marginal(&self, v: VarId) -> Option<&[f64]> {
        let off = self.program.global_site(v)?;
        let len = self.program.sites.iter().find(|s| s.offset == off)?.len;
        Some(&self.tape.values[off..off + len])
    }

    /// Global marginals of the observed variables, in observation order.
    pub fn outputs(&self, g: &GatedFactorGraph) -> Vec<Vec<f64>> {
        g.observations.iter().map(|&(v, _)| self.marginal(v).unwrap().to_vec()).collect()
    }
}

pub const DEFAULT_EPSILON: f64 = 1e-12;

pub fn forward(g: &GatedFactorGraph, logits: &Logits) -> Result<Forward, NumericError> {
    forward_eps(g, logits, DEFAULT_EPSILON)
}

pub fn forward_eps(g: &GatedFactorGraph, logits: &Logits, eps: f64) -> Result<Forward, NumericError> {
    let program = Program::new(g);
    let mut values = vec![0.0; program.size];
    program.forward_into(logits, &mut values)?;
    let loss = program.loss(&values, eps);
    Ok(Forward { loss, tape: MarginalTape { values }, program })
}

/// Loss and its gradient with respect to every logit.
pub fn gradient(g: &GatedFactorGraph, logits: &Logits) -> Result<(f64, Logits), NumericError> {
    gradient_eps(g, logits, DEFAULT_EPSILON)
}

pub fn gradient_eps(g: &GatedFactorGraph, logits: &Logits, eps: f64) -> Result<(f64, Logits), NumericError> {
    let program = Program::new(g);
    let mut grad = logits.clone();
    let (_, loss) = program.gradient(logits, eps, 0.0, &mut Vec::new(), &mut Vec::new(), &mut grad)?;
    Ok((loss, grad))
}

/// Argmax of each parameter's softmax, ties toward the smallest value.
pub fn discretize(logits: &Logits) -> ParamAssignment {
    let mut a = ParamAssignment::default();
    for (&p, m) in logits.params.iter().zip(&logits.m) {
        let mut best = 0;
        for (k, &x) in m.iter().enumerate() {
            if x > m[best] {
                best = k;
            }
        }
        a.values.insert(p, best as u32);
    }
    a
}
