use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{discretize, init_with, FmgdHyperparams, Logits, Optimizer, Program};
use crate::interp::Checker;
use crate::ir::{GatedFactorGraph, ParamAssignment};

const RMS_DECAY: f64 = 0.9;
const RMS_EPS: f64 = 1e-10;
const STALL_NORM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainStatus {
    Converged,
    Stalled,
    EpochLimit,
    NumericError,
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub epoch: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainResult {
    pub status: TrainStatus,
    pub final_loss: f64,
    pub epochs: usize,
    pub trace: Vec<TracePoint>,
    #[serde(skip)]
    pub logits: Logits,
    #[serde(skip)]
    pub assignment: ParamAssignment,
    pub consistent: bool,
    pub error: Option<String>,
}

impl TrainResult {
    pub fn converged(&self) -> bool {
        self.status == TrainStatus::Converged
    }

    /// The loss trace as CSV with header `epoch,loss,grad_norm`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("epoch,loss,grad_norm\n");
        for p in &self.trace {
            s.push_str(&format!("{},{:e},{:e}\n", p.epoch, p.loss, p.grad_norm));
        }
        s
    }
}

/// Reusable training state for one graph.
pub struct Trainer<'a> {
    graph: &'a GatedFactorGraph,
    program: Program,
    checker: Checker<'a>,
}

impl<'a> Trainer<'a> {
    pub fn new(graph: &'a GatedFactorGraph) -> Self {
        Trainer { graph, program: Program::new(graph), checker: Checker::new(graph) }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn train(&mut self, h: &FmgdHyperparams, seed: u64) -> TrainResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = init_with(self.graph, h.alpha, &mut rng);
        self.run(h, init, &mut rng)
    }

    pub fn train_from(&mut self, h: &FmgdHyperparams, init: Logits, seed: u64) -> TrainResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.run(h, init, &mut rng)
    }

    fn is_consistent(&mut self, a: &ParamAssignment) -> bool {
        let values: Vec<u32> = self.graph.free_params.iter().map(|&p| a.get(p).unwrap_or(0)).collect();
        self.checker.check_values(&values)
    }

    fn run(&mut self, h: &FmgdHyperparams, mut logits: Logits, rng: &mut ChaCha8Rng) -> TrainResult {
        let mut grad = logits.clone();
        let mut ms: Vec<Vec<f64>> = logits.m.iter().map(|m| vec![0.0; m.len()]).collect();
        let mut buf = Vec::new();
        let mut adj = Vec::new();
        let mut trace = Vec::new();
        let mut status = TrainStatus::EpochLimit;
        let mut error = None;
        let mut final_loss = f64::INFINITY;
        let mut epochs = 0;
        let mut rho = h.entropy_rho;
        let mut last_checked: Option<ParamAssignment> = None;
        for t in 0..=h.max_epochs {
            let loss = match self.program.gradient(&logits, h.epsilon, rho, &mut buf, &mut adj, &mut grad) {
                Ok((_, loss)) => loss,
                Err(e) => {
                    status = TrainStatus::NumericError;
                    error = Some(e.to_string());
                    break;
                }
            };
            final_loss = loss;
            epochs = t;
            let mut norm = grad.norm();
            trace.push(TracePoint { epoch: t, loss, grad_norm: norm });
            if loss < h.loss_threshold {
                let a = discretize(&logits);
                if last_checked.as_ref() != Some(&a) {
                    if self.is_consistent(&a) {
                        status = TrainStatus::Converged;
                        break;
                    }
                    last_checked = Some(a);
                }
            }
            if t == h.max_epochs {
                break;
            }
            if norm < STALL_NORM && h.noise_eta == 0.0 {
                status = TrainStatus::Stalled;
                break;
            }
            if let Some(c) = h.clip_norm {
                if norm > c {
                    let s = c / norm;
                    grad.m.iter_mut().flatten().for_each(|g| *g *= s);
                    norm = c;
                }
            }
            let _ = norm;
            if h.noise_eta > 0.0 {
                let sd = (h.noise_eta / (1.0 + t as f64).powf(h.noise_gamma)).sqrt();
                for g in grad.m.iter_mut().flatten() {
                    let z: f64 = StandardNormal.sample(rng);
                    *g += sd * z;
                }
            }
            for ((m, g), v) in logits.m.iter_mut().zip(&grad.m).zip(ms.iter_mut()) {
                for k in 0..m.len() {
                    match h.optimizer {
                        Optimizer::Sgd => m[k] -= h.learning_rate * g[k],
                        Optimizer::RmsProp => {
                            v[k] = RMS_DECAY * v[k] + (1.0 - RMS_DECAY) * g[k] * g[k];
                            m[k] -= h.learning_rate * g[k] / (v[k].sqrt() + RMS_EPS);
                        }
                    }
                }
            }
            rho *= h.entropy_decay;
        }
        let assignment = discretize(&logits);
        let consistent = self.is_consistent(&assignment);
        TrainResult { status, final_loss, epochs, trace, logits, assignment, consistent, error }
    }
}

pub fn train(g: &GatedFactorGraph, h: &FmgdHyperparams, seed: u64) -> TrainResult {
    Trainer::new(g).train(h, seed)
}

pub fn train_from(g: &GatedFactorGraph, h: &FmgdHyperparams, init: Logits, seed: u64) -> TrainResult {
    Trainer::new(g).train_from(h, init, seed)
}
