use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpt_core::bench::{builtin_task, island_configs};
use tpt_core::fmgd::*;
use tpt_core::frontend::compile_source;
use tpt_core::interp::{check_consistency, enumerate_all};
use tpt_core::ir::{compile_graph, GatedFactorGraph, ParamAssignment};

fn graph_of(src: &str) -> GatedFactorGraph {
    compile_graph(&compile_source(src, &BTreeMap::new(), None, None).unwrap()).unwrap()
}

fn task_graph(name: &str) -> GatedFactorGraph {
    builtin_task(name).unwrap().graph().unwrap()
}

fn random_logits(g: &GatedFactorGraph, rng: &mut ChaCha8Rng, scale: f64) -> Logits {
    let mut l = Logits::zeros(g);
    for m in l.m.iter_mut().flatten() {
        *m = rng.gen_range(-scale..scale);
    }
    l
}

fn fd_max_rel_error(g: &GatedFactorGraph, l: &Logits) -> f64 {
    let h = 1e-5;
    let (_, grad) = gradient(g, l).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..l.m.len() {
        for k in 0..l.m[i].len() {
            let mut plus = l.clone();
            plus.m[i][k] += h;
            let mut minus = l.clone();
            minus.m[i][k] -= h;
            let fd = (forward(g, &plus).unwrap().loss - forward(g, &minus).unwrap().loss) / (2.0 * h);
            let a = grad.m[i][k];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn copy_factor_passes_the_marginal_through() {
    let g = graph_of("x = Param(2)\ny = Var(2)\ny.set_to(x)\ny.observe_value(1)\n");
    let l = Logits::from_probs(g.free_params.clone(), &[vec![0.3, 0.7]], 40.0);
    let f = forward(&g, &l).unwrap();
    let y = f.marginal(g.var_by_name("y").unwrap()).unwrap();
    assert!((y[0] - 0.3).abs() < 1e-12 && (y[1] - 0.7).abs() < 1e-12);
    assert!((f.loss + 0.7f64.ln()).abs() < 1e-12);
}

#[test]
fn parity_factor_with_onehot_inputs() {
    let src = "@CompileMe([2, 2], 2)\ndef Parity(a, b): return (a + b) % 2\n\
               a = Var(2); b = Var(2); y = Var(2)\n\
               a.set_to_constant(1)\nb.set_to_constant(0)\ny.set_to(Parity(a, b))\ny.observe_value(1)\n";
    let g = graph_of(src);
    let f = forward(&g, &Logits::zeros(&g)).unwrap();
    assert_eq!(f.marginal(g.var_by_name("y").unwrap()).unwrap(), &[0.0, 1.0]);
    assert_eq!(f.loss, 0.0);
}

#[test]
fn gate_exit_averages_by_the_gate_marginal() {
    let src = "c = Param(2)\ny = Var(2)\nif c == 0:\n  y.set_to(0)\nelse:\n  y.set_to(1)\ny.observe_value(1)\n";
    let g = graph_of(src);
    let l = Logits::from_probs(g.free_params.clone(), &[vec![0.25, 0.75]], 40.0);
    let f = forward(&g, &l).unwrap();
    let y = f.marginal(g.var_by_name("y").unwrap()).unwrap();
    assert!((y[0] - 0.25).abs() < 1e-12 && (y[1] - 0.75).abs() < 1e-12);
}

#[test]
fn leak_renormalization_is_identity_when_nothing_leaks() {
    // Inside the gate x is 1 or 2, so x - 1 never leaves the domain.
    let src = "x = Param(3)\ny = Var(3)\nif x == 0:\n  y.set_to(0)\nelse:\n  y.set_to(x - 1)\ny.observe_value(1)\n";
    let g = graph_of(src);
    assert!(g.factors.iter().any(|f| f.table.has_leak()));
    let l = Logits::from_probs(g.free_params.clone(), &[vec![0.0, 0.4, 0.6]], 40.0);
    let f = forward(&g, &l).unwrap();
    let y = f.marginal(g.var_by_name("y").unwrap()).unwrap();
    assert!((y[0] - 0.4).abs() < 1e-12 && (y[1] - 0.6).abs() < 1e-12, "{y:?}");
}

#[test]
fn finite_differences_on_small_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["parity_k4", "parity_k8", "fig7", "make_small", "fig5_automaton"] {
        let g = task_graph(name);
        for _ in 0..20 {
            let l = random_logits(&g, &mut rng, 3.0);
            let e = fd_max_rel_error(&g, &l);
            assert!(e < 1e-5, "{name}: relative error {e}");
        }
    }
}

#[test]
fn global_marginals_are_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["fig7", "parity_k8", "turing_invert", "circuit_full_adder", "bblock_access"] {
        let g = task_graph(name);
        let l = random_logits(&g, &mut rng, 2.0);
        let f = forward(&g, &l).unwrap();
        for (v, _) in g.variables.iter().enumerate() {
            if let Some(mu) = f.marginal(v) {
                let s: f64 = mu.iter().sum();
                assert!((s - 1.0).abs() < 1e-9, "{name}: {} sums to {s}", g.variables[v].name);
                assert!(mu.iter().all(|&x| (0.0..=1.0 + 1e-9).contains(&x)));
            }
        }
    }
}

fn island_logits(g: &GatedFactorGraph, config: &[f64], scale: f64) -> Logits {
    let mut l = Logits::zeros(g);
    // Free params are x[1..K]; x[0] is pinned to 0.
    for (i, &c) in config[1..].iter().enumerate() {
        l.m[i] = if c == 0.0 {
            vec![scale, -scale]
        } else if c == 1.0 {
            vec![-scale, scale]
        } else {
            vec![0.0, 0.0]
        };
    }
    l
}

#[test]
fn islands_are_suboptimal_stationary_points() {
    for k in 4..=8 {
        let g = task_graph(&format!("parity_k{k}"));
        for c in island_configs(k) {
            let l = island_logits(&g, &c, 40.0);
            let (loss, grad) = gradient(&g, &l).unwrap();
            assert!(grad.max_abs() < 1e-6, "K={k} {c:?}");
            assert!(loss > 1e-3, "K={k} {c:?}");
        }
    }
}

#[test]
fn island_enumeration_matches_brute_force_gradient_search() {
    // |m| = 10 keeps every observed marginal above the log clamp.
    for k in 4..=7 {
        let g = task_graph(&format!("parity_k{k}"));
        let mut found = Vec::new();
        for idx in 0..3usize.pow(k as u32 - 1) {
            let mut c = vec![0.0; k];
            let mut rest = idx;
            for x in c.iter_mut().skip(1).rev() {
                *x = (rest % 3) as f64 / 2.0;
                rest /= 3;
            }
            let (loss, grad) = gradient(&g, &island_logits(&g, &c, 10.0)).unwrap();
            if grad.max_abs() < 1e-6 && loss > 1e-3 {
                found.push(c);
            }
        }
        assert_eq!(found, island_configs(k), "K={k}");
    }
}

#[test]
fn solution_has_zero_gradient_and_converges_at_once() {
    for name in ["parity_k8", "fig7", "nand_2w2g"] {
        let g = task_graph(name);
        let sol = enumerate_all(&g, 1 << 20).unwrap().remove(0);
        let l = Logits::saturated(&g, &sol, 40.0);
        let (loss, grad) = gradient(&g, &l).unwrap();
        assert!(loss < 1e-9 && grad.max_abs() < 1e-8, "{name}: {loss} {}", grad.max_abs());
        let r = train_from(&g, &FmgdHyperparams::vanilla(), l, 0);
        assert_eq!(r.status, TrainStatus::Converged);
        assert!(r.epochs <= 1);
        assert!(r.consistent);
    }
}

#[test]
fn converged_parity_run_discretizes_to_all_zero() {
    let g = task_graph("parity_k4");
    let r = train(&g, &FmgdHyperparams::vanilla(), 1);
    assert!(r.converged());
    assert!(r.assignment.values.values().all(|&x| x == 0));
    assert_eq!(r.consistent, check_consistency(&g, &r.assignment));
    let csv = r.trace_csv();
    assert!(csv.starts_with("epoch,loss,grad_norm\n"));
    assert_eq!(csv.lines().count(), r.trace.len() + 1);
}

#[test]
fn fig7_training_finds_x4_equal_five() {
    let g = task_graph("fig7");
    let mut t = Trainer::new(&g);
    let ok = (0..20).filter(|&s| t.train(&FmgdHyperparams::vanilla(), s).converged()).count();
    assert!(ok > 0);
}

#[test]
fn init_is_seeded() {
    let g = task_graph("fig7");
    assert_eq!(init_params(&g, 1.0, 9), init_params(&g, 1.0, 9));
    assert_ne!(init_params(&g, 1.0, 9), init_params(&g, 1.0, 10));
}

#[test]
fn uniform_dirichlet_has_mean_one_over_n() {
    let g = graph_of("x = Param(5)\ny = Var(5)\ny.set_to(x)\ny.observe_value(0)\n");
    let n = 10_000;
    let mut sum = [0.0; 5];
    for s in 0..n {
        let p = init_params(&g, 1.0, s).softmax(0);
        for k in 0..5 {
            sum[k] += p[k];
        }
    }
    // Each coordinate is Beta(1, 4): variance 4 / (25 * 6).
    let sd = (4.0f64 / 150.0 / n as f64).sqrt();
    for s in sum {
        assert!((s / n as f64 - 0.2).abs() < 3.0 * sd, "{}", s / n as f64);
    }
}

#[test]
fn large_alpha_is_nearly_uniform() {
    let g = graph_of("x = Param(2)\ny = Var(2)\ny.set_to(x)\ny.observe_value(0)\n");
    for s in 0..10_000 {
        let p = init_params(&g, 1e6, s).softmax(0);
        assert!((p[0] - 0.5).abs() < 0.01);
    }
}

#[test]
fn point_distribution_is_repeated_training() {
    let g = task_graph("parity_k8");
    let h = FmgdHyperparams::vanilla();
    let rep = random_search(&g, &HyperDistribution::point(&h), 1, 10, 3);
    let mut t = Trainer::new(&g);
    let direct = (0..10).filter(|&k| t.train(&h, run_seed(3, k)).converged()).count();
    assert_eq!(rep.settings[0].successes, direct);
    assert_eq!(rep.best_fraction, rep.aggregate_fraction);
}

#[test]
fn search_is_reproducible_and_best_dominates_average() {
    let g = task_graph("parity_k8");
    let d = HyperDistribution { max_epochs: 300, ..HyperDistribution::default() };
    let a = random_search(&g, &d, 6, 4, 42);
    let b = random_search(&g, &d, 6, 4, 42);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.best_fraction >= a.aggregate_fraction);
}

#[test]
fn default_distribution_roundtrips() {
    let d = HyperDistribution::default();
    let back: HyperDistribution = serde_json::from_str(&serde_json::to_string_pretty(&d).unwrap()).unwrap();
    assert_eq!(d, back);
    d.validate().unwrap();
}

#[test]
fn numeric_error_names_the_site() {
    let g = task_graph("parity_k4");
    let mut l = Logits::zeros(&g);
    l.m[0][0] = f64::NAN;
    let err = forward(&g, &l).unwrap_err();
    assert!(err.site.starts_with("x["), "{}", err.site);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_loss_implies_consistency(bits in proptest::collection::vec(0u32..10, 3), scale in 20.0f64..60.0) {
        let g = task_graph("fig7");
        let mut a = ParamAssignment::default();
        for (i, &p) in g.free_params.iter().enumerate() {
            a.values.insert(p, bits[i] % g.variables[p].domain as u32);
        }
        let l = Logits::saturated(&g, &a, scale);
        let loss = forward(&g, &l).unwrap().loss;
        if loss < 1e-9 {
            prop_assert!(check_consistency(&g, &discretize(&l)));
        }
        prop_assert_eq!(loss < 1e-9, check_consistency(&g, &a));
    }

    #[test]
    fn softmax_of_logits_is_a_distribution(seed in 0u64..1000, alpha in 0.05f64..10.0) {
        let g = task_graph("fig7");
        let l = init_params(&g, alpha, seed);
        for i in 0..l.m.len() {
            let s: f64 = l.softmax(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(l.m[i].iter().all(|x| x.is_finite()));
        }
    }
}
