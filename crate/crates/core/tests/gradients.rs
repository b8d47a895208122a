//! Analytic gradients against central finite differences, and the batch loss
//! against a separate nalgebra implementation of the forward pass.

use nalgebra::{DMatrix, DVector};
use wsci_core::data::TrainingExample;
use wsci_core::encoding::SemanticMatrix;
use wsci_core::nn::{Activation, DenseLayer, Mlp, ParamStore, Snapshot};
use wsci_core::rng;
use wsci_core::vae::objective::{accumulate_gradients, batch_loss};
use wsci_core::vae::{LatentTerm, VaeNet, VaeObjective, Weighting};
use wsci_core::Matrix;

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const ABS_TOL: f64 = 1e-7;

fn close(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= ABS_TOL || diff <= REL_TOL * analytic.abs().max(numeric.abs())
}

struct Fixture {
    net: VaeNet,
    batch: Vec<TrainingExample>,
    eps: Vec<Vec<f64>>,
    semantic: SemanticMatrix,
}

/// d = 4, m = 3, C = 2, hidden = 4, three instances with fixed noise.
fn fixture() -> Fixture {
    let mut init = rng::seeded(11, rng::stream::INIT);
    let net = VaeNet::glorot(4, 4, 3, &mut init);
    let batch = vec![
        TrainingExample { x: vec![0.5, -1.2, 0.3, 0.9], label: 0 },
        TrainingExample { x: vec![-0.7, 0.4, 1.1, -0.2], label: 1 },
        TrainingExample { x: vec![1.5, 0.1, -0.6, 0.4], label: 0 },
    ];
    let eps = vec![
        vec![0.3, -1.1, 0.7],
        vec![-0.4, 0.2, 1.3],
        vec![0.9, 0.5, -0.8],
    ];
    let a = Matrix::from_rows(&[vec![0.6, -0.3], vec![-0.2, 0.8], vec![0.5, 0.4]]).unwrap();
    let semantic = SemanticMatrix::single_block("test", a).unwrap();
    Fixture { net, batch, eps, semantic }
}

fn objectives() -> Vec<(&'static str, VaeObjective)> {
    let weighted = |scale| VaeObjective {
        latent: LatentTerm::Semantic { weighting: Weighting::Reconstruction, offset_log_classes: true },
        recon_scale: scale,
    };
    vec![
        ("weighted small recon", weighted(1e-4)),
        ("weighted unit recon", weighted(1.0)),
        (
            "unweighted",
            VaeObjective {
                latent: LatentTerm::Semantic { weighting: Weighting::Uniform, offset_log_classes: true },
                recon_scale: 0.0,
            },
        ),
        ("semantic vae", VaeObjective::semantic_vae()),
        ("plain vae", VaeObjective::plain_vae()),
    ]
}

fn param(snapshot: &Snapshot, name: &str) -> DMatrix<f64> {
    let e = snapshot.get(name).unwrap_or_else(|| panic!("missing {name}"));
    DMatrix::from_row_slice(e.rows, e.cols, &e.values)
}

fn dense(snapshot: &Snapshot, name: &str, input: &DVector<f64>) -> DVector<f64> {
    let w = param(snapshot, &format!("{name}.weight"));
    let b = param(snapshot, &format!("{name}.bias"));
    &w * input + b.column(0)
}

/// Straight-line restatement of the forward pass and loss.
fn oracle_loss(net: &VaeNet, fx: &Fixture, objective: &VaeObjective, frozen: Option<&[f64]>) -> f64 {
    let s = net.snapshot();
    let a = DMatrix::from_row_slice(
        fx.semantic.dim(),
        fx.semantic.classes(),
        fx.semantic.matrix().as_slice(),
    );
    let mut log_p = Vec::new();
    let mut latent = Vec::new();
    for (ex, eps) in fx.batch.iter().zip(&fx.eps) {
        let x = DVector::from_column_slice(&ex.x);
        let h = dense(&s, "encoder.hidden", &x).map(f64::tanh);
        let mu = dense(&s, "encoder.mean", &h);
        let lv = dense(&s, "encoder.log_var", &h);
        let z = DVector::from_iterator(3, (0..3).map(|j| mu[j] + (0.5 * lv[j]).exp() * eps[j]));
        let hd = dense(&s, "decoder.hidden", &z).map(f64::tanh);
        let mx = dense(&s, "decoder.out", &hd);
        let d = ex.x.len() as f64;
        log_p.push(-0.5 * d * (2.0 * std::f64::consts::PI).ln() - 0.5 * (&x - &mx).norm_squared());

        let logits = a.transpose() * &z;
        let top = logits.max();
        let lse = top + logits.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        let kl = 0.5 * (0..3).map(|j| mu[j] * mu[j] + lv[j].exp() - 1.0 - lv[j]).sum::<f64>();
        latent.push((logits[ex.label] - lse, kl));
    }
    let top = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tilde: Vec<f64> = log_p.iter().map(|l| (l - top).exp()).collect();
    let classes = fx.semantic.classes() as f64;
    let mut loss = 0.0;
    for (i, (log_prob, kl)) in latent.iter().enumerate() {
        loss += match objective.latent {
            LatentTerm::Semantic { weighting, offset_log_classes } => {
                let w = match (frozen, weighting) {
                    (Some(f), _) => f[i],
                    (None, Weighting::Reconstruction) => tilde[i],
                    (None, Weighting::Uniform) => 1.0,
                };
                let offset = if offset_log_classes { classes.ln() } else { 0.0 };
                -w * (log_prob + offset)
            }
            LatentTerm::KlStandardNormal => *kl,
        };
    }
    loss - objective.recon_scale * log_p.iter().sum::<f64>()
}

fn refs(batch: &[TrainingExample]) -> Vec<&TrainingExample> {
    batch.iter().collect()
}

/// Adds `delta` to element `elem` of the `index`-th visited parameter.
fn nudge<P: ParamStore + ?Sized>(store: &mut P, index: usize, elem: usize, delta: f64) {
    let mut i = 0;
    store.visit_mut(&mut |p| {
        if i == index {
            p.value[elem] += delta;
        }
        i += 1;
    });
}

fn grads<P: ParamStore + ?Sized>(store: &P) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    store.visit(&mut |p| out.push((p.name.to_string(), p.grad.to_vec())));
    out
}

#[test]
fn batch_loss_matches_independent_forward_pass() {
    let fx = fixture();
    let batch = refs(&fx.batch);
    for (name, objective) in objectives() {
        let got = batch_loss(&fx.net, &batch, &fx.eps, Some(&fx.semantic), &objective, None).unwrap();
        let want = oracle_loss(&fx.net, &fx, &objective, None);
        assert!((got.loss - want).abs() <= 1e-12 * want.abs().max(1.0), "{name}: {} vs {want}", got.loss);
    }
}

#[test]
fn every_parameter_gradient_matches_finite_differences() {
    let fx = fixture();
    let batch = refs(&fx.batch);
    for (name, objective) in objectives() {
        let mut net = fx.net.clone();
        net.zero_grad();
        let outcome = accumulate_gradients(&mut net, &batch, &fx.eps, Some(&fx.semantic), &objective).unwrap();
        // p̃ is a constant of the objective, so the numeric side holds it fixed.
        let reweights = matches!(
            objective.latent,
            LatentTerm::Semantic { weighting: Weighting::Reconstruction, .. }
        );
        let frozen = reweights.then(|| outcome.weights.tilde_p.clone());
        let analytic = grads(&net);
        let mut checked = 0;
        for (pi, (pname, g)) in analytic.iter().enumerate() {
            for (k, &a) in g.iter().enumerate() {
                let mut plus = fx.net.clone();
                nudge(&mut plus, pi, k, STEP);
                let mut minus = fx.net.clone();
                nudge(&mut minus, pi, k, -STEP);
                let lp = batch_loss(&plus, &batch, &fx.eps, Some(&fx.semantic), &objective, frozen.as_deref()).unwrap();
                let lm = batch_loss(&minus, &batch, &fx.eps, Some(&fx.semantic), &objective, frozen.as_deref()).unwrap();
                let numeric = (lp.loss - lm.loss) / (2.0 * STEP);
                assert!(close(a, numeric), "{name}: {pname}[{k}] analytic {a} numeric {numeric}");
                checked += 1;
            }
        }
        assert_eq!(checked, fx.net.parameter_count());
    }
}

#[test]
fn frozen_weights_agree_with_oracle() {
    let fx = fixture();
    let batch = refs(&fx.batch);
    let objective = objectives()[1].1;
    let frozen = [0.25, 1.0, 0.5];
    let got = batch_loss(&fx.net, &batch, &fx.eps, Some(&fx.semantic), &objective, Some(&frozen)).unwrap();
    let want = oracle_loss(&fx.net, &fx, &objective, Some(&frozen));
    assert!((got.loss - want).abs() < 1e-12 * want.abs().max(1.0));
}

#[test]
fn all_ones_frozen_weights_reduce_to_uniform_weighting() {
    let fx = fixture();
    let batch = refs(&fx.batch);
    let weighted = VaeObjective {
        latent: LatentTerm::Semantic { weighting: Weighting::Reconstruction, offset_log_classes: true },
        recon_scale: 0.0,
    };
    let uniform = VaeObjective {
        latent: LatentTerm::Semantic { weighting: Weighting::Uniform, offset_log_classes: true },
        recon_scale: 0.0,
    };
    let a = batch_loss(&fx.net, &batch, &fx.eps, Some(&fx.semantic), &weighted, Some(&[1.0; 3])).unwrap();
    let b = batch_loss(&fx.net, &batch, &fx.eps, Some(&fx.semantic), &uniform, None).unwrap();
    assert_eq!(a.loss.to_bits(), b.loss.to_bits());
}

fn layer_check(layer: &DenseLayer, input: &[f64], upstream: &[f64]) {
    let probe = |l: &DenseLayer, x: &[f64]| -> f64 {
        l.apply(x).unwrap().iter().zip(upstream).map(|(o, u)| o * u).sum()
    };
    let mut work = layer.clone();
    work.zero_grad();
    let trace = work.trace(input).unwrap();
    let grad_input = work.backward_trace(&trace, upstream).unwrap();
    for (i, &g) in grad_input.iter().enumerate() {
        let mut xp = input.to_vec();
        xp[i] += STEP;
        let mut xm = input.to_vec();
        xm[i] -= STEP;
        let numeric = (probe(layer, &xp) - probe(layer, &xm)) / (2.0 * STEP);
        assert!(close(g, numeric), "input[{i}] {g} vs {numeric}");
    }
    for (pi, (name, g)) in grads(&work).iter().enumerate() {
        for (k, &a) in g.iter().enumerate() {
            let mut plus = layer.clone();
            nudge(&mut plus, pi, k, STEP);
            let mut minus = layer.clone();
            nudge(&mut minus, pi, k, -STEP);
            let numeric = (probe(&plus, input) - probe(&minus, input)) / (2.0 * STEP);
            assert!(close(a, numeric), "{name}[{k}] {a} vs {numeric}");
        }
    }
}

#[test]
fn dense_layer_gradients_for_each_activation() {
    let input = [0.4, -0.9, 1.3, 0.05, -0.35];
    let upstream = [1.0, -0.5, 0.25];
    for activation in [Activation::Identity, Activation::Tanh, Activation::Relu] {
        let mut r = rng::seeded(5, rng::stream::INIT);
        let layer = DenseLayer::glorot("probe", 5, 3, activation, &mut r);
        layer_check(&layer, &input, &upstream);
    }
}

#[test]
fn mlp_gradients() {
    let mut r = rng::seeded(6, rng::stream::INIT);
    let mlp = Mlp::glorot("probe", 3, 5, 2, &mut r);
    let input = [0.2, -1.0, 0.7];
    let upstream = [0.8, -1.3];
    let probe = |m: &Mlp| -> f64 { m.apply(&input).unwrap().iter().zip(&upstream).map(|(o, u)| o * u).sum() };
    let mut work = mlp.clone();
    work.zero_grad();
    let trace = work.trace(&input).unwrap();
    work.backward(&trace, &upstream).unwrap();
    for (pi, (name, g)) in grads(&work).iter().enumerate() {
        for (k, &a) in g.iter().enumerate() {
            let mut plus = mlp.clone();
            nudge(&mut plus, pi, k, STEP);
            let mut minus = mlp.clone();
            nudge(&mut minus, pi, k, -STEP);
            let numeric = (probe(&plus) - probe(&minus)) / (2.0 * STEP);
            assert!(close(a, numeric), "{name}[{k}] {a} vs {numeric}");
        }
    }
}
