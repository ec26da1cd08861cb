#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stressfusion::nn::{
    flatten_gradients, objective, set_parameter, Activation, DenseNet, LayerSpec, LossKind, Mode,
};

pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for relative error, so components that are zero up to
/// finite-difference noise are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Central-difference gradient of the training objective for one example.
pub fn numeric_gradient(net: &DenseNet, x: &[f64], y: &[f64], kind: LossKind) -> Vec<f64> {
    let params = net.parameters();
    let mut scratch = net.clone();
    let mut out = Vec::with_capacity(params.len());
    for (i, &p) in params.iter().enumerate() {
        set_parameter(&mut scratch, i, p + FD_STEP);
        let plus = objective(kind, &scratch.predict(x).unwrap(), y).unwrap();
        set_parameter(&mut scratch, i, p - FD_STEP);
        let minus = objective(kind, &scratch.predict(x).unwrap(), y).unwrap();
        set_parameter(&mut scratch, i, p);
        out.push((plus - minus) / (2.0 * FD_STEP));
    }
    out
}

pub struct GradCase {
    pub net: DenseNet,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub kind: LossKind,
}

/// Random dropout-free net with at most 3 layers of at most 8 units.
pub fn random_case(seed: u64) -> GradCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_dim = rng.random_range(1..=8);
    let layers = rng.random_range(1..=3);
    let kind = if rng.random_bool(0.5) {
        LossKind::Bce
    } else {
        LossKind::MseForRmse
    };
    let mut specs = Vec::new();
    for _ in 0..layers - 1 {
        let act =
            [Activation::Relu, Activation::Sigmoid, Activation::Identity][rng.random_range(0..3)];
        specs.push(LayerSpec::new(rng.random_range(1..=8), act, 0.0));
    }
    let (out_units, out_act) = match kind {
        LossKind::Bce => (rng.random_range(1..=3), Activation::Sigmoid),
        LossKind::MseForRmse => (
            rng.random_range(1..=3),
            [Activation::Identity, Activation::Sigmoid][rng.random_range(0..2)],
        ),
    };
    specs.push(LayerSpec::new(out_units, out_act, 0.0));
    let mut net = DenseNet::build(input_dim, &specs, &mut rng).unwrap();
    // nonzero biases so bias gradients are exercised away from the init point
    for (i, p) in net.parameters().into_iter().enumerate() {
        set_parameter(&mut net, i, p + rng.random_range(-0.3..0.3));
    }
    let input = (0..input_dim)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let target = (0..out_units)
        .map(|_| match kind {
            LossKind::Bce => f64::from(u8::from(rng.random_bool(0.5))),
            LossKind::MseForRmse => rng.random_range(-1.0..1.0),
        })
        .collect();
    GradCase {
        net,
        input,
        target,
        kind,
    }
}

/// Max relative error between backprop and central differences for one case.
pub fn gradient_check(case: &GradCase) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, trace) = case
        .net
        .forward(&case.input, Mode::Infer, &mut rng)
        .unwrap();
    let analytic = flatten_gradients(&case.net.backward(&trace, &case.target, case.kind).unwrap());
    let numeric = numeric_gradient(&case.net, &case.input, &case.target, case.kind);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Counts `(tp, fp, tn, fn)` by looking at every pair on its own.
pub fn confusion_oracle(preds: &[u8], labels: &[u8]) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (1, 1) => c.0 += 1,
            (1, 0) => c.1 += 1,
            (0, 0) => c.2 += 1,
            (0, 1) => c.3 += 1,
            _ => panic!("non-binary pair"),
        }
    }
    c
}

/// Accuracy, precision, recall, F1 straight from the pair counts, with 0
/// for any ratio whose denominator is 0.
pub fn report_oracle(preds: &[u8], labels: &[u8]) -> [f64; 4] {
    let n = preds.len() as f64;
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count() as f64;
    let predicted_pos = preds.iter().filter(|&&p| p == 1).count() as f64;
    let actual_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| p == 1 && l == 1)
        .count() as f64;
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let p = ratio(hits, predicted_pos);
    let r = ratio(hits, actual_pos);
    [correct / n, p, r, ratio(2.0 * p * r, p + r)]
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, by enumerating every positive/negative pair.
pub fn mann_whitney_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Inclusive spans of stressed runs at least `min_run` long, found by
/// tracking the length of the run ending at each index.
pub fn run_length_alerts(labels: &[u8], min_run: usize) -> Vec<(usize, usize)> {
    let mut lengths = vec![0usize; labels.len()];
    for i in 0..labels.len() {
        if labels[i] == 1 {
            lengths[i] = if i == 0 { 1 } else { lengths[i - 1] + 1 };
        }
    }
    let mut out = Vec::new();
    for i in 0..labels.len() {
        let ends_here = lengths[i] > 0 && (i + 1 == labels.len() || lengths[i + 1] == 0);
        if ends_here && lengths[i] >= min_run {
            out.push((i + 1 - lengths[i], i));
        }
    }
    out
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random_bool(p))).collect()
}
