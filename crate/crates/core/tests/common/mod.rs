//! Independent reference implementations shared by the oracle and
//! acceptance tests. Nothing here calls into the library's numeric kernels.

#![allow(dead_code)]

use flowlstm::nn::{LstmParams, Network};
use flowlstm::optim::cross_entropy;
use flowlstm::tensor::Sequence;
use flowlstm::{ArchSpec, Rng};

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Step-by-step hidden_dim = 1, input_dim = 1 peephole LSTM written from
/// the cell equations with plain scalars. Returns `(h_t, c_t)` per step.
pub fn scalar_lstm(p: &LstmParams<f64>, xs: &[f64]) -> Vec<(f64, f64)> {
    let w = |m: &flowlstm::tensor::Matrix<f64>| m.get(0, 0);
    let v = |x: &flowlstm::tensor::Vector<f64>| x[0];
    let (mut h, mut c) = (0.0, 0.0);
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let i = sigmoid(w(&p.w_xi) * x + w(&p.w_hi) * h + v(&p.w_ci) * c + v(&p.b_i));
        let f = sigmoid(w(&p.w_xf) * x + w(&p.w_hf) * h + v(&p.w_cf) * c + v(&p.b_f));
        let a = (w(&p.w_xc) * x + w(&p.w_hc) * h + v(&p.b_c)).tanh();
        c = f * c + i * a;
        let o = sigmoid(w(&p.w_xo) * x + w(&p.w_ho) * h + v(&p.w_co) * c + v(&p.b_o));
        h = o * c.tanh();
        out.push((h, c));
    }
    out
}

/// Every weight, peephole, and bias of a 1→1 cell drawn from N(0, 1).
pub fn random_scalar_params(rng: &mut Rng) -> LstmParams<f64> {
    let mut p = LstmParams::<f64>::zeros(1, 1);
    for s in [
        &mut p.w_xi,
        &mut p.w_hi,
        &mut p.w_xf,
        &mut p.w_hf,
        &mut p.w_xc,
        &mut p.w_hc,
        &mut p.w_xo,
        &mut p.w_ho,
    ] {
        s.set(0, 0, rng.normal());
    }
    for s in [
        &mut p.w_ci,
        &mut p.w_cf,
        &mut p.w_co,
        &mut p.b_i,
        &mut p.b_f,
        &mut p.b_c,
        &mut p.b_o,
    ] {
        s.as_mut_slice()[0] = rng.normal();
    }
    p
}

/// Fills every parameter of `net` with N(0, scale²) draws.
pub fn randomize(net: &mut Network<f64>, rng: &mut Rng, scale: f64) {
    for s in net.slices_mut() {
        for v in s.iter_mut() {
            *v = rng.normal() * scale;
        }
    }
}

pub fn random_sequence(len: usize, dim: usize, rng: &mut Rng) -> Sequence<f64> {
    Sequence::from_flat(dim, (0..len * dim).map(|_| rng.uniform()).collect()).unwrap()
}

/// A random architecture with every width ≤ 8, all parameters randomized.
pub fn tiny_net(rng: &mut Rng) -> Network<f64> {
    let pick = |rng: &mut Rng, lo: usize, hi: usize| lo + rng.below(hi - lo + 1);
    let spec = ArchSpec {
        lstm_layers: pick(rng, 1, 2),
        hidden_cells: pick(rng, 1, 8),
        relu_layers: pick(rng, 0, 2),
        stack_factor: pick(rng, 1, 2),
        input_dim: pick(rng, 1, 8),
        feature_dim: pick(rng, 1, 8),
        class_count: pick(rng, 2, 5),
    };
    let mut net = flowlstm::zoo::build(&spec, rng).unwrap();
    randomize(&mut net, rng, 0.5);
    // keep ReLU pre-activations away from the kink so finite differences are smooth
    for s in net.slices_mut() {
        for v in s.iter_mut() {
            if v.abs() < 1e-3 {
                *v += 0.01;
            }
        }
    }
    net
}

pub fn loss(net: &Network<f64>, seq: &Sequence<f64>, target: usize) -> f64 {
    cross_entropy(&net.probabilities(seq).unwrap(), target).unwrap()
}

/// Central differences of the loss with respect to every parameter.
pub fn numeric_gradient(
    net: &Network<f64>,
    seq: &Sequence<f64>,
    target: usize,
    eps: f64,
) -> Vec<Vec<f64>> {
    let shapes: Vec<usize> = net.slices().iter().map(|s| s.len()).collect();
    let mut probe = net.clone();
    let mut grads = Vec::with_capacity(shapes.len());
    for (t, &n) in shapes.iter().enumerate() {
        let mut g = vec![0.0; n];
        for (k, gk) in g.iter_mut().enumerate() {
            let orig = probe.slices()[t][k];
            probe.slices_mut()[t][k] = orig + eps;
            let up = loss(&probe, seq, target);
            probe.slices_mut()[t][k] = orig - eps;
            let down = loss(&probe, seq, target);
            probe.slices_mut()[t][k] = orig;
            *gk = (up - down) / (2.0 * eps);
        }
        grads.push(g);
    }
    grads
}

/// Largest `|analytic − numeric| / max(1, |numeric|)` over all parameters.
pub fn worst_gradient_error(net: &Network<f64>, seq: &Sequence<f64>, target: usize) -> f64 {
    let tape = net.forward(seq).unwrap();
    let analytic = net.backward(&tape, target).unwrap();
    let numeric = numeric_gradient(net, seq, target, 1e-5);
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.slices().iter().zip(&numeric) {
        for (&a, &n) in a.iter().zip(n) {
            worst = worst.max((a - n).abs() / n.abs().max(1.0));
        }
    }
    worst
}

/// `max |G − I|` where `G` is `QᵀQ` for tall/square `Q` and `QQᵀ` for wide.
pub fn gram_error(rows: usize, cols: usize, data: &[f64]) -> f64 {
    let at = |r: usize, c: usize| data[r * cols + c];
    let mut worst: f64 = 0.0;
    if rows >= cols {
        for a in 0..cols {
            for b in 0..cols {
                let g: f64 = (0..rows).map(|r| at(r, a) * at(r, b)).sum();
                worst = worst.max((g - f64::from(u8::from(a == b))).abs());
            }
        }
    } else {
        for a in 0..rows {
            for b in 0..rows {
                let g: f64 = (0..cols).map(|c| at(a, c) * at(b, c)).sum();
                worst = worst.max((g - f64::from(u8::from(a == b))).abs());
            }
        }
    }
    worst
}
