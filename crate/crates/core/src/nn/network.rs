use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::dense::{Activation, DenseParams};
use crate::nn::lstm::{LstmParams, LstmTape, LSTM_PARAM_NAMES};
use crate::scalar::Scalar;
use crate::tensor::{argmax, softmax_slice, Sequence, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer<T> {
    Dense(DenseParams<T>),
    Lstm(LstmParams<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn input_dim(&self) -> usize {
        match self {
            Layer::Dense(d) => d.input_dim(),
            Layer::Lstm(l) => l.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Layer::Dense(d) => d.output_dim(),
            Layer::Lstm(l) => l.hidden_dim(),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            Layer::Dense(d) => Layer::Dense(DenseParams::zeros(
                d.input_dim(),
                d.output_dim(),
                d.activation,
            )),
            Layer::Lstm(l) => Layer::Lstm(LstmParams::zeros(l.input_dim(), l.hidden_dim())),
        }
    }

    pub(crate) fn slices(&self) -> Vec<&[T]> {
        match self {
            Layer::Dense(d) => d.slices(),
            Layer::Lstm(l) => l.slices(),
        }
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [T]> {
        match self {
            Layer::Dense(d) => d.slices_mut(),
            Layer::Lstm(l) => l.slices_mut(),
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Layer::Dense(_) => &["w", "b"],
            Layer::Lstm(_) => &LSTM_PARAM_NAMES,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Layer::Dense(d) if d.activation == Activation::Relu => {
                format!("ReLU({})", d.output_dim())
            }
            Layer::Dense(d) => format!("Dense({})", d.output_dim()),
            Layer::Lstm(l) => format!("LSTM({})", l.hidden_dim()),
        }
    }
}

/// A sequence classifier: dense and LSTM layers followed by a linear head
/// whose outputs are turned into class probabilities by softmax.
///
/// Layers up to and including the last LSTM run once per time step. The
/// final hidden state of that LSTM is the sequence summary; the remaining
/// dense layers and the head run once on it. Every LSTM starts from a zero
/// state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network<T> {
    layers: Vec<Layer<T>>,
    class_count: usize,
}

/// Per-layer record of a forward pass.
#[derive(Debug, Clone)]
pub enum LayerTape<T> {
    DenseSeq {
        input: Sequence<T>,
        pre: Sequence<T>,
    },
    Lstm(LstmTape<T>),
    DenseVec {
        input: Vec<T>,
        pre: Vec<T>,
    },
}

#[derive(Debug, Clone)]
pub struct ForwardTape<T> {
    pub layers: Vec<LayerTape<T>>,
    pub seq_len: usize,
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub class: usize,
    pub probs: Vector<T>,
}

impl<T: Scalar> Network<T> {
    pub fn new(layers: Vec<Layer<T>>, class_count: usize) -> Result<Self> {
        let net = Self {
            layers,
            class_count,
        };
        net.validate()?;
        Ok(net)
    }

    /// Checks dimension chaining and the head layout.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Empty("network layer list"));
        }
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => d.validate()?,
                Layer::Lstm(l) => l.validate()?,
            }
        }
        for (k, pair) in self.layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(
                    "network chaining",
                    format!(
                        "layer {k} {} emitting {}",
                        pair[0].describe(),
                        pair[0].output_dim()
                    ),
                    format!(
                        "layer {} {} expecting {}",
                        k + 1,
                        pair[1].describe(),
                        pair[1].input_dim()
                    ),
                ));
            }
        }
        if self.last_lstm().is_none() {
            return Err(Error::InvalidArgument(
                "network needs at least one LSTM layer".into(),
            ));
        }
        match self.layers.last() {
            Some(Layer::Dense(d))
                if d.activation == Activation::Linear && d.output_dim() == self.class_count =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidArgument(format!(
                "network must end in a linear head of width class_count = {}",
                self.class_count
            ))),
        }
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Human-readable layer list, e.g. `[ReLU(64), LSTM(128), ReLU(64), Softmax(5)]`.
    pub fn layout(&self) -> Vec<String> {
        let n = self.layers.len();
        self.layers
            .iter()
            .enumerate()
            .map(|(k, l)| {
                if k + 1 == n {
                    format!("Softmax({})", l.output_dim())
                } else {
                    l.describe()
                }
            })
            .collect()
    }

    fn last_lstm(&self) -> Option<usize> {
        self.layers
            .iter()
            .rposition(|l| matches!(l, Layer::Lstm(_)))
    }

    /// All parameter tensors in a fixed order (layer by layer).
    pub fn slices(&self) -> Vec<&[T]> {
        self.layers.iter().flat_map(|l| l.slices()).collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.slices_mut())
            .collect()
    }

    /// Parameter names parallel to [`Network::slices`], e.g. `layer1.w_hi`.
    pub fn param_names(&self) -> Vec<String> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(k, l)| l.param_names().iter().map(move |n| format!("layer{k}.{n}")))
            .collect()
    }

    pub fn forward(&self, seq: &Sequence<T>) -> Result<ForwardTape<T>> {
        if seq.is_empty() {
            return Err(Error::Empty("sequence"));
        }
        if seq.dim() != self.input_dim() {
            return Err(Error::shape(
                "network input",
                format!("input width {}", self.input_dim()),
                format!("sequence of width {}", seq.dim()),
            ));
        }
        Ok(self.forward_unchecked(seq))
    }

    fn forward_unchecked(&self, seq: &Sequence<T>) -> ForwardTape<T> {
        let split = self.last_lstm().expect("validated network has an LSTM");
        let mut tapes = Vec::with_capacity(self.layers.len());
        let mut current = seq.clone();

        for layer in &self.layers[..=split] {
            match layer {
                Layer::Dense(d) => {
                    let len = current.len();
                    let mut pre = Sequence::zeros(d.output_dim(), len);
                    let mut out = Sequence::zeros(d.output_dim(), len);
                    for t in 0..len {
                        let (z, y) = d.forward_slice(current.step(t));
                        pre.step_mut(t).copy_from_slice(&z);
                        out.step_mut(t).copy_from_slice(&y);
                    }
                    tapes.push(LayerTape::DenseSeq {
                        input: current,
                        pre,
                    });
                    current = out;
                }
                Layer::Lstm(l) => {
                    let zeros = vec![T::zero(); l.hidden_dim()];
                    let (out, tape) = l.forward_unchecked(&current, &zeros, &zeros);
                    tapes.push(LayerTape::Lstm(tape));
                    current = out;
                }
            }
        }

        let mut v = current.last().expect("nonempty sequence").to_vec();
        for layer in &self.layers[split + 1..] {
            let Layer::Dense(d) = layer else {
                unreachable!("layers after the last LSTM are dense")
            };
            let (z, y) = d.forward_slice(&v);
            tapes.push(LayerTape::DenseVec { input: v, pre: z });
            v = y;
        }

        let probs = softmax_slice(&v);
        ForwardTape {
            layers: tapes,
            seq_len: seq.len(),
            logits: v,
            probs,
        }
    }

    /// Class probabilities for one sequence.
    pub fn probabilities(&self, seq: &Sequence<T>) -> Result<Vector<T>> {
        Ok(Vector::from_vec(self.forward(seq)?.probs))
    }

    /// Most probable class; exact ties go to the lowest index.
    pub fn predict(&self, seq: &Sequence<T>) -> Result<Prediction<T>> {
        let probs = self.forward(seq)?.probs;
        let class = argmax(&probs).expect("class_count >= 1");
        Ok(Prediction {
            class,
            probs: Vector::from_vec(probs),
        })
    }

    /// Gradients of the categorical cross-entropy `−ln p[target]` with
    /// respect to every parameter, by backpropagation through time.
    pub fn backward(&self, tape: &ForwardTape<T>, target: usize) -> Result<Gradients<T>> {
        if target >= self.class_count {
            return Err(Error::InvalidArgument(format!(
                "target class {target} out of range for {} classes",
                self.class_count
            )));
        }
        self.check_tape(tape)?;
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(tape, target, &mut grads);
        Ok(grads)
    }

    fn check_tape(&self, tape: &ForwardTape<T>) -> Result<()> {
        let mismatch = |msg: String| Err(Error::shape("backward", "network", msg));
        if tape.layers.len() != self.layers.len() || tape.probs.len() != self.class_count {
            return mismatch(format!("tape with {} layers", tape.layers.len()));
        }
        for (k, (layer, lt)) in self.layers.iter().zip(&tape.layers).enumerate() {
            let ok = match (layer, lt) {
                (Layer::Dense(d), LayerTape::DenseSeq { input, pre }) => {
                    input.dim() == d.input_dim()
                        && pre.dim() == d.output_dim()
                        && input.len() == tape.seq_len
                }
                (Layer::Dense(d), LayerTape::DenseVec { input, pre }) => {
                    input.len() == d.input_dim() && pre.len() == d.output_dim()
                }
                (Layer::Lstm(l), LayerTape::Lstm(t)) => {
                    t.len() == tape.seq_len
                        && t.steps.first().is_some_and(|s| {
                            s.x.len() == l.input_dim() && s.h.len() == l.hidden_dim()
                        })
                }
                _ => false,
            };
            if !ok {
                return mismatch(format!(
                    "tape layer {k} not produced by {}",
                    layer.describe()
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn backward_into(
        &self,
        tape: &ForwardTape<T>,
        target: usize,
        grads: &mut Gradients<T>,
    ) {
        // ∂L/∂logits for softmax + cross-entropy
        let mut d: Vec<T> = tape.probs.clone();
        d[target] = d[target] - T::one();

        let split = self.last_lstm().expect("validated network has an LSTM");
        for k in (split + 1..self.layers.len()).rev() {
            let (Layer::Dense(layer), LayerTape::DenseVec { input, pre }, Layer::Dense(g)) =
                (&self.layers[k], &tape.layers[k], &mut grads.layers[k])
            else {
                unreachable!("tape checked against network")
            };
            d = layer
                .backward_slice(input, pre, &d, g, true)
                .expect("input grad requested");
        }

        let width = self.layers[split].output_dim();
        let mut d_seq = Sequence::zeros(width, tape.seq_len);
        d_seq.step_mut(tape.seq_len - 1).copy_from_slice(&d);

        for k in (0..=split).rev() {
            let need = k > 0;
            let next = match (&self.layers[k], &tape.layers[k], &mut grads.layers[k]) {
                (Layer::Lstm(layer), LayerTape::Lstm(t), Layer::Lstm(g)) => {
                    layer.backward(t, &d_seq, g, need)
                }
                (Layer::Dense(layer), LayerTape::DenseSeq { input, pre }, Layer::Dense(g)) => {
                    let mut dx = need.then(|| Sequence::zeros(layer.input_dim(), tape.seq_len));
                    for t in 0..tape.seq_len {
                        let step = layer.backward_slice(
                            input.step(t),
                            pre.step(t),
                            d_seq.step(t),
                            g,
                            need,
                        );
                        if let (Some(dx), Some(step)) = (dx.as_mut(), step) {
                            dx.step_mut(t).copy_from_slice(&step);
                        }
                    }
                    dx
                }
                _ => unreachable!("tape checked against network"),
            };
            match next {
                Some(n) => d_seq = n,
                None => break,
            }
        }
    }
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Self {
            layers: net.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn slices(&self) -> Vec<&[T]> {
        self.layers.iter().flat_map(|l| l.slices()).collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.slices_mut())
            .collect()
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (a, &b) in dst.iter_mut().zip(src) {
                *a = *a + b;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v = *v * factor);
        }
    }

    pub fn global_norm(&self) -> T {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }

    /// Rescales so the global L2 norm does not exceed `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: T) -> T {
        let norm = self.global_norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::dense::Activation;
    use crate::tensor::Matrix;

    fn tiny(seed: u64) -> Network<f64> {
        let mut net = Network::new(
            vec![
                Layer::Dense(DenseParams::zeros(1, 3, Activation::Relu)),
                Layer::Lstm(LstmParams::zeros(3, 4)),
                Layer::Dense(DenseParams::zeros(4, 3, Activation::Relu)),
                Layer::Dense(DenseParams::zeros(3, 5, Activation::Linear)),
            ],
            5,
        )
        .unwrap();
        let mut rng = crate::Rng::new(seed);
        for s in net.slices_mut() {
            s.iter_mut().for_each(|v| *v = rng.uniform_range(-0.8, 0.8));
        }
        net
    }

    #[test]
    fn zero_network_is_uniform_and_predicts_class_zero() {
        let mut net = tiny(1);
        net.slices_mut().into_iter().for_each(|s| s.fill(0.0));
        let seq = Sequence::from_scalars([0.3, 0.9, 0.1]);
        let p = net.predict(&seq).unwrap();
        assert_eq!(p.probs.as_slice(), &[0.2; 5]);
        assert_eq!(p.class, 0);
    }

    #[test]
    fn chaining_errors_are_reported() {
        let bad = Network::<f64>::new(
            vec![
                Layer::Dense(DenseParams::zeros(1, 3, Activation::Relu)),
                Layer::Lstm(LstmParams::zeros(4, 4)),
                Layer::Dense(DenseParams::zeros(4, 5, Activation::Linear)),
            ],
            5,
        );
        assert!(matches!(bad, Err(Error::Shape { .. })));
        let no_lstm = Network::<f64>::new(
            vec![Layer::Dense(DenseParams::zeros(1, 5, Activation::Linear))],
            5,
        );
        assert!(no_lstm.is_err());
        let relu_head = Network::<f64>::new(
            vec![
                Layer::Lstm(LstmParams::zeros(1, 4)),
                Layer::Dense(DenseParams::zeros(4, 5, Activation::Relu)),
            ],
            5,
        );
        assert!(relu_head.is_err());
    }

    #[test]
    fn wrong_input_width_is_an_error() {
        let net = tiny(2);
        let seq = Sequence::from_flat(2, vec![0.0; 6]).unwrap();
        assert!(net.forward(&seq).is_err());
    }

    #[test]
    fn backward_rejects_foreign_tape_and_bad_target() {
        let a = tiny(3);
        let b = Network::new(
            vec![
                Layer::Lstm(LstmParams::zeros(1, 2)),
                Layer::Dense(DenseParams::zeros(2, 5, Activation::Linear)),
            ],
            5,
        )
        .unwrap();
        let seq = Sequence::from_scalars([0.5, 0.5]);
        let tape = b.forward(&seq).unwrap();
        assert!(a.backward(&tape, 0).is_err());
        assert!(b.backward(&tape, 5).is_err());
    }

    #[test]
    fn saturated_output_gate_has_zero_bias_gradient() {
        let mut net = tiny(4);
        if let Layer::Lstm(l) = &mut net.layers_mut()[1] {
            l.b_o.as_mut_slice().fill(1e3);
        }
        let tape = net
            .forward(&Sequence::from_scalars([0.2, 0.7, 0.4]))
            .unwrap();
        let g = net.backward(&tape, 2).unwrap();
        let Layer::Lstm(gl) = &g.layers()[1] else {
            panic!()
        };
        assert!(gl.b_o.as_slice().iter().all(|&v| v == 0.0));
        assert!(gl.b_i.as_slice().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn perfect_fit_gives_zero_head_gradient() {
        let mut net = tiny(5);
        let head = net.layers_mut().last_mut().unwrap();
        if let Layer::Dense(d) = head {
            d.w = Matrix::zeros(5, 3);
            d.b = Vector::from_vec(vec![0.0, 0.0, 0.0, 800.0, 0.0]);
        }
        let tape = net.forward(&Sequence::from_scalars([0.1, 0.2])).unwrap();
        assert_eq!(tape.probs, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        let g = net.backward(&tape, 3).unwrap();
        let Layer::Dense(head) = g.layers().last().unwrap() else {
            panic!()
        };
        assert!(head
            .w
            .as_slice()
            .iter()
            .chain(head.b.as_slice())
            .all(|&v| v == 0.0));
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let net = tiny(6);
        let tape = net.forward(&Sequence::from_scalars([0.9; 6])).unwrap();
        let mut g = net.backward(&tape, 1).unwrap();
        g.scale(1e3);
        let before = g.clip_global_norm(5.0);
        assert!(before > 5.0);
        assert!((g.global_norm() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn layout_names_the_head() {
        assert_eq!(
            tiny(7).layout(),
            vec!["ReLU(3)", "LSTM(4)", "ReLU(3)", "Softmax(5)"]
        );
        assert_eq!(tiny(7).param_names().len(), tiny(7).slices().len());
    }
}
