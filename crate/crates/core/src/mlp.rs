//! Minimal dense feed-forward network with hand-written backpropagation.
//!
//! Two heads are supported: a softmax head trained with sample-weighted
//! categorical cross-entropy (the policy network) and a linear head trained
//! with mean squared error (the Q network). Losses are averaged over the
//! batch. Each parameter tensor owns an Adam state, so [`Mlp::train_on_batch`]
//! is a complete optimization step.
//!
//! # Checkpoint format
//!
//! [`Mlp::to_checkpoint`] writes UTF-8 text:
//!
//! ```text
//! lqrl-mlp 1
//! loss <weighted-cross-entropy|mean-squared-error>
//! layers <L>
//! dense <in> <out> <relu|softmax|linear>     (L lines)
//! <parameter>                                (one per line)
//! ```
//!
//! Parameters are listed layer by layer, the `out × in` weight matrix in
//! row-major order followed by the `out` biases, each in Rust's shortest
//! round-trip float format. Optimizer moments are not saved.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::{AdamState, Matrix, RngStream, Vector};

/// Lower clamp applied to probabilities inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Adam step size used for networks unless overridden.
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
    Linear,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
            Activation::Linear => "linear",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "softmax" => Ok(Activation::Softmax),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    WeightedCrossEntropy,
    MeanSquaredError,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::WeightedCrossEntropy => "weighted-cross-entropy",
            LossKind::MeanSquaredError => "mean-squared-error",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "weighted-cross-entropy" => Ok(LossKind::WeightedCrossEntropy),
            "mean-squared-error" => Ok(LossKind::MeanSquaredError),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weights: Matrix,
    pub bias: Vector,
    pub activation: Activation,
}

impl Dense {
    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.nrows()
    }
}

/// Gradient of the loss for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vector,
}

#[derive(Debug, Clone)]
struct LayerOptimizer {
    weights: AdamState,
    bias: AdamState,
}

#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<Dense>,
    loss: LossKind,
    optimizers: Vec<LayerOptimizer>,
}

fn softmax_rows(z: &mut Matrix) {
    for mut row in z.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

fn adam_for(rows: usize, cols: usize, lr: f64) -> AdamState {
    AdamState::with_hyperparameters(rows, cols, lr, 0.9, 0.999, 1e-8)
        .expect("network Adam hyperparameters are valid")
}

impl Mlp {
    /// Builds a network with He-normal weights (`std = √(2/fan_in)`) and zero
    /// biases.
    ///
    /// `layer_sizes` lists the input width followed by each layer's width, so
    /// `activations.len() == layer_sizes.len() - 1`.
    pub fn new(
        layer_sizes: &[usize],
        activations: &[Activation],
        loss: LossKind,
        seed: u64,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(
                "a network needs at least two layer sizes".into(),
            ));
        }
        if activations.len() != layer_sizes.len() - 1 {
            return Err(Error::Config(format!(
                "{} layers need {} activations, got {}",
                layer_sizes.len() - 1,
                layer_sizes.len() - 1,
                activations.len()
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if activations[..activations.len() - 1].contains(&Activation::Softmax) {
            return Err(Error::Config(
                "softmax is only allowed on the final layer".into(),
            ));
        }
        let mut rng = RngStream::new(seed);
        let layers = layer_sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let std = (2.0 / fan_in as f64).sqrt();
                let weights = Matrix::from_fn(fan_out, fan_in, |_, _| std * rng.standard_normal());
                Dense {
                    weights,
                    bias: Vector::zeros(fan_out),
                    activation,
                }
            })
            .collect();
        Self::from_layers(layers, loss)
    }

    /// Wraps explicit layers, validating that their widths chain.
    pub fn from_layers(layers: Vec<Dense>, loss: LossKind) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::Config(format!(
                    "layer {i} outputs {} values but layer {} takes {}",
                    pair[0].fan_out(),
                    i + 1,
                    pair[1].fan_in()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.fan_out() {
                return Err(Error::Config(format!(
                    "layer {i} bias has the wrong length"
                )));
            }
            if l.activation == Activation::Softmax && i + 1 != layers.len() {
                return Err(Error::Config(
                    "softmax is only allowed on the final layer".into(),
                ));
            }
        }
        let optimizers = layers
            .iter()
            .map(|l| LayerOptimizer {
                weights: adam_for(l.fan_out(), l.fan_in(), DEFAULT_LEARNING_RATE),
                bias: adam_for(l.fan_out(), 1, DEFAULT_LEARNING_RATE),
            })
            .collect();
        Ok(Self {
            layers,
            loss,
            optimizers,
        })
    }

    /// Resets every optimizer with a new Adam step size.
    pub fn with_learning_rate(mut self, lr: f64) -> Result<Self> {
        if !(lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        self.optimizers = self
            .layers
            .iter()
            .map(|l| LayerOptimizer {
                weights: adam_for(l.fan_out(), l.fan_in(), lr),
                bias: adam_for(l.fan_out(), 1, lr),
            })
            .collect();
        Ok(self)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            for row in l.weights.row_iter() {
                out.extend(row.iter());
            }
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::dim(format!(
                "network has {} parameters, got {}",
                self.parameter_count(),
                params.len()
            )));
        }
        let mut k = 0;
        for l in &mut self.layers {
            let (rows, cols) = l.weights.shape();
            for r in 0..rows {
                for c in 0..cols {
                    l.weights[(r, c)] = params[k];
                    k += 1;
                }
            }
            for b in l.bias.iter_mut() {
                *b = params[k];
                k += 1;
            }
        }
        Ok(())
    }

    /// Layer outputs for a batch (one sample per row): element 0 is the input,
    /// element `i + 1` the activation of layer `i`.
    fn trace(&self, inputs: &Matrix) -> Result<Vec<Matrix>> {
        if inputs.ncols() != self.input_width() {
            return Err(Error::dim(format!(
                "network expects inputs of width {}, got {}",
                self.input_width(),
                inputs.ncols()
            )));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(inputs.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let prev = &acts[i];
            let mut z = prev * layer.weights.transpose();
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            match layer.activation {
                Activation::Relu => z.apply(|v| *v = v.max(0.0)),
                Activation::Softmax => softmax_rows(&mut z),
                Activation::Linear => {}
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric { layer: i });
            }
            acts.push(z);
        }
        Ok(acts)
    }

    /// Evaluates the network on a batch with one sample per row.
    pub fn forward(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(self.trace(inputs)?.pop().expect("at least one layer"))
    }

    /// Evaluates a single input vector.
    pub fn forward_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward(&Matrix::from_row_slice(1, input.len(), input))?;
        Ok(out.iter().copied().collect())
    }

    fn check_batch(
        &self,
        inputs: &Matrix,
        targets: &Matrix,
        weights: Option<&[f64]>,
    ) -> Result<()> {
        let batch = inputs.nrows();
        if batch == 0 {
            return Err(Error::dim("empty training batch"));
        }
        if targets.shape() != (batch, self.output_width()) {
            return Err(Error::dim(format!(
                "targets are {:?}, expected ({batch}, {})",
                targets.shape(),
                self.output_width()
            )));
        }
        if let Some(w) = weights {
            if w.len() != batch {
                return Err(Error::dim(format!(
                    "{} sample weights for a batch of {batch}",
                    w.len()
                )));
            }
        }
        Ok(())
    }

    fn loss_from_output(&self, output: &Matrix, targets: &Matrix, weights: Option<&[f64]>) -> f64 {
        let batch = output.nrows();
        let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
        let per_sample = |i: usize| -> f64 {
            match self.loss {
                LossKind::WeightedCrossEntropy => -output
                    .row(i)
                    .iter()
                    .zip(targets.row(i).iter())
                    .map(|(p, y)| {
                        if *y == 0.0 {
                            0.0
                        } else {
                            y * p.max(LOG_FLOOR).ln()
                        }
                    })
                    .sum::<f64>(),
                LossKind::MeanSquaredError => {
                    let diff = output.row(i) - targets.row(i);
                    diff.norm_squared() / output.ncols() as f64
                }
            }
        };
        (0..batch).map(|i| weight(i) * per_sample(i)).sum::<f64>() / batch as f64
    }

    /// Mean loss over the batch, without updating anything.
    pub fn loss(&self, inputs: &Matrix, targets: &Matrix, weights: Option<&[f64]>) -> Result<f64> {
        self.check_batch(inputs, targets, weights)?;
        let out = self.forward(inputs)?;
        Ok(self.loss_from_output(&out, targets, weights))
    }

    /// Loss and exact gradients with respect to every layer's parameters.
    pub fn gradients(
        &self,
        inputs: &Matrix,
        targets: &Matrix,
        weights: Option<&[f64]>,
    ) -> Result<(f64, Vec<LayerGradient>)> {
        self.check_batch(inputs, targets, weights)?;
        let acts = self.trace(inputs)?;
        let output = acts.last().expect("at least one layer");
        let loss = self.loss_from_output(output, targets, weights);
        if !loss.is_finite() {
            return Err(Error::Numeric {
                layer: self.layers.len() - 1,
            });
        }
        let batch = inputs.nrows() as f64;
        let width = output.ncols() as f64;
        let weight = |i: usize| weights.map_or(1.0, |w| w[i]);

        // dL/d(output)
        let mut grad = Matrix::zeros(output.nrows(), output.ncols());
        for i in 0..output.nrows() {
            let scale = weight(i) / batch;
            for c in 0..output.ncols() {
                let (p, y) = (output[(i, c)], targets[(i, c)]);
                grad[(i, c)] = match self.loss {
                    LossKind::WeightedCrossEntropy => {
                        if y == 0.0 || p <= LOG_FLOOR {
                            0.0
                        } else {
                            -scale * y / p
                        }
                    }
                    LossKind::MeanSquaredError => scale * 2.0 * (p - y) / width,
                };
            }
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let out = &acts[li + 1];
            // through the activation
            match layer.activation {
                Activation::Linear => {}
                Activation::Relu => grad.zip_apply(out, |g, a| {
                    if a <= 0.0 {
                        *g = 0.0
                    }
                }),
                Activation::Softmax => {
                    for i in 0..grad.nrows() {
                        let dot: f64 = grad.row(i).dot(&out.row(i));
                        for c in 0..grad.ncols() {
                            grad[(i, c)] = out[(i, c)] * (grad[(i, c)] - dot);
                        }
                    }
                }
            }
            let prev = &acts[li];
            let dw = grad.transpose() * prev;
            let db = Vector::from_iterator(grad.ncols(), grad.column_iter().map(|c| c.sum()));
            if li > 0 {
                grad = &grad * &layer.weights;
            }
            grads.push(LayerGradient {
                weights: dw,
                bias: db,
            });
        }
        grads.reverse();
        Ok((loss, grads))
    }

    /// One optimization step on a batch. Returns the loss before the update.
    pub fn train_on_batch(
        &mut self,
        inputs: &Matrix,
        targets: &Matrix,
        weights: Option<&[f64]>,
    ) -> Result<f64> {
        let (loss, grads) = self.gradients(inputs, targets, weights)?;
        for ((layer, opt), g) in self.layers.iter_mut().zip(&mut self.optimizers).zip(grads) {
            layer.weights -= opt.weights.step(&g.weights)?;
            let db = Matrix::from_column_slice(g.bias.len(), 1, g.bias.as_slice());
            let inc = opt.bias.step(&db)?;
            layer.bias -= inc.column(0);
        }
        Ok(loss)
    }

    pub fn to_checkpoint(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lqrl-mlp 1");
        let _ = writeln!(s, "loss {}", self.loss.name());
        let _ = writeln!(s, "layers {}", self.layers.len());
        for l in &self.layers {
            let _ = writeln!(
                s,
                "dense {} {} {}",
                l.fan_in(),
                l.fan_out(),
                l.activation.name()
            );
        }
        for p in self.parameters() {
            let _ = writeln!(s, "{p:?}");
        }
        s
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("malformed network checkpoint: {msg}"));
        let mut lines = text.lines();
        if lines.next() != Some("lqrl-mlp 1") {
            return Err(bad("missing `lqrl-mlp 1` header"));
        }
        let loss = lines
            .next()
            .and_then(|l| l.strip_prefix("loss "))
            .ok_or_else(|| bad("missing loss line"))
            .and_then(LossKind::parse)?;
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("layers "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad("missing layer count"))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next().ok_or_else(|| bad("truncated layer list"))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "dense" {
                return Err(bad(line));
            }
            let fan_in: usize = parts[1].parse().map_err(|_| bad(line))?;
            let fan_out: usize = parts[2].parse().map_err(|_| bad(line))?;
            layers.push(Dense {
                weights: Matrix::zeros(fan_out, fan_in),
                bias: Vector::zeros(fan_out),
                activation: Activation::parse(parts[3])?,
            });
        }
        let params = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|_| bad(l)))
            .collect::<Result<Vec<_>>>()?;
        let mut net = Self::from_layers(layers, loss)?;
        net.set_parameters(&params)?;
        Ok(net)
    }
}

/// One-hot encoding of `index` among `n` classes.
pub fn to_categorical(index: usize, n: usize) -> Result<Vec<f64>> {
    if index >= n {
        return Err(Error::domain(format!(
            "class {index} out of range for {n} classes"
        )));
    }
    let mut v = vec![0.0; n];
    v[index] = 1.0;
    Ok(v)
}

/// Stacks equally long rows into a batch matrix.
pub fn batch_from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Matrix> {
    let width = rows.first().map_or(0, |r| r.as_ref().len());
    if rows.iter().any(|r| r.as_ref().len() != width) {
        return Err(Error::dim("batch rows have different widths"));
    }
    Ok(Matrix::from_fn(rows.len(), width, |i, j| {
        rows[i].as_ref()[j]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_difference_gradient;

    fn policy_net(seed: u64) -> Mlp {
        Mlp::new(
            &[4, 30, 30, 2],
            &[Activation::Relu, Activation::Relu, Activation::Softmax],
            LossKind::WeightedCrossEntropy,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn softmax_head_outputs_distribution() {
        let net = policy_net(1);
        let mut rng = RngStream::new(2);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| 3.0 * rng.standard_normal()).collect();
            let p = net.forward_one(&x).unwrap();
            assert_eq!(p.len(), 2);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_is_stable_for_huge_logits() {
        let layer = Dense {
            weights: Matrix::from_row_slice(2, 1, &[1000.0, -1000.0]),
            bias: Vector::zeros(2),
            activation: Activation::Softmax,
        };
        let net = Mlp::from_layers(vec![layer], LossKind::WeightedCrossEntropy).unwrap();
        let p = net.forward_one(&[5.0]).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn he_normal_weight_spread() {
        let net = Mlp::new(
            &[30, 400],
            &[Activation::Linear],
            LossKind::MeanSquaredError,
            4,
        )
        .unwrap();
        let w = &net.layers()[0].weights;
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let expected = (2.0f64 / 30.0).sqrt();
        assert!((std - expected).abs() < 0.1 * expected, "std {std}");
        assert!(net.layers()[0].bias.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn same_seed_same_parameters() {
        assert_eq!(policy_net(9).parameters(), policy_net(9).parameters());
        assert_ne!(policy_net(9).parameters(), policy_net(10).parameters());
    }

    #[test]
    fn configuration_errors() {
        let e = Mlp::new(
            &[2, 3, 2],
            &[Activation::Softmax, Activation::Linear],
            LossKind::MeanSquaredError,
            0,
        );
        assert!(matches!(e, Err(Error::Config(_))));
        assert!(Mlp::new(&[2], &[], LossKind::MeanSquaredError, 0).is_err());
        assert!(Mlp::new(&[2, 3], &[], LossKind::MeanSquaredError, 0).is_err());
    }

    #[test]
    fn zero_weights_give_uniform_softmax() {
        let mut net = Mlp::new(
            &[4, 5, 3],
            &[Activation::Relu, Activation::Softmax],
            LossKind::WeightedCrossEntropy,
            0,
        )
        .unwrap();
        let zeros = vec![0.0; net.parameter_count()];
        net.set_parameters(&zeros).unwrap();
        let p = net.forward_one(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_head_with_zero_hidden_returns_bias() {
        let mut net = Mlp::new(
            &[3, 4, 2],
            &[Activation::Relu, Activation::Linear],
            LossKind::MeanSquaredError,
            0,
        )
        .unwrap();
        for l in net.layers_mut() {
            l.weights.fill(0.0);
        }
        net.layers_mut()[1].bias = Vector::from_vec(vec![0.25, -1.5]);
        assert_eq!(net.forward_one(&[7.0, 8.0, 9.0]).unwrap(), vec![0.25, -1.5]);
    }

    #[test]
    fn relu_layer_by_hand() {
        let layer = Dense {
            weights: Matrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 0.5]),
            bias: Vector::from_vec(vec![0.5, -1.0]),
            activation: Activation::Relu,
        };
        let net = Mlp::from_layers(vec![layer], LossKind::MeanSquaredError).unwrap();
        // x = [1, 1]: z = [1 − 2 + 0.5, 0.5 + 0.5 − 1] = [−0.5, 0] → relu [0, 0]
        assert_eq!(net.forward_one(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        // x = [3, −1]: z = [3 + 2 + 0.5, 1.5 − 0.5 − 1] = [5.5, 0]
        assert_eq!(net.forward_one(&[3.0, -1.0]).unwrap(), vec![5.5, 0.0]);
        assert!(matches!(net.forward_one(&[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn one_hot() {
        assert_eq!(to_categorical(1, 3).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(to_categorical(0, 1).unwrap(), vec![1.0]);
        assert!(to_categorical(3, 3).is_err());
        for i in 0..5 {
            assert_eq!(to_categorical(i, 5).unwrap().iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn uniform_two_class_cross_entropy_is_ln2() {
        let mut net = Mlp::new(
            &[2, 2],
            &[Activation::Softmax],
            LossKind::WeightedCrossEntropy,
            0,
        )
        .unwrap();
        net.set_parameters(&[0.0; 6]).unwrap();
        let x = Matrix::from_row_slice(1, 2, &[0.3, 0.7]);
        let y = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let loss = net.train_on_batch(&x, &y, Some(&[1.0])).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_matches_direct_evaluation() {
        let net = policy_net(3);
        let x = Matrix::from_fn(5, 4, |i, j| (i as f64 - 2.0) * 0.3 + j as f64 * 0.1);
        let labels = [0usize, 1, 1, 0, 1];
        let w = [0.5, -1.0, 2.0, 0.0, 1.5];
        let y = batch_from_rows(
            &labels
                .iter()
                .map(|&l| to_categorical(l, 2).unwrap())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let p = net.forward(&x).unwrap();
        let direct: f64 = -(0..5).map(|i| w[i] * p[(i, labels[i])].ln()).sum::<f64>() / 5.0;
        assert!((net.loss(&x, &y, Some(&w)).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn mse_at_target_is_zero_and_stationary() {
        let mut net = Mlp::new(
            &[3, 4, 2],
            &[Activation::Relu, Activation::Linear],
            LossKind::MeanSquaredError,
            5,
        )
        .unwrap();
        let x = Matrix::from_fn(4, 3, |i, j| (i + j) as f64 * 0.2 - 0.3);
        let y = net.forward(&x).unwrap();
        let before = net.parameters();
        let loss = net.train_on_batch(&x, &y, None).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net.parameters(), before);
    }

    fn fd_check(net: &Mlp, x: &Matrix, y: &Matrix, w: Option<&[f64]>) -> f64 {
        let (_, grads) = net.gradients(x, y, w).unwrap();
        let mut analytic = Vec::new();
        for g in &grads {
            for row in g.weights.row_iter() {
                analytic.extend(row.iter());
            }
            analytic.extend(g.bias.iter());
        }
        let mut probe = net.clone();
        let numeric = finite_difference_gradient(
            |p| {
                probe.set_parameters(p).unwrap();
                probe.loss(x, y, w).unwrap()
            },
            &net.parameters(),
            1e-5,
        );
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b): (&f64, &f64)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        diff / scale
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = RngStream::new(21);
        let x = Matrix::from_fn(5, 3, |_, _| rng.standard_normal());
        let w: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();

        let ce = Mlp::new(
            &[3, 6, 4],
            &[Activation::Relu, Activation::Softmax],
            LossKind::WeightedCrossEntropy,
            8,
        )
        .unwrap();
        let y = batch_from_rows(
            &(0..5)
                .map(|i| to_categorical(i % 4, 4).unwrap())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(fd_check(&ce, &x, &y, Some(&w)) < 1e-4);

        let mse = Mlp::new(
            &[3, 5, 5, 2],
            &[Activation::Relu, Activation::Relu, Activation::Linear],
            LossKind::MeanSquaredError,
            9,
        )
        .unwrap();
        let y = Matrix::from_fn(5, 2, |_, _| rng.standard_normal());
        assert!(fd_check(&mse, &x, &y, Some(&w)) < 1e-4);
        assert!(fd_check(&mse, &x, &y, None) < 1e-4);
    }

    #[test]
    fn separable_batch_is_learned() {
        let mut net = Mlp::new(
            &[2, 8, 2],
            &[Activation::Relu, Activation::Softmax],
            LossKind::WeightedCrossEntropy,
            13,
        )
        .unwrap()
        .with_learning_rate(0.01)
        .unwrap();
        let x = Matrix::from_row_slice(
            6,
            2,
            &[
                1.0, 1.0, 2.0, 1.5, 1.5, 2.0, -1.0, -1.0, -2.0, -1.5, -1.5, -2.0,
            ],
        );
        let y =
            batch_from_rows(&[0, 0, 0, 1, 1, 1].map(|c| to_categorical(c, 2).unwrap())).unwrap();
        for _ in 0..500 {
            net.train_on_batch(&x, &y, None).unwrap();
        }
        assert!(net.loss(&x, &y, None).unwrap() < 0.1);
    }

    #[test]
    fn nan_is_reported_with_layer() {
        let mut net = Mlp::new(
            &[2, 3, 2],
            &[Activation::Relu, Activation::Linear],
            LossKind::MeanSquaredError,
            0,
        )
        .unwrap();
        net.layers_mut()[1].weights[(0, 0)] = f64::NAN;
        let x = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let err = net
            .train_on_batch(&x, &Matrix::zeros(1, 2), None)
            .unwrap_err();
        assert!(matches!(err, Error::Numeric { layer: 1 }));
    }

    #[test]
    fn batch_shape_errors() {
        let mut net = policy_net(0);
        let x = Matrix::zeros(3, 4);
        assert!(net.train_on_batch(&x, &Matrix::zeros(2, 2), None).is_err());
        assert!(net
            .train_on_batch(&x, &Matrix::zeros(3, 2), Some(&[1.0]))
            .is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = policy_net(77);
        let text = net.to_checkpoint();
        let back = Mlp::from_checkpoint(&text).unwrap();
        assert_eq!(back.parameters(), net.parameters());
        assert_eq!(back.layers(), net.layers());
        assert_eq!(back.loss_kind(), net.loss_kind());
        assert!(Mlp::from_checkpoint("garbage").is_err());
        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(Mlp::from_checkpoint(&truncated).is_err());
    }
}
