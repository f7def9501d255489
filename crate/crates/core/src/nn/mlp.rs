use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{gemm, Matrix};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = NnError;
    fn from_str(s: &str) -> Result<Self, NnError> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(NnError::InvalidArchitecture(format!("unknown activation `{other}`"))),
        }
    }
}

/// Fully connected layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self, NnError> {
        if biases.len() != weights.rows() {
            return Err(NnError::Shape(format!(
                "bias length {} does not match {} output units",
                biases.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Per-layer inputs and activation outputs from a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    outputs: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.outputs.last().expect("non-empty network")
    }
}

/// Weight and bias gradients, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Matrix, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.out_dim(), l.in_dim()), vec![0.0; l.out_dim()]))
                .collect(),
        }
    }

    pub fn congruent(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|((w, b), l)| w.same_shape(&l.weights) && b.len() == l.biases.len())
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.iter()).copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter_values().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    /// Xavier-uniform weights, zero biases.
    pub fn new(sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::InvalidArchitecture(format!(
                "need at least 2 layer sizes, got {}",
                sizes.len()
            )));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(NnError::InvalidArchitecture(format!(
                "{} activations for {} layers",
                activations.len(),
                sizes.len() - 1
            )));
        }
        if let Some(z) = sizes.iter().position(|&s| s == 0) {
            return Err(NnError::InvalidArchitecture(format!("layer size {z} is zero")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(io, &act)| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w: Vec<f64> = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Dense {
                    weights: Matrix::from_vec(fan_out, fan_in, w).expect("sized"),
                    biases: vec![0.0; fan_out],
                    activation: act,
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::InvalidArchitecture("no layers".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(NnError::InvalidArchitecture(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(l.biases.iter()).copied())
    }

    pub fn congruent(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weights.same_shape(&b.weights) && a.biases.len() == b.biases.len()
            })
    }

    fn layer_forward(layer: &Dense, x: &Matrix) -> Matrix {
        let (batch, n_in, n_out) = (x.rows(), layer.in_dim(), layer.out_dim());
        let mut z = Matrix::zeros(batch, n_out);
        for i in 0..batch {
            z.row_mut(i).copy_from_slice(&layer.biases);
        }
        // Z += X · Wᵀ
        gemm(
            batch,
            n_in,
            n_out,
            (x.as_slice(), n_in, 1),
            (layer.weights.as_slice(), 1, n_in),
            1.0,
            &mut z,
        );
        if layer.activation != Activation::Identity {
            let act = layer.activation;
            z.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        }
        z
    }

    fn check_input(&self, x: &Matrix) -> Result<(), NnError> {
        if x.cols() != self.input_dim() {
            return Err(NnError::Shape(format!(
                "input has {} features, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Batched forward pass (one sample per row) without a cache.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix, NnError> {
        self.check_input(x)?;
        let mut h = Self::layer_forward(&self.layers[0], x);
        for layer in &self.layers[1..] {
            h = Self::layer_forward(layer, &h);
        }
        Ok(h)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.predict(&Matrix::row_vector(x))?.into_vec())
    }

    /// Batched forward pass returning the output and the cache for
    /// [`Mlp::backward`].
    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardCache), NnError> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x.clone() } else { outputs[i - 1].clone() };
            let out = Self::layer_forward(layer, &input);
            inputs.push(input);
            outputs.push(out);
        }
        let y = outputs.last().expect("non-empty").clone();
        Ok((y, ForwardCache { inputs, outputs }))
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache), NnError> {
        let (y, cache) = self.forward(&Matrix::row_vector(x))?;
        Ok((y.into_vec(), cache))
    }

    /// Reverse-mode pass. Parameter gradients are summed over the batch rows.
    pub fn backward(&self, cache: &ForwardCache, dl_dy: &Matrix) -> Result<(Gradients, Matrix), NnError> {
        let (grads, dx) = self.backward_impl(cache, dl_dy, true)?;
        Ok((grads.expect("requested"), dx))
    }

    /// Gradient with respect to the network input only.
    pub fn input_gradient(&self, cache: &ForwardCache, dl_dy: &Matrix) -> Result<Matrix, NnError> {
        Ok(self.backward_impl(cache, dl_dy, false)?.1)
    }

    fn backward_impl(
        &self,
        cache: &ForwardCache,
        dl_dy: &Matrix,
        param_grads: bool,
    ) -> Result<(Option<Gradients>, Matrix), NnError> {
        if cache.outputs.len() != self.layers.len() {
            return Err(NnError::Shape("cache does not belong to this network".into()));
        }
        let expected = cache.output().shape();
        if dl_dy.shape() != expected {
            return Err(NnError::Shape(format!(
                "upstream gradient is {:?}, output is {:?}",
                dl_dy.shape(),
                expected
            )));
        }
        let mut grads = param_grads.then(|| Gradients::zeros_like(self));
        let mut delta = dl_dy.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.outputs[idx];
            let input = &cache.inputs[idx];
            if out.shape() != delta.shape() || input.cols() != layer.in_dim() {
                return Err(NnError::Shape("cache does not belong to this network".into()));
            }
            if layer.activation != Activation::Identity {
                let act = layer.activation;
                for (d, y) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    *d *= act.derivative_from_output(*y);
                }
            }
            let (batch, n_in, n_out) = (delta.rows(), layer.in_dim(), layer.out_dim());
            if let Some(g) = grads.as_mut() {
                let (dw, db) = &mut g.layers[idx];
                // dW = Δᵀ · X
                gemm(
                    n_out,
                    batch,
                    n_in,
                    (delta.as_slice(), 1, n_out),
                    (input.as_slice(), n_in, 1),
                    0.0,
                    dw,
                );
                for r in 0..batch {
                    for (b, d) in db.iter_mut().zip(delta.row(r)) {
                        *b += d;
                    }
                }
            }
            // dX = Δ · W
            let mut dx = Matrix::zeros(batch, n_in);
            gemm(
                batch,
                n_out,
                n_in,
                (delta.as_slice(), n_out, 1),
                (layer.weights.as_slice(), n_in, 1),
                0.0,
                &mut dx,
            );
            delta = dx;
        }
        Ok((grads, delta))
    }

    /// Polyak averaging: `self ← tau·online + (1 − tau)·self`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) -> Result<(), NnError> {
        soft_update(self, online, tau)
    }
}

/// `target ← tau·online + (1 − tau)·target`, elementwise.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<(), NnError> {
    if !target.congruent(online) {
        return Err(NnError::Shape("soft update between incongruent networks".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(NnError::Shape(format!("tau must lie in [0, 1], got {tau}")));
    }
    if tau == 1.0 {
        target.clone_from(online);
        return Ok(());
    }
    if tau == 0.0 {
        return Ok(());
    }
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        for (a, b) in t.weights.as_mut_slice().iter_mut().zip(o.weights.as_slice()) {
            *a = tau * b + (1.0 - tau) * *a;
        }
        for (a, b) in t.biases.iter_mut().zip(&o.biases) {
            *a = tau * b + (1.0 - tau) * *a;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(w: f64, b: f64, act: Activation) -> Mlp {
        Mlp::from_layers(vec![Dense::new(Matrix::from_vec(1, 1, vec![w]).unwrap(), vec![b], act).unwrap()])
            .unwrap()
    }

    #[test]
    fn init_shapes_and_determinism() {
        let acts = [Activation::Relu, Activation::Identity];
        let a = Mlp::new(&[4, 8, 2], &acts, 1).unwrap();
        let b = Mlp::new(&[4, 8, 2], &acts, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.layers()[0].weights.shape(), (8, 4));
        assert_eq!(a.layers()[1].weights.shape(), (2, 8));
        assert_eq!(a.layers()[0].biases, vec![0.0; 8]);
        assert_eq!(a.layers()[1].biases, vec![0.0; 2]);
        let limit = (6.0f64 / 12.0).sqrt();
        assert!(a.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= limit));
        assert_ne!(a, Mlp::new(&[4, 8, 2], &acts, 2).unwrap());
    }

    #[test]
    fn init_rejects_bad_architecture() {
        assert!(matches!(Mlp::new(&[], &[], 0), Err(NnError::InvalidArchitecture(_))));
        assert!(matches!(Mlp::new(&[3], &[], 0), Err(NnError::InvalidArchitecture(_))));
        assert!(Mlp::new(&[3, 2], &[Activation::Relu, Activation::Relu], 0).is_err());
    }

    #[test]
    fn forward_examples() {
        let id = Mlp::from_layers(vec![Dense::new(Matrix::identity(2), vec![0.0; 2], Activation::Identity).unwrap()])
            .unwrap();
        assert_eq!(id.predict_one(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        let relu = single(2.0, 1.0, Activation::Relu);
        assert_eq!(relu.predict_one(&[3.0]).unwrap(), vec![7.0]);
        assert_eq!(relu.predict_one(&[-3.0]).unwrap(), vec![0.0]);
        assert!(matches!(relu.predict_one(&[1.0, 2.0]), Err(NnError::Shape(_))));
    }

    #[test]
    fn backward_hand_chain_rule() {
        let net = single(1.5, 0.3, Activation::Identity);
        let (_, cache) = net.forward_one(&[2.0]).unwrap();
        let (g, dx) = net.backward(&cache, &Matrix::row_vector(&[1.0])).unwrap();
        assert_eq!(g.layers[0].0.as_slice(), &[2.0]);
        assert_eq!(g.layers[0].1, vec![1.0]);
        assert_eq!(dx.as_slice(), &[1.5]);
    }

    #[test]
    fn backward_zero_upstream() {
        let net = Mlp::new(&[3, 5, 2], &[Activation::Tanh, Activation::Identity], 4).unwrap();
        let (_, cache) = net.forward_one(&[0.1, -0.2, 0.3]).unwrap();
        let (g, dx) = net.backward(&cache, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(dx.as_slice().iter().all(|v| *v == 0.0));
        assert!(net.backward(&cache, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn soft_update_examples() {
        let acts = [Activation::Relu, Activation::Identity];
        let online = Mlp::new(&[3, 4, 2], &acts, 1).unwrap();
        let target = Mlp::new(&[3, 4, 2], &acts, 2).unwrap();
        let mut t = target.clone();
        soft_update(&mut t, &online, 1.0).unwrap();
        assert_eq!(t, online);
        let mut t = target.clone();
        soft_update(&mut t, &online, 0.0).unwrap();
        assert_eq!(t, target);

        let mut zero = single(0.0, 0.0, Activation::Identity);
        soft_update(&mut zero, &single(2.0, 2.0, Activation::Identity), 0.5).unwrap();
        assert_eq!(zero.layers()[0].weights.as_slice(), &[1.0]);
        assert_eq!(zero.layers()[0].biases, vec![1.0]);

        let other = Mlp::new(&[3, 5, 2], &acts, 1).unwrap();
        assert!(soft_update(&mut t, &other, 0.5).is_err());
    }

    #[test]
    fn batched_forward_matches_rowwise() {
        let net = Mlp::new(&[3, 6, 2], &[Activation::Relu, Activation::Tanh], 9).unwrap();
        let rows = vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0], vec![0.0, 0.0, 0.0]];
        let batch = net.predict(&Matrix::from_rows(&rows).unwrap()).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let one = net.predict_one(r).unwrap();
            for (a, b) in one.iter().zip(batch.row(i)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn forward_is_pure(seed in 0u64..1000, x in proptest::collection::vec(-3.0..3.0f64, 4)) {
            let net = Mlp::new(&[4, 7, 3], &[Activation::Relu, Activation::Tanh], seed).unwrap();
            let a = net.predict_one(&x).unwrap();
            let b = net.predict_one(&x).unwrap();
            prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }

        #[test]
        fn soft_update_pointwise(s1 in 0u64..100, s2 in 100u64..200, tau in 0.0..=1.0f64) {
            let acts = [Activation::Tanh, Activation::Identity];
            let online = Mlp::new(&[2, 3, 2], &acts, s1).unwrap();
            let target = Mlp::new(&[2, 3, 2], &acts, s2).unwrap();
            let mut t = target.clone();
            soft_update(&mut t, &online, tau).unwrap();
            for ((n, o), old) in t.params().zip(online.params()).zip(target.params()) {
                prop_assert!((n - (tau * o + (1.0 - tau) * old)).abs() <= 1e-15);
            }
        }
    }
}
