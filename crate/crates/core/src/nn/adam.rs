use super::mlp::{Gradients, Mlp};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self {
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            t: 0,
            config,
        }
    }

    /// One bias-corrected Adam step applied in place.
    pub fn step(&mut self, params: &mut Mlp, grads: &Gradients) -> Result<(), NnError> {
        if !grads.congruent(params) || !self.m.congruent(params) {
            return Err(NnError::Shape("Adam state, gradients and parameters differ in shape".into()));
        }
        self.t += 1;
        let AdamConfig {
            alpha,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - beta2.powi(self.t.min(i32::MAX as u64) as i32);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= alpha * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, (gw, gb)), (mw, mb)), (vw, vb)) in params
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.layers.iter_mut())
            .zip(self.v.layers.iter_mut())
        {
            for (((p, g), m), v) in layer
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(gw.as_slice())
                .zip(mw.as_mut_slice())
                .zip(vw.as_mut_slice())
            {
                update(p, *g, m, v);
            }
            for (((p, g), m), v) in layer.biases.iter_mut().zip(gb).zip(mb.iter_mut()).zip(vb.iter_mut()) {
                update(p, *g, m, v);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense, Matrix};
    use proptest::prelude::*;

    fn scalar_net(w: f64) -> Mlp {
        Mlp::from_layers(vec![Dense::new(Matrix::from_vec(1, 1, vec![w]).unwrap(), vec![0.0], Activation::Identity).unwrap()])
            .unwrap()
    }

    fn grads(gw: f64, gb: f64) -> Gradients {
        Gradients {
            layers: vec![(Matrix::from_vec(1, 1, vec![gw]).unwrap(), vec![gb])],
        }
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut net = scalar_net(0.7);
        let before = net.clone();
        let mut adam = AdamState::new(&net, AdamConfig::default());
        adam.step(&mut net, &grads(0.0, 0.0)).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn first_step_hand_value() {
        let mut net = scalar_net(0.0);
        let mut adam = AdamState::new(&net, AdamConfig::with_lr(0.001));
        adam.step(&mut net, &grads(1.0, 0.0)).unwrap();
        // m = 0.1, v = 0.001, m̂ = 1, v̂ = 1 → Δ = −0.001/(1 + 1e−8).
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((net.layers()[0].weights[(0, 0)] - expected).abs() < 1e-18);
    }

    #[test]
    fn counter_increments() {
        let mut net = scalar_net(0.0);
        let mut adam = AdamState::new(&net, AdamConfig::default());
        assert_eq!(adam.t, 0);
        adam.step(&mut net, &grads(0.3, 0.1)).unwrap();
        adam.step(&mut net, &grads(0.3, 0.1)).unwrap();
        assert_eq!(adam.t, 2);
    }

    #[test]
    fn shape_mismatch() {
        let mut net = scalar_net(0.0);
        let mut adam = AdamState::new(&net, AdamConfig::default());
        let bad = Gradients {
            layers: vec![(Matrix::zeros(2, 1), vec![0.0, 0.0])],
        };
        assert!(matches!(adam.step(&mut net, &bad), Err(NnError::Shape(_))));
    }

    proptest! {
        #[test]
        fn zero_betas_give_normalized_sgd(g in -5.0..5.0f64, w in -1.0..1.0f64, steps in 1usize..4) {
            let cfg = AdamConfig { alpha: 0.01, beta1: 0.0, beta2: 0.0, eps: 1e-8 };
            let mut net = scalar_net(w);
            let mut adam = AdamState::new(&net, cfg);
            for _ in 0..steps {
                let before = net.layers()[0].weights[(0, 0)];
                adam.step(&mut net, &grads(g, 0.0)).unwrap();
                let delta = net.layers()[0].weights[(0, 0)] - before;
                let expected = -0.01 * g / (g.abs() + 1e-8);
                prop_assert!((delta - expected).abs() <= 1e-15);
            }
        }
    }
}
