use super::{Param, Scalar};

/// Hyperparameters shared by every tracked tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self { m: vec![T::zero(); len], v: vec![T::zero(); len], t: 0, config }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(params: &mut [T], grads: &[T], state: &mut AdamState<T>) {
    assert_eq!(params.len(), grads.len(), "adam: parameter/gradient length");
    assert_eq!(params.len(), state.m.len(), "adam: state length");
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let inv_c1 = T::of(1.0 / (1.0 - beta1.powi(state.t as i32)));
    let inv_c2 = T::of(1.0 / (1.0 - beta2.powi(state.t as i32)));
    let (b1, b2) = (T::of(beta1), T::of(beta2));
    let (rest1, rest2) = (T::of(1.0 - beta1), T::of(1.0 - beta2));
    let (lr, eps) = (T::of(lr), T::of(eps));
    let n = params.len();
    let (params, grads, m, v) = (&mut params[..n], &grads[..n], &mut state.m[..n], &mut state.v[..n]);
    for i in 0..n {
        let g = grads[i];
        let mn = b1 * m[i] + rest1 * g;
        let vn = b2 * v[i] + rest2 * g * g;
        m[i] = mn;
        v[i] = vn;
        params[i] -= lr * (mn * inv_c1) / ((vn * inv_c2).sqrt() + eps);
    }
}

/// Adam over an ordered list of parameters; the order must stay fixed between steps.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub config: AdamConfig,
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, states: Vec::new() }
    }

    pub fn step(&mut self, params: Vec<&mut Param<T>>) {
        if self.states.is_empty() {
            self.states = params.iter().map(|p| AdamState::new(p.value.len(), self.config)).collect();
        }
        assert_eq!(self.states.len(), params.len(), "adam: parameter list changed");
        for (p, state) in params.into_iter().zip(&mut self.states) {
            let Param { value, grad } = p;
            adam_step(value.data_mut(), grad.data(), state);
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.states.first().map_or(0, |s| s.t)
    }
}
