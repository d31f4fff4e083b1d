use crate::error::{Error, Result};

use super::{Mode, Param, Scalar, Tensor};

/// Batch normalisation over axis 1 (`(N, F)` features or `(N, C, ...)` channels).
///
/// Running statistics follow `running = momentum * running + (1 - momentum) * batch`.
/// The first training batch seeds them directly instead of blending with the
/// `(0, 1)` initial values.
#[derive(Clone, Debug)]
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: f64,
    pub momentum: f64,
    pub tracked: bool,
    cache: Option<NormCache<T>>,
}

#[derive(Clone, Debug)]
struct NormCache<T> {
    shape: Vec<usize>,
    xhat: Vec<T>,
    inv_std: Vec<f64>,
    mode: Mode,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(features: usize, eps: f64, momentum: f64) -> Self {
        Self {
            gamma: Param::new(Tensor::filled(&[features], T::one())),
            beta: Param::new(Tensor::zeros(&[features])),
            running_mean: vec![T::zero(); features],
            running_var: vec![T::one(); features],
            eps,
            momentum,
            tracked: false,
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.running_mean.len()
    }

    fn layout(&self, s: &[usize]) -> Result<(usize, usize, usize)> {
        if s.len() < 2 || s[1] != self.features() {
            return Err(Error::Shape(format!(
                "batchnorm over {} features cannot take input {s:?}",
                self.features()
            )));
        }
        Ok((s[0], s[1], s[2..].iter().product()))
    }

    pub fn forward(&mut self, mut x: Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let (n, c, sp) = self.layout(x.shape())?;
        if mode == Mode::Train && n < 2 {
            return Err(Error::Shape("batchnorm in train mode needs a batch of at least 2".into()));
        }
        let m = (n * sp) as f64;
        let mut inv_std = vec![0.0; c];
        let mut xhat = vec![T::zero(); x.len()];
        for (ch, inv) in inv_std.iter_mut().enumerate() {
            let (mean, var) = match mode {
                Mode::Train => {
                    let mut sum = 0.0;
                    for i in 0..n {
                        sum += lane_sum(&x.data()[(i * c + ch) * sp..][..sp], |v| v.as_f64());
                    }
                    let mean = sum / m;
                    let mut ss = 0.0;
                    for i in 0..n {
                        ss += lane_sum(&x.data()[(i * c + ch) * sp..][..sp], |v| (v.as_f64() - mean).powi(2));
                    }
                    let var = ss / m;
                    let unbiased = (ss / (m - 1.0)).max(f64::MIN_POSITIVE);
                    if self.tracked {
                        let rm = self.running_mean[ch].as_f64();
                        let rv = self.running_var[ch].as_f64();
                        self.running_mean[ch] = T::of(self.momentum * rm + (1.0 - self.momentum) * mean);
                        self.running_var[ch] = T::of(self.momentum * rv + (1.0 - self.momentum) * unbiased);
                    } else {
                        self.running_mean[ch] = T::of(mean);
                        self.running_var[ch] = T::of(unbiased);
                    }
                    (mean, var)
                }
                Mode::Infer => (self.running_mean[ch].as_f64(), self.running_var[ch].as_f64()),
            };
            let is = 1.0 / (var + self.eps).sqrt();
            *inv = is;
            let g = self.gamma.value.data()[ch].as_f64();
            let b = self.beta.value.data()[ch].as_f64();
            for i in 0..n {
                let off = (i * c + ch) * sp;
                for (v, xh) in x.data_mut()[off..off + sp].iter_mut().zip(&mut xhat[off..off + sp]) {
                    let h = (v.as_f64() - mean) * is;
                    *xh = T::of(h);
                    *v = T::of(g * h + b);
                }
            }
        }
        if mode == Mode::Train {
            self.tracked = true;
        }
        self.cache = Some(NormCache { shape: x.shape().to_vec(), xhat, inv_std, mode });
        Ok(x)
    }

    /// Normalises with running statistics without caching anything.
    pub fn infer(&self, mut x: Tensor<T>) -> Result<Tensor<T>> {
        let (n, c, sp) = self.layout(x.shape())?;
        for ch in 0..c {
            let mean = self.running_mean[ch].as_f64();
            let is = 1.0 / (self.running_var[ch].as_f64() + self.eps).sqrt();
            let g = self.gamma.value.data()[ch].as_f64();
            let b = self.beta.value.data()[ch].as_f64();
            for i in 0..n {
                let off = (i * c + ch) * sp;
                for v in &mut x.data_mut()[off..off + sp] {
                    let h = (v.as_f64() - mean) * is;
                    *v = T::of(g * h + b);
                }
            }
        }
        Ok(x)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let cache = self.cache.as_ref().ok_or_else(|| Error::Shape("batchnorm backward before forward".into()))?;
        if grad_out.shape() != cache.shape.as_slice() {
            return Err(Error::Shape(format!(
                "batchnorm grad {:?} does not match output {:?}",
                grad_out.shape(),
                cache.shape
            )));
        }
        let (n, c, sp) = self.layout(&cache.shape)?;
        let m = (n * sp) as f64;
        let mut grad_in = need_input_grad.then(|| Tensor::zeros(&cache.shape));
        for ch in 0..c {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for i in 0..n {
                let off = (i * c + ch) * sp;
                let dys = &grad_out.data()[off..off + sp];
                let xhs = &cache.xhat[off..off + sp];
                sum_dy += lane_sum(dys, |v| v.as_f64());
                sum_dy_xhat += lane_sum_pair(dys, xhs, |a, b| a.as_f64() * b.as_f64());
            }
            self.gamma.grad.data_mut()[ch] += T::of(sum_dy_xhat);
            self.beta.grad.data_mut()[ch] += T::of(sum_dy);
            let Some(gi) = &mut grad_in else { continue };
            let g = self.gamma.value.data()[ch].as_f64();
            let is = cache.inv_std[ch];
            for i in 0..n {
                let off = (i * c + ch) * sp;
                let dst = &mut gi.data_mut()[off..off + sp];
                let dys = &grad_out.data()[off..off + sp];
                let xhs = &cache.xhat[off..off + sp];
                for ((d, dy), xh) in dst.iter_mut().zip(dys).zip(xhs) {
                    let v = match cache.mode {
                        Mode::Train => {
                            g * is / m * (m * dy.as_f64() - sum_dy - xh.as_f64() * sum_dy_xhat)
                        }
                        Mode::Infer => g * is * dy.as_f64(),
                    };
                    *d = T::of(v);
                }
            }
        }
        Ok(grad_in)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.gamma, &mut self.beta]
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta]
    }
}

/// Sum of `f` over `xs` with eight interleaved accumulators, so the
/// reduction vectorises while its order stays fixed.
fn lane_sum<T: Copy>(xs: &[T], f: impl Fn(T) -> f64) -> f64 {
    let mut acc = [0.0; 8];
    let chunks = xs.chunks_exact(8);
    let tail = chunks.remainder();
    for ch in chunks {
        for (a, &v) in acc.iter_mut().zip(ch) {
            *a += f(v);
        }
    }
    tail.iter().map(|&v| f(v)).sum::<f64>() + acc.iter().sum::<f64>()
}

fn lane_sum_pair<T: Copy>(xs: &[T], ys: &[T], f: impl Fn(T, T) -> f64) -> f64 {
    let mut acc = [0.0; 8];
    let n = xs.len().min(ys.len());
    let full = n / 8 * 8;
    for (cx, cy) in xs[..full].chunks_exact(8).zip(ys[..full].chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += f(cx[k], cy[k]);
        }
    }
    (full..n).map(|i| f(xs[i], ys[i])).sum::<f64>() + acc.iter().sum::<f64>()
}
