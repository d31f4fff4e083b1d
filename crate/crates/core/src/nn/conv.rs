use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

use super::scalar::{gemm, MatView};
use super::{Param, Scalar, Tensor};

/// Square-kernel 2-D cross-correlation with stride 1 and symmetric zero padding.
#[derive(Clone, Debug)]
pub struct Conv2d<T> {
    /// `(out_channels, in_channels, k, k)`.
    pub weight: Param<T>,
    /// One entry per output channel, if enabled.
    pub bias: Option<Param<T>>,
    pub padding: usize,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(weight: Tensor<T>, bias: Option<Tensor<T>>, padding: usize) -> Result<Self> {
        let s = weight.shape();
        if s.len() != 4 || s[2] != s[3] || s[2] == 0 {
            return Err(Error::Shape(format!("conv weight must be (O, C, k, k), got {s:?}")));
        }
        if let Some(b) = &bias {
            if b.shape() != [s[0]] {
                return Err(Error::Shape(format!("conv bias must be ({},), got {:?}", s[0], b.shape())));
            }
        }
        Ok(Self { weight: Param::new(weight), bias: bias.map(Param::new), padding, input: None })
    }

    /// He-normal initialised kernel, zero bias.
    pub fn he_init(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        padding: usize,
        with_bias: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        let shape = [out_channels, in_channels, kernel, kernel];
        let data = (0..shape.iter().product::<usize>()).map(|_| T::of(normal.sample(rng))).collect();
        let weight = Tensor::from_vec(&shape, data).expect("consistent shape");
        let bias = with_bias.then(|| Tensor::zeros(&[out_channels]));
        Self::new(weight, bias, padding).expect("consistent shape")
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.shape()[2]
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let k = self.kernel();
        let (hp, wp) = (h + 2 * self.padding, w + 2 * self.padding);
        (hp >= k && wp >= k).then(|| (hp - k + 1, wp - k + 1))
    }

    fn check_input(&self, s: &[usize]) -> Result<(usize, usize, usize, usize, usize, usize)> {
        if s.len() != 4 {
            return Err(Error::Shape(format!("conv input must be (N, C, H, W), got {s:?}")));
        }
        if s[1] != self.in_channels() {
            return Err(Error::Shape(format!(
                "conv input has {} channels, kernel expects {}",
                s[1],
                self.in_channels()
            )));
        }
        let (ho, wo) = self.output_hw(s[2], s[3]).ok_or_else(|| {
            Error::Shape(format!("conv input {}x{} smaller than kernel {}", s[2], s[3], self.kernel()))
        })?;
        Ok((s[0], s[1], s[2], s[3], ho, wo))
    }

    pub fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>> {
        let out = self.infer(&x)?;
        self.input = Some(x);
        Ok(out)
    }

    /// Forward pass without caching anything for backward.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, c, h, w, ho, wo) = self.check_input(x.shape())?;
        let (o, k) = (self.out_channels(), self.kernel());
        let ckk = c * k * k;
        let hw = ho * wo;
        let mut out = Tensor::zeros(&[n, o, ho, wo]);
        let mut cols = vec![T::zero(); ckk * hw];
        for i in 0..n {
            let sample = &x.data()[i * c * h * w..(i + 1) * c * h * w];
            im2col(sample, c, h, w, k, self.padding, ho, wo, &mut cols);
            let dst = &mut out.data_mut()[i * o * hw..(i + 1) * o * hw];
            gemm(
                T::one(),
                MatView::rm(self.weight.value.data(), o, ckk),
                MatView::rm(&cols, ckk, hw),
                T::zero(),
                dst,
            );
            if let Some(b) = &self.bias {
                for (oc, row) in dst.chunks_mut(hw).enumerate() {
                    let bv = b.value.data()[oc];
                    row.iter_mut().for_each(|v| *v += bv);
                }
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients; returns the input gradient when asked.
    pub fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let x = self.input.as_ref().ok_or_else(|| Error::Shape("conv backward before forward".into()))?;
        let (n, c, h, w, ho, wo) = self.check_input(x.shape())?;
        let (o, k) = (self.out_channels(), self.kernel());
        if grad_out.shape() != [n, o, ho, wo] {
            return Err(Error::Shape(format!(
                "conv grad {:?} does not match output {:?}",
                grad_out.shape(),
                [n, o, ho, wo]
            )));
        }
        let ckk = c * k * k;
        let hw = ho * wo;
        let mut cols = vec![T::zero(); ckk * hw];
        let mut dcols = vec![T::zero(); ckk * hw];
        let mut grad_in = need_input_grad.then(|| Tensor::zeros(x.shape()));
        for i in 0..n {
            let sample = &x.data()[i * c * h * w..(i + 1) * c * h * w];
            let dy = &grad_out.data()[i * o * hw..(i + 1) * o * hw];
            im2col(sample, c, h, w, k, self.padding, ho, wo, &mut cols);
            gemm(
                T::one(),
                MatView::rm(dy, o, hw),
                MatView::rm_t(&cols, hw, ckk),
                T::one(),
                self.weight.grad.data_mut(),
            );
            if let Some(b) = &mut self.bias {
                for (oc, row) in dy.chunks(hw).enumerate() {
                    b.grad.data_mut()[oc] += row.iter().copied().sum::<T>();
                }
            }
            if let Some(gi) = &mut grad_in {
                gemm(
                    T::one(),
                    MatView::rm_t(self.weight.value.data(), ckk, o),
                    MatView::rm(dy, o, hw),
                    T::zero(),
                    &mut dcols,
                );
                let dst = &mut gi.data_mut()[i * c * h * w..(i + 1) * c * h * w];
                col2im(&dcols, c, h, w, k, self.padding, ho, wo, dst);
            }
        }
        Ok(grad_in)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = vec![&mut self.weight];
        if let Some(b) = &mut self.bias {
            v.push(b);
        }
        v
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        let mut v = vec![&self.weight];
        if let Some(b) = &self.bias {
            v.push(b);
        }
        v
    }
}

/// Unfold one `(C, H, W)` sample into a `(C*k*k, Ho*Wo)` matrix.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    x: &[T],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    pad: usize,
    ho: usize,
    wo: usize,
    cols: &mut [T],
) {
    let hw = ho * wo;
    for ch in 0..c {
        let plane = &x[ch * h * w..(ch + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = &mut cols[((ch * k + ki) * k + kj) * hw..][..hw];
                for oy in 0..ho {
                    let iy = (oy + ki) as isize - pad as isize;
                    let dst = &mut row[oy * wo..(oy + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    if pad == 0 {
                        dst.copy_from_slice(&src[kj..kj + wo]);
                    } else {
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox + kj) as isize - pad as isize;
                            *d = if ix < 0 || ix >= w as isize { T::zero() } else { src[ix as usize] };
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back onto a `(C, H, W)` sample.
#[allow(clippy::too_many_arguments)]
fn col2im<T: Scalar>(
    cols: &[T],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    pad: usize,
    ho: usize,
    wo: usize,
    x: &mut [T],
) {
    let hw = ho * wo;
    for ch in 0..c {
        let plane = &mut x[ch * h * w..(ch + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = &cols[((ch * k + ki) * k + kj) * hw..][..hw];
                for oy in 0..ho {
                    let iy = (oy + ki) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    let src = &row[oy * wo..(oy + 1) * wo];
                    if pad == 0 {
                        dst[kj..kj + wo].iter_mut().zip(src).for_each(|(d, &s)| *d += s);
                        continue;
                    }
                    for ox in 0..wo {
                        let ix = (ox + kj) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += row[oy * wo + ox];
                        }
                    }
                }
            }
        }
    }
}
