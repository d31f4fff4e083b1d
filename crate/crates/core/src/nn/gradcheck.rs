use crate::error::{Error, Result};

use super::{Mode, Sequential, Tensor};

/// Scalar objective on a network output, with its gradient.
pub trait LossHead {
    fn loss_and_grad(&self, output: &Tensor<f64>) -> Result<(f64, Tensor<f64>)>;
}

/// `0.5 * ||y||^2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SquaredNormHead;

impl LossHead for SquaredNormHead {
    fn loss_and_grad(&self, output: &Tensor<f64>) -> Result<(f64, Tensor<f64>)> {
        let loss = 0.5 * output.data().iter().map(|v| v * v).sum::<f64>();
        Ok((loss, output.clone()))
    }
}

/// Weighted linear functional `sum(w * y)`; exposes every output coordinate.
#[derive(Clone, Debug)]
pub struct LinearHead(pub Vec<f64>);

impl LossHead for LinearHead {
    fn loss_and_grad(&self, output: &Tensor<f64>) -> Result<(f64, Tensor<f64>)> {
        if self.0.len() != output.len() {
            return Err(Error::Shape(format!("linear head of {} for output {:?}", self.0.len(), output.shape())));
        }
        let loss = output.data().iter().zip(&self.0).map(|(a, b)| a * b).sum();
        Ok((loss, Tensor::from_vec(output.shape(), self.0.clone())?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Max over parameter elements.
    pub max_rel_error: f64,
    /// Max over input elements, reported separately.
    pub input_rel_error: f64,
    /// `(parameter index, element)` with the largest parameter error, and the
    /// finite-difference and analytic values there.
    pub worst_param: Option<(usize, usize, f64, f64)>,
    /// Number of scalar coordinates perturbed.
    pub checked: usize,
}

pub const FD_STEP: f64 = 1e-5;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn eval(net: &mut Sequential<f64>, input: &Tensor<f64>, mode: Mode, head: &dyn LossHead) -> Result<f64> {
    let out = net.forward(input.clone(), mode)?;
    let (loss, _) = head.loss_and_grad(&out)?;
    if !loss.is_finite() {
        return Err(Error::Degenerate(format!("gradient check loss is {loss}")));
    }
    Ok(loss)
}

/// Compares backpropagated gradients with central finite differences.
///
/// Dropout masks are frozen for the duration of the check. Batch normalisation
/// runs in `mode`; in train mode the output depends only on batch statistics,
/// so repeated forwards evaluate the same function.
pub fn gradient_check(
    net: &mut Sequential<f64>,
    input: &Tensor<f64>,
    mode: Mode,
    head: &dyn LossHead,
) -> Result<GradCheckReport> {
    net.set_dropout_frozen(true);
    let result = check_inner(net, input, mode, head);
    net.set_dropout_frozen(false);
    result
}

fn check_inner(
    net: &mut Sequential<f64>,
    input: &Tensor<f64>,
    mode: Mode,
    head: &dyn LossHead,
) -> Result<GradCheckReport> {
    net.zero_grad();
    let out = net.forward(input.clone(), mode)?;
    let (loss, g) = head.loss_and_grad(&out)?;
    if !loss.is_finite() {
        return Err(Error::Degenerate(format!("gradient check loss is {loss}")));
    }
    let input_grad = net.backward(g, true)?.expect("input gradient requested");
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.data().to_vec()).collect();

    let mut param_err: f64 = 0.0;
    let mut worst_param = None;
    let mut checked = 0;
    for (pi, grads) in analytic.iter().enumerate() {
        for (ei, &an) in grads.iter().enumerate() {
            let orig = net.params()[pi].value.data()[ei];
            net.params_mut()[pi].value.data_mut()[ei] = orig + FD_STEP;
            let plus = eval(net, input, mode, head)?;
            net.params_mut()[pi].value.data_mut()[ei] = orig - FD_STEP;
            let minus = eval(net, input, mode, head)?;
            net.params_mut()[pi].value.data_mut()[ei] = orig;
            let fd = (plus - minus) / (2.0 * FD_STEP);
            let err = relative_error(fd, an);
            if err > param_err || worst_param.is_none() {
                param_err = err;
                worst_param = Some((pi, ei, fd, an));
            }
            checked += 1;
        }
    }

    let mut input_err: f64 = 0.0;
    let mut x = input.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + FD_STEP;
        let plus = eval(net, &x, mode, head)?;
        x.data_mut()[i] = orig - FD_STEP;
        let minus = eval(net, &x, mode, head)?;
        x.data_mut()[i] = orig;
        input_err = input_err.max(relative_error((plus - minus) / (2.0 * FD_STEP), input_grad.data()[i]));
        checked += 1;
    }

    Ok(GradCheckReport {
        max_rel_error: param_err,
        input_rel_error: input_err,
        worst_param,
        checked,
    })
}
