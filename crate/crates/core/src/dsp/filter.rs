use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::EegTrial;

/// Second-order section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Largest pole magnitude.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            self.a2.sqrt()
        } else {
            let s = disc.sqrt();
            ((-self.a1 + s) / 2.0).abs().max(((-self.a1 - s) / 2.0).abs())
        }
    }

    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }

    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }
}

/// Cascade of biquads plus the parameters it was designed from.
#[derive(Clone, Debug, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub order: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    pub fs: f64,
}

/// Digital Butterworth bandpass of prototype order `order` as second-order sections.
///
/// The analog lowpass prototype is shifted to a bandpass around the prewarped
/// edges and mapped through the bilinear transform, giving `2 * order` poles,
/// `order` zeros at `z = 1` and `order` at `z = -1`. Each section carries one
/// zero of each kind and a conjugate pole pair. Sections are ordered by pole
/// radius and each is scaled to unit gain at the passband centre.
pub fn design_bandpass(order: usize, f_lo: f64, f_hi: f64, fs: f64) -> Result<SosFilter> {
    if order == 0 {
        return Err(Error::Design("order must be at least 1".into()));
    }
    if !(fs > 0.0 && 0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0) {
        return Err(Error::Design(format!(
            "band edges must satisfy 0 < {f_lo} < {f_hi} < {} (Nyquist)",
            fs / 2.0
        )));
    }
    let fs2 = 2.0 * fs;
    let wl = fs2 * (PI * f_lo / fs).tan();
    let wh = fs2 * (PI * f_hi / fs).tan();
    let bw = wh - wl;
    let w0 = (wl * wh).sqrt();

    let n = order as f64;
    let mut poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        let proto = Complex64::from_polar(1.0, PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n));
        let half = proto * (bw / 2.0);
        let root = (half * half - w0 * w0).sqrt();
        for s in [half + root, half - root] {
            poles.push((fs2 + s) / (fs2 - s));
        }
    }

    let tol = 1e-10;
    let mut denominators = Vec::with_capacity(order);
    let mut reals: Vec<f64> = Vec::new();
    for p in &poles {
        if p.im > tol {
            denominators.push((-2.0 * p.re, p.norm_sqr()));
        } else if p.im.abs() <= tol {
            reals.push(p.re);
        }
    }
    reals.sort_by(f64::total_cmp);
    if !reals.len().is_multiple_of(2) {
        return Err(Error::Design("unpaired real pole".into()));
    }
    for pair in reals.chunks(2) {
        denominators.push((-(pair[0] + pair[1]), pair[0] * pair[1]));
    }
    if denominators.len() != order {
        return Err(Error::Design(format!("expected {order} pole pairs, found {}", denominators.len())));
    }

    let omega0 = 2.0 * (w0 / fs2).atan();
    let mut sections: Vec<Biquad> = denominators
        .into_iter()
        .map(|(a1, a2)| {
            let raw = Biquad { b: [1.0, 0.0, -1.0], a1, a2 };
            let g = 1.0 / raw.response(omega0).norm();
            Biquad { b: [g, 0.0, -g], a1, a2 }
        })
        .collect();
    sections.sort_by(|x, y| x.pole_radius().total_cmp(&y.pole_radius()));

    let filter = SosFilter { sections, order, f_lo, f_hi, fs };
    filter.check_stable()?;
    Ok(filter)
}

impl SosFilter {
    pub fn check_stable(&self) -> Result<()> {
        for (i, s) in self.sections.iter().enumerate() {
            let r = s.pole_radius();
            if !(r < 1.0) {
                return Err(Error::UnstableFilter { section: i, radius: r });
            }
        }
        Ok(())
    }

    /// Complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * f_hz / self.fs;
        self.sections.iter().map(|s| s.response(omega)).product()
    }

    pub fn magnitude_db(&self, f_hz: f64) -> f64 {
        20.0 * self.response(f_hz).norm().log10()
    }

    /// Causal filtering with zero initial conditions.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_stable()?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("filter input contains non-finite samples".into()));
        }
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let xin = *v;
                let out = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a1 * out + z2;
                z2 = s.b[2] * xin - s.a2 * out;
                *v = out;
            }
        }
        Ok(y)
    }

    /// Forward-backward filtering: zero phase, squared magnitude.
    pub fn apply_zero_phase(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.apply(x)?;
        y.reverse();
        let mut y = self.apply(&y)?;
        y.reverse();
        Ok(y)
    }

    /// Filters every channel of a trial independently.
    pub fn apply_trial(&self, trial: &EegTrial, zero_phase: bool) -> Result<EegTrial> {
        let mut out = Vec::with_capacity(trial.data().len());
        for ch in trial.channels() {
            let x: Vec<f64> = ch.iter().map(|&v| v as f64).collect();
            let y = if zero_phase { self.apply_zero_phase(&x)? } else { self.apply(&x)? };
            out.extend(y.into_iter().map(|v| v as f32));
        }
        Ok(trial.with_data(out))
    }
}
