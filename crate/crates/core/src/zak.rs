//! Discrete Zak transform.
//!
//! For `x ∈ [0,1)` and a window supported on `[o, o+K)`,
//! `Zf(x,u) = Σ_k f(x−k) e^{2πiku} = Σ_n f(x+n) e^{−2πinu}`, `n = o..o+K−1`.
//! On the grid `x_j = j/Mx`, `u_k = k/Ku` this is a length-`Ku` DFT of the
//! `K` samples `f(x_j + n)`, zero-padded. The transform is exactly unitary
//! from `Ku`-periodic sequences of periods to the `Mx × Ku` torus grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{GaborError, Result};
use crate::lattice::GridSpec;
use crate::window::SampledWindow;

/// Samples `Z[j][k] = Zg(j/Mx, k/Ku)`, stored row-major in `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZakField {
    pub grid: GridSpec,
    /// First period of the source window.
    pub origin: i64,
    pub values: Vec<Complex64>,
}

impl ZakField {
    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * self.grid.ku + k]
    }

    /// `L²(𝕋²)` norm by the rectangle rule.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (s / (self.grid.mx * self.grid.ku) as f64).sqrt()
    }

    /// `Zg(x_j + s, u_k)` for any integer `s`, via `Z(x+1,u) = e^{2πiu} Z(x,u)`.
    pub fn eval_shifted(&self, j: i64, k: i64) -> Complex64 {
        let mx = self.grid.mx as i64;
        let ku = self.grid.ku as i64;
        let s = j.div_euclid(mx);
        let jj = j.rem_euclid(mx) as usize;
        let kk = k.rem_euclid(ku) as usize;
        let z = self.at(jj, kk);
        if s == 0 {
            z
        } else {
            z * phase((s * kk as i64).rem_euclid(ku), ku as usize)
        }
    }
}

/// `e^{2πi t/n}`.
pub(crate) fn phase(t: i64, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t as f64 / n as f64)
}

pub fn zak_forward(w: &SampledWindow, grid: &GridSpec) -> Result<ZakField> {
    let (mx, ku) = (grid.mx, grid.ku);
    if w.mx != mx {
        return Err(GaborError::Shape(format!("window Mx={} does not match grid Mx={mx}", w.mx)));
    }
    let periods = w.periods();
    if periods > ku {
        return Err(GaborError::Support(format!("window spans {periods} periods, more than Ku={ku}")));
    }
    let fft = FftPlanner::new().plan_fft_forward(ku);
    let mut values = vec![Complex64::new(0.0, 0.0); mx * ku];
    let mut buf = vec![Complex64::new(0.0, 0.0); ku];
    for j in 0..mx {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for i in 0..periods {
            buf[i] = w.samples[j + i * mx];
        }
        fft.process(&mut buf);
        let row = &mut values[j * ku..(j + 1) * ku];
        for (k, (r, b)) in row.iter_mut().zip(&buf).enumerate() {
            // the sum starts at period `origin`, not 0
            *r = b * phase(-(w.origin * k as i64).rem_euclid(ku as i64), ku);
        }
    }
    Ok(ZakField { grid: *grid, origin: w.origin, values })
}

/// A function on `Ku` consecutive periods starting at `first_period`.
///
/// The discrete Zak model identifies periods modulo `Ku`; this is one
/// representative window of that cyclic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSignal {
    pub mx: usize,
    pub first_period: i64,
    pub samples: Vec<Complex64>,
}

impl PeriodicSignal {
    pub fn periods(&self) -> usize {
        self.samples.len() / self.mx
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.mx as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    /// Sample at absolute index `i` (period `floor(i/mx)`), wrapped cyclically.
    pub fn at(&self, i: i64) -> Complex64 {
        let n = self.samples.len() as i64;
        let idx = (i - self.first_period * self.mx as i64).rem_euclid(n);
        self.samples[idx as usize]
    }

    /// `⟨self, other⟩ = ∫ self · conj(other)` over one cycle.
    pub fn inner(&self, other: &PeriodicSignal) -> Result<Complex64> {
        if self.mx != other.mx || self.samples.len() != other.samples.len() {
            return Err(GaborError::Shape("signals live on different grids".into()));
        }
        let start = self.first_period * self.mx as i64;
        let s: Complex64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, a)| a * other.at(start + i as i64).conj())
            .sum();
        Ok(s / self.mx as f64)
    }
}

/// Inverse onto `Ku` periods beginning at `first_period`.
pub fn zak_inverse_periodic(z: &ZakField, first_period: i64) -> PeriodicSignal {
    let (mx, ku) = (z.grid.mx, z.grid.ku);
    let ifft = FftPlanner::new().plan_fft_inverse(ku);
    let mut samples = vec![Complex64::new(0.0, 0.0); mx * ku];
    let mut buf = vec![Complex64::new(0.0, 0.0); ku];
    let scale = 1.0 / ku as f64;
    for j in 0..mx {
        // f(x_j + n) = (1/Ku) Σ_k Z[j][k] e^{2πink/Ku}; align n = first_period
        for (k, b) in buf.iter_mut().enumerate() {
            *b = z.at(j, k) * phase((first_period * k as i64).rem_euclid(ku as i64), ku);
        }
        ifft.process(&mut buf);
        for (i, b) in buf.iter().enumerate() {
            samples[j + i * mx] = b * scale;
        }
    }
    PeriodicSignal { mx, first_period, samples }
}

/// Inverse onto the declared support `[origin, origin + K)`.
///
/// Fails when more than `1e-10` of the energy lands on other periods, which
/// means the field is not the transform of a window with that support.
pub fn zak_inverse(z: &ZakField) -> Result<SampledWindow> {
    let mx = z.grid.mx;
    let k = z.grid.k.min(z.grid.ku);
    let full = zak_inverse_periodic(z, z.origin);
    let total: f64 = full.samples.iter().map(|v| v.norm_sqr()).sum();
    let kept: f64 = full.samples[..k * mx].iter().map(|v| v.norm_sqr()).sum();
    let outside = total - kept;
    if outside > 1e-10 * total.max(f64::MIN_POSITIVE) {
        return Err(GaborError::Support(format!(
            "{:.3e} of the energy lies outside [{}, {})",
            outside / total,
            z.origin,
            z.origin + k as i64
        )));
    }
    Ok(SampledWindow { mx, origin: z.origin, samples: full.samples[..k * mx].to_vec() })
}

/// `F[j][k'] = Zg(x_j − r·p/q, u_{k'} + k/p)` on the `T_p` grid (`Mx × Ku/p`).
pub fn zak_shift_eval(z: &ZakField, r: usize, k: usize) -> Result<Vec<Complex64>> {
    let g = &z.grid;
    let (p, q) = (g.params.p, g.params.q);
    if r >= q || k >= p {
        return Err(GaborError::Index(format!("shift (r={r}, k={k}) outside r<{q}, k<{p}")));
    }
    let nu = g.nu();
    let shift = g.shift_steps(r) as i64;
    let mut out = Vec::with_capacity(g.mx * nu);
    for j in 0..g.mx as i64 {
        for kp in 0..nu {
            out.push(z.eval_shifted(j - shift, (kp + k * nu) as i64));
        }
    }
    Ok(out)
}

/// `Zg(x_j − r·p/q, u_k)` over the full `Mx × Ku` grid.
pub(crate) fn zak_shift_full(z: &ZakField, r: usize) -> Vec<Complex64> {
    let g = &z.grid;
    let shift = g.shift_steps(r) as i64;
    let mut out = Vec::with_capacity(g.mx * g.ku);
    for j in 0..g.mx as i64 {
        for k in 0..g.ku as i64 {
            out.push(z.eval_shifted(j - shift, k));
        }
    }
    out
}
