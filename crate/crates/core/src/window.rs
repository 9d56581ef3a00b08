//! Window descriptions and their grid samples.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::lattice::GridSpec;
use crate::poly::Poly;

/// One piece `|P(t)|^α` on `[a, b)`, with `t = x − origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub interval: [f64; 2],
    pub poly: Poly,
    #[serde(default = "one")]
    pub exponent: f64,
}

fn one() -> f64 {
    1.0
}

/// A window as it appears in configuration files.
///
/// `origin` is an integer period offset: the window lives on
/// `[origin, origin + K)`. It defaults to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Piecewise {
        #[serde(default)]
        origin: i64,
        pieces: Vec<Piece>,
    },
    Sampled {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples_file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<f64>>,
        #[serde(rename = "Mx")]
        mx: usize,
        #[serde(rename = "K")]
        k: usize,
        #[serde(default)]
        origin: i64,
    },
}

impl WindowSpec {
    /// Indicator of `[origin, origin + k)`.
    pub fn indicator(origin: i64, k: usize) -> Self {
        WindowSpec::Piecewise {
            origin,
            pieces: vec![Piece {
                interval: [origin as f64, (origin + k as i64) as f64],
                poly: Poly::constant(1.0),
                exponent: 1.0,
            }],
        }
    }

    /// `|P(x − origin)|^α` on `[origin, origin + 1)`.
    pub fn power(origin: i64, poly: Poly, exponent: f64) -> Self {
        WindowSpec::Piecewise {
            origin,
            pieces: vec![Piece { interval: [origin as f64, (origin + 1) as f64], poly, exponent }],
        }
    }

    pub fn origin(&self) -> i64 {
        match self {
            WindowSpec::Piecewise { origin, .. } | WindowSpec::Sampled { origin, .. } => *origin,
        }
    }

    /// Number of unit periods the window occupies, counted from `origin`.
    pub fn support_periods(&self) -> usize {
        match self {
            WindowSpec::Piecewise { origin, pieces } => pieces
                .iter()
                .map(|p| (p.interval[1] - *origin as f64).ceil().max(1.0) as usize)
                .max()
                .unwrap_or(1),
            WindowSpec::Sampled { k, .. } => *k,
        }
    }

    /// Resolve a relative `samples_file` against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let WindowSpec::Sampled { samples_file: Some(f), .. } = self {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
    }
}

/// Samples of a window at `x = start/mx + i/mx`, covering `grid.k` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWindow {
    pub mx: usize,
    /// Integer period where the samples begin.
    pub origin: i64,
    pub samples: Vec<Complex64>,
}

impl SampledWindow {
    pub fn periods(&self) -> usize {
        self.samples.len() / self.mx
    }

    /// `x` coordinate of sample `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.origin as f64 + i as f64 / self.mx as f64
    }

    /// Discrete `L²(ℝ)` norm with cell width `1/mx`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.mx as f64).sqrt()
    }
}

/// `|v|^α`, with zeros of a negative power sampled as 0.
pub fn abs_pow(v: f64, alpha: f64) -> f64 {
    if v == 0.0 && alpha < 0.0 {
        0.0
    } else {
        v.abs().powf(alpha)
    }
}

pub fn sample_window(spec: &WindowSpec, grid: &GridSpec) -> Result<SampledWindow> {
    let mx = grid.mx;
    let n = grid.k * mx;
    match spec {
        WindowSpec::Piecewise { origin, pieces } => {
            let lo = *origin as f64;
            let hi = lo + grid.k as f64;
            for p in pieces {
                let [a, b] = p.interval;
                if !(a < b) {
                    return Err(GaborError::Config(format!("empty piece interval [{a}, {b})")));
                }
                if a < lo || b > hi {
                    return Err(GaborError::Support(format!(
                        "piece [{a}, {b}) extends beyond [{lo}, {hi})"
                    )));
                }
            }
            for (i, p) in pieces.iter().enumerate() {
                for q in &pieces[i + 1..] {
                    if p.interval[0] < q.interval[1] && q.interval[0] < p.interval[1] {
                        return Err(GaborError::Config(format!(
                            "pieces {:?} and {:?} overlap",
                            p.interval, q.interval
                        )));
                    }
                }
            }
            let mut samples = vec![Complex64::new(0.0, 0.0); n];
            for (i, s) in samples.iter_mut().enumerate() {
                let t = i as f64 / mx as f64;
                let x = lo + t;
                if let Some(p) = pieces.iter().find(|p| p.interval[0] <= x && x < p.interval[1]) {
                    *s = Complex64::new(abs_pow(p.poly.eval(t), p.exponent), 0.0);
                }
            }
            let w = SampledWindow { mx, origin: *origin, samples };
            check_finite(&w)?;
            Ok(w)
        }
        WindowSpec::Sampled { samples_file, samples, mx: smx, k, origin } => {
            if *smx != mx {
                return Err(GaborError::Resolution(format!(
                    "sampled window has Mx={smx}, grid has Mx={mx}; resampling is not supported"
                )));
            }
            if *k > grid.k {
                return Err(GaborError::Support(format!(
                    "sampled window spans K={k} periods, grid allows {}",
                    grid.k
                )));
            }
            let values = match (samples, samples_file) {
                (Some(v), _) => v.clone(),
                (None, Some(path)) => read_samples_csv(path)?,
                (None, None) => {
                    return Err(GaborError::Config("sampled window needs `samples` or `samples_file`".into()))
                }
            };
            if values.len() != k * mx {
                return Err(GaborError::Shape(format!(
                    "expected K*Mx = {} samples, found {}",
                    k * mx,
                    values.len()
                )));
            }
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (o, v) in out.iter_mut().zip(values) {
                *o = Complex64::new(v, 0.0);
            }
            let w = SampledWindow { mx, origin: *origin, samples: out };
            check_finite(&w)?;
            Ok(w)
        }
    }
}

fn check_finite(w: &SampledWindow) -> Result<()> {
    if w.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(GaborError::Config("window samples are not finite".into()))
    }
}

/// One decimal value per line; blank lines and `#` comments are skipped.
pub fn read_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| GaborError::Io { path: path.to_path_buf(), source })?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| GaborError::Parse(format!("{}: bad sample `{l}`", path.display())))
        })
        .collect()
}
