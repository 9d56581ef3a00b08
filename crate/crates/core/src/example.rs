//! Polynomial-power windows at `p = L`, `q = 1`.
//!
//! Generator `ℓ` is `|P_ℓ(x + ℓ)|^{a_ℓ/2}` on `[−ℓ, −ℓ + 1)`. Its weight is
//! diagonal with entries `L·|P_r(x)|^{a_r}`.

use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::lattice::{make_grid, GridSpec};
use crate::poly::Poly;
use crate::window::WindowSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExampleSpec {
    #[serde(rename = "L")]
    pub l: usize,
    /// One polynomial per generator, in the text form accepted by [`Poly::parse`].
    pub polys: Vec<String>,
    pub exponents: Vec<f64>,
    #[serde(default)]
    pub allow_violation: bool,
}

impl ExampleSpec {
    /// The same polynomial and exponent for every generator.
    pub fn uniform(l: usize, poly: &str, exponent: f64) -> Self {
        ExampleSpec { l, polys: vec![poly.to_string(); l], exponents: vec![exponent; l], allow_violation: false }
    }

    pub fn parsed_polys(&self) -> Result<Vec<Poly>> {
        self.polys.iter().map(|s| Poly::parse(s)).collect()
    }

    /// Whether every `deg(P_ℓ)·a_ℓ` lies in `(−1, 1)`.
    pub fn is_compliant(&self) -> Result<bool> {
        Ok(self.parsed_polys()?.iter().zip(&self.exponents).all(|(p, a)| {
            let d = p.degree() as f64 * a;
            -1.0 < d && d < 1.0
        }))
    }

    /// `p = L`, `q = 1`, `K = 1`.
    pub fn grid(&self, mx: usize, ku: usize) -> Result<GridSpec> {
        make_grid(self.l, 1, self.l, mx, ku, 1)
    }
}

pub fn build_example_windows(spec: &ExampleSpec) -> Result<Vec<WindowSpec>> {
    if spec.l == 0 {
        return Err(GaborError::Config("L must be at least 1".into()));
    }
    if spec.polys.len() != spec.l || spec.exponents.len() != spec.l {
        return Err(GaborError::Config(format!(
            "L={} needs {} polynomials and exponents, got {} and {}",
            spec.l,
            spec.l,
            spec.polys.len(),
            spec.exponents.len()
        )));
    }
    let polys = spec.parsed_polys()?;
    if !spec.allow_violation && !spec.is_compliant()? {
        return Err(GaborError::Config(
            "every deg(P)·a must lie in (−1, 1); set allowViolation for negative controls".into(),
        ));
    }
    if let Some(a) = spec.exponents.iter().find(|a| !a.is_finite()) {
        return Err(GaborError::Config(format!("exponent {a} is not finite")));
    }
    Ok(polys
        .into_iter()
        .zip(&spec.exponents)
        .enumerate()
        .map(|(l, (p, a))| WindowSpec::power(-(l as i64), p, a / 2.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::sample_window;

    #[test]
    fn two_generators() {
        let spec = ExampleSpec::uniform(2, "x-1/2", 0.5);
        let ws = build_example_windows(&spec).unwrap();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws[1].origin(), -1);
        let g = spec.grid(8, 8).unwrap();
        let s = sample_window(&ws[1], &g).unwrap();
        // x = −1 + 1/8 → |(x + 1) − 1/2|^{1/4}
        assert!((s.samples[1].re - 0.375f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn zero_exponent_is_indicator() {
        let spec = ExampleSpec::uniform(3, "x(x-1)", 0.0);
        let g = spec.grid(6, 6).unwrap();
        for w in build_example_windows(&spec).unwrap() {
            assert!(sample_window(&w, &g).unwrap().samples.iter().all(|z| z.re == 1.0));
        }
    }

    #[test]
    fn violations() {
        let bad = ExampleSpec::uniform(2, "x-1/2", 1.5);
        assert!(matches!(build_example_windows(&bad), Err(GaborError::Config(_))));
        assert!(build_example_windows(&ExampleSpec { allow_violation: true, ..bad }).is_ok());
        assert!(!ExampleSpec::uniform(1, "x(x-1)", 0.5).is_compliant().unwrap());
        assert!(ExampleSpec::uniform(1, "x(x-1)", -0.45).is_compliant().unwrap());
        let short = ExampleSpec { l: 2, polys: vec!["x".into()], exponents: vec![0.1, 0.1], allow_violation: false };
        assert!(build_example_windows(&short).is_err());
    }

    #[test]
    fn json_shape() {
        let s: ExampleSpec = serde_json::from_str(r#"{"L":2,"polys":["x-1/3","x-2/3"],"exponents":[0.5,0.5]}"#).unwrap();
        assert_eq!(s.l, 2);
        assert!(!s.allow_violation);
    }
}
