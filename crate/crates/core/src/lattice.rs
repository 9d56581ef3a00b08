//! Lattice parameters, discretization grids and index bookkeeping.
//!
//! A system G(1, p/q, A) with `L` generators is described by [`LatticeParams`].
//! All fields in this crate are sampled on a [`GridSpec`]: `mx` samples per unit
//! length in `x`, `ku` samples over `[0, 1)` in `u`. The fundamental domain
//! `T_p = [0,1) × [0,1/p)` then carries `mx × ku/p` nodes.

use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};

/// `p`, `q` and the number of generators `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub p: usize,
    pub q: usize,
    #[serde(rename = "L")]
    pub l: usize,
}

impl LatticeParams {
    pub fn new(p: usize, q: usize, l: usize) -> Result<Self> {
        if p == 0 || q == 0 || l == 0 {
            return Err(GaborError::Config(format!(
                "p, q and L must be positive (got p={p}, q={q}, L={l})"
            )));
        }
        Ok(LatticeParams { p, q, l })
    }

    /// Size `Lq` of the Zibulski–Zeevi weight.
    pub fn block_size(&self) -> usize {
        self.l * self.q
    }

    /// The density `Lq/p` as a reduced fraction.
    pub fn density(&self) -> (usize, usize) {
        let num = self.block_size();
        let g = gcd(num, self.p);
        (num / g, self.p / g)
    }

    pub fn is_critical(&self) -> bool {
        self.block_size() == self.p
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lattice plus discretization.
///
/// Invariants checked by [`make_grid`]: `q | mx` (translations by `r·p/q` are
/// whole grid steps), `p | ku` (the shift `u ↦ u + k/p` is whole grid steps)
/// and `k | ku`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub params: LatticeParams,
    pub mx: usize,
    pub ku: usize,
    /// Windows are supported on `K` consecutive unit periods.
    pub k: usize,
}

pub fn make_grid(p: usize, q: usize, l: usize, mx: usize, ku: usize, k: usize) -> Result<GridSpec> {
    let params = LatticeParams::new(p, q, l)?;
    GridSpec::new(params, mx, ku, k)
}

impl GridSpec {
    pub fn new(params: LatticeParams, mx: usize, ku: usize, k: usize) -> Result<Self> {
        if mx == 0 || ku == 0 || k == 0 {
            return Err(GaborError::Config(format!(
                "grid sizes must be positive (got Mx={mx}, Ku={ku}, K={k})"
            )));
        }
        if !mx.is_multiple_of(params.q) {
            return Err(GaborError::Divisibility(format!(
                "Mx={mx} is not divisible by q={}",
                params.q
            )));
        }
        if !ku.is_multiple_of(params.p) {
            return Err(GaborError::Divisibility(format!(
                "Ku={ku} is not divisible by p={}",
                params.p
            )));
        }
        if !ku.is_multiple_of(k) {
            return Err(GaborError::Divisibility(format!(
                "Ku={ku} is not divisible by K={k}"
            )));
        }
        Ok(GridSpec { params, mx, ku, k })
    }

    /// Number of `u` nodes inside `[0, 1/p)`.
    pub fn nu(&self) -> usize {
        self.ku / self.params.p
    }

    /// Grid steps corresponding to the translation `r·p/q`.
    pub fn shift_steps(&self, r: usize) -> usize {
        r * self.params.p * self.mx / self.params.q
    }

    /// Number of nodes of `T_p`.
    pub fn tp_nodes(&self) -> usize {
        self.mx * self.nu()
    }

    /// Quadrature weight of one node (left-endpoint rectangle rule).
    pub fn cell_area(&self) -> f64 {
        1.0 / (self.mx as f64 * self.ku as f64)
    }

    /// The same lattice with both resolutions multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<GridSpec> {
        GridSpec::new(self.params, self.mx * factor, self.ku * factor, self.k)
    }

    pub fn with_resolution(&self, mx: usize, ku: usize) -> Result<GridSpec> {
        GridSpec::new(self.params, mx, ku, self.k)
    }
}

/// Index of the atom `g^ℓ_{m, nq+r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrigIndex {
    pub generator: usize,
    pub residue: usize,
    pub m: i64,
    pub n: i64,
}

impl TrigIndex {
    pub fn new(generator: usize, residue: usize, m: i64, n: i64) -> Self {
        TrigIndex { generator, residue, m, n }
    }

    /// Flat block index `ℓ·q + r`.
    pub fn flat(&self, q: usize) -> usize {
        self.generator * q + self.residue
    }

    pub fn from_flat(flat: usize, q: usize, m: i64, n: i64) -> Self {
        TrigIndex { generator: flat / q, residue: flat % q, m, n }
    }

    pub fn check(&self, params: &LatticeParams) -> Result<()> {
        if self.generator >= params.l || self.residue >= params.q {
            return Err(GaborError::Index(format!(
                "generator {} / residue {} outside L={} q={}",
                self.generator, self.residue, params.l, params.q
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        assert!(make_grid(2, 3, 1, 12, 8, 2).is_ok());
        assert!(make_grid(1, 1, 1, 16, 16, 1).is_ok());
        assert!(matches!(make_grid(2, 3, 1, 10, 8, 2), Err(GaborError::Divisibility(_))));
        assert!(matches!(make_grid(3, 1, 1, 12, 8, 2), Err(GaborError::Divisibility(_))));
        assert!(matches!(make_grid(2, 1, 1, 12, 8, 3), Err(GaborError::Divisibility(_))));
        assert!(matches!(make_grid(0, 1, 1, 12, 8, 1), Err(GaborError::Config(_))));
    }

    #[test]
    fn grid_accepts_exactly_the_divisible_triples() {
        for q in 1..5 {
            for p in 1..5 {
                for k in 1..4 {
                    for mx in 1..25 {
                        for ku in 1..25 {
                            let ok = mx % q == 0 && ku % p == 0 && ku % k == 0;
                            assert_eq!(make_grid(p, q, 1, mx, ku, k).is_ok(), ok);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn critical_density() {
        assert!(LatticeParams::new(2, 1, 2).unwrap().is_critical());
        assert!(!LatticeParams::new(2, 3, 1).unwrap().is_critical());
        assert_eq!(LatticeParams::new(4, 3, 2).unwrap().density(), (3, 2));
    }

    #[test]
    fn flat_index_round_trip() {
        for q in 1..6 {
            for flat in 0..4 * q {
                let idx = TrigIndex::from_flat(flat, q, 0, 0);
                assert_eq!(idx.flat(q), flat);
                assert!(idx.residue < q);
            }
        }
    }
}
