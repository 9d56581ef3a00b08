//! Biorthogonal duals `g̃^ℓ_{m,nq+r} = p · ZZ(W⁻¹ E_{m,n} e_{ℓq+r})`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::lattice::TrigIndex;
use crate::muckenhoupt::nodewise_inverse;
use crate::zak::{phase, zak_inverse, PeriodicSignal};
use crate::zibulski::{modulation, WField, ZakDomainVector, ZakSystem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DualOptions {
    pub eps_reg: f64,
    /// Largest tolerated fraction of excluded (singular) nodes.
    pub exclusion_cap: f64,
    /// Largest tolerated growth of `‖W⁻¹‖_{L¹}` under refinement.
    pub l1_growth: f64,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions { eps_reg: 1e-12, exclusion_cap: 1e-3, l1_growth: 1.5 }
    }
}

/// Nodewise `W⁻¹`; excluded nodes hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WInvField {
    pub inv: WField,
    pub excluded: Vec<bool>,
    pub excluded_fraction: f64,
    /// `∫_{T_p} tr W⁻¹` over retained nodes.
    pub l1_norm: f64,
    /// `max ‖W W⁻¹ − I‖_max` over retained nodes.
    pub residual: f64,
}

impl WInvField {
    pub fn valid(&self, opts: &DualOptions) -> bool {
        self.excluded_fraction <= opts.exclusion_cap
    }
}

/// Inverts every node with `λ_min > εreg · λ_max`, never failing.
pub fn invert_w_unchecked(w: &WField, eps_reg: f64) -> WInvField {
    let n = w.n;
    let (inv, _) = nodewise_inverse(w, eps_reg);
    let mut data = Vec::with_capacity(w.data.len());
    let mut excluded = Vec::with_capacity(w.nodes());
    let mut trace = 0.0;
    let mut residual = 0.0f64;
    for (node, m) in inv.iter().enumerate() {
        match m {
            Some(m) => {
                excluded.push(false);
                for r in 0..n {
                    trace += m[(r, r)].re;
                    for c in 0..n {
                        data.push(m[(r, c)]);
                    }
                }
                let prod = w.node(node) * m;
                for r in 0..n {
                    for c in 0..n {
                        let id = if r == c { 1.0 } else { 0.0 };
                        residual = residual.max((prod[(r, c)] - id).norm());
                    }
                }
            }
            None => {
                excluded.push(true);
                data.extend(std::iter::repeat_n(ZERO, n * n));
            }
        }
    }
    let count = excluded.iter().filter(|&&e| e).count();
    let inv = WField { data, ..w.clone() };
    let l1_norm = trace * inv.cell_area();
    WInvField { inv, excluded, excluded_fraction: count as f64 / w.nodes() as f64, l1_norm, residual }
}

/// As [`invert_w_unchecked`], failing when more than `exclusion_cap` of the
/// nodes had to be dropped.
pub fn invert_w(w: &WField, opts: &DualOptions) -> Result<WInvField> {
    let inv = invert_w_unchecked(w, opts.eps_reg);
    if !inv.valid(opts) {
        return Err(GaborError::DualNonexistence(format!(
            "{:.3}% of nodes are singular (cap {:.3}%)",
            100.0 * inv.excluded_fraction,
            100.0 * opts.exclusion_cap
        )));
    }
    Ok(inv)
}

/// Growth ratio of `‖W⁻¹‖_{L¹}` from `coarse` to `fine`; fails above `opts.l1_growth`.
pub fn check_l1_stability(coarse: &WInvField, fine: &WInvField, opts: &DualOptions) -> Result<f64> {
    let ratio = fine.l1_norm / coarse.l1_norm;
    if !(ratio <= opts.l1_growth) {
        return Err(GaborError::DualNonexistence(format!(
            "‖W⁻¹‖_L1 grows by {ratio:.3} under refinement ({:.4e} -> {:.4e})",
            coarse.l1_norm, fine.l1_norm
        )));
    }
    Ok(ratio)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualWindow {
    pub index: TrigIndex,
    pub samples: PeriodicSignal,
    /// `p · W⁻¹ E_{m,n} e_{ℓq+r}`.
    pub zak_vector: ZakDomainVector,
}

/// Default cyclic time window used for duals: `Ku` periods centred on 0.
pub fn default_first_period(sys: &ZakSystem) -> i64 {
    -(sys.grid.ku as i64 / 2)
}

/// Direct formula for one dual.
pub fn dual_window(winv: &WInvField, idx: TrigIndex, sys: &ZakSystem) -> Result<DualWindow> {
    let g = &sys.grid;
    let params = g.params;
    idx.check(&params)?;
    let (mx, nu, n, p) = (g.mx, g.nu(), params.block_size(), params.p);
    let w = &winv.inv;
    if w.mx != mx || w.nu != nu || w.n != n {
        return Err(GaborError::Shape("W⁻¹ and the Zak system live on different grids".into()));
    }
    let a = idx.flat(params.q);
    let mut tau = ZakDomainVector::for_grid(g);
    for j in 0..mx {
        for k in 0..nu {
            let node = j * nu + k;
            let e = modulation(idx.m, idx.n, j, k, mx, nu) * p as f64;
            for b in 0..n {
                tau.data[node * n + b] = w.entry(node, b, a) * e;
            }
        }
    }
    let samples = sys.synthesize(&tau, default_first_period(sys))?;
    Ok(DualWindow { index: idx, samples, zak_vector: tau })
}

/// `e^{2πimx} g̃(x − np)`: the `(m, n)` dual from the `(0, 0)` one.
pub fn dual_by_covariance(base: &PeriodicSignal, m: i64, n: i64, p: usize) -> PeriodicSignal {
    let mx = base.mx;
    let shift = n * (p * mx) as i64;
    let start = base.first_period * mx as i64;
    let samples = (0..base.samples.len())
        .map(|i| {
            let abs = start + i as i64;
            base.at(abs - shift) * phase((m * abs).rem_euclid(mx as i64), mx)
        })
        .collect();
    PeriodicSignal { mx, first_period: base.first_period, samples }
}

/// `⟨g̃_{dual}, g_{primal}⟩` for all flat indices and `|m|, |n| ≤ range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GramTensor {
    pub range: i64,
    pub indices: Vec<TrigIndex>,
    /// Row-major: `values[d * indices.len() + g]` pairs dual `d` with primal `g`.
    pub values: Vec<Complex64>,
}

impl GramTensor {
    pub fn max_deviation(&self) -> f64 {
        let s = self.indices.len();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let id = if i / s == i % s { 1.0 } else { 0.0 };
                (v - id).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> GramSummary {
        GramSummary { range: self.range, size: self.indices.len(), max_deviation: self.max_deviation() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GramSummary {
    pub range: i64,
    pub size: usize,
    pub max_deviation: f64,
}

fn check_range(sys: &ZakSystem, range: i64) -> Result<()> {
    let g = &sys.grid;
    let need = (2 * range + 1) as usize;
    if range < 0 || need > g.mx || need > g.nu() {
        return Err(GaborError::Resolution(format!(
            "index range {range} needs 2N+1 = {need} ≤ Mx = {} and ≤ Ku/p = {}",
            g.mx,
            g.nu()
        )));
    }
    Ok(())
}

/// Index list in the order used by [`GramTensor`].
pub fn gram_indices(sys: &ZakSystem, range: i64) -> Vec<TrigIndex> {
    let params = sys.params();
    let mut out = Vec::new();
    for a in 0..params.block_size() {
        for m in -range..=range {
            for n in -range..=range {
                out.push(TrigIndex::from_flat(a, params.q, m, n));
            }
        }
    }
    out
}

/// Gram tensor from the `(0,0)` duals of each flat index, using covariance
/// for the other `(m, n)` and the primal's compact support for quadrature.
pub fn gram_from_bases(sys: &ZakSystem, bases: &[PeriodicSignal], range: i64) -> Result<GramTensor> {
    check_range(sys, range)?;
    let g = &sys.grid;
    let params = g.params;
    let (mx, p, q) = (g.mx, params.p, params.q);
    if bases.len() != params.block_size() {
        return Err(GaborError::Shape(format!("expected {} dual bases", params.block_size())));
    }
    let windows: Vec<_> = sys.zaks.iter().map(zak_inverse).collect::<Result<_>>()?;
    let indices = gram_indices(sys, range);
    // primal atoms on their support: (absolute start index, samples)
    let primals: Vec<(i64, Vec<Complex64>)> = indices
        .iter()
        .map(|idx| {
            let w = &windows[idx.generator];
            let start = w.origin * mx as i64 + idx.n * (p * mx) as i64 + g.shift_steps(idx.residue) as i64;
            let s = w
                .samples
                .iter()
                .enumerate()
                .map(|(i, v)| v * phase((idx.m * (start + i as i64)).rem_euclid(mx as i64), mx))
                .collect();
            (start, s)
        })
        .collect();
    let mut values = Vec::with_capacity(indices.len() * indices.len());
    for d in &indices {
        let base = &bases[d.flat(q)];
        let shift = d.n * (p * mx) as i64;
        for (start, s) in &primals {
            let mut acc = ZERO;
            for (i, v) in s.iter().enumerate() {
                if *v == ZERO {
                    continue;
                }
                let abs = start + i as i64;
                let dual = base.at(abs - shift) * phase((d.m * abs).rem_euclid(mx as i64), mx);
                acc += dual * v.conj();
            }
            values.push(acc / mx as f64);
        }
    }
    Ok(GramTensor { range, indices, values })
}

pub fn biorthogonality_gram(sys: &ZakSystem, winv: &WInvField, range: i64) -> Result<GramTensor> {
    check_range(sys, range)?;
    let params = sys.params();
    let bases = (0..params.block_size())
        .map(|a| dual_window(winv, TrigIndex::from_flat(a, params.q, 0, 0), sys).map(|d| d.samples))
        .collect::<Result<Vec<_>>>()?;
    gram_from_bases(sys, &bases, range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_grid, GridSpec};
    use crate::poly::Poly;
    use crate::window::{abs_pow, sample_window, WindowSpec};
    use crate::zak::zak_forward;
    use crate::zibulski::{build_w, ZakSystem};

    fn system(grid: &GridSpec, specs: &[WindowSpec]) -> ZakSystem {
        let zaks = specs.iter().map(|s| zak_forward(&sample_window(s, grid).unwrap(), grid).unwrap()).collect();
        ZakSystem::new(zaks, &grid.params).unwrap()
    }

    fn max_diff(a: &PeriodicSignal, b: &PeriodicSignal) -> f64 {
        a.samples.iter().zip(&b.samples).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn identity_inverse() {
        let w = WField::identity(8, 4, 2, 3);
        let inv = invert_w(&w, &DualOptions::default()).unwrap();
        assert!((inv.l1_norm - 1.5).abs() < 1e-14);
        assert_eq!(inv.excluded_fraction, 0.0);
        assert!(inv.residual < 1e-15);
    }

    #[test]
    fn orthonormal_dual_is_primal() {
        let g = make_grid(1, 1, 1, 16, 16, 1).unwrap();
        let sys = system(&g, &[WindowSpec::indicator(0, 1)]);
        let w = build_w(&sys.build_g().unwrap());
        let inv = invert_w(&w, &DualOptions::default()).unwrap();
        for (m, n) in [(0, 0), (2, -1), (-3, 4)] {
            let d = dual_window(&inv, TrigIndex::new(0, 0, m, n), &sys).unwrap();
            let atom = sys.atom(0, m, n, d.samples.first_period);
            assert!(max_diff(&d.samples, &atom) < 1e-13);
        }
        let gram = biorthogonality_gram(&sys, &inv, 3).unwrap();
        assert!(gram.max_deviation() < 1e-10);
    }

    #[test]
    fn example_dual_closed_form() {
        let g = make_grid(2, 1, 2, 32, 32, 1).unwrap();
        let polys = [Poly::parse("x-1/3").unwrap(), Poly::parse("x-2/3").unwrap()];
        let a = [0.5, -0.5];
        let specs: Vec<_> = (0..2).map(|l| WindowSpec::power(-(l as i64), polys[l].clone(), a[l] / 2.0)).collect();
        let sys = system(&g, &specs);
        let w = build_w(&sys.build_g().unwrap());
        let inv = invert_w(&w, &DualOptions::default()).unwrap();
        for l in 0..2 {
            let d = dual_window(&inv, TrigIndex::new(l, 0, 0, 0), &sys).unwrap();
            for i in 0..d.samples.samples.len() as i64 {
                let abs = d.samples.first_period * 32 + i;
                let x = abs as f64 / 32.0;
                let expect = if abs.div_euclid(32) == -(l as i64) {
                    abs_pow(polys[l].eval(x + l as f64), -a[l] / 2.0)
                } else {
                    0.0
                };
                assert!((d.samples.at(abs) - expect).norm() < 1e-12, "l={l} x={x}");
            }
        }
    }

    #[test]
    fn covariance_matches_direct_formula() {
        let g = make_grid(3, 2, 1, 24, 18, 2).unwrap();
        let spec = WindowSpec::Piecewise {
            origin: 0,
            pieces: vec![crate::window::Piece { interval: [0.0, 2.0], poly: Poly::parse("1 + x(2-x)").unwrap(), exponent: 1.0 }],
        };
        let sys = system(&g, &[spec]);
        let w = build_w(&sys.build_g().unwrap());
        let inv = invert_w(&w, &DualOptions::default()).unwrap();
        for r in 0..2 {
            let base = dual_window(&inv, TrigIndex::new(0, r, 0, 0), &sys).unwrap();
            for (m, n) in [(1, 0), (0, 1), (-2, 3), (3, -2)] {
                let direct = dual_window(&inv, TrigIndex::new(0, r, m, n), &sys).unwrap();
                let cov = dual_by_covariance(&base.samples, m, n, 3);
                assert!(max_diff(&direct.samples, &cov) < 1e-8);
            }
        }
        let gram = biorthogonality_gram(&sys, &inv, 2).unwrap();
        assert!(gram.max_deviation() < 1e-10, "{}", gram.max_deviation());
    }

    #[test]
    fn dual_norm_identity() {
        let g = make_grid(2, 1, 2, 32, 16, 1).unwrap();
        let specs: Vec<_> = (0..2)
            .map(|l| WindowSpec::power(-(l as i64), Poly::parse(if l == 0 { "x-1/3" } else { "x+1" }).unwrap(), 0.3))
            .collect();
        let sys = system(&g, &specs);
        let w = build_w(&sys.build_g().unwrap());
        let inv = invert_w(&w, &DualOptions::default()).unwrap();
        for a in 0..2 {
            let d = dual_window(&inv, TrigIndex::new(a, 0, 1, -1), &sys).unwrap();
            let lhs = d.zak_vector.weighted_norm_sqr(&w).unwrap();
            let diag: f64 = (0..inv.inv.nodes()).map(|node| inv.inv.entry(node, a, a).re).sum::<f64>() * inv.inv.cell_area();
            assert!((lhs - 4.0 * diag).abs() < 1e-10 * lhs);
            assert!((d.samples.l2_norm_sqr() - lhs).abs() < 1e-10 * lhs);
        }
    }

    #[test]
    fn perturbed_dual_is_detected() {
        let g = make_grid(1, 1, 1, 16, 16, 1).unwrap();
        let spec = WindowSpec::power(0, Poly::parse("1 + x").unwrap(), 1.0);
        let sys = system(&g, &[spec]);
        let w = build_w(&sys.build_g().unwrap());
        let inv = invert_w(&w, &DualOptions::default()).unwrap();
        let mut base = dual_window(&inv, TrigIndex::new(0, 0, 0, 0), &sys).unwrap().samples;
        let atom = sys.atom(0, 0, 0, base.first_period);
        for (b, a) in base.samples.iter_mut().zip(&atom.samples) {
            *b += a * 0.01;
        }
        let gram = gram_from_bases(&sys, &[base], 1).unwrap();
        let norm_sqr = atom.l2_norm_sqr();
        let s = gram.indices.len();
        let centre = gram.indices.iter().position(|i| i.m == 0 && i.n == 0).unwrap();
        assert!((gram.values[centre * s + centre] - (1.0 + 0.01 * norm_sqr)).norm() < 1e-10);
        // off-delta entries carry 0.01 ⟨g, g_{m,n}⟩
        for (k, idx) in gram.indices.iter().enumerate() {
            if k == centre {
                continue;
            }
            let other = sys.atom(0, idx.m, idx.n, atom.first_period);
            let expect = atom.inner(&other).unwrap() * 0.01;
            assert!((gram.values[centre * s + k] - expect).norm() < 1e-10);
        }
        assert!(gram.max_deviation() >= 0.01 * norm_sqr - 1e-12);
    }

    #[test]
    fn oversampled_rank_deficiency_has_no_dual() {
        // Lq = 2 > p = 1: W = G G* has rank one everywhere
        let g = make_grid(1, 1, 2, 16, 16, 1).unwrap();
        let sys = system(&g, &[WindowSpec::indicator(0, 1), WindowSpec::power(0, Poly::parse("1+x").unwrap(), 1.0)]);
        let w = build_w(&sys.build_g().unwrap());
        assert!(matches!(invert_w(&w, &DualOptions::default()), Err(GaborError::DualNonexistence(_))));
    }

    #[test]
    fn l1_growth_detection() {
        let opts = DualOptions::default();
        let make = |mx: usize, a: f64| {
            invert_w_unchecked(&WField::scalar_x(mx, 1, 1, |x| abs_pow(x - 1.0 / 3.0, a)), 1e-12)
        };
        assert!(check_l1_stability(&make(64, 0.5), &make(128, 0.5), &opts).unwrap() < 1.1);
        assert!(matches!(check_l1_stability(&make(64, 2.0), &make(128, 2.0), &opts), Err(GaborError::DualNonexistence(_))));
    }

    #[test]
    fn range_beyond_nyquist() {
        let g = make_grid(1, 1, 1, 8, 8, 1).unwrap();
        let sys = system(&g, &[WindowSpec::indicator(0, 1)]);
        let w = build_w(&sys.build_g().unwrap());
        let inv = invert_w(&w, &DualOptions::default()).unwrap();
        assert!(matches!(biorthogonality_gram(&sys, &inv, 4), Err(GaborError::Resolution(_))));
        assert!(biorthogonality_gram(&sys, &inv, 3).is_ok());
    }
}
