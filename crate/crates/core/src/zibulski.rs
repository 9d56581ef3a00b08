//! The Zibulski–Zeevi matrix `G`, the weight `W` and the synthesis map `ZZ`.
//!
//! Rows of `G` are indexed by `a = ℓq + r`, columns by `k ∈ [0, p)`:
//! `G_{a,k}(x,u) = Zg^ℓ(x − r·p/q, u + k/p)`.
//!
//! The weight is stored as `W = conj(G)·Gᵀ`, i.e. `W_{ab} = Σ_k conj(G_{ak}) G_{bk}`,
//! which is the entrywise conjugate of `G G*`. With this orientation
//! `‖ZZ(τ)‖² = ∫ ⟨Wτ, τ⟩` and the dual formula uses `W⁻¹` directly. For real
//! weights the two orientations coincide.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::lattice::{GridSpec, LatticeParams};
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::zak::{phase, zak_shift_eval, zak_shift_full, PeriodicSignal, ZakField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `Lq × p` matrices at each `T_p` node, node-major, row-major inside.
#[derive(Debug, Clone, PartialEq)]
pub struct GField {
    pub grid: GridSpec,
    pub data: Vec<Complex64>,
}

impl GField {
    pub fn rows(&self) -> usize {
        self.grid.params.block_size()
    }

    pub fn cols(&self) -> usize {
        self.grid.params.p
    }

    pub fn nodes(&self) -> usize {
        self.grid.tp_nodes()
    }

    pub fn node(&self, idx: usize) -> CMat {
        let (r, c) = (self.rows(), self.cols());
        let base = idx * r * c;
        DMatrix::from_fn(r, c, |i, k| self.data[base + i * c + k])
    }
}

/// Hermitian matrices of size `n` on an `mx × nu` grid covering `T_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WField {
    pub mx: usize,
    pub nu: usize,
    pub p: usize,
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl WField {
    pub fn from_fn(mx: usize, nu: usize, p: usize, n: usize, mut f: impl FnMut(usize, usize) -> CMat) -> Self {
        let mut data = Vec::with_capacity(mx * nu * n * n);
        for j in 0..mx {
            for k in 0..nu {
                let m = f(j, k);
                for r in 0..n {
                    for c in 0..n {
                        data.push(m[(r, c)]);
                    }
                }
            }
        }
        WField { mx, nu, p, n, data }
    }

    /// A `1 × 1` field from real samples `w[j * nu + k]`.
    pub fn scalar(mx: usize, nu: usize, p: usize, w: &[f64]) -> Self {
        WField { mx, nu, p, n: 1, data: w.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    /// A `1 × 1` field depending on `x` only.
    pub fn scalar_x(mx: usize, nu: usize, p: usize, w: impl Fn(f64) -> f64) -> Self {
        let vals: Vec<f64> = (0..mx).flat_map(|j| std::iter::repeat_n(w(j as f64 / mx as f64), nu)).collect();
        WField::scalar(mx, nu, p, &vals)
    }

    pub fn identity(mx: usize, nu: usize, p: usize, n: usize) -> Self {
        WField::from_fn(mx, nu, p, n, |_, _| CMat::identity(n, n))
    }

    pub fn nodes(&self) -> usize {
        self.mx * self.nu
    }

    /// Quadrature weight of one node: `1/(mx · nu · p)`.
    pub fn cell_area(&self) -> f64 {
        1.0 / (self.mx * self.nu * self.p) as f64
    }

    pub fn entry(&self, node: usize, r: usize, c: usize) -> Complex64 {
        self.data[node * self.n * self.n + r * self.n + c]
    }

    pub fn node_slice(&self, node: usize) -> &[Complex64] {
        let s = self.n * self.n;
        &self.data[node * s..(node + 1) * s]
    }

    pub fn node(&self, node: usize) -> CMat {
        let n = self.n;
        DMatrix::from_fn(n, n, |r, c| self.entry(node, r, c))
    }

    pub fn at(&self, j: usize, k: usize) -> CMat {
        self.node(j * self.nu + k)
    }

    pub fn scaled(&self, c: f64) -> WField {
        WField { data: self.data.iter().map(|z| z * c).collect(), ..self.clone() }
    }

    /// True when every node in a column `j` carries the same matrix.
    pub fn is_u_constant(&self) -> bool {
        let s = self.n * self.n;
        (0..self.mx).all(|j| {
            let first = &self.data[j * self.nu * s..(j * self.nu + 1) * s];
            (1..self.nu).all(|k| {
                let node = (j * self.nu + k) * s;
                self.data[node..node + s].iter().zip(first).all(|(a, b)| (a - b).norm() <= 1e-14 * (1.0 + b.norm()))
            })
        })
    }

    /// Off-diagonal entries vanish up to rounding relative to the diagonal.
    pub fn is_diagonal(&self) -> bool {
        let n = self.n;
        (0..self.nodes()).all(|node| {
            let scale = (0..n).map(|r| self.entry(node, r, r).norm()).fold(0.0, f64::max);
            (0..n).all(|r| (0..n).all(|c| r == c || self.entry(node, r, c).norm() <= 1e-14 * (1.0 + scale)))
        })
    }

    /// Per-node eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<Vec<f64>> {
        if self.is_diagonal() {
            return (0..self.nodes())
                .map(|node| {
                    let mut v: Vec<f64> = (0..self.n).map(|r| self.entry(node, r, r).re).collect();
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect();
        }
        (0..self.nodes()).map(|node| hermitian_eigenvalues(&self.node(node))).collect()
    }

    /// 2-D coefficients `Ŵ_{ab}(μ, ν) = (1/(mx·nu)) Σ W_{ab}(j,k) e^{−2πiμj/mx} e^{2πiνk/nu}`,
    /// stored per entry as a full `mx × nu` DFT array (index `μ mod mx`, `ν mod nu`).
    pub fn coefficients(&self) -> Vec<Vec<Complex64>> {
        let s = self.n * self.n;
        (0..s)
            .map(|e| {
                let plane: Vec<Complex64> = (0..self.nodes()).map(|node| self.data[node * s + e]).collect();
                analyze_plane(&plane, self.mx, self.nu)
            })
            .collect()
    }
}

/// `c(μ,ν) = (1/(mx·nu)) Σ_{j,k} f(j,k) e^{−2πiμj/mx} e^{+2πiνk/nu}`.
pub(crate) fn analyze_plane(f: &[Complex64], mx: usize, nu: usize) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(mx);
    let iu = planner.plan_fft_inverse(nu);
    let mut data = f.to_vec();
    for row in data.chunks_mut(nu) {
        iu.process(row);
    }
    let mut col = vec![ZERO; mx];
    for k in 0..nu {
        for j in 0..mx {
            col[j] = data[j * nu + k];
        }
        fx.process(&mut col);
        for j in 0..mx {
            data[j * nu + k] = col[j];
        }
    }
    let scale = 1.0 / (mx * nu) as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    data
}

/// Inverse of [`analyze_plane`]: `f(j,k) = Σ c(μ,ν) e^{2πiμj/mx} e^{−2πiνk/nu}`.
pub(crate) fn synthesize_plane(c: &[Complex64], mx: usize, nu: usize) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let ix = planner.plan_fft_inverse(mx);
    let fu = planner.plan_fft_forward(nu);
    let mut data = c.to_vec();
    for row in data.chunks_mut(nu) {
        fu.process(row);
    }
    let mut col = vec![ZERO; mx];
    for k in 0..nu {
        for j in 0..mx {
            col[j] = data[j * nu + k];
        }
        ix.process(&mut col);
        for j in 0..mx {
            data[j * nu + k] = col[j];
        }
    }
    data
}

/// `τ(x,u) ∈ ℂ^{Lq}` at each `T_p` node, component `a = ℓq + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZakDomainVector {
    pub mx: usize,
    pub nu: usize,
    pub p: usize,
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl ZakDomainVector {
    pub fn zeros(mx: usize, nu: usize, p: usize, n: usize) -> Self {
        ZakDomainVector { mx, nu, p, n, data: vec![ZERO; mx * nu * n] }
    }

    pub fn for_grid(grid: &GridSpec) -> Self {
        ZakDomainVector::zeros(grid.mx, grid.nu(), grid.params.p, grid.params.block_size())
    }

    pub fn get(&self, j: usize, k: usize, a: usize) -> Complex64 {
        self.data[(j * self.nu + k) * self.n + a]
    }

    pub fn set(&mut self, j: usize, k: usize, a: usize, v: Complex64) {
        self.data[(j * self.nu + k) * self.n + a] = v;
    }

    /// Component `a` as an `mx × nu` plane.
    pub fn component(&self, a: usize) -> Vec<Complex64> {
        self.data.iter().skip(a).step_by(self.n).copied().collect()
    }

    pub fn set_component(&mut self, a: usize, plane: &[Complex64]) {
        for (node, v) in plane.iter().enumerate() {
            self.data[node * self.n + a] = *v;
        }
    }

    /// `E_{m,n}(x,u) e_a`.
    pub fn exponential(mx: usize, nu: usize, p: usize, size: usize, a: usize, m: i64, n: i64) -> Self {
        let mut t = ZakDomainVector::zeros(mx, nu, p, size);
        for j in 0..mx {
            for k in 0..nu {
                t.set(j, k, a, modulation(m, n, j, k, mx, nu));
            }
        }
        t
    }

    pub fn sub(&self, other: &ZakDomainVector) -> ZakDomainVector {
        ZakDomainVector { data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(), ..self.clone() }
    }

    pub fn max_abs_diff(&self, other: &ZakDomainVector) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    /// `∫_{T_p} ⟨Wτ, τ⟩` by the rectangle rule.
    pub fn weighted_norm_sqr(&self, w: &WField) -> Result<f64> {
        self.weighted_inner(self, w).map(|z| z.re)
    }

    /// `∫_{T_p} ⟨Wτ, σ⟩ = ∫ Σ_{a,b} W_{ba} τ_a conj(σ_b)`.
    pub fn weighted_inner(&self, sigma: &ZakDomainVector, w: &WField) -> Result<Complex64> {
        if w.mx != self.mx || w.nu != self.nu || w.n != self.n || sigma.data.len() != self.data.len() {
            return Err(GaborError::Shape("vector and weight live on different grids".into()));
        }
        let n = self.n;
        let mut total = ZERO;
        for node in 0..self.mx * self.nu {
            let t = &self.data[node * n..(node + 1) * n];
            let s = &sigma.data[node * n..(node + 1) * n];
            let wm = w.node_slice(node);
            for b in 0..n {
                let mut acc = ZERO;
                for a in 0..n {
                    acc += wm[b * n + a] * t[a];
                }
                total += acc * s[b].conj();
            }
        }
        Ok(total * w.cell_area())
    }

    /// Unweighted `∫_{T_p} |τ|²`.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / (self.mx * self.nu * self.p) as f64
    }
}

/// `E_{m,n}(x_j, u_k) = e^{2πimj/mx} e^{−2πink/nu}` on the `T_p` grid.
pub fn modulation(m: i64, n: i64, j: usize, k: usize, mx: usize, nu: usize) -> Complex64 {
    let a = (m * j as i64).rem_euclid(mx as i64) as f64 / mx as f64;
    let b = (n * k as i64).rem_euclid(nu as i64) as f64 / nu as f64;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (a - b))
}

/// The generators' Zak fields together with their `r·p/q` shifts, cached on
/// the full torus grid for synthesis.
#[derive(Debug, Clone)]
pub struct ZakSystem {
    pub grid: GridSpec,
    pub zaks: Vec<ZakField>,
    shifted: Vec<Vec<Complex64>>,
}

impl ZakSystem {
    pub fn new(zaks: Vec<ZakField>, params: &LatticeParams) -> Result<Self> {
        if zaks.len() != params.l {
            return Err(GaborError::Shape(format!("expected L={} Zak fields, got {}", params.l, zaks.len())));
        }
        let grid = zaks[0].grid;
        if grid.params != *params || zaks.iter().any(|z| z.grid != grid) {
            return Err(GaborError::Shape("Zak fields must share one grid with the lattice".into()));
        }
        let q = params.q;
        let shifted = (0..params.block_size()).map(|a| zak_shift_full(&zaks[a / q], a % q)).collect();
        Ok(ZakSystem { grid, zaks, shifted })
    }

    pub fn params(&self) -> LatticeParams {
        self.grid.params
    }

    pub fn build_g(&self) -> Result<GField> {
        build_g(&self.zaks, &self.grid.params)
    }

    /// `ZZ(τ)`: inverse Zak transform of `Σ_a τ_a(x,u) Zg^ℓ(x − r p/q, u)` with
    /// `τ` extended `1/p`-periodically in `u`.
    pub fn synthesize(&self, tau: &ZakDomainVector, first_period: i64) -> Result<PeriodicSignal> {
        let g = &self.grid;
        let (mx, ku, nu, n) = (g.mx, g.ku, g.nu(), g.params.block_size());
        if tau.mx != mx || tau.nu != nu || tau.n != n {
            return Err(GaborError::Shape(format!(
                "τ is {}x{}x{}, system expects {mx}x{nu}x{n}",
                tau.mx, tau.nu, tau.n
            )));
        }
        let mut f = vec![ZERO; mx * ku];
        for j in 0..mx {
            for k in 0..ku {
                let t = &tau.data[(j * nu + k % nu) * n..(j * nu + k % nu + 1) * n];
                let mut acc = ZERO;
                for a in 0..n {
                    acc += t[a] * self.shifted[a][j * ku + k];
                }
                f[j * ku + k] = acc;
            }
        }
        let z = ZakField { grid: *g, origin: first_period, values: f };
        Ok(crate::zak::zak_inverse_periodic(&z, first_period))
    }

    /// Time-domain samples of the atom `g^ℓ_{m, nq+r}(x) = e^{2πimx} g^ℓ(x − (nq+r)p/q)`,
    /// on the same cyclic window as [`ZakSystem::synthesize`].
    pub fn atom(&self, a: usize, m: i64, n: i64, first_period: i64) -> PeriodicSignal {
        let g = &self.grid;
        let (mx, ku, q) = (g.mx, g.ku, g.params.q);
        let z = &self.zaks[a / q];
        let base = crate::zak::zak_inverse_periodic(z, z.origin);
        let shift = n * (g.params.p * mx) as i64 + g.shift_steps(a % q) as i64;
        let mut samples = vec![ZERO; mx * ku];
        let start = first_period * mx as i64;
        for (i, s) in samples.iter_mut().enumerate() {
            let abs = start + i as i64;
            let v = base.at(abs - shift);
            if v != ZERO {
                *s = v * phase((m * abs).rem_euclid(mx as i64), mx);
            }
        }
        PeriodicSignal { mx, first_period, samples }
    }
}

pub fn build_g(zaks: &[ZakField], params: &LatticeParams) -> Result<GField> {
    if zaks.len() != params.l {
        return Err(GaborError::Shape(format!("expected L={} Zak fields, got {}", params.l, zaks.len())));
    }
    let grid = zaks[0].grid;
    if grid.params != *params || zaks.iter().any(|z| z.grid != grid) {
        return Err(GaborError::Shape("Zak fields must share one grid with the lattice".into()));
    }
    let (p, q) = (params.p, params.q);
    let rows = params.block_size();
    let nodes = grid.tp_nodes();
    let mut data = vec![ZERO; nodes * rows * p];
    for a in 0..rows {
        for k in 0..p {
            let f = zak_shift_eval(&zaks[a / q], a % q, k)?;
            for (node, v) in f.into_iter().enumerate() {
                data[node * rows * p + a * p + k] = v;
            }
        }
    }
    Ok(GField { grid, data })
}

/// `W = conj(G) Gᵀ`, symmetrized.
pub fn build_w(g: &GField) -> WField {
    let (rows, cols) = (g.rows(), g.cols());
    let mut data = Vec::with_capacity(g.nodes() * rows * rows);
    for node in 0..g.nodes() {
        let m = &g.data[node * rows * cols..(node + 1) * rows * cols];
        let mut w = vec![ZERO; rows * rows];
        for a in 0..rows {
            for b in 0..rows {
                let mut acc = ZERO;
                for k in 0..cols {
                    acc += m[a * cols + k].conj() * m[b * cols + k];
                }
                w[a * rows + b] = acc;
            }
        }
        for a in 0..rows {
            w[a * rows + a].im = 0.0;
            for b in a + 1..rows {
                let avg = (w[a * rows + b] + w[b * rows + a].conj()) * 0.5;
                w[a * rows + b] = avg;
                w[b * rows + a] = avg.conj();
            }
        }
        data.extend(w);
    }
    WField { mx: g.grid.mx, nu: g.grid.nu(), p: g.grid.params.p, n: rows, data }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletenessReport {
    /// Smallest `p`-th eigenvalue of `G*G` over the grid.
    pub min_sigma_p: f64,
    pub full_rank_fraction: f64,
    pub tolerance: f64,
}

/// Rank of `G*G` per node, at tolerance `tol · max λ_max(G*G)`.
pub fn completeness_rank(g: &GField, tol: f64) -> CompletenessReport {
    let p = g.cols();
    let eigs: Vec<Vec<f64>> = (0..g.nodes())
        .map(|node| {
            let m = g.node(node);
            hermitian_eigenvalues(&(m.adjoint() * m))
        })
        .collect();
    let global_max = eigs.iter().filter_map(|e| e.last().copied()).fold(0.0f64, f64::max);
    let threshold = tol * global_max;
    let mut min_sigma = f64::INFINITY;
    let mut full = 0usize;
    for e in &eigs {
        let s = e[0].max(0.0);
        min_sigma = min_sigma.min(s);
        if global_max > 0.0 && s > threshold && e.len() == p {
            full += 1;
        }
    }
    CompletenessReport { min_sigma_p: min_sigma, full_rank_fraction: full as f64 / eigs.len() as f64, tolerance: tol }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EigenExtremes {
    pub mx: usize,
    pub nu: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub row_norm_min: f64,
    pub row_norm_max: f64,
}

pub fn eigen_extremes(w: &WField) -> EigenExtremes {
    let eigs = w.eigenvalues();
    let lambda_min = eigs.iter().map(|e| e[0]).fold(f64::INFINITY, f64::min);
    let lambda_max = eigs.iter().map(|e| *e.last().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let mut row_norm_min = f64::INFINITY;
    let mut row_norm_max = 0.0f64;
    for node in 0..w.nodes() {
        for a in 0..w.n {
            // row `a` of G has squared norm W_aa
            let r = w.entry(node, a, a).re.max(0.0).sqrt();
            row_norm_min = row_norm_min.min(r);
            row_norm_max = row_norm_max.max(r);
        }
    }
    EigenExtremes { mx: w.mx, nu: w.nu, lambda_min, lambda_max, row_norm_min, row_norm_max }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RieszDiagnostics {
    pub coarse: EigenExtremes,
    pub fine: EigenExtremes,
    pub threshold: f64,
    pub unbounded_above: bool,
    pub not_bounded_below: bool,
}

impl RieszDiagnostics {
    pub fn flagged(&self) -> bool {
        self.unbounded_above || self.not_bounded_below
    }
}

/// Grid extrema at two resolutions. A bound is flagged when it moves by more
/// than `threshold` under refinement, or (lower bound) when it is already
/// below `eps_reg · λ_max`. These are heuristics, not certificates.
pub fn riesz_diagnostics(coarse: &WField, fine: &WField, threshold: f64, eps_reg: f64) -> RieszDiagnostics {
    let c = eigen_extremes(coarse);
    let f = eigen_extremes(fine);
    let unbounded_above = f.lambda_max > threshold * c.lambda_max;
    let not_bounded_below = f.lambda_min <= eps_reg * f.lambda_max
        || c.lambda_min <= eps_reg * c.lambda_max
        || c.lambda_min > threshold * f.lambda_min;
    RieszDiagnostics { coarse: c, fine: f, threshold, unbounded_above, not_bounded_below }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;
    use crate::poly::Poly;
    use crate::window::{sample_window, SampledWindow, WindowSpec};
    use crate::zak::zak_forward;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_zak(rng: &mut ChaCha8Rng, grid: &GridSpec, k: usize) -> ZakField {
        let w = SampledWindow {
            mx: grid.mx,
            origin: 0,
            samples: (0..grid.mx * k).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        };
        zak_forward(&w, grid).unwrap()
    }

    #[test]
    fn orthonormal_g_is_one() {
        let g = make_grid(1, 1, 1, 8, 8, 1).unwrap();
        let z = zak_forward(&sample_window(&WindowSpec::indicator(0, 1), &g).unwrap(), &g).unwrap();
        let gf = build_g(&[z], &g.params).unwrap();
        assert!(gf.data.iter().all(|v| (v - 1.0).norm() < 1e-15));
        let w = build_w(&gf);
        assert!(w.data.iter().all(|v| (v - 1.0).norm() < 1e-15));
    }

    #[test]
    fn example_g_closed_form() {
        let g = make_grid(2, 1, 2, 16, 16, 1).unwrap();
        let polys = [Poly::parse("x-0.5").unwrap(), Poly::parse("x(x-1)").unwrap()];
        let a = [0.5, -1.0 / 3.0];
        let zaks: Vec<ZakField> = (0..2)
            .map(|l| {
                let spec = WindowSpec::power(-(l as i64), polys[l].clone(), a[l] / 2.0);
                zak_forward(&sample_window(&spec, &g).unwrap(), &g).unwrap()
            })
            .collect();
        let gf = build_g(&zaks, &g.params).unwrap();
        let nu = g.nu();
        for j in 0..16 {
            for kp in 0..nu {
                let m = gf.node(j * nu + kp);
                let x = j as f64 / 16.0;
                let u = kp as f64 / 16.0;
                for l in 0..2 {
                    for k in 0..2 {
                        let mag = crate::window::abs_pow(polys[l].eval(x), a[l] / 2.0);
                        let expect = Complex64::from_polar(mag, 2.0 * PI * l as f64 * (u + k as f64 / 2.0));
                        assert!((m[(l, k)] - expect).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn g_matches_direct_zak_for_rational_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = make_grid(2, 3, 1, 12, 8, 2).unwrap();
        let z = random_zak(&mut rng, &g, 2);
        let gf = build_g(std::slice::from_ref(&z), &g.params).unwrap();
        let nu = g.nu();
        for j in 0..12i64 {
            for kp in 0..nu {
                let m = gf.node(j as usize * nu + kp);
                for r in 0..3 {
                    for k in 0..2 {
                        let expect = z.eval_shifted(j - (r * 2 * 12 / 3) as i64, (kp + k * nu) as i64);
                        assert!((m[(r, k)] - expect).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn w_entry_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = make_grid(2, 3, 2, 12, 8, 2).unwrap();
        let zaks = vec![random_zak(&mut rng, &g, 2), random_zak(&mut rng, &g, 2)];
        let gf = build_g(&zaks, &g.params).unwrap();
        let w = build_w(&gf);
        for node in 0..gf.nodes() {
            let m = gf.node(node);
            for a in 0..6 {
                for b in 0..6 {
                    let mut s = ZERO;
                    for k in 0..2 {
                        s += m[(a, k)] * m[(b, k)].conj();
                    }
                    // stored orientation is the conjugate of (GG*)_{ab}
                    assert!((w.entry(node, a, b) - s.conj()).norm() < 1e-12);
                }
            }
            let eig = hermitian_eigenvalues(&w.node(node));
            assert!(eig[0] > -1e-10);
        }
    }

    #[test]
    fn shape_errors() {
        let g1 = make_grid(1, 1, 2, 8, 8, 1).unwrap();
        let g2 = make_grid(1, 1, 2, 16, 8, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let zaks = vec![random_zak(&mut rng, &g1, 1), random_zak(&mut rng, &g2, 1)];
        assert!(matches!(build_g(&zaks, &g1.params), Err(GaborError::Shape(_))));
        assert!(matches!(build_g(&zaks[..1], &g1.params), Err(GaborError::Shape(_))));
    }

    #[test]
    fn completeness_cases() {
        let g = make_grid(1, 1, 1, 8, 8, 1).unwrap();
        let zero = ZakField { grid: g, origin: 0, values: vec![ZERO; 64] };
        let rep = completeness_rank(&build_g(&[zero], &g.params).unwrap(), 1e-9);
        assert_eq!(rep.full_rank_fraction, 0.0);

        let g = make_grid(2, 1, 1, 8, 8, 1).unwrap();
        let z = zak_forward(&sample_window(&WindowSpec::indicator(0, 1), &g).unwrap(), &g).unwrap();
        let rep = completeness_rank(&build_g(&[z], &g.params).unwrap(), 1e-9);
        assert_eq!(rep.full_rank_fraction, 0.0);
        assert!(rep.min_sigma_p.abs() < 1e-12);

        let g = make_grid(1, 1, 1, 8, 8, 1).unwrap();
        let z = zak_forward(&sample_window(&WindowSpec::indicator(0, 1), &g).unwrap(), &g).unwrap();
        let rep = completeness_rank(&build_g(&[z], &g.params).unwrap(), 1e-9);
        assert_eq!(rep.full_rank_fraction, 1.0);
    }

    #[test]
    fn riesz_flags() {
        let id = WField::identity(8, 8, 1, 2);
        let d = riesz_diagnostics(&id, &WField::identity(16, 16, 1, 2), 1.25, 1e-12);
        assert!(!d.flagged());
        assert_eq!((d.fine.lambda_min, d.fine.lambda_max), (1.0, 1.0));

        // |x - 1/2|^{1/2} has a zero on the grid
        let c = WField::scalar_x(64, 4, 1, |x| (x - 0.5f64).abs().sqrt());
        let f = WField::scalar_x(128, 4, 1, |x| (x - 0.5f64).abs().sqrt());
        assert!(riesz_diagnostics(&c, &f, 1.25, 1e-12).not_bounded_below);

        // |x - 1/3|^{-1/2}: off-grid pole, maximum grows like sqrt(Mx)
        let w = |x: f64| crate::window::abs_pow(x - 1.0 / 3.0, -0.5);
        let c = WField::scalar_x(64, 4, 1, w);
        let f = WField::scalar_x(128, 4, 1, w);
        let d = riesz_diagnostics(&c, &f, 1.25, 1e-12);
        assert!(d.unbounded_above);
        let closed = |mx: usize| (0..mx).map(|j| w(j as f64 / mx as f64)).fold(0.0, f64::max);
        assert!((d.coarse.lambda_max - closed(64)).abs() < 1e-12);
        assert!((d.fine.lambda_max - closed(128)).abs() < 1e-12);
    }

    fn example_system(grid: &GridSpec, seed: u64) -> ZakSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zaks = (0..grid.params.l).map(|_| random_zak(&mut rng, grid, grid.k)).collect();
        ZakSystem::new(zaks, &grid.params).unwrap()
    }

    #[test]
    fn synthesis_of_exponential_is_atom() {
        let g = make_grid(2, 3, 2, 12, 8, 2).unwrap();
        let sys = example_system(&g, 9);
        for (a, m, n) in [(0, 0, 0), (1, 2, -1), (4, -3, 1), (5, 1, 2)] {
            let tau = ZakDomainVector::exponential(12, 4, 2, 6, a, m, n);
            let f = sys.synthesize(&tau, -3).unwrap();
            let atom = sys.atom(a, m, n, -3);
            let err = f.samples.iter().zip(&atom.samples).fold(0.0f64, |e, (x, y)| e.max((x - y).norm()));
            assert!(err < 1e-12, "a={a} m={m} n={n}: {err}");
        }
    }

    #[test]
    fn synthesis_is_isometric() {
        let g = make_grid(2, 3, 2, 12, 8, 2).unwrap();
        let sys = example_system(&g, 10);
        let w = build_w(&sys.build_g().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tau = ZakDomainVector::for_grid(&g);
        tau.data.iter_mut().for_each(|v| *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let lhs = sys.synthesize(&tau, 0).unwrap().l2_norm_sqr();
        let rhs = tau.weighted_norm_sqr(&w).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        let zero = sys.synthesize(&ZakDomainVector::for_grid(&g), 0).unwrap();
        assert!(zero.samples.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn coefficient_planes_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f: Vec<Complex64> = (0..48).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let c = analyze_plane(&f, 8, 6);
        let back = synthesize_plane(&c, 8, 6);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
        // E_{2,1}: coefficient 1 at (2, 1)
        let e: Vec<Complex64> = (0..8).flat_map(|j| (0..6).map(move |k| modulation(2, 1, j, k, 8, 6))).collect();
        let c = analyze_plane(&e, 8, 6);
        assert!((c[2 * 6 + 1] - 1.0).norm() < 1e-14);
        assert!(c.iter().enumerate().all(|(i, v)| i == 13 || v.norm() < 1e-14));
    }
}
