//! Partial sums in `L²(T_p, W)` and their operator norms.
//!
//! Coefficients follow `c_{a,m,n} = p⟨τ_a, E_{m,n}⟩_{L²(T_p)}`, so that
//! `τ = Σ c_{a,m,n} E_{m,n} e_a` for band-limited `τ`.
//!
//! Norms are computed on `V_B = span{E_{m,n} e_a : |m|, |n| ≤ B}` with the
//! Gram matrix `G[(b,m',n'),(a,m,n)] = Ŵ_{ba}(m'−m, n'−n)`. A partial sum is a
//! coordinate projection `P` there, and `‖P‖_G` is the largest eigenvalue of
//! `P G P v = λ G v`, square-rooted.

use std::collections::{BTreeMap, HashSet};

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duality::{DualOptions, WInvField};
use crate::error::{GaborError, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, symmetrize, CMat};
use crate::ordering::{lambda_enumeration, lift_enumeration, Decisions, LiftedEnumeration};
use crate::zibulski::{analyze_plane, modulation, synthesize_plane, WField, ZakDomainVector, ZakSystem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const POWER_BLOCK: usize = 8;

/// `c[a][m][n]` for `|m| ≤ n1`, `|n| ≤ n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientArray {
    pub n: usize,
    pub n1: i64,
    pub n2: i64,
    pub data: Vec<Complex64>,
}

impl CoefficientArray {
    pub fn zeros(n: usize, n1: i64, n2: i64) -> Self {
        CoefficientArray { n, n1, n2, data: vec![ZERO; n * ((2 * n1 + 1) * (2 * n2 + 1)) as usize] }
    }

    fn offset(&self, a: usize, m: i64, n: i64) -> Option<usize> {
        if a >= self.n || m.abs() > self.n1 || n.abs() > self.n2 {
            return None;
        }
        let w = (2 * self.n2 + 1) as usize;
        let h = (2 * self.n1 + 1) as usize;
        Some(a * h * w + (m + self.n1) as usize * w + (n + self.n2) as usize)
    }

    pub fn get(&self, a: usize, m: i64, n: i64) -> Complex64 {
        self.offset(a, m, n).map_or(ZERO, |i| self.data[i])
    }

    pub fn set(&mut self, a: usize, m: i64, n: i64, v: Complex64) -> Result<()> {
        let i = self
            .offset(a, m, n)
            .ok_or_else(|| GaborError::Index(format!("coefficient ({a}, {m}, {n}) outside the array")))?;
        self.data[i] = v;
        Ok(())
    }

    /// Keep only entries satisfying `keep`.
    pub fn masked(&self, keep: impl Fn(usize, i64, i64) -> bool) -> CoefficientArray {
        let mut out = CoefficientArray::zeros(self.n, self.n1, self.n2);
        for a in 0..self.n {
            for m in -self.n1..=self.n1 {
                for n in -self.n2..=self.n2 {
                    if keep(a, m, n) {
                        let i = self.offset(a, m, n).unwrap();
                        out.data[i] = self.data[i];
                    }
                }
            }
        }
        out
    }
}

fn check_resolution(mx: usize, nu: usize, n1: i64, n2: i64) -> Result<()> {
    if n1 < 0 || n2 < 0 || (2 * n1 + 1) as usize > mx || (2 * n2 + 1) as usize > nu {
        return Err(GaborError::Resolution(format!(
            "indices |m| ≤ {n1}, |n| ≤ {n2} are not resolved by a {mx}x{nu} grid"
        )));
    }
    Ok(())
}

/// All coefficients the grid resolves symmetrically: `|m| ≤ (mx−1)/2`, `|n| ≤ (nu−1)/2`.
pub fn analyze(tau: &ZakDomainVector) -> CoefficientArray {
    let (mx, nu) = (tau.mx, tau.nu);
    let (n1, n2) = (((mx - 1) / 2) as i64, ((nu - 1) / 2) as i64);
    let mut out = CoefficientArray::zeros(tau.n, n1, n2);
    for a in 0..tau.n {
        let c = analyze_plane(&tau.component(a), mx, nu);
        for m in -n1..=n1 {
            for n in -n2..=n2 {
                let idx = m.rem_euclid(mx as i64) as usize * nu + n.rem_euclid(nu as i64) as usize;
                out.set(a, m, n, c[idx]).unwrap();
            }
        }
    }
    out
}

/// `Σ c_{a,m,n} E_{m,n} e_a` on an `mx × nu` grid.
pub fn synthesize(c: &CoefficientArray, mx: usize, nu: usize, p: usize) -> Result<ZakDomainVector> {
    check_resolution(mx, nu, c.n1, c.n2)?;
    let mut tau = ZakDomainVector::zeros(mx, nu, p, c.n);
    for a in 0..c.n {
        let mut plane = vec![ZERO; mx * nu];
        for m in -c.n1..=c.n1 {
            for n in -c.n2..=c.n2 {
                plane[m.rem_euclid(mx as i64) as usize * nu + n.rem_euclid(nu as i64) as usize] = c.get(a, m, n);
            }
        }
        tau.set_component(a, &synthesize_plane(&plane, mx, nu));
    }
    Ok(tau)
}

/// `S_{N1,N2} τ`.
pub fn rect_partial_sum(tau: &ZakDomainVector, n1: i64, n2: i64) -> Result<ZakDomainVector> {
    check_resolution(tau.mx, tau.nu, n1, n2)?;
    let c = analyze(tau).masked(|_, m, n| m.abs() <= n1 && n.abs() <= n2);
    synthesize(&c, tau.mx, tau.nu, tau.p)
}

/// The first `j` terms of σ̃ as `(flat, m, n)`.
pub fn lifted_prefix(sigma: &LiftedEnumeration, j: usize) -> Vec<(usize, i64, i64)> {
    sigma.clone().take(j).map(|(a, (m, n))| (a, m, n)).collect()
}

fn require_duals(winv: &WInvField, opts: &DualOptions) -> Result<()> {
    if !winv.valid(opts) {
        return Err(GaborError::DualNonexistence(format!(
            "{:.3}% of nodes are singular",
            100.0 * winv.excluded_fraction
        )));
    }
    Ok(())
}

/// `S^σ_J τ` in the reduced form: plain coefficients, no weight.
pub fn ordered_partial_sum(
    tau: &ZakDomainVector,
    sigma: &LiftedEnumeration,
    j: usize,
    winv: &WInvField,
    opts: &DualOptions,
) -> Result<ZakDomainVector> {
    require_duals(winv, opts)?;
    if sigma.lq() != tau.n {
        return Err(GaborError::Shape(format!("σ̃ lifts over Lq={}, τ has {} components", sigma.lq(), tau.n)));
    }
    let terms = lifted_prefix(sigma, j);
    let (b1, b2) = terms.iter().fold((0, 0), |(x, y), &(_, m, n)| (x.max(m.abs()), y.max(n.abs())));
    check_resolution(tau.mx, tau.nu, b1, b2)?;
    let set: HashSet<(usize, i64, i64)> = terms.into_iter().collect();
    let c = analyze(tau).masked(|a, m, n| set.contains(&(a, m, n)));
    synthesize(&c, tau.mx, tau.nu, tau.p)
}

/// `⟨τ, p W⁻¹ E_{m,n} e_a⟩_{L²(T_p,W)}` evaluated with the weight.
pub fn weighted_pairing(tau: &ZakDomainVector, w: &WField, winv: &WInvField, a: usize, m: i64, n: i64) -> Result<Complex64> {
    let (mx, nu, size) = (tau.mx, tau.nu, tau.n);
    let mut dual = ZakDomainVector::zeros(mx, nu, tau.p, size);
    for j in 0..mx {
        for k in 0..nu {
            let node = j * nu + k;
            let e = modulation(m, n, j, k, mx, nu) * tau.p as f64;
            for b in 0..size {
                dual.data[node * size + b] = winv.inv.entry(node, b, a) * e;
            }
        }
    }
    tau.weighted_inner(&dual, w)
}

/// `S^σ_J τ` with each coefficient taken from the weighted pairing with the
/// dual, summed term by term. Cross-check for small instances.
pub fn ordered_partial_sum_weighted(
    tau: &ZakDomainVector,
    sigma: &LiftedEnumeration,
    j: usize,
    w: &WField,
    winv: &WInvField,
    opts: &DualOptions,
) -> Result<ZakDomainVector> {
    require_duals(winv, opts)?;
    let (mx, nu, size) = (tau.mx, tau.nu, tau.n);
    let mut out = ZakDomainVector::zeros(mx, nu, tau.p, size);
    for (a, m, n) in lifted_prefix(sigma, j) {
        let c = weighted_pairing(tau, w, winv, a, m, n)?;
        for jj in 0..mx {
            for k in 0..nu {
                out.data[(jj * nu + k) * size + a] += c * modulation(m, n, jj, k, mx, nu);
            }
        }
    }
    Ok(out)
}

/// Which partial-sum operator to measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartialSumOp {
    Rect { n1: i64, n2: i64 },
    Ordered { decisions: Decisions, j: usize },
}

impl PartialSumOp {
    fn index_set(&self, lq: usize) -> Result<HashSet<(usize, i64, i64)>> {
        Ok(match self {
            PartialSumOp::Rect { n1, n2 } => (0..lq)
                .flat_map(|a| (-*n1..=*n1).flat_map(move |m| (-*n2..=*n2).map(move |n| (a, m, n))))
                .collect(),
            PartialSumOp::Ordered { decisions, j } => {
                let sigma = lift_enumeration(lambda_enumeration(decisions.clone()), lq)?;
                lifted_prefix(&sigma, *j).into_iter().collect()
            }
        })
    }

    pub fn describe(&self) -> String {
        match self {
            PartialSumOp::Rect { n1, n2 } => format!("rect({n1},{n2})"),
            PartialSumOp::Ordered { decisions, j } => format!("ordered({decisions},{j})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NormMethod {
    PowerIteration { max_iter: usize, tol: f64, seed: u64 },
    DenseOracle,
}

impl NormMethod {
    pub fn power_default() -> Self {
        NormMethod::PowerIteration { max_iter: 5_000, tol: 1e-8, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormEstimate {
    pub value: f64,
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
    pub bandwidth: i64,
}

/// Gram matrix of `V_B` restricted to the index list `basis`, from the DFT of `W`.
fn gram_matrix(coeffs: &[Vec<Complex64>], w: &WField, basis: &[(usize, i64, i64)]) -> CMat {
    let (mx, nu, n) = (w.mx as i64, w.nu as i64, w.n);
    let dim = basis.len();
    CMat::from_fn(dim, dim, |r, c| {
        let (b, m1, n1) = basis[r];
        let (a, m0, n0) = basis[c];
        let idx = (m1 - m0).rem_euclid(mx) as usize * nu as usize + (n1 - n0).rem_euclid(nu) as usize;
        coeffs[b * n + a][idx]
    })
}

fn dense_norm(g: &CMat, keep: &[bool]) -> Result<(f64, f64)> {
    if !keep.iter().any(|&k| k) {
        return Ok((0.0, 0.0));
    }
    let chol = Cholesky::new(g.clone())
        .ok_or_else(|| GaborError::SingularNode("band-limited Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let mut pl = l.clone();
    for (r, &k) in keep.iter().enumerate() {
        if !k {
            pl.row_mut(r).fill(ZERO);
        }
    }
    let y = l
        .solve_lower_triangular(&pl)
        .ok_or_else(|| GaborError::SingularNode("triangular solve failed".into()))?;
    let m = &y * y.adjoint();
    let lam = hermitian_eigenvalues(&m).last().copied().unwrap_or(0.0).max(0.0);
    Ok((lam.sqrt(), 0.0))
}

/// Block power (subspace) iteration on `A = G⁻¹PGP` with Rayleigh–Ritz in
/// the `G` inner product. The block absorbs clusters at the top of the spectrum.
fn power_norm(g: &CMat, keep: &[bool], max_iter: usize, tol: f64, seed: u64) -> Result<(f64, f64, usize)> {
    let rank = keep.iter().filter(|&&k| k).count();
    if rank == 0 {
        return Ok((0.0, 0.0, 0));
    }
    let dim = g.nrows();
    let s = rank.min(POWER_BLOCK);
    let not_pd = || GaborError::SingularNode("band-limited Gram matrix is not positive definite".into());
    let chol = Cholesky::new(g.clone()).ok_or_else(not_pd)?;
    let project = |m: &mut CMat| {
        for (i, &k) in keep.iter().enumerate() {
            if !k {
                m.row_mut(i).fill(ZERO);
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CMat::from_fn(dim, s, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let m = symmetrize(&(v.adjoint() * g * &v));
        let l = Cholesky::new(m).ok_or_else(not_pd)?.l();
        let linv = l.solve_lower_triangular(&CMat::identity(s, s)).ok_or_else(not_pd)?;
        v = &v * linv.adjoint();
        let mut pv = v.clone();
        project(&mut pv);
        let h = symmetrize(&(pv.adjoint() * g * &pv));
        let (vals, vecs) = hermitian_eigen(&h);
        let theta = vals[s - 1].max(0.0);
        v = &v * vecs;
        let mut pv = v.clone();
        project(&mut pv);
        let mut gpv = g * &pv;
        project(&mut gpv);
        let av = chol.solve(&gpv);
        let r = av.column(s - 1) - v.column(s - 1) * Complex64::new(theta, 0.0);
        let rg = (r.adjoint() * g * &r)[(0, 0)].re.max(0.0).sqrt();
        residual = rg / theta.max(f64::MIN_POSITIVE);
        if residual <= tol || theta == 0.0 {
            return Ok((theta.sqrt(), residual, it));
        }
        v = av;
    }
    Err(GaborError::NoConvergence { iterations: max_iter, residual })
}

/// `‖op‖` on `L²(T_p, W)` restricted to `V_B`.
pub fn operator_norm(op: &PartialSumOp, w: &WField, bandwidth: i64, method: &NormMethod) -> Result<NormEstimate> {
    let u_constant = w.is_u_constant();
    // Distinct n never couple when W ignores u, so only x has to resolve B.
    check_resolution(w.mx, if u_constant { usize::MAX } else { w.nu }, bandwidth, bandwidth)?;
    let lq = w.n;
    let set = op.index_set(lq)?;
    if let Some(&(a, m, n)) = set.iter().find(|(_, m, n)| m.abs() > bandwidth || n.abs() > bandwidth) {
        return Err(GaborError::Config(format!(
            "{} uses index ({a}, {m}, {n}) outside bandwidth B = {bandwidth}",
            op.describe()
        )));
    }
    let coeffs = w.coefficients();
    let b = bandwidth;
    // Blocks of V_B that the Gram matrix does not couple. A u-independent
    // weight has Ŵ(μ, ν) = 0 for ν ≠ 0, so each n is its own block.
    let blocks: Vec<Vec<(usize, i64, i64)>> = if u_constant {
        let mut distinct: BTreeMap<Vec<bool>, i64> = BTreeMap::new();
        for n in -b..=b {
            let key: Vec<bool> =
                (0..lq).flat_map(|a| (-b..=b).map(move |m| (a, m))).map(|(a, m)| set.contains(&(a, m, n))).collect();
            distinct.entry(key).or_insert(n);
        }
        distinct
            .values()
            .map(|&n| (0..lq).flat_map(|a| (-b..=b).map(move |m| (a, m, n))).collect())
            .collect()
    } else {
        vec![(0..lq).flat_map(|a| (-b..=b).flat_map(move |m| (-b..=b).map(move |n| (a, m, n)))).collect()]
    };
    let mut best = NormEstimate { value: 0.0, method: String::new(), iterations: 0, residual: 0.0, bandwidth };
    for basis in &blocks {
        let keep: Vec<bool> = basis.iter().map(|i| set.contains(i)).collect();
        let g = gram_matrix(&coeffs, w, basis);
        let (value, residual, iterations, name) = match *method {
            NormMethod::DenseOracle => {
                let (v, r) = dense_norm(&g, &keep)?;
                (v, r, 0, "dense-oracle")
            }
            NormMethod::PowerIteration { max_iter, tol, seed } => {
                let (v, r, it) = power_norm(&g, &keep, max_iter, tol, seed)?;
                (v, r, it, "power-iteration")
            }
        };
        best.method = name.to_string();
        best.iterations = best.iterations.max(iterations);
        if value >= best.value {
            best.value = value;
            best.residual = residual;
        }
    }
    Ok(best)
}

/// Values at `B` and `2B` and their relative change.
pub fn bandwidth_stability(op: &PartialSumOp, w: &WField, bandwidth: i64, method: &NormMethod) -> Result<(f64, f64, f64)> {
    let a = operator_norm(op, w, bandwidth, method)?.value;
    let b = operator_norm(op, w, 2 * bandwidth, method)?.value;
    Ok((a, b, (b - a).abs() / a.max(f64::MIN_POSITIVE)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceCurve {
    pub j: Vec<usize>,
    /// `‖S^σ_J τ − τ‖_{L²(T_p,W)}`.
    pub weighted_error: Vec<f64>,
    /// `‖ZZ(S^σ_J τ) − ZZ(τ)‖_{L²(ℝ)}` when a Zak system was supplied.
    pub time_domain_error: Option<Vec<f64>>,
}

/// Error curve of `S^σ_J τ` for `J = 1..=jmax`.
pub fn convergence_experiment(
    tau: &ZakDomainVector,
    sigma: &LiftedEnumeration,
    jmax: usize,
    w: &WField,
    winv: &WInvField,
    opts: &DualOptions,
    sys: Option<&ZakSystem>,
) -> Result<ConvergenceCurve> {
    require_duals(winv, opts)?;
    let (mx, nu, size) = (tau.mx, tau.nu, tau.n);
    let c = analyze(tau);
    let terms = lifted_prefix(sigma, jmax);
    let mut diff = tau.sub(&ZakDomainVector::zeros(mx, nu, tau.p, size));
    diff.data.iter_mut().for_each(|v| *v = -*v);
    let mut js = Vec::with_capacity(terms.len());
    let mut werr = Vec::with_capacity(terms.len());
    let mut terr = sys.map(|_| Vec::with_capacity(terms.len()));
    for (idx, &(a, m, n)) in terms.iter().enumerate() {
        check_resolution(mx, nu, m.abs(), n.abs())?;
        let coef = c.get(a, m, n);
        if coef != ZERO {
            for j in 0..mx {
                for k in 0..nu {
                    diff.data[(j * nu + k) * size + a] += coef * modulation(m, n, j, k, mx, nu);
                }
            }
        }
        js.push(idx + 1);
        werr.push(diff.weighted_norm_sqr(w)?.max(0.0).sqrt());
        if let (Some(sys), Some(t)) = (sys, terr.as_mut()) {
            t.push(sys.synthesize(&diff, 0)?.l2_norm());
        }
    }
    Ok(ConvergenceCurve { j: js, weighted_error: werr, time_domain_error: terr })
}

/// A random `τ` with coefficients supported in `|m| ≤ n1`, `|n| ≤ n2`.
pub fn random_band_limited(mx: usize, nu: usize, p: usize, size: usize, n1: i64, n2: i64, seed: u64) -> Result<ZakDomainVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = CoefficientArray::zeros(size, n1, n2);
    c.data.iter_mut().for_each(|v| *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    synthesize(&c, mx, nu, p)
}
