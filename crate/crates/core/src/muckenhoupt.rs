//! Matrix Muckenhoupt A₂ checks at grid resolution.
//!
//! The rectangle value is `‖(avg W)^{1/2} (avg W⁻¹)^{1/2}‖`, evaluated as
//! `sqrt(λ_max(A^{1/2} B A^{1/2}))`. Averages come from summed-area tables of
//! `W`, `W⁻¹` and a retained-node count, so each rectangle costs one small
//! eigenproblem. Nodes where `λ_min ≤ εreg·λ_max` (global `λ_max`) are
//! singular; the default policy omits them from both averages.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::linalg::{hermitian_eigen, hermitian_apply, product_lambda_max, CMat};
use crate::zibulski::WField;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Grid-aligned rectangle `[x0, x1) × [u0, u1)` in node indices of `T_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rectangle {
    pub x0: usize,
    pub x1: usize,
    pub u0: usize,
    pub u1: usize,
}

impl Rectangle {
    pub fn new(x0: usize, x1: usize, u0: usize, u1: usize) -> Result<Self> {
        if x0 >= x1 || u0 >= u1 {
            return Err(GaborError::Config(format!("empty rectangle [{x0},{x1})x[{u0},{u1})")));
        }
        Ok(Rectangle { x0, x1, u0, u1 })
    }

    pub fn full(w: &WField) -> Self {
        Rectangle { x0: 0, x1: w.mx, u0: 0, u1: w.nu }
    }

    pub fn nodes(&self) -> usize {
        (self.x1 - self.x0) * (self.u1 - self.u0)
    }

    fn check(&self, w: &WField) -> Result<()> {
        if self.x1 > w.mx || self.u1 > w.nu || self.x0 >= self.x1 || self.u0 >= self.u1 {
            return Err(GaborError::Index(format!(
                "rectangle {:?} outside {}x{} grid",
                self, w.mx, w.nu
            )));
        }
        Ok(())
    }

    /// Coordinates in `[0,1) × [0,1/p)`.
    pub fn coords(&self, w: &WField) -> RectCoords {
        let ku = (w.nu * w.p) as f64;
        RectCoords {
            x0: self.x0 as f64 / w.mx as f64,
            x1: self.x1 as f64 / w.mx as f64,
            u0: self.u0 as f64 / ku,
            u1: self.u1 as f64 / ku,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectCoords {
    pub x0: f64,
    pub x1: f64,
    pub u0: f64,
    pub u1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dyadic,
    Exhaustive,
    Budgeted,
}

impl std::str::FromStr for Family {
    type Err = GaborError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyadic" => Ok(Family::Dyadic),
            "exhaustive" => Ok(Family::Exhaustive),
            "budgeted" => Ok(Family::Budgeted),
            _ => Err(GaborError::Config(format!("unknown rectangle family `{s}`"))),
        }
    }
}

impl Family {
    pub fn describe(&self) -> &'static str {
        match self {
            Family::Dyadic => "dyadic",
            Family::Exhaustive => "exhaustive",
            Family::Budgeted => "anisotropic-budgeted",
        }
    }
}

/// Half-open index intervals of `[0, n)` in the family.
pub fn intervals(n: usize, family: Family) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    match family {
        Family::Exhaustive => {
            for a in 0..n {
                for b in a + 1..=n {
                    out.push((a, b));
                }
            }
        }
        Family::Dyadic => {
            let mut len = n;
            while len >= 1 {
                let mut a = 0;
                while a + len <= n {
                    out.push((a, a + len));
                    a += len;
                }
                if len == 1 {
                    break;
                }
                len /= 2;
            }
        }
        Family::Budgeted => {
            let mut lens = Vec::new();
            let mut l = 1usize;
            while l < n {
                lens.push(l);
                l = if l < 8 { l + 1 } else { ((l as f64) * 1.125).ceil() as usize };
            }
            lens.push(n);
            for &l in &lens {
                for a in 0..=n - l {
                    out.push((a, a + l));
                }
            }
            out.extend(intervals(n, Family::Dyadic));
            out.sort_unstable();
            out.dedup();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularPolicy {
    /// Fail on the first singular node that enters an inverse average.
    Strict,
    /// Drop singular nodes from both averages.
    Omit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct A2Options {
    pub eps_reg: f64,
    pub divergence_ratio: f64,
    pub policy: SingularPolicy,
}

impl Default for A2Options {
    fn default() -> Self {
        A2Options { eps_reg: 1e-12, divergence_ratio: 1.5, policy: SingularPolicy::Omit }
    }
}

/// Nodewise inverse and singular mask, with singularity measured against the
/// global `λ_max`.
pub(crate) fn nodewise_inverse(w: &WField, eps_reg: f64) -> (Vec<Option<CMat>>, f64) {
    let n = w.n;
    let diagonal = w.is_diagonal();
    let eig: Vec<(Vec<f64>, Option<CMat>)> = (0..w.nodes())
        .map(|node| {
            if diagonal {
                ((0..n).map(|r| w.entry(node, r, r).re).collect(), None)
            } else {
                let (v, e) = hermitian_eigen(&w.node(node));
                (v, Some(e))
            }
        })
        .collect();
    let global_max = eig.iter().flat_map(|(v, _)| v.iter().copied()).fold(0.0f64, f64::max);
    let threshold = eps_reg * global_max;
    let inv = eig
        .into_iter()
        .map(|(vals, vecs)| {
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min > threshold) || global_max <= 0.0 {
                return None;
            }
            Some(match vecs {
                None => CMat::from_fn(n, n, |r, c| if r == c { Complex64::new(1.0 / vals[r], 0.0) } else { ZERO }),
                Some(v) => hermitian_apply(&vals, &v, |l| 1.0 / l),
            })
        })
        .collect();
    (inv, global_max)
}

/// Average of `W` (or `W⁻¹`) over a rectangle by direct summation.
pub fn avg_over_rectangle(
    w: &WField,
    rect: &Rectangle,
    inverse: bool,
    eps_reg: f64,
    policy: SingularPolicy,
) -> Result<CMat> {
    rect.check(w)?;
    let n = w.n;
    let mut acc = CMat::zeros(n, n);
    let mut count = 0usize;
    let inv = if inverse { Some(nodewise_inverse(w, eps_reg).0) } else { None };
    let singular = match &inv {
        Some(v) => v.iter().map(Option::is_none).collect::<Vec<_>>(),
        None if policy == SingularPolicy::Omit => nodewise_inverse(w, eps_reg).0.iter().map(Option::is_none).collect(),
        None => vec![false; w.nodes()],
    };
    for j in rect.x0..rect.x1 {
        for k in rect.u0..rect.u1 {
            let node = j * w.nu + k;
            if singular[node] {
                if policy == SingularPolicy::Strict {
                    return Err(GaborError::SingularNode(format!("node (j={j}, k={k}) is singular")));
                }
                continue;
            }
            count += 1;
            match &inv {
                Some(v) => acc += v[node].as_ref().unwrap(),
                None => acc += w.node(node),
            }
        }
    }
    if count == 0 {
        return Err(GaborError::SingularNode("every node in the rectangle is singular".into()));
    }
    Ok(acc / Complex64::new(count as f64, 0.0))
}

/// Summed-area tables for `W`, `W⁻¹` and the retained-node count.
pub struct A2Tables {
    mx: usize,
    nu: usize,
    n: usize,
    sw: Vec<Complex64>,
    swi: Vec<Complex64>,
    cnt: Vec<u32>,
    diagonal: bool,
    u_constant: bool,
    pub singular_nodes: usize,
}

impl A2Tables {
    pub fn new(w: &WField, opts: &A2Options) -> Result<Self> {
        let (mx, nu, n) = (w.mx, w.nu, w.n);
        let s = n * n;
        let (inv, _) = nodewise_inverse(w, opts.eps_reg);
        let singular_nodes = inv.iter().filter(|v| v.is_none()).count();
        if singular_nodes > 0 && opts.policy == SingularPolicy::Strict {
            return Err(GaborError::SingularNode(format!("{singular_nodes} singular nodes")));
        }
        if singular_nodes == w.nodes() {
            return Err(GaborError::SingularNode("weight is singular at every node".into()));
        }
        let stride = nu + 1;
        let mut sw = vec![ZERO; (mx + 1) * stride * s];
        let mut swi = vec![ZERO; (mx + 1) * stride * s];
        let mut cnt = vec![0u32; (mx + 1) * stride];
        for j in 0..mx {
            for k in 0..nu {
                let node = j * nu + k;
                let t = ((j + 1) * stride + k + 1) * s;
                let a = (j * stride + k + 1) * s;
                let b = ((j + 1) * stride + k) * s;
                let c = (j * stride + k) * s;
                let ws = w.node_slice(node);
                let keep = inv[node].is_some();
                for e in 0..s {
                    let (val, ival) = match &inv[node] {
                        Some(m) => (ws[e], m[(e / n, e % n)]),
                        None => (ZERO, ZERO),
                    };
                    sw[t + e] = val + sw[a + e] + sw[b + e] - sw[c + e];
                    swi[t + e] = ival + swi[a + e] + swi[b + e] - swi[c + e];
                }
                let ti = (j + 1) * stride + k + 1;
                cnt[ti] = keep as u32 + cnt[j * stride + k + 1] + cnt[(j + 1) * stride + k] - cnt[j * stride + k];
            }
        }
        Ok(A2Tables { mx, nu, n, sw, swi, cnt, diagonal: w.is_diagonal(), u_constant: w.is_u_constant(), singular_nodes })
    }

    fn rect_sum(&self, t: &[Complex64], r: &Rectangle, e: usize) -> Complex64 {
        let s = self.n * self.n;
        let st = self.nu + 1;
        t[(r.x1 * st + r.u1) * s + e] - t[(r.x0 * st + r.u1) * s + e] - t[(r.x1 * st + r.u0) * s + e]
            + t[(r.x0 * st + r.u0) * s + e]
    }

    fn count(&self, r: &Rectangle) -> u32 {
        let st = self.nu + 1;
        self.cnt[r.x1 * st + r.u1] + self.cnt[r.x0 * st + r.u0] - self.cnt[r.x0 * st + r.u1] - self.cnt[r.x1 * st + r.u0]
    }

    /// Squared A₂ value of a rectangle, `None` when every node in it is omitted.
    pub fn value_sqr(&self, r: &Rectangle) -> Result<Option<f64>> {
        let c = self.count(r);
        if c == 0 {
            return Ok(None);
        }
        let n = self.n;
        let inv_c = 1.0 / c as f64;
        if n == 1 || self.diagonal {
            let mut best = 0.0f64;
            for d in 0..n {
                let e = d * n + d;
                let a = self.rect_sum(&self.sw, r, e).re * inv_c;
                let b = self.rect_sum(&self.swi, r, e).re * inv_c;
                best = best.max(a * b);
            }
            return Ok(Some(best));
        }
        let a = CMat::from_fn(n, n, |i, k| self.rect_sum(&self.sw, r, i * n + k) * inv_c);
        let b = CMat::from_fn(n, n, |i, k| self.rect_sum(&self.swi, r, i * n + k) * inv_c);
        Ok(Some(product_lambda_max(&a, &b)?))
    }

    /// Largest squared value over the family and the rectangle attaining it.
    pub fn sup_sqr(&self, family: Family) -> Result<(f64, Rectangle)> {
        let xs = intervals(self.mx, family);
        // averages over I × J equal averages over I × [0, nu) when W ignores u
        let us = if self.u_constant { vec![(0, self.nu)] } else { intervals(self.nu, family) };
        let mut best = (f64::NEG_INFINITY, Rectangle { x0: 0, x1: self.mx, u0: 0, u1: self.nu });
        for &(x0, x1) in &xs {
            for &(u0, u1) in &us {
                let r = Rectangle { x0, x1, u0, u1 };
                if let Some(v) = self.value_sqr(&r)? {
                    if v > best.0 {
                        best = (v, r);
                    }
                }
            }
        }
        Ok(best)
    }
}

/// A₂ value `‖(avg W)^{1/2}(avg W⁻¹)^{1/2}‖` of one rectangle.
pub fn a2_rectangle_value(w: &WField, rect: &Rectangle, opts: &A2Options) -> Result<f64> {
    rect.check(w)?;
    let t = A2Tables::new(w, opts)?;
    t.value_sqr(rect)?
        .map(f64::sqrt)
        .ok_or_else(|| GaborError::SingularNode("every node in the rectangle is singular".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolutionValue {
    pub mx: usize,
    pub nu: usize,
    pub sup: f64,
    pub rect: RectCoords,
    pub excluded_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct A2Report {
    pub sup: f64,
    pub rect: RectCoords,
    pub family: String,
    pub per_resolution: Vec<ResolutionValue>,
    /// Largest ratio of the squared sup (the A₂ characteristic) between
    /// consecutive resolutions.
    pub growth_ratio: Option<f64>,
    pub diverges: bool,
}

/// Sup over the family at each resolution (fields ordered coarse to fine).
pub fn a2_product_sup(fields: &[WField], family: Family, opts: &A2Options) -> Result<A2Report> {
    if fields.is_empty() {
        return Err(GaborError::Config("a2_product_sup needs at least one field".into()));
    }
    let mut per = Vec::with_capacity(fields.len());
    let mut sq = Vec::with_capacity(fields.len());
    for w in fields {
        let t = A2Tables::new(w, opts)?;
        let (v, r) = t.sup_sqr(family)?;
        sq.push(v);
        per.push(ResolutionValue { mx: w.mx, nu: w.nu, sup: v.sqrt(), rect: r.coords(w), excluded_nodes: t.singular_nodes });
    }
    let growth_ratio = sq.windows(2).map(|p| p[1] / p[0]).fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    let diverges = growth_ratio.is_some_and(|g| g > opts.divergence_ratio);
    let last = per.last().unwrap();
    Ok(A2Report {
        sup: last.sup,
        rect: last.rect,
        family: family.describe().to_string(),
        per_resolution: per,
        growth_ratio,
        diverges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Intervals in `x`, `u` frozen.
    X,
    /// Intervals in `u`, `x` frozen.
    U,
}

/// Grid max over the frozen variable of the univariate A₂ sup.
pub fn a2_slice_sup(w: &WField, axis: Axis, family: Family, opts: &A2Options) -> Result<f64> {
    let t = A2Tables::new(w, opts)?;
    let mut best = f64::NEG_INFINITY;
    match axis {
        Axis::X => {
            let xs = intervals(w.mx, family);
            let frozen = if t.u_constant { 1 } else { w.nu };
            for k in 0..frozen {
                for &(x0, x1) in &xs {
                    if let Some(v) = t.value_sqr(&Rectangle { x0, x1, u0: k, u1: k + 1 })? {
                        best = best.max(v);
                    }
                }
            }
        }
        Axis::U => {
            let us = intervals(w.nu, family);
            for j in 0..w.mx {
                for &(u0, u1) in &us {
                    if let Some(v) = t.value_sqr(&Rectangle { x0: j, x1: j + 1, u0, u1 })? {
                        best = best.max(v);
                    }
                }
            }
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(GaborError::SingularNode("no slice has a retained node".into()));
    }
    Ok(best.sqrt())
}

/// `sup_I (avg_I w)(avg_I w⁻¹)` for a positive function sampled on `[0,1)`.
pub fn scalar_a2_sup(w: &[f64], family: Family, eps_reg: f64, policy: SingularPolicy) -> Result<f64> {
    let n = w.len();
    let max = w.iter().copied().fold(0.0f64, f64::max);
    let mut s = vec![0.0; n + 1];
    let mut si = vec![0.0; n + 1];
    let mut c = vec![0usize; n + 1];
    for (i, &v) in w.iter().enumerate() {
        let keep = v > eps_reg * max && max > 0.0;
        if !keep && policy == SingularPolicy::Strict {
            return Err(GaborError::SingularNode(format!("w[{i}] = {v} is not positive")));
        }
        s[i + 1] = s[i] + if keep { v } else { 0.0 };
        si[i + 1] = si[i] + if keep { 1.0 / v } else { 0.0 };
        c[i + 1] = c[i] + keep as usize;
    }
    if c[n] == 0 {
        return Err(GaborError::SingularNode("w vanishes everywhere".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for (a, b) in intervals(n, family) {
        let k = (c[b] - c[a]) as f64;
        if k > 0.0 {
            best = best.max((s[b] - s[a]) / k * (si[b] - si[a]) / k);
        }
    }
    Ok(best)
}
