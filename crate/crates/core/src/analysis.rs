//! The end-to-end evidence pipeline and its JSON report.
//!
//! Stages run in order: sampling, Zak transforms, `G` and `W`, completeness
//! and Riesz diagnostics, A₂, `W⁻¹` and duals, the biorthogonality Gram, the
//! partial-sum norm table, and finally the verdict. Mathematical failures are
//! recorded per stage; only configuration and I/O problems abort the run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::duality::{biorthogonality_gram, invert_w_unchecked, DualOptions, WInvField};
use crate::error::{GaborError, Result};
use crate::example::{build_example_windows, ExampleSpec};
use crate::lattice::{GridSpec, LatticeParams};
use crate::muckenhoupt::{a2_product_sup, a2_slice_sup, A2Options, A2Report, Axis, Family};
use crate::ordering::Decisions;
use crate::partial_sums::{operator_norm, NormMethod, PartialSumOp};
use crate::window::{sample_window, WindowSpec};
use crate::zak::zak_forward;
use crate::zibulski::{build_w, completeness_rank, riesz_diagnostics, CompletenessReport, RieszDiagnostics, WField, ZakSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "Mx", default = "d_256")]
    pub mx: usize,
    #[serde(rename = "Ku", default = "d_256")]
    pub ku: usize,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { mx: 256, ku: 256, k: None }
    }
}

fn d_256() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct A2Config {
    pub family: Family,
    /// `Mx` values, coarse to fine. `Ku` follows `Mx`.
    pub resolutions: Vec<usize>,
    #[serde(flatten)]
    pub options: A2Options,
}

impl Default for A2Config {
    fn default() -> Self {
        A2Config { family: Family::Budgeted, resolutions: vec![64, 128], options: A2Options::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DualConfig {
    pub range: i64,
    #[serde(flatten)]
    pub options: DualOptions,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig { range: 3, options: DualOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Power,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct NormConfig {
    /// `Mx` of the grid used for norms; its `Ku` is `Mx·p`.
    pub mx: usize,
    pub rect: Vec<(i64, i64)>,
    pub orderings: Vec<String>,
    /// Lifted prefix lengths.
    pub j: Vec<usize>,
    pub bandwidth: Option<i64>,
    pub method: MethodChoice,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            mx: 32,
            rect: vec![(1, 1), (2, 2), (3, 3)],
            orderings: vec!["(HV)*".into(), "HHV(HV)*".into()],
            j: vec![1, 2, 5, 9, 25],
            bandwidth: None,
            method: MethodChoice::Power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RieszConfig {
    pub threshold: f64,
    pub eps_reg: f64,
}

impl Default for RieszConfig {
    fn default() -> Self {
        RieszConfig { threshold: 1.25, eps_reg: 1e-12 }
    }
}

/// One JSON document. Either `windows` with `lattice`, or `example`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeParams>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<WindowSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleSpec>,
    #[serde(default)]
    pub a2: A2Config,
    #[serde(default)]
    pub dual: DualConfig,
    #[serde(default)]
    pub norms: NormConfig,
    #[serde(default)]
    pub riesz: RieszConfig,
    #[serde(default = "d_gram_tol")]
    pub gram_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

fn d_gram_tol() -> f64 {
    1e-6
}

impl AnalysisConfig {
    pub fn from_windows(lattice: LatticeParams, windows: Vec<WindowSpec>) -> Self {
        AnalysisConfig {
            lattice: Some(lattice),
            grid: GridConfig::default(),
            windows: Some(windows),
            example: None,
            a2: A2Config::default(),
            dual: DualConfig::default(),
            norms: NormConfig::default(),
            riesz: RieszConfig::default(),
            gram_tolerance: d_gram_tol(),
            seed: 0,
        }
    }

    pub fn from_example(example: ExampleSpec) -> Self {
        AnalysisConfig { lattice: None, windows: None, example: Some(example), ..Self::from_windows(LatticeParams { p: 1, q: 1, l: 1 }, vec![]) }
    }

    /// Reads a config file; relative `samples_file` paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| GaborError::Io { path: path.to_path_buf(), source })?;
        let mut cfg: AnalysisConfig = serde_json::from_str(&text)?;
        if let (Some(ws), Some(dir)) = (cfg.windows.as_mut(), path.parent()) {
            ws.iter_mut().for_each(|w| w.resolve_paths(dir));
        }
        Ok(cfg)
    }

    /// Lattice and windows, from `example` when present.
    pub fn resolve(&self) -> Result<(LatticeParams, Vec<WindowSpec>)> {
        match (&self.example, &self.windows, &self.lattice) {
            (Some(_), Some(_), _) => Err(GaborError::Config("give either `example` or `windows`, not both".into())),
            (Some(ex), None, _) => Ok((LatticeParams::new(ex.l, 1, ex.l)?, build_example_windows(ex)?)),
            (None, Some(ws), Some(lat)) => {
                let lat = LatticeParams::new(lat.p, lat.q, lat.l)?;
                if ws.len() != lat.l {
                    return Err(GaborError::Config(format!("L={} but {} windows given", lat.l, ws.len())));
                }
                Ok((lat, ws.clone()))
            }
            (None, Some(_), None) => Err(GaborError::Config("`windows` needs `lattice`".into())),
            (None, None, _) => Err(GaborError::Config("config has neither `windows` nor `example`".into())),
        }
    }

    /// The main grid; `K` defaults to the longest window support.
    pub fn main_grid(&self) -> Result<GridSpec> {
        let (lat, ws) = self.resolve()?;
        let k = self.grid.k.unwrap_or_else(|| ws.iter().map(WindowSpec::support_periods).max().unwrap_or(1));
        GridSpec::new(lat, self.grid.mx, self.grid.ku, k)
    }
}

/// Samples every window on `grid` and forms the Zak system.
pub fn build_system(windows: &[WindowSpec], grid: &GridSpec) -> Result<ZakSystem> {
    let zaks = windows
        .iter()
        .map(|w| sample_window(w, grid).and_then(|s| zak_forward(&s, grid)))
        .collect::<Result<Vec<_>>>()?;
    ZakSystem::new(zaks, &grid.params)
}

/// `W` of the windows sampled on `grid`.
pub fn build_weight(windows: &[WindowSpec], grid: &GridSpec) -> Result<WField> {
    Ok(build_w(&build_system(windows, grid)?.build_g()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualVerdict {
    Exists,
    /// More singular nodes than the cap, but their share shrinks under refinement.
    Undecided,
    Nonexistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    RieszEvidence,
    SchauderEvidence,
    NoBasisEvidence,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DualStage {
    pub excluded_fraction: f64,
    pub coarse_excluded_fraction: f64,
    pub l1_norm: f64,
    pub l1_ratio: Option<f64>,
    pub residual: f64,
}

pub fn classify_dual(coarse: &WInvField, fine: &WInvField, opts: &DualOptions) -> (DualVerdict, Option<f64>) {
    let ratio = (coarse.l1_norm > 0.0).then(|| fine.l1_norm / coarse.l1_norm);
    let verdict = if ratio.is_some_and(|r| r > opts.l1_growth) {
        DualVerdict::Nonexistent
    } else if fine.valid(opts) {
        DualVerdict::Exists
    } else if fine.excluded_fraction < coarse.excluded_fraction {
        DualVerdict::Undecided
    } else {
        DualVerdict::Nonexistent
    };
    (verdict, ratio)
}

/// The stage outputs the verdict depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictInputs {
    /// `None` when the A₂ stage failed.
    pub a2: Option<(f64, bool)>,
    pub dual: DualVerdict,
    pub gram_max_deviation: Option<f64>,
    pub riesz_flagged: bool,
    pub gram_tolerance: f64,
}

pub fn decide_verdict(s: &VerdictInputs) -> Verdict {
    let a2_bad = match s.a2 {
        None => true,
        Some((sup, diverges)) => diverges || !sup.is_finite(),
    };
    if a2_bad || s.dual == DualVerdict::Nonexistent {
        return Verdict::NoBasisEvidence;
    }
    match s.gram_max_deviation {
        Some(d) if s.dual == DualVerdict::Exists && d <= s.gram_tolerance => {
            if s.riesz_flagged {
                Verdict::SchauderEvidence
            } else {
                Verdict::RieszEvidence
            }
        }
        _ => Verdict::Inconclusive,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SliceSups {
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormRow {
    pub operator: String,
    pub bandwidth: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub grid: GridSpec,
    pub critical_density: bool,
    pub completeness: Option<CompletenessReport>,
    pub riesz_flags: Option<RieszDiagnostics>,
    pub a2: Option<A2Report>,
    pub a2_slices: Option<SliceSups>,
    pub dual_verdict: DualVerdict,
    pub dual: Option<DualStage>,
    pub gram_max_deviation: Option<f64>,
    pub gram_range: i64,
    pub norm_table: Vec<NormRow>,
    pub verdict: Verdict,
    pub stage_errors: BTreeMap<String, String>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn note<T>(errors: &mut BTreeMap<String, String>, stage: &str, r: Result<T>) -> Option<T> {
    r.map_err(|e| {
        errors.insert(stage.to_string(), e.to_string());
    })
    .ok()
}

fn norm_rows(cfg: &NormConfig, lq: usize, w: &WField, seed: u64) -> Result<Vec<NormRow>> {
    let mut ops: Vec<PartialSumOp> = cfg.rect.iter().map(|&(n1, n2)| PartialSumOp::Rect { n1, n2 }).collect();
    for src in &cfg.orderings {
        let decisions = Decisions::parse(src)?;
        ops.extend(cfg.j.iter().map(|&j| PartialSumOp::Ordered { decisions: decisions.clone(), j }));
    }
    let method = match cfg.method {
        MethodChoice::Dense => NormMethod::DenseOracle,
        MethodChoice::Power => NormMethod::PowerIteration { max_iter: 5_000, tol: 1e-8, seed },
    };
    let nyquist = (w.mx.min(w.nu) as i64 - 1) / 2;
    Ok(ops
        .iter()
        .map(|op| {
            let reach = max_index(op, lq).unwrap_or(0);
            let b = cfg.bandwidth.unwrap_or((4 * reach).max(1)).min(nyquist);
            match operator_norm(op, w, b, &method) {
                Ok(e) => NormRow {
                    operator: op.describe(),
                    bandwidth: b,
                    value: Some(e.value),
                    method: Some(e.method),
                    iterations: Some(e.iterations),
                    error: None,
                },
                Err(e) => NormRow { operator: op.describe(), bandwidth: b, value: None, method: None, iterations: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}

fn max_index(op: &PartialSumOp, lq: usize) -> Result<i64> {
    Ok(match op {
        PartialSumOp::Rect { n1, n2 } => (*n1).max(*n2),
        PartialSumOp::Ordered { decisions, j } => {
            let sigma = crate::ordering::lift_enumeration(crate::ordering::lambda_enumeration(decisions.clone()), lq)?;
            sigma.take(*j).map(|(_, (m, n))| m.abs().max(n.abs())).max().unwrap_or(0)
        }
    })
}

/// Runs every stage. `Err` only for configuration or I/O problems.
pub fn run_analysis(cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    let (lat, windows) = cfg.resolve()?;
    let grid = cfg.main_grid()?;
    let coarse_grid = grid.with_resolution(grid.mx / 2, grid.ku / 2);
    let mut errors = BTreeMap::new();

    let sys = build_system(&windows, &grid)?;
    let g = sys.build_g()?;
    let w = build_w(&g);
    let completeness = Some(completeness_rank(&g, 1e-10));

    let w_coarse = note(&mut errors, "coarse-grid", coarse_grid.and_then(|cg| build_weight(&windows, &cg)));
    let riesz_flags =
        w_coarse.as_ref().map(|wc| riesz_diagnostics(wc, &w, cfg.riesz.threshold, cfg.riesz.eps_reg));

    let a2 = note(
        &mut errors,
        "a2",
        cfg.a2
            .resolutions
            .iter()
            .map(|&r| grid.with_resolution(r, r).and_then(|gr| build_weight(&windows, &gr)))
            .collect::<Result<Vec<_>>>()
            .and_then(|fields| a2_product_sup(&fields, cfg.a2.family, &cfg.a2.options)),
    );
    let a2_slices = note(
        &mut errors,
        "a2-slices",
        a2_slice_sup(&w, Axis::X, cfg.a2.family, &cfg.a2.options)
            .and_then(|x| Ok(SliceSups { x, u: a2_slice_sup(&w, Axis::U, cfg.a2.family, &cfg.a2.options)? })),
    );

    let opts = cfg.dual.options;
    let winv = invert_w_unchecked(&w, opts.eps_reg);
    let (dual_verdict, dual) = match &w_coarse {
        Some(wc) => {
            let coarse_inv = invert_w_unchecked(wc, opts.eps_reg);
            let (v, ratio) = classify_dual(&coarse_inv, &winv, &opts);
            let stage = DualStage {
                excluded_fraction: winv.excluded_fraction,
                coarse_excluded_fraction: coarse_inv.excluded_fraction,
                l1_norm: winv.l1_norm,
                l1_ratio: ratio,
                residual: winv.residual,
            };
            (v, Some(stage))
        }
        None if winv.valid(&opts) => (DualVerdict::Exists, None),
        None => (DualVerdict::Undecided, None),
    };

    let gram_max_deviation = if dual_verdict == DualVerdict::Exists {
        note(&mut errors, "gram", biorthogonality_gram(&sys, &winv, cfg.dual.range).map(|t| t.max_deviation()))
    } else {
        errors.insert("gram".into(), format!("skipped: dual verdict {dual_verdict:?}"));
        None
    };

    let norm_grid = grid.with_resolution(cfg.norms.mx, cfg.norms.mx * lat.p);
    let norm_table = note(
        &mut errors,
        "norms",
        norm_grid
            .and_then(|ng| build_weight(&windows, &ng))
            .and_then(|wn| norm_rows(&cfg.norms, lat.block_size(), &wn, cfg.seed)),
    )
    .unwrap_or_default();

    let verdict = decide_verdict(&VerdictInputs {
        a2: a2.as_ref().map(|r| (r.sup, r.diverges)),
        dual: dual_verdict,
        gram_max_deviation,
        riesz_flagged: riesz_flags.as_ref().is_none_or(RieszDiagnostics::flagged),
        gram_tolerance: cfg.gram_tolerance,
    });

    Ok(AnalysisReport {
        grid,
        critical_density: lat.is_critical(),
        completeness,
        riesz_flags,
        a2,
        a2_slices,
        dual_verdict,
        dual,
        gram_max_deviation,
        gram_range: cfg.dual.range,
        norm_table,
        verdict,
        stage_errors: errors,
    })
}
