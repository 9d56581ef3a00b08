use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use gabor_schauder::analysis::{build_system, run_analysis, AnalysisConfig};
use gabor_schauder::duality::{biorthogonality_gram, dual_window, invert_w, invert_w_unchecked};
use gabor_schauder::example::{build_example_windows, ExampleSpec};
use gabor_schauder::export;
use gabor_schauder::lattice::{GridSpec, TrigIndex};
use gabor_schauder::muckenhoupt::{a2_product_sup, Family};
use gabor_schauder::ordering::{lambda_enumeration, lift_enumeration, Decisions};
use gabor_schauder::partial_sums::{convergence_experiment, random_band_limited};
use gabor_schauder::window::{sample_window, WindowSpec};
use gabor_schauder::zak::zak_forward;
use gabor_schauder::zibulski::{build_w, completeness_rank, eigen_extremes};
use gabor_schauder::GaborError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gabor-schauder", version, about = "Zak-domain analysis of multiply generated Gabor systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Zak transform of one window.
    Zak {
        window: PathBuf,
        #[arg(long, default_value_t = 256)]
        mx: usize,
        #[arg(long, default_value_t = 256)]
        ku: usize,
        /// Support periods; defaults to the window's own support.
        #[arg(long)]
        k: Option<usize>,
        /// CSV file for the samples (j,k,re,im).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build W on the main grid of a config.
    BuildW {
        config: PathBuf,
        /// CSV file for W (j,k,row,col,re,im).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Matrix A₂ characteristic across the configured resolutions.
    A2 {
        config: PathBuf,
        #[arg(long)]
        family: Option<Family>,
    },
    /// Dual windows and the biorthogonality Gram.
    Dual {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        range: i64,
        /// Directory for one CSV per (flat, 0, 0) dual window.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print a prefix of a Λ-enumeration.
    Ordering {
        #[arg(long)]
        decisions: Decisions,
        #[arg(long)]
        take: usize,
        /// Lift over this many flat indices.
        #[arg(long, default_value_t = 1)]
        lq: usize,
    },
    /// Error curve of ordered partial sums for a random band-limited τ.
    Converge {
        config: PathBuf,
        #[arg(long)]
        ordering: Decisions,
        #[arg(long = "Jmax")]
        jmax: usize,
        /// Coefficient bandwidth of τ.
        #[arg(long, default_value_t = 3)]
        band: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also measure the error in L²(ℝ).
        #[arg(long)]
        time_domain: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Polynomial-power example: print its config, or analyze it.
    Example4 {
        #[arg(long = "L")]
        l: usize,
        /// One polynomial, or one per generator.
        #[arg(long, num_args = 1..)]
        poly: Vec<String>,
        /// One exponent, or one per generator.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        exp: Vec<f64>,
        #[arg(long)]
        allow_violation: bool,
        /// Run the analysis instead of printing the config.
        #[arg(long)]
        analyze: bool,
        #[arg(long, default_value_t = 256)]
        mx: usize,
    },
    /// Full pipeline; writes the JSON report.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Config and I/O problems; everything else is a mathematical outcome.
fn operational(e: &GaborError) -> bool {
    matches!(
        e,
        GaborError::Config(_)
            | GaborError::Io { .. }
            | GaborError::Json(_)
            | GaborError::Parse(_)
            | GaborError::Divisibility(_)
            | GaborError::Support(_)
            | GaborError::Shape(_)
    )
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print(v: &serde_json::Value) -> Result<()> {
    writeln!(io::stdout(), "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn load(config: &Path) -> Result<(AnalysisConfig, GridSpec, Vec<WindowSpec>)> {
    let cfg = AnalysisConfig::from_path(config)?;
    let (_, windows) = cfg.resolve()?;
    let grid = cfg.main_grid()?;
    Ok((cfg, grid, windows))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Zak { window, mx, ku, k, out } => {
            let text = std::fs::read_to_string(&window).with_context(|| format!("reading {}", window.display()))?;
            let mut spec: WindowSpec = serde_json::from_str(&text)?;
            if let Some(dir) = window.parent() {
                spec.resolve_paths(dir);
            }
            let grid = gabor_schauder::lattice::make_grid(1, 1, 1, mx, ku, k.unwrap_or_else(|| spec.support_periods()))?;
            let s = sample_window(&spec, &grid)?;
            let z = zak_forward(&s, &grid)?;
            if let Some(path) = &out {
                export::write_zak(&z, sink(Some(path))?)?;
            }
            print(&json!({ "Mx": mx, "Ku": ku, "K": grid.k, "windowNorm": s.l2_norm(), "zakNorm": z.l2_norm() }))
        }
        Cmd::BuildW { config, out } => {
            let (_, grid, windows) = load(&config)?;
            let g = build_system(&windows, &grid)?.build_g()?;
            let w = build_w(&g);
            if let Some(path) = &out {
                export::write_weight(&w, sink(Some(path))?)?;
            }
            print(&json!({
                "grid": grid,
                "diagonal": w.is_diagonal(),
                "uConstant": w.is_u_constant(),
                "eigenExtremes": eigen_extremes(&w),
                "completeness": completeness_rank(&g, 1e-10),
            }))
        }
        Cmd::A2 { config, family } => {
            let (cfg, grid, windows) = load(&config)?;
            let fields = cfg
                .a2
                .resolutions
                .iter()
                .map(|&r| gabor_schauder::analysis::build_weight(&windows, &grid.with_resolution(r, r)?))
                .collect::<gabor_schauder::Result<Vec<_>>>()?;
            let report = a2_product_sup(&fields, family.unwrap_or(cfg.a2.family), &cfg.a2.options)?;
            print(&serde_json::to_value(report)?)
        }
        Cmd::Dual { config, range, out_dir } => {
            let (cfg, grid, windows) = load(&config)?;
            let sys = build_system(&windows, &grid)?;
            let w = build_w(&sys.build_g()?);
            let opts = cfg.dual.options;
            let winv = match invert_w(&w, &opts) {
                Ok(v) => v,
                Err(e) => {
                    let partial = invert_w_unchecked(&w, opts.eps_reg);
                    return print(&json!({ "error": e.to_string(), "excludedFraction": partial.excluded_fraction }));
                }
            };
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let q = grid.params.q;
                for a in 0..grid.params.block_size() {
                    let d = dual_window(&winv, TrigIndex::from_flat(a, q, 0, 0), &sys)?;
                    export::write_signal(&d.samples, sink(Some(&dir.join(format!("dual_{a}.csv"))))?)?;
                }
            }
            let gram = biorthogonality_gram(&sys, &winv, range)?;
            print(&json!({
                "gram": gram.summary(),
                "excludedFraction": winv.excluded_fraction,
                "l1Norm": winv.l1_norm,
                "inverseResidual": winv.residual,
            }))
        }
        Cmd::Ordering { decisions, take, lq } => {
            let sigma = lift_enumeration(lambda_enumeration(decisions), lq)?;
            let mut out = io::stdout().lock();
            writeln!(out, "j,flat,m,n")?;
            for (j, (a, (m, n))) in sigma.take(take).enumerate() {
                writeln!(out, "{},{a},{m},{n}", j + 1)?;
            }
            Ok(())
        }
        Cmd::Converge { config, ordering, jmax, band, seed, time_domain, out } => {
            let (cfg, grid, windows) = load(&config)?;
            let sys = build_system(&windows, &grid)?;
            let w = build_w(&sys.build_g()?);
            let winv = invert_w(&w, &cfg.dual.options)?;
            let tau = random_band_limited(w.mx, w.nu, w.p, w.n, band, band, seed)?;
            let sigma = lift_enumeration(lambda_enumeration(ordering), w.n)?;
            let curve =
                convergence_experiment(&tau, &sigma, jmax, &w, &winv, &cfg.dual.options, time_domain.then_some(&sys))?;
            export::write_curve(&curve, sink(out.as_deref())?)?;
            Ok(())
        }
        Cmd::Example4 { l, poly, exp, allow_violation, analyze, mx } => {
            let spread = |n: usize| if n == 1 { l } else { 1 };
            let polys: Vec<String> = poly.iter().flat_map(|p| std::iter::repeat_n(p.clone(), spread(poly.len()))).collect();
            let exponents: Vec<f64> = exp.iter().flat_map(|&a| std::iter::repeat_n(a, spread(exp.len()))).collect();
            let spec = ExampleSpec { l, polys, exponents, allow_violation };
            build_example_windows(&spec)?;
            let mut cfg = AnalysisConfig::from_example(spec);
            cfg.grid.mx = mx;
            cfg.grid.ku = mx;
            if analyze {
                let report = run_analysis(&cfg)?;
                writeln!(io::stdout(), "{}", report.to_json()?)?;
                Ok(())
            } else {
                print(&serde_json::to_value(cfg)?)
            }
        }
        Cmd::Analyze { config, out } => {
            let cfg = AnalysisConfig::from_path(&config)?;
            let report = run_analysis(&cfg)?;
            let text = report.to_json()?;
            match &out {
                Some(p) => {
                    std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
                    writeln!(io::stdout(), "{}", serde_json::to_string(&report.verdict)?.trim_matches('"'))?;
                }
                None => writeln!(io::stdout(), "{text}")?,
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<GaborError>() {
            Some(g) if !operational(g) => {
                println!("{}", json!({ "error": g.to_string() }));
                ExitCode::SUCCESS
            }
            _ => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
