//! Numerical analysis of multiply generated Gabor systems
//! `G(1, p/q, A) = {e^{2πimx} g(x − np/q) : g ∈ A}` through the Zak transform.
//!
//! The pipeline samples windows, maps them to the torus with [`zak::zak_forward`],
//! assembles the Zibulski–Zeevi field `G` and its weight `W` ([`zibulski`]),
//! measures the matrix A₂ characteristic of `W` ([`muckenhoupt`]), builds
//! biorthogonal duals ([`duality`]) and measures ordered partial sums
//! ([`ordering`], [`partial_sums`]). [`analysis::run_analysis`] runs all of it
//! from one JSON config.
//!
//! ```
//! use gabor_schauder::prelude::*;
//!
//! let grid = make_grid(1, 1, 1, 16, 16, 1)?;
//! let w = build_weight(&[WindowSpec::indicator(0, 1)], &grid)?;
//! let report = a2_product_sup(&[w], Family::Exhaustive, &A2Options::default())?;
//! assert!((report.sup - 1.0).abs() < 1e-12);
//! # Ok::<(), gabor_schauder::GaborError>(())
//! ```

pub mod error;
pub mod lattice;
pub mod poly;
pub mod window;
pub mod zak;
pub mod linalg;
pub mod zibulski;
pub mod muckenhoupt;
pub mod duality;
pub mod ordering;
pub mod partial_sums;
pub mod example;
pub mod analysis;
pub mod export;

pub use error::{GaborError, Result};

pub mod prelude {
    pub use crate::analysis::{build_system, build_weight, run_analysis, AnalysisConfig, AnalysisReport, Verdict};
    pub use crate::duality::{biorthogonality_gram, dual_window, invert_w, DualOptions};
    pub use crate::error::{GaborError, Result};
    pub use crate::example::{build_example_windows, ExampleSpec};
    pub use crate::lattice::{make_grid, GridSpec, LatticeParams, TrigIndex};
    pub use crate::muckenhoupt::{a2_product_sup, scalar_a2_sup, A2Options, Family, SingularPolicy};
    pub use crate::ordering::{lambda_enumeration, lift_enumeration, Decisions};
    pub use crate::partial_sums::{
        analyze, convergence_experiment, operator_norm, ordered_partial_sum, rect_partial_sum, NormMethod, PartialSumOp,
    };
    pub use crate::poly::Poly;
    pub use crate::window::{sample_window, WindowSpec};
    pub use crate::zak::{zak_forward, zak_inverse, ZakField};
    pub use crate::zibulski::{build_g, build_w, WField, ZakDomainVector, ZakSystem};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/zak.md")]
    mod zak {}
    #[doc = include_str!("../../../book/src/weight.md")]
    mod weight {}
    #[doc = include_str!("../../../book/src/a2.md")]
    mod a2 {}
    #[doc = include_str!("../../../book/src/duals.md")]
    mod duals {}
    #[doc = include_str!("../../../book/src/orderings.md")]
    mod orderings {}
    #[doc = include_str!("../../../book/src/partial-sums.md")]
    mod partial_sums {}
    #[doc = include_str!("../../../book/src/example.md")]
    mod example {}
    #[doc = include_str!("../../../book/src/config.md")]
    mod config {}
}
