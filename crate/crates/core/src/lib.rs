//! Generalized Gamma-type positive linear operators `M_{n,k}` on the
//! polynomial weighted spaces `C_p[0, inf)`.
//!
//! The crate provides:
//!
//! - [`operator`]: the operators themselves — kernel and Gamma densities,
//!   adaptive evaluation of `M_{n,k}(f; x)`, exact rational raw and central
//!   moments, the linear-reproducing modification `H_{n,k}`, and an
//!   independent density-composition route to the kernel;
//! - [`coefficients`]: arbitrary-precision rational arithmetic for the
//!   factorial ratios behind every closed-form constant;
//! - [`spaces`]: weights `w_p`, grid-based weighted norms, first and second
//!   moduli of smoothness, Steklov means, and Lipschitz-exponent estimation;
//! - [`experiments`]: deterministic sweeps that verify the norm-boundedness
//!   constants, second-moment decay, first-order and two-modulus
//!   convergence bounds, with reports serialized by [`report`];
//! - [`cli`]: the `gamma-approx` command-line front end.
//!
//! ```
//! use gamma_approx::operator::GammaOperator;
//! use gamma_approx::quadrature::QuadratureSpec;
//! use gamma_approx::spaces::lookup;
//!
//! let op = GammaOperator::new(10, 2)?;
//! let f = lookup("e1").unwrap(); // f(t) = t
//! let r = op.apply(&f, 1.0, &QuadratureSpec::default())?;
//! // M_{n,k}(t; x) = (n-k+1)/n * x = 0.9 here
//! assert!((r.value - 0.9).abs() < 1e-9);
//! # Ok::<(), gamma_approx::operator::OperatorError>(())
//! ```
//!
//! The narrative guide under `book/` walks through the math; its code
//! snippets compile and run as doctests of this crate.

pub mod cli;
pub mod coefficients;
pub mod experiments;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod spaces;

// Every fenced Rust snippet in the book runs under `cargo test --doc`.
#[cfg(doctest)]
#[doc(hidden)]
pub mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(operators, "../../../book/src/operators.md");
    chapter!(moments, "../../../book/src/moments.md");
    chapter!(weighted_spaces, "../../../book/src/weighted-spaces.md");
    chapter!(steklov_means, "../../../book/src/steklov-means.md");
    chapter!(verification, "../../../book/src/verification.md");
    chapter!(cli, "../../../book/src/cli.md");
}
