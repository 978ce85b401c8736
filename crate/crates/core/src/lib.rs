//! Forward Picard solver for backward stochastic differential equations
//! driven by a Brownian motion and a Poisson process.
//!
//! Conditional expectations and Malliavin derivatives are read off a
//! truncated Wiener-Poisson chaos expansion built from Hermite and Charlier
//! polynomials of the grid increments, with Monte Carlo coefficients.
//!
//! ```no_run
//! use chaos_bsde::benchmarks::{Benchmark, Example1, Example1Params};
//! use chaos_bsde::{solve, GridSpec, SolverConfig};
//!
//! let spec = GridSpec::new(1.0, 20, 1.0)?;
//! let bench = Example1::new(Example1Params { c: 0.5, horizon: 1.0 });
//! let config = SolverConfig::new(spec, 2, 5, 200_000, 7);
//! let sol = solve(&config, bench.driver(), bench.terminal())?;
//! println!("Y0 = {}, Z0 = {}, U0 = {}", sol.y0(), sol.z0(), sol.u0());
//! # Ok::<(), chaos_bsde::Error>(())
//! ```

pub mod benchmarks;
pub mod chaos;
pub mod cli;
pub mod error;
pub mod grid;
pub mod orthopoly;
pub mod picard;
pub mod registry;

pub use error::{Error, Result};
pub use grid::{sample_paths, GridSpec, PathBatch, PathView};
pub use picard::{solve, solve_with_paths, Driver, SampleMode, SolutionGrid, SolverConfig, TerminalFunctional};
pub use registry::BenchmarkRegistry;
