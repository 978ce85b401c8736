//! Closed-form reference problems and the discrete error norm.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PathBatch};
use crate::picard::{
    BrownianTerminal, ConstantTerminal, Driver, ExpLevy, GridMatrix, LinearDriver, LinearJumpDriver, PoissonCount,
    SolutionGrid, TerminalFunctional, ZeroDriver,
};

/// Exact `(Y, Z, U)` at a single time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValue {
    pub y: f64,
    pub z: f64,
    pub u: f64,
}

/// A BSDE with known solution: driver, terminal condition and closed form.
pub trait Benchmark: Send + Sync {
    fn name(&self) -> &str;

    fn driver(&self) -> &dyn Driver;

    fn terminal(&self) -> &dyn TerminalFunctional;

    /// Solution at time `t` given `B_t` and `N_t`.
    fn exact(&self, t: f64, brownian: f64, jumps: u64) -> ExactValue;
}

/// `dY = -c U dt + Z dB + U (dN - dt)`, `ξ = N_T`, intensity 1.
#[derive(Debug, Clone, Copy)]
pub struct Example1Params {
    pub c: f64,
    pub horizon: f64,
}

impl Example1Params {
    pub const KAPPA: f64 = 1.0;
}

/// `(N_t + (1 + c)(T - t), 0, 1)`.
pub fn example1_exact(params: &Example1Params, t: f64, jumps: u64) -> ExactValue {
    ExactValue {
        y: jumps as f64 + (1.0 + params.c) * (params.horizon - t),
        z: 0.0,
        u: 1.0,
    }
}

/// `dY = -(αY + βZ + γU) dt + Z dB + U dÑ`, `ξ = exp(aT + b B_T + c N_T)`.
#[derive(Debug, Clone, Copy)]
pub struct Example2Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub kappa: f64,
    pub horizon: f64,
}

impl Example2Params {
    /// Parameter set of the published experiment.
    pub fn reference() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.2,
            a: -0.1,
            b: 0.1,
            c: 0.2,
            kappa: 3.0,
            horizon: 2.0,
        }
    }
}

/// `Y_t = exp(aT + b B_t + c N_t + (α + ((b+β)^2 - β^2)/2 + (e^c - 1)(κ + γ))(T - t))`,
/// `Z_t = b Y_t`, `U_t = (e^c - 1) Y_t`.
///
/// `Z` and `U` are left limits of `b Y` and `(e^c-1) Y`; at a fixed time these
/// coincide with the values built from `(B_t, N_t)`, which is the grid
/// convention used for comparisons.
pub fn example2_exact(params: &Example2Params, t: f64, brownian: f64, jumps: u64) -> ExactValue {
    let p = params;
    let jump_mult = p.c.exp() - 1.0;
    let rate = p.alpha + ((p.b + p.beta).powi(2) - p.beta.powi(2)) / 2.0 + jump_mult * (p.kappa + p.gamma);
    let y = (p.a * p.horizon + p.b * brownian + p.c * jumps as f64 + rate * (p.horizon - t)).exp();
    ExactValue {
        y,
        z: p.b * y,
        u: jump_mult * y,
    }
}

#[derive(Debug, Clone)]
pub struct Example1 {
    pub params: Example1Params,
    driver: LinearJumpDriver,
}

impl Example1 {
    pub fn new(params: Example1Params) -> Self {
        Self {
            params,
            driver: LinearJumpDriver { c: params.c },
        }
    }
}

impl Benchmark for Example1 {
    fn name(&self) -> &str {
        "example1"
    }

    fn driver(&self) -> &dyn Driver {
        &self.driver
    }

    fn terminal(&self) -> &dyn TerminalFunctional {
        &PoissonCount
    }

    fn exact(&self, t: f64, _brownian: f64, jumps: u64) -> ExactValue {
        example1_exact(&self.params, t, jumps)
    }
}

#[derive(Debug, Clone)]
pub struct Example2 {
    pub params: Example2Params,
    driver: LinearDriver,
    terminal: ExpLevy,
}

impl Example2 {
    pub fn new(params: Example2Params) -> Self {
        Self {
            params,
            driver: LinearDriver {
                alpha: params.alpha,
                beta: params.beta,
                gamma: params.gamma,
            },
            terminal: ExpLevy {
                a: params.a,
                b: params.b,
                c: params.c,
            },
        }
    }
}

impl Benchmark for Example2 {
    fn name(&self) -> &str {
        "example2"
    }

    fn driver(&self) -> &dyn Driver {
        &self.driver
    }

    fn terminal(&self) -> &dyn TerminalFunctional {
        &self.terminal
    }

    fn exact(&self, t: f64, brownian: f64, jumps: u64) -> ExactValue {
        example2_exact(&self.params, t, brownian, jumps)
    }
}

/// `f ≡ 0`, `ξ = B_T`: `(B_t, 1, 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrownianMartingale;

impl Benchmark for BrownianMartingale {
    fn name(&self) -> &str {
        "brownian"
    }

    fn driver(&self) -> &dyn Driver {
        &ZeroDriver
    }

    fn terminal(&self) -> &dyn TerminalFunctional {
        &BrownianTerminal
    }

    fn exact(&self, _t: f64, brownian: f64, _jumps: u64) -> ExactValue {
        ExactValue {
            y: brownian,
            z: 1.0,
            u: 0.0,
        }
    }
}

/// `f ≡ 0`, `ξ = N_T`: `(N_t + κ(T - t), 0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct PoissonMartingale {
    pub kappa: f64,
    pub horizon: f64,
}

impl Benchmark for PoissonMartingale {
    fn name(&self) -> &str {
        "poisson_count"
    }

    fn driver(&self) -> &dyn Driver {
        &ZeroDriver
    }

    fn terminal(&self) -> &dyn TerminalFunctional {
        &PoissonCount
    }

    fn exact(&self, t: f64, _brownian: f64, jumps: u64) -> ExactValue {
        ExactValue {
            y: jumps as f64 + self.kappa * (self.horizon - t),
            z: 0.0,
            u: 1.0,
        }
    }
}

/// `f ≡ 0`, `ξ ≡ value`.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    terminal: ConstantTerminal,
}

impl Constant {
    pub fn new(value: f64) -> Self {
        Self {
            terminal: ConstantTerminal(value),
        }
    }
}

impl Benchmark for Constant {
    fn name(&self) -> &str {
        "constant"
    }

    fn driver(&self) -> &dyn Driver {
        &ZeroDriver
    }

    fn terminal(&self) -> &dyn TerminalFunctional {
        &self.terminal
    }

    fn exact(&self, _t: f64, _brownian: f64, _jumps: u64) -> ExactValue {
        ExactValue {
            y: self.terminal.0,
            z: 0.0,
            u: 0.0,
        }
    }
}

/// Grid values of an exact solution along a batch of paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactGrid {
    pub y: GridMatrix,
    pub z: GridMatrix,
    pub u: GridMatrix,
}

/// Evaluates the benchmark at every `(t_r, B_{t_r}, N_{t_r})` of every path,
/// with `B` and `N` rebuilt from the increments up to and including interval `r`.
pub fn exact_grid(bench: &dyn Benchmark, paths: &PathBatch) -> ExactGrid {
    let spec = *paths.spec();
    let n = spec.intervals();
    let sqrt_h = spec.step().sqrt();
    let mut values = Vec::with_capacity(paths.samples() * (n + 1));
    for path in paths.rows() {
        let (mut b, mut jumps) = (0.0, 0u64);
        values.push(bench.exact(spec.time(0), b, jumps));
        for r in 1..=n {
            b += sqrt_h * path.gauss[r - 1];
            jumps += u64::from(path.counts[r - 1]);
            values.push(bench.exact(spec.time(r), b, jumps));
        }
    }
    let at = |j: usize, m: usize| values[m * (n + 1) + j];
    ExactGrid {
        y: GridMatrix::from_fn(n + 1, paths.samples(), |j, m| at(j, m).y),
        z: GridMatrix::from_fn(n + 1, paths.samples(), |j, m| at(j, m).z),
        u: GridMatrix::from_fn(n + 1, paths.samples(), |j, m| at(j, m).u),
    }
}

/// Squared discrete errors in the solution norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTriple {
    pub y: f64,
    pub z: f64,
    pub u: f64,
}

/// `errY = mean_m max_r |ΔY|^2`, `errZ = mean_m h Σ_{r>=1} |ΔZ|^2`,
/// `errU = κ mean_m h Σ_{r>=1} |ΔU|^2`.
pub fn error_norm(
    approx: (&GridMatrix, &GridMatrix, &GridMatrix),
    exact: (&GridMatrix, &GridMatrix, &GridMatrix),
    spec: &GridSpec,
) -> Result<ErrorTriple> {
    let n = spec.intervals();
    let shape = (approx.0.rows(), approx.0.cols());
    for g in [approx.0, approx.1, approx.2, exact.0, exact.1, exact.2] {
        if (g.rows(), g.cols()) != shape {
            return Err(Error::SpecMismatch(format!(
                "grid shape {}x{} differs from {}x{}",
                g.rows(),
                g.cols(),
                shape.0,
                shape.1
            )));
        }
    }
    if shape.0 != n + 1 {
        return Err(Error::SpecMismatch(format!(
            "grid has {} rows, expected {}",
            shape.0,
            n + 1
        )));
    }
    let h = spec.step();
    let m = shape.1 as f64;
    let (mut ey, mut ez, mut eu) = (0.0, 0.0, 0.0);
    for col in 0..shape.1 {
        let diff_sq = |a: &GridMatrix, b: &GridMatrix, r: usize| (a.get(r, col) - b.get(r, col)).powi(2);
        ey += (0..=n).map(|r| diff_sq(approx.0, exact.0, r)).fold(0.0, f64::max);
        ez += h * (1..=n).map(|r| diff_sq(approx.1, exact.1, r)).sum::<f64>();
        eu += h * (1..=n).map(|r| diff_sq(approx.2, exact.2, r)).sum::<f64>();
    }
    Ok(ErrorTriple {
        y: ey / m,
        z: ez / m,
        u: spec.kappa() * eu / m,
    })
}

/// [`error_norm`] of a solver run against an exact grid.
pub fn solution_error(approx: &SolutionGrid, exact: &ExactGrid, spec: &GridSpec) -> Result<ErrorTriple> {
    error_norm((&approx.y, &approx.z, &approx.u), (&exact.y, &exact.z, &exact.u), spec)
}
