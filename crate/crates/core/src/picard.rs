//! Forward Picard iteration for BSDEs with jumps.
//!
//! Each iteration builds, per path,
//!
//! ```text
//! F^q = ξ + h Σ_{i=1..N} f(t_i, Y^q_i, Z^q_i, U^q_i)
//! ```
//!
//! estimates its chaos coefficients, and sets on the grid
//!
//! ```text
//! Y^{q+1}_j = E_{t_j}(C F^q) - h Σ_{i=1..j} f(t_i, Y^q_i, Z^q_i, U^q_i)
//! Z^{q+1}_j = D^(0)_{t_j} E_{t_j}(C F^q)
//! U^{q+1}_j = D^(1)_{t_j} E_{t_j}(C F^q)
//! ```
//!
//! starting from `(Y, Z, U) = 0`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::chaos::{estimate_with, estimate_with_moments, Basis, ChaosCoefficients, GridEvaluator, DEFAULT_INDEX_CAP};
use crate::error::{Error, Result};
use crate::grid::{sample_paths, GridSpec, PathBatch, PathView};

/// Generator `f(t, y, z, u)` of the BSDE.
pub trait Driver: Send + Sync {
    fn eval(&self, t: f64, y: f64, z: f64, u: f64) -> f64;

    fn describe(&self) -> String {
        "custom".to_string()
    }
}

impl<F> Driver for F
where
    F: Fn(f64, f64, f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64, y: f64, z: f64, u: f64) -> f64 {
        self(t, y, z, u)
    }
}

/// `f ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDriver;

impl Driver for ZeroDriver {
    fn eval(&self, _t: f64, _y: f64, _z: f64, _u: f64) -> f64 {
        0.0
    }

    fn describe(&self) -> String {
        "zero".to_string()
    }
}

/// `f = c u`.
#[derive(Debug, Clone, Copy)]
pub struct LinearJumpDriver {
    pub c: f64,
}

impl Driver for LinearJumpDriver {
    fn eval(&self, _t: f64, _y: f64, _z: f64, u: f64) -> f64 {
        self.c * u
    }

    fn describe(&self) -> String {
        format!("linear_jump(c={})", self.c)
    }
}

/// `f = α y + β z + γ u`.
#[derive(Debug, Clone, Copy)]
pub struct LinearDriver {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Driver for LinearDriver {
    fn eval(&self, _t: f64, y: f64, z: f64, u: f64) -> f64 {
        self.alpha * y + self.beta * z + self.gamma * u
    }

    fn describe(&self) -> String {
        format!("linear(alpha={}, beta={}, gamma={})", self.alpha, self.beta, self.gamma)
    }
}

/// Terminal condition `ξ` as a functional of the path increments.
///
/// Square integrability is the caller's responsibility.
pub trait TerminalFunctional: Send + Sync {
    fn eval(&self, path: PathView<'_>, spec: &GridSpec) -> f64;

    fn describe(&self) -> String {
        "custom".to_string()
    }
}

impl<F> TerminalFunctional for F
where
    F: Fn(PathView<'_>, &GridSpec) -> f64 + Send + Sync,
{
    fn eval(&self, path: PathView<'_>, spec: &GridSpec) -> f64 {
        self(path, spec)
    }
}

/// `ξ = N_T`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PoissonCount;

impl TerminalFunctional for PoissonCount {
    fn eval(&self, path: PathView<'_>, _spec: &GridSpec) -> f64 {
        path.jumps_at(path.intervals()) as f64
    }

    fn describe(&self) -> String {
        "poisson_count".to_string()
    }
}

/// `ξ = exp(aT + b B_T + c N_T)`.
#[derive(Debug, Clone, Copy)]
pub struct ExpLevy {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TerminalFunctional for ExpLevy {
    fn eval(&self, path: PathView<'_>, spec: &GridSpec) -> f64 {
        let n = path.intervals();
        (self.a * spec.horizon() + self.b * path.brownian_at(n, spec) + self.c * path.jumps_at(n) as f64).exp()
    }

    fn describe(&self) -> String {
        format!("exp_levy(a={}, b={}, c={})", self.a, self.b, self.c)
    }
}

/// `ξ = B_T`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrownianTerminal;

impl TerminalFunctional for BrownianTerminal {
    fn eval(&self, path: PathView<'_>, spec: &GridSpec) -> f64 {
        path.brownian_at(path.intervals(), spec)
    }

    fn describe(&self) -> String {
        "brownian".to_string()
    }
}

/// `ξ ≡ value`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTerminal(pub f64);

impl TerminalFunctional for ConstantTerminal {
    fn eval(&self, _path: PathView<'_>, _spec: &GridSpec) -> f64 {
        self.0
    }

    fn describe(&self) -> String {
        format!("constant({})", self.0)
    }
}

/// How evaluation paths relate to the paths used for coefficient estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleMode {
    /// One batch of `M` paths serves both purposes.
    #[default]
    Reuse,
    /// `2M` paths: rows `0..M` estimate coefficients, rows `M..2M` are reported.
    Independent,
}

impl SampleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleMode::Reuse => "reuse",
            SampleMode::Independent => "independent",
        }
    }

    /// Number of paths a run with `samples` Monte Carlo samples needs.
    pub fn path_count(&self, samples: usize) -> usize {
        match self {
            SampleMode::Reuse => samples,
            SampleMode::Independent => 2 * samples,
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reuse" => Ok(SampleMode::Reuse),
            "independent" => Ok(SampleMode::Independent),
            other => Err(Error::invalid(format!(
                "unknown sample mode '{other}' (expected reuse or independent)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub spec: GridSpec,
    /// Chaos order `p`.
    pub order: usize,
    /// Number of Picard iterations.
    pub iterations: usize,
    /// Monte Carlo samples `M`.
    pub samples: usize,
    pub seed: u64,
    pub sample_mode: SampleMode,
    /// Keep the coefficients of every iteration.
    pub retain_history: bool,
    /// Estimate standard errors alongside the final coefficients.
    pub final_moments: bool,
    pub index_cap: usize,
}

impl SolverConfig {
    pub fn new(spec: GridSpec, order: usize, iterations: usize, samples: usize, seed: u64) -> Self {
        Self {
            spec,
            order,
            iterations,
            samples,
            seed,
            sample_mode: SampleMode::Reuse,
            retain_history: false,
            final_moments: false,
            index_cap: DEFAULT_INDEX_CAP,
        }
    }

    pub fn with_sample_mode(mut self, mode: SampleMode) -> Self {
        self.sample_mode = mode;
        self
    }

    pub fn with_history(mut self, retain: bool) -> Self {
        self.retain_history = retain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::invalid("chaos order must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("at least one Picard iteration is required"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        Ok(())
    }

    /// Draws the path batch this configuration consumes.
    pub fn sample_paths(&self) -> Result<PathBatch> {
        sample_paths(self.spec, self.sample_mode.path_count(self.samples), self.seed)
    }
}

/// `(N+1) x M` matrix of grid values; each sample's column is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GridMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for m in 0..cols {
            for j in 0..rows {
                data.push(f(j, m));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn row(&self, row: usize) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.cols).map(move |m| self.get(row, m))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn columns_from(&self, start: usize) -> GridMatrix {
        GridMatrix {
            rows: self.rows,
            cols: self.cols - start,
            data: self.data[start * self.rows..].to_vec(),
        }
    }
}

/// `(Y_0, Z_0, U_0)` after one Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSummary {
    pub iteration: usize,
    pub y0: f64,
    pub z0: f64,
    pub u0: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionGrid {
    pub y: GridMatrix,
    pub z: GridMatrix,
    pub u: GridMatrix,
    /// Coefficients of the last functional `F^{K-1}`.
    pub coeffs_final: ChaosCoefficients,
    /// Row-0 values after each iteration.
    pub trace: Vec<IterationSummary>,
    /// Coefficients of every iteration when requested.
    pub history: Vec<ChaosCoefficients>,
    /// Standard errors of `d0` and each final coefficient, when requested.
    pub coeff_std_errors: Option<Vec<f64>>,
}

impl SolutionGrid {
    pub fn y0(&self) -> f64 {
        self.y.get(0, 0)
    }

    pub fn z0(&self) -> f64 {
        self.z.get(0, 0)
    }

    pub fn u0(&self) -> f64 {
        self.u.get(0, 0)
    }

    pub fn samples(&self) -> usize {
        self.y.cols()
    }
}

/// `ξ^m` for every row of the batch.
pub fn terminal_samples(xi: &dyn TerminalFunctional, paths: &PathBatch) -> Result<Vec<f64>> {
    let spec = *paths.spec();
    (0..paths.samples())
        .into_par_iter()
        .map(|m| {
            let v = xi.eval(paths.row(m), &spec);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(format!("terminal value {v} at sample {m}")))
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn driver_value(
    driver: &dyn Driver,
    t: f64,
    y: f64,
    z: f64,
    u: f64,
    iteration: usize,
    m: usize,
    i: usize,
) -> Result<f64> {
    let v = driver.eval(t, y, z, u);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!(
            "driver value {v} at iteration {iteration}, sample {m}, grid index {i} (y={y}, z={z}, u={u})"
        )))
    }
}

/// `F^m = ξ^m + h Σ_{i=1..N} f(t_i, Y_{i,m}, Z_{i,m}, U_{i,m})` for columns `0..samples`.
pub fn assemble_functional(
    spec: &GridSpec,
    driver: &dyn Driver,
    terminal: &[f64],
    y: &GridMatrix,
    z: &GridMatrix,
    u: &GridMatrix,
    samples: usize,
) -> Result<Vec<f64>> {
    assemble(spec, driver, terminal, y, z, u, samples, 0)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    spec: &GridSpec,
    driver: &dyn Driver,
    terminal: &[f64],
    y: &GridMatrix,
    z: &GridMatrix,
    u: &GridMatrix,
    samples: usize,
    iteration: usize,
) -> Result<Vec<f64>> {
    let n = spec.intervals();
    let h = spec.step();
    (0..samples)
        .into_par_iter()
        .map(|m| {
            let (yc, zc, uc) = (y.column(m), z.column(m), u.column(m));
            let mut integral = 0.0;
            for i in 1..=n {
                integral += driver_value(driver, spec.time(i), yc[i], zc[i], uc[i], iteration, m, i)?;
            }
            Ok(terminal[m] + h * integral)
        })
        .collect()
}

/// Runs the solver on freshly drawn paths.
pub fn solve(config: &SolverConfig, driver: &dyn Driver, xi: &dyn TerminalFunctional) -> Result<SolutionGrid> {
    config.validate()?;
    let paths = config.sample_paths()?;
    solve_with_paths(config, driver, xi, &paths)
}

/// Runs the solver on a given batch, which must hold
/// `config.sample_mode.path_count(config.samples)` rows on `config.spec`.
pub fn solve_with_paths(
    config: &SolverConfig,
    driver: &dyn Driver,
    xi: &dyn TerminalFunctional,
    paths: &PathBatch,
) -> Result<SolutionGrid> {
    config.validate()?;
    let spec = config.spec;
    if *paths.spec() != spec {
        return Err(Error::SpecMismatch(format!(
            "paths on {:?}, solver on {:?}",
            paths.spec(),
            spec
        )));
    }
    let total = config.sample_mode.path_count(config.samples);
    if paths.samples() != total {
        return Err(Error::LengthMismatch {
            expected: total,
            actual: paths.samples(),
        });
    }

    let basis = Arc::new(Basis::with_cap(spec, config.order, config.index_cap)?);
    let estimation_paths = match config.sample_mode {
        SampleMode::Reuse => None,
        SampleMode::Independent => Some(paths.split_at(config.samples)?.0),
    };
    let estimation_paths = estimation_paths.as_ref().unwrap_or(paths);

    let n = spec.intervals();
    let h = spec.step();
    let terminal = terminal_samples(xi, paths)?;
    let mut y = GridMatrix::zeros(n + 1, total);
    let mut z = GridMatrix::zeros(n + 1, total);
    let mut u = GridMatrix::zeros(n + 1, total);
    let mut trace = Vec::with_capacity(config.iterations);
    let mut history = Vec::new();
    let mut coeffs = None;
    let mut std_errors = None;

    for q in 0..config.iterations {
        let f = assemble(&spec, driver, &terminal, &y, &z, &u, config.samples, q)?;
        let c = if config.final_moments && q + 1 == config.iterations {
            let est = estimate_with_moments(&basis, &f, estimation_paths)?;
            std_errors = Some(est.standard_errors());
            est.coefficients
        } else {
            estimate_with(&basis, &f, estimation_paths)?
        };

        y.data
            .par_chunks_mut(n + 1)
            .zip(z.data.par_chunks_mut(n + 1))
            .zip(u.data.par_chunks_mut(n + 1))
            .enumerate()
            .try_for_each_init(
                || (GridEvaluator::new(&c), vec![0.0; n + 1]),
                |(evaluator, integral), (m, ((yc, zc), uc))| -> Result<()> {
                    // Running integral of the driver along the previous iterate.
                    integral[0] = 0.0;
                    for i in 1..=n {
                        let fv = driver_value(driver, spec.time(i), yc[i], zc[i], uc[i], q, m, i)?;
                        integral[i] = integral[i - 1] + h * fv;
                    }
                    evaluator.evaluate(paths.row(m), yc, zc, uc)?;
                    for i in 1..=n {
                        yc[i] -= integral[i];
                    }
                    if let Some(i) = (0..=n).find(|&i| !(yc[i].is_finite() && zc[i].is_finite() && uc[i].is_finite())) {
                        return Err(Error::NonFinite(format!(
                            "iterate at iteration {q}, sample {m}, grid index {i}"
                        )));
                    }
                    Ok(())
                },
            )?;

        trace.push(IterationSummary {
            iteration: q + 1,
            y0: y.get(0, 0),
            z0: z.get(0, 0),
            u0: u.get(0, 0),
        });
        if config.retain_history {
            history.push(c.clone());
        }
        coeffs = Some(c);
    }

    let coeffs_final = coeffs.expect("at least one iteration ran");
    let (y, z, u) = match config.sample_mode {
        SampleMode::Reuse => (y, z, u),
        SampleMode::Independent => (
            y.columns_from(config.samples),
            z.columns_from(config.samples),
            u.columns_from(config.samples),
        ),
    };
    debug_assert!(y.row(0).all(|v| v == coeffs_final.d0()));
    Ok(SolutionGrid {
        y,
        z,
        u,
        coeffs_final,
        trace,
        history,
        coeff_std_errors: std_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(2.0, 4, 1.0).unwrap()
    }

    #[test]
    fn terminal_examples() {
        let s = GridSpec::new(2.0, 3, 1.0).unwrap();
        let h = s.step();
        let c = 1.0 / (3.0 * h.sqrt());
        let g = [c, c, c];
        let q = [1u32, 0, 2];
        let path = PathView::new(&g, &q).unwrap();
        assert_eq!(PoissonCount.eval(path, &s), 3.0);
        assert_eq!(ExpLevy { a: 0.0, b: 0.0, c: 0.0 }.eval(path, &s), 1.0);
        let q2 = [1u32, 0, 1];
        let path2 = PathView::new(&g, &q2).unwrap();
        let v = ExpLevy {
            a: -0.1,
            b: 0.1,
            c: 0.2,
        }
        .eval(path2, &s);
        assert!((v - 0.3f64.exp()).abs() < 1e-12, "{v}");
        assert!((BrownianTerminal.eval(path, &s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drivers() {
        assert_eq!(LinearJumpDriver { c: 0.5 }.eval(0.3, 9.0, 9.0, 2.0), 1.0);
        let d = LinearDriver {
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.2,
        };
        assert!((d.eval(0.0, 1.0, 2.0, 3.0) - 1.5).abs() < 1e-15);
        let closure = |_t: f64, y: f64, _z: f64, _u: f64| -y;
        assert_eq!(Driver::eval(&closure, 0.0, 2.0, 0.0, 0.0), -2.0);
        assert_eq!(closure.describe(), "custom");
    }

    #[test]
    fn config_validation() {
        let base = SolverConfig::new(spec(), 2, 3, 100, 1);
        assert!(base.validate().is_ok());
        assert!(SolverConfig {
            order: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            iterations: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            samples: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert_eq!("independent".parse::<SampleMode>().unwrap(), SampleMode::Independent);
        assert!("both".parse::<SampleMode>().is_err());
    }

    #[test]
    fn sizing_error_propagates() {
        let mut cfg = SolverConfig::new(GridSpec::new(1.0, 50, 1.0).unwrap(), 3, 1, 10, 1);
        cfg.index_cap = 100;
        assert!(matches!(
            solve(&cfg, &ZeroDriver, &PoissonCount),
            Err(Error::Sizing { .. })
        ));
    }

    #[test]
    fn non_finite_driver_is_reported() {
        let cfg = SolverConfig::new(spec(), 1, 2, 50, 1);
        let bad = |t: f64, _y: f64, _z: f64, _u: f64| if t > 1.0 { f64::NAN } else { 0.0 };
        match solve(&cfg, &bad, &PoissonCount) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("iteration 0"), "{msg}"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
        let bad_terminal = |_p: PathView<'_>, _s: &GridSpec| f64::INFINITY;
        assert!(matches!(
            solve(&cfg, &ZeroDriver, &bad_terminal),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn constant_terminal_without_driver() {
        let cfg = SolverConfig::new(spec(), 2, 1, 20_000, 3);
        let sol = solve(&cfg, &ZeroDriver, &ConstantTerminal(1.75)).unwrap();
        assert!(sol.y.row(0).all(|v| v == 1.75));
        // Remaining rows carry only Monte Carlo noise of the higher coefficients.
        // Each of the 44 coefficients has variance about 1.75^2 / M.
        let y = sol.y.as_slice();
        let rms = (y.iter().map(|v| (v - 1.75).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
        assert!(rms < 1.5 * 1.75 * (44.0f64 / 20_000.0).sqrt(), "{rms}");
        let mean_z = sol.z.as_slice().iter().map(|v| v.abs()).sum::<f64>() / sol.z.as_slice().len() as f64;
        let mean_u = sol.u.as_slice().iter().map(|v| v.abs()).sum::<f64>() / sol.u.as_slice().len() as f64;
        assert!(mean_z < 0.05 && mean_u < 0.1, "{mean_z} {mean_u}");
    }

    #[test]
    fn matches_pointwise_iteration() {
        // The same recursion written with the single-point evaluators.
        use crate::chaos::{conditional, estimate, malliavin_b, malliavin_p};
        let spec = GridSpec::new(1.0, 3, 2.0).unwrap();
        let driver = LinearDriver {
            alpha: 0.3,
            beta: -0.4,
            gamma: 0.7,
        };
        let xi = ExpLevy { a: 0.1, b: 0.5, c: 0.3 };
        let cfg = SolverConfig::new(spec, 2, 3, 400, 12);
        let paths = cfg.sample_paths().unwrap();
        let sol = solve_with_paths(&cfg, &driver, &xi, &paths).unwrap();

        let (n, h) = (spec.intervals(), spec.step());
        let mut y = vec![vec![0.0; n + 1]; cfg.samples];
        let mut z = y.clone();
        let mut u = y.clone();
        for _ in 0..cfg.iterations {
            let fv: Vec<Vec<f64>> = (0..cfg.samples)
                .map(|m| {
                    (0..=n)
                        .map(|i| driver.eval(spec.time(i), y[m][i], z[m][i], u[m][i]))
                        .collect()
                })
                .collect();
            let f: Vec<f64> = (0..cfg.samples)
                .map(|m| xi.eval(paths.row(m), &spec) + h * (1..=n).map(|i| fv[m][i]).sum::<f64>())
                .collect();
            let c = estimate(&f, &paths, cfg.order).unwrap();
            for m in 0..cfg.samples {
                let row = paths.row(m);
                for j in 0..=n {
                    y[m][j] = conditional(&c, row, j).unwrap() - h * (1..=j).map(|i| fv[m][i]).sum::<f64>();
                    z[m][j] = malliavin_b(&c, row, j).unwrap();
                    u[m][j] = malliavin_p(&c, row, j).unwrap();
                }
            }
        }
        for m in 0..cfg.samples {
            for j in 0..=n {
                for (got, want) in [
                    (sol.y.get(j, m), y[m][j]),
                    (sol.z.get(j, m), z[m][j]),
                    (sol.u.get(j, m), u[m][j]),
                ] {
                    assert!(
                        (got - want).abs() <= 1e-9 * (1.0 + want.abs()),
                        "m={m} j={j}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn row_zero_invariants() {
        let cfg = SolverConfig::new(spec(), 2, 3, 5_000, 8);
        let sol = solve(&cfg, &LinearJumpDriver { c: 0.5 }, &PoissonCount).unwrap();
        let c = &sol.coeffs_final;
        let h = cfg.spec.step();
        assert!(sol.y.row(0).all(|v| v == c.d0()));
        assert!(sol.z.row(0).all(|v| v == c.first_brownian() / h.sqrt()));
        assert!(sol.u.row(0).all(|v| v == c.first_poisson()));
        assert_eq!(sol.trace.len(), 3);
        assert!(sol.history.is_empty());
    }

    #[test]
    fn history_and_independent_mode() {
        let cfg = SolverConfig::new(spec(), 2, 2, 3_000, 5)
            .with_sample_mode(SampleMode::Independent)
            .with_history(true);
        let paths = cfg.sample_paths().unwrap();
        assert_eq!(paths.samples(), 6_000);
        let sol = solve_with_paths(&cfg, &ZeroDriver, &BrownianTerminal, &paths).unwrap();
        assert_eq!(sol.samples(), 3_000);
        assert_eq!(sol.history.len(), 2);
        // Coefficients come from the first half only.
        let (head, tail) = paths.split_at(3_000).unwrap();
        let xi = terminal_samples(&BrownianTerminal, &head).unwrap();
        let direct = crate::chaos::estimate(&xi, &head, 2).unwrap();
        assert_eq!(direct.d0(), sol.coeffs_final.d0());
        // Reported rows are evaluated on the second half.
        let mut ev = GridEvaluator::new(&sol.coeffs_final);
        let (mut yv, mut zv, mut uv) = (vec![0.0; 5], vec![0.0; 5], vec![0.0; 5]);
        ev.evaluate(tail.row(7), &mut yv, &mut zv, &mut uv).unwrap();
        assert_eq!(sol.y.column(7), &yv[..]);
        assert!(solve_with_paths(&cfg, &ZeroDriver, &BrownianTerminal, &head).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = SolverConfig::new(spec(), 2, 3, 4_100, 13);
        let driver = LinearDriver {
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.2,
        };
        let xi = ExpLevy {
            a: -0.1,
            b: 0.1,
            c: 0.2,
        };
        let run = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| solve(&cfg, &driver, &xi).unwrap())
        };
        let (a, b) = (run(1), run(4));
        let bits = |g: &GridMatrix| g.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.y), bits(&b.y));
        assert_eq!(bits(&a.z), bits(&b.z));
        assert_eq!(bits(&a.u), bits(&b.u));
    }
}
