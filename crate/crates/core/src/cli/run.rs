use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::ExperimentConfig;
use crate::benchmarks::{exact_grid, solution_error};
use crate::error::{Error, Result};
use crate::picard::{solve_with_paths, SampleMode};
use crate::registry::BenchmarkRegistry;

pub const CSV_HEADER: &str = "example,p,N,M,q,seed,sample_mode,Y0,Z0,U0,exactY0,exactZ0,exactU0,errY,errZ,errU,wall_ms";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write the final chaos coefficients of every run next to the output.
    pub dump_coeffs: bool,
}

/// One completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub example: String,
    pub order: usize,
    pub intervals: usize,
    pub samples: usize,
    pub iterations: usize,
    pub seed: u64,
    pub sample_mode: SampleMode,
    pub solution: [f64; 3],
    pub exact: [f64; 3],
    pub errors: [f64; 3],
    pub wall_ms: Option<f64>,
}

impl RunRecord {
    pub fn csv_row(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let mut fields = vec![
            self.example.clone(),
            self.order.to_string(),
            self.intervals.to_string(),
            self.samples.to_string(),
            self.iterations.to_string(),
            self.seed.to_string(),
            self.sample_mode.to_string(),
        ];
        fields.extend(
            self.solution
                .iter()
                .chain(&self.exact)
                .chain(&self.errors)
                .map(|&v| f(v)),
        );
        fields.push(self.wall_ms.map(|ms| format!("{ms:.3}")).unwrap_or_default());
        fields.join(",")
    }
}

/// Path of the coefficient dump for sweep point `point`.
pub fn coeffs_path(output: &Path, point: usize) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    output.with_file_name(format!("{stem}_coeffs_{point}.csv"))
}

/// Runs every sweep point and writes one CSV row per point to `output`.
pub fn run(
    config: &ExperimentConfig,
    registry: &BenchmarkRegistry,
    output: &Path,
    options: &RunOptions,
) -> Result<Vec<RunRecord>> {
    let mut out = BufWriter::new(File::create(output)?);
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;

    let mut records = Vec::new();
    for (point, settings) in config.points().into_iter().enumerate() {
        let mut solver = settings.to_config()?;
        solver.final_moments = options.dump_coeffs;
        let bench = registry.create(&config.example, &config.params, &solver.spec)?;
        let paths = solver.sample_paths()?;

        let start = Instant::now();
        let solution = solve_with_paths(&solver, bench.driver(), bench.terminal(), &paths)?;
        let elapsed = start.elapsed();

        let eval_paths = match solver.sample_mode {
            SampleMode::Reuse => paths,
            SampleMode::Independent => paths.split_at(solver.samples)?.1,
        };
        let exact = exact_grid(bench.as_ref(), &eval_paths);
        let err = solution_error(&solution, &exact, &solver.spec)?;
        let exact0 = bench.exact(0.0, 0.0, 0);

        let record = RunRecord {
            example: config.example.clone(),
            order: solver.order,
            intervals: solver.spec.intervals(),
            samples: solver.samples,
            iterations: solver.iterations,
            seed: solver.seed,
            sample_mode: solver.sample_mode,
            solution: [solution.y0(), solution.z0(), solution.u0()],
            exact: [exact0.y, exact0.z, exact0.u],
            errors: [err.y, err.z, err.u],
            wall_ms: config.record_timing.then_some(elapsed.as_secs_f64() * 1e3),
        };
        writeln!(out, "{}", record.csv_row())?;
        out.flush()?;

        if options.dump_coeffs {
            let path = coeffs_path(output, point);
            let file = BufWriter::new(File::create(&path)?);
            solution
                .coeffs_final
                .write_csv(file, solution.coeff_std_errors.as_deref())?;
        }
        records.push(record);
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
    Ok(records)
}
