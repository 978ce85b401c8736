//! `key = value` experiment files.
//!
//! ```text
//! # Example 1 convergence in M
//! example = example1
//! c = 0.5
//! T = 1
//! N = 20
//! kappa = 1
//! p = 2
//! q = 5
//! M = 1000
//! seed = 7
//! sweep_axis = M
//! sweep_values = 1000, 5000, 10000
//! output = example1_m.csv
//! ```
//!
//! Blank lines and `#` comments are ignored; keys are case-sensitive. Any key
//! that is not a solver setting is treated as a parameter of the example.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::chaos::DEFAULT_INDEX_CAP;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::picard::{SampleMode, SolverConfig};
use crate::registry::{BenchmarkRegistry, ParamMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Samples,
    Intervals,
    Order,
    Iterations,
    Seed,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Samples => "M",
            SweepAxis::Intervals => "N",
            SweepAxis::Order => "p",
            SweepAxis::Iterations => "q",
            SweepAxis::Seed => "seed",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "M" => SweepAxis::Samples,
            "N" => SweepAxis::Intervals,
            "p" => SweepAxis::Order,
            "q" => SweepAxis::Iterations,
            "seed" => SweepAxis::Seed,
            other => return Err(format!("unknown sweep axis '{other}' (expected M, N, p, q or seed)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<u64>,
}

/// Solver settings before a sweep value is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub horizon: f64,
    pub intervals: usize,
    pub kappa: f64,
    pub order: usize,
    pub iterations: usize,
    pub samples: usize,
    pub seed: u64,
    pub sample_mode: SampleMode,
    pub index_cap: usize,
}

impl SolverSettings {
    pub fn to_config(&self) -> Result<SolverConfig> {
        let spec = GridSpec::new(self.horizon, self.intervals, self.kappa)?;
        let mut cfg = SolverConfig::new(spec, self.order, self.iterations, self.samples, self.seed)
            .with_sample_mode(self.sample_mode);
        cfg.index_cap = self.index_cap;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Settings with one sweep coordinate replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: u64) -> Self {
        let mut s = self.clone();
        match axis {
            SweepAxis::Samples => s.samples = value as usize,
            SweepAxis::Intervals => s.intervals = value as usize,
            SweepAxis::Order => s.order = value as usize,
            SweepAxis::Iterations => s.iterations = value as usize,
            SweepAxis::Seed => s.seed = value,
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub example: String,
    pub params: ParamMap,
    pub solver: SolverSettings,
    pub sweep: Option<Sweep>,
    pub output: Option<PathBuf>,
    /// When false the `wall_ms` column is left empty so output is byte-stable.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path, registry: &BenchmarkRegistry) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, registry)
    }

    pub fn parse(text: &str, registry: &BenchmarkRegistry) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Config {
                    line,
                    message: "empty key".into(),
                });
            }
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    message: format!("empty value for '{key}'"),
                });
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line, value.to_string())) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key '{key}' (first set on line {first})"),
                });
            }
        }

        let mut take = |key: &str| entries.remove(key);
        let example = take("example").ok_or_else(|| missing("example"))?;
        let horizon = typed::<f64>(take("T"), "T")?.ok_or_else(|| missing("T"))?;
        let intervals = typed::<usize>(take("N"), "N")?.ok_or_else(|| missing("N"))?;
        let kappa = typed::<f64>(take("kappa"), "kappa")?.unwrap_or(1.0);
        let order = typed::<usize>(take("p"), "p")?.ok_or_else(|| missing("p"))?;
        let iterations = typed::<usize>(take("q"), "q")?.ok_or_else(|| missing("q"))?;
        let samples = typed::<usize>(take("M"), "M")?.ok_or_else(|| missing("M"))?;
        let seed = typed::<u64>(take("seed"), "seed")?.unwrap_or(0);
        let sample_mode = typed::<SampleMode>(take("sample_mode"), "sample_mode")?.unwrap_or_default();
        let index_cap = typed::<usize>(take("index_cap"), "index_cap")?.unwrap_or(DEFAULT_INDEX_CAP);
        let record_timing = typed::<bool>(take("record_timing"), "record_timing")?.unwrap_or(true);
        let output = take("output").map(|(_, v)| PathBuf::from(v));
        let axis = typed::<SweepAxis>(take("sweep_axis"), "sweep_axis")?;
        let values = take("sweep_values");

        let sweep = match (axis, values) {
            (None, None) => None,
            (Some(axis), Some((line, raw))) => Some(Sweep {
                axis,
                values: parse_sweep_values(line, &raw)?,
            }),
            (Some(_), None) => return Err(missing("sweep_values")),
            (None, Some((line, _))) => {
                return Err(Error::Config {
                    line,
                    message: "sweep_values given without sweep_axis".into(),
                })
            }
        };

        let (example_line, example) = example;
        let accepted = registry.params(&example).ok_or_else(|| Error::Config {
            line: example_line,
            message: format!(
                "unknown example '{example}' (available: {})",
                registry.names().collect::<Vec<_>>().join(", ")
            ),
        })?;
        let mut params = ParamMap::new();
        for (key, (line, value)) in entries {
            if !accepted.contains(&key.as_str()) {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key '{key}' for example '{example}'"),
                });
            }
            let v: f64 = value.parse().map_err(|_| Error::Config {
                line,
                message: format!("'{key}' expects a number, got '{value}'"),
            })?;
            params.insert(key, v);
        }

        let config = ExperimentConfig {
            example,
            params,
            solver: SolverSettings {
                horizon,
                intervals,
                kappa,
                order,
                iterations,
                samples,
                seed,
                sample_mode,
                index_cap,
            },
            sweep,
            output,
            record_timing,
        };
        config.validate(registry)?;
        Ok(config)
    }

    /// Checks every sweep point builds a valid solver and benchmark.
    pub fn validate(&self, registry: &BenchmarkRegistry) -> Result<()> {
        for settings in self.points() {
            let cfg = settings.to_config().map_err(|e| Error::Config {
                line: 0,
                message: e.to_string(),
            })?;
            registry
                .create(&self.example, &self.params, &cfg.spec)
                .map_err(|e| Error::Config {
                    line: 0,
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    /// Solver settings of every run, in sweep order.
    pub fn points(&self) -> Vec<SolverSettings> {
        match &self.sweep {
            None => vec![self.solver.clone()],
            Some(s) => s.values.iter().map(|&v| self.solver.with_axis(s.axis, v)).collect(),
        }
    }
}

fn missing(key: &str) -> Error {
    Error::Config {
        line: 0,
        message: format!("missing required key '{key}'"),
    }
}

fn typed<T: FromStr>(entry: Option<(usize, String)>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    entry
        .map(|(line, value)| {
            value.parse::<T>().map_err(|e| Error::Config {
                line,
                message: format!("invalid value for '{key}': {e}"),
            })
        })
        .transpose()
}

fn parse_sweep_values(line: usize, raw: &str) -> Result<Vec<u64>> {
    let values = raw
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<u64>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(Error::Config {
                    line,
                    message: format!("sweep value '{s}' is not a positive integer"),
                }),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config {
            line,
            message: "sweep values must be strictly increasing".into(),
        });
    }
    Ok(values)
}
