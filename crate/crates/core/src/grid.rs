//! Regular time grid and reproducible Brownian/Poisson increment batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Above this mean the CDF walk is replaced by a rejection sampler.
const INVERSION_MAX_MEAN: f64 = 30.0;

/// Discretization frame: horizon `T`, `N` intervals of width `h = T/N`, and
/// the intensity of the driving Poisson process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    intervals: usize,
    kappa: f64,
}

impl GridSpec {
    pub fn new(horizon: f64, intervals: usize, kappa: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid(format!("horizon must be finite and > 0, got {horizon}")));
        }
        if intervals == 0 {
            return Err(Error::invalid("grid needs at least one interval"));
        }
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::invalid(format!("intensity must be finite and > 0, got {kappa}")));
        }
        Ok(Self {
            horizon,
            intervals,
            kappa,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    /// Expected number of jumps per interval.
    pub fn kappa_h(&self) -> f64 {
        self.kappa * self.step()
    }

    /// Grid time `t_i = i h`; the last point is pinned to the horizon.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.horizon
        } else {
            i as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| self.time(i)).collect()
    }
}

/// One sample path: standardized Brownian increments `G_i = ΔB_i/√h` and
/// Poisson interval counts `Q_i = ΔN_i`, for `i = 1..N` stored at `i - 1`.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub gauss: &'a [f64],
    pub counts: &'a [u32],
}

impl<'a> PathView<'a> {
    pub fn new(gauss: &'a [f64], counts: &'a [u32]) -> Result<Self> {
        if gauss.len() != counts.len() {
            return Err(Error::LengthMismatch {
                expected: gauss.len(),
                actual: counts.len(),
            });
        }
        Ok(Self { gauss, counts })
    }

    pub fn intervals(&self) -> usize {
        self.gauss.len()
    }

    /// `B` at grid time `t_r`.
    pub fn brownian_at(&self, r: usize, spec: &GridSpec) -> f64 {
        spec.step().sqrt() * self.gauss[..r].iter().sum::<f64>()
    }

    /// `N` at grid time `t_r`.
    pub fn jumps_at(&self, r: usize) -> u64 {
        self.counts[..r].iter().map(|&q| u64::from(q)).sum()
    }
}

/// `M` independent rows of `N` increments each, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    spec: GridSpec,
    samples: usize,
    seed: u64,
    gauss: Vec<f64>,
    counts: Vec<u32>,
}

impl PathBatch {
    /// Builds a batch from explicit row-major increments.
    pub fn from_parts(spec: GridSpec, gauss: Vec<f64>, counts: Vec<u32>) -> Result<Self> {
        let n = spec.intervals();
        if gauss.len() != counts.len() {
            return Err(Error::LengthMismatch {
                expected: gauss.len(),
                actual: counts.len(),
            });
        }
        if gauss.is_empty() || !gauss.len().is_multiple_of(n) {
            return Err(Error::invalid(format!(
                "increment buffer of length {} is not a positive multiple of N = {n}",
                gauss.len()
            )));
        }
        if let Some(pos) = gauss.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gaussian increment at flat position {pos}")));
        }
        Ok(Self {
            spec,
            samples: gauss.len() / n,
            seed: 0,
            gauss,
            counts,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gauss(&self) -> &[f64] {
        &self.gauss
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn row(&self, m: usize) -> PathView<'_> {
        let n = self.spec.intervals();
        let range = m * n..(m + 1) * n;
        PathView {
            gauss: &self.gauss[range.clone()],
            counts: &self.counts[range],
        }
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = PathView<'_>> + '_ {
        (0..self.samples).map(move |m| self.row(m))
    }

    /// Splits into rows `0..at` and `at..M`.
    pub fn split_at(&self, at: usize) -> Result<(PathBatch, PathBatch)> {
        if at == 0 || at >= self.samples {
            return Err(Error::invalid(format!("cannot split {} rows at {at}", self.samples)));
        }
        let cut = at * self.spec.intervals();
        let head = PathBatch {
            spec: self.spec,
            samples: at,
            seed: self.seed,
            gauss: self.gauss[..cut].to_vec(),
            counts: self.counts[..cut].to_vec(),
        };
        let tail = PathBatch {
            spec: self.spec,
            samples: self.samples - at,
            seed: self.seed,
            gauss: self.gauss[cut..].to_vec(),
            counts: self.counts[cut..].to_vec(),
        };
        Ok((head, tail))
    }
}

/// Draws `samples` rows of increments.
///
/// Row `m` is generated from its own ChaCha8 stream (`seed`, stream `m`), so
/// the output does not depend on how rows are scheduled across threads.
pub fn sample_paths(spec: GridSpec, samples: usize, seed: u64) -> Result<PathBatch> {
    if samples == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    // Re-validate in case the spec was built by struct update elsewhere.
    let spec = GridSpec::new(spec.horizon, spec.intervals, spec.kappa)?;
    let n = spec.intervals();
    let mean = spec.kappa_h();
    let rejection = if mean > INVERSION_MAX_MEAN {
        Some(Poisson::new(mean).map_err(|e| Error::invalid(format!("poisson mean {mean}: {e}")))?)
    } else {
        None
    };

    let mut gauss = vec![0.0; samples * n];
    let mut counts = vec![0u32; samples * n];
    gauss
        .par_chunks_mut(n)
        .zip(counts.par_chunks_mut(n))
        .enumerate()
        .for_each(|(m, (g_row, q_row))| {
            let mut rng = row_rng(seed, m as u64);
            for (g, q) in g_row.iter_mut().zip(q_row.iter_mut()) {
                *g = rng.sample(StandardNormal);
                *q = match &rejection {
                    Some(dist) => dist.sample(&mut rng) as u32,
                    None => poisson_inversion(&mut rng, mean),
                };
            }
        });

    Ok(PathBatch {
        spec,
        samples,
        seed,
        gauss,
        counts,
    })
}

fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row);
    rng
}

/// Sequential-search inversion of the Poisson CDF.
fn poisson_inversion<R: Rng>(rng: &mut R, mean: f64) -> u32 {
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    while u > cdf {
        k += 1;
        pmf *= mean / f64::from(k);
        if pmf == 0.0 {
            // CDF has saturated below u through rounding.
            break;
        }
        cdf += pmf;
    }
    k
}
