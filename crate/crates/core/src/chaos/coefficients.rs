use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use super::index::{Basis, MultiIndex};
use super::tables::SampleTables;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, PathBatch};

/// Samples per reduction chunk. Fixed so sums do not depend on thread count.
const CHUNK: usize = 2048;

/// `d_0` plus one coefficient per basis rank.
#[derive(Debug, Clone)]
pub struct ChaosCoefficients {
    basis: Arc<Basis>,
    d0: f64,
    values: Vec<f64>,
}

impl ChaosCoefficients {
    pub fn new(basis: Arc<Basis>, d0: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::LengthMismatch {
                expected: basis.len(),
                actual: values.len(),
            });
        }
        Ok(Self { basis, d0, values })
    }

    /// Coefficients that are zero except for `d0` and the listed entries.
    pub fn from_entries(
        basis: Arc<Basis>,
        d0: f64,
        entries: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self> {
        let mut values = vec![0.0; basis.len()];
        for (n, v) in entries {
            let rank = basis
                .rank_of(&n)
                .ok_or_else(|| Error::invalid(format!("index {n} is not in the order-{} basis", basis.order())))?;
            values[rank] = v;
        }
        Ok(Self { basis, d0, values })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn spec(&self) -> &GridSpec {
        self.basis.spec()
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    /// Coefficients in rank order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: &MultiIndex) -> Option<f64> {
        self.basis.rank_of(n).map(|k| self.values[k])
    }

    /// Map view keyed by multi-index.
    pub fn to_map(&self) -> BTreeMap<MultiIndex, f64> {
        self.basis.iter().zip(self.values.iter().copied()).collect()
    }

    /// `d0^2 + Σ w(n) d_n^2`, the second moment of the truncated expansion.
    pub fn parseval_sum(&self) -> f64 {
        let inv = self.basis.inverse_weights();
        self.d0 * self.d0 + self.values.iter().zip(inv).map(|(d, iw)| d * d / iw).sum::<f64>()
    }

    /// Coefficient of the first-interval Brownian unit index, `d^{e1,0}`.
    pub fn first_brownian(&self) -> f64 {
        self.unit(true)
    }

    /// Coefficient of the first-interval Poisson unit index, `d^{0,e1}`.
    pub fn first_poisson(&self) -> f64 {
        self.unit(false)
    }

    fn unit(&self, brownian: bool) -> f64 {
        let n = self.spec().intervals();
        let idx = if brownian {
            MultiIndex::unit_brownian(n, 1)
        } else {
            MultiIndex::unit_poisson(n, 1)
        };
        self.get(&idx).unwrap_or(0.0)
    }

    /// `a * self + b * other`, coefficient by coefficient.
    pub fn linear_combination(&self, a: f64, other: &ChaosCoefficients, b: f64) -> Result<Self> {
        if !Arc::ptr_eq(&self.basis, &other.basis) && self.basis.len() != other.basis.len() {
            return Err(Error::SpecMismatch("coefficient bases differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            basis: self.basis.clone(),
            d0: a * self.d0 + b * other.d0,
            values,
        })
    }

    /// Writes `rank,nB,nP,value,weight,std_err` rows; `d0` is rank 0.
    ///
    /// `std_err` is the estimated standard deviation of each coefficient, or
    /// empty when no moment information is supplied.
    pub fn write_csv<W: Write>(&self, mut out: W, std_err: Option<&[f64]>) -> Result<()> {
        let n = self.spec().intervals();
        let zeros = MultiIndex::zero(n);
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
        let fmt_err = |e: Option<f64>| e.map(|v| format!("{v:.16e}")).unwrap_or_default();
        writeln!(out, "rank,nB,nP,value,weight,std_err")?;
        writeln!(
            out,
            "0,{},{},{:.16e},{:.16e},{}",
            join(zeros.brownian()),
            join(zeros.poisson()),
            self.d0,
            1.0,
            fmt_err(std_err.map(|e| e[0]))
        )?;
        for (k, idx) in self.basis.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{:.16e},{:.16e},{}",
                k + 1,
                join(idx.brownian()),
                join(idx.poisson()),
                self.values[k],
                self.basis.weight(k),
                fmt_err(std_err.map(|e| e[k + 1]))
            )?;
        }
        Ok(())
    }
}

/// Coefficients together with the empirical second-moment information
/// needed for error bars and the variance diagnostic.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub coefficients: ChaosCoefficients,
    /// Plug-in variance of `F`.
    pub f_variance: f64,
    /// Plug-in variance of `F Φ_n` per rank.
    pub product_variance: Vec<f64>,
    pub samples: usize,
}

impl MomentEstimate {
    /// Empirical `V_{p,N}(F) = V(F) + Σ V(F Φ_n) / w(n)`.
    pub fn variance_functional(&self) -> f64 {
        let inv = self.coefficients.basis().inverse_weights();
        self.f_variance + self.product_variance.iter().zip(inv).map(|(v, iw)| v * iw).sum::<f64>()
    }

    /// Standard error of `d0` followed by each `d_n`, in rank order.
    pub fn standard_errors(&self) -> Vec<f64> {
        let m = self.samples as f64;
        let inv = self.coefficients.basis().inverse_weights();
        std::iter::once((self.f_variance / m).sqrt())
            .chain(self.product_variance.iter().zip(inv).map(|(v, iw)| iw * (v / m).sqrt()))
            .collect()
    }
}

fn check_inputs(basis: &Basis, f: &[f64], paths: &PathBatch) -> Result<()> {
    if basis.spec() != paths.spec() {
        return Err(Error::SpecMismatch(format!(
            "basis grid {:?} vs path grid {:?}",
            basis.spec(),
            paths.spec()
        )));
    }
    if f.len() != paths.samples() {
        return Err(Error::LengthMismatch {
            expected: paths.samples(),
            actual: f.len(),
        });
    }
    if let Some(m) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("functional sample {m} = {}", f[m])));
    }
    Ok(())
}

struct ChunkSums {
    sum_f: f64,
    sum_f2: f64,
    prod: Vec<f64>,
    prod2: Vec<f64>,
}

/// Accumulates `Σ F`, `Σ F^2`, `Σ F Φ_n` and optionally `Σ (F Φ_n)^2` over
/// fixed-size chunks, combined in chunk order.
fn accumulate(basis: &Basis, f: &[f64], paths: &PathBatch, second: bool) -> ChunkSums {
    let count = basis.len();
    let spec = paths.spec();
    let kappa_h = spec.kappa_h();
    let n_chunks = paths.samples().div_ceil(CHUNK);
    let ptr = basis.ptr();
    let slots = basis.all_slots();

    let partials: Vec<ChunkSums> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut tables = SampleTables::new(spec.intervals(), basis.order());
            let mut sums = ChunkSums {
                sum_f: 0.0,
                sum_f2: 0.0,
                prod: vec![0.0; count],
                prod2: if second { vec![0.0; count] } else { Vec::new() },
            };
            let end = ((c + 1) * CHUNK).min(paths.samples());
            for (m, &fm) in f.iter().enumerate().take(end).skip(c * CHUNK) {
                sums.sum_f += fm;
                sums.sum_f2 += fm * fm;
                if count == 0 {
                    continue;
                }
                tables.fill(paths.row(m), kappa_h, false);
                let table = &tables.value;
                for k in 0..count {
                    let (s, e) = (ptr[k] as usize, ptr[k + 1] as usize);
                    let mut phi = table[slots[e - 1] as usize];
                    for &sl in &slots[s..e - 1] {
                        phi *= table[sl as usize];
                    }
                    let x = fm * phi;
                    sums.prod[k] += x;
                    if second {
                        sums.prod2[k] += x * x;
                    }
                }
            }
            sums
        })
        .collect();

    let mut total = ChunkSums {
        sum_f: 0.0,
        sum_f2: 0.0,
        prod: vec![0.0; count],
        prod2: if second { vec![0.0; count] } else { Vec::new() },
    };
    for part in partials {
        total.sum_f += part.sum_f;
        total.sum_f2 += part.sum_f2;
        for (t, p) in total.prod.iter_mut().zip(&part.prod) {
            *t += p;
        }
        for (t, p) in total.prod2.iter_mut().zip(&part.prod2) {
            *t += p;
        }
    }
    total
}

/// Monte Carlo chaos coefficients of `F` on a prebuilt basis:
/// `d0 = mean(F)`, `d_n = mean(F Φ_n) / w(n)`.
pub fn estimate_with(basis: &Arc<Basis>, f: &[f64], paths: &PathBatch) -> Result<ChaosCoefficients> {
    check_inputs(basis, f, paths)?;
    let sums = accumulate(basis, f, paths, false);
    let m = paths.samples() as f64;
    let values = sums
        .prod
        .iter()
        .zip(basis.inverse_weights())
        .map(|(s, iw)| s / m * iw)
        .collect();
    Ok(ChaosCoefficients {
        basis: basis.clone(),
        d0: sums.sum_f / m,
        values,
    })
}

/// Coefficients of `F` up to chaos order `order`.
pub fn estimate(f: &[f64], paths: &PathBatch, order: usize) -> Result<ChaosCoefficients> {
    let basis = Arc::new(Basis::new(*paths.spec(), order)?);
    estimate_with(&basis, f, paths)
}

/// Coefficients plus plug-in variances of `F` and every `F Φ_n`.
pub fn estimate_with_moments(basis: &Arc<Basis>, f: &[f64], paths: &PathBatch) -> Result<MomentEstimate> {
    check_inputs(basis, f, paths)?;
    let sums = accumulate(basis, f, paths, true);
    let m = paths.samples() as f64;
    let inv = basis.inverse_weights();
    let means: Vec<f64> = sums.prod.iter().map(|s| s / m).collect();
    let product_variance = sums
        .prod2
        .iter()
        .zip(&means)
        .map(|(s2, mu)| (s2 / m - mu * mu).max(0.0))
        .collect();
    let d0 = sums.sum_f / m;
    let f_variance = (sums.sum_f2 / m - d0 * d0).max(0.0);
    let values = means.iter().zip(inv).map(|(mu, iw)| mu * iw).collect();
    Ok(MomentEstimate {
        coefficients: ChaosCoefficients {
            basis: basis.clone(),
            d0,
            values,
        },
        f_variance,
        product_variance,
        samples: paths.samples(),
    })
}

/// Plug-in estimate of `V_{p,N}(F)`; divided by `M` it predicts the mean
/// weighted squared error of the estimated coefficient vector.
///
/// For `|F| <= K` each term is at most `K^2`, so the value is bounded by `K^2`
/// times `C(2N+p, p)`, the basis size including the constant. A constant `F`
/// attains the bound up to sampling noise; it does not give zero.
pub fn variance_diagnostic(f: &[f64], paths: &PathBatch, order: usize) -> Result<f64> {
    let basis = Arc::new(Basis::new(*paths.spec(), order)?);
    Ok(estimate_with_moments(&basis, f, paths)?.variance_functional())
}
