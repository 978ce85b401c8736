//! Conditional expectations `E_t(C F)` of a truncated expansion and their
//! Brownian (`D^(0)`) and Poisson (`D^(1)`) Malliavin derivatives.
//!
//! At grid time `t_r` only basis elements with `support(n) <= r` survive the
//! conditioning, and both derivatives only see elements whose support is
//! exactly `r`. At `r = 0` the derivatives are defined as `d^{e1,0}/√h` and
//! `d^{0,e1}`.

use super::coefficients::ChaosCoefficients;
use super::index::Factor;
use super::tables::SampleTables;
use crate::error::{Error, Result};
use crate::grid::PathView;
use crate::orthopoly::{charlier_upto, hermite_upto, PolyTable};

fn check(coeffs: &ChaosCoefficients, path: &PathView<'_>, r: usize) -> Result<()> {
    let n = coeffs.spec().intervals();
    if path.intervals() != n {
        return Err(Error::SpecMismatch(format!(
            "path has {} intervals, coefficients {n}",
            path.intervals()
        )));
    }
    if r > n {
        return Err(Error::invalid(format!("grid index {r} outside 0..={n}")));
    }
    Ok(())
}

/// Hermite and Charlier tables of one path, interval by interval.
fn interval_tables(coeffs: &ChaosCoefficients, path: &PathView<'_>) -> Result<Vec<(PolyTable, PolyTable)>> {
    let p = coeffs.order();
    let kh = coeffs.spec().kappa_h();
    path.gauss
        .iter()
        .zip(path.counts)
        .map(|(&g, &q)| Ok((hermite_upto(p, g)?, charlier_upto(p, f64::from(q), kh)?)))
        .collect()
}

fn prefix_product(factors: &[Factor], tables: &[(PolyTable, PolyTable)]) -> f64 {
    factors
        .iter()
        .map(|f| tables[f.interval as usize].0.get(f.b as usize) * tables[f.interval as usize].1.get(f.p as usize))
        .product()
}

/// `E_{t_r}(C F)` on one path.
pub fn conditional(coeffs: &ChaosCoefficients, path: PathView<'_>, r: usize) -> Result<f64> {
    check(coeffs, &path, r)?;
    let tables = interval_tables(coeffs, &path)?;
    let basis = coeffs.basis();
    let mut acc = coeffs.d0();
    for (k, d) in coeffs.values().iter().enumerate() {
        if basis.supports()[k] as usize <= r {
            acc += d * prefix_product(basis.factors(k), &tables);
        }
    }
    Ok(acc)
}

/// `D^(0)_{t_r} E_{t_r}(C F)` on one path.
pub fn malliavin_b(coeffs: &ChaosCoefficients, path: PathView<'_>, r: usize) -> Result<f64> {
    check(coeffs, &path, r)?;
    let sqrt_h = coeffs.spec().step().sqrt();
    if r == 0 {
        return Ok(coeffs.first_brownian() / sqrt_h);
    }
    let tables = interval_tables(coeffs, &path)?;
    let basis = coeffs.basis();
    let mut acc = 0.0;
    for (k, d) in coeffs.values().iter().enumerate() {
        let factors = basis.factors(k);
        let (last, head) = factors.split_last().expect("basis elements are nonzero");
        if last.interval as usize + 1 != r || last.b == 0 {
            continue;
        }
        let (herm, charl) = &tables[r - 1];
        acc += d * herm.get(last.b as usize - 1) * charl.get(last.p as usize) * prefix_product(head, &tables);
    }
    Ok(acc / sqrt_h)
}

/// `D^(1)_{t_r} E_{t_r}(C F)` on one path.
pub fn malliavin_p(coeffs: &ChaosCoefficients, path: PathView<'_>, r: usize) -> Result<f64> {
    check(coeffs, &path, r)?;
    if r == 0 {
        return Ok(coeffs.first_poisson());
    }
    let tables = interval_tables(coeffs, &path)?;
    let basis = coeffs.basis();
    let mut acc = 0.0;
    for (k, d) in coeffs.values().iter().enumerate() {
        let factors = basis.factors(k);
        let (last, head) = factors.split_last().expect("basis elements are nonzero");
        if last.interval as usize + 1 != r || last.p == 0 {
            continue;
        }
        let (herm, charl) = &tables[r - 1];
        acc += d
            * herm.get(last.b as usize)
            * f64::from(last.p)
            * charl.get(last.p as usize - 1)
            * prefix_product(head, &tables);
    }
    Ok(acc)
}

/// `(E_t, D^(0)_t E_t, D^(1)_t E_t)` of the expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleValue {
    pub y: f64,
    pub z: f64,
    pub u: f64,
}

/// Values at an intermediate time `t` in `(t_{r-1}, t_r]`, given the partial
/// increments `dB = B_t - B_{t_{r-1}}` and `dN = N_t - N_{t_{r-1}}`.
///
/// Increments of `path` on intervals `>= r` are ignored.
pub fn conditional_at(
    coeffs: &ChaosCoefficients,
    path: PathView<'_>,
    r: usize,
    t: f64,
    d_brownian: f64,
    d_jumps: u32,
) -> Result<TripleValue> {
    check(coeffs, &path, r)?;
    let spec = coeffs.spec();
    if r == 0 {
        return Err(Error::invalid("intermediate evaluation needs r >= 1"));
    }
    let left = spec.time(r - 1);
    let elapsed = t - left;
    if !(elapsed > 0.0 && t <= spec.time(r)) {
        return Err(Error::invalid(format!("t = {t} outside ({left}, {}]", spec.time(r))));
    }
    if !d_brownian.is_finite() {
        return Err(Error::NonFinite(format!("partial brownian increment {d_brownian}")));
    }
    let h = spec.step();
    let p = coeffs.order();
    let scale = elapsed / h;
    let herm = hermite_upto(p, d_brownian / elapsed.sqrt())?;
    let charl = charlier_upto(p, f64::from(d_jumps), spec.kappa() * elapsed)?;
    let tables = interval_tables(coeffs, &path)?;
    let basis = coeffs.basis();

    let mut out = TripleValue {
        y: coeffs.d0(),
        z: 0.0,
        u: 0.0,
    };
    for (k, d) in coeffs.values().iter().enumerate() {
        let support = basis.supports()[k] as usize;
        if support > r {
            continue;
        }
        let factors = basis.factors(k);
        if support < r {
            out.y += d * prefix_product(factors, &tables);
            continue;
        }
        let (last, head) = factors.split_last().expect("basis elements are nonzero");
        let (b, q) = (last.b as usize, last.p as usize);
        let a = d * prefix_product(head, &tables);
        out.y += a * scale.powf(b as f64 / 2.0) * herm.get(b) * charl.get(q);
        if b > 0 {
            out.z += a * scale.powf((b as f64 - 1.0) / 2.0) * herm.get(b - 1) * charl.get(q);
        }
        if q > 0 {
            out.u += a * scale.powf(b as f64 / 2.0) * herm.get(b) * q as f64 * charl.get(q - 1);
        }
    }
    out.z /= h.sqrt();
    Ok(out)
}

/// Evaluates `(E_{t_r}, D^(0), D^(1))` for every `r = 0..N` of a path in one
/// pass over the basis.
///
/// Each basis element contributes to the conditional expectation from its
/// support onward and to the derivatives only at its support, so the sweep
/// accumulates per-support buckets and takes one prefix sum.
pub struct GridEvaluator<'a> {
    coeffs: &'a ChaosCoefficients,
    tables: SampleTables,
    y_inc: Vec<f64>,
    z_at: Vec<f64>,
    u_at: Vec<f64>,
    z0: f64,
    u0: f64,
    inv_sqrt_h: f64,
}

impl<'a> GridEvaluator<'a> {
    pub fn new(coeffs: &'a ChaosCoefficients) -> Self {
        let spec = coeffs.spec();
        let n = spec.intervals();
        let inv_sqrt_h = 1.0 / spec.step().sqrt();
        Self {
            coeffs,
            tables: SampleTables::new(n, coeffs.order()),
            y_inc: vec![0.0; n + 1],
            z_at: vec![0.0; n + 1],
            u_at: vec![0.0; n + 1],
            z0: coeffs.first_brownian() * inv_sqrt_h,
            u0: coeffs.first_poisson(),
            inv_sqrt_h,
        }
    }

    /// Writes grid values into `y`, `z`, `u`, each of length `N + 1`.
    pub fn evaluate(&mut self, path: PathView<'_>, y: &mut [f64], z: &mut [f64], u: &mut [f64]) -> Result<()> {
        let spec = self.coeffs.spec();
        let n = spec.intervals();
        if path.intervals() != n {
            return Err(Error::SpecMismatch(format!(
                "path has {} intervals, coefficients {n}",
                path.intervals()
            )));
        }
        for out in [&*y, &*z, &*u] {
            if out.len() != n + 1 {
                return Err(Error::LengthMismatch {
                    expected: n + 1,
                    actual: out.len(),
                });
            }
        }
        self.y_inc.fill(0.0);
        self.z_at.fill(0.0);
        self.u_at.fill(0.0);

        let basis = self.coeffs.basis();
        if !basis.is_empty() {
            self.tables.fill(path, spec.kappa_h(), true);
            let value = &self.tables.value;
            let d_b = &self.tables.d_brownian;
            let d_p = &self.tables.d_poisson;
            let ptr = basis.ptr();
            let slots = basis.all_slots();
            let factors = basis.all_factors();
            let supports = basis.supports();
            for (k, &d) in self.coeffs.values().iter().enumerate() {
                let (s, e) = (ptr[k] as usize, ptr[k + 1] as usize);
                let mut prefix = d;
                for &sl in &slots[s..e - 1] {
                    prefix *= value[sl as usize];
                }
                let last = slots[e - 1] as usize;
                let support = supports[k] as usize;
                self.y_inc[support] += prefix * value[last];
                let f = factors[e - 1];
                if f.b > 0 {
                    self.z_at[support] += prefix * d_b[last];
                }
                if f.p > 0 {
                    self.u_at[support] += prefix * d_p[last];
                }
            }
        }

        let mut acc = self.coeffs.d0();
        y[0] = acc;
        z[0] = self.z0;
        u[0] = self.u0;
        for r in 1..=n {
            acc += self.y_inc[r];
            y[r] = acc;
            z[r] = self.z_at[r] * self.inv_sqrt_h;
            u[r] = self.u_at[r];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::chaos::{estimate, Basis, MultiIndex};
    use crate::grid::{sample_paths, GridSpec};

    fn coeffs_with(spec: GridSpec, order: usize, d0: f64, entries: Vec<(MultiIndex, f64)>) -> ChaosCoefficients {
        let basis = Arc::new(Basis::new(spec, order).unwrap());
        ChaosCoefficients::from_entries(basis, d0, entries).unwrap()
    }

    fn path_of<'a>(g: &'a [f64], q: &'a [u32]) -> PathView<'a> {
        PathView::new(g, q).unwrap()
    }

    #[test]
    fn constant_expansion() {
        let spec = GridSpec::new(1.0, 3, 1.0).unwrap();
        let c = coeffs_with(spec, 2, 2.0, vec![]);
        let (g, q) = ([0.3, -1.0, 2.0], [1, 0, 2]);
        for r in 0..=3 {
            assert_eq!(conditional(&c, path_of(&g, &q), r).unwrap(), 2.0);
            assert_eq!(malliavin_b(&c, path_of(&g, &q), r).unwrap(), 0.0);
            assert_eq!(malliavin_p(&c, path_of(&g, &q), r).unwrap(), 0.0);
        }
        let v = conditional_at(&c, path_of(&g, &q), 2, 0.5, 0.1, 1).unwrap();
        assert_eq!(v, TripleValue { y: 2.0, z: 0.0, u: 0.0 });
    }

    #[test]
    fn unit_brownian_examples() {
        let spec = GridSpec::new(1.0, 4, 1.0).unwrap();
        let h = spec.step();
        let c = coeffs_with(spec, 2, 0.0, vec![(MultiIndex::unit_brownian(4, 1), 1.0)]);
        let (g, q) = ([0.7, 0.1, 0.2, 0.3], [0, 1, 0, 0]);
        assert!((conditional(&c, path_of(&g, &q), 1).unwrap() - 0.7).abs() < 1e-15);
        assert!((malliavin_b(&c, path_of(&g, &q), 1).unwrap() - 1.0 / h.sqrt()).abs() < 1e-12);
        assert_eq!(malliavin_p(&c, path_of(&g, &q), 1).unwrap(), 0.0);
        assert!((malliavin_b(&c, path_of(&g, &q), 0).unwrap() - 1.0 / h.sqrt()).abs() < 1e-12);

        let second = coeffs_with(spec, 2, 0.0, vec![(MultiIndex::unit_brownian(4, 2), 1.0)]);
        assert_eq!(conditional(&second, path_of(&g, &q), 1).unwrap(), 0.0);

        let v = conditional_at(&c, path_of(&g, &q), 1, h / 4.0, 0.2, 0).unwrap();
        assert!((v.y - 0.2 / h.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn second_degree_examples() {
        let spec = GridSpec::new(1.0, 20, 1.0).unwrap();
        let h = spec.step();
        let mut g = vec![0.0; 20];
        g[0] = 0.5;
        let mut q = vec![0u32; 20];
        q[0] = 1;
        let mut nb = vec![0; 20];
        nb[0] = 2;
        let c = coeffs_with(spec, 2, 0.0, vec![(MultiIndex::new(nb, vec![0; 20]).unwrap(), 1.0)]);
        assert!((malliavin_b(&c, path_of(&g, &q), 1).unwrap() - 0.5 / h.sqrt()).abs() < 1e-12);

        let unit_p = coeffs_with(spec, 2, 0.0, vec![(MultiIndex::unit_poisson(20, 1), 1.0)]);
        assert_eq!(malliavin_p(&unit_p, path_of(&g, &q), 1).unwrap(), 1.0);

        let mut np = vec![0; 20];
        np[0] = 2;
        let c2 = coeffs_with(spec, 2, 0.0, vec![(MultiIndex::new(vec![0; 20], np).unwrap(), 1.0)]);
        assert!((malliavin_p(&c2, path_of(&g, &q), 1).unwrap() - 1.9).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatches() {
        let spec = GridSpec::new(1.0, 3, 1.0).unwrap();
        let c = coeffs_with(spec, 1, 0.0, vec![]);
        let (g, q) = ([0.0; 2], [0u32; 2]);
        assert!(matches!(
            conditional(&c, path_of(&g, &q), 1),
            Err(Error::SpecMismatch(_))
        ));
        let (g, q) = ([0.0; 3], [0u32; 3]);
        assert!(conditional(&c, path_of(&g, &q), 4).is_err());
        assert!(conditional_at(&c, path_of(&g, &q), 2, 0.1, 0.0, 0).is_err());
        assert!(conditional_at(&c, path_of(&g, &q), 2, 1.0 / 3.0, 0.0, 0).is_err());
    }

    fn random_coeffs(spec: GridSpec, order: usize, seed: u64) -> (ChaosCoefficients, crate::grid::PathBatch) {
        let paths = sample_paths(spec, 500, seed).unwrap();
        let f: Vec<f64> = paths
            .rows()
            .map(|r| {
                r.gauss
                    .iter()
                    .enumerate()
                    .map(|(i, g)| g * (i as f64 + 1.0))
                    .sum::<f64>()
                    .sin()
                    + f64::from(r.counts.iter().sum::<u32>()).powi(2)
            })
            .collect();
        (estimate(&f, &paths, order).unwrap(), paths)
    }

    #[test]
    fn sweep_matches_single_point_evaluators() {
        let spec = GridSpec::new(2.0, 5, 1.5).unwrap();
        let (c, paths) = random_coeffs(spec, 3, 31);
        let mut ev = GridEvaluator::new(&c);
        let (mut y, mut z, mut u) = (vec![0.0; 6], vec![0.0; 6], vec![0.0; 6]);
        for m in 0..20 {
            let path = paths.row(m);
            ev.evaluate(path, &mut y, &mut z, &mut u).unwrap();
            for r in 0..=5 {
                let tol = |x: f64| 1e-12 * (1.0 + x.abs());
                let cy = conditional(&c, path, r).unwrap();
                let cz = malliavin_b(&c, path, r).unwrap();
                let cu = malliavin_p(&c, path, r).unwrap();
                assert!((y[r] - cy).abs() <= tol(cy), "y m={m} r={r}");
                assert!((z[r] - cz).abs() <= tol(cz), "z m={m} r={r}");
                assert!((u[r] - cu).abs() <= tol(cu), "u m={m} r={r}");
            }
        }
    }

    #[test]
    fn full_reconstruction_at_horizon() {
        let spec = GridSpec::new(1.0, 4, 2.0).unwrap();
        let (c, paths) = random_coeffs(spec, 2, 5);
        let kh = spec.kappa_h();
        for m in 0..10 {
            let path = paths.row(m);
            let mut expected = c.d0();
            for (k, n) in c.basis().iter().enumerate() {
                let phi: f64 = (0..4)
                    .map(|i| {
                        let (b, p) = (n.brownian()[i] as usize, n.poisson()[i] as usize);
                        hermite_upto(b, path.gauss[i]).unwrap().get(b)
                            * charlier_upto(p, f64::from(path.counts[i]), kh).unwrap().get(p)
                    })
                    .product();
                expected += c.values()[k] * phi;
            }
            let got = conditional(&c, path, 4).unwrap();
            assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn intermediate_agrees_at_right_endpoint() {
        let spec = GridSpec::new(2.0, 5, 1.5).unwrap();
        let (c, paths) = random_coeffs(spec, 3, 77);
        let h = spec.step();
        for m in 0..10 {
            let path = paths.row(m);
            for r in 1..=5 {
                let v = conditional_at(
                    &c,
                    path,
                    r,
                    spec.time(r),
                    path.gauss[r - 1] * h.sqrt(),
                    path.counts[r - 1],
                )
                .unwrap();
                let (y, z, u) = (
                    conditional(&c, path, r).unwrap(),
                    malliavin_b(&c, path, r).unwrap(),
                    malliavin_p(&c, path, r).unwrap(),
                );
                assert!((v.y - y).abs() <= 1e-12 * (1.0 + y.abs()));
                assert!((v.z - z).abs() <= 1e-12 * (1.0 + z.abs()));
                assert!((v.u - u).abs() <= 1e-12 * (1.0 + u.abs()));
            }
        }
    }

    #[test]
    fn evaluators_are_linear() {
        let spec = GridSpec::new(1.0, 3, 1.0).unwrap();
        let (a, paths) = random_coeffs(spec, 2, 1);
        let (b, _) = random_coeffs(spec, 2, 2);
        let b = ChaosCoefficients::new(a.basis().clone(), b.d0(), b.values().to_vec()).unwrap();
        let mix = a.linear_combination(2.0, &b, -0.5).unwrap();
        let path = paths.row(3);
        for r in 0..=3 {
            for f in [conditional, malliavin_b, malliavin_p] {
                let lhs = f(&mix, path, r).unwrap();
                let rhs = 2.0 * f(&a, path, r).unwrap() - 0.5 * f(&b, path, r).unwrap();
                assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn future_increments_do_not_matter(
            r in 0usize..=4,
            noise in proptest::collection::vec(-3.0f64..3.0, 4),
            jumps in proptest::collection::vec(0u32..4, 4),
        ) {
            let spec = GridSpec::new(1.0, 4, 2.0).unwrap();
            let (c, paths) = random_coeffs(spec, 2, 9);
            let base = paths.row(0);
            let mut g = base.gauss.to_vec();
            let mut q = base.counts.to_vec();
            g[r..4].copy_from_slice(&noise[r..4]);
            q[r..4].copy_from_slice(&jumps[r..4]);
            let altered = PathView::new(&g, &q).unwrap();
            for f in [conditional, malliavin_b, malliavin_p] {
                proptest::prop_assert_eq!(f(&c, base, r).unwrap(), f(&c, altered, r).unwrap());
            }
        }
    }
}
