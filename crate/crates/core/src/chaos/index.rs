use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::orthopoly::MAX_DEGREE;

/// Default upper bound on the number of basis elements a [`Basis`] may hold.
pub const DEFAULT_INDEX_CAP: usize = 10_000_000;

/// Largest `1/w(n)` accepted before the basis is rejected as ill-scaled.
const MAX_INVERSE_WEIGHT: f64 = 1e300;

/// Per-interval Hermite degrees `nB` and Charlier degrees `nP` of one
/// product basis element `prod_i K_{nB_i}(G_i) C_{nP_i}(Q_i, κh)`.
///
/// Ordering is graded (by `|n|`), then descending lexicographic on the
/// concatenation `(nB_1..nB_N, nP_1..nP_N)`, which is the enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    brownian: Vec<u32>,
    poisson: Vec<u32>,
}

impl MultiIndex {
    pub fn new(brownian: Vec<u32>, poisson: Vec<u32>) -> Result<Self> {
        if brownian.len() != poisson.len() {
            return Err(Error::LengthMismatch {
                expected: brownian.len(),
                actual: poisson.len(),
            });
        }
        if brownian.is_empty() {
            return Err(Error::invalid("multi-index needs at least one interval"));
        }
        Ok(Self { brownian, poisson })
    }

    pub fn zero(intervals: usize) -> Self {
        Self {
            brownian: vec![0; intervals],
            poisson: vec![0; intervals],
        }
    }

    /// Degree one Hermite factor on interval `i` (1-based).
    pub fn unit_brownian(intervals: usize, i: usize) -> Self {
        let mut n = Self::zero(intervals);
        n.brownian[i - 1] = 1;
        n
    }

    /// Degree one Charlier factor on interval `i` (1-based).
    pub fn unit_poisson(intervals: usize, i: usize) -> Self {
        let mut n = Self::zero(intervals);
        n.poisson[i - 1] = 1;
        n
    }

    pub fn intervals(&self) -> usize {
        self.brownian.len()
    }

    pub fn brownian(&self) -> &[u32] {
        &self.brownian
    }

    pub fn poisson(&self) -> &[u32] {
        &self.poisson
    }

    /// `|n| = Σ (nB_i + nP_i)`.
    pub fn order(&self) -> usize {
        self.brownian.iter().chain(&self.poisson).map(|&d| d as usize).sum()
    }

    /// Last interval (1-based) carrying a nonzero degree; `None` for the zero index.
    pub fn support(&self) -> Option<usize> {
        (0..self.intervals())
            .rev()
            .find(|&i| self.brownian[i] + self.poisson[i] > 0)
            .map(|i| i + 1)
    }

    /// `w(n) = nP! (κh)^{|nP|} / nB!`, the second moment of the basis element.
    pub fn weight(&self, spec: &GridSpec) -> Result<f64> {
        if self.intervals() != spec.intervals() {
            return Err(Error::SpecMismatch(format!(
                "multi-index has {} intervals, grid has {}",
                self.intervals(),
                spec.intervals()
            )));
        }
        let kh = spec.kappa_h();
        let mut w = 1.0;
        for (&b, &p) in self.brownian.iter().zip(&self.poisson) {
            if b as usize > MAX_DEGREE || p as usize > MAX_DEGREE {
                return Err(Error::DegreeTooLarge {
                    degree: b.max(p) as usize,
                    max: MAX_DEGREE,
                });
            }
            w *= factor_weight(b as usize, p as usize, kh);
        }
        Ok(w)
    }

    fn slot(&self, s: usize) -> u32 {
        let n = self.intervals();
        if s < n {
            self.brownian[s]
        } else {
            self.poisson[s - n]
        }
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.intervals().cmp(&other.intervals()))
            .then_with(|| {
                (0..2 * self.intervals())
                    .map(|s| other.slot(s).cmp(&self.slot(s)))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
        write!(f, "{}|{}", join(&self.brownian), join(&self.poisson))
    }
}

/// `nP! (κh)^nP / nB!` for a single interval.
fn factor_weight(b: usize, p: usize, kh: f64) -> f64 {
    let fact = |k: usize| (1..=k).map(|j| j as f64).product::<f64>();
    fact(p) * kh.powi(p as i32) / fact(b)
}

/// `C(2N + p, p) - 1`, saturating.
pub fn basis_size(intervals: usize, order: usize) -> u128 {
    let top = 2 * intervals as u128 + order as u128;
    let mut c: u128 = 1;
    for k in 1..=order as u128 {
        // Exact at every step: c * (top - order + k) is divisible by k.
        c = match c.checked_mul(top - order as u128 + k) {
            Some(v) => v / k,
            None => return u128::MAX,
        };
    }
    c - 1
}

/// One nonzero interval of a basis element: interval `i` (0-based) with
/// Hermite degree `b` and Charlier degree `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub interval: u32,
    pub b: u8,
    pub p: u8,
}

/// The truncated chaos basis for a grid and order `p`, in enumeration order.
///
/// Elements are stored sparsely: each rank owns the factors of its nonzero
/// intervals, sorted by interval, so the last factor sits on the support.
/// Alongside the factors the basis keeps each factor's slot in a per-sample
/// polynomial table of layout `interval * (p+1)^2 + b * (p+1) + p`.
#[derive(Debug, Clone)]
pub struct Basis {
    spec: GridSpec,
    order: usize,
    ptr: Vec<u32>,
    factors: Vec<Factor>,
    slots: Vec<u32>,
    support: Vec<u32>,
    inverse_weight: Vec<f64>,
}

impl Basis {
    pub fn new(spec: GridSpec, order: usize) -> Result<Self> {
        Self::with_cap(spec, order, DEFAULT_INDEX_CAP)
    }

    pub fn with_cap(spec: GridSpec, order: usize, cap: usize) -> Result<Self> {
        if order > MAX_DEGREE {
            return Err(Error::DegreeTooLarge {
                degree: order,
                max: MAX_DEGREE,
            });
        }
        let n = spec.intervals();
        let requested = basis_size(n, order);
        if requested > cap as u128 {
            return Err(Error::Sizing { requested, cap });
        }
        let count = requested as usize;
        let mut basis = Basis {
            spec,
            order,
            ptr: Vec::with_capacity(count + 1),
            factors: Vec::new(),
            slots: Vec::new(),
            support: Vec::with_capacity(count),
            inverse_weight: Vec::with_capacity(count),
        };
        basis.ptr.push(0);

        let mut stack: Vec<(usize, u32)> = Vec::with_capacity(order);
        for grade in 1..=order {
            basis.compose(0, grade as u32, &mut stack)?;
        }
        debug_assert_eq!(basis.len(), count);
        Ok(basis)
    }

    /// Emits compositions of `remaining` over slots `slot..2N`, descending
    /// lexicographic (larger leading entries first).
    fn compose(&mut self, slot: usize, remaining: u32, stack: &mut Vec<(usize, u32)>) -> Result<()> {
        if remaining == 0 {
            return self.push_element(stack);
        }
        let slots = 2 * self.spec.intervals();
        if slot == slots {
            return Ok(());
        }
        for v in (1..=remaining).rev() {
            stack.push((slot, v));
            self.compose(slot + 1, remaining - v, stack)?;
            stack.pop();
        }
        self.compose(slot + 1, remaining, stack)
    }

    fn push_element(&mut self, stack: &[(usize, u32)]) -> Result<()> {
        let n = self.spec.intervals();
        let mut local: Vec<Factor> = Vec::with_capacity(stack.len());
        for &(slot, v) in stack {
            let (interval, brownian) = if slot < n { (slot, true) } else { (slot - n, false) };
            let interval = interval as u32;
            let f = match local.iter_mut().find(|f| f.interval == interval) {
                Some(f) => f,
                None => {
                    local.push(Factor { interval, b: 0, p: 0 });
                    local.last_mut().unwrap()
                }
            };
            if brownian {
                f.b = v as u8;
            } else {
                f.p = v as u8;
            }
        }
        local.sort_by_key(|f| f.interval);

        let kh = self.spec.kappa_h();
        let w: f64 = local
            .iter()
            .map(|f| factor_weight(f.b as usize, f.p as usize, kh))
            .product();
        let inv = 1.0 / w;
        if !inv.is_finite() || inv > MAX_INVERSE_WEIGHT {
            return Err(Error::invalid(format!(
                "basis element weight {w:e} too small (kappa*h = {kh:e}, order {})",
                self.order
            )));
        }

        let width = self.table_width();
        for f in &local {
            self.slots
                .push(f.interval * width + self.slot_in_block(f.b as usize, f.p as usize) as u32);
        }
        self.support.push(local.last().map(|f| f.interval + 1).unwrap_or(0));
        self.factors.extend_from_slice(&local);
        self.ptr.push(self.factors.len() as u32);
        self.inverse_weight.push(inv);
        Ok(())
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Number of table entries per interval, `(p+1)^2`.
    pub(crate) fn table_width(&self) -> u32 {
        ((self.order + 1) * (self.order + 1)) as u32
    }

    pub(crate) fn slot_in_block(&self, b: usize, p: usize) -> usize {
        b * (self.order + 1) + p
    }

    pub fn factors(&self, rank: usize) -> &[Factor] {
        &self.factors[self.ptr[rank] as usize..self.ptr[rank + 1] as usize]
    }

    pub(crate) fn ptr(&self) -> &[u32] {
        &self.ptr
    }

    pub(crate) fn all_slots(&self) -> &[u32] {
        &self.slots
    }

    pub(crate) fn all_factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Support (1-based last active interval) of each rank.
    pub fn supports(&self) -> &[u32] {
        &self.support
    }

    pub fn inverse_weights(&self) -> &[f64] {
        &self.inverse_weight
    }

    pub fn weight(&self, rank: usize) -> f64 {
        1.0 / self.inverse_weight[rank]
    }

    pub fn index(&self, rank: usize) -> MultiIndex {
        let mut n = MultiIndex::zero(self.spec.intervals());
        for f in self.factors(rank) {
            n.brownian[f.interval as usize] = u32::from(f.b);
            n.poisson[f.interval as usize] = u32::from(f.p);
        }
        n
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = MultiIndex> + '_ {
        (0..self.len()).map(move |k| self.index(k))
    }

    pub fn rank_of(&self, n: &MultiIndex) -> Option<usize> {
        if n.intervals() != self.spec.intervals() || n.order() == 0 || n.order() > self.order {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.index(mid).cmp(n) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }
}

/// All multi-indices with `1 <= |n| <= p` over `N` intervals, in enumeration order.
pub fn enumerate_indices(intervals: usize, order: usize) -> Result<Vec<MultiIndex>> {
    enumerate_indices_capped(intervals, order, DEFAULT_INDEX_CAP)
}

pub fn enumerate_indices_capped(intervals: usize, order: usize, cap: usize) -> Result<Vec<MultiIndex>> {
    // The weights are irrelevant for the enumeration; any valid grid will do.
    let spec = GridSpec::new(1.0, intervals, 1.0)?;
    let basis = Basis::with_cap(spec, order, cap)?;
    Ok(basis.iter().collect())
}

/// `w(n)` for a multi-index on `spec`.
pub fn weight(n: &MultiIndex, spec: &GridSpec) -> Result<f64> {
    n.weight(spec)
}
