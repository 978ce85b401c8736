//! Name-keyed registry of benchmark problems selectable from configuration.

use std::collections::BTreeMap;

use crate::benchmarks::{
    Benchmark, BrownianMartingale, Constant, Example1, Example1Params, Example2, Example2Params, PoissonMartingale,
};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Numeric problem parameters keyed by name.
pub type ParamMap = BTreeMap<String, f64>;

pub type BenchmarkFactory = fn(&ParamMap, &GridSpec) -> Result<Box<dyn Benchmark>>;

struct Entry {
    params: &'static [&'static str],
    factory: BenchmarkFactory,
}

pub struct BenchmarkRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

fn param(params: &ParamMap, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key).copied().or(default) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::invalid(format!("parameter {key} must be finite, got {v}"))),
        None => Err(Error::invalid(format!("missing parameter {key}"))),
    }
}

fn example1(params: &ParamMap, spec: &GridSpec) -> Result<Box<dyn Benchmark>> {
    if spec.kappa() != Example1Params::KAPPA {
        return Err(Error::invalid(format!(
            "example1 requires kappa = 1, got {}",
            spec.kappa()
        )));
    }
    let c = param(params, "c", None)?;
    Ok(Box::new(Example1::new(Example1Params {
        c,
        horizon: spec.horizon(),
    })))
}

fn example2(params: &ParamMap, spec: &GridSpec) -> Result<Box<dyn Benchmark>> {
    let reference = Example2Params::reference();
    Ok(Box::new(Example2::new(Example2Params {
        alpha: param(params, "alpha", Some(reference.alpha))?,
        beta: param(params, "beta", Some(reference.beta))?,
        gamma: param(params, "gamma", Some(reference.gamma))?,
        a: param(params, "a", Some(reference.a))?,
        b: param(params, "b", Some(reference.b))?,
        c: param(params, "c", Some(reference.c))?,
        kappa: spec.kappa(),
        horizon: spec.horizon(),
    })))
}

fn brownian(_params: &ParamMap, _spec: &GridSpec) -> Result<Box<dyn Benchmark>> {
    Ok(Box::new(BrownianMartingale))
}

fn poisson_count(_params: &ParamMap, spec: &GridSpec) -> Result<Box<dyn Benchmark>> {
    Ok(Box::new(PoissonMartingale {
        kappa: spec.kappa(),
        horizon: spec.horizon(),
    }))
}

fn constant(params: &ParamMap, _spec: &GridSpec) -> Result<Box<dyn Benchmark>> {
    Ok(Box::new(Constant::new(param(params, "value", None)?)))
}

impl BenchmarkRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Registry with every built-in problem.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("example1", &["c"], example1);
        r.register("example2", &["alpha", "beta", "gamma", "a", "b", "c"], example2);
        r.register("brownian", &[], brownian);
        r.register("poisson_count", &[], poisson_count);
        r.register("constant", &["value"], constant);
        r
    }

    /// Adds or replaces a problem. `params` lists the parameter keys it accepts.
    pub fn register(&mut self, name: &'static str, params: &'static [&'static str], factory: BenchmarkFactory) {
        self.entries.insert(name, Entry { params, factory });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Parameter keys accepted by `name`.
    pub fn params(&self, name: &str) -> Option<&'static [&'static str]> {
        self.entries.get(name).map(|e| e.params)
    }

    pub fn create(&self, name: &str, params: &ParamMap, spec: &GridSpec) -> Result<Box<dyn Benchmark>> {
        let entry = self.entries.get(name).ok_or_else(|| {
            Error::invalid(format!(
                "unknown example '{name}' (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        if let Some(key) = params.keys().find(|k| !entry.params.contains(&k.as_str())) {
            return Err(Error::invalid(format!(
                "example '{name}' does not take parameter '{key}'"
            )));
        }
        (entry.factory)(params, spec)
    }
}

impl Default for BenchmarkRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve_by_name() {
        let reg = BenchmarkRegistry::builtin();
        let spec = GridSpec::new(1.0, 20, 1.0).unwrap();
        let mut params = ParamMap::new();
        params.insert("c".into(), 0.5);
        let b = reg.create("example1", &params, &spec).unwrap();
        assert_eq!(b.name(), "example1");
        assert_eq!(b.exact(0.0, 0.0, 0).y, 1.5);

        let spec2 = GridSpec::new(2.0, 50, 3.0).unwrap();
        let b2 = reg.create("example2", &ParamMap::new(), &spec2).unwrap();
        assert!((b2.exact(0.0, 0.0, 0).y - 6.599).abs() < 5e-4);
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            ["brownian", "constant", "example1", "example2", "poisson_count"]
        );
    }

    #[test]
    fn rejects_unknown_names_and_params() {
        let reg = BenchmarkRegistry::builtin();
        let spec = GridSpec::new(1.0, 4, 1.0).unwrap();
        assert!(reg.create("example3", &ParamMap::new(), &spec).is_err());
        let mut params = ParamMap::new();
        params.insert("alpha".into(), 0.1);
        assert!(reg.create("example1", &params, &spec).is_err());
        assert!(reg.create("example1", &ParamMap::new(), &spec).is_err());
        let spec_k3 = GridSpec::new(1.0, 4, 3.0).unwrap();
        let mut c = ParamMap::new();
        c.insert("c".into(), 0.5);
        assert!(reg.create("example1", &c, &spec_k3).is_err());
    }

    #[test]
    fn custom_registration() {
        fn custom(_p: &ParamMap, _s: &GridSpec) -> Result<Box<dyn Benchmark>> {
            Ok(Box::new(Constant::new(4.0)))
        }
        let mut reg = BenchmarkRegistry::empty();
        reg.register("four", &[], custom);
        let spec = GridSpec::new(1.0, 2, 1.0).unwrap();
        assert_eq!(
            reg.create("four", &ParamMap::new(), &spec)
                .unwrap()
                .exact(0.5, 0.0, 0)
                .y,
            4.0
        );
    }
}
