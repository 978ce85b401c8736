use crate::grid::PathView;
use crate::orthopoly::{fill_charlier, fill_hermite};

/// Per-path polynomial products for every interval and degree pair.
///
/// For interval `i` and degrees `(b, p)` with `b, p <= order`, slot
/// `i * (order+1)^2 + b * (order+1) + p` holds
///
/// - `value`: `K_b(G_i) C_p(Q_i, κh)`
/// - `d_brownian`: `K_{b-1}(G_i) C_p(Q_i, κh)` (zero when `b = 0`)
/// - `d_poisson`: `K_b(G_i) p C_{p-1}(Q_i, κh)` (zero when `p = 0`)
#[derive(Debug, Clone)]
pub(crate) struct SampleTables {
    order: usize,
    hermite: Vec<f64>,
    charlier: Vec<f64>,
    pub value: Vec<f64>,
    pub d_brownian: Vec<f64>,
    pub d_poisson: Vec<f64>,
}

impl SampleTables {
    pub fn new(intervals: usize, order: usize) -> Self {
        let len = intervals * (order + 1) * (order + 1);
        Self {
            order,
            hermite: vec![0.0; order + 1],
            charlier: vec![0.0; order + 1],
            value: vec![0.0; len],
            d_brownian: vec![0.0; len],
            d_poisson: vec![0.0; len],
        }
    }

    pub fn fill(&mut self, path: PathView<'_>, kappa_h: f64, derivatives: bool) {
        let d = self.order + 1;
        let width = d * d;
        for (i, (&g, &q)) in path.gauss.iter().zip(path.counts).enumerate() {
            fill_hermite(g, &mut self.hermite);
            fill_charlier(f64::from(q), kappa_h, &mut self.charlier);
            let base = i * width;
            for b in 0..d {
                let kb = self.hermite[b];
                let row = base + b * d;
                for p in 0..d {
                    self.value[row + p] = kb * self.charlier[p];
                }
                if derivatives {
                    for p in 0..d {
                        self.d_brownian[row + p] = if b > 0 {
                            self.hermite[b - 1] * self.charlier[p]
                        } else {
                            0.0
                        };
                        self.d_poisson[row + p] = if p > 0 {
                            kb * p as f64 * self.charlier[p - 1]
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
    }
}
