//! Quadrature helpers: composite Gauss–Legendre on finite intervals and
//! Gauss–Hermite expectations under a standard normal.

use gauss_quad::{GaussHermite, GaussLegendre};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

const PANEL_NODES: usize = 16;

fn panel_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(PANEL_NODES).unwrap())
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Integrate `f` over `[a, b]` with `panels` equal panels of 16-point
/// Gauss–Legendre.
pub fn composite_gl<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    if b <= a || panels == 0 {
        return 0.0;
    }
    let rule = panel_rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in rule {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Nodes and weights for `E[f(G)]`, `G ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct NormalRule {
    pairs: Vec<(f64, f64)>,
}

impl NormalRule {
    pub fn new(nodes: usize) -> Self {
        let gh = GaussHermite::new(NonZeroUsize::new(nodes.max(1)).unwrap());
        let norm = std::f64::consts::PI.sqrt();
        let pairs = gh
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (x * std::f64::consts::SQRT_2, w / norm))
            .collect();
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.pairs.iter().map(|&(x, w)| w * f(x)).sum()
    }
}
