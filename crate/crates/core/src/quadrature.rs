//! Gauss–Legendre rules and a budgeted adaptive integrator.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed Gauss–Legendre rule that can be mapped onto any interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Adaptive bisection integrator with a global evaluation budget.
///
/// A panel is accepted when its one-rule estimate and the sum over its two
/// halves agree to `max(rel_tol * |estimate|, abs_tol)`.
#[derive(Debug)]
pub struct Adaptive {
    rule: GaussRule,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub budget: usize,
    pub evaluations: usize,
    max_depth: usize,
}

impl Adaptive {
    pub fn new(rel_tol: f64, abs_tol: f64, budget: usize) -> Self {
        Self {
            rule: GaussRule::new(15),
            rel_tol,
            abs_tol,
            budget,
            evaluations: 0,
            max_depth: 60,
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&mut self, a: f64, b: f64, f: &mut F) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let whole = self.panel(a, b, f)?;
        self.refine(a, b, whole, 0, f)
    }

    fn panel<F: FnMut(f64) -> f64>(&mut self, a: f64, b: f64, f: &mut F) -> Result<f64> {
        self.evaluations += self.rule.len();
        if self.evaluations > self.budget {
            return Err(Error::NonConvergence {
                evaluations: self.evaluations,
            });
        }
        Ok(self.rule.integrate(a, b, &mut *f))
    }

    fn refine<F: FnMut(f64) -> f64>(
        &mut self,
        a: f64,
        b: f64,
        whole: f64,
        depth: usize,
        f: &mut F,
    ) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let left = self.panel(a, mid, f)?;
        let right = self.panel(mid, b, f)?;
        let halves = left + right;
        let tol = (self.rel_tol * halves.abs()).max(self.abs_tol);
        if (halves - whole).abs() <= tol || depth >= self.max_depth || mid == a || mid == b {
            return Ok(halves);
        }
        Ok(self.refine(a, mid, left, depth + 1, f)? + self.refine(mid, b, right, depth + 1, f)?)
    }
}
