//! Fractional Laplacian on a uniform 1-D grid.
//!
//! [`component_kernel`] discretizes `(-Laplacian)^s` for one order. For
//! `s in (0,1)` the symmetrized integral is split at `|y| = h`:
//!
//! - near field `|y| < h`: the second difference `2u_i - u_{i-1} - u_{i+1}`
//!   times the exact moment `int_0^h y^{1-2s} dy / h^2`;
//! - far field `|y| > h`: the piecewise-linear interpolant of `u`, extended by
//!   zero, integrated exactly against `|y|^{-1-2s}`.
//!
//! Both pieces depend only on `|i - j|`, so the matrix is symmetric Toeplitz
//! with nonpositive off-diagonals. Nodes outside `(a, b)` hold zero, which
//! leaves a strictly positive exterior tail in every row sum.
//!
//! [`frac_laplacian_pointwise`] is an independent adaptive-quadrature
//! evaluation of the continuous operator, used to check closed forms.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::quadrature::{Adaptive, GaussRule};
use crate::{Error, Result};

/// `c_{N,s} = 2^{2s-1} Gamma((N+2s)/2) / (pi^{N/2} Gamma(2-s)) * s(1-s)`.
///
/// Exactly zero at `s = 0` and `s = 1`.
pub fn normalization_constant(dim: u32, s: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&s), "order {s} outside [0,1]");
    if s == 0.0 || s == 1.0 {
        return 0.0;
    }
    let n = dim as f64;
    libm::exp2(2.0 * s - 1.0) * libm::tgamma(0.5 * (n + 2.0 * s))
        / (libm::pow(core::f64::consts::PI, 0.5 * n) * libm::tgamma(2.0 - s))
        * s
        * (1.0 - s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("need finite a < b, got ({a}, {b})")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 interior nodes, got {n}")));
        }
        Ok(Self { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n as f64 + 1.0)
    }

    /// `x_i = a + i h`; `i = 0` and `i = n + 1` are the endpoints.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n + 1 {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    /// Interior node coordinates `x_1 .. x_n`.
    pub fn interior(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n).map(move |i| self.x(i))
    }
}

/// Nodal values on the interior of a [`Grid`], zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: DVector<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("nodal values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = DVector::from_iterator(grid.n(), grid.interior().map(f));
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: DVector::zeros(grid.n()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    /// Lumped `L^2` inner product `h * u^T v`.
    pub fn l2_dot(&self, other: &GridFunction) -> Result<f64> {
        check_same_grid(self, other)?;
        Ok(self.grid.h() * self.values.dot(&other.values))
    }

    /// Piecewise-linear interpolant, zero outside `(a, b)`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.a() || x >= g.b() {
            return 0.0;
        }
        let t = (x - g.a()) / g.h();
        let i = libm::floor(t) as usize;
        let frac = t - i as f64;
        let at = |k: usize| if k == 0 || k > g.n() { 0.0 } else { self.values[k - 1] };
        (1.0 - frac) * at(i) + frac * at(i + 1)
    }
}

pub(crate) fn check_same_grid(u: &GridFunction, v: &GridFunction) -> Result<()> {
    if u.grid != v.grid {
        Err(Error::GridMismatch)
    } else {
        Ok(())
    }
}

/// Symmetric Toeplitz matrix stored by its first column.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricToeplitz {
    col: Vec<f64>,
}

impl SymmetricToeplitz {
    pub fn new(col: Vec<f64>) -> Self {
        Self { col }
    }

    pub fn dim(&self) -> usize {
        self.col.len()
    }

    /// Entry for `|i - j| = k`.
    pub fn entry(&self, k: usize) -> f64 {
        self.col[k]
    }

    pub fn first_column(&self) -> &[f64] {
        &self.col
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.col.len();
        DMatrix::from_fn(n, n, |i, j| self.col[i.abs_diff(j)])
    }

    /// Adds `scale * T` into `m`.
    pub fn add_scaled_to(&self, scale: f64, m: &mut DMatrix<f64>) {
        let n = self.col.len();
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] += scale * self.col[i.abs_diff(j)];
            }
        }
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.col.len();
        DVector::from_fn(n, |i, _| {
            // fixed accumulation order: ascending j
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.col[i.abs_diff(j)] * u[j];
            }
            acc
        })
    }

    /// `v^T T u`.
    pub fn bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        v.dot(&self.apply(u))
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.col.len()).map(|j| self.col[i.abs_diff(j)]).sum()
    }
}

const HAT_RULE_POINTS: usize = 20;

/// Far-field weight of node distance `k >= 1`, in units of `h^{-2s}`:
/// `int_1^inf phi(t - k) t^{-1-2s} dt` with `phi` the unit hat function.
fn far_weights(s: f64, count: usize, rule: &GaussRule) -> Vec<f64> {
    let p = -1.0 - 2.0 * s;
    let mut out = Vec::with_capacity(count);
    for k in 1..=count {
        let kf = k as f64;
        let right = rule.integrate(0.0, 1.0, |tau| (1.0 - tau) * libm::pow(kf + tau, p));
        let left = if k == 1 {
            0.0
        } else {
            rule.integrate(-1.0, 0.0, |tau| (1.0 + tau) * libm::pow(kf + tau, p))
        };
        out.push(left + right);
    }
    out
}

/// Discretization of `(-Laplacian)^s` on `grid` as a symmetric Toeplitz matrix.
///
/// `s = 0` is the identity and `s = 1` the three-point Laplacian.
pub fn component_kernel(grid: &Grid, s: f64) -> SymmetricToeplitz {
    assert!((0.0..=1.0).contains(&s), "order {s} outside [0,1]");
    let n = grid.n();
    let h = grid.h();
    let mut col = alloc::vec![0.0; n];
    if s == 0.0 {
        col[0] = 1.0;
    } else if s == 1.0 {
        col[0] = 2.0 / (h * h);
        col[1] = -1.0 / (h * h);
    } else {
        let scale = 2.0 * normalization_constant(1, s) * libm::pow(h, -2.0 * s);
        let near = 1.0 / (2.0 - 2.0 * s);
        let rule = GaussRule::new(HAT_RULE_POINTS);
        let far = far_weights(s, n - 1, &rule);
        col[0] = scale * (2.0 * near + 1.0 / s);
        col[1] = -scale * (near + far[0]);
        for k in 2..n {
            col[k] = -scale * far[k - 1];
        }
    }
    SymmetricToeplitz::new(col)
}

/// Dense form of [`component_kernel`].
pub fn component_matrix(grid: &Grid, s: f64) -> DMatrix<f64> {
    component_kernel(grid, s).to_dense()
}

fn antiderivative_inv(s: f64, t: f64) -> f64 {
    -libm::pow(t, -2.0 * s) / (2.0 * s)
}

fn antiderivative_lin(s: f64, t: f64) -> f64 {
    if (s - 0.5).abs() < 1e-12 {
        libm::log(t)
    } else {
        libm::pow(t, 1.0 - 2.0 * s) / (1.0 - 2.0 * s)
    }
}

/// `sum_{k >= d} (far weight k)` plus the near-field share when the
/// neighbour at distance one is already exterior, in units of `h^{-2s}`.
fn tail_weight(s: f64, d: usize) -> f64 {
    if d == 1 {
        return 1.0 / (2.0 * s) + 1.0 / (2.0 - 2.0 * s);
    }
    let df = d as f64;
    let ramp = (antiderivative_lin(s, df) - antiderivative_lin(s, df - 1.0))
        - (df - 1.0) * (antiderivative_inv(s, df) - antiderivative_inv(s, df - 1.0));
    ramp + libm::pow(df, -2.0 * s) / (2.0 * s)
}

/// Closed-form exterior tail of row `i` (1-based) of [`component_kernel`]:
/// the coupling of node `i` to the zero exterior, equal to the row sum.
pub fn exterior_tail(grid: &Grid, s: f64, i: usize) -> f64 {
    assert!((1..=grid.n()).contains(&i));
    let n = grid.n();
    let h = grid.h();
    if s == 0.0 {
        return 1.0;
    }
    if s == 1.0 {
        return (usize::from(i == 1) + usize::from(i == n)) as f64 / (h * h);
    }
    let scale = 2.0 * normalization_constant(1, s) * libm::pow(h, -2.0 * s);
    scale * (tail_weight(s, i) + tail_weight(s, n + 1 - i))
}

/// Discrete `[u]_s^2`: `h sum u^2` at `s = 0`, the cell-gradient energy at
/// `s = 1`, and `h u^T A_s u` in between.
pub fn gagliardo_seminorm_sq(u: &GridFunction, s: f64) -> f64 {
    let g = u.grid();
    let h = g.h();
    let v = u.values();
    if s == 0.0 {
        return h * v.dot(v);
    }
    if s == 1.0 {
        let n = g.n();
        let at = |k: usize| if k == 0 || k > n { 0.0 } else { v[k - 1] };
        return (0..=n).map(|k| {
            let d = at(k + 1) - at(k);
            d * d
        }).sum::<f64>() / h;
    }
    h * component_kernel(g, s).bilinear(v, v)
}

/// A real function on the line, either constant outside `[-radius, radius]`
/// or decaying to zero at infinity.
pub struct ExteriorFunction<F> {
    f: F,
    exterior: Option<(f64, f64)>,
    breakpoints: Vec<f64>,
}

impl<F: Fn(f64) -> f64> ExteriorFunction<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            exterior: None,
            breakpoints: Vec::new(),
        }
    }

    /// `u(x) = value` for `|x| > radius`.
    pub fn with_exterior(f: F, radius: f64, value: f64) -> Self {
        Self {
            f,
            exterior: Some((radius, value)),
            breakpoints: alloc::vec![-radius, radius],
        }
    }

    /// Points where `u` fails to be smooth; quadrature panels split there.
    pub fn with_breakpoints(mut self, points: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(points);
        self
    }

    pub fn exterior(&self) -> Option<(f64, f64)> {
        self.exterior
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.exterior {
            Some((r, v)) if x.abs() > r => v,
            _ => (self.f)(x),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Relative tolerance on the full integral.
    pub tol: f64,
    /// Near-field cutoff; reduced automatically below half the distance to
    /// the nearest breakpoint.
    pub near_cutoff: f64,
    pub max_evaluations: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            near_cutoff: 1e-3,
            max_evaluations: 1_000_000,
        }
    }
}

impl OracleOptions {
    /// Defaults with the near-field cutoff scaled to `(a, b)`.
    pub fn for_interval(a: f64, b: f64) -> Self {
        Self {
            near_cutoff: 1e-3 * (b - a),
            ..Self::default()
        }
    }
}

/// `(-Laplacian)^s u(x) = c_{1,s} int_R (2u(x) - u(x+y) - u(x-y)) |y|^{-1-2s} dy`
/// by adaptive quadrature.
///
/// The integrand is even in `y`, so only `y > 0` is integrated. On
/// `(0, h0)` the second difference is replaced by its quadratic term, with
/// one Richardson step in `h0` removing the leading `h0^{4-2s}` error.
/// The far field is covered by geometric panels split at the breakpoints of
/// `u`; beyond the support the tail is integrated in closed form.
pub fn frac_laplacian_pointwise<F: Fn(f64) -> f64>(
    u: &ExteriorFunction<F>,
    x: f64,
    s: f64,
    opts: &OracleOptions,
) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::DomainError(format!("order {s} outside (0,1)")));
    }
    let ux = u.eval(x);
    let second_diff = |y: f64| 2.0 * ux - u.eval(x + y) - u.eval(x - y);
    let kernel = |y: f64| libm::pow(y, -1.0 - 2.0 * s);

    let mut cuts: Vec<f64> = u
        .breakpoints()
        .iter()
        .map(|&p| (p - x).abs())
        .filter(|&d| d > 0.0)
        .collect();
    let far_end = u.exterior().map(|(r, _)| r + x.abs());
    if let Some(y) = far_end {
        cuts.push(y);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut h0 = opts.near_cutoff;
    if let Some(&nearest) = cuts.first() {
        h0 = h0.min(0.5 * nearest);
    }
    let near = |h: f64| second_diff(h) / (h * h) * libm::pow(h, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);

    // Panel boundaries: geometric from h0, plus every cut, up to far_end.
    let mut edges: Vec<f64> = Vec::new();
    let mut y = h0;
    match far_end {
        Some(end) => {
            while y < end {
                edges.push(y);
                y *= 2.0;
            }
            edges.push(end);
        }
        None => {
            // Unknown exterior: extend until the kernel mass beyond is negligible.
            let bound = 2.0 * opts.tol.min(1e-3);
            while libm::pow(y, -2.0 * s) > bound * libm::pow(h0, -2.0 * s) {
                edges.push(y);
                y *= 2.0;
            }
            edges.push(y);
        }
    }
    let last = *edges.last().unwrap();
    edges.extend(cuts.iter().copied().filter(|&c| c > h0 && c < last));
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let integrand = |t: f64| second_diff(t) * kernel(t);
    let rule = GaussRule::new(15);
    let coarse: f64 = edges
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], integrand).abs())
        .sum::<f64>()
        + rule.integrate(0.5 * h0, h0, integrand).abs();
    let abs_tol = opts.tol * coarse.max(f64::MIN_POSITIVE) / (edges.len() as f64 + 1.0);
    let mut quad = Adaptive::new(opts.tol, abs_tol, opts.max_evaluations);
    let mut far = 0.0;
    for w in edges.windows(2) {
        far += quad.integrate(w[0], w[1], &mut |t| integrand(t))?;
    }
    let bridge = quad.integrate(0.5 * h0, h0, &mut |t| integrand(t))?;

    // Without a declared exterior, u is taken to vanish at infinity.
    let exterior_value = u.exterior().map_or(0.0, |(_, v)| v);
    let end = *edges.last().unwrap();
    let tail = 2.0 * (ux - exterior_value) * libm::pow(end, -2.0 * s) / (2.0 * s);

    let coarse_total = near(h0) + far;
    let fine_total = near(0.5 * h0) + bridge + far;
    let ratio = libm::pow(2.0, 4.0 - 2.0 * s);
    let extrapolated = (ratio * fine_total - coarse_total) / (ratio - 1.0);
    Ok(2.0 * normalization_constant(1, s) * (extrapolated + tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_grid(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_vanishes_at_endpoints() {
        assert_eq!(normalization_constant(1, 0.0), 0.0);
        assert_eq!(normalization_constant(1, 1.0), 0.0);
        assert_eq!(normalization_constant(3, 1.0), 0.0);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(1.0, 0.0, 5).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        let g = Grid::new(-1.0, 1.0, 3).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.interior().collect::<Vec<_>>(), vec![-0.5, 0.0, 0.5]);
        assert_eq!(g.x(4), 1.0);
    }

    #[test]
    fn identity_and_laplacian_endpoints() {
        let g = unit_grid(3);
        assert_eq!(component_matrix(&g, 0.0), DMatrix::identity(3, 3));
        let lap = component_matrix(&Grid::new(0.0, 1.0, 3).unwrap(), 1.0);
        let expected = DMatrix::from_row_slice(3, 3, &[32.0, -16.0, 0.0, -16.0, 32.0, -16.0, 0.0, -16.0, 32.0]);
        assert_eq!(lap, expected);
    }

    #[test]
    fn far_weights_match_closed_form() {
        let rule = GaussRule::new(HAT_RULE_POINTS);
        for &s in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            let w = far_weights(s, 12, &rule);
            let f = |t: f64| antiderivative_inv(s, t);
            let g = |t: f64| antiderivative_lin(s, t);
            let w1 = 2.0 * (f(2.0) - f(1.0)) - (g(2.0) - g(1.0));
            assert!((w[0] - w1).abs() <= 1e-13 * w1, "s={s} k=1");
            for k in 2..=12usize {
                let kf = k as f64;
                let exact = (g(kf) - g(kf - 1.0)) - (kf - 1.0) * (f(kf) - f(kf - 1.0))
                    + (kf + 1.0) * (f(kf + 1.0) - f(kf))
                    - (g(kf + 1.0) - g(kf));
                assert!((w[k - 1] - exact).abs() <= 1e-11 * exact, "s={s} k={k}");
            }
        }
    }

    #[test]
    fn row_sums_equal_closed_form_tail() {
        let g = Grid::new(-1.0, 2.0, 40).unwrap();
        for &s in &[0.0, 0.2, 0.5, 0.8, 1.0] {
            let t = component_kernel(&g, s);
            for i in 1..=g.n() {
                let tail = exterior_tail(&g, s, i);
                let sum = t.row_sum(i - 1);
                assert!(tail > 0.0 || (s == 1.0 && i > 1 && i < g.n()));
                assert!((sum - tail).abs() <= 1e-9 * t.entry(0), "s={s} i={i} sum={sum} tail={tail}");
            }
        }
    }

    #[test]
    fn seminorm_examples() {
        let g = Grid::new(0.0, 1.1, 10).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        let zero = GridFunction::zeros(g);
        for &s in &[0.0, 0.3, 1.0] {
            assert_eq!(gagliardo_seminorm_sq(&zero, s), 0.0);
        }
        let mut spike = DVector::zeros(10);
        spike[4] = 1.0;
        let u = GridFunction::new(g, spike).unwrap();
        assert!((gagliardo_seminorm_sq(&u, 0.0) - 0.1).abs() < 1e-15);
        assert!((gagliardo_seminorm_sq(&u, 1.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn seminorm_matches_matrix_form_at_endpoints() {
        let g = unit_grid(17);
        let u = GridFunction::from_fn(g, |x| libm::sin(3.0 * x) * x * (1.0 - x)).unwrap();
        let h = g.h();
        for &s in &[0.0, 1.0] {
            let a = component_matrix(&g, s);
            let form = h * u.values().dot(&(&a * u.values()));
            assert!((form - gagliardo_seminorm_sq(&u, s)).abs() < 1e-12 * form);
        }
    }

    #[test]
    fn interpolant_reproduces_nodes_and_vanishes_outside() {
        let g = unit_grid(5);
        let u = GridFunction::from_fn(g, |x| x * x).unwrap();
        for i in 1..=5 {
            assert!((u.interpolate(g.x(i)) - g.x(i).powi(2)).abs() < 1e-15);
        }
        assert_eq!(u.interpolate(-0.2), 0.0);
        assert_eq!(u.interpolate(1.0), 0.0);
        let mid = 0.5 * (g.x(2) + g.x(3));
        assert!((u.interpolate(mid) - 0.5 * (g.x(2).powi(2) + g.x(3).powi(2))).abs() < 1e-15);
    }

    #[test]
    fn oracle_kills_constants() {
        let u = ExteriorFunction::with_exterior(|_| 3.5, 1.0, 3.5);
        for &s in &[0.2, 0.5, 0.8] {
            let v = frac_laplacian_pointwise(&u, 0.3, s, &OracleOptions::default()).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn oracle_matches_gaussian_closed_form() {
        // (-Laplacian)^{1/2} of 1/(1+x^2) is (1-x^2)/(1+x^2)^2 (Poisson kernel).
        let u = ExteriorFunction::new(|x: f64| 1.0 / (1.0 + x * x));
        for &x in &[0.0, 0.4, 1.3] {
            let v = frac_laplacian_pointwise(&u, x, 0.5, &OracleOptions { tol: 1e-12, ..Default::default() })
                .unwrap();
            let exact = (1.0 - x * x) / (1.0 + x * x).powi(2);
            assert!((v - exact).abs() < 1e-7, "x={x} v={v} exact={exact}");
        }
    }

    #[test]
    fn oracle_rejects_endpoint_orders() {
        let u = ExteriorFunction::new(|x: f64| x);
        assert!(matches!(
            frac_laplacian_pointwise(&u, 0.0, 1.0, &OracleOptions::default()),
            Err(Error::DomainError(_))
        ));
    }
}
