//! Maximum-principle harnesses and the capped-parabola counterexample.
//!
//! For a measure without negative part the assembled matrix is an M-matrix,
//! so nonnegative data give nonnegative solutions ([`weak_mp_trials`]) and,
//! when some fractional order couples all nodes, strictly positive ones
//! ([`strong_mp_check`]).
//!
//! With a negative part the principle fails. The witness is
//!
//! ```text
//! u_R(x) = x^2 - 1            for |x| <= 1 + R
//!        = (1 + R)^2 - 1      otherwise
//! ```
//!
//! on `(-1, 1)`, for which `-u_R'' - alpha (-Laplacian)^s u_R >= 0` once `R`
//! is large although `u_R < 0` inside. Closed forms below use the one-sided
//! principal-value integral `int (u(x) - u(y)) |x - y|^{-1-2s} dy` with no
//! normalization constant ("unnormalized" convention); the normalized operator is
//! `2 c_{1,s}` times it.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::{frac_laplacian_pointwise, normalization_constant, ExteriorFunction, Grid, GridFunction, OracleOptions};
use crate::measure::{mass, SignedMeasure, DEFAULT_NODES_PER_PIECE};
use crate::operator::OperatorMatrix;
use crate::quadrature::{Adaptive, GaussRule};
use crate::{Error, Result};

/// Tolerance for a solution value to count as negative.
pub const WEAK_MP_TOL: f64 = 1e-10;
/// Scaled positivity threshold of the strong check.
pub const STRONG_MP_TOL: f64 = 1e-12;
/// Lower bound on the counterexample residual.
pub const COUNTEREXAMPLE_TOL: f64 = -1e-8;
/// Orders within this distance of 1/2 use the logarithmic branch.
pub const HALF_GUARD: f64 = 1e-8;

/// Solves `M u = f` for a positive definite assembled matrix.
pub fn solve_dirichlet(op: &OperatorMatrix, f: &GridFunction) -> Result<GridFunction> {
    if f.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let chol = op.matrix().clone().cholesky().ok_or(Error::IndefiniteForm {
        value: crate::operator::smallest_eigenvalue(op.matrix()),
    })?;
    let u = chol.solve(f.values());
    let f_norm = f.values().norm();
    if f_norm == 0.0 {
        return Ok(GridFunction::zeros(*op.grid()));
    }
    let residual = (op.apply(&u) - f.values()).norm() / f_norm;
    if !residual.is_finite() || residual > 1e-10 {
        return Err(Error::SingularSystem { residual });
    }
    GridFunction::new(*op.grid(), u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpReport {
    pub trials: usize,
    pub min_solution_value: f64,
    pub violations: usize,
    pub seed: u64,
}

fn require_positive_measure(m: &SignedMeasure) -> Result<()> {
    if !m.is_positive() {
        return Err(Error::PreconditionViolated(
            "maximum-principle harness needs a measure without negative part".into(),
        ));
    }
    Ok(())
}

/// Random nonnegative data, uniform in `[0, 1]` per node; all-zero draws are redrawn.
fn random_source(grid: &Grid, seed: u64, trial: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    loop {
        let f = DVector::from_fn(grid.n(), |_, _| rng.gen_range(0.0..=1.0));
        if f.iter().any(|&x| x > 0.0) {
            return f;
        }
    }
}

fn trial_minimum(op: &OperatorMatrix, seed: u64, trial: usize) -> Result<f64> {
    let f = GridFunction::new(*op.grid(), random_source(op.grid(), seed, trial))?;
    let u = solve_dirichlet(op, &f)?;
    Ok(u.values().min())
}

#[cfg(feature = "parallel")]
fn trial_minima(op: &OperatorMatrix, trials: usize, seed: u64) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(|t| trial_minimum(op, seed, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn trial_minima(op: &OperatorMatrix, trials: usize, seed: u64) -> Result<Vec<f64>> {
    (0..trials).map(|t| trial_minimum(op, seed, t)).collect()
}

/// Solves with `trials` random nonnegative right-hand sides and counts
/// solutions dipping below `-WEAK_MP_TOL`.
pub fn weak_mp_trials(m: &SignedMeasure, grid: &Grid, trials: usize, seed: u64) -> Result<MpReport> {
    require_positive_measure(m)?;
    let op = OperatorMatrix::assemble(m, grid, DEFAULT_NODES_PER_PIECE, false)?;
    if !op.has_nonpositive_offdiagonal() {
        return Err(Error::PreconditionViolated("assembled matrix is not an M-matrix".into()));
    }
    let minima = trial_minima(&op, trials, seed)?;
    Ok(MpReport {
        trials,
        min_solution_value: minima.iter().copied().fold(f64::INFINITY, f64::min),
        violations: minima.iter().filter(|&&v| v < -WEAK_MP_TOL).count(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrongStatus {
    Checked,
    /// `f = 0`: the solution is zero and there is nothing to check.
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongMpReport {
    pub status: StrongStatus,
    /// `min_i u_i / max_i u_i`.
    pub min_scaled_value: f64,
    pub strictly_positive: bool,
    /// Whether `mu+((0,1)) > 0`, i.e. some fractional order couples all nodes.
    pub fractional_coupling: bool,
}

/// Checks `u > 0` at every interior node for `f >= 0`, `f != 0`.
pub fn strong_mp_check(m: &SignedMeasure, grid: &Grid, f: &GridFunction) -> Result<StrongMpReport> {
    require_positive_measure(m)?;
    if f.values().iter().any(|&x| x < 0.0) {
        return Err(Error::PreconditionViolated("source must be nonnegative".into()));
    }
    let open_mass = mass(m.plus(), 0.0, 1.0)
        - m.plus()
            .iter()
            .map(|c| match *c {
                crate::measure::MeasureComponent::Atom { s, weight } if s == 0.0 || s == 1.0 => weight,
                _ => 0.0,
            })
            .sum::<f64>();
    let fractional_coupling = open_mass > 0.0;
    if f.values().iter().all(|&x| x == 0.0) {
        return Ok(StrongMpReport {
            status: StrongStatus::Skipped,
            min_scaled_value: 0.0,
            strictly_positive: false,
            fractional_coupling,
        });
    }
    let op = OperatorMatrix::assemble(m, grid, DEFAULT_NODES_PER_PIECE, false)?;
    let u = solve_dirichlet(&op, f)?;
    let scaled = u.values().min() / u.values().max();
    Ok(StrongMpReport {
        status: StrongStatus::Checked,
        min_scaled_value: scaled,
        strictly_positive: scaled > STRONG_MP_TOL,
        fractional_coupling,
    })
}

/// Capped parabola `u_R`.
pub fn u_r_eval(x: f64, r: f64) -> f64 {
    if x.abs() <= 1.0 + r {
        x * x - 1.0
    } else {
        (1.0 + r) * (1.0 + r) - 1.0
    }
}

/// `u_R` with its plateau declared, for the quadrature oracle.
pub fn u_r_function(r: f64) -> ExteriorFunction<impl Fn(f64) -> f64> {
    ExteriorFunction::with_exterior(move |x: f64| u_r_eval(x, r), 1.0 + r, (1.0 + r) * (1.0 + r) - 1.0)
}

fn check_counterexample_args(x: f64, r: f64, s: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::DomainError(format!("radius R = {r} must be positive")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::DomainError(format!("order s = {s} outside (0,1)")));
    }
    if x.is_nan() || x.abs() > 1.0 {
        return Err(Error::DomainError(format!("point x = {x} outside [-1,1]")));
    }
    Ok(())
}

/// The three pieces of the one-sided integral: the two plateau tails and
/// the principal value over `[-1-R, 1+R]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrPieces {
    pub left_tail: f64,
    pub right_tail: f64,
    pub center: f64,
}

impl UrPieces {
    pub fn total(&self) -> f64 {
        self.left_tail + self.right_tail + self.center
    }
}

pub fn u_r_pieces(x: f64, r: f64, s: f64) -> Result<UrPieces> {
    check_counterexample_args(x, r, s)?;
    let plus = 1.0 + r + x;
    let minus = 1.0 + r - x;
    let e = 1.0 - 2.0 * s;
    let left_tail = -minus * libm::pow(plus, e) / (2.0 * s);
    let right_tail = -plus * libm::pow(minus, e) / (2.0 * s);
    let center = 2.0 * x * power_difference_ratio(plus, minus, e)
        - (libm::pow(plus, 2.0 - 2.0 * s) + libm::pow(minus, 2.0 - 2.0 * s)) / (2.0 - 2.0 * s);
    Ok(UrPieces {
        left_tail,
        right_tail,
        center,
    })
}

/// `(a^e - b^e) / e`, continuous through `e = 0` where it is `ln(a / b)`.
fn power_difference_ratio(a: f64, b: f64, e: f64) -> f64 {
    let log_ratio = libm::log(a / b);
    if e.abs() < HALF_GUARD {
        return log_ratio;
    }
    libm::pow(b, e) * libm::expm1(e * log_ratio) / e
}

/// Closed form of `g_{R,s}(x)`, the one-sided integral for `s != 1/2`.
pub fn g_eval(x: f64, r: f64, s: f64) -> Result<f64> {
    if (s - 0.5).abs() < HALF_GUARD {
        return Err(Error::DomainError(format!("g is defined for s != 1/2, got {s}")));
    }
    Ok(u_r_pieces(x, r, s)?.total())
}

/// `h_R(x) = 2x log((1+R+x)/(1+R-x)) - 4 - 4R`, the `s = 1/2` case.
pub fn h_eval(x: f64, r: f64) -> Result<f64> {
    check_counterexample_args(x, r, 0.5)?;
    Ok(2.0 * x * libm::log((1.0 + r + x) / (1.0 + r - x)) - 4.0 - 4.0 * r)
}

/// One-sided integral of `u_R` at `x`, branch chosen by `s`.
pub fn fraclap_ur_closed(x: f64, r: f64, s: f64) -> Result<f64> {
    if (s - 0.5).abs() < HALF_GUARD {
        h_eval(x, r)
    } else {
        g_eval(x, r, s)
    }
}

pub const R0_RESOLUTION: f64 = 1e-6;

/// Smallest `R` (to `R0_RESOLUTION`) with `g_{R,s}(1) <= -2 / alpha`.
///
/// Doubling brackets the crossing from `R = 1`, bisection narrows it; the
/// returned radius always satisfies the inequality.
pub fn find_r0(alpha: f64, s: f64, r_max: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::DomainError(format!("alpha = {alpha} must be positive")));
    }
    let target = -2.0 / alpha;
    let holds = |r: f64| -> Result<bool> { Ok(fraclap_ur_closed(1.0, r, s)? <= target) };
    let (mut lo, mut hi);
    if holds(1.0)? {
        hi = 1.0;
        lo = 0.5;
        while holds(lo)? {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Ok(hi);
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while !holds(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > r_max {
                if holds(r_max)? {
                    hi = r_max;
                    break;
                }
                return Err(Error::NotFound { r_max });
            }
        }
    }
    while hi - lo > R0_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Unnormalized one-sided integral, as in the closed forms.
    Unnormalized,
    /// `c_{1,s}`-normalized operator with `alpha` rescaled by `1 / (2 c_{1,s})`.
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub alpha: f64,
    /// Coefficient in front of the operator of the chosen convention.
    pub alpha_effective: f64,
    pub s: f64,
    pub convention: Convention,
    pub r0: f64,
    /// `min_i (-u_R''(x_i) - alpha F(x_i))` over interior nodes.
    pub grid_residual_min: f64,
    pub u_max_interior: f64,
    /// Largest relative gap between the closed form and the quadrature oracle.
    pub closedform_oracle_dev: f64,
    pub nodes: Vec<f64>,
    pub u_values: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl CounterexampleReport {
    pub fn confirmed(&self) -> bool {
        self.grid_residual_min >= COUNTEREXAMPLE_TOL && self.u_max_interior < 0.0
    }
}

pub const DEFAULT_R_MAX: f64 = 1e12;

/// Evaluates the counterexample inequality at the `n` interior nodes of `(-1, 1)`.
pub fn verify_counterexample(alpha: f64, s: f64, n: usize, convention: Convention) -> Result<CounterexampleReport> {
    let grid = Grid::new(-1.0, 1.0, n)?;
    let r0 = find_r0(alpha, s, DEFAULT_R_MAX)?;
    let two_c = 2.0 * normalization_constant(1, s);
    let (alpha_effective, scale) = match convention {
        Convention::Unnormalized => (alpha, 1.0),
        Convention::Normalized => (alpha / two_c, two_c),
    };
    let oracle_fn = u_r_function(r0);
    let opts = OracleOptions::for_interval(-1.0, 1.0);
    let mut nodes = Vec::with_capacity(n);
    let mut u_values = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut dev = 0.0f64;
    for x in grid.interior() {
        let one_sided = fraclap_ur_closed(x, r0, s)?;
        let f = scale * one_sided;
        // -u_R'' = -2 exactly on (-1, 1)
        residuals.push(-2.0 - alpha_effective * f);
        nodes.push(x);
        u_values.push(u_r_eval(x, r0));
        let oracle = frac_laplacian_pointwise(&oracle_fn, x, s, &opts)?;
        dev = dev.max((two_c * one_sided - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE));
    }
    Ok(CounterexampleReport {
        alpha,
        alpha_effective,
        s,
        convention,
        r0,
        grid_residual_min: residuals.iter().copied().fold(f64::INFINITY, f64::min),
        u_max_interior: u_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        closedform_oracle_dev: dev,
        nodes,
        u_values,
        residuals,
    })
}

/// `int_L^inf dx / (1 + x^p)` for `L >= 2` via the alternating series in `x^{-p}`.
fn kernel_tail(l: f64, p: f64) -> f64 {
    let mut total = 0.0;
    let mut m = 0usize;
    loop {
        let k = (m + 1) as f64;
        let term = libm::pow(l, 1.0 - p * k) / (p * k - 1.0);
        let signed = if m.is_multiple_of(2) { term } else { -term };
        total += signed;
        if term <= 1e-17 * total.abs() || m > 10_000 {
            return total;
        }
        m += 1;
    }
}

/// `int_(0,1) c_{1,s} int_R |u(x)| / (1 + |x|^{1+2s}) dx dmu+(s)`.
///
/// Atoms at 0 and 1 do not contribute. Requires `u` constant outside a
/// declared radius, or decaying.
pub fn tail_norm<F: Fn(f64) -> f64>(u: &ExteriorFunction<F>, m: &SignedMeasure, tol: f64) -> Result<f64> {
    let nodes = m.atomize(DEFAULT_NODES_PER_PIECE);
    let mut total = 0.0;
    for node in nodes.iter().filter(|n| n.sign == crate::Sign::Plus && n.s > 0.0 && n.s < 1.0) {
        let p = 1.0 + 2.0 * node.s;
        let integrand = |x: f64| u.eval(x).abs() / (1.0 + libm::pow(x.abs(), p));
        // A fixed-rule pass sets the absolute floor, so that sign changes of
        // `u` (kinks of |u| with values near zero) do not force endless
        // relative refinement.
        let coarse_rule = GaussRule::new(40);
        let coarse = weighted_integral(u, p, tol, &mut |a, b| Ok(coarse_rule.integrate(a, b, &integrand)))?;
        let mut quad = Adaptive::new(tol, 1e-3 * tol * coarse.abs(), 1_000_000);
        let inner = weighted_integral(u, p, tol, &mut |a, b| quad.integrate(a, b, &mut |x| integrand(x)))?;
        total += node.w * normalization_constant(1, node.s) * inner;
    }
    Ok(total)
}

fn weighted_integral<F: Fn(f64) -> f64>(
    u: &ExteriorFunction<F>,
    p: f64,
    tol: f64,
    integrate: &mut dyn FnMut(f64, f64) -> Result<f64>,
) -> Result<f64> {
    match u.exterior() {
        Some((radius, value)) => {
            let l = radius.max(2.0);
            let mut edges: Vec<f64> = u.breakpoints().iter().copied().filter(|b| b.abs() < l).collect();
            edges.extend_from_slice(&[-l, -1.0, 0.0, 1.0, l]);
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            let mut core_part = 0.0;
            for w in edges.windows(2) {
                core_part += integrate(w[0], w[1])?;
            }
            Ok(core_part + 2.0 * value.abs() * kernel_tail(l, p))
        }
        None => {
            let mut acc = integrate(-1.0, 0.0)? + integrate(0.0, 1.0)?;
            let mut lo = 1.0;
            let mut quiet = 0;
            while quiet < 3 {
                let hi = 2.0 * lo;
                let piece = integrate(lo, hi)? + integrate(-hi, -lo)?;
                acc += piece;
                quiet = if piece <= tol * acc { quiet + 1 } else { 0 };
                lo = hi;
            }
            Ok(acc)
        }
    }
}
