//! Dirichlet spectrum of the assembled operator.
//!
//! With the lumped mass matrix `h I`, the weak problem
//! `<e, v> = lambda * h * e^T v` reduces to the standard symmetric problem
//! for the assembled matrix. Two routes are provided: a dense symmetric
//! eigendecomposition ([`solve_direct`]) and the recursive minimization of
//! the Rayleigh quotient over successive orthogonal complements
//! ([`solve_recursive_rayleigh`]). Each serves as the other's oracle.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::GridFunction;
use crate::operator::OperatorMatrix;
use crate::{Error, Result};

/// Relative gap below which consecutive eigenvalues share a group.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Recursive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lambdas: Vec<f64>,
    /// `h * e_i^T e_j = delta_ij`; first significant entry positive.
    pub vectors: Vec<GridFunction>,
    pub groups: Vec<Vec<usize>>,
    pub method: Method,
}

impl Spectrum {
    fn new(lambdas: Vec<f64>, vectors: Vec<GridFunction>, method: Method) -> Self {
        let groups = group_indices(&lambdas, DEFAULT_GROUP_TOL);
        Self {
            lambdas,
            vectors,
            groups,
            method,
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

fn group_indices(lambdas: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in lambdas.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if {
                let prev = lambdas[*g.last().unwrap()];
                (l - prev).abs() < rel_tol * l.abs().max(prev.abs())
            } =>
            {
                g.push(i)
            }
            _ => groups.push(alloc::vec![i]),
        }
    }
    groups
}

/// Scales to unit lumped `L^2` norm and makes the first significant entry positive.
fn normalize(v: &mut DVector<f64>, h: f64) {
    let norm = libm::sqrt(h * v.dot(v));
    *v /= norm;
    let cutoff = 1e-8 * v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > cutoff) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

fn into_grid_functions(op: &OperatorMatrix, vs: Vec<DVector<f64>>) -> Vec<GridFunction> {
    vs.into_iter()
        .map(|v| GridFunction::new(*op.grid(), v).expect("finite eigenvector"))
        .collect()
}

fn check_count(op: &OperatorMatrix, k: usize) -> Result<()> {
    if k == 0 || k > op.grid().n() {
        return Err(Error::InvalidArgument(alloc::format!(
            "requested {k} eigenpairs on a grid with {} nodes",
            op.grid().n()
        )));
    }
    Ok(())
}

/// The `k` smallest eigenpairs from a dense symmetric eigendecomposition.
pub fn solve_direct(op: &OperatorMatrix, k: usize) -> Result<Spectrum> {
    check_count(op, k)?;
    let eig = op.matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let smallest = eig.eigenvalues[order[0]];
    if smallest <= 0.0 {
        return Err(Error::IndefiniteForm { value: smallest });
    }
    let h = op.grid().h();
    let mut lambdas = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        lambdas.push(eig.eigenvalues[i]);
        let mut v = eig.eigenvectors.column(i).into_owned();
        normalize(&mut v, h);
        vectors.push(v);
    }
    Ok(Spectrum::new(lambdas, into_grid_functions(op, vectors), Method::Direct))
}

#[derive(Debug, Clone, Copy)]
pub struct RecursiveOptions {
    /// Relative change of the Rayleigh quotient between sweeps.
    pub tol: f64,
    /// Target for `||M e - lambda e|| / (||M||_inf ||e||)`. Sweeps also stop
    /// once the residual has reached its rounding floor (no 1% improvement
    /// over `STALL_SWEEPS` sweeps while below `FLOOR_CEILING`).
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Seed of the deterministic starting vectors.
    pub seed: u64,
}

const STALL_SWEEPS: usize = 10;
const FLOOR_CEILING: f64 = 1e-10;

impl Default for RecursiveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            residual_tol: 1e-15,
            max_iter: 20_000,
            seed: 0x5eed,
        }
    }
}

/// `lambda_1 = min <u,u> / (h |u|^2)`, then `lambda_{j+1}` is the same
/// minimum over `{u : <u, e_i> = 0, i <= j}`.
///
/// Each minimum is found by inverse iteration (shift zero) with the iterate
/// re-projected onto the constraint set, in the mixed form `<.,.>`, after
/// every solve.
pub fn solve_recursive_rayleigh(op: &OperatorMatrix, k: usize, opts: &RecursiveOptions) -> Result<Spectrum> {
    check_count(op, k)?;
    let a = op.matrix();
    let n = op.grid().n();
    let h = op.grid().h();
    let chol = a.clone().cholesky().ok_or(Error::IndefiniteForm {
        value: crate::operator::smallest_eigenvalue(a),
    })?;
    let a_norm = (0..n).map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut found: Vec<DVector<f64>> = Vec::with_capacity(k);
    // A e_i, cached: <w, e_i> = h e_i^T A w = h (A e_i)^T w.
    let mut images: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut lambdas = Vec::with_capacity(k);

    for _ in 0..k {
        let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
        deflate(&mut v, &found, &images, h);
        normalize(&mut v, h);
        let mut rq = h * v.dot(&(a * &v));
        let mut converged = false;
        let mut best = f64::INFINITY;
        let mut stalls = 0;
        for _ in 0..opts.max_iter {
            let mut w = chol.solve(&v);
            deflate(&mut w, &found, &images, h);
            deflate(&mut w, &found, &images, h);
            normalize(&mut w, h);
            let aw = a * &w;
            let next = h * w.dot(&aw);
            let residual = (&aw - &w * next).norm() / (a_norm * w.norm());
            if residual < 0.99 * best {
                best = residual;
                stalls = 0;
            } else {
                stalls += 1;
            }
            let at_floor = stalls >= STALL_SWEEPS && residual <= FLOOR_CEILING;
            let settled = (next - rq).abs() < opts.tol * next.abs() && (residual <= opts.residual_tol || at_floor);
            v = w;
            rq = next;
            if settled {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ConvergenceFailure {
                iterations: opts.max_iter,
            });
        }
        lambdas.push(rq);
        images.push(a * &v);
        found.push(v);
    }
    Ok(Spectrum::new(lambdas, into_grid_functions(op, found), Method::Recursive))
}

/// Projects `w` onto `{u : <u, e_i> = 0}` by Gram–Schmidt in the mixed form.
fn deflate(w: &mut DVector<f64>, found: &[DVector<f64>], images: &[DVector<f64>], h: f64) {
    for (e, ae) in found.iter().zip(images) {
        let coeff = (h * ae.dot(w)) / (h * ae.dot(e));
        w.axpy(-coeff, e, 1.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityReport {
    /// `max_{i != j} |h e_i^T e_j|`.
    pub max_l2_offdiag: f64,
    /// `max_i |h e_i^T e_i - 1|`.
    pub max_l2_normalization_error: f64,
    /// `max_{i != j} |<e_i, e_j>|`.
    pub max_form_offdiag: f64,
    pub max_lambda: f64,
    pub passed: bool,
}

pub const L2_ORTHO_TOL: f64 = 1e-10;
pub const FORM_ORTHO_TOL: f64 = 1e-8;

#[allow(clippy::needless_range_loop)] // i and j index three parallel collections
pub fn verify_orthogonality(spec: &Spectrum, op: &OperatorMatrix) -> Result<OrthogonalityReport> {
    let k = spec.len();
    let h = op.grid().h();
    let images: Vec<DVector<f64>> = spec.vectors.iter().map(|e| op.apply(e.values())).collect();
    let mut max_l2_offdiag = 0.0f64;
    let mut max_norm = 0.0f64;
    let mut max_form = 0.0f64;
    for i in 0..k {
        let ei = spec.vectors[i].values();
        max_norm = max_norm.max((h * ei.dot(ei) - 1.0).abs());
        for j in 0..k {
            if i == j {
                continue;
            }
            let ej = spec.vectors[j].values();
            max_l2_offdiag = max_l2_offdiag.max((h * ei.dot(ej)).abs());
            max_form = max_form.max((h * ej.dot(&images[i])).abs());
        }
    }
    let max_lambda = spec.lambdas.iter().copied().fold(0.0, f64::max);
    let passed = max_l2_offdiag <= L2_ORTHO_TOL
        && max_norm <= L2_ORTHO_TOL
        && max_form <= FORM_ORTHO_TOL * max_lambda;
    Ok(OrthogonalityReport {
        max_l2_offdiag,
        max_l2_normalization_error: max_norm,
        max_form_offdiag: max_form,
        max_lambda,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighReport {
    /// `|<e_k, e_k> - lambda_k| / (1 + lambda_k)` per index.
    pub deviations: Vec<f64>,
    pub passed: bool,
}

pub const RAYLEIGH_TOL: f64 = 1e-8;

/// Checks `<e_k, e_k> = lambda_k` for unit-`L^2` eigenvectors.
pub fn rayleigh_identity(spec: &Spectrum, op: &OperatorMatrix) -> Result<RayleighReport> {
    let mut deviations = Vec::with_capacity(spec.len());
    for (e, &l) in spec.vectors.iter().zip(&spec.lambdas) {
        let q = op.inner(e, e)?;
        deviations.push((q - l).abs() / (1.0 + l.abs()));
    }
    let passed = deviations.iter().all(|&d| d <= RAYLEIGH_TOL);
    Ok(RayleighReport { deviations, passed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub indices: Vec<usize>,
    pub lambda: f64,
    /// Relative eigen-residual of a random combination within the group.
    pub span_residual: f64,
    /// Smallest relative residual after adding a vector from another group.
    pub min_foreign_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityReport {
    pub groups: Vec<GroupCheck>,
    pub passed: bool,
}

pub const EIGEN_RELATION_TOL: f64 = 1e-7;

/// Groups consecutive eigenvalues closer than `rel_tol` and checks that each
/// group spans an eigenspace that excludes every other group's vectors.
pub fn multiplicity_groups(spec: &Spectrum, op: &OperatorMatrix, rel_tol: f64, seed: u64) -> MultiplicityReport {
    let groups = group_indices(&spec.lambdas, rel_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.grid().n();
    let images: Vec<DVector<f64>> = spec.vectors.iter().map(|e| op.apply(e.values())).collect();
    let relative_residual = |v: &DVector<f64>, av: &DVector<f64>, lambda: f64| {
        (av - v * lambda).norm() / (lambda.abs() * v.norm()).max(f64::MIN_POSITIVE)
    };

    let mut checks = Vec::with_capacity(groups.len());
    for (gi, group) in groups.iter().enumerate() {
        let lambda = group.iter().map(|&i| spec.lambdas[i]).sum::<f64>() / group.len() as f64;
        let mut v = DVector::zeros(n);
        let mut av = DVector::zeros(n);
        for &i in group {
            let c: f64 = rng.gen_range(0.5..=1.5);
            v.axpy(c, spec.vectors[i].values(), 1.0);
            av.axpy(c, &images[i], 1.0);
        }
        let span_residual = relative_residual(&v, &av, lambda);
        let mut min_foreign = f64::INFINITY;
        for (gj, other) in groups.iter().enumerate() {
            if gi == gj {
                continue;
            }
            let j = other[0];
            let w = &v + spec.vectors[j].values();
            let aw = &av + &images[j];
            min_foreign = min_foreign.min(relative_residual(&w, &aw, lambda));
        }
        checks.push(GroupCheck {
            indices: group.clone(),
            lambda,
            span_residual,
            min_foreign_residual: min_foreign,
        });
    }
    let passed = checks
        .iter()
        .all(|c| c.span_residual <= EIGEN_RELATION_TOL && c.min_foreign_residual > EIGEN_RELATION_TOL);
    MultiplicityReport { groups: checks, passed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    /// `c_i = <f, e_i / ||e_i||>`.
    pub coefficients: Vec<f64>,
    /// Mixed-norm residual after `m` terms, `m = 0..=len`.
    pub partial_residuals: Vec<f64>,
    pub norm_f: f64,
}

impl Expansion {
    pub fn final_residual(&self) -> f64 {
        *self.partial_residuals.last().unwrap()
    }
}

/// Expands `f` in the form-normalized eigenvectors of a full spectrum.
pub fn expand_in_eigenbasis(f: &GridFunction, spec: &Spectrum, op: &OperatorMatrix) -> Result<Expansion> {
    if spec.len() != op.grid().n() {
        return Err(Error::InvalidArgument(alloc::format!(
            "expansion needs the full spectrum ({} of {})",
            spec.len(),
            op.grid().n()
        )));
    }
    let norm_f = op.norm_mixed(f)?;
    let mut basis = Vec::with_capacity(spec.len());
    for e in &spec.vectors {
        let norm = op.norm_mixed(e)?;
        basis.push(GridFunction::new(*op.grid(), e.values() / norm)?);
    }
    let mut coefficients = Vec::with_capacity(basis.len());
    let mut residual = f.values().clone();
    let mut partial_residuals = Vec::with_capacity(basis.len() + 1);
    partial_residuals.push(norm_f);
    for b in &basis {
        let c = op.inner(f, b)?;
        coefficients.push(c);
        residual.axpy(-c, b.values(), 1.0);
        let r = GridFunction::new(*op.grid(), residual.clone())?;
        partial_residuals.push(op.norm_mixed(&r)?);
    }
    Ok(Expansion {
        coefficients,
        partial_residuals,
        norm_f,
    })
}

/// Block-diagonal helper for degenerate test spectra: `diag(m, m)`.
pub fn block_diagonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    out.view_mut((n, n), (n, n)).copy_from(m);
    out
}
