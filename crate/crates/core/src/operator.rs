//! Assembled `L_mu` and the bilinear forms built from it.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::{check_same_grid, component_kernel, gagliardo_seminorm_sq, Grid, GridFunction, SymmetricToeplitz};
use crate::measure::{HypothesisReport, QuadratureNode, Sign, SignedMeasure};
use crate::{Error, Result};

/// Radicands of `norm_mixed` below this are treated as indefinite.
pub const INDEFINITE_TOLERANCE: f64 = -1e-12;

/// One weighted order of the atomized measure with its cached kernel.
#[derive(Debug, Clone)]
pub struct ComponentTerm {
    pub node: QuadratureNode,
    pub kernel: SymmetricToeplitz,
}

/// Dense symmetric matrix of `L_mu` on a grid, with per-order kernels.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    grid: Grid,
    matrix: DMatrix<f64>,
    terms: Vec<ComponentTerm>,
    sbar: f64,
    hypothesis: Option<HypothesisReport>,
}

#[cfg(feature = "parallel")]
fn kernels_for(grid: &Grid, nodes: &[QuadratureNode]) -> Vec<SymmetricToeplitz> {
    use rayon::prelude::*;
    nodes.par_iter().map(|n| component_kernel(grid, n.s)).collect()
}

#[cfg(not(feature = "parallel"))]
fn kernels_for(grid: &Grid, nodes: &[QuadratureNode]) -> Vec<SymmetricToeplitz> {
    nodes.iter().map(|n| component_kernel(grid, n.s)).collect()
}

impl OperatorMatrix {
    /// `sum over nodes of sign * w * A_s`.
    ///
    /// Fails with `HypothesisViolation` unless `force` is set.
    pub fn assemble(m: &SignedMeasure, grid: &Grid, nodes_per_piece: usize, force: bool) -> Result<Self> {
        let hypothesis = match m.validate_hypotheses() {
            Ok(r) => r,
            Err(Error::HypothesisViolation(r)) if force => r,
            Err(e) => return Err(e),
        };
        let nodes = m.atomize(nodes_per_piece);
        let kernels = kernels_for(grid, &nodes);
        let n = grid.n();
        let mut matrix = DMatrix::zeros(n, n);
        // node order fixes the summation order
        for (node, kernel) in nodes.iter().zip(&kernels) {
            kernel.add_scaled_to(node.sign.value() * node.w, &mut matrix);
        }
        let terms = nodes
            .into_iter()
            .zip(kernels)
            .map(|(node, kernel)| ComponentTerm { node, kernel })
            .collect();
        Ok(Self {
            grid: *grid,
            matrix,
            terms,
            sbar: m.sbar(),
            hypothesis: Some(hypothesis),
        })
    }

    /// Wraps an arbitrary symmetric matrix (no measure behind it).
    ///
    /// Form methods then fall back to `h v^T M u` for `inner_plus`.
    pub fn from_matrix(grid: Grid, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != grid.n() || matrix.ncols() != grid.n() {
            return Err(Error::InvalidArgument("matrix shape does not match grid".into()));
        }
        if matrix != matrix.transpose() {
            return Err(Error::InvalidArgument("matrix is not symmetric".into()));
        }
        Ok(Self {
            grid,
            matrix,
            terms: Vec::new(),
            sbar: 1.0,
            hypothesis: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn terms(&self) -> &[ComponentTerm] {
        &self.terms
    }

    pub fn nodes(&self) -> impl Iterator<Item = &QuadratureNode> {
        self.terms.iter().map(|t| &t.node)
    }

    pub fn hypothesis(&self) -> Option<&HypothesisReport> {
        self.hypothesis.as_ref()
    }

    pub fn sbar(&self) -> f64 {
        self.sbar
    }

    /// `true` when all off-diagonal entries are `<= 0`.
    pub fn has_nonpositive_offdiagonal(&self) -> bool {
        max_offdiagonal(&self.matrix) <= 0.0
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u
    }

    fn check(&self, u: &GridFunction, v: &GridFunction) -> Result<()> {
        check_same_grid(u, v)?;
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn partial_form(&self, u: &GridFunction, v: &GridFunction, keep: impl Fn(&QuadratureNode) -> bool) -> f64 {
        let h = self.grid.h();
        self.terms
            .iter()
            .filter(|t| keep(&t.node))
            .map(|t| t.node.w * h * t.kernel.bilinear(u.values(), v.values()))
            .sum()
    }

    /// `<u, v>_+`: the positive-part form.
    pub fn inner_plus(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check(u, v)?;
        if self.terms.is_empty() {
            return Ok(self.grid.h() * v.values().dot(&(&self.matrix * u.values())));
        }
        Ok(self.partial_form(u, v, |n| n.sign == Sign::Plus))
    }

    /// `<u, v>_-`, over negative nodes of order below `sbar`.
    pub fn inner_minus(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check(u, v)?;
        let sbar = self.sbar;
        Ok(self.partial_form(u, v, |n| n.sign == Sign::Minus && n.s < sbar))
    }

    /// `<u, v> = <u, v>_+ - <u, v>_-`.
    pub fn inner(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        Ok(self.inner_plus(u, v)? - self.inner_minus(u, v)?)
    }

    /// `h v^T (M u)` straight from the assembled matrix.
    pub fn matrix_form(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check(u, v)?;
        Ok(self.grid.h() * v.values().dot(&(&self.matrix * u.values())))
    }

    pub fn norm_x(&self, u: &GridFunction) -> Result<f64> {
        Ok(libm::sqrt(self.inner_plus(u, u)?.max(0.0)))
    }

    pub fn norm_mixed(&self, u: &GridFunction) -> Result<f64> {
        let q = self.inner(u, u)?;
        if q < INDEFINITE_TOLERANCE {
            return Err(Error::IndefiniteForm { value: q });
        }
        Ok(libm::sqrt(q.max(0.0)))
    }

    /// Largest ratio `int_{[0,sbar)} [u]_s^2 dmu- / int_{[sbar,1]} [u]_s^2 dmu`
    /// over `samples` random grid functions with entries uniform in `[-1, 1]`.
    ///
    /// A lower bound for `c0 * gamma`.
    pub fn empirical_reabsorption_constant(&self, samples: usize, seed: u64) -> Result<f64> {
        let report = self.hypothesis.ok_or_else(|| Error::InvalidArgument("operator has no measure".into()))?;
        if !report.mu0_ok {
            return Err(Error::HypothesisViolation(report));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.grid.h();
        let mut best = 0.0f64;
        for _ in 0..samples {
            let u = DVector::from_fn(self.grid.n(), |_, _| rng.gen_range(-1.0..=1.0));
            let mut low = 0.0;
            let mut high = 0.0;
            for t in &self.terms {
                let energy = h * t.kernel.bilinear(&u, &u);
                if t.node.s < self.sbar {
                    if t.node.sign == Sign::Minus {
                        low += t.node.w * energy;
                    }
                } else {
                    high += t.node.sign.value() * t.node.w * energy;
                }
            }
            best = best.max(low / high);
        }
        Ok(best)
    }
}

/// Largest off-diagonal entry.
pub fn max_offdiagonal(m: &DMatrix<f64>) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                best = best.max(m[(i, j)]);
            }
        }
    }
    best
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Weight `g*` at which `base - g * delta_order` stops being positive
/// definite on `grid`, by doubling then bisection on the smallest eigenvalue.
///
/// `base` must be positive definite; result has relative resolution `rel_tol`.
pub fn indefiniteness_threshold(base: &SignedMeasure, order: f64, grid: &Grid, rel_tol: f64) -> Result<f64> {
    let base_op = OperatorMatrix::assemble(base, grid, crate::measure::DEFAULT_NODES_PER_PIECE, true)?;
    let a = base_op.matrix;
    if smallest_eigenvalue(&a) <= 0.0 {
        return Err(Error::IndefiniteForm {
            value: smallest_eigenvalue(&a),
        });
    }
    let b = component_kernel(grid, order).to_dense();
    let lambda_min = |g: f64| smallest_eigenvalue(&(&a - &b * g));
    let mut lo = 0.0;
    let mut hi = 1.0;
    while lambda_min(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::NotFound { r_max: hi });
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if lambda_min(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `[u]_{s1}^2 / [u]_{s2}^2` over random grid functions.
pub fn order_comparison_constant(grid: &Grid, s1: f64, s2: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let values = DVector::from_fn(grid.n(), |_, _| rng.gen_range(-1.0..=1.0));
        let u = GridFunction::new(*grid, values).expect("finite samples");
        best = best.max(gagliardo_seminorm_sq(&u, s1) / gagliardo_seminorm_sq(&u, s2));
    }
    best
}
