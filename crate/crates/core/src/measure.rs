//! Signed measures `mu = mu+ - mu-` over the order `s in [0, 1]`.
//!
//! Each side is a list of atoms and piecewise-constant densities. The
//! hypotheses checked by [`SignedMeasure::validate_hypotheses`] are
//!
//! - mu0: `mu+([sbar, 1]) > 0`
//! - mu1: `mu-([sbar, 1]) = 0`
//! - mu2: `mu-([0, sbar)) <= gamma * mu+([sbar, 1])`, reported through `gamma`.

use alloc::format;
use alloc::vec::Vec;

use crate::quadrature::GaussRule;
use crate::{Error, Result};

pub const DEFAULT_NODES_PER_PIECE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureComponent {
    /// Point mass `weight * delta_s`.
    Atom { s: f64, weight: f64 },
    /// `coeff * ds` restricted to `[lo, hi]`.
    Density { lo: f64, hi: f64, coeff: f64 },
}

impl MeasureComponent {
    pub fn atom(s: f64, weight: f64) -> Result<Self> {
        let c = MeasureComponent::Atom { s, weight };
        c.check()?;
        Ok(c)
    }

    pub fn density(lo: f64, hi: f64, coeff: f64) -> Result<Self> {
        let c = MeasureComponent::Density { lo, hi, coeff };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        match *self {
            MeasureComponent::Atom { s, weight } => {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidMeasure(format!("atom location {s} outside [0,1]")));
                }
                if !(weight > 0.0 && weight.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("atom weight {weight} must be positive")));
                }
            }
            MeasureComponent::Density { lo, hi, coeff } => {
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "density interval [{lo},{hi}] must satisfy 0 <= lo < hi <= 1"
                    )));
                }
                if !(coeff >= 0.0 && coeff.is_finite()) {
                    return Err(Error::InvalidMeasure(format!(
                        "density coefficient {coeff} must be nonnegative"
                    )));
                }
            }
        }
        Ok(())
    }

    fn scaled(&self, t: f64) -> Self {
        match *self {
            MeasureComponent::Atom { s, weight } => MeasureComponent::Atom { s, weight: weight * t },
            MeasureComponent::Density { lo, hi, coeff } => MeasureComponent::Density { lo, hi, coeff: coeff * t },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Upper {
    Closed,
    Open,
}

fn mass_with(components: &[MeasureComponent], lo: f64, hi: f64, upper: Upper) -> f64 {
    components
        .iter()
        .map(|c| match *c {
            MeasureComponent::Atom { s, weight } => {
                let inside = s >= lo
                    && match upper {
                        Upper::Closed => s <= hi,
                        Upper::Open => s < hi,
                    };
                if inside {
                    weight
                } else {
                    0.0
                }
            }
            MeasureComponent::Density { lo: a, hi: b, coeff } => {
                let overlap = b.min(hi) - a.max(lo);
                if overlap > 0.0 {
                    coeff * overlap
                } else {
                    0.0
                }
            }
        })
        .sum()
}

/// Mass of `components` on the closed interval `[lo, hi]`.
pub fn mass(components: &[MeasureComponent], lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    mass_with(components, lo, hi, Upper::Closed)
}

/// Mass on the half-open interval `[lo, hi)`.
pub fn mass_half_open(components: &[MeasureComponent], lo: f64, hi: f64) -> f64 {
    mass_with(components, lo, hi, Upper::Open)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    pub mu0_ok: bool,
    pub mu1_ok: bool,
    /// `mu-([0, sbar)) / mu+([sbar, 1])`; infinite when mu0 fails with
    /// negative mass present, zero when there is no negative mass.
    pub gamma: f64,
    /// Largest order carrying positive `mu+` mass at or above `sbar`.
    pub s_sharp: Option<f64>,
}

impl HypothesisReport {
    pub fn ok(&self) -> bool {
        self.mu0_ok && self.mu1_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// One term `sign * w * (-Laplacian)^s` of the atomized measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureNode {
    pub s: f64,
    pub w: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    plus: Vec<MeasureComponent>,
    minus: Vec<MeasureComponent>,
    sbar: f64,
}

impl SignedMeasure {
    pub fn new(plus: Vec<MeasureComponent>, minus: Vec<MeasureComponent>, sbar: f64) -> Result<Self> {
        if !(sbar > 0.0 && sbar <= 1.0) {
            return Err(Error::InvalidMeasure(format!("sbar = {sbar} must lie in (0,1]")));
        }
        if plus.is_empty() && minus.is_empty() {
            return Err(Error::InvalidMeasure("measure has no components".into()));
        }
        for c in plus.iter().chain(&minus) {
            c.check()?;
        }
        Ok(Self { plus, minus, sbar })
    }

    /// `weight * delta_s` as a positive measure.
    pub fn dirac(s: f64, weight: f64, sbar: f64) -> Result<Self> {
        Self::new(alloc::vec![MeasureComponent::atom(s, weight)?], Vec::new(), sbar)
    }

    pub fn plus(&self) -> &[MeasureComponent] {
        &self.plus
    }

    pub fn minus(&self) -> &[MeasureComponent] {
        &self.minus
    }

    pub fn sbar(&self) -> f64 {
        self.sbar
    }

    pub fn is_positive(&self) -> bool {
        mass(&self.minus, 0.0, 1.0) == 0.0
    }

    /// Disjoint union: components of both sides are concatenated.
    pub fn union(&self, other: &SignedMeasure) -> Result<Self> {
        if self.sbar != other.sbar {
            return Err(Error::InvalidMeasure("union of measures with different sbar".into()));
        }
        let mut plus = self.plus.clone();
        plus.extend_from_slice(&other.plus);
        let mut minus = self.minus.clone();
        minus.extend_from_slice(&other.minus);
        Self::new(plus, minus, self.sbar)
    }

    /// Same measure with every negative weight multiplied by `t >= 0`.
    pub fn with_scaled_minus(&self, t: f64) -> Self {
        Self {
            plus: self.plus.clone(),
            minus: self.minus.iter().map(|c| c.scaled(t)).collect(),
            sbar: self.sbar,
        }
    }

    pub fn hypothesis_report(&self) -> HypothesisReport {
        let top = mass(&self.plus, self.sbar, 1.0);
        let mu0_ok = top > 0.0;
        let mu1_ok = mass(&self.minus, self.sbar, 1.0) == 0.0;
        let low_minus = mass_half_open(&self.minus, 0.0, self.sbar);
        let gamma = if low_minus == 0.0 {
            0.0
        } else if mu0_ok {
            low_minus / top
        } else {
            f64::INFINITY
        };
        let s_sharp = if mu0_ok {
            self.plus
                .iter()
                .filter_map(|c| match *c {
                    MeasureComponent::Atom { s, .. } if s >= self.sbar => Some(s),
                    MeasureComponent::Density { hi, coeff, .. } if coeff > 0.0 && hi > self.sbar => Some(hi),
                    _ => None,
                })
                .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
        } else {
            None
        };
        HypothesisReport {
            mu0_ok,
            mu1_ok,
            gamma,
            s_sharp,
        }
    }

    /// Checks mu0 and mu1. The report rides along in the error so callers
    /// that deliberately proceed (counterexample studies) still get it.
    pub fn validate_hypotheses(&self) -> Result<HypothesisReport> {
        let report = self.hypothesis_report();
        if report.ok() {
            Ok(report)
        } else {
            Err(Error::HypothesisViolation(report))
        }
    }

    /// Replace densities by Gauss–Legendre nodes; atoms pass through.
    ///
    /// Density pieces straddling `sbar` are split there so that every node
    /// lies on one side of it. Output: plus nodes then minus nodes, each in
    /// ascending `s` (ties keep input order).
    pub fn atomize(&self, nodes_per_piece: usize) -> Vec<QuadratureNode> {
        assert!(nodes_per_piece >= 1, "nodes_per_piece must be at least 1");
        let rule = GaussRule::new(nodes_per_piece);
        let mut out = atomize_side(&self.plus, Sign::Plus, self.sbar, &rule);
        out.extend(atomize_side(&self.minus, Sign::Minus, self.sbar, &rule));
        out
    }
}

fn atomize_side(components: &[MeasureComponent], sign: Sign, sbar: f64, rule: &GaussRule) -> Vec<QuadratureNode> {
    let mut nodes = Vec::new();
    for c in components {
        match *c {
            MeasureComponent::Atom { s, weight } => nodes.push(QuadratureNode { s, w: weight, sign }),
            MeasureComponent::Density { lo, hi, coeff } => {
                if coeff == 0.0 {
                    continue;
                }
                let pieces: &[(f64, f64)] = if lo < sbar && sbar < hi {
                    &[(lo, sbar), (sbar, hi)]
                } else {
                    &[(lo, hi)]
                };
                for &(a, b) in pieces {
                    for (s, w) in rule.mapped(a, b) {
                        nodes.push(QuadratureNode { s, w: coeff * w, sign });
                    }
                }
            }
        }
    }
    nodes.sort_by(|a, b| a.s.total_cmp(&b.s));
    nodes
}
