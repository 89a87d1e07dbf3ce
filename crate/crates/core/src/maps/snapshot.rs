use crate::error::{Error, Result};
use crate::interval::Interval;

use super::branch::Branch;
use super::FamilyKind;

/// Tolerance for accepting points that drifted just outside the domain.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Iterations of the orbit-closure support estimate beyond the
/// `log(1/ε) / log λ` needed to grow the seed interval to unit size.
const SUPPORT_DEPTH: usize = 60;
const SUPPORT_STABLE_TOL: f64 = 1e-9;
const SUPPORT_SEED: f64 = 1e-4;
const HULL_DEPTH: usize = 10_000;

/// Result of [`MapSnapshot::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Step {
    pub branch: usize,
    pub value: f64,
    pub space_deriv: f64,
    pub param_partial: f64,
}

/// `T_a` frozen at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSnapshot {
    pub param: f64,
    pub kind: FamilyKind,
    /// `b_0 < b_1 < ... < b_p`; the outer two are the domain endpoints.
    pub breakpoints: Vec<f64>,
    pub domain: Interval,
    /// Interval carrying the dynamics (`K(a)` for beta maps).
    pub support: Interval,
    /// Detection tolerance of `support`.
    pub support_tol: f64,
    /// Whether `domain` is forward invariant.
    pub invariant: bool,
    /// Smallest and largest `|∂_x T_a|` over the branches.
    pub slope_min: f64,
    pub slope_max: f64,
    pub(crate) branches: Vec<Branch>,
}

impl MapSnapshot {
    pub(crate) fn assemble(
        param: f64,
        kind: FamilyKind,
        breakpoints: Vec<f64>,
        branches: Vec<Branch>,
        invariant: bool,
    ) -> Self {
        debug_assert_eq!(breakpoints.len(), branches.len() + 1);
        let domain = Interval::new(breakpoints[0], *breakpoints.last().unwrap());
        let (mut slope_min, mut slope_max) = (f64::INFINITY, 0.0f64);
        for (k, br) in branches.iter().enumerate() {
            // Derivatives of every branch shape are monotone in x.
            for x in [breakpoints[k], breakpoints[k + 1]] {
                let s = br.deriv(x).abs();
                slope_min = slope_min.min(s);
                slope_max = slope_max.max(s);
            }
        }
        let mut snap = MapSnapshot {
            param,
            kind,
            breakpoints,
            domain,
            support: domain,
            support_tol: 0.0,
            invariant,
            slope_min,
            slope_max,
            branches,
        };
        if kind == FamilyKind::BetaLike {
            snap.support = snap.orbit_closure_support();
            snap.support_tol = SUPPORT_STABLE_TOL;
        } else if invariant {
            snap.support = snap.attractor_hull();
            snap.support_tol = SUPPORT_STABLE_TOL;
        }
        snap
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn branch(&self, k: usize) -> &Branch {
        &self.branches[k]
    }

    /// Closed interval of branch `k`.
    pub fn branch_interval(&self, k: usize) -> Interval {
        Interval::new(self.breakpoints[k], self.breakpoints[k + 1])
    }

    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    /// Index of the branch containing `x` under the half-open convention
    /// `[b_{k-1}, b_k)`, with the right domain endpoint in the last branch.
    pub fn locate(&self, x: f64) -> usize {
        self.interior_breakpoints().partition_point(|&b| b <= x)
    }

    /// Interior breakpoint within `tol` of `x`, if any.
    pub fn near_breakpoint(&self, x: f64, tol: f64) -> Option<usize> {
        let inner = self.interior_breakpoints();
        let k = inner.partition_point(|&b| b < x);
        [k.checked_sub(1), Some(k)]
            .into_iter()
            .flatten()
            .filter(|&i| i < inner.len())
            .find(|&i| (inner[i] - x).abs() <= tol)
            .map(|i| i + 1)
    }

    fn check_domain(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || !self.domain.contains_with_tol(x, DOMAIN_TOL) {
            return Err(Error::DomainViolation {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        Ok(x.clamp(self.domain.lo, self.domain.hi))
    }

    /// Value of branch `k` at `x`, with `x` pulled into the branch's closure
    /// so that rounding cannot leak into a neighbouring piece's formula.
    pub(crate) fn branch_value(&self, k: usize, x: f64) -> f64 {
        let iv = self.branch_interval(k);
        let br = &self.branches[k];
        let y = if x <= iv.lo {
            br.left_value(iv.lo)
        } else if br.reaches_next_piece(x) {
            0.0
        } else {
            br.value(x.min(iv.hi))
        };
        if self.domain.contains_with_tol(y, DOMAIN_TOL) {
            y.clamp(self.domain.lo, self.domain.hi)
        } else {
            y
        }
    }

    /// One orbit step without domain checks. Points outside the domain use the
    /// formula of the nearest branch, which is the natural extension of a
    /// skew tent beyond its invariant interval.
    pub(crate) fn step(&self, x: f64) -> Step {
        let k = self.locate(x);
        let br = &self.branches[k];
        let y = if self.domain.contains(x) {
            self.branch_value(k, x)
        } else {
            br.value(x)
        };
        Step {
            branch: k,
            value: y,
            space_deriv: br.deriv(x),
            param_partial: br.param_partial(x),
        }
    }

    /// `T_a(x)`, taking the right limit at breakpoints.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let x = self.check_domain(x)?;
        Ok(self.branch_value(self.locate(x), x))
    }

    /// `∂_x T_a(x)` on the interior of a branch.
    pub fn space_derivative(&self, x: f64) -> Result<f64> {
        let x = self.check_domain(x)?;
        if self.interior_breakpoints().contains(&x) {
            return Err(Error::AtBreakpoint { x });
        }
        Ok(self.branches[self.locate(x)].deriv(x))
    }

    /// `∂_a T_a(x)` on the interior of a branch.
    pub fn param_partial(&self, x: f64) -> Result<f64> {
        let x = self.check_domain(x)?;
        if self.interior_breakpoints().contains(&x) {
            return Err(Error::AtBreakpoint { x });
        }
        Ok(self.branches[self.locate(x)].param_partial(x))
    }

    /// Largest `|∂_a T_a|` over `samples` points per branch of `within`.
    pub fn sup_param_partial(&self, within: Interval, samples: usize) -> f64 {
        let samples = samples.max(2);
        let mut sup = 0.0f64;
        for (k, br) in self.branches.iter().enumerate() {
            let Some(iv) = self.branch_interval(k).intersect(&within) else {
                continue;
            };
            for x in iv.grid(samples) {
                sup = sup.max(br.param_partial(x).abs());
            }
        }
        sup
    }

    /// Limit of the nested hulls `J_{k+1} = hull T_a(J_k)` from the domain,
    /// which contains the support of every invariant measure.
    fn attractor_hull(&self) -> Interval {
        let mut j = self.domain;
        for _ in 0..HULL_DEPTH {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..self.branches.len() {
                if let Some(piece) = j.intersect(&self.branch_interval(k)) {
                    for x in [piece.lo, piece.hi] {
                        let y = self.branches[k].value(x);
                        lo = lo.min(y);
                        hi = hi.max(y);
                    }
                }
            }
            let next = Interval::new(lo.max(j.lo), hi.min(j.hi));
            let moved = (next.lo - j.lo).abs().max((next.hi - j.hi).abs());
            j = next;
            if moved <= 0.1 * SUPPORT_STABLE_TOL {
                break;
            }
        }
        j
    }

    /// `K(a) = closure ∪_j T_a^j([0, ε))` for beta maps: the image of an
    /// interval adjacent to 0 is again adjacent to 0, so only the right end
    /// needs tracking.
    fn orbit_closure_support(&self) -> Interval {
        let lo = self.domain.lo;
        let mut right = (lo + SUPPORT_SEED).min(self.domain.hi);
        let mut stable = 0;
        let growth = (1.0 / SUPPORT_SEED).ln() / self.slope_min.ln().max(1e-3);
        let depth = SUPPORT_DEPTH + growth.ceil().min(1e6) as usize;
        for _ in 0..depth {
            let mut next = right;
            for k in 0..self.branches.len() {
                let iv = self.branch_interval(k);
                if iv.lo >= right {
                    break;
                }
                let end = iv.hi.min(right);
                next = next.max(self.branches[k].value(end));
            }
            let next = next.min(self.domain.hi);
            if (next - right).abs() <= SUPPORT_STABLE_TOL {
                stable += 1;
                if stable >= 2 {
                    right = next;
                    break;
                }
            } else {
                stable = 0;
            }
            right = next;
        }
        Interval::new(lo, right)
    }
}
