//! One-parameter families `a ↦ T_a` and their frozen snapshots.

pub mod branch;
mod snapshot;
pub mod spec;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

use branch::Branch;
pub use snapshot::{MapSnapshot, DOMAIN_TOL};
pub use spec::{AffinePath, BaseMapSpec, BasePiece, FamilySpec, Homeomorphism};

/// Slack allowed when checking `a` against the parameter interval.
const PARAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    BetaLike,
    SkewTent,
    MarkovExample,
    PiecewiseAffine,
}

/// Grid resolution used to estimate `λ`, `Λ`, `L` and `δ₀` at build time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub param_points: usize,
    pub x_points: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            param_points: 10_000,
            x_points: 64,
        }
    }
}

/// A validated family with its sampled expansion constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDescriptor {
    pub kind: FamilyKind,
    pub param_interval: Interval,
    pub spec: FamilySpec,
    /// `λ ≤ inf |∂_x T_a|`.
    pub lambda_min: f64,
    /// `Λ ≥ sup |∂_x T_a|`.
    pub lambda_max: f64,
    pub lip_const: f64,
    /// Smallest gap between consecutive breakpoints seen on the grid.
    pub delta0: f64,
    /// `sup |∂_a T_a(x)|` over valid grid parameters and `x` in the support.
    pub sup_param_partial: f64,
    /// Fraction of grid parameters whose domain is forward invariant.
    pub valid_fraction: f64,
}

pub fn build_family(spec: &FamilySpec) -> Result<FamilyDescriptor> {
    build_family_with(spec, &SamplingConfig::default())
}

pub fn build_family_with(spec: &FamilySpec, sampling: &SamplingConfig) -> Result<FamilyDescriptor> {
    let iv = spec.param_interval();
    if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.hi > iv.lo) {
        return Err(Error::EmptyParameterInterval {
            lo: iv.lo,
            hi: iv.hi,
        });
    }
    let kind = validate(spec)?;
    let mut fam = FamilyDescriptor {
        kind,
        param_interval: iv,
        spec: spec.clone(),
        lambda_min: 0.0,
        lambda_max: 0.0,
        lip_const: 0.0,
        delta0: 0.0,
        sup_param_partial: 0.0,
        valid_fraction: 0.0,
    };

    let grid = iv.grid(sampling.param_points.max(2));
    let xs = sampling.x_points.max(2);
    let stats: Vec<GridStats> = grid.par_iter().map(|&a| fam.grid_stats(a, xs)).collect();

    let lambda_min = stats
        .iter()
        .map(|s| s.slope_min)
        .fold(f64::INFINITY, f64::min);
    let lambda_max = stats.iter().map(|s| s.slope_max).fold(0.0, f64::max);
    if !(lambda_min > 1.0) {
        let at = stats
            .iter()
            .zip(&grid)
            .find(|(s, _)| !(s.slope_min > 1.0))
            .map(|(_, a)| *a)
            .unwrap_or(iv.lo);
        return Err(Error::InvalidSlopes(format!(
            "inf |T_a'| = {lambda_min} <= 1 (first at a = {at})"
        )));
    }
    let valid: Vec<&GridStats> = stats.iter().filter(|s| s.invariant).collect();
    let pool: Vec<&GridStats> = if valid.is_empty() {
        stats.iter().collect()
    } else {
        valid.clone()
    };
    let lip_estimate = stats
        .iter()
        .map(|s| s.lip)
        .fold(f64::MIN_POSITIVE, f64::max);
    let lip_const = match spec.lip_override() {
        Some(l) if !(l > 0.0) || l < lip_estimate * (1.0 - 1e-9) => {
            return Err(Error::InvalidSpec(format!(
                "lip_const {l} is below the sampled estimate {lip_estimate}"
            )))
        }
        Some(l) => l,
        None => lip_estimate,
    };

    fam.lambda_min = lambda_min;
    fam.lambda_max = lambda_max;
    fam.lip_const = lip_const;
    fam.delta0 = stats
        .iter()
        .map(|s| s.min_gap)
        .fold(f64::INFINITY, f64::min);
    fam.sup_param_partial = pool.iter().map(|s| s.sup_partial).fold(0.0, f64::max);
    fam.valid_fraction = valid.len() as f64 / stats.len() as f64;
    Ok(fam)
}

struct GridStats {
    slope_min: f64,
    slope_max: f64,
    lip: f64,
    min_gap: f64,
    sup_partial: f64,
    invariant: bool,
}

fn validate(spec: &FamilySpec) -> Result<FamilyKind> {
    match spec {
        FamilySpec::Beta {
            param_interval,
            base,
            ..
        } => {
            let bp = &base.breakpoints;
            if bp.len() < 2 || base.pieces.len() != bp.len() - 1 {
                return Err(Error::InvalidSpec(
                    "base map needs breakpoints.len() == pieces.len() + 1 >= 2".into(),
                ));
            }
            if bp[0] != 0.0 || bp.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidSpec(
                    "base breakpoints must start at 0 and increase strictly".into(),
                ));
            }
            if !(param_interval[0] > 0.0) {
                return Err(Error::InvalidSpec(
                    "beta parameters must be positive".into(),
                ));
            }
            let last = *bp.last().unwrap();
            if param_interval[1] > last {
                return Err(Error::InsufficientPieces(format!(
                    "parameter {} needs base pieces up to {}, prefix ends at {last}",
                    param_interval[1], param_interval[1]
                )));
            }
            for (k, p) in base.pieces.iter().enumerate() {
                let w = bp[k + 1] - bp[k];
                let (d0, d1) = (p.slope, p.slope + 2.0 * p.curvature * w);
                if !(d0 > 0.0 && d1 > 0.0) {
                    return Err(Error::NonMonotoneBranch(format!(
                        "base piece {k} must be increasing (T(b_k) = 0, T >= 0)"
                    )));
                }
                let top = p.slope * w + p.curvature * w * w;
                if top > 1.0 + DOMAIN_TOL {
                    return Err(Error::InvalidSpec(format!(
                        "base piece {k} reaches {top} > 1"
                    )));
                }
            }
            Ok(FamilyKind::BetaLike)
        }
        FamilySpec::SkewTent { .. } => Ok(FamilyKind::SkewTent),
        FamilySpec::Markov {
            param_interval, g, ..
        } => {
            if !(param_interval[0] > 0.0 && param_interval[1] < 1.0) {
                return Err(Error::InvalidSpec(
                    "Markov parameters must lie in (0, 1)".into(),
                ));
            }
            let c = g.coefficient();
            if !(c.abs() < 1.0) {
                return Err(Error::NonMonotoneBranch(format!(
                    "g(x) = x + c x (1 - x) is not a homeomorphism for c = {c}"
                )));
            }
            Ok(FamilyKind::MarkovExample)
        }
        FamilySpec::PiecewiseAffine {
            param_interval,
            breakpoints,
            values,
            slopes,
            ..
        } => {
            if breakpoints.len() < 2
                || values.len() != breakpoints.len() - 1
                || slopes.len() != values.len()
            {
                return Err(Error::InvalidSpec(
                    "need breakpoints.len() == values.len() + 1 == slopes.len() + 1".into(),
                ));
            }
            if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidSpec(
                    "breakpoints must increase strictly".into(),
                ));
            }
            for (k, s) in slopes.iter().enumerate() {
                let (s0, s1) = (s.value(param_interval[0]), s.value(param_interval[1]));
                if !(s0 * s1 > 0.0) {
                    return Err(Error::NonMonotoneBranch(format!(
                        "slope of branch {k} changes sign over the parameter interval"
                    )));
                }
            }
            Ok(FamilyKind::PiecewiseAffine)
        }
    }
}

impl FamilyDescriptor {
    fn grid_stats(&self, a: f64, xs: usize) -> GridStats {
        let snap = self.snapshot_unchecked(a);
        let mut lip = 0.0f64;
        let mut sup_partial = 0.0f64;
        for (k, br) in snap.branches.iter().enumerate() {
            let iv = snap.branch_interval(k);
            for x in iv.grid(xs) {
                lip = lip
                    .max(br.second_deriv(x).abs())
                    .max(br.param_partial(x).abs())
                    .max(br.slope_param_partial(x).abs());
                if snap.support.contains_with_tol(x, snap.support_tol) {
                    sup_partial = sup_partial.max(br.param_partial(x).abs());
                }
            }
        }
        for r in self.breakpoint_rates(a) {
            lip = lip.max(r.abs());
        }
        let min_gap = snap
            .breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        GridStats {
            slope_min: snap.slope_min,
            slope_max: snap.slope_max,
            lip,
            min_gap,
            sup_partial,
            invariant: snap.invariant,
        }
    }

    /// `b_k'(a)` for the interior breakpoints.
    fn breakpoint_rates(&self, a: f64) -> Vec<f64> {
        match &self.spec {
            FamilySpec::Beta { base, .. } => base
                .breakpoints
                .iter()
                .filter(|&&b| b > 0.0 && b / a < 1.0)
                .map(|&b| -b / (a * a))
                .collect(),
            // The left end 1 - β(a) is a domain endpoint, the turning point is fixed.
            FamilySpec::SkewTent { beta, .. } => vec![-beta.rate],
            FamilySpec::Markov { g, .. } => {
                let c = g.coefficient();
                let cut = markov_cut(c, a);
                vec![1.0 / (1.0 + c * (1.0 - 2.0 * cut))]
            }
            FamilySpec::PiecewiseAffine { .. } => Vec::new(),
        }
    }

    pub fn contains_param(&self, a: f64) -> bool {
        self.param_interval.contains_with_tol(a, PARAM_TOL)
    }

    pub fn snapshot(&self, a: f64) -> Result<MapSnapshot> {
        if !a.is_finite() || !self.contains_param(a) {
            return Err(Error::ParamOutOfRange {
                a,
                lo: self.param_interval.lo,
                hi: self.param_interval.hi,
            });
        }
        Ok(self.snapshot_unchecked(a.clamp(self.param_interval.lo, self.param_interval.hi)))
    }

    fn snapshot_unchecked(&self, a: f64) -> MapSnapshot {
        match &self.spec {
            FamilySpec::Beta { base, .. } => {
                let mut bps = vec![0.0];
                let mut branches = Vec::new();
                for (k, p) in base.pieces.iter().enumerate() {
                    let b = base.breakpoints[k];
                    if k > 0 {
                        let x = b / a;
                        if x >= 1.0 {
                            break;
                        }
                        bps.push(x);
                    }
                    branches.push(Branch::Scaled {
                        a,
                        b,
                        width: base.breakpoints[k + 1] - b,
                        c1: p.slope,
                        c2: p.curvature,
                    });
                }
                bps.push(1.0);
                MapSnapshot::assemble(a, self.kind, bps, branches, true)
            }
            FamilySpec::SkewTent { alpha, beta, .. } => {
                let (al, be) = (alpha.value(a), beta.value(a));
                let side = |slope: f64, dslope: f64| Branch::Affine {
                    x0: 0.0,
                    y0: 1.0,
                    slope,
                    dx0: 0.0,
                    dy0: 0.0,
                    dslope,
                };
                let invariant = 1.0 / al + 1.0 / be >= 1.0 - 1e-15;
                MapSnapshot::assemble(
                    a,
                    self.kind,
                    vec![1.0 - be, 0.0, 1.0],
                    vec![side(al, alpha.rate), side(-be, -beta.rate)],
                    invariant,
                )
            }
            FamilySpec::Markov { g, .. } => {
                let c = g.coefficient();
                MapSnapshot::assemble(
                    a,
                    self.kind,
                    vec![0.0, markov_cut(c, a), 1.0],
                    vec![
                        Branch::Markov { a, c, upper: false },
                        Branch::Markov { a, c, upper: true },
                    ],
                    true,
                )
            }
            FamilySpec::PiecewiseAffine {
                breakpoints,
                values,
                slopes,
                ..
            } => {
                let branches: Vec<Branch> = values
                    .iter()
                    .zip(slopes)
                    .zip(breakpoints)
                    .map(|((v, s), &b)| Branch::Affine {
                        x0: b,
                        y0: v.value(a),
                        slope: s.value(a),
                        dx0: 0.0,
                        dy0: v.rate,
                        dslope: s.rate,
                    })
                    .collect();
                let dom = Interval::new(breakpoints[0], *breakpoints.last().unwrap());
                let invariant = branches.iter().enumerate().all(|(k, br)| {
                    [breakpoints[k], breakpoints[k + 1]]
                        .iter()
                        .all(|&x| dom.contains_with_tol(br.value(x), DOMAIN_TOL))
                });
                MapSnapshot::assemble(a, self.kind, breakpoints.clone(), branches, invariant)
            }
        }
    }

    /// `∂_a T_a(x)`.
    pub fn param_partial(&self, a: f64, x: f64) -> Result<f64> {
        self.snapshot(a)?.param_partial(x)
    }

    /// Whether the snapshot domain at `a` is forward invariant.
    pub fn is_valid_param(&self, a: f64) -> bool {
        self.contains_param(a) && self.snapshot_unchecked(a).invariant
    }

    pub fn is_unimodal(&self) -> bool {
        self.kind == FamilyKind::SkewTent
    }

    /// `(α, β, α', β')` for skew tent families.
    pub fn skew_slopes(&self, a: f64) -> Option<(f64, f64, f64, f64)> {
        match &self.spec {
            FamilySpec::SkewTent { alpha, beta, .. } => {
                Some((alpha.value(a), beta.value(a), alpha.rate, beta.rate))
            }
            _ => None,
        }
    }
}

/// `g⁻¹(a)`, the cut point of the Markov family.
fn markov_cut(c: f64, a: f64) -> f64 {
    // Same root as the branch inverse with `y = 1` on the lower branch.
    Branch::Markov { a, c, upper: false }.inverse(1.0)
}

impl MapSnapshot {
    /// The interval carrying the dynamics and its detection tolerance.
    pub fn invariant_interval(&self) -> (Interval, f64) {
        (self.support, self.support_tol)
    }
}
