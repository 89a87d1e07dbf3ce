use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::ParamCurve;
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::maps::{FamilyDescriptor, FamilyKind};

use super::{orbit_with_derivative, OrbitRecord};

/// Strict-inequality margin replacing `2L` for skew tents, whose turning
/// point does not move with the parameter.
pub const SKEW_TENT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionOneReport {
    /// Smallest `j` whose derivative clears the threshold on the whole grid,
    /// or the best candidate when none does.
    pub j0: usize,
    pub threshold: f64,
    /// `inf |d_{j0}(a)|` over the grid.
    pub min_abs_deriv: f64,
    /// `max` over grid and `j0 < j <= j_max` of `max(r, 1/r)`, where `r` is
    /// `|d_j| / |∂_x T_a^{j-j0}(x_{j0})|`.
    pub c0_estimate: f64,
    /// `max(0, 1 - min |d_j| / (2 L λ^{j-j0}))` past `j0`.
    pub rho: f64,
    /// Whether `d_j / ∂_x T_a^{j-j0}(x_{j0})` keeps one sign for `j > j0` at
    /// every grid parameter.
    pub sign_constant: bool,
    pub pass: bool,
    pub j_max: usize,
    pub grid_points: usize,
    /// Grid parameters outside the family's validity region, not evaluated.
    pub skipped_params: usize,
    /// Grid parameters whose orbit crossed a discontinuity before `j_max`.
    pub flagged_params: usize,
}

/// `sup |∂_a T_a| / (λ - 1) + 2L`, or `+ κ` for skew tents.
pub fn condition_one_threshold(family: &FamilyDescriptor) -> f64 {
    let base = family.sup_param_partial / (family.lambda_min - 1.0);
    match family.kind {
        FamilyKind::SkewTent => base + SKEW_TENT_MARGIN,
        _ => base + 2.0 * family.lip_const,
    }
}

/// Searches the smallest `j0 <= j_max` with `|d_{j0}(a)| > threshold` at every
/// grid parameter and estimates `C₀` past it.
pub fn check_condition_one(
    family: &FamilyDescriptor,
    x: &ParamCurve,
    j_max: usize,
    grid: &ParamGrid,
) -> Result<ConditionOneReport> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "grid needs at least 2 points".into(),
        ));
    }
    x.validate()?;
    let params = grid.params(family.param_interval)?;
    let valid: Vec<f64> = params
        .iter()
        .copied()
        .filter(|&a| family.is_valid_param(a))
        .collect();
    if valid.is_empty() {
        return Err(Error::InvalidArgument(
            "no grid parameter lies in the family's validity region".into(),
        ));
    }
    let orbits: Vec<OrbitRecord> = valid
        .par_iter()
        .map(|&a| {
            let (v, d) = x.sample(a);
            orbit_with_derivative(family, a, v, d, j_max)
        })
        .collect::<Result<_>>()?;

    let threshold = condition_one_threshold(family);
    // inf over the grid of |d_j|, restricted to reliable entries.
    let inf_at = |j: usize| {
        orbits
            .iter()
            .filter(|o| o.is_reliable(j))
            .map(|o| o.param_derivs[j].abs())
            .fold(f64::INFINITY, f64::min)
    };
    let infs: Vec<f64> = (0..=j_max).map(inf_at).collect();
    let found = infs.iter().position(|&m| m.is_finite() && m > threshold);
    let j0 = found.unwrap_or_else(|| {
        (0..=j_max)
            .filter(|&j| infs[j].is_finite())
            .max_by(|&i, &k| infs[i].total_cmp(&infs[k]))
            .unwrap_or(0)
    });

    let (mut c0, mut rho, mut sign_constant) = (1.0f64, 0.0f64, true);
    let lambda = family.lambda_min;
    for o in &orbits {
        if !o.is_reliable(j0) {
            continue;
        }
        let mut sign = 0.0;
        for j in j0 + 1..=j_max {
            if !o.is_reliable(j) {
                break;
            }
            let expansion = o.space_derivs[j] / o.space_derivs[j0];
            let r = o.param_derivs[j] / expansion;
            if r == 0.0 || !r.is_finite() {
                c0 = f64::INFINITY;
                continue;
            }
            c0 = c0.max(r.abs().max(1.0 / r.abs()));
            if sign == 0.0 {
                sign = r.signum();
            } else if r.signum() != sign {
                sign_constant = false;
            }
            let floor = 2.0 * family.lip_const * lambda.powi((j - j0) as i32);
            rho = rho.max(1.0 - o.param_derivs[j].abs() / floor);
        }
    }
    let min_abs_deriv = infs[j0];
    Ok(ConditionOneReport {
        j0,
        threshold,
        min_abs_deriv,
        c0_estimate: c0,
        rho: rho.max(0.0),
        sign_constant,
        pass: found.is_some() && min_abs_deriv > threshold,
        j_max,
        grid_points: params.len(),
        skipped_params: params.len() - valid.len(),
        flagged_params: orbits
            .iter()
            .filter(|o| o.unreliable_from.is_some())
            .count(),
    })
}
