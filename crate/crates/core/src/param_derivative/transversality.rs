use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::FamilyDescriptor;
use crate::symbolic::C_TOL;

use super::orbit_with_derivative;

/// Samples per branch for `sup |∂_a T|`; exact for affine branches.
const PARTIAL_SAMPLES: usize = 65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub a0: f64,
    #[serde(rename = "Lambda0")]
    pub lambda0: f64,
    /// `min(α, β)` at `a0`.
    pub lambda: f64,
    pub j0_found: Option<usize>,
    /// `D_a T_a^{j0}(0)`, or the largest derivative seen when no `j0` exists.
    pub deriv_at_j0: f64,
    /// `Σ_{i=1}^{m} ∂_a T_a(T^i(0)) / T^i'(1)` with `m = min(p - 1, j_max)`.
    pub nondegeneracy_sum: f64,
    pub terms_summed: usize,
    /// `Λ₀ λ^{-j_max}`, bounding the omitted tail of a non-periodic sum.
    pub tail_bound: f64,
    pub good_map: bool,
    pub turning_periodic: Option<usize>,
    pub j_max: usize,
    /// `D_a T_a^j(0)` for `0 <= j <= j_max`.
    pub derivs: Vec<f64>,
}

pub fn transversality_report(
    family: &FamilyDescriptor,
    a0: f64,
    j_max: usize,
) -> Result<TransversalityReport> {
    let (alpha, beta, _, _) = family.skew_slopes(a0).ok_or(Error::NotUnimodal)?;
    let snap = family.snapshot(a0)?;
    let lambda = alpha.min(beta);
    let lambda0 = snap.sup_param_partial(snap.domain, PARTIAL_SAMPLES) / (lambda - 1.0);
    let orbit = orbit_with_derivative(family, a0, 0.0, 0.0, j_max)?;

    let j0_found =
        (3..=j_max).find(|&j| orbit.is_reliable(j) && orbit.param_derivs[j].abs() > lambda0);
    let deriv_at_j0 = match j0_found {
        Some(j) => orbit.param_derivs[j],
        None => orbit
            .param_derivs
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0),
    };
    let turning_periodic = (1..=j_max).find(|&p| orbit.points[p].abs() <= C_TOL);

    // T^i'(1) = Π_{m=1}^{i} T'(x_m) along x_m = T^m(0).
    let terms = match turning_periodic {
        Some(p) => (p - 1).min(j_max),
        None => j_max,
    };
    let mut sum = 0.0;
    let mut deriv_at_one = 1.0;
    for i in 1..=terms {
        let x = orbit.points[i];
        let step = snap.step(x);
        deriv_at_one *= step.space_deriv;
        sum += step.param_partial / deriv_at_one;
    }
    let good_map = match turning_periodic {
        Some(p) => {
            let mut d = 1.0;
            for m in 1..p {
                d *= snap.step(orbit.points[m]).space_deriv;
            }
            d.abs() * lambda > 2.0
        }
        None => true,
    };
    Ok(TransversalityReport {
        a0,
        lambda0,
        lambda,
        j0_found,
        deriv_at_j0,
        nondegeneracy_sum: sum,
        terms_summed: terms,
        tail_bound: lambda0 * lambda.powi(-(j_max as i32)),
        good_map,
        turning_periodic,
        j_max,
        derivs: orbit.param_derivs,
    })
}

/// `∂_α T^j(0)`, `∂_β T^j(0)` and the reference derivative `T^{j-1}'(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewTentPartials {
    pub j: usize,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub turning_deriv: f64,
}

impl SkewTentPartials {
    /// Both partials carry the sign of `T^{j-1}'(1)`.
    pub fn signs_agree(&self) -> bool {
        let s = self.turning_deriv.signum();
        self.d_alpha.signum() == s && self.d_beta.signum() == s
    }
}

pub fn skew_tent_partials(family: &FamilyDescriptor, a: f64, j: usize) -> Result<SkewTentPartials> {
    if j < 3 {
        return Err(Error::InvalidArgument(format!("need j >= 3, got {j}")));
    }
    Ok(*skew_tent_partials_upto(family, a, j)?.last().unwrap())
}

/// Entries for `j = 3, …, j_max`, treating `α` and `β` in turn as the
/// parameter. Stops with [`Error::TurningPointHit`] if the orbit of 0
/// returns to 0 first.
pub fn skew_tent_partials_upto(
    family: &FamilyDescriptor,
    a: f64,
    j_max: usize,
) -> Result<Vec<SkewTentPartials>> {
    let (alpha, beta, _, _) = family.skew_slopes(a).ok_or(Error::NotUnimodal)?;
    family.snapshot(a)?;
    let slope = |x: f64| if x <= 0.0 { alpha } else { -beta };
    let mut out = Vec::new();
    let (mut x, mut da, mut db, mut turning) = (0.0f64, 0.0, 0.0, 1.0);
    for j in 1..=j_max {
        if j > 1 && x.abs() <= C_TOL {
            return Err(Error::TurningPointHit { step: j - 1 });
        }
        let (pa, pb) = if x <= 0.0 { (x, 0.0) } else { (0.0, -x) };
        da = slope(x) * da + pa;
        db = slope(x) * db + pb;
        if j >= 2 {
            // T^{j-1}'(1) gains the factor at x_{j-1}.
            turning *= slope(x);
        }
        x = if x <= 0.0 {
            1.0 + alpha * x
        } else {
            1.0 - beta * x
        };
        if j >= 3 {
            out.push(SkewTentPartials {
                j,
                d_alpha: da,
                d_beta: db,
                turning_deriv: turning,
            });
        }
    }
    Ok(out)
}
