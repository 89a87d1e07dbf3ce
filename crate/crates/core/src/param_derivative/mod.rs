//! Parameter derivatives along orbits, `d_j = T'(x_{j-1}) d_{j-1} + ∂_a T(x_{j-1})`.

mod condition_one;
mod transversality;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{FamilyDescriptor, MapSnapshot, DOMAIN_TOL};
use crate::output::{csv_preamble, fmt17};

pub use condition_one::{
    check_condition_one, condition_one_threshold, ConditionOneReport, SKEW_TENT_MARGIN,
};
pub use transversality::{
    skew_tent_partials, skew_tent_partials_upto, transversality_report, SkewTentPartials,
    TransversalityReport,
};

/// Orbit points this close to a breakpoint are recorded as hits.
pub const GUARD_TOL: f64 = 1e-11;
/// Allowed drift outside an invariant domain before the orbit is rejected.
pub const ESCAPE_TOL: f64 = 1e-9;

/// `x_j(a) = T_a^j(X(a))` with `d_j = D_a x_j(a)` and `∂_x T_a^j(X(a))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub param: f64,
    pub points: Vec<f64>,
    pub param_derivs: Vec<f64>,
    pub space_derivs: Vec<f64>,
    /// Steps `j` whose point `x_j` was within [`GUARD_TOL`] of a breakpoint.
    pub breakpoint_hits: Vec<usize>,
    /// First index whose `d_j` is not a derivative (a discontinuity was
    /// crossed before it); `None` when all are reliable.
    pub unreliable_from: Option<usize>,
}

impl OrbitRecord {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_reliable(&self, j: usize) -> bool {
        self.unreliable_from.map_or(true, |u| j < u)
    }

    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = csv_preamble(meta);
        out.push_str("j,x,param_deriv,space_deriv,near_breakpoint,reliable\n");
        for j in 0..self.points.len() {
            out.push_str(&format!(
                "{j},{},{},{},{},{}\n",
                fmt17(self.points[j]),
                fmt17(self.param_derivs[j]),
                fmt17(self.space_derivs[j]),
                self.breakpoint_hits.binary_search(&j).is_ok(),
                self.is_reliable(j)
            ));
        }
        out
    }
}

pub fn orbit_with_derivative(
    family: &FamilyDescriptor,
    a: f64,
    x_value: f64,
    x_deriv: f64,
    n: usize,
) -> Result<OrbitRecord> {
    let snap = family.snapshot(a)?;
    orbit_on_snapshot(&snap, x_value, x_deriv, n)
}

/// Runs the recursion on a frozen snapshot. On a non-invariant skew tent the
/// orbit follows the affine extension of the branches.
pub fn orbit_on_snapshot(
    snap: &MapSnapshot,
    x_value: f64,
    x_deriv: f64,
    n: usize,
) -> Result<OrbitRecord> {
    if !x_value.is_finite() || !snap.domain.contains_with_tol(x_value, DOMAIN_TOL) {
        return Err(Error::DomainViolation {
            x: x_value,
            lo: snap.domain.lo,
            hi: snap.domain.hi,
        });
    }
    let mut rec = OrbitRecord {
        param: snap.param,
        points: Vec::with_capacity(n + 1),
        param_derivs: Vec::with_capacity(n + 1),
        space_derivs: Vec::with_capacity(n + 1),
        breakpoint_hits: Vec::new(),
        unreliable_from: None,
    };
    let (mut x, mut d, mut s) = (x_value.clamp(snap.domain.lo, snap.domain.hi), x_deriv, 1.0);
    rec.points.push(x);
    rec.param_derivs.push(d);
    rec.space_derivs.push(s);
    for j in 1..=n {
        let step = snap.step(x);
        let next_d = step.space_deriv * d + step.param_partial;
        if let Some(k) = snap.near_breakpoint(x, GUARD_TOL) {
            rec.breakpoint_hits.push(j - 1);
            let left = snap.branch(k - 1);
            let b = snap.breakpoints[k];
            let continuous = (left.value(b) - step.value).abs() <= 1e-12;
            let right = snap.branch(k);
            let d_left = left.deriv(b) * d + left.param_partial(b);
            let d_right = right.deriv(b) * d + right.param_partial(b);
            let agree = (d_left - d_right).abs() <= 1e-9 * d_right.abs().max(1.0);
            if !(continuous && agree) && rec.unreliable_from.is_none() {
                rec.unreliable_from = Some(j);
            }
        }
        let y = step.value;
        if !y.is_finite() || (snap.invariant && !snap.domain.contains_with_tol(y, ESCAPE_TOL)) {
            return Err(Error::DomainEscape { step: j, x: y });
        }
        x = if snap.invariant {
            y.clamp(snap.domain.lo, snap.domain.hi)
        } else {
            y
        };
        d = next_d;
        s *= step.space_deriv;
        rec.points.push(x);
        rec.param_derivs.push(d);
        rec.space_derivs.push(s);
    }
    Ok(rec)
}

/// `max_j |d_j - (x_j(a+h) - x_j(a-h)) / 2h| / max(|d_j|, 1)`.
///
/// The starting point at `a ± h` is `x_value ± h x_deriv`.
pub fn finite_difference_check(
    family: &FamilyDescriptor,
    a: f64,
    x_value: f64,
    x_deriv: f64,
    n: usize,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step h = {h} must be positive"
        )));
    }
    for p in [a - h, a + h] {
        if !family.contains_param(p) {
            return Err(Error::ParamOutOfRange {
                a: p,
                lo: family.param_interval.lo,
                hi: family.param_interval.hi,
            });
        }
    }
    let mid = orbit_with_derivative(family, a, x_value, x_deriv, n)?;
    if n == 0 {
        return Ok(0.0);
    }
    let lo = family.snapshot(a - h)?;
    let hi = family.snapshot(a + h)?;
    let lo_orbit = orbit_on_snapshot(&lo, x_value - h * x_deriv, 0.0, n)?;
    let hi_orbit = orbit_on_snapshot(&hi, x_value + h * x_deriv, 0.0, n)?;
    let mid_snap = family.snapshot(a)?;
    let mut worst = 0.0f64;
    for j in 0..=n {
        if j < n {
            let branches = [
                lo.locate(lo_orbit.points[j]),
                mid_snap.locate(mid.points[j]),
                hi.locate(hi_orbit.points[j]),
            ];
            let near = mid.breakpoint_hits.binary_search(&j).is_ok() && !mid.is_reliable(j + 1);
            if branches[0] != branches[1] || branches[1] != branches[2] || near {
                return Err(Error::CylinderCrossing { step: j + 1 });
            }
        }
        let fd = (hi_orbit.points[j] - lo_orbit.points[j]) / (2.0 * h);
        let d = mid.param_derivs[j];
        worst = worst.max((d - fd).abs() / d.abs().max(1.0));
    }
    Ok(worst)
}

/// Like [`finite_difference_check`], but on a cylinder crossing at step `s`
/// retries with `n = s - 1`. Returns the error and the depth actually checked.
pub fn finite_difference_check_until_crossing(
    family: &FamilyDescriptor,
    a: f64,
    x_value: f64,
    x_deriv: f64,
    n: usize,
    h: f64,
) -> Result<(f64, usize)> {
    let mut n = n;
    loop {
        match finite_difference_check(family, a, x_value, x_deriv, n, h) {
            Ok(e) => return Ok((e, n)),
            Err(Error::CylinderCrossing { step }) if step >= 1 && step - 1 < n => n = step - 1,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{build_family_with, AffinePath, FamilySpec, SamplingConfig};
    use proptest::prelude::*;

    fn fast() -> SamplingConfig {
        SamplingConfig {
            param_points: 201,
            x_points: 9,
        }
    }

    fn symmetric() -> FamilyDescriptor {
        build_family_with(
            &FamilySpec::skew_tent(
                0.0,
                0.5,
                AffinePath::new(2.0, 1.0),
                AffinePath::new(2.0, 1.0),
            ),
            &fast(),
        )
        .unwrap()
    }

    #[test]
    fn first_steps() {
        let beta = build_family_with(&FamilySpec::beta_mod_one(2.1, 2.9), &fast()).unwrap();
        let r = orbit_with_derivative(&beta, 2.5, 1.0, 0.0, 3).unwrap();
        assert_eq!(r.param_derivs[1], 1.0);
        assert_eq!(r.points[1], 0.5);
        let r0 = orbit_with_derivative(&beta, 2.5, 0.3, 0.7, 0).unwrap();
        assert_eq!(r0.param_derivs, vec![0.7]);

        // Seeded at the turning point: x_2 = -1 - a, x_3 = -1 - 3a - a².
        let r = orbit_with_derivative(&symmetric(), 0.0, 0.0, 0.0, 3).unwrap();
        assert_eq!(r.points, vec![0.0, 1.0, -1.0, -1.0]);
        assert_eq!(r.param_derivs[2], -1.0);
        assert_eq!(r.param_derivs[3], -3.0);
        assert_eq!(r.breakpoint_hits, vec![0]);
        assert_eq!(r.unreliable_from, None);
    }

    #[test]
    fn discontinuity_marks_derivatives_unreliable() {
        let beta = build_family_with(&FamilySpec::beta_mod_one(2.1, 2.9), &fast()).unwrap();
        let r = orbit_with_derivative(&beta, 2.5, 0.4, 0.0, 4).unwrap();
        assert_eq!(r.breakpoint_hits[0], 0);
        assert_eq!(r.unreliable_from, Some(1));
        assert!(r.points[1..].iter().all(|&x| x == 0.0));
        assert!(r.is_reliable(0) && !r.is_reliable(3));
    }

    #[test]
    fn escape_from_invariant_domain_is_an_error() {
        let beta = build_family_with(&FamilySpec::beta_mod_one(2.1, 2.9), &fast()).unwrap();
        assert!(matches!(
            orbit_with_derivative(&beta, 2.5, 1.5, 0.0, 2),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn finite_differences() {
        let beta = build_family_with(&FamilySpec::beta_mod_one(2.1, 2.9), &fast()).unwrap();
        assert!(finite_difference_check(&beta, 2.5, 1.0, 0.0, 10, 1e-7).unwrap() <= 1e-5);
        assert_eq!(
            finite_difference_check(&beta, 2.5, 1.0, 0.0, 0, 1e-7).unwrap(),
            0.0
        );
        assert!(finite_difference_check(&symmetric(), 0.1, 1.0, 0.0, 8, 1e-7).unwrap() <= 1e-5);
        assert!(matches!(
            finite_difference_check(&beta, 2.1, 1.0, 0.0, 3, 1e-7),
            Err(Error::ParamOutOfRange { .. })
        ));
        // Sensitivity grows like a^j, so deep orbits change branch.
        let (e, n) =
            finite_difference_check_until_crossing(&beta, 2.5, 1.0, 0.0, 60, 1e-7).unwrap();
        assert!(n < 60 && e <= 1e-5);
        assert!(matches!(
            finite_difference_check(&beta, 2.5, 1.0, 0.0, n + 1, 1e-7),
            Err(Error::CylinderCrossing { .. })
        ));
    }

    #[test]
    fn csv_export() {
        let r = orbit_with_derivative(&symmetric(), 0.0, 0.0, 0.0, 2).unwrap();
        let csv = r.to_csv(&[]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "j,x,param_deriv,space_deriv,near_breakpoint,reliable"
        );
        assert!(lines[1].starts_with("0,0.0000000000000000e0,"));
        assert!(lines[1].ends_with("true,true"));
        assert_eq!(lines.len(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn recursion_matches_differences(t in 0.01f64..0.99, u in 0.0f64..1.0, v in -1.0f64..1.0, which in 0usize..3) {
            let fams = [
                build_family_with(&FamilySpec::beta_mod_one(1.5, 2.9), &fast()).unwrap(),
                build_family_with(
                    &FamilySpec::skew_tent(0.0, 1.0, AffinePath::new(1.3, 0.7), AffinePath::new(1.5, 0.5)),
                    &fast(),
                )
                .unwrap(),
                build_family_with(&FamilySpec::markov_identity(0.2, 0.8), &fast()).unwrap(),
            ];
            let f = &fams[which];
            let a = f.param_interval.lo + t * f.param_interval.len();
            let dom = f.snapshot(a).unwrap().domain;
            let x = dom.lo + (0.05 + 0.9 * u) * dom.len();
            if let Ok((e, _)) = finite_difference_check_until_crossing(f, a, x, v, 20, 1e-7) {
                prop_assert!(e <= 1e-5, "a={a} x={x} err={e}");
            }
        }
    }
}
