use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::FamilyDescriptor;

use super::cylinders;

/// Outcome of matching `P_j(a1)` against `P_j(a2)` by symbolic word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionThreeReport {
    pub a1: f64,
    pub a2: f64,
    pub depth: usize,
    pub count_a1: usize,
    pub count_a2: usize,
    pub matched: usize,
    pub unmatched: usize,
    /// Largest number of `a1` cylinders sent to one `a2` cylinder.
    pub max_multiplicity: usize,
    pub symbolic_ok: bool,
    /// `max dist(T^j_{a1} ω, T^j_{a2} ω') / (a2 - a1)`.
    pub distance_ratio_max: f64,
    /// `max |T^j_{a1} ω| / |T^j_{a2} ω'|`.
    pub size_ratio_max: f64,
    pub distance_ok: bool,
    pub size_ok: bool,
    /// Whether every matched image pair satisfies `T^j_{a1} ω ⊆ T^j_{a2} ω'`.
    pub inclusion_ok: bool,
    pub c2_estimate: f64,
    /// `max{L, 1/δ₀}`, the yardstick for `c2_estimate`.
    pub c2_reference: f64,
}

/// Inclusion slack for images computed at two parameters.
const INCLUSION_TOL: f64 = 1e-12;

/// Builds the report, counting unmatched cylinders instead of failing.
pub fn condition_three_report(
    family: &FamilyDescriptor,
    a1: f64,
    a2: f64,
    depth: usize,
) -> Result<ConditionThreeReport> {
    if a1 > a2 {
        return Err(Error::InvalidArgument(format!(
            "a1 = {a1} exceeds a2 = {a2}"
        )));
    }
    let p1 = cylinders(&family.snapshot(a1)?, depth)?;
    let p2 = cylinders(&family.snapshot(a2)?, depth)?;
    let index: HashMap<&[u32], usize> = p2
        .cylinders
        .iter()
        .enumerate()
        .map(|(i, c)| (c.word.as_slice(), i))
        .collect();

    let mut hits = vec![0usize; p2.cylinders.len()];
    let (mut matched, mut dist_max, mut size_max) = (0, 0.0f64, 0.0f64);
    let mut inclusion_ok = true;
    let da = a2 - a1;
    for c in &p1.cylinders {
        let Some(&i) = index.get(c.word.as_slice()) else {
            continue;
        };
        matched += 1;
        hits[i] += 1;
        let partner = &p2.cylinders[i];
        let gap = c.image.distance(&partner.image);
        let ratio = if gap == 0.0 { 0.0 } else { gap / da };
        dist_max = dist_max.max(ratio);
        size_max = size_max.max(c.image.len() / partner.image.len());
        inclusion_ok &= c.image.is_subset_of(&partner.image, INCLUSION_TOL);
    }
    let c2_reference = family.lip_const.max(1.0 / family.delta0);
    let unmatched = p1.cylinders.len() - matched;
    Ok(ConditionThreeReport {
        a1,
        a2,
        depth,
        count_a1: p1.cylinders.len(),
        count_a2: p2.cylinders.len(),
        matched,
        unmatched,
        max_multiplicity: hits.into_iter().max().unwrap_or(0),
        symbolic_ok: unmatched == 0,
        distance_ratio_max: dist_max,
        size_ratio_max: size_max,
        distance_ok: dist_max <= c2_reference,
        size_ok: size_max <= c2_reference,
        inclusion_ok,
        c2_estimate: dist_max.max(size_max),
        c2_reference,
    })
}

/// As [`condition_three_report`], but an unmatched cylinder is an error.
pub fn check_condition_three(
    family: &FamilyDescriptor,
    a1: f64,
    a2: f64,
    depth: usize,
) -> Result<ConditionThreeReport> {
    let report = condition_three_report(family, a1, a2, depth)?;
    if report.unmatched > 0 {
        return Err(Error::UnmatchedCylinder {
            depth,
            unmatched: report.unmatched,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{build_family_with, AffinePath, FamilySpec, SamplingConfig};

    fn fast() -> SamplingConfig {
        SamplingConfig {
            param_points: 201,
            x_points: 9,
        }
    }

    #[test]
    fn beta_images_nest() {
        let f = build_family_with(&FamilySpec::beta_mod_one(2.1, 2.9), &fast()).unwrap();
        let r = check_condition_three(&f, 2.2, 2.4, 4).unwrap();
        assert_eq!(r.matched, r.count_a1);
        assert!(r.inclusion_ok && r.size_ok);
        assert!(r.size_ratio_max <= 1.0 + 1e-12);
        assert_eq!(r.max_multiplicity, 1);
    }

    #[test]
    fn markov_bijection() {
        let f = build_family_with(&FamilySpec::markov_identity(0.2, 0.8), &fast()).unwrap();
        let r = check_condition_three(&f, 0.3, 0.6, 3).unwrap();
        assert_eq!(r.count_a1, 8);
        assert_eq!(r.count_a2, 8);
        assert_eq!(r.matched, 8);
        assert!(r.c2_estimate <= r.c2_reference);
    }

    #[test]
    fn equal_parameters_match_identically() {
        let f = build_family_with(&FamilySpec::beta_mod_one(2.1, 2.9), &fast()).unwrap();
        let r = check_condition_three(&f, 2.7, 2.7, 5).unwrap();
        assert_eq!(r.matched, r.count_a1);
        assert_eq!(r.distance_ratio_max, 0.0);
    }

    #[test]
    fn combinatorial_change_is_reported() {
        // Decreasing slope: the kneading word drops from RLL... to RLR...
        let f = build_family_with(
            &FamilySpec::skew_tent(
                0.0,
                1.0,
                AffinePath::constant(2.0),
                AffinePath::new(1.6, -0.2),
            ),
            &fast(),
        )
        .unwrap();
        let r = condition_three_report(&f, 0.0, 1.0, 4).unwrap();
        assert!(r.unmatched > 0);
        assert!(!r.symbolic_ok);
        assert_eq!(
            check_condition_three(&f, 0.0, 1.0, 4),
            Err(Error::UnmatchedCylinder {
                depth: 4,
                unmatched: r.unmatched
            })
        );
        assert!(condition_three_report(&f, 0.5, 0.4, 2).is_err());
    }
}
