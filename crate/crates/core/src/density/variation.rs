use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::MapSnapshot;
use crate::symbolic::cylinders;

use super::DensityEstimate;

/// Bounds of `φ` on its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBounds {
    pub inf_on_support: f64,
    pub sup: f64,
    /// `max(sup φ, 1 / inf φ)`.
    pub c1_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub param: f64,
    pub tau: usize,
    /// Smallest `τ` with `λ^τ > 3`.
    pub tau_minimal: usize,
    pub lambda: f64,
    /// Shortest cylinder of depth `τ` on the support.
    pub delta_a: f64,
    #[serde(rename = "Cv")]
    pub cv: f64,
    pub empirical_variation: f64,
    pub variation_within_bound: bool,
    /// Window of length `|K| / (2 max(Cv, 1))` where `φ` is largest, in bins.
    pub lower_interval: Interval,
    pub lower_threshold: f64,
    pub lower_interval_min: f64,
    pub lower_bound_ok: bool,
    pub bounds: DensityBounds,
}

pub fn minimal_tau(lambda: f64) -> Option<usize> {
    if !(lambda > 1.0) {
        return None;
    }
    (1..=usize::MAX).find(|&t| lambda.powi(t as i32) > 3.0)
}

/// `C_v = 3 / (δ (λ^τ - 3))`, the variation of `φ` and the window claim: on
/// a support of length `ℓ`, some window of length `ℓ / (2 C_v)` carries
/// `φ >= 1 / (3 C_v ℓ)` (with `C_v` floored at 1).
pub fn density_bounds_and_variation(
    snap: &MapSnapshot,
    density: &DensityEstimate,
    tau: usize,
) -> Result<VariationReport> {
    let lambda = snap.slope_min;
    let power = lambda.powi(tau as i32);
    if tau == 0 || !(power > 3.0) {
        return Err(Error::ExpansionTooWeak(power));
    }
    let tau_minimal = minimal_tau(lambda).ok_or(Error::ExpansionTooWeak(power))?;
    let delta_a = cylinders(snap, tau)?.min_length;
    let cv = 3.0 / (delta_a * (power - 3.0));

    let empirical_variation: f64 = density.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();

    let (inf_on_support, sup) = density.bounds_on_support();
    let bounds = DensityBounds {
        inf_on_support,
        sup,
        c1_estimate: sup.max(1.0 / inf_on_support),
    };

    let ell = density.domain.len();
    let cv_eff = cv.max(1.0);
    let length = ell / (2.0 * cv_eff);
    let threshold = 1.0 / (3.0 * cv_eff * ell);
    // A window of `length` fits inside `m` whole bins.
    let m = ((length / density.bin_width()) * (1.0 - 1e-12))
        .ceil()
        .max(1.0) as usize;
    let m = m.min(density.bins);
    let (best_k, best_min) = (0..=density.bins - m)
        .map(|k| {
            let lo = density.values[k..k + m]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            (k, lo)
        })
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, c| if c.1 > acc.1 { c } else { acc },
        );
    let lo = density.edge(best_k);

    Ok(VariationReport {
        param: snap.param,
        tau,
        tau_minimal,
        lambda,
        delta_a,
        cv,
        empirical_variation,
        variation_within_bound: empirical_variation <= cv,
        lower_interval: Interval::new(lo, (lo + length).min(density.domain.hi)),
        lower_threshold: threshold,
        lower_interval_min: best_min,
        lower_bound_ok: best_min >= threshold,
        bounds,
    })
}

/// Mass hull of a converged density, checked against the closed-form
/// invariant interval of the snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub interval: Interval,
    pub mask: Vec<bool>,
    pub orbit_interval: Interval,
}

/// Fails with [`Error::SupportMismatch`] when an endpoint differs by more
/// than one bin width.
pub fn support_estimate(snap: &MapSnapshot, density: &DensityEstimate) -> Result<SupportEstimate> {
    let (orbit, tol) = snap.invariant_interval();
    // One Ulam step smears an edge bin over up to `ceil(slope_max) + 1` bins.
    let slack = (snap.slope_max.ceil() + 1.0) * density.bin_width() + tol;
    let hull = density.support;
    if (hull.lo - orbit.lo).abs() > slack || (hull.hi - orbit.hi).abs() > slack {
        return Err(Error::SupportMismatch {
            density: (hull.lo, hull.hi),
            orbit: (orbit.lo, orbit.hi),
        });
    }
    Ok(SupportEstimate {
        interval: hull,
        mask: density.support_mask.clone(),
        orbit_interval: orbit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{invariant_density, parry_density_oracle, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::maps::{build_family_with, AffinePath, FamilySpec, SamplingConfig};

    fn fast() -> SamplingConfig {
        SamplingConfig {
            param_points: 101,
            x_points: 9,
        }
    }

    fn snap(spec: &FamilySpec, a: f64) -> MapSnapshot {
        build_family_with(spec, &fast())
            .unwrap()
            .snapshot(a)
            .unwrap()
    }

    #[test]
    fn doubling_constant() {
        let s = snap(&FamilySpec::beta_mod_one(1.1, 3.0), 2.0);
        let d = invariant_density(&s, 1024, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let r = density_bounds_and_variation(&s, &d, 2).unwrap();
        assert_eq!(r.delta_a, 0.25);
        assert_eq!(r.cv, 12.0);
        assert_eq!(r.tau_minimal, 2);
        assert!(r.empirical_variation < 1e-6);
        assert!(r.lower_bound_ok);
        assert!((r.lower_interval.len() - 1.0 / 24.0).abs() < 1e-15);
        assert!((r.bounds.c1_estimate - 1.0).abs() < 1e-8);
        assert_eq!(
            density_bounds_and_variation(&s, &d, 1),
            Err(Error::ExpansionTooWeak(2.0))
        );
    }

    #[test]
    fn golden_mean_gap() {
        let b = (1.0 + 5f64.sqrt()) / 2.0;
        let s = snap(&FamilySpec::beta_mod_one(1.1, 3.0), b);
        let oracle = parry_density_oracle(b, 2048).unwrap();
        let gap = oracle.value_at(0.1) - oracle.value_at(0.9);
        let r = density_bounds_and_variation(&s, &oracle, 3).unwrap();
        assert!((r.empirical_variation - gap).abs() < 1e-12);
        assert!(r.variation_within_bound && r.lower_bound_ok);
        // Ulam adds boundary layers near 0, 1/β and 1 on top of the gap.
        let d = invariant_density(&s, 2048, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let r = density_bounds_and_variation(&s, &d, 3).unwrap();
        assert!(r.empirical_variation >= gap && r.empirical_variation < 2.0 * gap);
        assert!(r.variation_within_bound && r.lower_bound_ok);
        assert_eq!(minimal_tau(b), Some(3));
    }

    #[test]
    fn supports() {
        let s = snap(&FamilySpec::beta_mod_one(1.1, 3.0), 2.5);
        let d = invariant_density(&s, 512, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(
            support_estimate(&s, &d).unwrap().interval,
            Interval::new(0.0, 1.0)
        );

        let t = snap(
            &FamilySpec::skew_tent(
                0.0,
                1.0,
                AffinePath::constant(2.0),
                AffinePath::constant(2.0),
            ),
            0.5,
        );
        let d = invariant_density(&t, 512, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(
            support_estimate(&t, &d).unwrap().interval,
            Interval::new(-1.0, 1.0)
        );

        let m = snap(&FamilySpec::markov_identity(0.2, 0.8), 0.4);
        let d = invariant_density(&m, 512, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(
            support_estimate(&m, &d).unwrap().interval,
            Interval::new(0.0, 1.0)
        );

        // Mass squeezed into the left half disagrees with K(a).
        let mut half = vec![1.0; 256];
        half.extend(vec![0.0; 256]);
        let fake = DensityEstimate::from_masses(Interval::new(0.0, 1.0), &half, 1e-15);
        assert!(matches!(
            support_estimate(&m, &fake),
            Err(Error::SupportMismatch { .. })
        ));
    }
}
