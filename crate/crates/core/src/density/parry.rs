use crate::error::{Error, Result};
use crate::interval::Interval;

use super::DensityEstimate;

/// Terms with `β^{-n}` below this are dropped.
const TAIL: f64 = 1e-14;
/// Orbit points this close to an integer are taken to land on it.
const SNAP: f64 = 1e-12;

/// Closed-form invariant density of `x ↦ β x mod 1`,
/// `h(x) ∝ Σ_{n≥0} β^{-n} 1[x < T^n(1)]`, averaged exactly over each bin.
pub fn parry_density_oracle(beta: f64, bins: usize) -> Result<DensityEstimate> {
    if bins < 2 {
        return Err(Error::BinsTooSmall(bins));
    }
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::InvalidSlopes(format!("beta = {beta} must exceed 1")));
    }
    // (weight, T^n(1)) pairs; T^0(1) = 1.
    let mut terms = vec![(1.0, 1.0)];
    let (mut t, mut w) = (1.0f64, 1.0f64);
    loop {
        w /= beta;
        if w < TAIL || t == 0.0 {
            break;
        }
        let y = beta * t;
        let r = y - y.round();
        t = if r.abs() <= SNAP { 0.0 } else { y - y.floor() };
        terms.push((w, t));
    }
    let width = 1.0 / bins as f64;
    let masses: Vec<f64> = (0..bins)
        .map(|k| {
            let e0 = k as f64 * width;
            terms
                .iter()
                .map(|&(w, t)| w * (t - e0).clamp(0.0, width))
                .sum()
        })
        .collect();
    Ok(DensityEstimate::from_masses(
        Interval::new(0.0, 1.0),
        &masses,
        0.0,
    ))
}
