//! Invariant densities by Ulam's discretisation of the transfer operator.

mod parry;
mod variation;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::MapSnapshot;
use crate::output::{csv_preamble, fmt17};

pub use parry::parry_density_oracle;
pub use variation::{
    density_bounds_and_variation, minimal_tau, support_estimate, DensityBounds, SupportEstimate,
    VariationReport,
};

pub const DEFAULT_BINS: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Row-stochastic transition matrix between `bins` equal cells of `domain`,
/// stored as sparse rows of `(column, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamMatrix {
    pub domain: Interval,
    pub bins: usize,
    pub rows: Vec<Vec<(u32, f64)>>,
}

impl UlamMatrix {
    pub fn edge(&self, k: usize) -> f64 {
        edge(self.domain, self.bins, k)
    }

    /// `v ↦ v P` for a row vector of bin masses.
    pub fn push_forward(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for (row, &m) in self.rows.iter().zip(v) {
            if m == 0.0 {
                continue;
            }
            for &(k, p) in row {
                out[k as usize] += m * p;
            }
        }
        out
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, p)| p).sum()
    }

    /// Dense entry `(i, k)`; meant for tests and small matrices.
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c as usize == k)
            .map_or(0.0, |&(_, p)| p)
    }
}

fn edge(domain: Interval, bins: usize, k: usize) -> f64 {
    if k == bins {
        domain.hi
    } else {
        domain.lo + domain.len() * (k as f64 / bins as f64)
    }
}

/// Bin containing `y`, with `domain.hi` in the last bin.
fn bin_of(domain: Interval, bins: usize, y: f64) -> usize {
    let t = ((y - domain.lo) / domain.len() * bins as f64).floor();
    if t < 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

/// Entry `(i, k)` is the fraction of bin `i` sent into bin `k`, computed
/// from exact preimage lengths through the closed-form branch inverses.
pub fn ulam_matrix(snap: &MapSnapshot, bins: usize) -> Result<UlamMatrix> {
    if bins < 2 {
        return Err(Error::BinsTooSmall(bins));
    }
    if !snap.invariant {
        return Err(Error::InvalidArgument(format!(
            "domain of the map at a = {} is not forward invariant",
            snap.param
        )));
    }
    let domain = snap.domain;
    let rows = (0..bins)
        .into_par_iter()
        .map(|i| ulam_row(snap, domain, bins, i))
        .collect();
    Ok(UlamMatrix { domain, bins, rows })
}

fn ulam_row(snap: &MapSnapshot, domain: Interval, bins: usize, i: usize) -> Vec<(u32, f64)> {
    let cell = Interval::new(edge(domain, bins, i), edge(domain, bins, i + 1));
    let width = cell.len();
    let mut acc: Vec<(u32, f64)> = Vec::new();
    for k in 0..snap.branch_count() {
        let Some(piece) = cell.intersect(&snap.branch_interval(k)) else {
            continue;
        };
        let br = snap.branch(k);
        let y0 = if piece.lo <= snap.branch_interval(k).lo {
            br.left_value(piece.lo)
        } else {
            br.value(piece.lo)
        };
        let y1 = br.value(piece.hi);
        let (ylo, yhi) = (y0.min(y1).max(domain.lo), y0.max(y1).min(domain.hi));
        // Point of `piece` sent to `y`, exact at the image endpoints.
        let x_of = |y: f64| {
            if y <= ylo {
                if y0 <= y1 {
                    piece.lo
                } else {
                    piece.hi
                }
            } else if y >= yhi {
                if y0 <= y1 {
                    piece.hi
                } else {
                    piece.lo
                }
            } else {
                br.inverse(y).clamp(piece.lo, piece.hi)
            }
        };
        let (first, last) = (bin_of(domain, bins, ylo), bin_of(domain, bins, yhi));
        for t in first..=last {
            let e0 = edge(domain, bins, t).max(ylo);
            let e1 = edge(domain, bins, t + 1).min(yhi);
            if e1 <= e0 {
                continue;
            }
            let len = (x_of(e1) - x_of(e0)).abs();
            if len > 0.0 {
                match acc.iter_mut().find(|(c, _)| *c as usize == t) {
                    Some(slot) => slot.1 += len / width,
                    None => acc.push((t as u32, len / width)),
                }
            }
        }
    }
    acc.sort_by_key(|&(c, _)| c);
    acc
}

/// Piecewise-constant density on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub domain: Interval,
    pub bins: usize,
    /// Density value (mass / width) per bin.
    pub values: Vec<f64>,
    pub support: Interval,
    /// Bins with mass above `support_tol`.
    pub support_mask: Vec<bool>,
    pub support_tol: f64,
    pub normalization_residual: f64,
    /// `‖P φ - φ‖₁` in mass units; zero for closed-form densities.
    pub stationarity_residual: f64,
    pub iterations: usize,
}

impl DensityEstimate {
    /// Builds an estimate from bin masses, normalising them to 1.
    pub fn from_masses(domain: Interval, masses: &[f64], support_tol: f64) -> Self {
        let bins = masses.len();
        let total: f64 = masses.iter().sum();
        let w = domain.len() / bins as f64;
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let support_mask: Vec<bool> = masses.iter().map(|&m| m > support_tol).collect();
        let first = support_mask.iter().position(|&b| b).unwrap_or(0);
        let last = support_mask.iter().rposition(|&b| b).unwrap_or(bins - 1);
        DensityEstimate {
            domain,
            bins,
            values: masses.iter().map(|m| m / w).collect(),
            support: Interval::new(edge(domain, bins, first), edge(domain, bins, last + 1)),
            support_mask,
            support_tol,
            normalization_residual: (masses.iter().sum::<f64>() - 1.0).abs(),
            stationarity_residual: 0.0,
            iterations: 0,
        }
    }

    pub fn bin_width(&self) -> f64 {
        self.domain.len() / self.bins as f64
    }

    pub fn edge(&self, k: usize) -> f64 {
        edge(self.domain, self.bins, k)
    }

    pub fn masses(&self) -> Vec<f64> {
        let w = self.bin_width();
        self.values.iter().map(|v| v * w).collect()
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        self.values[bin_of(self.domain, self.bins, x)]
    }

    /// `∫_{-∞}^{x} φ`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.domain.lo {
            return 0.0;
        }
        if x >= self.domain.hi {
            return 1.0;
        }
        let w = self.bin_width();
        let k = bin_of(self.domain, self.bins, x);
        let below: f64 = self.values[..k].iter().sum::<f64>() * w;
        (below + self.values[k] * (x - self.edge(k))).clamp(0.0, 1.0)
    }

    /// Cumulative masses at the bin edges, `len = bins + 1`.
    pub fn edge_cdf(&self) -> Vec<f64> {
        let w = self.bin_width();
        let mut out = Vec::with_capacity(self.bins + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for v in &self.values {
            acc += v * w;
            out.push(acc.min(1.0));
        }
        out
    }

    pub fn l1_distance(&self, other: &DensityEstimate) -> Result<f64> {
        if self.bins != other.bins || self.domain != other.domain {
            return Err(Error::InvalidArgument(
                "densities live on different grids".into(),
            ));
        }
        let w = self.bin_width();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs() * w)
            .sum())
    }

    /// `(min, max)` of `φ` over the bins in `support_mask`.
    pub fn bounds_on_support(&self) -> (f64, f64) {
        self.values
            .iter()
            .zip(&self.support_mask)
            .filter(|(_, &m)| m)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), (&v, _)| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = csv_preamble(meta);
        out.push_str("bin_left,bin_right,value\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt17(self.edge(k)),
                fmt17(self.edge(k + 1)),
                fmt17(*v)
            ));
        }
        out
    }
}

/// Mass below which a bin is treated as empty: well above the `tol`-sized
/// mass that power iteration leaves outside the support.
pub fn support_tolerance(bins: usize, tol: f64) -> f64 {
    (10.0 * f64::EPSILON).max(100.0 * tol) / bins as f64
}

/// Fixed vector of the Ulam matrix by lazy power iteration
/// `v ← (v + v P) / 2` from the uniform vector.
pub fn invariant_density(
    snap: &MapSnapshot,
    bins: usize,
    tol: f64,
    max_iter: usize,
) -> Result<DensityEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let p = ulam_matrix(snap, bins)?;
    let mut v = vec![1.0 / bins as f64; bins];
    for it in 1..=max_iter {
        let pv = p.push_forward(&v);
        let mut next: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| 0.5 * (a + b)).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|m| *m /= total);
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if diff <= tol {
            let residual: f64 = p
                .push_forward(&v)
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .sum();
            let mut est =
                DensityEstimate::from_masses(snap.domain, &v, support_tolerance(bins, tol));
            est.stationarity_residual = residual;
            est.iterations = it;
            return Ok(est);
        }
    }
    Err(Error::NoConvergence(max_iter))
}
