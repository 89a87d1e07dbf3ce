//! Birkhoff averages along orbits and their distance to the invariant density.

mod sweep;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::ParamCurve;
use crate::density::DensityEstimate;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::{FamilyDescriptor, MapSnapshot};

pub use sweep::{parameter_sweep, SweepConfig, SweepSummary, TypicalityReport, TypicalityRow};

/// Relative size of the noise added after each step of a dithered orbit.
/// Larger than the rounding error, so exact dyadic maps such as `2x mod 1`
/// do not collapse onto 0 in floating point.
pub const DITHER: f64 = 1.0 / (1u64 << 50) as f64;

/// Where the orbit of a sweep row starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitSource {
    /// The distinguished point `X(a)`, iterated without noise.
    Curve { curve: ParamCurve },
    /// A uniform random point of the support, iterated with [`DITHER`].
    Random,
}

/// ChaCha8 stream `stream` of `seed`; rows of a sweep use their index.
pub fn row_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `x_0, …, x_n` from `x0`; with `rng`, each step is perturbed by up to
/// `DITHER · |domain|` and clamped back into the domain.
pub fn orbit_points(
    snap: &MapSnapshot,
    x0: f64,
    n: usize,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Vec<f64> {
    let d = snap.domain;
    let amp = DITHER * d.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut x = x0;
    out.push(x);
    for _ in 0..n {
        x = snap.step(x).value;
        if let Some(r) = rng.as_deref_mut() {
            x = (x + amp * (2.0 * r.gen::<f64>() - 1.0)).clamp(d.lo, d.hi);
        }
        out.push(x);
    }
    out
}

/// Orbit of `source` at `a`. The flag reports a start within `1e-12` of an
/// interior breakpoint, where the right-hand branch is used.
pub fn source_orbit(
    family: &FamilyDescriptor,
    a: f64,
    source: &OrbitSource,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, bool)> {
    let snap = family.snapshot(a)?;
    match source {
        OrbitSource::Curve { curve } => {
            let x0 = curve.value(a);
            if !snap.domain.contains_with_tol(x0, 1e-12) {
                return Err(Error::DomainViolation {
                    x: x0,
                    lo: snap.domain.lo,
                    hi: snap.domain.hi,
                });
            }
            let x0 = x0.clamp(snap.domain.lo, snap.domain.hi);
            let flagged = snap.near_breakpoint(x0, 1e-12).is_some();
            Ok((orbit_points(&snap, x0, n, None), flagged))
        }
        OrbitSource::Random => {
            let s = snap.support;
            let x0 = s.lo + s.len() * rng.gen::<f64>();
            Ok((orbit_points(&snap, x0, n, Some(rng)), false))
        }
    }
}

/// Empirical distribution of `x_j`, `burn_in < j <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    sorted: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyOrbit);
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalMeasure { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `F(x) = #{x_j <= x} / N`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// `F(x-) = #{x_j < x} / N`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s < x) as f64 / self.len() as f64
    }

    /// Histogram of the sample on `bins` cells of `domain`.
    pub fn histogram(&self, domain: Interval, bins: usize) -> Result<DensityEstimate> {
        if bins < 2 {
            return Err(Error::BinsTooSmall(bins));
        }
        let mut counts = vec![0.0; bins];
        for &x in &self.sorted {
            let t = ((x - domain.lo) / domain.len() * bins as f64).floor();
            counts[(t.max(0.0) as usize).min(bins - 1)] += 1.0;
        }
        Ok(DensityEstimate::from_masses(domain, &counts, 0.0))
    }
}

/// Points `x_j` with `burn_in < j <= n` of an orbit `x_0, …, x_n`.
pub fn empirical_measure(points: &[f64], burn_in: usize) -> Result<EmpiricalMeasure> {
    if points.len() <= burn_in + 1 {
        return Err(Error::EmptyOrbit);
    }
    EmpiricalMeasure::from_samples(points[burn_in + 1..].to_vec())
}

/// `sup |F_emp - F_φ|` over sample points (both one-sided limits) and bin edges.
pub fn kolmogorov_distance(emp: &EmpiricalMeasure, density: &DensityEstimate) -> f64 {
    let table = density.edge_cdf();
    let w = density.bin_width();
    let f_density = |x: f64| -> f64 {
        if x <= density.domain.lo {
            return 0.0;
        }
        if x >= density.domain.hi {
            return 1.0;
        }
        let k = (((x - density.domain.lo) / w).floor() as usize).min(density.bins - 1);
        (table[k] + density.values[k] * (x - density.edge(k))).clamp(0.0, 1.0)
    };
    let n = emp.len() as f64;
    let s = emp.samples();
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < s.len() {
        let v = s[i];
        let mut j = i;
        while j < s.len() && s[j] == v {
            j += 1;
        }
        let f = f_density(v);
        worst = worst
            .max((i as f64 / n - f).abs())
            .max((j as f64 / n - f).abs());
        i = j;
    }
    for (k, &f) in table.iter().enumerate() {
        worst = worst.max((emp.cdf(density.edge(k)) - f).abs());
    }
    worst.min(1.0)
}

/// `(q - r, q + r)` intersected with the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestInterval {
    pub q: f64,
    pub r: f64,
}

impl TestInterval {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "test interval needs r > 0, got q = {q}, r = {r}"
            )));
        }
        Ok(TestInterval { q, r })
    }

    pub fn from_bounds(lo: f64, hi: f64) -> Result<Self> {
        TestInterval::new(0.5 * (lo + hi), 0.5 * (hi - lo))
    }

    /// Membership in `(q - r, q + r) ∩ domain`; a domain endpoint strictly
    /// inside `(q - r, q + r)` belongs to the set.
    pub fn contains(&self, domain: Interval, x: f64) -> bool {
        x > self.q - self.r && x < self.q + self.r && domain.contains(x)
    }

    /// Lebesgue measure of the set, 0 if it misses the domain.
    pub fn length(&self, domain: Interval) -> f64 {
        ((self.q + self.r).min(domain.hi) - (self.q - self.r).max(domain.lo)).max(0.0)
    }
}

/// `#{1 <= j <= n : x_j ∈ B}`.
pub fn birkhoff_count(
    points: &[f64],
    b: &TestInterval,
    domain: Interval,
    n: usize,
) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptyOrbit);
    }
    if n >= points.len() {
        return Err(Error::InvalidArgument(format!(
            "n = {n} exceeds the {} available steps",
            points.len().saturating_sub(1)
        )));
    }
    Ok(points[1..=n]
        .iter()
        .filter(|&&x| b.contains(domain, x))
        .count())
}

/// `F_n = (1/n) #{1 <= j <= n : x_j ∈ B}`.
pub fn birkhoff_statistic(
    points: &[f64],
    b: &TestInterval,
    domain: Interval,
    n: usize,
) -> Result<f64> {
    Ok(birkhoff_count(points, b, domain, n)? as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimsupRow {
    pub n: usize,
    pub f_n: f64,
    /// `C |B| / |domain|`.
    pub bound: f64,
    pub ok: bool,
}

/// Checks `F_n(a) <= C |B|` at each `n` in `n_list`, with `|B|` measured
/// relative to the domain length.
pub fn limsup_check(
    family: &FamilyDescriptor,
    a: f64,
    source: &OrbitSource,
    b: &TestInterval,
    c: f64,
    n_list: &[usize],
    seed: u64,
) -> Result<Vec<LimsupRow>> {
    let n_max = n_list.iter().copied().max().ok_or(Error::EmptyOrbit)?;
    let mut rng = row_rng(seed, 0);
    let (points, _) = source_orbit(family, a, source, n_max, &mut rng)?;
    let domain = family.snapshot(a)?.domain;
    let bound = c * b.length(domain) / domain.len();
    n_list
        .iter()
        .map(|&n| {
            let f_n = birkhoff_statistic(&points, b, domain, n)?;
            Ok(LimsupRow {
                n,
                f_n,
                bound,
                ok: f_n <= bound,
            })
        })
        .collect()
}
