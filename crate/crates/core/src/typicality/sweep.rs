use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{invariant_density, DEFAULT_BINS, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::Result;
use crate::grid::ParamGrid;
use crate::maps::FamilyDescriptor;
use crate::output::{csv_preamble, fmt17};

use super::{
    birkhoff_statistic, empirical_measure, kolmogorov_distance, row_rng, source_orbit, OrbitSource,
    TestInterval,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub burn_in: usize,
    pub bins: usize,
    pub threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Seeds the dither and random starting points, one stream per row.
    pub seed: u64,
    pub test_intervals: Vec<TestInterval>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 1_000_000,
            burn_in: 1000,
            bins: DEFAULT_BINS,
            threshold: 0.01,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            test_intervals: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalityRow {
    pub param: f64,
    pub n_iterations: usize,
    /// `None` when the row failed before a distance was available.
    pub kolmogorov_distance: Option<f64>,
    pub pass: bool,
    /// `F_n` for each configured test interval.
    pub birkhoff: Vec<f64>,
    pub density_sup: Option<f64>,
    /// The starting point sat on a breakpoint.
    pub on_breakpoint: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub passed: usize,
    pub failed_rows: usize,
    pub pass_fraction: f64,
    pub worst_distance: Option<f64>,
    /// `max_a F_n(a) / |B|` per test interval, the smallest `C` consistent
    /// with the sweep.
    pub empirical_c: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub rows: Vec<TypicalityRow>,
    pub summary: SweepSummary,
}

impl TypicalityReport {
    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = csv_preamble(meta);
        out.push_str("param,n,kolmogorov_distance,pass,on_breakpoint,density_sup");
        for i in 0..self.summary.empirical_c.len() {
            out.push_str(&format!(",F_B{}", i + 1));
        }
        out.push_str(",error\n");
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                fmt17(r.param),
                r.n_iterations,
                opt(r.kolmogorov_distance),
                r.pass,
                r.on_breakpoint,
                opt(r.density_sup)
            ));
            for i in 0..self.summary.empirical_c.len() {
                out.push(',');
                out.push_str(&opt(r.birkhoff.get(i).copied()));
            }
            out.push(',');
            if let Some(e) = &r.error {
                out.push('"');
                out.push_str(&e.replace('"', "'"));
                out.push('"');
            }
            out.push('\n');
        }
        out
    }
}

fn run_row(
    family: &FamilyDescriptor,
    source: &OrbitSource,
    cfg: &SweepConfig,
    index: usize,
    a: f64,
) -> TypicalityRow {
    let mut row = TypicalityRow {
        param: a,
        n_iterations: cfg.n,
        kolmogorov_distance: None,
        pass: false,
        birkhoff: Vec::new(),
        density_sup: None,
        on_breakpoint: false,
        error: None,
    };
    let res: Result<()> = (|| {
        let snap = family.snapshot(a)?;
        let density = invariant_density(&snap, cfg.bins, cfg.tol, cfg.max_iter)?;
        row.density_sup = Some(density.bounds_on_support().1);
        let mut rng = row_rng(cfg.seed, index as u64);
        let (points, flagged) = source_orbit(family, a, source, cfg.n, &mut rng)?;
        row.on_breakpoint = flagged;
        let emp = empirical_measure(&points, cfg.burn_in)?;
        let d = kolmogorov_distance(&emp, &density);
        row.kolmogorov_distance = Some(d);
        row.pass = d <= cfg.threshold;
        row.birkhoff = cfg
            .test_intervals
            .iter()
            .map(|b| birkhoff_statistic(&points, b, snap.domain, cfg.n))
            .collect::<Result<_>>()?;
        Ok(())
    })();
    if let Err(e) = res {
        row.pass = false;
        row.error = Some(e.to_string());
    }
    row
}

/// Runs every grid parameter, in parallel, and assembles rows in parameter
/// order. Failures at one parameter become failed rows.
pub fn parameter_sweep(
    family: &FamilyDescriptor,
    source: &OrbitSource,
    grid: &ParamGrid,
    cfg: &SweepConfig,
) -> Result<TypicalityReport> {
    if let OrbitSource::Curve { curve } = source {
        curve.validate()?;
    }
    let params = grid.params(family.param_interval)?;
    let rows: Vec<TypicalityRow> = params
        .par_iter()
        .enumerate()
        .map(|(i, &a)| run_row(family, source, cfg, i, a))
        .collect();

    let passed = rows.iter().filter(|r| r.pass).count();
    let worst_distance = rows
        .iter()
        .filter_map(|r| r.kolmogorov_distance)
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |m| m.max(d)))
        });
    let empirical_c = cfg
        .test_intervals
        .iter()
        .enumerate()
        .map(|(i, b)| {
            rows.iter()
                .filter_map(|r| {
                    let len = family.snapshot(r.param).ok()?.domain;
                    Some(r.birkhoff.get(i)? * len.len() / b.length(len))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let summary = SweepSummary {
        rows: rows.len(),
        passed,
        failed_rows: rows.iter().filter(|r| r.error.is_some()).count(),
        pass_fraction: if rows.is_empty() {
            0.0
        } else {
            passed as f64 / rows.len() as f64
        },
        worst_distance,
        empirical_c,
        seed: cfg.seed,
    };
    Ok(TypicalityReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ParamCurve;
    use crate::maps::{build_family_with, FamilySpec, SamplingConfig};

    fn fast() -> SamplingConfig {
        SamplingConfig {
            param_points: 51,
            x_points: 9,
        }
    }

    fn small(n: usize) -> SweepConfig {
        SweepConfig {
            n,
            burn_in: 100,
            bins: 512,
            threshold: 0.02,
            seed: 42,
            test_intervals: vec![TestInterval::from_bounds(0.4, 0.5).unwrap()],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn markov_distinguished_orbits() {
        let f = build_family_with(&FamilySpec::markov_identity(0.1, 0.9), &fast()).unwrap();
        let src = OrbitSource::Curve {
            curve: ParamCurve::Affine {
                offset: 0.7,
                rate: -0.7,
            },
        };
        let r = parameter_sweep(
            &f,
            &src,
            &ParamGrid::Random { points: 6, seed: 1 },
            &small(100_000),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 6);
        assert!(r.rows.windows(2).all(|w| w[0].param <= w[1].param));
        assert!(r.summary.pass_fraction >= 5.0 / 6.0, "{:?}", r.summary);
        assert!(r.summary.empirical_c[0] < 1.5);
    }

    #[test]
    fn beta_reciprocal_freezes() {
        let f = build_family_with(&FamilySpec::beta_mod_one(1.5, 2.9), &fast()).unwrap();
        let src = OrbitSource::Curve {
            curve: ParamCurve::Reciprocal { numerator: 1.0 },
        };
        let r = parameter_sweep(&f, &src, &ParamGrid::Uniform { points: 4 }, &small(2000)).unwrap();
        for row in &r.rows {
            assert!(!row.pass);
            assert!(row.on_breakpoint);
            assert!(row.kolmogorov_distance.unwrap() > 0.99);
        }
        assert_eq!(r.summary.pass_fraction, 0.0);
    }

    #[test]
    fn empty_orbit_rows() {
        let f = build_family_with(&FamilySpec::markov_identity(0.1, 0.9), &fast()).unwrap();
        let cfg = SweepConfig {
            n: 0,
            burn_in: 0,
            ..small(0)
        };
        let r = parameter_sweep(
            &f,
            &OrbitSource::Random,
            &ParamGrid::List { params: vec![0.5] },
            &cfg,
        )
        .unwrap();
        assert_eq!(
            r.rows[0].error.as_deref(),
            Some("empty orbit after burn-in")
        );
        assert_eq!(r.summary.failed_rows, 1);
        let csv = r.to_csv(&[]);
        assert!(csv
            .lines()
            .nth(1)
            .unwrap()
            .ends_with("\"empty orbit after burn-in\""));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let f = build_family_with(&FamilySpec::beta_mod_one(1.5, 2.9), &fast()).unwrap();
        let cfg = small(20_000);
        let grid = ParamGrid::Random { points: 5, seed: 9 };
        let par = parameter_sweep(&f, &OrbitSource::Random, &grid, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let ser = pool.install(|| parameter_sweep(&f, &OrbitSource::Random, &grid, &cfg).unwrap());
        assert_eq!(par.to_csv(&[]), ser.to_csv(&[]));
    }
}
