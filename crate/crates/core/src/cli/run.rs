use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::density::{
    density_bounds_and_variation, invariant_density, minimal_tau, support_estimate,
};
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::maps::{build_family, FamilyDescriptor};
use crate::output::write_atomic;
use crate::param_derivative::{check_condition_one, orbit_with_derivative, transversality_report};
use crate::symbolic::{condition_three_report, kneading_scan};
use crate::typicality::{parameter_sweep, OrbitSource, SweepConfig};

use super::config::{Command, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files written by a run and whether the analysis passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            2
        }
    }
}

/// Exit status for an error: 1 for bad input, 2 for analysis failures.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::Io(_)
        | Error::InvalidSpec(_)
        | Error::InvalidSlopes(_)
        | Error::InvalidArgument(_)
        | Error::EmptyParameterInterval { .. }
        | Error::NonMonotoneBranch(_)
        | Error::InsufficientPieces(_)
        | Error::ParamOutOfRange { .. }
        | Error::DomainViolation { .. }
        | Error::NotUnimodal
        | Error::BinsTooSmall(_)
        | Error::ExpansionTooWeak(_) => 1,
        _ => 2,
    }
}

fn required(v: Option<f64>, field: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config {
        field: field.into(),
        message: "required by this command".into(),
    })
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    command: Command,
    hash: String,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn meta(&self) -> Vec<(&'static str, String)> {
        vec![
            ("tool", "typlab".into()),
            ("version", VERSION.into()),
            ("command", self.command.name().into()),
            ("config_hash", self.hash.clone()),
            ("seed", self.cfg.seed.to_string()),
            ("config", self.cfg.normalized_json()),
        ]
    }

    fn path(&self, name: &str) -> PathBuf {
        Path::new(&self.cfg.out).join(name)
    }

    fn write_csv(&mut self, name: &str, body: String) -> Result<()> {
        let p = self.path(name);
        write_atomic(&p, body.as_bytes())?;
        self.files.push(p);
        Ok(())
    }

    fn write_json(&mut self, name: &str, passed: bool, report: impl Serialize) -> Result<()> {
        let doc = json!({
            "tool": "typlab",
            "version": VERSION,
            "command": self.command.name(),
            "config_hash": self.hash,
            "seed": self.cfg.seed,
            "config": self.cfg,
            "pass": passed,
            "report": report,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        let p = self.path(name);
        write_atomic(&p, text.as_bytes())?;
        self.files.push(p);
        Ok(())
    }

    fn grid(&self, fallback: ParamGrid) -> ParamGrid {
        if let Some(g) = &self.cfg.grid {
            return g.clone();
        }
        match (fallback, self.cfg.grid_size) {
            (ParamGrid::Uniform { .. }, Some(points)) => ParamGrid::Uniform { points },
            (ParamGrid::Random { seed, .. }, Some(points)) => ParamGrid::Random { points, seed },
            (g, _) => g,
        }
    }
}

/// Runs the configured command and writes its reports into `cfg.out`.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let command = cfg.command.ok_or_else(|| Error::Config {
        field: "command".into(),
        message: "no command given".into(),
    })?;
    let family = build_family(&cfg.family_spec()?)?;
    let mut ctx = Ctx {
        cfg,
        command,
        hash: cfg.hash(),
        files: Vec::new(),
    };
    let (passed, summary) = match command {
        Command::Sweep => sweep(&mut ctx, &family)?,
        Command::Density => density(&mut ctx, &family)?,
        Command::Orbit => orbit(&mut ctx, &family)?,
        Command::Kneading => kneading(&mut ctx, &family)?,
        Command::CheckI => check_i(&mut ctx, &family)?,
        Command::CheckIii => check_iii(&mut ctx, &family)?,
        Command::Transversality => transversality(&mut ctx, &family)?,
    };
    Ok(Outcome {
        files: ctx.files,
        passed,
        summary,
    })
}

fn sweep(ctx: &mut Ctx, family: &FamilyDescriptor) -> Result<(bool, String)> {
    let cfg = ctx.cfg;
    let source = match &cfg.x {
        Some(curve) => OrbitSource::Curve {
            curve: curve.clone(),
        },
        None => OrbitSource::Random,
    };
    let grid = ctx.grid(ParamGrid::Random {
        points: 20,
        seed: cfg.seed,
    });
    let sc = SweepConfig {
        n: cfg.n,
        burn_in: cfg.burn_in,
        bins: cfg.bins,
        threshold: cfg.threshold,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
        test_intervals: cfg.test_intervals.clone(),
    };
    let report = parameter_sweep(family, &source, &grid, &sc)?;
    let s = &report.summary;
    let passed = s.rows > 0 && s.pass_fraction >= cfg.pass_fraction;
    let line = format!(
        "sweep: {}/{} parameters within {} (pass fraction {:.3})",
        s.passed, s.rows, cfg.threshold, s.pass_fraction
    );
    ctx.write_csv("sweep.csv", report.to_csv(&ctx.meta()))?;
    ctx.write_json("sweep.json", passed, &report.summary)?;
    Ok((passed, line))
}

fn density(ctx: &mut Ctx, family: &FamilyDescriptor) -> Result<(bool, String)> {
    let cfg = ctx.cfg;
    let a = required(cfg.a, "a")?;
    let snap = family.snapshot(a)?;
    let est = invariant_density(&snap, cfg.bins, cfg.tol, cfg.max_iter)?;
    let tau = match cfg.tau {
        Some(t) => t,
        None => minimal_tau(snap.slope_min).ok_or(Error::ExpansionTooWeak(snap.slope_min))?,
    };
    let variation = density_bounds_and_variation(&snap, &est, tau)?;
    let support = support_estimate(&snap, &est);
    let claim_ok = !variation.variation_within_bound || variation.lower_bound_ok;
    let passed = support.is_ok() && claim_ok;
    let line = format!(
        "density: a = {a}, {} bins, {} iterations, C1 ~ {:.6}, Cv = {:.6}",
        est.bins, est.iterations, variation.bounds.c1_estimate, variation.cv
    );
    ctx.write_csv("density.csv", est.to_csv(&ctx.meta()))?;
    let report = json!({
        "param": a,
        "bins": est.bins,
        "iterations": est.iterations,
        "normalization_residual": est.normalization_residual,
        "stationarity_residual": est.stationarity_residual,
        "support": est.support,
        "support_check": match &support {
            Ok(s) => json!({"ok": true, "orbit_interval": s.orbit_interval}),
            Err(e) => json!({"ok": false, "error": e.to_string()}),
        },
        "variation": variation,
    });
    ctx.write_json("density.json", passed, report)?;
    Ok((passed, line))
}

fn orbit(ctx: &mut Ctx, family: &FamilyDescriptor) -> Result<(bool, String)> {
    let cfg = ctx.cfg;
    let a = required(cfg.a, "a")?;
    let x = cfg.x.as_ref().ok_or_else(|| Error::Config {
        field: "x".into(),
        message: "required by this command".into(),
    })?;
    let (v, d) = x.sample(a);
    let rec = orbit_with_derivative(family, a, v, d, cfg.j_max)?;
    let line = format!(
        "orbit: {} steps from x = {v}, derivatives reliable up to j = {}",
        cfg.j_max,
        rec.unreliable_from.map_or(cfg.j_max, |u| u - 1)
    );
    ctx.write_csv("orbit.csv", rec.to_csv(&ctx.meta()))?;
    Ok((true, line))
}

fn kneading(ctx: &mut Ctx, family: &FamilyDescriptor) -> Result<(bool, String)> {
    let cfg = ctx.cfg;
    let params = ctx
        .grid(ParamGrid::Uniform { points: 100 })
        .params(family.param_interval)?;
    let scan = kneading_scan(family, &params, cfg.depth)?;
    let mut body = crate::output::csv_preamble(&ctx.meta());
    body.push_str("param,alpha,beta,word,order_to_next\n");
    for (i, (a, w)) in scan.params.iter().zip(&scan.words).enumerate() {
        let (al, be, _, _) = family.skew_slopes(*a).ok_or(Error::NotUnimodal)?;
        let order = scan
            .order
            .get(i)
            .map(|o| format!("{o:?}"))
            .unwrap_or_default();
        body.push_str(&format!(
            "{},{},{},{w},{order}\n",
            crate::output::fmt17(*a),
            crate::output::fmt17(al),
            crate::output::fmt17(be)
        ));
    }
    let violations = scan.violations();
    ctx.write_csv("kneading.csv", body)?;
    Ok((
        violations == 0,
        format!(
            "kneading: {} words of depth {}, {violations} order violations",
            params.len(),
            cfg.depth
        ),
    ))
}

fn check_i(ctx: &mut Ctx, family: &FamilyDescriptor) -> Result<(bool, String)> {
    let cfg = ctx.cfg;
    let x = cfg.x.as_ref().ok_or_else(|| Error::Config {
        field: "x".into(),
        message: "required by this command".into(),
    })?;
    let grid = ctx.grid(ParamGrid::Uniform { points: 200 });
    let r = check_condition_one(family, x, cfg.j_max, &grid)?;
    let line = format!(
        "check-i: j0 = {}, inf |d_j0| = {:.6e}, threshold = {:.6e}, pass = {}",
        r.j0, r.min_abs_deriv, r.threshold, r.pass
    );
    let passed = r.pass;
    ctx.write_json("check_i.json", passed, &r)?;
    Ok((passed, line))
}

fn check_iii(ctx: &mut Ctx, family: &FamilyDescriptor) -> Result<(bool, String)> {
    let cfg = ctx.cfg;
    let a1 = required(cfg.a1, "a1")?;
    let a2 = required(cfg.a2, "a2")?;
    let r = condition_three_report(family, a1, a2, cfg.depth)?;
    let passed = r.unmatched == 0 && r.symbolic_ok && r.inclusion_ok;
    let line = format!(
        "check-iii: depth {}, {} matched, {} unmatched, inclusion {}",
        r.depth, r.matched, r.unmatched, r.inclusion_ok
    );
    ctx.write_json("check_iii.json", passed, &r)?;
    Ok((passed, line))
}

fn transversality(ctx: &mut Ctx, family: &FamilyDescriptor) -> Result<(bool, String)> {
    let cfg = ctx.cfg;
    let a0 = required(cfg.a0.or(cfg.a), "a0")?;
    let r = transversality_report(family, a0, cfg.j_max)?;
    let passed = r.j0_found.is_some();
    let line = format!(
        "transversality: Lambda0 = {}, j0 = {:?}, D_a T^j0(0) = {}",
        r.lambda0, r.j0_found, r.deriv_at_j0
    );
    ctx.write_json("transversality.json", passed, &r)?;
    Ok((passed, line))
}
