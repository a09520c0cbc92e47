use std::fmt::Write as _;

use ncp_core::checks::{run_checks, CheckOptions};
use ncp_core::dynamics::{model_from_spec, BuiltinModel, IntegratorTolerances, ModelSpec, TimeLocalModel};
use ncp_core::measure::{
    ncp_grid as compute_grid, nm_estimate, nm_random, nm_sweep, representative_region, CellFlag, MeasureError,
    NmEstimate, NmOptions, RepresentativeRegion,
};
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::output::{json_pretty, sci, Run};
use crate::{CliError, Outcome};

const DEFAULT_RESOLUTION: usize = 100;

fn load_model(cfg: &RunConfig) -> Result<(Option<BuiltinModel>, TimeLocalModel<f64>), CliError> {
    let spec = cfg.model_spec()?;
    match spec.builtin()? {
        Some(b) => Ok((Some(b), b.model())),
        None => Ok((None, model_from_spec(&spec)?)),
    }
}

fn require_builtin(cfg: &RunConfig, command: &str) -> Result<BuiltinModel, CliError> {
    cfg.builtin()?
        .ok_or_else(|| CliError::Config(format!("`{command}` supports built-in models only")))
}

fn nm_options(cfg: &RunConfig) -> Result<NmOptions, CliError> {
    let d = NmOptions::default();
    let opts = NmOptions {
        resolution: cfg.resolution.unwrap_or(d.resolution),
        refine: cfg.refine.unwrap_or(d.refine),
        max_refinements: cfg.max_refinements.unwrap_or(d.max_refinements),
        neg_threshold: cfg.neg_threshold()?,
        tol: cfg.tolerances(d.tol)?,
        ..d
    };
    opts.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(opts)
}

/// Quotes a CSV field when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn ncp_grid(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut run = Run::new("ncp-grid", cfg);
    let (builtin, model) = load_model(cfg)?;
    run.model = Some(model.descriptor().clone());
    let tol = cfg.tolerances(IntegratorTolerances::fine())?;
    let thr = cfg.neg_threshold()?;

    let (t1, dt) = match (cfg.t1, cfg.dt, builtin) {
        (Some(a), Some(b), _) => (a.points(), b.points()),
        (None, None, Some(b)) => {
            let region = representative_region(&b, &tol)?;
            run.warn(format!(
                "no axes given; using the representative region t1 ∈ [{}, {}), dt ∈ (0, {}]",
                region.t1_start, region.t1_end, region.dt_max
            ));
            region.axes(cfg.resolution.unwrap_or(DEFAULT_RESOLUTION))
        }
        (None, None, None) => return Err(CliError::Config("custom models need --t1 and --dt".into())),
        _ => return Err(CliError::Config("give both --t1 and --dt, or neither".into())),
    };

    let grid = compute_grid(&model, &t1, &dt, &tol, thr)?;
    run.stats = grid.stats;
    for (t, msg) in &grid.failures {
        run.warn(format!("integration failed for t1 = {t}: {msg}"));
    }
    let failed = grid.count(CellFlag::Failed);
    run.details = json!({
        "shape": grid.shape(),
        "cells_ok": grid.count(CellFlag::Ok),
        "cells_singular_limit": grid.count(CellFlag::SingularLimit),
        "cells_skipped_guard": grid.count(CellFlag::SkippedGuard),
        "cells_failed": failed,
        "max_ncp": grid.max_value(),
    });

    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("t1,dt,ncp,flag\n");
            for (a, d, v, f) in grid.cells() {
                writeln!(s, "{},{},{},{}", sci(a), sci(d), sci(v), f.as_str()).unwrap();
            }
            s
        }
        Format::Json => json_pretty(&grid),
    };
    run.emit(&body)?;
    Ok(if failed > 0 { Outcome::Degraded(3) } else { Outcome::Ok })
}

fn nm_region(
    cfg: &RunConfig,
    builtin: Option<BuiltinModel>,
    opts: &NmOptions,
) -> Result<Result<RepresentativeRegion, String>, CliError> {
    if let Some(r) = cfg.region_override()? {
        return Ok(Ok(r));
    }
    let Some(b) = builtin else {
        return Err(CliError::Config("custom models need an explicit --region".into()));
    };
    match representative_region(&b, &opts.tol) {
        Ok(r) => Ok(Ok(r)),
        Err(MeasureError::NotApplicable(msg)) => Ok(Err(msg)),
        Err(e) => Err(e.into()),
    }
}

pub fn nm(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut run = Run::new("nm", cfg);
    let (builtin, model) = load_model(cfg)?;
    run.model = Some(model.descriptor().clone());
    let opts = nm_options(cfg)?;

    let (est, random) = match nm_region(cfg, builtin, &opts)? {
        Ok(region) => {
            let est = nm_estimate(&model, &region, &opts)?;
            let random = match cfg.random_samples {
                Some(n) if n > 0 => Some(nm_random(&model, &region, n, cfg.seed.unwrap_or(0), &opts)?),
                _ => None,
            };
            (est, random)
        }
        Err(msg) => {
            run.warn(format!("{msg}; NM = 0"));
            (NmEstimate::markovian(opts.neg_threshold), None)
        }
    };
    if opts.refine && !est.converged {
        run.warn(format!(
            "not converged after {} refinements (last relative change {:.3e})",
            opts.max_refinements,
            est.last_rel_change().unwrap_or(f64::NAN)
        ));
    }
    if est.n_cells_failed > 0 {
        run.warn(format!("{} cells failed to integrate", est.n_cells_failed));
    }
    run.stats = est.stats;
    run.details = json!({ "refinement": est.convergence, "converged": est.converged });

    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => json_pretty(&json!({
            "model": run.model,
            "estimate": est,
            "random": random,
        })),
        Format::Csv => {
            let mut s = String::from("resolution,nm,support_fraction\n");
            for p in &est.convergence {
                writeln!(s, "{},{},{}", p.resolution, sci(p.nm), sci(p.support_fraction)).unwrap();
            }
            s
        }
    };
    run.emit(&body)?;
    Ok(if est.n_cells_failed > 0 {
        Outcome::Degraded(3)
    } else {
        Outcome::Ok
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut run = Run::new("sweep", cfg);
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs --param and --values (or a `sweep` config entry)".into()))?;
    let values = spec.values.values();
    if values.is_empty() {
        return Err(CliError::Config("sweep has no values".into()));
    }
    // The swept parameter may be the only one missing from the base model.
    let base = match require_builtin(cfg, "sweep") {
        Ok(b) => b,
        Err(CliError::Config(_)) if matches!(cfg.model_spec()?, ModelSpec::Builtin { .. }) => {
            let mut c = cfg.clone();
            c.set_params(&[(spec.param.clone(), values[0])])?;
            require_builtin(&c, "sweep")?
        }
        Err(e) => return Err(e),
    };
    // Fail early on a parameter the family does not have.
    base.with_param(&spec.param, values[0])?;
    run.model = Some(base.model::<f64>().descriptor().clone());
    let opts = nm_options(cfg)?;

    let result = nm_sweep(&base, &spec.param, &values, &opts)?;
    for p in &result.points {
        if let Some(e) = &p.error {
            run.warn(format!("{} = {}: {e}", spec.param, p.value));
        }
        if let Some(e) = &p.estimate {
            run.stats.merge(&e.stats);
        }
    }
    run.details = json!({ "diagnostics": result.diagnostics });

    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("param,nm,support_fraction,error\n");
            for p in &result.points {
                let (nm, frac) = p
                    .estimate
                    .as_ref()
                    .map_or((f64::NAN, f64::NAN), |e| (e.nm, e.support_fraction));
                let err = p.error.as_deref().map(csv_field).unwrap_or_default();
                writeln!(s, "{},{},{},{}", sci(p.value), sci(nm), sci(frac), err).unwrap();
            }
            s
        }
        Format::Json => json_pretty(&result),
    };
    run.emit(&body)?;
    Ok(if result.diagnostics.n_failed == result.points.len() {
        Outcome::Degraded(3)
    } else {
        Outcome::Ok
    })
}

pub fn check(cfg: &RunConfig, grid: usize, times: usize) -> Result<Outcome, CliError> {
    let mut run = Run::new("check", cfg);
    let b = require_builtin(cfg, "check")?;
    if grid == 0 || times == 0 {
        return Err(CliError::Config("--grid and --times must be positive".into()));
    }
    let opts = CheckOptions {
        grid,
        times,
        tol: cfg.tolerances(IntegratorTolerances::precise())?,
    };
    let report = run_checks(&b, &opts);
    run.model = Some(report.model.clone());
    run.details = json!({ "passed": report.passed });

    let body = match cfg.format {
        Some(Format::Json) => json_pretty(&report),
        _ => {
            let mut s = String::new();
            for o in &report.outcomes {
                writeln!(
                    s,
                    "{} {} max_deviation={:.3e} tolerance={:.1e} samples={} skipped={}{}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.max_deviation,
                    o.tolerance,
                    o.samples,
                    o.skipped,
                    o.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
                )
                .unwrap();
            }
            s
        }
    };
    run.emit(&body)?;
    Ok(if report.passed {
        Outcome::Ok
    } else {
        Outcome::Degraded(1)
    })
}
