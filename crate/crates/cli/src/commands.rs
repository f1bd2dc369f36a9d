use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use superlidar::correlation::{peak_value, CorrelationCurve};
use superlidar::estimation::{cramer_rao_bound, estimate_range, run_campaign};
use superlidar::fisher::{fisher_lower_bound, grid_scan, FisherGrid, GridCell, GridMethod, Prefactor};
use superlidar::fitkit::{fit_model_fisher, run_fit_pipeline, FitReport};
use superlidar::speckle::{empirical_curve, sample_frames, synthesize_counts, CountMap};
use superlidar::SetupGeometry;

use crate::config::RunConfig;
use crate::exit::CliError;
use crate::validate::{self, VALIDATE_FRAMES};
use crate::{Cli, Command, Format};

pub const SIMULATE_FRAMES: usize = 200_000;

type CmdResult = Result<(), CliError>;

struct Output<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn file(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CmdResult {
        let path = self.dir.join(name);
        let file =
            File::create(&path).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CmdResult {
        let text = serde_json::to_string_pretty(value)?;
        self.file(name, |w| writeln!(w, "{text}"))
    }
}

fn check_pair(n: usize, m: u32) -> CmdResult {
    if n < 2 || m < 2 {
        return Err(CliError::config(format!("(N, m) = ({n}, {m}): both must be >= 2")));
    }
    Ok(())
}

fn geometry(config: &RunConfig) -> Result<SetupGeometry, CliError> {
    let geom = config.setup.to_geometry()?;
    if let Some(warning) = geom.far_field_advisory() {
        eprintln!("warning: {warning}");
    }
    Ok(geom)
}

fn manifest(cli: &Cli, config: &RunConfig, out: &mut Output) -> CmdResult {
    let counts = match &cli.command {
        Command::Estimate { counts } => Some(counts.clone().unwrap_or_else(|| cli.out.join("counts.bin"))),
        _ => None,
    };
    let doc = json!({
        "command": cli.command.name(),
        "config_path": cli.config,
        "output_dir": cli.out,
        "seed": cli.seed,
        "format": cli.format,
        "grid": cli.grid.to_string(),
        "frames": cli.frames,
        "budget": cli.budget,
        "trials": cli.trials,
        "counts_path": counts,
        "config": config,
        "versions": { "superlidar": env!("CARGO_PKG_VERSION") },
    });
    out.json("manifest.json", &doc)
}

pub fn run(cli: &Cli) -> CmdResult {
    let config = RunConfig::load(cli.config.as_deref())?;
    let mut out = Output::new(&cli.out)?;
    manifest(cli, &config, &mut out)?;
    match &cli.command {
        Command::Correlation => correlation(cli, &config, &mut out)?,
        Command::FisherGrid => fisher_grid(cli, &mut out)?,
        Command::LowerBoundCheck => lower_bound_check(cli, &mut out)?,
        Command::FitPipeline => fit_pipeline(cli, &mut out)?,
        Command::Simulate => simulate(cli, &config, &mut out)?,
        Command::Estimate { counts } => estimate(cli, &config, counts.as_deref(), &mut out)?,
        Command::Campaign => campaign(cli, &config, &mut out)?,
        Command::Validate => return validate(cli, &mut out),
    }
    for path in &out.written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn correlation(cli: &Cli, config: &RunConfig, out: &mut Output) -> CmdResult {
    let k = config.delta_points;
    let deltas: Vec<f64> = (0..k)
        .map(|i| -2.0 * PI + 4.0 * PI * i as f64 / (k - 1) as f64)
        .collect();
    let mut curves = Vec::new();
    for &(n, m) in &config.curves {
        check_pair(n, m)?;
        let curve = CorrelationCurve::analytic_over_delta(n, m, 0.0, &deltas);
        println!("N = {n}, m = {m}: peak {:.6}", peak_value(n, m));
        curves.push(curve);
    }
    match cli.format {
        Format::Csv => {
            for c in &curves {
                out.file(&format!("correlation_N{}_m{}.csv", c.n_sources, c.order), |w| {
                    c.write_csv(w)
                })?;
            }
        }
        Format::Json => {
            let doc: Vec<_> = curves
                .iter()
                .map(|c| {
                    json!({
                        "n_sources": c.n_sources,
                        "order": c.order,
                        "peak": peak_value(c.n_sources, c.order),
                        "delta": deltas,
                        "value": c.values().collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.json("correlation.json", &doc)?;
        }
    }
    Ok(())
}

fn grid_summary(grid: &FisherGrid) -> serde_json::Value {
    let cell = |c: GridCell| json!({ "n": c.n, "m": c.m, "reduced_value": c.reduced_value });
    json!({
        "method": grid.method,
        "n_range": [grid.n_range.0, grid.n_range.1],
        "m_range": [grid.m_range.0, grid.m_range.1],
        "cells": grid.len(),
        "min": cell(grid.argmin()),
        "max": cell(grid.argmax()),
        "max_min_ratio": grid.max_min_ratio(),
        "exceeds_default_range": grid.exceeds_default_range(),
    })
}

fn fisher_grid(cli: &Cli, out: &mut Output) -> CmdResult {
    let grid = grid_scan(cli.grid.n_range(), cli.grid.m_range(), &GridMethod::Integral)?;
    match cli.format {
        Format::Csv => out.file("fisher_grid.csv", |w| grid.write_csv(w))?,
        Format::Json => out.json("fisher_grid.json", &grid.to_json())?,
    }
    let summary = grid_summary(&grid);
    let (min, max) = (grid.argmin(), grid.argmax());
    println!(
        "{} cells; min at (N, m) = ({}, {}), max at ({}, {}), max/min = {:.3}",
        grid.len(),
        min.n,
        min.m,
        max.n,
        max.m,
        grid.max_min_ratio()
    );
    out.json("fisher_grid_summary.json", &summary)
}

#[derive(Serialize)]
struct BoundRow {
    n: usize,
    m: u32,
    integral: f64,
    lower_bound: f64,
    rel_diff: f64,
}

fn in_default_range(n: usize, m: u32) -> bool {
    (2..=20).contains(&n) && (2..=20).contains(&m)
}

fn lower_bound_check(cli: &Cli, out: &mut Output) -> CmdResult {
    let grid = grid_scan(cli.grid.n_range(), cli.grid.m_range(), &GridMethod::Integral)?;
    let unit = Prefactor::unit();
    let mut rows = Vec::new();
    for c in grid.cells() {
        let lb = fisher_lower_bound(c.n, c.m, &unit)?.reduced;
        rows.push(BoundRow {
            n: c.n,
            m: c.m,
            integral: c.reduced_value,
            lower_bound: lb,
            rel_diff: (c.reduced_value - lb) / c.reduced_value,
        });
    }
    // N = 2 is exact; quadrature-level slack.
    let violates = |r: &BoundRow| r.lower_bound > r.integral * (1.0 + 1e-9);
    let inside: Vec<[usize; 2]> = rows
        .iter()
        .filter(|r| in_default_range(r.n, r.m) && violates(r))
        .map(|r| [r.n, r.m as usize])
        .collect();
    let outside: Vec<[usize; 2]> = rows
        .iter()
        .filter(|r| !in_default_range(r.n, r.m) && violates(r))
        .map(|r| [r.n, r.m as usize])
        .collect();
    let envelope: Vec<f64> = rows
        .iter()
        .filter(|r| r.n >= 4 && in_default_range(r.n, r.m))
        .map(|r| r.rel_diff)
        .collect();
    let env_lo = envelope.iter().copied().fold(f64::INFINITY, f64::min);
    let env_hi = envelope.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let envelope_ok = envelope.is_empty() || (env_lo > 0.0 && env_hi < 0.09);
    let pass = inside.is_empty() && envelope_ok;

    match cli.format {
        Format::Csv => out.file("lower_bound_check.csv", |w| {
            writeln!(w, "N,m,integral,lower_bound,rel_diff")?;
            for r in &rows {
                writeln!(w, "{},{},{},{},{}", r.n, r.m, r.integral, r.lower_bound, r.rel_diff)?;
            }
            Ok(())
        })?,
        Format::Json => out.json("lower_bound_check.json", &rows)?,
    }
    let summary = json!({
        "grid": cli.grid.to_string(),
        "ordering_violations": inside,
        "ordering_violations_outside_default_range": outside,
        "envelope_n_ge_4": if envelope.is_empty() { serde_json::Value::Null } else { json!([env_lo, env_hi]) },
        "pass": pass,
    });
    out.json("lower_bound_summary.json", &summary)?;
    if !outside.is_empty() {
        eprintln!("note: lower bound exceeds the integral outside N, m in 2..20 at {outside:?}");
    }
    println!(
        "ordering violations: {}; N >= 4 relative gap in [{env_lo:.4}, {env_hi:.4}]",
        inside.len()
    );
    if pass {
        Ok(())
    } else {
        let mut failed = Vec::new();
        if !inside.is_empty() {
            failed.push("bound_ordering".to_string());
        }
        if !envelope_ok {
            failed.push("bound_envelope".to_string());
        }
        Err(CliError::Check(failed))
    }
}

fn fit_pipeline(cli: &Cli, out: &mut Output) -> CmdResult {
    let (grid, report) = run_fit_pipeline(cli.grid.n_range(), cli.grid.m_range())?;
    let table = report.table();
    let unit = Prefactor::unit();
    let mut worst = (0.0f64, 0usize, 0u32);
    for c in grid.cells().filter(|c| c.n >= 4) {
        let rel = ((c.reduced_value - fit_model_fisher(c.n, c.m, &table, &unit).reduced) / c.reduced_value).abs();
        if rel > worst.0 {
            worst = (rel, c.n, c.m);
        }
    }
    let envelope = json!({ "max_abs_rel_diff_n_ge_4": worst.0, "at": [worst.1, worst.2] });
    match cli.format {
        Format::Csv => {
            out.file("fit_per_n.csv", |w| {
                writeln!(w, "N,a,b,c,residual_norm")?;
                for p in &report.per_n {
                    writeln!(w, "{},{},{},{},{}", p.n, p.a, p.b, p.c, p.residual_norm)?;
                }
                Ok(())
            })?;
            out.file("fit_power_laws.csv", |w| power_law_csv(w, &report))?;
            out.json("fit_envelope.json", &envelope)?;
        }
        Format::Json => out.json("fit_pipeline.json", &json!({ "report": report, "envelope": envelope }))?,
    }
    for (name, fit) in [("a", &report.a), ("b", &report.b), ("c", &report.c)] {
        println!("{name}(N) = {:.4} N^{:.4}", fit.params.p, fit.params.e);
    }
    Ok(())
}

fn power_law_csv(w: &mut dyn Write, report: &FitReport) -> std::io::Result<()> {
    writeln!(
        w,
        "coefficient,prefactor,exponent,prefactor_se,exponent_se,residual_norm"
    )?;
    for (name, fit) in [("a", &report.a), ("b", &report.b), ("c", &report.c)] {
        writeln!(
            w,
            "{name},{},{},{},{},{}",
            fit.params.p,
            fit.params.e,
            fit.covariance[0][0].sqrt(),
            fit.covariance[1][1].sqrt(),
            fit.residual_norm
        )?;
    }
    Ok(())
}

fn simulate(cli: &Cli, config: &RunConfig, out: &mut Output) -> CmdResult {
    let geom = geometry(config)?;
    let frames = cli.frames.unwrap_or(SIMULATE_FRAMES);
    let deltas: Vec<f64> = (0..32).map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / 32.0).collect();
    let batch = sample_frames(geom.source(), frames, cli.seed)?;
    let curve = empirical_curve(&batch, geom.order(), 0.0, &deltas)?;
    drop(batch);
    let counts = synthesize_counts(&geom, cli.budget, cli.seed)?;

    out.file("counts.bin", |w| counts.write_binary(w))?;
    match cli.format {
        Format::Csv => {
            out.file("speckle_curve.csv", |w| curve.write_csv(w))?;
            out.file("counts.csv", |w| counts.write_csv(w))?;
        }
        Format::Json => out.json("speckle_curve.json", &curve)?,
    }
    let summary = json!({
        "n_sources": geom.n_sources(),
        "order": geom.order(),
        "frames": frames,
        "n_pixels": counts.n_pixels(),
        "budget": cli.budget,
        "total_counts": counts.total(),
        "omega1": geom.omega1(),
        "omega2": geom.omega2(),
    });
    out.json("simulate_summary.json", &summary)?;
    println!(
        "{frames} speckle frames; {} counts over {}² pixel pairs",
        counts.total(),
        counts.n_pixels()
    );
    Ok(())
}

fn estimate(cli: &Cli, config: &RunConfig, counts: Option<&Path>, out: &mut Output) -> CmdResult {
    let geom = geometry(config)?;
    let path = counts
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cli.out.join("counts.bin"));
    let file =
        File::open(&path).map_err(|e| CliError::config(format!("cannot open count map {}: {e}", path.display())))?;
    let map = CountMap::read_binary(std::io::BufReader::new(file))?;
    let est = estimate_range(&map, &geom, None)?;
    let crb = cramer_rao_bound(&geom.with_object_distance(est.z2_hat)?, est.scale_hat)?;
    match cli.format {
        Format::Csv => out.file("estimate.csv", |w| {
            writeln!(w, "z2_hat,scale_hat,log_likelihood,iterations,initializer,z2_init,crb")?;
            writeln!(
                w,
                "{},{},{},{},{},{},{crb}",
                est.z2_hat,
                est.scale_hat,
                est.log_likelihood,
                est.iterations,
                serde_json::to_value(est.initializer)?.as_str().unwrap_or_default(),
                est.z2_init
            )
        })?,
        Format::Json => out.json("estimate.json", &json!({ "estimate": est, "crb": crb }))?,
    }
    println!(
        "z2_hat = {:.9} m (sd bound {:.3e} m), beta_hat = {:.4}",
        est.z2_hat,
        crb.sqrt(),
        est.scale_hat
    );
    Ok(())
}

fn campaign(cli: &Cli, config: &RunConfig, out: &mut Output) -> CmdResult {
    let geom = geometry(config)?;
    let report = run_campaign(&geom, cli.budget, cli.trials, cli.seed)?;
    let summary = report.summary_json();
    match cli.format {
        Format::Csv => {
            out.file("campaign.csv", |w| report.write_csv(w))?;
            out.json("campaign_summary.json", &summary)?;
        }
        Format::Json => out.json("campaign.json", &json!({ "summary": summary, "trials": report.trials }))?,
    }
    println!(
        "variance {:.4e} m², CRB {:.4e} m², efficiency {:.3}, bias {:.3e} m, {} failed",
        report.empirical_variance, report.crb, report.efficiency, report.bias, report.n_failed
    );
    Ok(())
}

fn validate(cli: &Cli, out: &mut Output) -> CmdResult {
    let frames = cli.frames.unwrap_or(VALIDATE_FRAMES);
    let report = validate::run(frames, cli.seed, validate::lower_bound);
    out.json("validate.json", &report)?;
    for c in &report.checks {
        println!("{:<4} {:<20} {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.detail);
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Check(report.failed()))
    }
}
