use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use fapchan::capacity::{capacity_bounds, capacity_sweep, CapacityQuery, Units};
use fapchan::channel::{fap_pdf_plane, PlanarChannelParams, VdfapParams};
use fapchan::entropy::{entropy_quadrature, vdfap_entropy_2d};
use fapchan::mcsim::{
    build_histogram, sample_planar_exact, sample_vdfap_exact, simulate_fap, DensityGrid, FapSampleSet, Normalization,
    SampleSource, DISPLAY_TRUNCATION, SEED_SPLIT,
};
use fapchan::spectral::{vdfap_cf, vdfap_cf_gradient, vdfap_cf_hessian, vdfap_moments, FreqPoint};
use fapchan::validate::{
    compare_density, ks_radial, ks_two_sample, moment_test, weak_stability_test, FitReport, Thresholds, Verdict,
};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::acceptance;
use crate::args::*;
use crate::output::{emit_grid, json_with_manifest, num, num_opt, nums, render_samples, RunManifest, Sink};

/// Successful runs either pass or report a failed validation (exit 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    ValidationFailed,
}

fn json_sink(out: &Option<PathBuf>) -> Sink {
    Sink { path: out.clone() }
}

pub fn density(a: &DensityArgs) -> Result<Outcome> {
    let u = a.drift.full(a.d, &[0.0])?;
    let params = PlanarChannelParams::new(a.d, u, a.lambda)?;
    let axes = parse_grid(&a.grid)?;
    if axes.len() != a.d {
        bail!("grid has {} axes; the receiver has d = {}", axes.len(), a.d);
    }
    let mut grid = DensityGrid::from_fn(axes, a.normalization.into(), |n| fap_pdf_plane(n, &params))?;
    if a.truncate {
        grid = grid.truncate_below(DISPLAY_TRUNCATION);
    }
    let manifest = RunManifest::new("density", a, 0)?;
    emit_grid(&grid, &Sink { path: a.out.out.clone() }, a.out.format, &manifest)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct CfPoint {
    omega: Vec<Box<RawValue>>,
    value: Box<RawValue>,
    gradient: Vec<Box<RawValue>>,
    hessian: Vec<Vec<Box<RawValue>>>,
    mean: Vec<Box<RawValue>>,
    correlation: Vec<Vec<Box<RawValue>>>,
    second_moment: Box<RawValue>,
}

pub fn cf(a: &CfArgs) -> Result<Outcome> {
    let params = VdfapParams::new(a.drift.vertical(a.d, -1.0)?, a.lambda, a.d)?;
    let manifest = RunManifest::new("cf", a, 0)?;
    if let Some(g) = &a.grid {
        let axes = parse_grid(g)?;
        if axes.len() != a.d {
            bail!("grid has {} axes; the receiver has d = {}", axes.len(), a.d);
        }
        let grid = DensityGrid::from_fn(axes, Normalization::Density, |w| {
            vdfap_cf(&FreqPoint::new(w.to_vec())?, &params)
        })?;
        emit_grid(&grid, &Sink { path: a.out.out.clone() }, a.out.format, &manifest)?;
        return Ok(Outcome::Done);
    }
    let w = FreqPoint::new(parse_list(a.omega.as_deref().context("--omega or --grid is required")?)?)?;
    let m = vdfap_moments(&params);
    let body = CfPoint {
        omega: nums(&w.omega),
        value: num(vdfap_cf(&w, &params)?),
        gradient: nums(&vdfap_cf_gradient(&w, &params)?),
        hessian: vdfap_cf_hessian(&w, &params)?.iter().map(|r| nums(r)).collect(),
        mean: nums(&m.mean),
        correlation: m.correlation.iter().map(|r| nums(r)).collect(),
        second_moment: num(m.second_moment),
    };
    json_sink(&a.out.out).write(&json_with_manifest(&body, &manifest)?, &manifest)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct EntropyOut {
    value: Box<RawValue>,
    units: Units,
    method: &'static str,
    abs_error: Box<RawValue>,
}

pub fn entropy(a: &EntropyArgs) -> Result<Outcome> {
    let params = VdfapParams::new(a.drift.vertical(a.d, -1.0)?, a.lambda, a.d)?;
    let units: Units = a.units.into();
    let closed = a.d == 2 && a.method != EntropyMethod::Quadrature;
    if a.method == EntropyMethod::Closed && a.d != 2 {
        bail!("a closed form exists only for d = 2; use --method quadrature");
    }
    let (nats, err, method) = if closed {
        (vdfap_entropy_2d(params.u(), params.lambda())?, None, "closed")
    } else {
        let e = entropy_quadrature(&params)?;
        (e.nats, Some(e.abs_error), "quadrature")
    };
    let body = EntropyOut {
        value: num(units.from_nats(nats)),
        units,
        method,
        abs_error: num_opt(err.map(|e| units.from_nats(e))),
    };
    let manifest = RunManifest::new("entropy", a, 0)?;
    json_sink(&a.out).write(&json_with_manifest(&body, &manifest)?, &manifest)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct CapacityOut {
    lower: Box<RawValue>,
    upper: Box<RawValue>,
    gap: Box<RawValue>,
    units: Units,
}

pub fn capacity(a: &CapacityArgs) -> Result<Outcome> {
    let q = CapacityQuery::new(a.d, a.drift.vertical(a.d, -1.0)?, a.lambda, a.p)?;
    let r = capacity_bounds(&q, a.units.into())?;
    let body = CapacityOut { lower: num(r.lower), upper: num(r.upper), gap: num(r.upper - r.lower), units: r.units };
    let manifest = RunManifest::new("capacity", a, 0)?;
    json_sink(&a.out).write(&json_with_manifest(&body, &manifest)?, &manifest)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SweepJsonRow {
    x: Box<RawValue>,
    lower: Box<RawValue>,
    upper: Box<RawValue>,
    gap: Box<RawValue>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepJson {
    vary: SweepVarArg,
    units: Units,
    rows: Vec<SweepJsonRow>,
}

pub fn sweep(a: &SweepArgs) -> Result<Outcome> {
    let u = match a.vary {
        // The swept magnitude replaces the drift, so the fixed one only needs to be valid.
        SweepVarArg::U => -1.0,
        _ => a.drift.vertical(a.d, -1.0)?,
    };
    let p = if matches!(a.vary, SweepVarArg::P) { 1.0 } else { a.p };
    let lambda = if matches!(a.vary, SweepVarArg::Lambda) { 1.0 } else { a.lambda };
    let fixed = CapacityQuery::new(a.d, u, lambda, p)?;
    let units: Units = a.units.into();
    let rows = capacity_sweep(a.vary.into(), a.from, a.to, a.steps, &fixed, units)?;
    let manifest = RunManifest::new("sweep", a, 0)?;
    let body = match a.out.format {
        crate::output::Format::Json => json_with_manifest(
            &SweepJson {
                vary: a.vary,
                units,
                rows: rows
                    .iter()
                    .map(|r| SweepJsonRow {
                        x: num(r.x),
                        lower: num_opt(r.lower),
                        upper: num_opt(r.upper),
                        gap: num_opt(r.gap()),
                        error: r.error.clone(),
                    })
                    .collect(),
            },
            &manifest,
        )?,
        crate::output::Format::Csv => {
            let mut s = format!("# manifest: {}\nx,lower,upper,gap,error\n", serde_json::to_string(&manifest)?);
            let cell = |v: Option<f64>| v.map(crate::output::fmt_f64).unwrap_or_default();
            for r in &rows {
                let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    crate::output::fmt_f64(r.x),
                    cell(r.lower),
                    cell(r.upper),
                    cell(r.gap()),
                    err
                ));
            }
            s
        }
    };
    Sink { path: a.out.out.clone() }.write(&body, &manifest)?;
    Ok(Outcome::Done)
}

fn report_warnings(set: &FapSampleSet) {
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let cfg = a.sim.config()?;
    let set = simulate_fap(&cfg)?;
    report_warnings(&set);
    eprintln!(
        "simulated {} trajectories: {} absorbed, {} escaped, {:.2} s",
        cfg.m, set.absorbed, set.escaped, set.wall_time
    );
    let manifest = RunManifest::new("simulate", &cfg, cfg.seed)?;
    let sink = Sink { path: a.out.out.clone() };
    match &a.grid {
        Some(g) => {
            let mut grid = build_histogram(&set, &parse_grid(g)?, a.normalization.into())?;
            if a.truncate || a.sim.preset.is_some() {
                grid = grid.truncate_below(DISPLAY_TRUNCATION);
            }
            emit_grid(&grid, &sink, a.out.format, &manifest)?;
        }
        None => sink.write(&render_samples(&set, a.out.format, &manifest)?, &manifest)?,
    }
    Ok(Outcome::Done)
}

/// Samples for `validate` and the law they are meant to follow.
fn validation_samples(a: &ValidateArgs) -> Result<(FapSampleSet, PlanarChannelParams)> {
    if let Some(path) = &a.samples {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let (dim, data, escaped) = crate::output::parse_samples_csv(&text)?;
        let set = FapSampleSet::new(dim, data, escaped, SampleSource::Derived(path.display().to_string()))?;
        let params = PlanarChannelParams::new(dim, a.sim.drift.full(dim, &[-1.0])?, a.sim.lambda.unwrap_or(1.0))?;
        return Ok((set, params));
    }
    match a.source {
        SourceArg::Sim => {
            let cfg = a.sim.config()?;
            let set = simulate_fap(&cfg)?;
            Ok((set, cfg.channel()?))
        }
        SourceArg::Exact => {
            let params = PlanarChannelParams::new(a.d, a.sim.drift.full(a.d, &[-1.0])?, a.sim.lambda.unwrap_or(1.0))?;
            let set = sample_planar_exact(&params, a.sim.m.unwrap_or(100_000), a.sim.seed.unwrap_or(0))?;
            Ok((set, params))
        }
    }
}

fn as_vdfap(p: &PlanarChannelParams) -> Result<VdfapParams> {
    if p.u_par().iter().any(|&x| x != 0.0) {
        bail!("this test needs a purely vertical drift (VDFAP); got u = {:?}", p.u());
    }
    Ok(VdfapParams::new(p.u_vertical(), p.lambda(), p.d())?)
}

pub fn validate(a: &ValidateArgs) -> Result<Outcome> {
    let thr: Thresholds = (&a.thresholds).into();
    let seed = a.sim.seed.unwrap_or(0);
    let report: FitReport = match a.kind {
        ValidateKind::Density => {
            let (set, params) = validation_samples(a)?;
            report_warnings(&set);
            let grid = build_histogram(&set, &parse_grid(&a.grid)?, Normalization::Density)?;
            compare_density(&grid, &params, thr)?
        }
        ValidateKind::Ks => {
            let (set, params) = validation_samples(a)?;
            ks_radial(&set, &as_vdfap(&params)?, thr)?
        }
        ValidateKind::Moments => {
            let (set, params) = validation_samples(a)?;
            moment_test(&set, &as_vdfap(&params)?, thr)?
        }
        ValidateKind::TwoSample => {
            let cfg = a.sim.config()?;
            let sim = simulate_fap(&cfg)?;
            let exact = sample_vdfap_exact(&as_vdfap(&cfg.channel()?)?, cfg.m, cfg.seed ^ SEED_SPLIT)?;
            ks_two_sample(&sim.radii(), &exact.radii(), thr)?
        }
        ValidateKind::Stability => {
            let u = a.sim.drift.vertical(a.d, -1.0)?;
            weak_stability_test(u, a.lambda1, a.lambda2, a.d, a.sim.m.unwrap_or(20_000), seed, thr)?
        }
    };
    if report.verdict == Verdict::LowPower {
        eprintln!("warning: only {} samples; the test has too little power for a verdict", report.n);
    }
    let manifest = RunManifest::new("validate", a, seed)?;
    json_sink(&a.out).write(&json_with_manifest(&report, &manifest)?, &manifest)?;
    Ok(if report.verdict == Verdict::Fail { Outcome::ValidationFailed } else { Outcome::Done })
}

pub fn selftest(a: &SelftestArgs) -> Result<Outcome> {
    let ids: Vec<u8> = match &a.only {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<u8>().with_context(|| format!("bad criterion `{x}`")))
            .collect::<Result<_>>()?,
        None => acceptance::ALL.to_vec(),
    };
    let mut ok = true;
    for id in ids {
        let r = acceptance::run_criterion(id)?;
        println!("{}", r.line());
        ok &= r.pass;
    }
    Ok(if ok { Outcome::Done } else { Outcome::ValidationFailed })
}
