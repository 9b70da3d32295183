//! Experiment orchestration: builds the domain, runs one experiment and
//! writes `results.csv`, `ledger.json`, `report.json` (and `plot.csv` when the
//! experiment has a curve) into the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::disc::{conformality_defect, DiscGrid, DiscMap, Jet1, C64};
use crate::error::{Error, Result};
use crate::field::{NormSquared, ScalarField};
use crate::kobayashi::{
    approach_path, boundary_scan, holder_probe, hyperbolicity_diagnostics, kobayashi_ball_probe, kobayashi_distance, localize,
    metric_estimate, BarrierConfig, DomainSpec, GraphConfig, HyperbolicityConfig, UpperConfig, XiMode,
};
use crate::mpsh::{is_mpsh_at, mpsh_scan, Verdict};
use crate::solver::{conformal_reparametrize, match_jet_with_report, ConformalConfig, SolverConfig};

use super::config::{DomainRef, Experiment, Scenario};
use super::output::{plot_table, to_json, write_json, Cell, Table};
use super::registry::{build_domain, build_inline, InlineDomain};

/// Exit status: success.
pub const EXIT_OK: i32 = 0;
/// Exit status: an inequality or containment check failed.
pub const EXIT_FINDING: i32 = 1;
/// Exit status: configuration or numerical error.
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: i32,
    pub out_dir: PathBuf,
    /// One-line verdict or error message.
    pub summary: String,
    pub report: Value,
}

struct Artifacts {
    results: Table,
    ledger: Value,
    report: Value,
    plot: Option<Table>,
    finding: Option<String>,
    summary: String,
}

fn params<T: DeserializeOwned + Default>(v: &Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("parameters: {e}")))
}

fn vector(v: &Option<Vec<f64>>, default: DVector<f64>, dim: usize, what: &str) -> Result<DVector<f64>> {
    match v {
        Some(x) if x.len() == dim => Ok(DVector::from_column_slice(x)),
        Some(x) => Err(Error::Config(format!("{what} has {} entries, the domain has dimension {dim}", x.len()))),
        None => Ok(default),
    }
}

fn axis(dim: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(dim);
    e[i] = 1.0;
    e
}

fn coords(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}_{i}")).collect()
}

fn cells(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|x| Cell::Float(*x)).collect()
}

/// Boundary point on the ray from the origin along `e₁`.
fn default_boundary(dom: &DomainSpec) -> Result<DVector<f64>> {
    dom.boundary_along(&dom.origin, &axis(dom.dim(), 0))?
        .ok_or_else(|| Error::Config("no boundary point along e₁; give one explicitly".into()))
}

pub fn resolve_domain(r: &DomainRef) -> Result<DomainSpec> {
    match r {
        DomainRef::Key(k) => build_domain(k, &Value::Null),
        DomainRef::Registry { key, params } => build_domain(key, params),
        DomainRef::Inline(v) => {
            let spec: InlineDomain = serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("inline domain: {e}")))?;
            build_inline(&spec)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RhoChoice {
    #[default]
    NormSquared,
    Domain,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MpshParams {
    rho: RhoChoice,
    spacing: f64,
}

impl Default for MpshParams {
    fn default() -> Self {
        MpshParams { rho: RhoChoice::NormSquared, spacing: 0.1 }
    }
}

fn mpsh_check(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let p: MpshParams = params(&sc.parameters)?;
    let rho: Arc<dyn ScalarField> = match p.rho {
        RhoChoice::NormSquared => Arc::new(NormSquared::new(dom.origin.clone())),
        RhoChoice::Domain => dom.rho.clone(),
    };
    let region = dom.interior_lattice(p.spacing)?;
    let report = mpsh_scan(&dom.chart, rho.as_ref(), &region)?;
    let n = dom.dim();
    let mut header = coords("x", n);
    header.push("min_pair_trace".into());
    let mut t = Table::new(header);
    for x in &region {
        let m = is_mpsh_at(&dom.chart, rho.as_ref(), x)?;
        let mut row = cells(x.as_slice());
        row.push(m.min_pair_trace.into());
        t.push(row);
    }
    let finding = (report.verdict == Verdict::NotMpsh).then(|| {
        format!(
            "minimal pair trace {:e} < 0 at {:?}",
            report.min_pair_trace,
            report.worst_point.as_slice()
        )
    });
    Ok(Artifacts {
        results: t,
        ledger: json!({"strictness": report.strictness, "samples": region.len(), "spacing": p.spacing}),
        summary: report.verdict.to_string(),
        report: to_json(&report)?,
        plot: None,
        finding,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolveParams {
    center: Option<Vec<f64>>,
    v1: Option<Vec<f64>>,
    v2: Option<Vec<f64>>,
    solver: SolverConfig,
    conformal: Option<ConformalConfig>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            center: None,
            v1: None,
            v2: None,
            solver: SolverConfig::default(),
            conformal: Some(ConformalConfig::default()),
        }
    }
}

fn solve_disc(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let mut p: SolveParams = params(&sc.parameters)?;
    let n = dom.dim();
    if let Some(r) = sc.resolution {
        p.solver.resolution = r;
    }
    let center = vector(&p.center, dom.origin.clone(), n, "center")?;
    let v1 = vector(&p.v1, axis(n, 0), n, "v1")?;
    let v2 = vector(&p.v2, axis(n, 1), n, "v2")?;
    let jet = Jet1::from_plane(&dom.chart, center, &v1, &v2, 1.0)?;
    let (u, rep) = match_jet_with_report(&dom.chart, &jet, &p.solver)?;
    let (u, conformal) = match &p.conformal {
        Some(c) => {
            let r = conformal_reparametrize(&dom.chart, &u, c)?;
            (r.map, Some(r.report))
        }
        None => (u, None),
    };
    let defect = conformality_defect(&dom.chart, &u)?;
    let mut header = vec!["r".to_string(), "theta".to_string()];
    header.extend(coords("u", n));
    let mut t = Table::new(header);
    let grid = u.grid().clone();
    for k in 0..grid.len() {
        let mut row = vec![grid.radius(k).into(), grid.theta(k).into()];
        row.extend(cells(u.point(k).as_slice()));
        t.push(row);
    }
    let report = json!({
        "t_used": rep.t_used,
        "newton_iterations": rep.newton_iterations,
        "final_residual": rep.final_residual,
        "conformality_defect": defect,
        "residual_history": rep.residual_history,
        "conformal": conformal,
    });
    Ok(Artifacts {
        results: t,
        ledger: json!({"solver": p.solver, "jet": jet}),
        summary: format!("t = {}, residual {:e}, conformality defect {defect:e}", rep.t_used, rep.final_residual),
        report: super::output::normalize(report),
        plot: None,
        finding: None,
    })
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PointXi {
    w: Vec<f64>,
    xi: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct KobayashiParams {
    points: Vec<PointXi>,
    /// Random `(w, ξ)` drawn from the seed when `points` is empty.
    random: usize,
    /// Random `w` satisfy `|w − origin| < max_radius`.
    max_radius: f64,
    lower: bool,
    upper: UpperConfig,
    barrier: BarrierConfig,
}

impl Default for KobayashiParams {
    fn default() -> Self {
        KobayashiParams {
            points: Vec::new(),
            random: 8,
            max_radius: 0.9,
            lower: true,
            upper: UpperConfig::default(),
            barrier: BarrierConfig::default(),
        }
    }
}

fn random_points(dom: &DomainSpec, count: usize, max_radius: f64, seed: u64) -> Vec<(DVector<f64>, DVector<f64>)> {
    let n = dom.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = DVector::from_fn(n, |_, _| rng.random_range(-max_radius..max_radius));
        if (&w - &dom.origin).norm() >= max_radius || !dom.contains(&(&w + &dom.origin)) {
            continue;
        }
        let xi = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if xi.norm() < 1e-3 {
            continue;
        }
        out.push((&w + &dom.origin, xi));
    }
    out
}

fn kobayashi(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let mut p: KobayashiParams = params(&sc.parameters)?;
    let n = dom.dim();
    p.upper.seed = sc.seed;
    if let Some(r) = sc.resolution {
        p.upper.solver.resolution = r;
    }
    let pts: Vec<(DVector<f64>, DVector<f64>)> = if p.points.is_empty() {
        random_points(dom, p.random, p.max_radius, sc.seed)
    } else {
        p.points
            .iter()
            .map(|q| Ok((vector(&Some(q.w.clone()), dom.origin.clone(), n, "w")?, vector(&Some(q.xi.clone()), axis(n, 0), n, "xi")?)))
            .collect::<Result<_>>()?
    };
    let loc = if p.lower { Some(localize(dom, &p.barrier)?) } else { None };
    let mut header = coords("w", n);
    header.extend(coords("xi", n));
    header.extend(["rho_w", "upper", "lower", "certificate_id"].map(String::from));
    let mut t = Table::new(header);
    let mut certificates = BTreeMap::new();
    let mut estimates = Vec::new();
    let mut broken = Vec::new();
    for (k, (w, xi)) in pts.iter().enumerate() {
        let est = metric_estimate(dom, w, xi, &p.upper, loc.as_ref().map(|l| (l, &p.barrier)))?;
        let id = match &est.lower_certificate {
            Some(c) => {
                let id = format!("C{k:04}");
                certificates.insert(id.clone(), to_json(c)?);
                id
            }
            None => "none".to_string(),
        };
        if !est.bracket_holds() {
            broken.push(k);
        }
        let mut row = cells(w.as_slice());
        row.extend(cells(xi.as_slice()));
        row.extend([est.rho_w.into(), est.upper.into(), est.lower.into(), id.into()]);
        t.push(row);
        estimates.push(est);
    }
    let finding = (!broken.is_empty()).then(|| format!("lower > upper at rows {broken:?}"));
    Ok(Artifacts {
        results: t,
        ledger: json!({"localization": to_json(&loc)?, "certificates": certificates}),
        summary: format!("{} estimates, bracket {}", pts.len(), if broken.is_empty() { "holds" } else { "broken" }),
        report: json!({"estimates": to_json(&estimates)?}),
        plot: None,
        finding,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
struct DistanceParams {
    p: Option<Vec<f64>>,
    q: Option<Vec<f64>>,
    graph: GraphConfig,
}


fn distance(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let mut prm: DistanceParams = params(&sc.parameters)?;
    let n = dom.dim();
    prm.graph.chord_seed = sc.seed;
    prm.graph.upper.seed = sc.seed;
    let p = vector(&prm.p, dom.origin.clone(), n, "p")?;
    let q = vector(&prm.q, &dom.origin + axis(n, 0) * 0.5, n, "q")?;
    let d = kobayashi_distance(dom, &p, &q, &prm.graph)?;
    let mut header = coords("p", n);
    header.extend(coords("q", n));
    header.extend(["upper", "nodes", "edges"].map(String::from));
    let mut t = Table::new(header);
    let mut row = cells(p.as_slice());
    row.extend(cells(q.as_slice()));
    row.extend([d.upper.into(), d.nodes.into(), d.edges.into()]);
    t.push(row);
    let mut plot = plot_table();
    for x in &d.path {
        plot.push(vec![x[0].into(), x.get(1).copied().unwrap_or(0.0).into(), "path".into()]);
    }
    Ok(Artifacts {
        results: t,
        ledger: json!({"graph": to_json(&prm.graph)?}),
        summary: format!("d_upper = {:.6}", d.upper),
        report: to_json(&d)?,
        plot: Some(plot),
        finding: None,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BallProbeParams {
    q: Option<Vec<f64>>,
    /// Radii `δ = f·N`.
    fractions: Vec<f64>,
    graph: GraphConfig,
    barrier: BarrierConfig,
}

impl Default for BallProbeParams {
    fn default() -> Self {
        BallProbeParams {
            q: None,
            fractions: vec![0.25, 0.5],
            graph: GraphConfig { spacing: 0.1, ..Default::default() },
            barrier: BarrierConfig::default(),
        }
    }
}

fn ball_probe(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let mut prm: BallProbeParams = params(&sc.parameters)?;
    prm.graph.chord_seed = sc.seed;
    prm.graph.upper.seed = sc.seed;
    let q = vector(&prm.q, dom.origin.clone(), dom.dim(), "q")?;
    let loc = localize(dom, &prm.barrier)?;
    let mut t = Table::new([
        "fraction",
        "delta",
        "radius",
        "samples",
        "inside",
        "max_ratio",
        "outside_min_distance",
        "violations",
        "lower_violations",
    ]);
    let mut reports = Vec::new();
    let mut bad = 0;
    for &f in &prm.fractions {
        let r = kobayashi_ball_probe(dom, &q, f * loc.n, &loc, &prm.graph)?;
        bad += r.violations.len() + r.lower_violations.len();
        t.push(vec![
            f.into(),
            r.delta.into(),
            r.radius.into(),
            r.samples.into(),
            r.inside.into(),
            r.max_ratio.into(),
            r.outside_min_distance.into(),
            r.violations.len().into(),
            r.lower_violations.len().into(),
        ]);
        reports.push(r);
    }
    let finding = (bad > 0).then(|| format!("{bad} ball-probe violations: the upper-bound graph is wrong"));
    Ok(Artifacts {
        results: t,
        ledger: json!({"localization": to_json(&loc)?}),
        summary: if bad == 0 { "contained".into() } else { "violations".into() },
        report: json!({"probes": to_json(&reports)?}),
        plot: None,
        finding,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScanParams {
    base: Option<Vec<f64>>,
    /// Depths `|ρ|` of the scan points.
    deltas: Vec<f64>,
    mode: XiMode,
    lower: bool,
    upper: UpperConfig,
    barrier: BarrierConfig,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            base: None,
            deltas: (0..7).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect(),
            mode: XiMode::Tangential,
            lower: false,
            upper: UpperConfig::default(),
            barrier: BarrierConfig::default(),
        }
    }
}

fn scan(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let mut prm: ScanParams = params(&sc.parameters)?;
    prm.upper.seed = sc.seed;
    if let Some(r) = sc.resolution {
        prm.upper.solver.resolution = r;
    }
    let n = dom.dim();
    let base = match &prm.base {
        Some(_) => vector(&prm.base, dom.origin.clone(), n, "base")?,
        None => default_boundary(dom)?,
    };
    let path = approach_path(dom, &base, &prm.deltas)?;
    let loc = if prm.lower { Some(localize(dom, &prm.barrier)?) } else { None };
    let r = boundary_scan(dom, &base, &path, prm.mode, &prm.upper, loc.as_ref().map(|l| (l, &prm.barrier)))?;
    let mut header = coords("w", n);
    header.extend(["rho", "upper", "lower"].map(String::from));
    let mut t = Table::new(header);
    let mut plot = plot_table();
    for row in &r.rows {
        let mut c = cells(&row.point);
        c.extend([row.rho.into(), row.upper.into(), row.lower.unwrap_or(f64::NAN).into()]);
        t.push(c);
        plot.push(vec![row.rho.abs().ln().into(), row.upper.ln().into(), "upper".into()]);
        if let Some(l) = row.lower {
            plot.push(vec![row.rho.abs().ln().into(), l.ln().into(), "lower".into()]);
        }
    }
    let finding = (!r.lower_below_upper).then(|| "lower bound exceeds the upper bound on the scan".to_string());
    Ok(Artifacts {
        results: t,
        ledger: json!({"localization": to_json(&loc)?}),
        summary: format!("slope {:.4}{}", r.slope_upper, r.note.as_ref().map(|s| format!(" ({s})")).unwrap_or_default()),
        report: to_json(&r)?,
        plot: Some(plot),
        finding,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HyperbolicityParams {
    p: Option<Vec<f64>>,
    boundary_point: Option<Vec<f64>>,
    deltas: Vec<f64>,
    config: HyperbolicityConfig,
}

impl Default for HyperbolicityParams {
    fn default() -> Self {
        HyperbolicityParams {
            p: None,
            boundary_point: None,
            deltas: vec![1e-1, 1e-2, 1e-3],
            config: HyperbolicityConfig::default(),
        }
    }
}

fn hyperbolicity(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let mut prm: HyperbolicityParams = params(&sc.parameters)?;
    prm.config.graph.chord_seed = sc.seed;
    prm.config.graph.upper.seed = sc.seed;
    if let Some(r) = sc.resolution {
        prm.config.solver.resolution = r;
    }
    let n = dom.dim();
    let p = vector(&prm.p, dom.origin.clone(), n, "p")?;
    let b = match &prm.boundary_point {
        Some(_) => vector(&prm.boundary_point, dom.origin.clone(), n, "boundary_point")?,
        None => default_boundary(dom)?,
    };
    let r = hyperbolicity_diagnostics(dom, &p, &b, &prm.deltas, &prm.config)?;
    let mut t = Table::new([
        "delta",
        "rho",
        "distance_upper",
        "tilt_deg",
        "shrink",
        "c_half",
        "c_schwarz",
        "a_lap",
        "c_grad",
        "grad_bound",
        "consistent",
    ]);
    let mut plot = plot_table();
    for row in &r.rows {
        plot.push(vec![(1.0 / row.delta).ln().into(), row.distance_upper.into(), "distance_upper".into()]);
        for d in &row.discs {
            t.push(vec![
                row.delta.into(),
                row.rho.into(),
                row.distance_upper.into(),
                d.tilt_deg.into(),
                d.shrink.into(),
                d.c_half.into(),
                d.c_schwarz.into(),
                d.a_lap.into(),
                d.c_grad.into(),
                d.grad_bound.into(),
                d.consistent.into(),
            ]);
        }
    }
    let finding = (!r.consistent).then(|| "gradient bound C_grad ≤ 2(2A+1) + C_pot·A fails on some disc".to_string());
    Ok(Artifacts {
        results: t,
        ledger: json!({"config": to_json(&prm.config)?, "strictness": dom.strictness}),
        summary: format!(
            "distance slope {:.4}, constants {} within 2",
            r.distance_slope,
            if r.stable_within_2 { "stable" } else { "not stable" }
        ),
        report: to_json(&r)?,
        plot: Some(plot),
        finding,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum HolderDisc {
    /// `ζ ↦ ζ·exp(2i·Im√(1 − ζ))` scaled onto the boundary sphere.
    #[default]
    SqrtLanding,
    /// The flat equatorial disc.
    Smooth,
    /// A disc written by `solve-disc`.
    Csv(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HolderParams {
    disc: HolderDisc,
    arc: (f64, f64),
    resolution: (usize, usize),
}

impl Default for HolderParams {
    fn default() -> Self {
        HolderParams { disc: HolderDisc::SqrtLanding, arc: (-0.5, 0.5), resolution: (64, 256) }
    }
}

/// Test discs in the `(x₁, x₂)` plane landing on the coordinate sphere through the `e₁` boundary point.
pub fn landing_disc(dom: &DomainSpec, grid: Arc<DiscGrid>, sqrt: bool) -> Result<DiscMap> {
    let n = dom.dim();
    let s = (default_boundary(dom)? - &dom.origin).norm();
    let o = dom.origin.clone();
    DiscMap::from_fn(grid, n, |x, y| {
        let z = if sqrt {
            let r = C64::new(1.0 - x, -y).sqrt();
            C64::new(x, y) * C64::new(0.0, 2.0 * r.im).exp()
        } else {
            C64::new(x, y)
        };
        let mut v = o.clone();
        v[0] += s * z.re;
        v[1] += s * z.im;
        v
    })
}

fn holder(dom: &DomainSpec, sc: &Scenario) -> Result<Artifacts> {
    let mut prm: HolderParams = params(&sc.parameters)?;
    if let Some(r) = sc.resolution {
        prm.resolution = r;
    }
    let grid = DiscGrid::new(prm.resolution.0, prm.resolution.1)?;
    let u = match &prm.disc {
        HolderDisc::SqrtLanding => landing_disc(dom, grid, true)?,
        HolderDisc::Smooth => landing_disc(dom, grid, false)?,
        HolderDisc::Csv(path) => DiscMap::read_csv(grid, fs::File::open(path)?)?,
    };
    let r = holder_probe(dom, &u, prm.arc)?;
    let mut t = Table::new(["d", "omega"]);
    let mut plot = plot_table();
    for &(d, w) in &r.scales {
        t.push(vec![d.into(), w.into()]);
        plot.push(vec![d.ln().into(), w.ln().into(), "modulus".into()]);
    }
    Ok(Artifacts {
        results: t,
        ledger: json!({"landing_tolerance": crate::kobayashi::LANDING_TOLERANCE, "strictness": dom.strictness}),
        summary: format!("α = {:.4} [{:.4}, {:.4}]", r.alpha, r.band.0, r.band.1),
        finding: r.note.clone(),
        report: to_json(&r)?,
        plot: Some(plot),
    })
}

fn execute(sc: &Scenario) -> Result<(DomainSpec, Artifacts)> {
    let dom = resolve_domain(&sc.domain_ref)?;
    let a = match sc.experiment {
        Experiment::MpshCheck => mpsh_check(&dom, sc),
        Experiment::SolveDisc => solve_disc(&dom, sc),
        Experiment::Kobayashi => kobayashi(&dom, sc),
        Experiment::Distance => distance(&dom, sc),
        Experiment::BallProbe => ball_probe(&dom, sc),
        Experiment::BoundaryScan => scan(&dom, sc),
        Experiment::Hyperbolicity => hyperbolicity(&dom, sc),
        Experiment::HolderProbe => holder(&dom, sc),
    }?;
    Ok((dom, a))
}

fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::Domain { .. } => "domain",
        Error::Metric { .. } => "metric",
        Error::Radius(_) => "radius",
        Error::Connectivity(_) => "connectivity",
        Error::Immersion { .. } => "immersion",
        Error::Precondition(_) => "precondition",
        Error::Convergence { .. } => "convergence",
        Error::Argument(_) => "argument",
        Error::Numeric(_) => "numeric",
        Error::Certificate { .. } => "certificate",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    };
    let mut v = json!({"kind": kind, "message": e.to_string()});
    match e {
        Error::Certificate { worst_point, margin, .. } => {
            v["worst_point"] = json!(worst_point);
            v["margin"] = json!(margin);
        }
        Error::Domain { point, .. } | Error::Metric { point, .. } => {
            v["point"] = json!(point);
        }
        Error::Convergence { history, .. } => {
            v["residual_history"] = json!(history);
        }
        _ => {}
    }
    super::output::normalize(v)
}

/// Runs `sc`, writing artifacts to `out`; never panics on bad input.
pub fn run_scenario(sc: &Scenario, out: &Path) -> RunOutcome {
    let hash = sc.config_hash();
    let comment = format!("config_hash={hash} ledger=ledger.json seed={}", sc.seed);
    let header = json!({
        "scenario": sc,
        "config_hash": hash,
        "seed": sc.seed,
        "ledger": "ledger.json",
    });
    let write = |status: i32, dom: Option<&DomainSpec>, a: Option<&Artifacts>, err: Option<&Error>| -> Result<Value> {
        fs::create_dir_all(out)?;
        let mut report = header.clone();
        report["status"] = json!(status);
        if let Some(d) = dom {
            report["domain"] = to_json(&d.summary())?;
        }
        if let Some(a) = a {
            fs::write(out.join("results.csv"), a.results.to_csv(&comment)?)?;
            if let Some(p) = &a.plot {
                fs::write(out.join("plot.csv"), p.to_csv(&comment)?)?;
            }
            let mut ledger = header.clone();
            ledger["constants"] = a.ledger.clone();
            write_json(&out.join("ledger.json"), &ledger)?;
            report["summary"] = json!(a.summary);
            report["finding"] = json!(a.finding);
            report["result"] = a.report.clone();
        }
        if let Some(e) = err {
            let mut ej = header.clone();
            ej["status"] = json!(status);
            ej["error"] = error_json(e);
            write_json(&out.join("error.json"), &ej)?;
            report["error"] = error_json(e);
        }
        write_json(&out.join("report.json"), &report)?;
        Ok(report)
    };
    let (status, summary, written) = match execute(sc) {
        Ok((dom, a)) => {
            let status = if a.finding.is_some() { EXIT_FINDING } else { EXIT_OK };
            let summary = match &a.finding {
                Some(f) => format!("{}: {f}", a.summary),
                None => a.summary.clone(),
            };
            (status, summary, write(status, Some(&dom), Some(&a), None))
        }
        Err(e) => {
            let status = if e.is_finding() { EXIT_FINDING } else { EXIT_ERROR };
            (status, e.to_string(), write(status, None, None, Some(&e)))
        }
    };
    match written {
        Ok(report) => RunOutcome { status, out_dir: out.to_path_buf(), summary, report },
        Err(e) => RunOutcome {
            status: EXIT_ERROR,
            out_dir: out.to_path_buf(),
            summary: format!("writing artifacts failed: {e}"),
            report: error_json(&e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(sc: &Scenario) -> (RunOutcome, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let o = run_scenario(sc, dir.path());
        (o, dir)
    }

    #[test]
    fn mpsh_check_on_the_ball() {
        let mut sc = Scenario::new(Experiment::MpshCheck);
        sc.parameters = json!({"spacing": 0.25});
        let (o, dir) = run(&sc);
        assert_eq!(o.status, EXIT_OK, "{}", o.summary);
        assert_eq!(o.summary, "strictly MPSH, ε=1");
        let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(csv.starts_with(&format!("# config_hash={} ledger=ledger.json seed=0\nx_1,x_2,x_3,min_pair_trace\n", sc.config_hash())));
        for f in ["ledger.json", "report.json"] {
            let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join(f)).unwrap()).unwrap();
            assert_eq!(v["config_hash"], json!(sc.config_hash()));
        }
    }

    #[test]
    fn bad_config_exits_2_with_error_json() {
        let mut sc = Scenario::new(Experiment::Distance);
        sc.parameters = json!({"graf": {}});
        let (o, dir) = run(&sc);
        assert_eq!(o.status, EXIT_ERROR);
        let e: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
        assert_eq!(e["error"]["kind"], "config");
        sc.domain_ref = DomainRef::Key("klein-bottle".into());
        sc.parameters = Value::Null;
        assert_eq!(run(&sc).0.status, EXIT_ERROR);
    }

    #[test]
    fn failing_barrier_scan_exits_1_with_worst_point() {
        let mut sc = Scenario::new(Experiment::Kobayashi);
        sc.domain_ref = DomainRef::Registry { key: "euclidean-ball".into(), params: json!({"dim": 2}) };
        sc.parameters = json!({"random": 1, "barrier": {"lattice_spacing": 0.25, "a_cap": 0.01, "kappa_max": 1.0}});
        let (o, dir) = run(&sc);
        assert_eq!(o.status, EXIT_FINDING, "{}", o.summary);
        let e: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
        assert_eq!(e["error"]["kind"], "certificate");
        assert!(e["error"]["worst_point"].is_array());
    }

    #[test]
    fn holder_probe_scenario() {
        let mut sc = Scenario::new(Experiment::HolderProbe);
        sc.resolution = Some((64, 256));
        let (o, _dir) = run(&sc);
        assert_eq!(o.status, EXIT_OK, "{}", o.summary);
        let a = o.report["result"]["alpha"].as_f64().unwrap();
        assert!((0.45..=0.6).contains(&a), "{a}");
    }
}
