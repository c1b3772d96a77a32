//! Command pipelines. Each returns the files of its report bundle.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use hd_core::assembly::energy;
use hd_core::dispersion::{self, DispersionReport};
use hd_core::dual::{dual_value, half_law, make_smoother, Orientation};
use hd_core::eigen::{recycling_check, recycling_value, solve_eigen, symmetrization_check, BoundaryCondition};
use hd_core::model::{comparison_report, model_space, radial_eigen, ModelSpace};
use hd_core::study::{richardson, study_rows};
use hd_core::{Field, Mesh, NodalField};

use crate::config::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    HalfLaw,
    SweepPsi,
    SweepPhi,
    Eigen,
    Recycle,
    ModelCompare,
    ConvergeStudy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::HalfLaw => "half-law",
            Command::SweepPsi => "sweep-psi",
            Command::SweepPhi => "sweep-phi",
            Command::Eigen => "eigen",
            Command::Recycle => "recycle",
            Command::ModelCompare => "model-compare",
            Command::ConvergeStudy => "converge-study",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub refine: Option<u32>,
    /// Omit wall-clock timings so identical configs give identical bytes.
    pub deterministic: bool,
}

/// Files written by one run, in write order.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub dir: PathBuf,
    pub files: Vec<(String, String)>,
}

impl Bundle {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn report(&self) -> Result<Value> {
        let text = self.get("report.json").context("bundle has no report.json")?;
        Ok(serde_json::from_str(text)?)
    }
}

struct Ctx<'a> {
    base: PathBuf,
    refine: Option<u32>,
    command: &'a str,
}

impl Ctx<'_> {
    fn mesh(&self, source: &MeshSource, whole: bool) -> Result<Mesh> {
        let m = source.load(&self.base, self.refine)?;
        Ok(if whole { m.with_whole_conductor()? } else { m })
    }
}

/// Loads the config, runs the pipeline and writes the bundle.
pub fn execute(inv: &Invocation) -> Result<Bundle> {
    let text = std::fs::read_to_string(&inv.config)
        .with_context(|| format!("reading config {}", inv.config.display()))?;
    let base = inv.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let name = inv.command.name();
    let ctx = Ctx {
        base,
        refine: inv.refine,
        command: name,
    };
    let start = Instant::now();
    let path = inv.config.as_path();
    let (output, mut files) = match inv.command {
        Command::Solve => {
            let c: SolveConfig = parse(&text, name, path)?;
            (c.output.clone(), solve(&ctx, &c)?)
        }
        Command::HalfLaw => {
            let c: HalfLawConfig = parse(&text, name, path)?;
            (c.output.clone(), half_law_run(&ctx, &c)?)
        }
        Command::SweepPsi | Command::SweepPhi => {
            let c: SweepConfig = parse(&text, name, path)?;
            (c.output.clone(), sweep(&ctx, &c, inv.command == Command::SweepPsi)?)
        }
        Command::Eigen => {
            let c: EigenConfig = parse(&text, name, path)?;
            (c.output.clone(), eigen(&ctx, &c)?)
        }
        Command::Recycle => {
            let c: RecycleConfig = parse(&text, name, path)?;
            (c.output.clone(), recycle(&ctx, &c)?)
        }
        Command::ModelCompare => {
            let c: CompareConfig = parse(&text, name, path)?;
            (c.output.clone(), compare(&ctx, &c)?)
        }
        Command::ConvergeStudy => {
            let c: StudyConfig = parse(&text, name, path)?;
            (c.output.clone(), study(&ctx, &c)?)
        }
    };
    if !inv.deterministic {
        if let Some((_, summary)) = files.iter_mut().find(|(n, _)| n == "summary.txt") {
            let _ = writeln!(summary, "elapsed_seconds: {:.3}", start.elapsed().as_secs_f64());
        }
    }
    let dir = inv
        .out
        .clone()
        .or_else(|| output.map(|o| ctx.base.join(o)))
        .unwrap_or_else(|| {
            let stem = inv.config.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| name.into());
            PathBuf::from("out").join(stem)
        });
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (file, content) in &files {
        let path = dir.join(file);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Bundle { dir, files })
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
        }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn pretty(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn mesh_info(m: &Mesh) -> Value {
    json!({
        "vertices": m.n_vertices(),
        "triangles": m.n_triangles(),
        "area": m.total_area(),
        "boundary_length": m.boundary_length(),
        "conductor_area": m.conductor_area(),
        "max_edge": m.max_edge_length(),
    })
}

fn summary(command: &str, lines: &[(String, String)]) -> String {
    let mut s = format!("command: {command}\n");
    for (k, v) in lines {
        let _ = writeln!(s, "{k}: {v}");
    }
    s
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn field_csv(mesh: &Mesh, f: &Field) -> String {
    let mut csv = Csv::new(&["x", "y", "z", "f"]);
    for (v, &x) in mesh.vertices().iter().zip(f.iter()) {
        csv.row(&[num(v[0]), num(v[1]), num(v[2]), num(x)]);
    }
    csv.text
}

fn dispersion_json(r: &DispersionReport<f64>) -> Value {
    let (lo, hi) = r.minimizer.range();
    let mut v = serde_json::to_value(r).unwrap_or(Value::Null);
    v["field_min"] = json!(lo);
    v["field_max"] = json!(hi);
    v
}

fn solve(ctx: &Ctx, c: &SolveConfig) -> Result<Vec<(String, String)>> {
    let mesh = ctx.mesh(&c.mesh, c.whole_conductor)?;
    let medium = c.medium.build(&mesh)?;
    let r = if c.dirichlet {
        dispersion::solve_dirichlet(&mesh, &medium, &c.solver)?
    } else {
        dispersion::solve(&mesh, &medium, &c.solver)?
    };
    let report = json!({
        "command": ctx.command,
        "mesh": mesh_info(&mesh),
        "medium": c.medium,
        "dirichlet": c.dirichlet,
        "report": dispersion_json(&r),
    });
    let s = summary(
        ctx.command,
        &[
            kv("value", r.value),
            kv("dirichlet_energy", r.breakdown.dirichlet),
            kv("bulk_energy", r.breakdown.bulk),
            kv("boundary_energy", r.breakdown.boundary),
            kv("identity_residual", r.identity_residual),
            kv("gradient_residual", r.gradient_residual),
            kv("range_violation", r.range_violation),
            kv("newton_iterations", r.iterations),
            kv("vertices", mesh.n_vertices()),
        ],
    );
    Ok(vec![
        ("report.json".into(), pretty(&report)?),
        ("field.csv".into(), field_csv(&mesh, &r.minimizer)),
        ("summary.txt".into(), s),
    ])
}

fn half_law_run(ctx: &Ctx, c: &HalfLawConfig) -> Result<Vec<(String, String)>> {
    let mesh = ctx.mesh(&c.mesh, c.whole_conductor)?;
    let media = c.medium.to_vec();
    let mut table = Csv::new(&["p", "phi", "psi", "epsilon", "primal", "dual", "ratio", "clamped"]);
    let mut smoother = Csv::new(&[
        "epsilon",
        "p",
        "h_at_1",
        "dh_at_1",
        "d2h_at_knee",
        "variation_quadrature",
        "variation_closed_form",
    ]);
    let mut bound = Csv::new(&["p", "phi", "psi", "index", "dual", "twice_energy", "margin", "scale"]);
    let mut cases = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let mut worst_margin = f64::INFINITY;
    let runs: Vec<_> = media
        .par_iter()
        .map(|mc| -> Result<_> {
            let medium = mc.build(&mesh)?;
            let primal = dispersion::solve(&mesh, &medium, &c.solver)?;
            let duals = half_law(&mesh, &medium, &primal, &c.epsilons)?;
            Ok((medium, primal, duals))
        })
        .collect::<Result<Vec<_>>>()?;
    for (mc, (medium, primal, duals)) in media.iter().zip(&runs) {
        let (p, phi, psi) = mc.label();
        for d in duals {
            min_ratio = min_ratio.min(d.ratio);
            table.row(&[
                num(p),
                phi.clone(),
                psi.clone(),
                num(d.epsilon),
                num(d.primal_value),
                num(d.dual_value),
                num(d.ratio),
                num(d.clamped),
            ]);
        }
        for &eps in &c.epsilons {
            let h = make_smoother(eps, Orientation::Upper)?;
            smoother.row(&[
                num(eps),
                num(p),
                num(h.h(1.0)),
                num(h.dh(1.0)),
                num(h.d2h(1.0 - h.delta)),
                num(h.variation_quadrature(p, 1e-13)?),
                num(h.variation_closed_form(p)),
            ]);
        }
        if let Some(rf) = c.random_fields {
            let mut rng = ChaCha8Rng::seed_from_u64(rf.seed);
            for k in 0..rf.count {
                let f = NodalField((0..mesh.n_vertices()).map(|_| rng.gen_range(0.0..=1.0)).collect());
                let dual = dual_value(&mesh, medium, &f)?;
                let twice = 2.0 * energy(&mesh, medium, &f)?.total;
                let margin = dual - twice;
                let scale = dual.abs() + twice.abs();
                worst_margin = worst_margin.min(margin / scale.max(f64::MIN_POSITIVE));
                bound.row(&[
                    num(p),
                    phi.clone(),
                    psi.clone(),
                    k.to_string(),
                    num(dual),
                    num(twice),
                    num(margin),
                    num(scale),
                ]);
            }
        }
        cases.push(json!({
            "medium": mc,
            "primal": dispersion_json(primal),
            "duals": duals,
        }));
    }
    let report = json!({
        "command": ctx.command,
        "mesh": mesh_info(&mesh),
        "epsilons": c.epsilons,
        "cases": cases,
        "min_ratio": if min_ratio.is_finite() { json!(min_ratio) } else { Value::Null },
        "worst_relative_margin": if worst_margin.is_finite() { json!(worst_margin) } else { Value::Null },
    });
    let mut lines = vec![kv("cases", media.len()), kv("epsilons", format!("{:?}", c.epsilons))];
    if min_ratio.is_finite() {
        lines.push(kv("min_ratio", min_ratio));
        lines.push(kv("all_ratios_at_least_one", min_ratio >= 1.0 - 1e-12));
    }
    if worst_margin.is_finite() {
        lines.push(kv("worst_relative_margin", worst_margin));
    }
    let mut files = vec![
        ("report.json".to_string(), pretty(&report)?),
        ("halflaw.csv".to_string(), table.text),
        ("smoother.csv".to_string(), smoother.text),
    ];
    if c.random_fields.is_some() {
        files.push(("lower_bound.csv".into(), bound.text));
    }
    files.push(("summary.txt".into(), summary(ctx.command, &lines)));
    Ok(files)
}

fn sweep(ctx: &Ctx, c: &SweepConfig, psi: bool) -> Result<Vec<(String, String)>> {
    let mesh = ctx.mesh(&c.mesh, false)?;
    let range = c.exponents.from..=c.exponents.to;
    let (rows, reports, dirichlet) = if psi {
        let s = dispersion::sweep_psi(&mesh, c.p, range, &c.solver)?;
        (s.rows, s.reports, Some(s.dirichlet))
    } else {
        let s = dispersion::sweep_phi(&mesh, c.p, range, &c.solver)?;
        (s.rows, s.reports, None)
    };
    let aux = if psi { "dirichlet_gap" } else { "phi_area_k" };
    let mut csv = Csv::new(&["param", "value", aux, "identity_residual"]);
    for (row, r) in rows.iter().zip(&reports) {
        csv.row(&[num(row.param), num(row.value), num(row.aux), num(r.identity_residual)]);
    }
    let monotone = rows.windows(2).all(|w| w[1].value >= w[0].value);
    let bounded = rows.iter().all(|r| r.value >= r.aux);
    let worst = reports.iter().map(|r| r.identity_residual).fold(0.0, f64::max);
    let report = json!({
        "command": ctx.command,
        "mesh": mesh_info(&mesh),
        "p": c.p,
        "rows": rows,
        "reports": reports.iter().map(dispersion_json).collect::<Vec<_>>(),
        "dirichlet": dirichlet.as_ref().map(dispersion_json),
        "monotone": monotone,
        "bulk_bound_holds": if psi { Value::Null } else { json!(bounded) },
        "max_identity_residual": worst,
    });
    let mut lines = vec![kv("rows", rows.len()), kv("monotone", monotone), kv("max_identity_residual", worst)];
    if let Some(d) = &dirichlet {
        lines.push(kv("dirichlet_value", d.value));
    } else {
        lines.push(kv("bulk_bound_holds", bounded));
    }
    Ok(vec![
        ("report.json".into(), pretty(&report)?),
        ("sweep.csv".into(), csv.text),
        ("summary.txt".into(), summary(ctx.command, &lines)),
    ])
}

fn beta_of(bc: &BoundaryCondition<f64>) -> f64 {
    match bc {
        BoundaryCondition::Robin(b) => *b,
        BoundaryCondition::Dirichlet => f64::INFINITY,
    }
}

fn eigen(ctx: &Ctx, c: &EigenConfig) -> Result<Vec<(String, String)>> {
    let mesh = ctx.mesh(&c.mesh, false)?;
    let oracle: Option<ModelSpace<f64>> = c.oracle.as_ref().map(ModelSpace::from_params).transpose()?;
    let ps = c.p.to_vec();
    let mut csv = Csv::new(&["p", "lambda", "residual", "iterations", "oracle", "relative_gap"]);
    let mut reports = Vec::new();
    let mut lines = Vec::new();
    for &p in &ps {
        let r = solve_eigen(&mesh, p, c.boundary, &c.solver)?;
        let o = oracle.as_ref().map(|m| radial_eigen(m, p, beta_of(&c.boundary))).transpose()?;
        let gap = o.map(|o| (r.lambda - o) / o);
        csv.row(&[num(p), num(r.lambda), num(r.residual), r.iterations.to_string(), opt(o), opt(gap)]);
        lines.push(kv(&format!("lambda[p={p}]"), r.lambda));
        if let Some(o) = o {
            lines.push(kv(&format!("oracle[p={p}]"), o));
        }
        let mut v = serde_json::to_value(&r)?;
        v["oracle"] = json!(o);
        v["relative_gap"] = json!(gap);
        reports.push(v);
    }
    let mut symmetrization = Vec::new();
    if let Some(ball) = &c.ball {
        let BoundaryCondition::Robin(beta) = c.boundary else {
            bail!("symmetrization compares Robin eigenvalues only");
        };
        let ball = ctx.mesh(ball, false)?;
        for &p in &ps {
            let s = symmetrization_check(&mesh, &ball, p, beta, &c.solver)?;
            lines.push(kv(&format!("margin[p={p}]"), s.margin));
            lines.push(kv(&format!("symmetrization_holds[p={p}]"), s.holds));
            symmetrization.push(json!({ "p": p, "report": s }));
        }
    }
    let report = json!({
        "command": ctx.command,
        "mesh": mesh_info(&mesh),
        "boundary": c.boundary,
        "reports": reports,
        "symmetrization": symmetrization,
    });
    Ok(vec![
        ("report.json".into(), pretty(&report)?),
        ("eigen.csv".into(), csv.text),
        ("summary.txt".into(), summary(ctx.command, &lines)),
    ])
}

fn recycle(ctx: &Ctx, c: &RecycleConfig) -> Result<Vec<(String, String)>> {
    let mesh = ctx.mesh(&c.mesh, false)?;
    let mut csv = Csv::new(&["p", "epsilon", "Lambda", "lambda", "ratio"]);
    let mut random = Csv::new(&["p", "index", "Lambda", "lambda", "ratio"]);
    let mut cases = Vec::new();
    let mut lines = Vec::new();
    for p in c.p.to_vec() {
        let eig = solve_eigen(&mesh, p, c.boundary, &c.solver)?;
        let checks = recycling_check(&mesh, &eig, &c.epsilons)?;
        for r in &checks {
            csv.row(&[num(p), opt(r.epsilon), num(r.big_lambda), num(r.lambda), num(r.ratio)]);
            let key = match r.epsilon {
                Some(e) => format!("ratio[p={p},epsilon={e}]"),
                None => format!("ratio[p={p}]"),
            };
            lines.push(kv(&key, r.ratio));
        }
        let mut min_random = f64::INFINITY;
        if let Some(rf) = c.random_fields {
            let mut rng = ChaCha8Rng::seed_from_u64(rf.seed);
            for k in 0..rf.count {
                let u = NodalField((0..mesh.n_vertices()).map(|_| rng.gen_range(0.05..=1.0)).collect());
                let big = recycling_value(&mesh, p, c.boundary, &u, eig.lambda)?;
                min_random = min_random.min(big / eig.lambda);
                random.row(&[num(p), k.to_string(), num(big), num(eig.lambda), num(big / eig.lambda)]);
            }
            lines.push(kv(&format!("min_random_ratio[p={p}]"), min_random));
        }
        cases.push(json!({
            "p": p,
            "eigen": eig,
            "checks": checks,
            "min_random_ratio": if min_random.is_finite() { json!(min_random) } else { Value::Null },
        }));
    }
    let report = json!({
        "command": ctx.command,
        "mesh": mesh_info(&mesh),
        "boundary": c.boundary,
        "epsilons": c.epsilons,
        "cases": cases,
    });
    let mut files = vec![
        ("report.json".to_string(), pretty(&report)?),
        ("recycling.csv".to_string(), csv.text),
    ];
    if c.random_fields.is_some() {
        files.push(("random.csv".into(), random.text));
    }
    files.push(("summary.txt".into(), summary(ctx.command, &lines)));
    Ok(files)
}

fn compare(ctx: &Ctx, c: &CompareConfig) -> Result<Vec<(String, String)>> {
    let mesh = ctx.mesh(&c.mesh, false)?;
    let model = model_space(c.model.kappa, c.model.lambda, c.model.n, c.model.cutoff)?;
    let r = comparison_report(&mesh, &model, c.delta, c.p, c.phi, c.psi, &c.solver)?;
    let report = json!({
        "command": ctx.command,
        "mesh": mesh_info(&mesh),
        "model": model,
        "report": r,
    });
    let lines = [
        kv("surface", r.surface),
        kv("model", r.model),
        kv("gap", r.gap),
        kv("holds", r.holds),
        kv("boundary_surface", r.boundary_surface),
        kv("boundary_model", r.boundary_model),
    ];
    Ok(vec![
        ("report.json".into(), pretty(&report)?),
        ("compare.csv".into(), r.csv()),
        ("summary.txt".into(), summary(ctx.command, &lines)),
    ])
}

fn study(ctx: &Ctx, c: &StudyConfig) -> Result<Vec<(String, String)>> {
    if !c.mesh.is_generated() {
        bail!("converge-study needs a generated mesh");
    }
    if c.levels.is_empty() {
        bail!("converge-study needs at least one level");
    }
    let level_ctx = |l: u32| Ctx {
        base: ctx.base.clone(),
        refine: Some(l),
        command: ctx.command,
    };
    let results: Vec<(f64, Option<f64>)> = c
        .levels
        .par_iter()
        .map(|&l| -> Result<(f64, Option<f64>)> {
            let mesh = level_ctx(l).mesh(&c.mesh, c.whole_conductor)?;
            let medium = c.medium.build(&mesh)?;
            let value = match &c.quantity {
                Quantity::Dispersion => dispersion::solve(&mesh, &medium, &c.solver)?.value,
                Quantity::Dirichlet => dispersion::solve_dirichlet(&mesh, &medium, &c.solver)?.value,
                Quantity::HalfLaw { epsilon } => {
                    let primal = dispersion::solve(&mesh, &medium, &c.solver)?;
                    half_law(&mesh, &medium, &primal, &[*epsilon])?[0].ratio
                }
                Quantity::Eigen { boundary } => solve_eigen(&mesh, c.medium.p, *boundary, &c.eigen_solver)?.lambda,
            };
            let reference = match &c.reference {
                None => None,
                Some(Reference::Value(v)) => Some(*v),
                Some(Reference::WholeConductor) => {
                    let (Some(phi), Some(psi)) = (c.medium.phi.constant(), c.medium.psi.constant()) else {
                        bail!("whole_conductor reference needs constant coefficients");
                    };
                    Some(phi * mesh.total_area() + psi * mesh.boundary_length())
                }
            };
            Ok((value, reference))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let refs: Option<Vec<f64>> = results.iter().map(|r| r.1).collect();
    let rows = study_rows(&c.levels, &values, refs.as_deref());
    let last_order = rows.iter().rev().find_map(|r| r.order);
    let extrapolated = last_order.and_then(|q| richardson(&values, q));
    let mut csv = Csv::new(&["level", "value", "reference", "error", "order"]);
    for (k, r) in rows.iter().enumerate() {
        csv.row(&[
            r.level.to_string(),
            num(r.value),
            opt(refs.as_ref().map(|v| v[k])),
            opt(r.error),
            opt(r.order),
        ]);
    }
    let report = json!({
        "command": ctx.command,
        "quantity": c.quantity,
        "rows": rows,
        "references": refs,
        "richardson": extrapolated,
    });
    let mut lines: Vec<(String, String)> = rows
        .iter()
        .map(|r| kv(&format!("value[level={}]", r.level), r.value))
        .collect();
    lines.push(kv("last_order", opt(last_order)));
    lines.push(kv("richardson", opt(extrapolated)));
    Ok(vec![
        ("report.json".into(), pretty(&report)?),
        ("study.csv".into(), csv.text),
        ("summary.txt".into(), summary(ctx.command, &lines)),
    ])
}
