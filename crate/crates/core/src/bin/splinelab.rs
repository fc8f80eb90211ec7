//! Experiment driver. Every subcommand writes CSV/JSON files into the output
//! directory, prints a JSON summary, and exits 0 iff its checks pass.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use splinelab::bspline::TensorCoeffs;
use splinelab::gram::fit_decay;
use splinelab::maximal::{default_resolution, domination_ratio, weak_type_ratio_with};
use splinelab::mesh::{generate_mesh, KnotVector, MeshKind, Rectangle, TensorMesh};
use splinelab::projection::{lebesgue_constant, named_field, sample_points, sup_error, Projector, QuadratureSpec};
use splinelab::remez::estimate_remez;
use splinelab::saks::{bohr_decompose, build_psi, build_saks_partial, divergence_curve, verify_psi, SaksSchedule};
use splinelab::step::StepFunction;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "SPLINELAB_OUT";
const DEFAULT_SEED: u64 = 20240521;

#[derive(Parser, Debug)]
#[command(name = "splinelab", version, about = "Spline projection laboratory")]
struct Cli {
    /// JSON file with parameter values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $SPLINELAB_OUT, else the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decay fit of the inverse Gram matrix over a mesh sweep.
    Decay(Params),
    /// Lebesgue constants over random meshes.
    Lebesgue(Params),
    /// Projection coefficients and sup error of a named function.
    Project(Params),
    /// Sup error against mesh size.
    Converge(Params),
    /// Ratios |P f| / M_S f for random step functions.
    Dominate(Params),
    /// Weak-type ratios of the strong maximal function.
    Weaktype(Params),
    /// Bohr decomposition and the properties of psi.
    Bohr(Params),
    /// Divergence curve of the Saks partial sums.
    Saks(Params),
    /// Remez constant estimates.
    Remez(Params),
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

/// Parameters shared by the subcommands; each uses the ones it needs.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    /// Mesh families: uniform, random, geometric.
    #[arg(long, value_delimiter = ',')]
    mesh: Option<Vec<String>>,
    /// Spline orders (one per axis, or one for all).
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    k: Option<Vec<usize>>,
    /// Basis function counts (sweep values or per axis).
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    n: Option<Vec<usize>>,
    /// Cell ratio of geometric meshes.
    #[arg(long)]
    ratio: Option<f64>,
    /// Dimension.
    #[arg(long, value_parser = positive)]
    d: Option<usize>,
    /// Named function: const, x, xy, x2, sin2pi, runge, abs.
    #[arg(long)]
    f: Option<String>,
    /// Number of random meshes.
    #[arg(long, value_parser = positive)]
    meshes: Option<usize>,
    /// Number of random step functions.
    #[arg(long, value_parser = positive)]
    functions: Option<usize>,
    /// Cells per axis of random step functions.
    #[arg(long, value_parser = positive)]
    cells: Option<usize>,
    /// Sample points.
    #[arg(long, value_parser = positive)]
    points: Option<usize>,
    /// Sample points per cell for Lebesgue functions.
    #[arg(long, value_parser = positive)]
    density: Option<usize>,
    /// Grid resolution per axis.
    #[arg(long, value_parser = positive)]
    resolution: Option<usize>,
    /// Levels λ.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Power of the logarithm in the weak-type right side.
    #[arg(long)]
    log_power: Option<usize>,
    /// Amplitudes α.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Rectangles checked exhaustively before sampling.
    #[arg(long, value_parser = positive)]
    budget: Option<usize>,
    /// Random rectangles checked beyond the budget.
    #[arg(long)]
    samples: Option<usize>,
    /// Saks levels n_max.
    #[arg(long, value_parser = positive)]
    levels: Option<usize>,
    /// Polynomial orders (k1,k2) of the local projections.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    orders: Option<Vec<usize>>,
    /// Measure fraction ρ.
    #[arg(long)]
    rho: Option<f64>,
    /// Random trials per degree.
    #[arg(long, value_parser = positive)]
    trials: Option<usize>,
    /// Saks schedule (config file only).
    #[arg(skip)]
    schedule: Option<SaksSchedule>,
    #[arg(skip)]
    #[serde(default)]
    seed: Option<u64>,
    #[arg(skip)]
    #[serde(default)]
    out: Option<PathBuf>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($f:ident),*) => {
        $( if $flags.$f.is_none() { $flags.$f = $file.$f.take(); } )*
    };
}

impl Params {
    fn merge(mut self, mut file: Params) -> Params {
        overlay!(self, file; mesh, k, n, ratio, d, f, meshes, functions, cells, points, density, resolution,
            lambdas, log_power, alpha, budget, samples, levels, orders, rho, trials, schedule, seed, out);
        self
    }
}

enum Failure {
    Usage(String),
    Run(Value),
}

impl From<splinelab::Error> for Failure {
    fn from(e: splinelab::Error) -> Self {
        Failure::Run(json!({"error": e.to_string()}))
    }
}

type Outcome = Result<Value, Failure>;

struct Ctx {
    out: PathBuf,
    seed: u64,
    name: &'static str,
    failures: Vec<String>,
}

impl Ctx {
    fn write(&self, file: &str, body: &str) -> Result<(), Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::Run(json!({"error": format!("{}: {e}", self.out.display())})))?;
        let path = self.out.join(file);
        fs::write(&path, body).map_err(|e| Failure::Run(json!({"error": format!("{}: {e}", path.display())})))
    }

    fn write_json(&self, file: &str, v: &Value) -> Result<(), Failure> {
        self.write(file, &(serde_json::to_string_pretty(v).expect("serializable") + "\n"))
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

fn kinds(p: &Params, default: &str) -> Result<Vec<MeshKind>, Failure> {
    p.mesh
        .clone()
        .unwrap_or_else(|| vec![default.to_string()])
        .iter()
        .map(|s| s.parse().map_err(|_| Failure::Usage(format!("--mesh: unknown mesh kind '{s}'"))))
        .collect()
}

fn per_axis(v: &[usize], d: usize, flag: &str) -> Result<Vec<usize>, Failure> {
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        l if l == d => Ok(v.to_vec()),
        l => Err(Failure::Usage(format!("--{flag}: expected 1 or {d} values, got {l}"))),
    }
}

fn tensor_mesh(kind: MeshKind, n: &[usize], k: &[usize], ratio: f64, seed: u64) -> Result<TensorMesh, Failure> {
    let axes = n
        .iter()
        .zip(k)
        .enumerate()
        .map(|(mu, (&n, &k))| generate_mesh(kind, n, k, ratio, seed.wrapping_add(mu as u64)))
        .collect::<splinelab::Result<Vec<KnotVector>>>()?;
    Ok(TensorMesh::new(axes)?)
}

fn decay(ctx: &mut Ctx, p: &Params) -> Outcome {
    let ks = p.k.clone().unwrap_or(vec![2]);
    let ns = p.n.clone().unwrap_or(vec![100]);
    let ratio = p.ratio.unwrap_or(2.0);
    let mut summary = String::from("mesh,k,n,gamma_hat,k_hat\n");
    let mut detail = String::from("mesh,k,n,r,m_r,fitted\n");
    let mut rows = Vec::new();
    for kind in kinds(p, "uniform")? {
        for &k in &ks {
            for &n in &ns {
                let kv = generate_mesh(kind, n, k, ratio, ctx.seed)?;
                let fit = fit_decay(&kv)?;
                let name = format!("{kind:?}").to_lowercase();
                summary.push_str(&format!("{name},{k},{n},{},{}\n", fit.gamma_hat, fit.k_hat));
                for (r, m) in fit.maxima.iter().enumerate() {
                    detail.push_str(&format!("{name},{k},{n},{r},{m:e},{:e}\n", fit.envelope(r)));
                }
                ctx.check(fit.gamma_hat < 1.0, format!("gamma_hat {} >= 1 for {name} k={k} n={n}", fit.gamma_hat));
                rows.push(json!({"mesh": name, "k": k, "n": n, "gamma_hat": fit.gamma_hat, "k_hat": fit.k_hat}));
            }
        }
    }
    ctx.write("decay.csv", &summary)?;
    ctx.write("decay_maxima.csv", &detail)?;
    Ok(json!({"fits": rows}))
}

fn lebesgue(ctx: &mut Ctx, p: &Params) -> Outcome {
    let d = p.d.unwrap_or(1);
    let ks = p.k.clone().unwrap_or(vec![2]);
    let ns = p.n.clone().unwrap_or(vec![50]);
    let meshes = p.meshes.unwrap_or(10);
    let density = p.density.unwrap_or(8);
    let ratio = p.ratio.unwrap_or(2.0);
    let mut csv = String::from("k,n,mesh,lambda\n");
    let mut rows = Vec::new();
    for kind in kinds(p, "random")? {
        for &k in &ks {
            for &n in &ns {
                let mut values = Vec::new();
                for m in 0..meshes {
                    let mesh = tensor_mesh(kind, &vec![n; d], &vec![k; d], ratio, ctx.seed.wrapping_add(1000 * m as u64))?;
                    let rep = lebesgue_constant(&mesh, density.max(2))?;
                    csv.push_str(&format!("{k},{n},{m},{}\n", rep.lambda));
                    values.push(rep.lambda);
                }
                let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
                ctx.check(lo >= 1.0 - 1e-10, format!("Lebesgue constant {lo} below 1 for k={k} n={n}"));
                ctx.check(hi / lo <= 2.0, format!("max/min {} > 2 for k={k} n={n}", hi / lo));
                if k == 1 {
                    ctx.check((hi - 1.0).abs() <= 1e-10 && (lo - 1.0).abs() <= 1e-10, "k = 1 must give 1");
                }
                rows.push(json!({"k": k, "n": n, "min": lo, "max": hi}));
            }
        }
    }
    ctx.write("lebesgue.csv", &csv)?;
    Ok(json!({"sweeps": rows}))
}

fn function_mesh(ctx: &Ctx, p: &Params, n: usize) -> Result<TensorMesh, Failure> {
    let d = p.d.unwrap_or(2);
    let k = per_axis(&p.k.clone().unwrap_or(vec![2]), d, "k")?;
    let kind = kinds(p, "uniform")?[0];
    let n = vec![n; d];
    let n: Vec<usize> = n.iter().zip(&k).map(|(&n, &k)| n.max(k)).collect();
    tensor_mesh(kind, &n, &k, p.ratio.unwrap_or(2.0), ctx.seed)
}

fn project(ctx: &mut Ctx, p: &Params) -> Outcome {
    let d = p.d.unwrap_or(2);
    let name = p.f.clone().unwrap_or("sin2pi".into());
    let f = named_field(&name, d).map_err(|e| Failure::Usage(format!("--f: {e}")))?;
    let n = p.n.clone().unwrap_or(vec![20]);
    let mesh = if n.len() == 1 {
        function_mesh(ctx, p, n[0])?
    } else {
        let k = per_axis(&p.k.clone().unwrap_or(vec![2]), d, "k")?;
        let n = per_axis(&n, d, "n")?;
        tensor_mesh(kinds(p, "uniform")?[0], &n, &k, p.ratio.unwrap_or(2.0), ctx.seed)?
    };
    let proj = Projector::new(mesh.clone());
    let c: TensorCoeffs = proj.project(&f, QuadratureSpec::for_mesh(&mesh))?;
    let err = sup_error(&mesh, &f, p.points.unwrap_or(2000), ctx.seed)?;
    ctx.check(err.is_finite(), "sup error is not finite");
    ctx.write_json("project.json", &json!({"f": name, "shape": mesh.shape(), "coeffs": c.to_json(), "sup_error": err}))?;
    Ok(json!({"f": name, "shape": mesh.shape(), "sup_error": err}))
}

fn converge(ctx: &mut Ctx, p: &Params) -> Outcome {
    let d = p.d.unwrap_or(2);
    let name = p.f.clone().unwrap_or("sin2pi".into());
    let f = named_field(&name, d).map_err(|e| Failure::Usage(format!("--f: {e}")))?;
    let ns = p.n.clone().unwrap_or(vec![10, 20, 40, 80]);
    let mut csv = String::from("n,diameter,sup_error,ratio\n");
    let mut prev: Option<f64> = None;
    let mut rows = Vec::new();
    for &n in &ns {
        let mesh = function_mesh(ctx, p, n)?;
        let err = sup_error(&mesh, &f, p.points.unwrap_or(2000), ctx.seed)?;
        let ratio = prev.map_or(f64::NAN, |e| err / e);
        if let Some(e) = prev {
            ctx.check(err < e, format!("sup error did not decrease at n = {n}: {e} -> {err}"));
        }
        csv.push_str(&format!("{n},{},{err},{}\n", mesh.diameter(), if ratio.is_nan() { String::new() } else { ratio.to_string() }));
        rows.push(json!({"n": n, "diameter": mesh.diameter(), "sup_error": err}));
        prev = Some(err);
    }
    ctx.write("converge.csv", &csv)?;
    Ok(json!({"f": name, "rows": rows}))
}

fn dominate(ctx: &mut Ctx, p: &Params) -> Outcome {
    let d = p.d.unwrap_or(2);
    let ns = p.n.clone().unwrap_or(vec![10, 20, 40]);
    let functions = p.functions.unwrap_or(5);
    let cells = p.cells.unwrap_or(4);
    let pts = sample_points(d, p.points.unwrap_or(100), ctx.seed);
    let mut csv = String::from("n,function,max_ratio\n");
    let mut per_n = Vec::new();
    for &n in &ns {
        let mesh = {
            let k = per_axis(&p.k.clone().unwrap_or(vec![2]), d, "k")?;
            let n: Vec<usize> = k.iter().map(|&k| n.max(k)).collect();
            tensor_mesh(kinds(p, "random")?[0], &n, &k, p.ratio.unwrap_or(2.0), ctx.seed)?
        };
        let proj = Projector::new(mesh);
        let mut worst = 0.0f64;
        for i in 0..functions {
            let f = StepFunction::random(d, cells, -2.0, 3.0, ctx.seed.wrapping_add(i as u64))?;
            let rep = domination_ratio(&proj, &f, &pts)?;
            ctx.check(rep.max_ratio.is_finite(), format!("non-finite ratio for function {i} at n = {n}"));
            csv.push_str(&format!("{n},{i},{}\n", rep.max_ratio));
            worst = worst.max(rep.max_ratio);
        }
        per_n.push(json!({"n": n, "max_ratio": worst}));
    }
    ctx.write("dominate.csv", &csv)?;
    Ok(json!({"per_n": per_n}))
}

fn weaktype(ctx: &mut Ctx, p: &Params) -> Outcome {
    let lambdas = p.lambdas.clone().unwrap_or(vec![0.5, 1.0, 2.0, 4.0]);
    let mut csv = String::from("function,lambda,measure,rhs,ratio\n");
    let mut rows = Vec::new();
    let mut run = |ctx: &mut Ctx, label: String, f: StepFunction| -> Result<(), Failure> {
        let d = f.dim();
        let res = p.resolution.unwrap_or(default_resolution(d));
        let rep = weak_type_ratio_with(&f, &lambdas, res, p.log_power.unwrap_or(d - 1))?;
        for i in 0..rep.lambdas.len() {
            csv.push_str(&format!("{label},{},{},{},{}\n", rep.lambdas[i], rep.measured[i], rep.rhs[i], rep.ratios[i]));
        }
        ctx.check(rep.max_ratio.is_finite(), format!("non-finite weak-type ratio for {label}"));
        rows.push(json!({"function": label, "max_ratio": rep.max_ratio, "resolution": rep.resolution}));
        Ok(())
    };
    match &p.alpha {
        Some(alphas) => {
            for &a in alphas {
                let dec = bohr_decompose(&Rectangle::unit(2), a)?;
                let f = build_psi(&dec, 20_000)?.to_step(1 << 22)?;
                run(ctx, format!("psi{a}"), f)?;
            }
        }
        None => {
            let d = p.d.unwrap_or(2);
            for i in 0..p.functions.unwrap_or(3) {
                let f = StepFunction::random(d, p.cells.unwrap_or(4), 0.0, 4.0, ctx.seed.wrapping_add(i as u64))?;
                run(ctx, format!("random{i}"), f)?;
            }
        }
    }
    ctx.write("weaktype.csv", &csv)?;
    Ok(json!({"rows": rows}))
}

fn bohr(ctx: &mut Ctx, p: &Params) -> Outcome {
    let alphas = p.alpha.clone().unwrap_or(vec![5.0]);
    let budget = p.budget.unwrap_or(20_000);
    let mut items = Vec::new();
    let mut summary = Vec::new();
    for &a in &alphas {
        if !(a > 1.0) {
            return Err(Failure::Usage(format!("--alpha must exceed 1, got {a}")));
        }
        let dec = bohr_decompose(&Rectangle::unit(2), a)?;
        let psi = build_psi(&dec, budget).ok();
        let rep = verify_psi(&dec, psi.as_ref(), budget as u64, p.samples.unwrap_or(500), ctx.seed);
        ctx.check(rep.all_pass, format!("psi properties fail for alpha = {a}"));
        let report = serde_json::to_value(&rep).expect("serializable");
        items.push(json!({"decomposition": dec.to_json(budget), "report": report}));
        summary.push(json!({"alpha": a, "all_pass": rep.all_pass, "orlicz_ratio": rep.orlicz_ratio, "min_slack": rep.min_slack}));
    }
    ctx.write_json("bohr.json", &Value::Array(items))?;
    Ok(json!({"alphas": summary}))
}

fn saks(ctx: &mut Ctx, p: &Params) -> Outcome {
    let levels = p.levels.unwrap_or(3);
    let sched = p.schedule.clone().unwrap_or_else(|| SaksSchedule::default_levels(levels));
    if levels > sched.n_max() {
        return Err(Failure::Usage(format!("--levels {levels} exceeds the schedule's {} levels", sched.n_max())));
    }
    let orders = p.orders.clone().unwrap_or(vec![2, 2]);
    if orders.len() != 2 {
        return Err(Failure::Usage("--orders takes two values k1,k2".into()));
    }
    let pts: Vec<[f64; 2]> = sample_points(2, p.points.unwrap_or(200), ctx.seed).iter().map(|x| [x[0], x[1]]).collect();
    let rep = divergence_curve(&sched, (orders[0], orders[1]), &pts, levels, p.resolution.unwrap_or(128))?;
    for l in &rep.levels {
        ctx.check(l.b_measure > 0.0, format!("|B_{}| is zero", l.level));
    }
    for w in rep.levels.windows(2) {
        ctx.check(w[1].median_growth > w[0].median_growth, format!("median growth not increasing at level {}", w[1].level));
    }
    let phi = build_saks_partial(&sched, levels)?;
    let mut per_n = Vec::new();
    for n in 1..=levels {
        let phi_n = phi.prefix(n);
        let (count, min) = phi_n.check_averages();
        ctx.check(min >= 1.0 - 1e-12, format!("average check fails at n = {n}: {min}"));
        per_n.push(json!({"n": n, "rectangles": count, "min_average_ratio": min, "orlicz": phi_n.orlicz_integral(), "integral": phi_n.integral()}));
    }
    ctx.write("saks.csv", &rep.to_csv())?;
    let mut report = serde_json::to_value(&rep).expect("serializable");
    report["partial_sums"] = Value::Array(per_n.clone());
    ctx.write_json("saks.json", &report)?;
    Ok(json!({"levels": serde_json::to_value(&rep.levels).expect("serializable"), "partial_sums": per_n}))
}

fn remez(ctx: &mut Ctx, p: &Params) -> Outcome {
    let ks = p.k.clone().unwrap_or(vec![2]);
    let rho = p.rho.unwrap_or(0.5);
    let trials = p.trials.unwrap_or(10_000);
    let mut items = Vec::new();
    for &k in &ks {
        let est = estimate_remez(k, rho, trials, ctx.seed).map_err(|e| Failure::Usage(e.to_string()))?;
        ctx.check(est.constant >= 1.0, format!("constant below 1 for k = {k}"));
        items.push(serde_json::to_value(&est).expect("serializable"));
    }
    let v = Value::Array(items);
    ctx.write_json("remez.json", &v)?;
    Ok(json!({"estimates": v}))
}

fn load_config(path: &Path) -> Result<Params, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))
}

fn validate(p: &Params) -> Result<(), Failure> {
    let check_pos = |name: &str, v: &Option<Vec<usize>>| match v {
        Some(v) if v.contains(&0) => Err(Failure::Usage(format!("{name}: values must be at least 1"))),
        _ => Ok(()),
    };
    check_pos("k", &p.k)?;
    check_pos("n", &p.n)?;
    check_pos("orders", &p.orders)?;
    for (name, v) in [("d", p.d), ("levels", p.levels), ("points", p.points), ("resolution", p.resolution), ("trials", p.trials)] {
        if v == Some(0) {
            return Err(Failure::Usage(format!("{name}: must be at least 1")));
        }
    }
    if let Some(r) = p.rho {
        if !(r > 0.0 && r < 1.0) {
            return Err(Failure::Usage(format!("rho: must lie in (0, 1), got {r}")));
        }
    }
    if let Some(l) = &p.lambdas {
        if l.iter().any(|v| !(*v > 0.0)) {
            return Err(Failure::Usage("lambdas: must be positive".into()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match cli.command {
        Command::Decay(p) => ("decay", p),
        Command::Lebesgue(p) => ("lebesgue", p),
        Command::Project(p) => ("project", p),
        Command::Converge(p) => ("converge", p),
        Command::Dominate(p) => ("dominate", p),
        Command::Weaktype(p) => ("weaktype", p),
        Command::Bohr(p) => ("bohr", p),
        Command::Saks(p) => ("saks", p),
        Command::Remez(p) => ("remez", p),
    };
    let result = (|| {
        let file = match &cli.config {
            Some(path) => load_config(path)?,
            None => Params::default(),
        };
        let params = Params { seed: cli.seed, out: cli.out.clone(), ..flags }.merge(file);
        validate(&params)?;
        let out = params
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let mut ctx = Ctx { out, seed: params.seed.unwrap_or(DEFAULT_SEED), name, failures: Vec::new() };
        let summary = match name {
            "decay" => decay(&mut ctx, &params),
            "lebesgue" => lebesgue(&mut ctx, &params),
            "project" => project(&mut ctx, &params),
            "converge" => converge(&mut ctx, &params),
            "dominate" => dominate(&mut ctx, &params),
            "weaktype" => weaktype(&mut ctx, &params),
            "bohr" => bohr(&mut ctx, &params),
            "saks" => saks(&mut ctx, &params),
            _ => remez(&mut ctx, &params),
        }?;
        Ok((ctx, summary))
    })();
    match result {
        Ok((ctx, summary)) => {
            let pass = ctx.failures.is_empty();
            let record = json!({"subcommand": ctx.name, "seed": ctx.seed, "pass": pass, "failures": ctx.failures, "summary": summary});
            println!("{}", serde_json::to_string_pretty(&record).expect("serializable"));
            if pass {
                ExitCode::SUCCESS
            } else {
                let _ = ctx.write_json("failure.json", &record);
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(detail)) => {
            let record = json!({"subcommand": name, "pass": false, "failures": [detail]});
            println!("{}", serde_json::to_string_pretty(&record).expect("serializable"));
            ExitCode::from(1)
        }
    }
}
