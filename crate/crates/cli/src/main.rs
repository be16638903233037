use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nspg::bump::TestBump;
use nspg::decay::{cond_a_sweep, cond_b_sweep, cond_c_sweep, data_sweep, implication_matrix, DecayConfig};
use nspg::drift::{drift_record, normalize, DriftConfig};
use nspg::fields::{sample, AnalyticField, TimeGrid, VField};
use nspg::io::{read_field, sidecar_for, write_field, Generated, RunConfig};
use nspg::pressure::{expansion_at_points, local_expansion_u};
use nspg::verify::{run_suite, Suite};
use nspg::BallSpec;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nspg", version, about = "Ball-localized pressure expansions, drift removal and decay diagnostics")]
struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a named generator on a grid and write a field file with sidecar
    GenerateField(GenerateArgs),
    /// Local pressure expansion of a velocity field on a ball
    PressureExpand(ExpandArgs),
    /// Drift record φ, Φ and the five functional terms as CSV
    ExtractDrift(DriftArgs),
    /// Remove the extracted drift and write the normalized field
    Normalize(NormalizeArgs),
    /// Decay-condition sweep with scaling fit and verdict
    DecayReport(DecayArgs),
    /// Verdicts on the counterexample fields and the implication statements
    ImplicationMatrix(OutArgs),
    /// Run the invariant suite
    Verify(VerifyArgs),
}

#[derive(Args)]
struct FieldSource {
    /// field file written by generate-field
    #[arg(long, conflicts_with = "name")]
    field: Option<PathBuf>,
    /// generator name (overrides generator.name)
    #[arg(long)]
    name: Option<String>,
    /// viscosity for taylor-green generators
    #[arg(long)]
    nu: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    src: FieldSource,
    /// nodes per axis
    #[arg(long)]
    grid: Option<usize>,
    /// time samples
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExpandArgs {
    #[command(flatten)]
    src: FieldSource,
    /// ball centre as x,y,z
    #[arg(long, value_parser = parse_vec3)]
    center: Option<[f64; 3]>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// expansion on the ball's lattice as a field file
    #[arg(long)]
    out: Option<PathBuf>,
    /// probe points "x,y,z;x,y,z;..." evaluated pointwise into --probes-out
    #[arg(long)]
    probes: Option<String>,
    #[arg(long)]
    probes_out: Option<PathBuf>,
}

#[derive(Args)]
struct DriftArgs {
    #[command(flatten)]
    src: FieldSource,
    #[arg(long)]
    beta_radius: Option<f64>,
    #[arg(long, value_parser = parse_vec3)]
    beta_center: Option<[f64; 3]>,
    #[arg(long)]
    time_samples: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    drift: DriftArgs,
    /// drift record CSV of the removed drift
    #[arg(long)]
    drift_out: Option<PathBuf>,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    src: FieldSource,
    /// A, B, C or data-A0
    #[arg(long)]
    condition: Option<String>,
    /// comma-separated radii (distances for A)
    #[arg(long, value_delimiter = ',')]
    params: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// all, lemma, harmonic, ns, data or energy
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected 3 comma-separated numbers, got {}", v.len()))
}

fn parse_points(s: &str) -> Result<Vec<[f64; 3]>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(|p| parse_vec3(p).map_err(anyhow::Error::msg)).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

/// Apply generator flags; a field file replaces the generator with its sidecar's.
fn resolve(cfg: &mut RunConfig, src: &FieldSource) -> Result<Generated> {
    if let Some(path) = &src.field {
        let ff = read_field(path).with_context(|| format!("reading {}", path.display()))?;
        let Some(sc) = ff.sidecar else {
            bail!("{} has no sidecar; the generator cannot be reconstructed", path.display());
        };
        if let Some(t) = sc.transform {
            bail!("{} holds a derived field ({t}); it cannot be regenerated", path.display());
        }
        cfg.generator = sc.generator;
    }
    if let Some(n) = &src.name {
        cfg.generator.name = n.clone();
    }
    if let Some(nu) = src.nu {
        cfg.generator.nu = nu;
    }
    cfg.validate()?;
    Ok(cfg.generator.build()?)
}

fn velocity(g: &Generated, what: &str) -> Result<VField> {
    match &g.field {
        AnalyticField::Vector(u) => Ok(u.clone()),
        AnalyticField::Scalar(_) => bail!("{what} needs a velocity field, got a scalar generator"),
    }
}

fn drift_inputs(cfg: &mut RunConfig, a: &DriftArgs) -> Result<(VField, VField, TestBump, TimeGrid, DriftConfig)> {
    let g = resolve(cfg, &a.src)?;
    if let Some(r) = a.beta_radius {
        cfg.drift.beta_radius = r;
    }
    if let Some(c) = a.beta_center {
        cfg.drift.beta_center = c;
    }
    if let Some(n) = a.time_samples {
        cfg.drift.time_samples = n;
    }
    cfg.validate()?;
    let u = velocity(&g, "drift extraction")?;
    let u0 = g.initial.clone().unwrap_or_else(|| u.clone());
    let bump = TestBump::new(cfg.drift.beta_center, cfg.drift.beta_radius)?;
    let times = TimeGrid::new(0.0, cfg.drift.t_end, cfg.drift.time_samples)?;
    let dc = DriftConfig { nu: cfg.drift.nu, pressure: cfg.pressure(), ..Default::default() };
    Ok((u, u0, bump, times, dc))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.cmd {
        Command::GenerateField(a) => {
            let g = resolve(&mut cfg, &a.src)?;
            if let Some(n) = a.grid {
                cfg.grid.n = n;
            }
            if let Some(n) = a.n_t {
                cfg.grid.n_t = n;
            }
            if let Some(t) = a.t_end {
                cfg.grid.t_end = t;
            }
            cfg.validate()?;
            let hash = cfg.hash();
            let f = sample(&g.field, cfg.grid.grid()?, cfg.grid.times()?)?;
            write_field(&a.out, &f, Some(&sidecar_for(&cfg.generator, g.field.meta(), &hash)))?;
            println!("wrote {} ({} values), config_hash={hash}", a.out.display(), f.values.len());
        }
        Command::PressureExpand(a) => {
            let g = resolve(&mut cfg, &a.src)?;
            if let Some(c) = a.center {
                cfg.ball.center = c;
            }
            if let Some(r) = a.radius {
                cfg.ball.radius = r;
            }
            cfg.validate()?;
            let hash = cfg.hash();
            let u = velocity(&g, "pressure expansion")?;
            let ball = BallSpec::new(cfg.ball.center, cfg.ball.radius)?;
            if a.out.is_none() && a.probes.is_none() {
                bail!("nothing to do: give --out and/or --probes");
            }
            if let Some(out) = &a.out {
                let exp = local_expansion_u(&u, &ball, &TimeGrid::snapshot(a.t), &cfg.pressure())?;
                let mut total = exp.total()?;
                total.meta.name = format!("pbar[{}]", u.meta().name);
                let mut sc = sidecar_for(&cfg.generator, &total.meta, &hash);
                sc.transform = Some(format!("pressure-expansion(ball={:?},{}; t={})", ball.x0, ball.r, a.t));
                write_field(out, &total, Some(&sc))?;
                println!("wrote {} (far tail bound {:.3e}), config_hash={hash}", out.display(), exp.far_tail_bound);
            }
            if let Some(p) = &a.probes {
                let pts = parse_points(p)?;
                let (vals, tail) = expansion_at_points(&nspg::fields::Quadratic::new(u.clone()), &ball, &pts, a.t, &cfg.pressure())?;
                let path = a.probes_out.clone().unwrap_or_else(|| PathBuf::from("probes.csv"));
                let mut w = create(&path)?;
                writeln!(w, "# config_hash={hash}")?;
                writeln!(w, "# far_tail_bound={tail:.6e}")?;
                writeln!(w, "x,y,z,pbar")?;
                for (x, v) in pts.iter().zip(vals) {
                    writeln!(w, "{:.17e},{:.17e},{:.17e},{v:.17e}", x[0], x[1], x[2])?;
                }
                w.flush()?;
                println!("wrote {}", path.display());
            }
        }
        Command::ExtractDrift(a) => {
            let (u, u0, bump, times, dc) = drift_inputs(&mut cfg, &a)?;
            let hash = cfg.hash();
            let rec = drift_record(&u, &u0, &bump, &times, &dc)?;
            let mut w = create(&a.out)?;
            rec.write_csv(&mut w, Some(&hash))?;
            w.flush()?;
            println!("wrote {}: sup|phi| = {:.6e}, config_hash={hash}", a.out.display(), rec.sup_phi());
        }
        Command::Normalize(a) => {
            let (u, u0, bump, times, dc) = drift_inputs(&mut cfg, &a.drift)?;
            let hash = cfg.hash();
            let n = normalize(&u, &u0, &bump, &times, &dc)?;
            if let Some(p) = &a.drift_out {
                let mut w = create(p)?;
                n.record.write_csv(&mut w, Some(&hash))?;
                w.flush()?;
            }
            let f = sample(&AnalyticField::Vector(n.u.clone()), cfg.grid.grid()?, times)?;
            let mut sc = sidecar_for(&cfg.generator, n.u.meta(), &hash);
            sc.transform = Some(format!("normalized(beta_radius={}, time_samples={})", cfg.drift.beta_radius, cfg.drift.time_samples));
            write_field(&a.drift.out, &f, Some(&sc))?;
            println!("wrote {}: removed sup|phi| = {:.6e}, config_hash={hash}", a.drift.out.display(), n.record.sup_phi());
        }
        Command::DecayReport(a) => {
            let g = resolve(&mut cfg, &a.src)?;
            if let Some(c) = a.condition {
                cfg.sweep.condition = c;
            }
            if let Some(p) = a.params {
                cfg.sweep.params = p;
            }
            cfg.validate()?;
            let hash = cfg.hash();
            let dcfg = DecayConfig { t_end: cfg.sweep.t_end, n_time: cfg.quadrature.decay_time_nodes, ..Default::default() };
            let s = &cfg.sweep;
            let rep = match s.condition.as_str() {
                "A" => cond_a_sweep(&g.field, s.radius, &s.params, &dcfg),
                "B" => cond_b_sweep(&g.field, &s.params, &|_| Vec::new(), &dcfg),
                "C" => cond_c_sweep(&g.field, &s.params, None, &dcfg),
                _ => {
                    let Some(u0) = &g.initial else { bail!("data-A0 needs a velocity generator") };
                    data_sweep(&AnalyticField::Vector(u0.clone()), &s.params, &dcfg)
                }
            };
            let mut w = create(&a.out)?;
            rep.write_csv(&mut w, Some(&hash))?;
            w.flush()?;
            println!("{}", rep.summary());
        }
        Command::ImplicationMatrix(a) => {
            let hash = cfg.hash();
            let dcfg = DecayConfig { n_time: cfg.quadrature.decay_time_nodes, ..Default::default() };
            let m = implication_matrix(&dcfg)?;
            let mut w = create(&a.out)?;
            m.write_csv(&mut w, Some(&hash))?;
            w.flush()?;
            for (s, ok) in &m.bullets {
                println!("{} {s}", if *ok { "reproduced" } else { "NOT reproduced" });
            }
            if !m.all_pass() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Verify(a) => {
            let suite: Suite = a.suite.parse()?;
            let hash = cfg.hash();
            let rep = run_suite(suite)?;
            if let Some(p) = &a.out {
                let mut w = create(p)?;
                rep.write_csv(&mut w, Some(&hash))?;
                w.flush()?;
            }
            print!("{}", rep.summary());
            if !rep.ok() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("NSPG_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: NSPG_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
