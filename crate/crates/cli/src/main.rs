use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use varem::action::{action_report, evaluate_action, ActionForm, ActionOptions};
use varem::io::{self, BoundarySpec, Method, ProblemConfig, SolverConfig, TrajectoryFile, TrajectorySource};
use varem::solver::{
    criticality_report, find_circular_orbit, minimize_action, shoot_shortest_boundary, CriticalityReport,
    Discretization, MinimizeOptions, OrbitOptions, ReportOptions, ShootingOptions,
};
use varem::{BoundaryData, LightConeOptions, Trajectory, Worldline};

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_RUNTIME: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "varem", version, about = "Two-body action-at-a-distance electrodynamics: solve, verify, orbits, action evaluation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Quadrature tolerance for action integrals.
    #[arg(long, global = true, env = "VAREM_QUAD_TOL")]
    quad_tol: Option<f64>,
    /// Gradient-norm tolerance of the minimizer.
    #[arg(long, global = true, env = "VAREM_GTOL")]
    gtol: Option<f64>,
    /// Segments per particle.
    #[arg(long, global = true, env = "VAREM_NODES")]
    nodes: Option<usize>,
    /// Minimum admissible separation of the particles.
    #[arg(long, global = true, env = "VAREM_RMIN")]
    rmin: Option<f64>,
    /// Seed for the directions of seeded corners.
    #[arg(long, global = true, env = "VAREM_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "VAREM_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "VAREM_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the boundary-value problem of a problem file.
    Solve {
        config: PathBuf,
    },
    /// Residual report for a pair of trajectory files.
    Verify {
        traj1: PathBuf,
        traj2: PathBuf,
        /// Problem file supplying masses and boundary data.
        #[arg(long)]
        config: PathBuf,
        /// Threshold for every residual.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Circular orbit at separation `ell`, with trajectory files and a problem file.
    Orbit {
        ell: f64,
        m1: f64,
        m2: f64,
        /// Free range of particle 1 in units of the light delay.
        #[arg(long, default_value_t = 3.0)]
        delays: f64,
    },
    /// Action breakdown of a pair of trajectory files.
    Eval {
        traj1: PathBuf,
        traj2: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Form::Both)]
        form: Form,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Form {
    #[value(name = "aFokker", alias = "afokker")]
    AFokker,
    #[value(name = "L2", alias = "l2")]
    L2,
    Both,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<varem::Error>() {
            Some(varem::Error::Format(_)) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Self { code, error }
    }
}

impl From<varem::Error> for Failure {
    fn from(e: varem::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Solve { config } => cmd_solve(&cli.common, config),
        Command::Verify { traj1, traj2, config, tol } => cmd_verify(&cli.common, traj1, traj2, config, *tol),
        Command::Orbit { ell, m1, m2, delays } => cmd_orbit(&cli.common, *ell, [*m1, *m2], *delays),
        Command::Eval { traj1, traj2, config, form } => cmd_eval(&cli.common, traj1, traj2, config, *form),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(common: &Common, path: &Path) -> Result<(ProblemConfig, PathBuf), Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    let mut cfg = ProblemConfig::from_json(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)?;
    apply_overrides(&mut cfg.solver, common);
    cfg.validate().context("after command-line overrides").map_err(usage)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn apply_overrides(s: &mut SolverConfig, c: &Common) {
    if let Some(v) = c.quad_tol {
        s.quad_tol = v;
    }
    if let Some(v) = c.gtol {
        s.gtol = v;
    }
    if let Some(v) = c.nodes {
        s.nodes = [v, v];
    }
    if let Some(v) = c.rmin {
        s.r_min = v;
    }
    if let Some(v) = c.seed {
        s.seed = v;
    }
}

fn cone(s: &SolverConfig) -> LightConeOptions<f64> {
    LightConeOptions { r_min: s.r_min, ..LightConeOptions::default() }
}

fn action_options(s: &SolverConfig) -> ActionOptions<f64> {
    let mut a = ActionOptions::default().with_quad_tol(s.quad_tol);
    a.cone = cone(s);
    a
}

fn report_options(s: &SolverConfig) -> ReportOptions {
    ReportOptions { action: action_options(s), ..ReportOptions::default() }
}

fn out_dir(common: &Common, cfg: Option<&ProblemConfig>, base: &Path) -> anyhow::Result<PathBuf> {
    let dir = match (&common.out, cfg.and_then(|c| c.output.as_ref())) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => base.join(d),
        (None, None) => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_solution(
    dir: &Path,
    traj1: &Trajectory<f64>,
    traj2: &Trajectory<f64>,
    boundary: &BoundaryData<f64>,
    s: &SolverConfig,
) -> anyhow::Result<()> {
    write(dir, "traj1.json", &io::trajectory_to_json(traj1))?;
    write(dir, "traj2.json", &io::trajectory_to_json(traj2))?;
    write(dir, "traj1.csv", &io::trajectory_csv(traj1))?;
    write(dir, "traj2.csv", &io::trajectory_csv(traj2))?;
    let series = io::series_csv(traj1, traj2, boundary, s.series_samples, &cone(s))?;
    write(dir, "series.csv", &series)
}

#[derive(Serialize)]
struct SolveSummary {
    method: Method,
    converged: bool,
    iterations: usize,
    gradient_norm: Option<f64>,
    endpoint_miss: Option<[f64; 2]>,
    report: CriticalityReport,
}

fn cmd_solve(common: &Common, config: &Path) -> Outcome {
    let (cfg, base) = load_config(common, config)?;
    let s = &cfg.solver;
    let boundary = cfg.boundary(&base).context("boundary data")?;
    let dir = out_dir(common, Some(&cfg), &base)?;
    let (traj1, traj2, converged, iterations, gradient_norm, endpoint_miss) = match s.method {
        Method::Minimize => {
            let disc = Discretization::uniform(&boundary, s.nodes)?;
            let mut opts = MinimizeOptions::from_action(&action_options(s));
            opts.lbfgs.gtol = s.gtol;
            opts.lbfgs.max_iter = s.max_iter;
            opts.corner_seed = s.corner_seed;
            opts.seed = s.seed;
            let initial = cfg.initial(&base).context("initial guess")?;
            let init = initial.as_ref().map(|[a, b]| (a as &dyn Worldline<f64>, b as &dyn Worldline<f64>));
            let out = minimize_action(&boundary, &disc, init, &opts).context("minimizing the action")?;
            (out.traj1, out.traj2, out.converged, out.iterations, Some(out.gradient_norm), None)
        }
        Method::Shoot => {
            let opts = ShootingOptions { steps: s.steps, cone: cone(s), ..ShootingOptions::default() };
            match shoot_shortest_boundary(&boundary, &opts) {
                Ok(out) => (out.traj1, out.traj2, true, out.picard_iterations, None, Some(out.endpoint_miss)),
                Err(e @ (varem::Error::ShootingDivergence(_) | varem::Error::NewtonFailure(_))) => {
                    eprintln!("not converged: {e}");
                    return Ok(EXIT_NOT_CONVERGED);
                }
                Err(e) => return Err(anyhow::Error::from(e).context("shooting").into()),
            }
        }
    };
    write_solution(&dir, &traj1, &traj2, &boundary, s)?;
    let report = criticality_report(&traj1, &traj2, &boundary, &report_options(s)).context("criticality report")?;
    let summary = SolveSummary { method: s.method, converged, iterations, gradient_norm, endpoint_miss, report };
    let json = io::to_json(&summary);
    write(&dir, "report.json", &json)?;
    println!("{json}");
    Ok(if converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn load_pair(traj1: &Path, traj2: &Path) -> Result<(Trajectory<f64>, Trajectory<f64>), Failure> {
    let a = io::read_trajectory(traj1)?;
    let b = io::read_trajectory(traj2)?;
    Ok((a, b))
}

fn cmd_verify(common: &Common, traj1: &Path, traj2: &Path, config: &Path, tol: f64) -> Outcome {
    if !(tol > 0.0) {
        return Err(usage(anyhow::anyhow!("--tol must be positive")));
    }
    let (cfg, base) = load_config(common, config)?;
    let (t1, t2) = load_pair(traj1, traj2)?;
    let boundary = cfg.boundary(&base).context("boundary data")?;
    boundary.check_paths(&t1, &t2).context("trajectory files")?;
    let report = criticality_report(&t1, &t2, &boundary, &report_options(&cfg.solver)).context("criticality report")?;
    let json = io::to_json(&report);
    if common.out.is_some() || cfg.output.is_some() {
        write(&out_dir(common, Some(&cfg), &base)?, "report.json", &json)?;
    }
    println!("{json}");
    let worst = [report.max_el_residual, report.max_dp, report.max_de, report.max_lightcone_residual];
    let failing: Vec<_> = ["max_el_residual", "max_dp", "max_de", "max_lightcone_residual"]
        .iter()
        .zip(worst)
        .filter(|(_, v)| !(*v < tol))
        .map(|(n, v)| format!("{n} = {v:e}"))
        .collect();
    if failing.is_empty() {
        Ok(0)
    } else {
        eprintln!("not critical at tolerance {tol:e}: {}", failing.join(", "));
        Ok(EXIT_VERIFY_FAILED)
    }
}

#[derive(Serialize)]
struct OrbitSummary {
    separation: f64,
    masses: [f64; 2],
    omega: f64,
    radii: [f64; 2],
    speeds: [f64; 2],
    kepler_ratio: f64,
    delay: f64,
    el_residual: f64,
}

fn cmd_orbit(common: &Common, ell: f64, masses: [f64; 2], delays: f64) -> Outcome {
    let rmin = common.rmin.unwrap_or(SolverConfig::default().r_min);
    if !(ell > rmin) || !(ell.is_finite()) {
        return Err(usage(anyhow::anyhow!("separation {ell} must exceed r_min = {rmin}")));
    }
    if !(masses[0] > 0.0 && masses[1] > 0.0) {
        return Err(usage(anyhow::anyhow!("masses must be positive")));
    }
    if !(delays > 0.0) {
        return Err(usage(anyhow::anyhow!("--delays must be positive")));
    }
    let solver = SolverConfig {
        r_min: rmin,
        quad_tol: common.quad_tol.unwrap_or(SolverConfig::default().quad_tol),
        gtol: common.gtol.unwrap_or(SolverConfig::default().gtol),
        seed: common.seed.unwrap_or(0),
        ..SolverConfig::default()
    };
    let opts = OrbitOptions { cone: cone(&solver), ..OrbitOptions::default() };
    let orbit = find_circular_orbit(ell, masses, &opts).context("circular orbit")?;
    let tau = orbit.delay()?;
    let t_l2 = delays * tau;
    // The full paths cover every range the boundary data can reach.
    let (lo, hi) = (-2.0 * tau, t_l2 + 2.0 * tau);
    let (w1, w2) = orbit.worldlines(lo - tau, hi + tau);
    let samples = ((hi - lo) / tau * 64.0).ceil() as usize;
    let grid: Vec<f64> = (0..=samples).map(|k| lo + (hi - lo) * k as f64 / samples as f64).collect();
    let traj1 = Trajectory::sample(&w1, &grid)?;
    let traj2 = Trajectory::sample(&w2, &grid)?;
    let boundary = BoundaryData::from_worldlines(&w1, &w2, 0.0, t_l2, masses, 64, &cone(&solver))?;
    let segments = common.nodes.unwrap_or_else(|| {
        let tm = boundary.times();
        ((tm.l2_minus - tm.o1) / tau * 16.0).ceil().max(2.0) as usize
    });
    let dir = out_dir(common, None, Path::new("."))?;
    write(&dir, "traj1.json", &io::trajectory_to_json(&traj1))?;
    write(&dir, "traj2.json", &io::trajectory_to_json(&traj2))?;
    let problem = ProblemConfig {
        masses,
        boundary: BoundarySpec::Explicit {
            t_o1: boundary.t_o1,
            o1: [boundary.o1.x, boundary.o1.y, boundary.o1.z],
            t_l2: boundary.t_l2,
            l2: [boundary.l2.x, boundary.l2.y, boundary.l2.z],
            past_segment: TrajectorySource::Inline(TrajectoryFile::from(&boundary.past_segment)),
            future_segment: TrajectorySource::Inline(TrajectoryFile::from(&boundary.future_segment)),
        },
        solver: SolverConfig { nodes: [segments, segments], ..solver },
        initial: None,
        output: None,
    };
    write(&dir, "problem.json", &problem.to_json())?;
    let summary = OrbitSummary {
        separation: orbit.separation,
        masses,
        omega: orbit.omega,
        radii: orbit.radii,
        speeds: orbit.speeds(),
        kepler_ratio: orbit.kepler_ratio(),
        delay: tau,
        el_residual: orbit.el_residual,
    };
    let json = io::to_json(&summary);
    write(&dir, "orbit.json", &json)?;
    println!("{json}");
    Ok(0)
}

fn cmd_eval(common: &Common, traj1: &Path, traj2: &Path, config: &Path, form: Form) -> Outcome {
    let (cfg, base) = load_config(common, config)?;
    let (t1, t2) = load_pair(traj1, traj2)?;
    let boundary = cfg.boundary(&base).context("boundary data")?;
    let opts = action_options(&cfg.solver);
    let json = match form {
        Form::AFokker => io::to_json(&evaluate_action(&t1, &t2, &boundary, ActionForm::AFokker, &opts)?),
        Form::L2 => io::to_json(&evaluate_action(&t1, &t2, &boundary, ActionForm::L2, &opts)?),
        Form::Both => io::to_json(&action_report(&t1, &t2, &boundary, &opts)?),
    };
    println!("{json}");
    Ok(0)
}
