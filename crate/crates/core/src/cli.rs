//! Command-line front end. `run` parses arguments and returns the process
//! exit code: 0 success, 1 predicate failure, 2 usage or input error,
//! 3 infeasible construction.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::checks::{sweep_csv, sweep_epsilon, SweepConfig};
use crate::construction::{
    build_full_scene, build_positive_control, build_tangle, build_ten_chain, move_v_into_t, straighten_jag_z, validate_construction,
    ConstructionError, ControlKind, FrameSpec, TangleSpec,
};
use crate::geom::Point;
use crate::planner::{campaign_csv, run_campaign, PlannerConfig};
use crate::scene::Scene;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chainlock", version, about = "Build, check and try to unlock interlocked open chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Tangle,
    TenChain,
    Full,
    ControlTwoVsFour,
    ControlThreeVsThree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mutation {
    /// Put `H` on the extension of side `y-z`.
    StraightenJagZ,
    /// Move `v` just inside the tetrahedron `B, C, D, F`.
    VIntoT,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated scene.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        side: f64,
        #[arg(long, default_value_t = 5.0)]
        leg: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a scene and print every predicate with its margin.
    Check {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the unlock planner for several seeds and write a CSV.
    Unlock {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        seeds: usize,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 0.2)]
        goal_bias: f64,
        #[arg(long)]
        r_sep: Option<f64>,
        /// CSV destination; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Witness of the first separating seed.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Sample |vN| over descending ε values.
    Sweep {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        epsilons: Vec<f64>,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        side: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a scene for viewing.
    Export {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a named perturbation to a scene.
    Mutate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum)]
        kind: Mutation,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError { code: EXIT_USAGE, message: message.into() }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> CliError {
        let code = match e {
            ConstructionError::InfeasibleFrame(_) | ConstructionError::LegsTooShort { .. } | ConstructionError::ThreadingFailed(_) => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        };
        CliError { code, message: e.to_string() }
    }
}

pub fn read_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn scene_json(scene: &Scene) -> String {
    serde_json::to_string_pretty(scene).expect("scene serializes") + "\n"
}

/// Wavefront OBJ: one object per chain, one `v` line per joint and one `l`
/// line per link.
pub fn to_obj(scene: &Scene) -> String {
    let mut out = String::new();
    let p = &scene.provenance;
    writeln!(out, "# chainlock scene").unwrap();
    writeln!(out, "# generator: {}", p.generator).unwrap();
    writeln!(out, "# epsilon: {}", scene.epsilon).unwrap();
    for (k, v) in &p.parameters {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    if let Some(seed) = p.seed {
        writeln!(out, "# seed: {seed}").unwrap();
    }
    let mut base = 0;
    for c in &scene.chains {
        writeln!(out, "o {}", c.name).unwrap();
        for (label, q) in c.labels.iter().zip(&c.joints) {
            writeln!(out, "v {:.11e} {:.11e} {:.11e} # {label}", q.x, q.y, q.z).unwrap();
        }
        for i in 0..c.link_count() {
            writeln!(out, "l {} {}", base + i + 1, base + i + 2).unwrap();
        }
        base += c.joints.len();
    }
    out
}

/// Vertices of an OBJ file, in order.
pub fn obj_vertices(text: &str) -> Result<Vec<Point>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut it = line.split_whitespace();
        if it.next() != Some("v") {
            continue;
        }
        let c: Vec<f64> = it.map(str::parse).collect::<Result<_, _>>().map_err(|e| format!("line {}: {e}", n + 1))?;
        if c.len() < 3 {
            return Err(format!("line {}: vertex needs three coordinates", n + 1));
        }
        out.push(Point::new(c[0], c[1], c[2]));
    }
    Ok(out)
}

fn generate(kind: Kind, epsilon: f64, side: f64, leg: f64) -> Result<Scene, CliError> {
    if !(epsilon > 0.0 && side > 0.0 && leg > 0.0) {
        return Err(usage("--epsilon, --side and --leg must be positive"));
    }
    let scene = match kind {
        Kind::Tangle => build_tangle(&TangleSpec::new(epsilon)),
        Kind::TenChain => build_ten_chain(&FrameSpec::equilateral(side, epsilon))?,
        Kind::Full => build_full_scene(&FrameSpec::equilateral(side, epsilon), leg)?,
        Kind::ControlTwoVsFour => build_positive_control(ControlKind::TwoVsFour),
        Kind::ControlThreeVsThree => build_positive_control(ControlKind::ThreeVsThree),
    };
    let report = validate_construction(&scene);
    if let Some(name) = report.failures().first() {
        return Err(CliError { code: EXIT_INFEASIBLE, message: format!("generated scene fails {name}") });
    }
    Ok(scene)
}

fn execute(cmd: Command, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    match cmd {
        Command::Generate { kind, epsilon, side, leg, out: path } => {
            let scene = generate(kind, epsilon, side, leg)?;
            write_file(&path, &scene_json(&scene))?;
            Ok(EXIT_OK)
        }
        Command::Check { scene, report } => {
            let scene = read_scene(&scene)?;
            let r = validate_construction(&scene);
            for p in &r.predicates {
                writeln!(out, "{}: {} {:.6e}", p.name, if p.passed { "PASS" } else { "FAIL" }, p.margin).ok();
            }
            if let Some(path) = report {
                write_file(&path, &(serde_json::to_string_pretty(&r).expect("report serializes") + "\n"))?;
            }
            Ok(if r.all_passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Unlock { scene, seeds, budget, step, first_seed, goal_bias, r_sep, out: csv_path, witness_out } => {
            let scene = read_scene(&scene)?;
            let cfg = PlannerConfig { budget, step_size: step, rng_seed: first_seed, r_sep, goal_bias };
            let reports = run_campaign(&scene, &cfg, first_seed, seeds).map_err(|e| usage(e.to_string()))?;
            let csv = campaign_csv(&reports);
            match csv_path {
                Some(p) => write_file(&p, &csv)?,
                None => write!(out, "{csv}").map_err(|e| usage(e.to_string()))?,
            }
            if let Some(path) = witness_out {
                if let Some(w) = reports.iter().find_map(|r| r.witness.as_ref()) {
                    write_file(&path, &(serde_json::to_string(w).expect("trajectory serializes") + "\n"))?;
                }
            }
            let separated = reports.iter().filter(|r| r.separated).count();
            eprintln!("{separated}/{} seeds separated", reports.len());
            Ok(EXIT_OK)
        }
        Command::Sweep { epsilons, samples, seed, side, out: path } => {
            if epsilons.is_empty() {
                return Err(usage("--epsilons needs at least one value"));
            }
            if epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
                return Err(usage("--epsilons must be positive and strictly descending"));
            }
            if !(side > 0.0) {
                return Err(usage("--side must be positive"));
            }
            let rows = sweep_epsilon(&SweepConfig { side, epsilons, samples, seed });
            write_file(&path, &sweep_csv(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Export { scene, format, out: path } => {
            if format != "obj" {
                return Err(usage(format!("unsupported format `{format}`")));
            }
            let scene = read_scene(&scene)?;
            write_file(&path, &to_obj(&scene))?;
            Ok(EXIT_OK)
        }
        Command::Mutate { scene, kind, out: path } => {
            let scene = read_scene(&scene)?;
            let mutated = match kind {
                Mutation::StraightenJagZ => straighten_jag_z(&scene),
                Mutation::VIntoT => move_v_into_t(&scene, 1e-3 * scene.epsilon),
            }
            .map_err(|e| usage(e.to_string()))?;
            write_file(&path, &scene_json(&mutated))?;
            Ok(EXIT_OK)
        }
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            e.print().ok();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli.command, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
