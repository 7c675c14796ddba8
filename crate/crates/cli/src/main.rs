use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use romforge3d::acceptance::{acceptance_suite, Level};
use romforge3d::cases::{CaseKind, STEEL_E, STEEL_RHO};
use romforge3d::{run_case, CaseSpec, Parameters, RunManifest, Stage};

/// Thread count for the sweep pool; rayon's default otherwise.
const THREADS_VAR: &str = "ROMFORGE_THREADS";
const CORETYPE_VAR: &str = "OPENBLAS_CORETYPE";

#[derive(Parser)]
#[command(name = "romforge3d", version, about = "Nonlinear reduced-order models of 3D finite-element structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh and write its summary.
    Mesh(StageArgs),
    /// Eigenmodes and their labels.
    Modal(StageArgs),
    /// Quadratic and cubic modal coefficients by prescribed displacements.
    Step(StageArgs),
    /// Static condensation of the cubic coefficient and its spectrum.
    Condense(StageArgs),
    /// Condensation through the static modal derivatives.
    Smd(StageArgs),
    /// Invariant-manifold cubic coefficient.
    Nnm(StageArgs),
    /// Condensed coefficients by prescribing master nodes.
    Mstep(StageArgs),
    /// Forced response of the reduced model by harmonic balance.
    Frf(StageArgs),
    /// Free-vibration backbone of the reduced model.
    Backbone(StageArgs),
    /// Run several stages, or a manifest file.
    Run(RunArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run manifest; replaces the target, stages and flags.
    #[arg(long, conflicts_with_all = ["target", "stages"])]
    manifest: Option<PathBuf>,
    #[arg(required_unless_present = "manifest")]
    target: Option<String>,
    #[arg(value_enum, required_unless_present = "manifest")]
    stages: Vec<Stage>,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args)]
struct StageArgs {
    /// Built-in case (thin_beam, thick_beam, circular_plate) or a mesh JSON file.
    target: String,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args)]
struct AcceptArgs {
    #[arg(long, value_enum, default_value = "quick")]
    level: Level,
    /// Also write the report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Args)]
struct Options {
    /// Output directory [default: out/<target>].
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Print the manifest instead of running it.
    #[arg(long)]
    dry_run: bool,
    /// Master bending modes, 1-based (repeat or comma-separate).
    #[arg(long = "mode", value_delimiter = ',')]
    modes: Vec<usize>,
    /// Poisson's ratio override.
    #[arg(long)]
    nu: Option<f64>,
    /// Plate O-grid refinement.
    #[arg(long)]
    refinement: Option<usize>,
    /// Number of lowest modes to compute.
    #[arg(long)]
    mode_count: Option<usize>,
    /// STEP amplitude as a fraction of the thickness.
    #[arg(long)]
    step_amp_ratio: Option<f64>,
    /// M-STEP amplitude as a fraction of the thickness.
    #[arg(long)]
    amp_ratio: Option<f64>,
    /// M-STEP master node set (midline, midsurface or any named set).
    #[arg(long)]
    masters: Option<String>,
    /// M-STEP prescribed direction.
    #[arg(long, value_enum)]
    direction: Option<Axis>,
    /// Emit the e1/e2 table over the canonical node sets.
    #[arg(long)]
    check: bool,
    /// M-STEP validity sweep amplitudes, fractions of the thickness.
    #[arg(long, value_delimiter = ',')]
    validity: Vec<f64>,
    /// Poisson ratios for the STEP beta sweep.
    #[arg(long, value_delimiter = ',')]
    poisson_sweep: Vec<f64>,
    /// Negligibility threshold on normalized correction factors.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    harmonics: Option<usize>,
    /// Excitation window as multiples of the master frequency, "lo,hi".
    #[arg(long, value_delimiter = ',', num_args = 2)]
    omega_window: Vec<f64>,
    /// Linear resonance amplitude as a fraction of the thickness.
    #[arg(long)]
    forcing_ratio: Option<f64>,
    /// Also run an FRF keeping only this many condensed modes.
    #[arg(long)]
    partial_modes: Option<usize>,
    #[arg(long)]
    backbone_max_ratio: Option<f64>,
    #[arg(long)]
    backbone_points: Option<usize>,
    /// Mesh targets: Young's modulus (Pa).
    #[arg(long, default_value_t = STEEL_E)]
    young: f64,
    /// Mesh targets: density (kg/m^3).
    #[arg(long, default_value_t = STEEL_RHO)]
    density: f64,
    /// Mesh targets: node set of the middle line/surface.
    #[arg(long, default_value = "midsurface")]
    midset: String,
    /// Mesh targets: transverse direction.
    #[arg(long, value_enum, default_value = "z")]
    normal: Axis,
    /// Mesh targets: thickness (m).
    #[arg(long)]
    thickness: Option<f64>,
}

impl Options {
    fn case(&self, target: &str) -> Result<CaseSpec, String> {
        if let Ok(name) = CaseKind::from_str(&target.replace('_', "-"), true) {
            return Ok(CaseSpec::Builtin { name, poisson_ratio: self.nu, refinement: self.refinement });
        }
        let path = PathBuf::from(target);
        if !path.is_file() {
            return Err(format!("`{target}` is neither a built-in case nor a mesh file"));
        }
        let thickness = self.thickness.ok_or("mesh targets need --thickness")?;
        Ok(CaseSpec::Mesh {
            path,
            young_modulus: self.young,
            poisson_ratio: self.nu.unwrap_or(0.3),
            density: self.density,
            midset: self.midset.clone(),
            direction: self.normal.index(),
            thickness,
        })
    }

    fn parameters(&self) -> Parameters {
        let mut p = Parameters::default();
        if !self.modes.is_empty() {
            p.bending_modes = self.modes.clone();
        }
        p.step_amplitude_ratio = self.step_amp_ratio.unwrap_or(p.step_amplitude_ratio);
        p.mstep_amplitude_ratio = self.amp_ratio.unwrap_or(p.mstep_amplitude_ratio);
        p.mstep_masters = self.masters.clone();
        p.mstep_direction = self.direction.map(Axis::index);
        p.mstep_check = self.check;
        p.validity_ratios = self.validity.clone();
        p.poisson_sweep = self.poisson_sweep.clone();
        p.threshold = self.threshold.unwrap_or(p.threshold);
        p.mode_count = self.mode_count;
        p.zeta = self.zeta.unwrap_or(p.zeta);
        p.harmonics = self.harmonics.unwrap_or(p.harmonics);
        if let [lo, hi] = self.omega_window[..] {
            p.omega_window = (lo, hi);
        }
        p.forcing_ratio = self.forcing_ratio.unwrap_or(p.forcing_ratio);
        p.partial_modes = self.partial_modes;
        p.backbone_max_ratio = self.backbone_max_ratio.unwrap_or(p.backbone_max_ratio);
        p.backbone_points = self.backbone_points.unwrap_or(p.backbone_points);
        p
    }

    fn manifest(&self, target: &str, stages: &[Stage]) -> Result<RunManifest, String> {
        let mut pipeline: Vec<Stage> = Vec::new();
        for s in stages {
            for t in s.with_prerequisites() {
                if !pipeline.contains(&t) {
                    pipeline.push(t);
                }
            }
        }
        let stem = std::path::Path::new(target).file_stem().map_or(target.into(), |s| s.to_string_lossy().into_owned());
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("out").join(stem));
        let mut m = RunManifest::new(self.case(target)?, pipeline, out);
        m.parameters = self.parameters();
        Ok(m)
    }
}

fn execute(manifest: &RunManifest, dry_run: bool) -> ExitCode {
    if dry_run {
        println!("{}", serde_json::to_string_pretty(manifest).expect("manifest serializes"));
        return ExitCode::SUCCESS;
    }
    match run_case(manifest) {
        Ok(summary) => {
            println!("manifest sha256 {}", summary.hash);
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn accept(args: &AcceptArgs) -> ExitCode {
    let report = acceptance_suite(args.level);
    for line in report.lines() {
        println!("{line}");
    }
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    println!("{passed}/{} criteria passed", report.criteria.len());
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = std::fs::write(path, json + "\n") {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

/// Some OpenBLAS builds pick a kernel that returns wrong Cholesky factors on
/// this class of CPU; restart once with a known-good core type.
fn ensure_lapack() {
    if romforge_core::linalg::dense::lapack_self_test() {
        return;
    }
    if std::env::var_os(CORETYPE_VAR).is_some() {
        eprintln!("warning: LAPACK self-test failed with {CORETYPE_VAR} set; results may be wrong");
        return;
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        if let Ok(exe) = std::env::current_exe() {
            let err = std::process::Command::new(exe)
                .args(std::env::args_os().skip(1))
                .env(CORETYPE_VAR, "Haswell")
                .exec();
            eprintln!("warning: re-exec failed: {err}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ensure_lapack();
    if let Some(n) = std::env::var(THREADS_VAR).ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {THREADS_VAR}: {e}");
        }
    }
    let (opts, target, stages) = match &cli.command {
        Command::Accept(args) => return accept(args),
        Command::Run(args) => match &args.manifest {
            Some(path) => {
                return match RunManifest::read(path) {
                    Ok(m) => execute(&m, args.opts.dry_run),
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(1)
                    }
                }
            }
            None => (&args.opts, args.target.as_deref().unwrap_or_default(), args.stages.clone()),
        },
        Command::Mesh(a) => (&a.opts, a.target.as_str(), vec![Stage::Mesh]),
        Command::Modal(a) => (&a.opts, a.target.as_str(), vec![Stage::Modal]),
        Command::Step(a) => (&a.opts, a.target.as_str(), vec![Stage::Step]),
        Command::Condense(a) => (&a.opts, a.target.as_str(), vec![Stage::Condense]),
        Command::Smd(a) => (&a.opts, a.target.as_str(), vec![Stage::Smd]),
        Command::Nnm(a) => (&a.opts, a.target.as_str(), vec![Stage::Nnm]),
        Command::Mstep(a) => (&a.opts, a.target.as_str(), vec![Stage::Mstep]),
        Command::Frf(a) => (&a.opts, a.target.as_str(), vec![Stage::Frf]),
        Command::Backbone(a) => (&a.opts, a.target.as_str(), vec![Stage::Backbone]),
    };
    match opts.manifest(target, &stages) {
        Ok(m) => execute(&m, opts.dry_run),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
