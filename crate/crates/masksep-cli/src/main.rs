use clap::{Args, Parser, Subcommand, ValueEnum};
use masksep_cli::harness::{
    run_eda_experiment, run_phase_experiment, ExperimentConfig, ExperimentKind, GammaRule,
};
use masksep_cli::io::{load_mask, read_matrix_csv, save_mask, write_matrix_csv};
use masksep_cli::render::{render_heatmap_to_path, HeatField};
use masksep_cli::report;
use masksep_core::certificate::{check_certificate, construct_certificate};
use masksep_core::diagnostics::{diagnostics_report, ReportOptions, DEFAULT_SIZE_GUARD};
use masksep_core::mask::{
    build_blur_mask, build_eda_mask_with, build_gaussian_mask, build_identity,
    build_orthogonal_columns_mask, scale_columns, Mask, ScalingMode,
};
use masksep_core::matrix::Matrix;
use masksep_core::solver::{solve_masked_separation, SolverConfig, SolverMethod, SolverStatus};
use masksep_core::svd::{reduced_svd, DEFAULT_RANK_TOL};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const OUT_DIR_ENV: &str = "MASKSEP_OUT_DIR";

/// Exit codes: 0 success, 1 negative analytic verdict (diagnose/certify),
/// 2 validation error, 3 solver divergence in single-solve mode.
#[derive(Parser)]
#[command(
    name = "masksep",
    version,
    about = "Masked sparse + low-rank matrix separation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve `min gamma ||S||_1 + ||L||_* s.t. L + H S = M0` for CSV inputs.
    Solve(SolveArgs),
    /// Compute recoverability diagnostics for an instance (exit 1 when the
    /// sufficient condition fails).
    Diagnose(DiagnoseArgs),
    /// Construct and check the dual certificate at one or many gammas.
    Certify(CertifyArgs),
    /// Run a sparsity x rank phase-transition grid.
    Phase(PhaseArgs),
    /// Run the deconvolution error curve over event counts.
    Eda(EdaArgs),
    /// Mask utilities.
    Mask {
        #[command(subcommand)]
        action: MaskCommand,
    },
    /// Instance utilities.
    Instance {
        #[command(subcommand)]
        action: InstanceCommand,
    },
    /// Render a grid CSV to a PPM heatmap.
    Render(RenderArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    LinearizedAdmm,
    AdmmInnerFista,
    PinvBaseline,
}

impl From<MethodArg> for SolverMethod {
    fn from(value: MethodArg) -> Self {
        match value {
            MethodArg::LinearizedAdmm => SolverMethod::LinearizedAdmm,
            MethodArg::AdmmInnerFista => SolverMethod::AdmmInnerFista,
            MethodArg::PinvBaseline => SolverMethod::PinvBaseline,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScalingArg {
    /// G = H / ||H||.
    Spectral,
    /// Columns of G rescaled to unit norm.
    ColumnNorm,
    /// G = H unchanged.
    None,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.99)]
    step_scale: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol_primal: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_change: f64,
    #[arg(long, default_value_t = 20)]
    inner_iters: usize,
}

impl SolverFlags {
    fn config(&self, gamma: f64, method: SolverMethod) -> SolverConfig {
        let mut config = SolverConfig::new(gamma);
        config.rho = self.rho;
        config.step_scale = self.step_scale;
        config.max_iter = self.max_iter;
        config.tol_primal = self.tol_primal;
        config.tol_change = self.tol_change;
        config.inner_iters = self.inner_iters;
        config.method = method;
        config
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Observation matrix CSV.
    #[arg(long)]
    m0: PathBuf,
    /// Mask matrix CSV.
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::LinearizedAdmm)]
    method: MethodArg,
    #[command(flatten)]
    solver: SolverFlags,
    /// Prefix for S_hat.csv, L_hat.csv, and report.json.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    s0: PathBuf,
    #[arg(long)]
    l0: PathBuf,
    #[arg(long, value_enum, default_value_t = ScalingArg::Spectral)]
    scaling: ScalingArg,
    #[arg(long, default_value_t = 20)]
    enumerate_cap: usize,
    #[arg(long, default_value_t = 32)]
    xi_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional path for the JSON report (always printed to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    s0: PathBuf,
    #[arg(long)]
    l0: PathBuf,
    /// A float, or `scan:<lo>:<hi>:<count>` for a log-spaced sweep.
    #[arg(long)]
    gamma: String,
    #[arg(long, value_enum, default_value_t = ScalingArg::Spectral)]
    scaling: ScalingArg,
    #[arg(long, default_value_t = 1e-6)]
    margin: f64,
    #[arg(long, default_value_t = DEFAULT_SIZE_GUARD)]
    size_guard: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// blur | gaussian; defaults to blur (or the config file's choice).
    #[arg(long, value_enum)]
    mask_family: Option<MaskFamilyArg>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Comma-separated sparsity fractions.
    #[arg(long, value_delimiter = ',')]
    sparsity: Vec<f64>,
    /// Comma-separated ranks.
    #[arg(long, value_delimiter = ',')]
    ranks: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct EdaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Comma-separated events-per-signal counts.
    #[arg(long, value_delimiter = ',')]
    events: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MaskFamilyArg {
    Identity,
    Blur,
    Gaussian,
    Eda,
    OrthogonalColumns,
}

#[derive(Subcommand)]
enum InstanceCommand {
    /// Draw (S0, L0) from the random models, form M0 = H S0 + L0, and
    /// write S0.csv, L0.csv, M0.csv, H.csv plus instance.json.
    Gen(InstanceGenArgs),
}

#[derive(Args)]
struct InstanceGenArgs {
    #[arg(long, value_enum)]
    mask_family: MaskFamilyArg,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// Support size of S0.
    #[arg(long)]
    support: usize,
    /// Rank of L0.
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    value_low: f64,
    #[arg(long, default_value_t = 2.0)]
    value_high: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MaskCommand {
    /// Build a mask and write its CSV plus metadata sidecar.
    Gen(MaskGenArgs),
}

#[derive(Args)]
struct MaskGenArgs {
    #[arg(long, value_enum)]
    family: MaskFamilyArg,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Column scales for the orthogonal-columns family.
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    tau1: f64,
    #[arg(long, default_value_t = 0.75)]
    tau2: f64,
    #[arg(long, default_value_t = 4.0)]
    rate: f64,
    #[arg(long, default_value_t = 40.0)]
    window: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, value_enum)]
    field: FieldArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    ErrS,
    ErrL,
}

struct Failure {
    code: u8,
    message: String,
}

fn validation(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("masksep_out"))
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Phase(args) => cmd_phase(args),
        Command::Eda(args) => cmd_eda(args),
        Command::Mask {
            action: MaskCommand::Gen(args),
        } => cmd_mask_gen(args),
        Command::Instance {
            action: InstanceCommand::Gen(args),
        } => cmd_instance_gen(args),
        Command::Render(args) => cmd_render(args),
    }
}

fn read_matrix(path: &Path) -> Result<Matrix, Failure> {
    read_matrix_csv(path).map_err(|e| validation(e.to_string()))
}

fn scaled_mask(mask: &Mask, scaling: ScalingArg) -> Result<Matrix, Failure> {
    let mode = match scaling {
        ScalingArg::Spectral => ScalingMode::Spectral,
        ScalingArg::ColumnNorm => ScalingMode::ColumnNorm,
        ScalingArg::None => ScalingMode::Custom(vec![1.0; mask.cols()]),
    };
    Ok(scale_columns(mask, mode)
        .map_err(|e| validation(e.to_string()))?
        .0)
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<(), Failure> {
    println!("{value:#}");
    if let Some(path) = path {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| validation(format!("{}: {e}", parent.display())))?;
            }
        }
        std::fs::write(path, format!("{value:#}\n"))
            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Failure> {
    let m0 = read_matrix(&args.m0)?;
    let mask = load_mask(&args.mask).map_err(|e| validation(e.to_string()))?;
    let config = args.solver.config(args.gamma, args.method.into());

    let started = Instant::now();
    let result =
        solve_masked_separation(&m0, mask.h(), &config).map_err(|e| validation(e.to_string()))?;
    let wall = started.elapsed().as_secs_f64();

    let prefix = args
        .out_prefix
        .unwrap_or_else(|| default_out_dir().join("solve_"));
    let prefix_str = prefix.to_string_lossy().into_owned();
    let s_path = PathBuf::from(format!("{prefix_str}S_hat.csv"));
    let l_path = PathBuf::from(format!("{prefix_str}L_hat.csv"));
    let report_path = PathBuf::from(format!("{prefix_str}report.json"));
    write_matrix_csv(&s_path, &result.s_hat).map_err(|e| validation(e.to_string()))?;
    write_matrix_csv(&l_path, &result.l_hat).map_err(|e| validation(e.to_string()))?;

    let method_name = match args.method {
        MethodArg::LinearizedAdmm => "linearized_admm",
        MethodArg::AdmmInnerFista => "admm_inner_fista",
        MethodArg::PinvBaseline => "pinv_baseline",
    };
    let json = report::solve_run_json(
        &result,
        &config,
        method_name,
        wall,
        &s_path.to_string_lossy(),
        &l_path.to_string_lossy(),
    );
    write_json(Some(&report_path), &json)?;

    Ok(if result.status == SolverStatus::Diverged {
        3
    } else {
        0
    })
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<u8, Failure> {
    let mask = load_mask(&args.mask).map_err(|e| validation(e.to_string()))?;
    let s0 = read_matrix(&args.s0)?;
    let l0 = read_matrix(&args.l0)?;
    let g = scaled_mask(&mask, args.scaling)?;
    let factors = reduced_svd(&l0, DEFAULT_RANK_TOL).map_err(|e| validation(e.to_string()))?;
    let opts = ReportOptions {
        enumerate_cap: args.enumerate_cap,
        xi_samples: args.xi_samples,
        seed: args.seed,
        ..ReportOptions::default()
    };
    let report_struct =
        diagnostics_report(&g, &s0, &factors, &opts).map_err(|e| validation(e.to_string()))?;
    write_json(
        args.out.as_deref(),
        &report::diagnostics_json(&report_struct),
    )?;
    Ok(if report_struct.theorem_ok { 0 } else { 1 })
}

fn parse_gamma_spec(spec: &str) -> Result<Vec<f64>, Failure> {
    if let Some(rest) = spec.strip_prefix("scan:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(validation("scan spec must be scan:<lo>:<hi>:<count>"));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| validation("scan lo is not a number"))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| validation("scan hi is not a number"))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| validation("scan count is not an integer"))?;
        if !(lo > 0.0 && hi > lo && count >= 2) {
            return Err(validation("scan needs 0 < lo < hi and count >= 2"));
        }
        let ratio = hi / lo;
        Ok((0..count)
            .map(|i| lo * ratio.powf(i as f64 / (count - 1) as f64))
            .collect())
    } else {
        let gamma: f64 = spec
            .parse()
            .map_err(|_| validation(format!("`{spec}` is not a number or scan spec")))?;
        Ok(vec![gamma])
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<u8, Failure> {
    let mask = load_mask(&args.mask).map_err(|e| validation(e.to_string()))?;
    let s0 = read_matrix(&args.s0)?;
    let l0 = read_matrix(&args.l0)?;
    let g = scaled_mask(&mask, args.scaling)?;
    let factors = reduced_svd(&l0, DEFAULT_RANK_TOL).map_err(|e| validation(e.to_string()))?;
    let gammas = parse_gamma_spec(&args.gamma)?;

    let mut rows = Vec::new();
    let mut all_pass = true;
    for gamma in gammas {
        match construct_certificate(&g, &s0, &factors, gamma, args.size_guard) {
            Ok(cert) => {
                let verdict = check_certificate(&cert, &g, &s0, &factors, args.margin)
                    .map_err(|e| validation(e.to_string()))?;
                all_pass &= verdict.pass;
                rows.push(report::certificate_json(&verdict));
            }
            Err(masksep_core::Error::CertificateSystem { residual }) => {
                all_pass = false;
                rows.push(serde_json::json!({
                    "gamma": gamma,
                    "pass": false,
                    "constructed": false,
                    "system_residual": residual,
                }));
            }
            Err(e) => return Err(validation(e.to_string())),
        }
    }
    let value = if rows.len() == 1 {
        rows.into_iter().next().unwrap()
    } else {
        serde_json::Value::Array(rows)
    };
    write_json(args.out.as_deref(), &value)?;
    Ok(if all_pass { 0 } else { 1 })
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| validation(format!("{}: {e}", path.display())))
}

fn cmd_phase(args: PhaseArgs) -> Result<u8, Failure> {
    let kind = match args.mask_family {
        None => None,
        Some(MaskFamilyArg::Blur) => Some(ExperimentKind::PhaseBlur),
        Some(MaskFamilyArg::Gaussian) => Some(ExperimentKind::PhaseGaussian),
        Some(_) => return Err(validation("phase supports --mask-family blur|gaussian")),
    };
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::reference_phase(
            kind.unwrap_or(ExperimentKind::PhaseBlur),
            default_out_dir().join("phase"),
        ),
    };
    if let Some(kind) = kind {
        config.experiment = kind;
    }
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(p) = args.p {
        config.p = p;
    }
    if !args.sparsity.is_empty() {
        config.sparsity_levels = args.sparsity.clone();
    }
    if !args.ranks.is_empty() {
        config.ranks = args.ranks.clone();
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(gamma) = args.gamma {
        config.gamma_rule = GammaRule::Explicit(gamma);
    }
    if let Some(seed) = args.master_seed {
        config.master_seed = seed;
    }
    if let Some(dir) = args.out_dir {
        config.out_dir = dir;
    }
    if let Some(par) = args.parallelism {
        config.parallelism = par;
    }
    if let Some(max_iter) = args.max_iter {
        config.solver.max_iter = max_iter;
    }

    let result = run_phase_experiment(&config).map_err(|e| validation(e.to_string()))?;
    println!(
        "phase grid: {} cells x {} trials in {:.1}s -> {}",
        result.cells.len(),
        config.trials,
        result.wall_seconds,
        config.out_dir.display()
    );
    Ok(0)
}

fn cmd_eda(args: EdaArgs) -> Result<u8, Failure> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::reference_eda(default_out_dir().join("eda")),
    };
    config.experiment = ExperimentKind::Eda;
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(p) = args.p {
        config.p = p;
    }
    if !args.events.is_empty() {
        config.event_counts = args.events.clone();
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(gamma) = args.gamma {
        config.gamma_rule = GammaRule::Explicit(gamma);
    }
    if let Some(seed) = args.master_seed {
        config.master_seed = seed;
    }
    if let Some(dir) = args.out_dir {
        config.out_dir = dir;
    }
    if let Some(par) = args.parallelism {
        config.parallelism = par;
    }
    if let Some(max_iter) = args.max_iter {
        config.solver.max_iter = max_iter;
    }
    if let Some(sigma) = args.noise_sigma {
        config.noise_sigma = sigma;
    }

    let result = run_eda_experiment(&config).map_err(|e| validation(e.to_string()))?;
    println!(
        "eda curve: {} event counts x {} trials in {:.1}s -> {}",
        result.cells.len(),
        config.trials,
        result.wall_seconds,
        config.out_dir.display()
    );
    Ok(0)
}

fn cmd_mask_gen(args: MaskGenArgs) -> Result<u8, Failure> {
    let mask = match args.family {
        MaskFamilyArg::Identity => {
            let n = args
                .p
                .or(args.m)
                .ok_or_else(|| validation("identity mask needs --p (or --m)"))?;
            build_identity(n)
        }
        MaskFamilyArg::Blur => {
            let p = args.p.ok_or_else(|| validation("blur mask needs --p"))?;
            build_blur_mask(p)
        }
        MaskFamilyArg::Gaussian => {
            let m = args
                .m
                .ok_or_else(|| validation("gaussian mask needs --m"))?;
            let p = args
                .p
                .ok_or_else(|| validation("gaussian mask needs --p"))?;
            build_gaussian_mask(m, p, args.seed)
        }
        MaskFamilyArg::Eda => {
            let m = args.m.unwrap_or(240);
            let p = args.p.unwrap_or(160);
            build_eda_mask_with(args.tau1, args.tau2, args.rate, args.window, m, p)
        }
        MaskFamilyArg::OrthogonalColumns => {
            let m = args
                .m
                .ok_or_else(|| validation("orthogonal-columns mask needs --m"))?;
            let p = args
                .p
                .ok_or_else(|| validation("orthogonal-columns mask needs --p"))?;
            let scales = if args.scales.is_empty() {
                vec![1.0; p]
            } else {
                args.scales.clone()
            };
            build_orthogonal_columns_mask(m, p, &scales, args.seed)
        }
    }
    .map_err(|e| validation(e.to_string()))?;
    save_mask(&mask, &args.out).map_err(|e| validation(e.to_string()))?;
    println!(
        "wrote {}x{} mask to {}",
        mask.rows(),
        mask.cols(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_instance_gen(args: InstanceGenArgs) -> Result<u8, Failure> {
    use masksep_cli::io::{save_instance, save_mask};
    use masksep_core::model::{
        random_low_rank, random_sparse, LowRankKind, LowRankModelSpec, SingularValueRule,
        SparseModelSpec,
    };
    use masksep_core::rng::derive_seed;

    let mask = match args.mask_family {
        MaskFamilyArg::Identity => build_identity(args.p),
        MaskFamilyArg::Blur => build_blur_mask(args.p),
        MaskFamilyArg::Gaussian => {
            build_gaussian_mask(args.m, args.p, derive_seed(args.seed, &[0]))
        }
        MaskFamilyArg::Eda => {
            build_eda_mask_with(2.0, 0.75, 4.0, args.p as f64 / 4.0, args.m, args.p)
        }
        MaskFamilyArg::OrthogonalColumns => build_orthogonal_columns_mask(
            args.m,
            args.p,
            &vec![1.0; args.p],
            derive_seed(args.seed, &[0]),
        ),
    }
    .map_err(|e| validation(e.to_string()))?;
    if mask.rows() != args.m {
        return Err(validation(format!(
            "mask family produced {} rows but --m is {}",
            mask.rows(),
            args.m
        )));
    }
    let sparse_spec = SparseModelSpec {
        p: args.p,
        n: args.n,
        s: args.support,
        value_low: args.value_low,
        value_high: args.value_high,
        seed: derive_seed(args.seed, &[1]),
    };
    let s0 = random_sparse(&sparse_spec).map_err(|e| validation(e.to_string()))?;
    let low_rank_spec = LowRankModelSpec {
        m: args.m,
        n: args.n,
        r: args.rank,
        kind: LowRankKind::Orthogonal,
        singular_values: SingularValueRule::UnitRms,
        seed: derive_seed(args.seed, &[2]),
    };
    let (l0, _) = random_low_rank(&low_rank_spec).map_err(|e| validation(e.to_string()))?;
    let m0 = mask.h().matmul(&s0).add(&l0);

    let dir = args
        .out_dir
        .unwrap_or_else(|| default_out_dir().join("instance"));
    let sidecar = serde_json::json!({
        "sparse": {
            "p": args.p, "n": args.n, "s": args.support,
            "value_low": args.value_low, "value_high": args.value_high,
            "seed": sparse_spec.seed,
        },
        "low_rank": {
            "m": args.m, "n": args.n, "r": args.rank,
            "model": "orthogonal", "singular_values": "unit_rms",
            "seed": low_rank_spec.seed,
        },
        "master_seed": args.seed,
    });
    save_instance(&dir, &s0, &l0, &m0, &sidecar).map_err(|e| validation(e.to_string()))?;
    save_mask(&mask, &dir.join("H.csv")).map_err(|e| validation(e.to_string()))?;
    println!("wrote instance to {}", dir.display());
    Ok(0)
}

fn cmd_render(args: RenderArgs) -> Result<u8, Failure> {
    let field = match args.field {
        FieldArg::ErrS => HeatField::ErrS,
        FieldArg::ErrL => HeatField::ErrL,
    };
    render_heatmap_to_path(&args.grid, field, &args.out).map_err(|e| validation(e.to_string()))?;
    println!("wrote {}", args.out.display());
    Ok(0)
}
