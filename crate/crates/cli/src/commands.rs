//! Subcommand argument structs and implementations (except `figure`, which
//! lives in `figures`).

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mechsim_core::aav::{self, AavContext};
use mechsim_core::closed_form::{
    solve_postselection_angle, superposition_residual, Branch, CouplingParams, PostSelection,
};
use mechsim_core::damped::{self, DampedParams};
use mechsim_core::exec::Strategy;
use mechsim_core::hilbert::{C64, DensityMatrix, FockDim};
use mechsim_core::lindblad::{
    default_preselection, evolve, fidelity_to_plus_qubit, initial_state, postselect_spin,
    DecoherenceRates, Method, SolverConfig,
};
use mechsim_core::observables::{
    amplification_factors, coherence_l1, phonon_distribution, quadrature_means, wigner, GridSpec,
};
use mechsim_core::robustness::{
    monte_carlo_preparation_with, AngleJitter, JitterDistribution, McConfig, McModel,
};

use crate::config::{parse_angle, FileConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, Format, Report, Table};

pub fn parse_angle_arg(s: &str) -> Result<f64, String> {
    parse_angle(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Report,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Report => Format::Report,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Exact zero-temperature damped kernel.
    Analytic,
    /// Thermal master-equation integration.
    Lindblad,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Flat key = value config file; flags override file values.
    #[arg(long, global = true, env = "MECHSIM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Monte-Carlo seed.
    #[arg(long, global = true, env = "MECHSIM_SEED")]
    pub seed: Option<u64>,
    /// Output path (file for data commands, directory for `figure`);
    /// stdout when omitted.
    #[arg(long, global = true, env = "MECHSIM_OUT")]
    pub out: Option<PathBuf>,
    /// Output serialization.
    #[arg(long, global = true, value_enum, env = "MECHSIM_FORMAT")]
    pub format: Option<FormatArg>,
    /// Worker-pool size for sweeps and sample batches.
    #[arg(long, global = true, env = "MECHSIM_THREADS")]
    pub threads: Option<usize>,
}

impl CommonArgs {
    pub fn file_config(&self) -> Result<FileConfig, CliError> {
        match &self.config {
            Some(path) => FileConfig::load(path),
            None => Ok(FileConfig::default()),
        }
    }

    pub fn format(&self) -> Format {
        self.format.map(Format::from).unwrap_or(Format::Csv)
    }

    pub fn seed(&self, file: &FileConfig) -> Result<u64, CliError> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match file.get("seed") {
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Validation(format!("config key seed: {raw:?} is not an integer"))),
            None => Ok(1),
        }
    }
}

/// Physical-parameter flags shared by every computing subcommand. Times and
/// angles accept `pi` literals.
#[derive(Args, Debug, Clone)]
pub struct PhysArgs {
    /// Scaled coupling strength lambda.
    #[arg(long, env = "MECHSIM_LAMBDA")]
    pub lambda: Option<f64>,
    /// Interaction time (scaled by the mechanical frequency).
    #[arg(long, value_parser = parse_angle_arg, env = "MECHSIM_T")]
    pub t: Option<f64>,
    /// Mechanical damping rate.
    #[arg(long, env = "MECHSIM_GAMMA")]
    pub gamma: Option<f64>,
    /// Spin relaxation rate.
    #[arg(long, env = "MECHSIM_GAMMA_SPIN")]
    pub gamma_spin: Option<f64>,
    /// Spin pure-dephasing rate.
    #[arg(long, env = "MECHSIM_GAMMA_PHI")]
    pub gamma_phi: Option<f64>,
    /// Mechanical bath occupancy.
    #[arg(long, env = "MECHSIM_NBAR_M")]
    pub nbar_m: Option<f64>,
    /// Spin bath occupancy.
    #[arg(long, env = "MECHSIM_NBAR_Q")]
    pub nbar_q: Option<f64>,
    /// Post-selection polar angle; solved from the equal-superposition
    /// condition (plus branch) when omitted.
    #[arg(long, value_parser = parse_angle_arg, env = "MECHSIM_THETA")]
    pub theta: Option<f64>,
    /// Post-selection azimuthal angle.
    #[arg(long, value_parser = parse_angle_arg, env = "MECHSIM_PHI")]
    pub phi: Option<f64>,
}

/// Fully resolved physical parameters.
#[derive(Debug, Clone, Copy)]
pub struct Phys {
    pub lambda: f64,
    pub t: f64,
    pub gamma: f64,
    pub gamma_spin: f64,
    pub gamma_phi: f64,
    pub nbar_m: f64,
    pub nbar_q: f64,
    pub theta: Option<f64>,
    pub phi: f64,
}

impl Phys {
    pub fn resolve(args: &PhysArgs, file: &FileConfig) -> Result<Phys, CliError> {
        Ok(Phys {
            lambda: file.resolve_f64(args.lambda, "lambda", 0.1)?,
            t: file.resolve_f64(args.t, "t", PI)?,
            gamma: file.resolve_f64(args.gamma, "gamma", 0.0)?,
            gamma_spin: file.resolve_f64(args.gamma_spin, "gamma_spin", 0.0)?,
            gamma_phi: file.resolve_f64(args.gamma_phi, "gamma_phi", 0.0)?,
            nbar_m: file.resolve_f64(args.nbar_m, "nbar_m", 0.0)?,
            nbar_q: file.resolve_f64(args.nbar_q, "nbar_q", 0.0)?,
            theta: file.resolve_opt_f64(args.theta, "theta")?,
            phi: file.resolve_f64(args.phi, "phi", 0.0)?,
        })
    }

    pub fn rates(&self) -> Result<DecoherenceRates, CliError> {
        Ok(DecoherenceRates::new(
            self.gamma,
            self.gamma_spin,
            self.gamma_phi,
            self.nbar_m,
            self.nbar_q,
        )?)
    }

    /// Explicit angle if given, otherwise the plus-branch solution of the
    /// equal-superposition condition.
    pub fn postselection(&self) -> Result<PostSelection, CliError> {
        resolve_postselection(self.lambda, self.t, self.theta, self.phi)
    }

    pub fn echo(&self, report: &mut Report) {
        report.config_entry("lambda", fmt_f64(self.lambda));
        report.config_entry("t", fmt_f64(self.t));
        report.config_entry("gamma", fmt_f64(self.gamma));
        report.config_entry("gamma_spin", fmt_f64(self.gamma_spin));
        report.config_entry("gamma_phi", fmt_f64(self.gamma_phi));
        report.config_entry("nbar_m", fmt_f64(self.nbar_m));
        report.config_entry("nbar_q", fmt_f64(self.nbar_q));
        report.config_entry("phi", fmt_f64(self.phi));
    }
}

pub fn resolve_postselection(
    lambda: f64,
    t: f64,
    theta: Option<f64>,
    phi: f64,
) -> Result<PostSelection, CliError> {
    if let Some(th) = theta {
        return Ok(PostSelection::new(th, phi));
    }
    let p = CouplingParams::new(lambda, t)?;
    solve_postselection_angle(&p, phi)
        .into_iter()
        .find(|s| s.branch == Branch::Plus)
        .map(|s| PostSelection::new(s.theta, phi))
        .ok_or_else(|| {
            CliError::NoSolution(format!(
                "equal superposition unreachable at lambda = {lambda}, t = {t}, phi = {phi}"
            ))
        })
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

fn wigner_table(rho: &DensityMatrix, spec: &GridSpec) -> Result<Table, CliError> {
    let grid = wigner(rho, spec)?;
    let xs = spec.x_axis();
    let ps = spec.p_axis();
    let mut rows = Vec::with_capacity(xs.len() * ps.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            rows.push(vec![fmt_f64(x), fmt_f64(p), fmt_f64(grid.values[[i, j]])]);
        }
    }
    Ok(Table {
        name: "wigner".into(),
        columns: vec!["x".into(), "p".into(), "value".into()],
        rows,
    })
}

// ---------------------------------------------------------------------------
// solve-angle

pub fn run_solve_angle(phys: &PhysArgs, common: &CommonArgs) -> Result<Report, CliError> {
    let file = common.file_config()?;
    let phys = Phys::resolve(phys, &file)?;
    let p = CouplingParams::new(phys.lambda, phys.t)?;
    let sols = solve_postselection_angle(&p, phys.phi);
    if sols.is_empty() {
        return Err(CliError::NoSolution(format!(
            "equal superposition unreachable at lambda = {}, t = {}, phi = {}",
            phys.lambda, phys.t, phys.phi
        )));
    }
    let dp = DampedParams::new(phys.lambda, phys.gamma, phys.t)?;
    let mut report = Report::new("solve-angle");
    phys.echo(&mut report);
    report.result("n_solutions", sols.len());
    let rows: Vec<Vec<String>> = sols
        .iter()
        .map(|sol| {
            let s = PostSelection::new(sol.theta, phys.phi);
            let prob = damped::postselection_probability(&dp, &s);
            if prob < 1e-12 {
                eprintln!(
                    "warning: theta = {} has vanishing post-selection probability",
                    fmt_f64(sol.theta)
                );
            }
            vec![
                fmt_f64(sol.theta),
                branch_name(sol.branch).to_string(),
                fmt_f64(superposition_residual(&p, &s)),
                fmt_f64(prob),
            ]
        })
        .collect();
    report.table(Table {
        name: "solutions".into(),
        columns: vec!["theta".into(), "branch".into(), "residual".into(), "probability".into()],
        rows,
    });
    Ok(report)
}

// ---------------------------------------------------------------------------
// evolve

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Fock-space truncation; defaults to 16, or 32 above occupancy 10.
    #[arg(long, env = "MECHSIM_N_MAX")]
    pub n_max: Option<usize>,
    /// Fixed integrator step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Use the adaptive embedded 4(5) integrator.
    #[arg(long)]
    pub adaptive: bool,
    /// Absolute tolerance for the adaptive integrator.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl SolverArgs {
    pub fn solver_config(&self, file: &FileConfig, nbar_m: f64) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::default_for(nbar_m);
        let n_max = file.resolve_usize(self.n_max, "n_max", cfg.n_max.get())?;
        cfg = cfg.with_n_max(FockDim::new(n_max)?);
        if self.adaptive {
            cfg.method = Method::AdaptiveRkf45 {
                tol: self.tol.unwrap_or(1e-10),
                dt_initial: self.dt.unwrap_or(PI / 2000.0),
            };
        } else if let Some(dt) = file.resolve_opt_f64(self.dt, "dt")? {
            cfg = cfg.with_dt(dt);
        }
        Ok(cfg)
    }
}

pub fn run_evolve(
    phys: &PhysArgs,
    solver: &SolverArgs,
    with_wigner: bool,
    common: &CommonArgs,
) -> Result<Report, CliError> {
    let file = common.file_config()?;
    let phys = Phys::resolve(phys, &file)?;
    let rates = phys.rates()?;
    let cfg = solver.solver_config(&file, phys.nbar_m)?;
    let s = phys.postselection()?;

    let rho0 = initial_state(&default_preselection(), cfg.n_max);
    let rho = evolve(&rho0, phys.t, phys.lambda, &rates, &cfg)?;
    let (mech, probability) = postselect_spin(&rho, &s)?;

    let mut report = Report::new("evolve");
    phys.echo(&mut report);
    report.config_entry("theta", fmt_f64(s.theta));
    report.config_entry("n_max", cfg.n_max.get());
    report.result("probability", fmt_f64(probability));
    report.result("fidelity", fmt_f64(fidelity_to_plus_qubit(&mech)));
    report.result("coherence_l1", fmt_f64(coherence_l1(&mech)));
    let (x, p) = quadrature_means(&mech)?;
    report.result("x_mean", fmt_f64(x));
    report.result("p_mean", fmt_f64(p));
    if phys.lambda > 0.0 {
        let amp = amplification_factors(&mech, phys.lambda)?;
        report.result("q_factor", fmt_f64(amp.q_factor));
        report.result("p_factor", fmt_f64(amp.p_factor));
    }
    let rows = phonon_distribution(&mech)
        .iter()
        .enumerate()
        .map(|(n, &pr)| vec![n.to_string(), fmt_f64(pr)])
        .collect();
    report.table(Table {
        name: "phonon_distribution".into(),
        columns: vec!["n".into(), "pr".into()],
        rows,
    });
    if with_wigner {
        report.table(wigner_table(&mech, &GridSpec::square(3.0, 101))?);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

const AXIS_KEYS: [&str; 9] =
    ["lambda", "t", "gamma", "gamma_spin", "gamma_phi", "nbar_m", "nbar_q", "theta", "phi"];

pub fn parse_axis(spec: &str) -> Result<Axis, CliError> {
    let (key, range) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("axis {spec:?}: expected key=start:stop:points")))?;
    let key = key.trim();
    if !AXIS_KEYS.contains(&key) {
        return Err(CliError::Validation(format!(
            "axis key {key:?} not recognized; expected one of {AXIS_KEYS:?}"
        )));
    }
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Validation(format!("axis {spec:?}: expected start:stop:points")));
    }
    let start = parse_angle(parts[0]).map_err(CliError::Validation)?;
    let stop = parse_angle(parts[1]).map_err(CliError::Validation)?;
    let points: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Validation(format!("axis {spec:?}: points must be an integer")))?;
    if points == 0 {
        return Err(CliError::Validation(format!("axis {spec:?}: empty range")));
    }
    let values = if points == 1 {
        vec![start]
    } else {
        let h = (stop - start) / (points - 1) as f64;
        (0..points).map(|k| start + k as f64 * h).collect()
    };
    Ok(Axis { key: key.to_string(), values })
}

fn apply_axis(phys: &mut Phys, key: &str, v: f64) {
    match key {
        "lambda" => phys.lambda = v,
        "t" => phys.t = v,
        "gamma" => phys.gamma = v,
        "gamma_spin" => phys.gamma_spin = v,
        "gamma_phi" => phys.gamma_phi = v,
        "nbar_m" => phys.nbar_m = v,
        "nbar_q" => phys.nbar_q = v,
        "theta" => phys.theta = Some(v),
        "phi" => phys.phi = v,
        _ => unreachable!("validated axis key"),
    }
}

struct PointResult {
    phys: Phys,
    theta: f64,
    values: Result<[f64; 9], CliError>,
}

/// Evaluates one parameter point: probability, Pr(0), Pr(1), coherence,
/// fidelity, quadratures and amplification factors.
fn eval_point(phys: &Phys, model: ModelArg, solver_n_max: Option<usize>) -> Result<(f64, [f64; 9]), CliError> {
    let s = phys.postselection()?;
    let (mech, probability) = match model {
        ModelArg::Analytic => {
            let dp = DampedParams::new(phys.lambda, phys.gamma, phys.t)?;
            let beta2 = damped::beta(&dp, 1.0).norm_sqr();
            let n = solver_n_max.unwrap_or(((4.0 * beta2 + 12.0).ceil() as usize).clamp(16, 64));
            damped::postselected_state_damped(&dp, &s, FockDim::new(n)?, 1e-9)?
        }
        ModelArg::Lindblad => {
            let rates = phys.rates()?;
            let mut cfg = SolverConfig::default_for(phys.nbar_m);
            if let Some(n) = solver_n_max {
                cfg = cfg.with_n_max(FockDim::new(n)?);
            }
            let rho0 = initial_state(&default_preselection(), cfg.n_max);
            let rho = evolve(&rho0, phys.t, phys.lambda, &rates, &cfg)?;
            postselect_spin(&rho, &s)?
        }
    };
    let pops = phonon_distribution(&mech);
    let (x, p) = quadrature_means(&mech)?;
    let (q, pf) = if phys.lambda > 0.0 {
        let amp = amplification_factors(&mech, phys.lambda)?;
        (amp.q_factor, amp.p_factor)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok((
        s.theta,
        [
            probability,
            pops[0],
            pops[1],
            coherence_l1(&mech),
            fidelity_to_plus_qubit(&mech),
            x,
            p,
            q,
            pf,
        ],
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    phys: &PhysArgs,
    axes: &[String],
    model: Option<ModelArg>,
    solver: &SolverArgs,
    common: &CommonArgs,
) -> Result<Report, CliError> {
    let file = common.file_config()?;
    let base = Phys::resolve(phys, &file)?;
    let model = model.unwrap_or(ModelArg::Analytic);
    if axes.is_empty() {
        return Err(CliError::Validation("sweep needs at least one --axis".into()));
    }
    if axes.len() > 2 {
        return Err(CliError::Validation(format!("at most two axes, got {}", axes.len())));
    }
    let axes: Vec<Axis> = axes.iter().map(|s| parse_axis(s)).collect::<Result<_, _>>()?;
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    if total > 1_000_000 {
        return Err(CliError::Validation(format!("sweep would evaluate {total} points (> 1e6)")));
    }
    let n_max = match solver.n_max {
        Some(n) => Some(n),
        None => file.resolve_usize(None, "n_max", 0).map(|n| if n == 0 { None } else { Some(n) })?,
    };

    let inner = axes.last().map(|a| a.values.len()).unwrap_or(1);
    let points: Vec<PointResult> =
        mechsim_core::exec::map_indexed(total, Strategy::Parallel, |idx| {
            let mut phys = base;
            if axes.len() == 2 {
                apply_axis(&mut phys, &axes[0].key, axes[0].values[idx / inner]);
                apply_axis(&mut phys, &axes[1].key, axes[1].values[idx % inner]);
            } else {
                apply_axis(&mut phys, &axes[0].key, axes[0].values[idx]);
            }
            match eval_point(&phys, model, n_max) {
                Ok((theta, values)) => PointResult { phys, theta, values: Ok(values) },
                Err(e) => PointResult { phys, theta: f64::NAN, values: Err(e) },
            }
        });

    let mut report = Report::new("sweep");
    base.echo(&mut report);
    for a in &axes {
        report.config_entry(
            "axis",
            format!("{}={}:{}:{}", a.key, a.values[0], a.values[a.values.len() - 1], a.values.len()),
        );
    }
    report.config_entry("model", format!("{model:?}").to_lowercase());
    let n_failed = points.iter().filter(|p| p.values.is_err()).count();
    report.result("n_points", total);
    report.result("n_failed", n_failed);
    let rows = points
        .iter()
        .map(|pt| {
            let mut row = vec![
                fmt_f64(pt.phys.lambda),
                fmt_f64(pt.phys.gamma),
                fmt_f64(pt.phys.t),
                fmt_f64(pt.theta),
                fmt_f64(pt.phys.phi),
            ];
            let vals = match &pt.values {
                Ok(v) => *v,
                Err(_) => [f64::NAN; 9],
            };
            row.extend(vals.iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    report.table(Table {
        name: "sweep".into(),
        columns: [
            "lambda",
            "gamma",
            "t",
            "theta",
            "phi",
            "probability",
            "pr0",
            "pr1",
            "coherence_l1",
            "fidelity",
            "x_mean",
            "p_mean",
            "q_factor",
            "p_factor",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows,
    });
    Ok(report)
}

// ---------------------------------------------------------------------------
// monte-carlo

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    /// Preparation model evaluated per sample.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Number of jittered preparation samples.
    #[arg(long, env = "MECHSIM_N_SAMPLES")]
    pub n_samples: Option<usize>,
    /// Relative angle jitter applied to both selections.
    #[arg(long, env = "MECHSIM_REL_TOL")]
    pub rel_tol: Option<f64>,
    /// Separate relative jitter for the azimuthal angle.
    #[arg(long)]
    pub rel_tol_phi: Option<f64>,
    /// Jitter distribution.
    #[arg(long, value_enum)]
    pub distribution: Option<DistributionArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistributionArg {
    Uniform,
    Gaussian,
}

pub fn run_monte_carlo(
    phys: &PhysArgs,
    mc: &McArgs,
    solver: &SolverArgs,
    common: &CommonArgs,
) -> Result<Report, CliError> {
    let file = common.file_config()?;
    let phys = Phys::resolve(phys, &file)?;
    let seed = common.seed(&file)?;
    let model_arg = mc.model.unwrap_or(ModelArg::Analytic);
    let n_samples = file.resolve_usize(mc.n_samples, "n_samples", 500)?;
    if n_samples == 0 {
        return Err(CliError::Validation("n_samples must be positive".into()));
    }
    let rel_tol = file.resolve_f64(mc.rel_tol, "rel_tol", 1e-3)?;
    let rel_tol_phi = file.resolve_f64(mc.rel_tol_phi, "rel_tol_phi", rel_tol)?;
    let distribution = match mc.distribution.unwrap_or(DistributionArg::Uniform) {
        DistributionArg::Uniform => JitterDistribution::Uniform,
        DistributionArg::Gaussian => JitterDistribution::Gaussian,
    };
    let jitter = AngleJitter { rel_tol_theta: rel_tol, rel_tol_phi, distribution };

    let nominal = phys.postselection()?;
    let model = match model_arg {
        ModelArg::Analytic => McModel::DampedAnalytic {
            lambda: phys.lambda,
            gamma: phys.gamma,
            t: phys.t,
            n_max: FockDim::new(file.resolve_usize(solver.n_max, "n_max", 16)?)?,
        },
        ModelArg::Lindblad => McModel::Lindblad {
            lambda: phys.lambda,
            t: phys.t,
            rates: phys.rates()?,
            solver: solver.solver_config(&file, phys.nbar_m)?,
        },
    };
    let cfg = McConfig::new(model, nominal, jitter, n_samples, seed);
    let summary = monte_carlo_preparation_with(&cfg, Strategy::Parallel)?;

    let mut report = Report::new("monte-carlo");
    phys.echo(&mut report);
    report.config_entry("theta", fmt_f64(nominal.theta));
    report.config_entry("model", format!("{model_arg:?}").to_lowercase());
    report.config_entry("n_samples", n_samples);
    report.config_entry("rel_tol", fmt_f64(rel_tol));
    report.config_entry("rel_tol_phi", fmt_f64(rel_tol_phi));
    report.config_entry("seed", seed);
    report.result("n_failures", summary.n_failures);
    let stats = [
        ("pr0", summary.pr0),
        ("pr1", summary.pr1),
        ("fidelity", summary.fidelity),
        ("probability", summary.probability),
    ];
    report.table(Table {
        name: "statistics".into(),
        columns: vec!["statistic".into(), "mean".into(), "std".into(), "std_of_mean".into()],
        rows: stats
            .iter()
            .map(|(name, s)| {
                vec![name.to_string(), fmt_f64(s.mean), fmt_f64(s.std), fmt_f64(s.std_of_mean)]
            })
            .collect(),
    });
    Ok(report)
}

// ---------------------------------------------------------------------------
// aav-compare

#[derive(Args, Debug, Clone)]
pub struct AavArgs {
    /// Scan start angle.
    #[arg(long, value_parser = parse_angle_arg)]
    pub theta_min: Option<f64>,
    /// Scan end angle (exclusive).
    #[arg(long, value_parser = parse_angle_arg)]
    pub theta_max: Option<f64>,
    /// Number of scan points.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Overlap threshold below which rows are flagged as singular.
    #[arg(long)]
    pub mask_tol: Option<f64>,
    /// Initial coherent amplitude (real part).
    #[arg(long)]
    pub alpha_re: Option<f64>,
    /// Initial coherent amplitude (imaginary part).
    #[arg(long)]
    pub alpha_im: Option<f64>,
}

pub fn run_aav_compare(
    phys: &PhysArgs,
    args: &AavArgs,
    common: &CommonArgs,
) -> Result<Report, CliError> {
    let file = common.file_config()?;
    let phys = Phys::resolve(phys, &file)?;
    let theta_min = file.resolve_f64(args.theta_min, "theta_min", 0.0)?;
    let theta_max = file.resolve_f64(args.theta_max, "theta_max", 2.0 * PI)?;
    let steps = file.resolve_usize(args.steps, "steps", 6283)?;
    if steps == 0 || theta_max <= theta_min {
        return Err(CliError::Validation(format!(
            "empty scan: theta in [{theta_min}, {theta_max}), {steps} steps"
        )));
    }
    let mask_tol = file.resolve_f64(args.mask_tol, "mask_tol", 1e-4)?;
    let alpha = C64::new(
        file.resolve_f64(args.alpha_re, "alpha_re", 0.0)?,
        file.resolve_f64(args.alpha_im, "alpha_im", 0.0)?,
    );
    let ctx = AavContext::new(alpha, phys.lambda, phys.t)?;
    let vacuum = alpha.norm() <= 1e-14;
    let h = (theta_max - theta_min) / steps as f64;

    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let theta = theta_min + k as f64 * h;
        let s = PostSelection::new(theta, phys.phi);
        let w = aav::weak_value_sigmaz(&s);
        let overlap = aav::postselection_overlap(&s);
        let masked = overlap < mask_tol;
        let x_aav = if w.finite { aav::x_mean_aav(&ctx, &s)? } else { f64::NAN };
        let x_exact = if vacuum { aav::x_mean_exact(&ctx, &s)? } else { f64::NAN };
        rows.push(vec![
            fmt_f64(theta),
            fmt_f64(w.re),
            fmt_f64(w.im),
            fmt_f64(overlap),
            fmt_f64(x_aav),
            fmt_f64(x_exact),
            (masked as u8).to_string(),
        ]);
    }

    let mut report = Report::new("aav-compare");
    phys.echo(&mut report);
    report.config_entry("theta_min", fmt_f64(theta_min));
    report.config_entry("theta_max", fmt_f64(theta_max));
    report.config_entry("steps", steps);
    report.config_entry("mask_tol", fmt_f64(mask_tol));
    report.config_entry("alpha_re", fmt_f64(alpha.re));
    report.config_entry("alpha_im", fmt_f64(alpha.im));
    report.result("n_masked", rows.iter().filter(|r| r[6] == "1").count());
    report.table(Table {
        name: "aav".into(),
        columns: ["theta", "weak_re", "weak_im", "overlap", "x_aav", "x_exact", "masked"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a = parse_axis("lambda=0.05:0.2:4").unwrap();
        assert_eq!(a.key, "lambda");
        assert_eq!(a.values, vec![0.05, 0.1, 0.15000000000000002, 0.2]);
        let t = parse_axis("theta=0:2pi:3").unwrap();
        assert_eq!(t.values[2], 2.0 * PI);
        assert!(parse_axis("bogus=0:1:2").is_err());
        assert!(parse_axis("lambda=0:1:0").is_err());
        assert!(parse_axis("lambda=0:1").is_err());
    }

    #[test]
    fn postselection_solves_plus_branch() {
        let s = resolve_postselection(0.1, PI, None, 0.0).unwrap();
        let a = (12.0f64 / 13.0).asin();
        assert!((s.theta - (2.0 * PI - a)).abs() < 1e-12);
        assert!(matches!(
            resolve_postselection(0.1, PI, None, PI / 2.0),
            Err(CliError::NoSolution(_))
        ));
    }
}
