//! Figure-reproduction presets: each writes one CSV data file per panel into
//! the output directory and returns a summary report with the headline
//! numbers.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use mechsim_core::closed_form::{solve_postselection_angle, CouplingParams, PostSelection};
use mechsim_core::damped::{self, DampedParams};
use mechsim_core::exec::Strategy;
use mechsim_core::hilbert::FockDim;
use mechsim_core::lindblad::{
    default_preselection, evolve, fidelity_to_plus_qubit, initial_state, postselect_spin,
    DecoherenceRates,
};
use mechsim_core::observables::{
    coherence_l1, qubit_block, quadrature_means, wigner, GridSpec,
};
use mechsim_core::robustness::{
    monte_carlo_preparation_with, AngleJitter, McConfig, McModel,
};

use crate::commands::{resolve_postselection, CommonArgs, PhysArgs, SolverArgs};
use crate::config::FileConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, Format, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Mechanical qubit: phonon distribution and Wigner function.
    Fig1,
    /// Angle scan: quadratures and coherence vs the post-selection angle.
    Fig2,
    /// Fidelity vs spin relaxation under hot baths.
    Fig3a,
    /// Fidelity vs spin dephasing under hot baths.
    Fig3b,
    /// Schroedinger-cat regime: phonon distribution and Wigner function.
    Fig4,
    /// Jittered-selection Monte Carlo statistics vs coupling.
    Fig5,
    /// Weak-value readout vs the exact position average.
    Fig6,
}

struct FigureCtx<'a> {
    file: FileConfig,
    args: &'a PhysArgs,
    solver: &'a SolverArgs,
    n_samples: Option<usize>,
    seed: u64,
    out_dir: PathBuf,
    written: Vec<String>,
}

impl FigureCtx<'_> {
    fn f64_of(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64, CliError> {
        self.file.resolve_f64(flag, key, default)
    }

    fn write(&mut self, name: &str, report: &Report) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, report.emit(Format::Csv))
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

fn data_report(command: &str, table: Table, config: &[(&str, String)]) -> Report {
    let mut r = Report::new(command);
    for (k, v) in config {
        r.config_entry(k, v.clone());
    }
    r.table(table);
    r
}

pub fn run_figure(
    preset: Preset,
    phys: &PhysArgs,
    solver: &SolverArgs,
    n_samples: Option<usize>,
    common: &CommonArgs,
) -> Result<Report, CliError> {
    let file = common.file_config()?;
    let seed = common.seed(&file)?;
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if !out_dir.as_os_str().is_empty() && !Path::new(&out_dir).is_dir() {
        return Err(CliError::Validation(format!(
            "output directory {} does not exist",
            out_dir.display()
        )));
    }
    let mut ctx =
        FigureCtx { file, args: phys, solver, n_samples, seed, out_dir, written: Vec::new() };
    let mut report = match preset {
        Preset::Fig1 => fig_qubit(&mut ctx, "fig1", 0.1, 16)?,
        Preset::Fig2 => fig_angle_scan(&mut ctx)?,
        Preset::Fig3a => fig_fidelity_sweep(&mut ctx, SpinAxis::Relaxation)?,
        Preset::Fig3b => fig_fidelity_sweep(&mut ctx, SpinAxis::Dephasing)?,
        Preset::Fig4 => fig_cat(&mut ctx)?,
        Preset::Fig5 => fig_monte_carlo(&mut ctx)?,
        Preset::Fig6 => fig_aav(&mut ctx)?,
    };
    for name in &ctx.written {
        report.result("file", name);
    }
    Ok(report)
}

/// Shared by fig1 (and fig4's weak-coupling override path): solved-angle
/// qubit preparation under damping.
fn fig_qubit(ctx: &mut FigureCtx, tag: &str, lambda_default: f64, n_max: usize) -> Result<Report, CliError> {
    let lambda = ctx.f64_of(ctx.args.lambda, "lambda", lambda_default)?;
    let gamma = ctx.f64_of(ctx.args.gamma, "gamma", 1e-2)?;
    let t = ctx.f64_of(ctx.args.t, "t", PI)?;
    let phi = ctx.f64_of(ctx.args.phi, "phi", 0.0)?;
    let s = resolve_postselection(lambda, t, ctx.args.theta, phi)?;
    let dp = DampedParams::new(lambda, gamma, t)?;
    let config = [
        ("lambda", fmt_f64(lambda)),
        ("gamma", fmt_f64(gamma)),
        ("t", fmt_f64(t)),
        ("theta", fmt_f64(s.theta)),
        ("phi", fmt_f64(phi)),
    ];

    let probs: Vec<f64> = (0..12)
        .map(|n| damped::phonon_distribution_analytic(&dp, &s, n))
        .collect::<Result<_, _>>()?;
    let phonon = Table {
        name: "phonon_distribution".into(),
        columns: vec!["n".into(), "pr".into()],
        rows: probs.iter().enumerate().map(|(n, &p)| vec![n.to_string(), fmt_f64(p)]).collect(),
    };
    ctx.write(&format!("{tag}_phonon.csv"), &data_report(tag, phonon, &config))?;

    let (rho, probability) =
        damped::postselected_state_damped(&dp, &s, FockDim::new(n_max)?, 1e-9)?;
    let spec = GridSpec::default();
    let grid = wigner(&rho, &spec)?;
    let xs = spec.x_axis();
    let ps = spec.p_axis();
    let mut rows = Vec::with_capacity(xs.len() * ps.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            rows.push(vec![fmt_f64(x), fmt_f64(p), fmt_f64(grid.values[[i, j]])]);
        }
    }
    let wt = Table { name: "wigner".into(), columns: vec!["x".into(), "p".into(), "value".into()], rows };
    ctx.write(&format!("{tag}_wigner.csv"), &data_report(tag, wt, &config))?;

    let (w_min, _, _) = grid.min();
    let mut report = Report::new(&format!("figure {tag}"));
    for (k, v) in &config {
        report.config_entry(k, v.clone());
    }
    report.result("probability", fmt_f64(probability));
    report.result("pr0", fmt_f64(probs[0]));
    report.result("pr1", fmt_f64(probs[1]));
    report.result("w_min", fmt_f64(w_min));
    report.result("negative_volume", fmt_f64(grid.negative_volume()));
    Ok(report)
}

fn fig_angle_scan(ctx: &mut FigureCtx) -> Result<Report, CliError> {
    let lambda = ctx.f64_of(ctx.args.lambda, "lambda", 0.05)?;
    let gamma = ctx.f64_of(ctx.args.gamma, "gamma", 1e-2)?;
    let t = ctx.f64_of(ctx.args.t, "t", PI)?;
    let dp = DampedParams::new(lambda, gamma, t)?;
    let cf = CouplingParams::new(lambda, t)?;
    let n_max = FockDim::new(8)?;
    let step = 1e-3;
    let n_steps = (2.0 * PI / step).floor() as usize;
    let phis = [0.0, 0.08, 0.15];
    let config = [
        ("lambda", fmt_f64(lambda)),
        ("gamma", fmt_f64(gamma)),
        ("t", fmt_f64(t)),
        ("theta_step", fmt_f64(step)),
    ];

    let mut rows = Vec::with_capacity(phis.len() * n_steps);
    for &phi in &phis {
        let scan = mechsim_core::exec::map_indexed(n_steps, Strategy::Parallel, |k| {
            let theta = k as f64 * step;
            let s = PostSelection::new(theta, phi);
            let (rho, prob) = damped::postselected_state_damped(&dp, &s, n_max, 1e-9)
                .expect("non-degenerate scan point");
            let (x, p) = quadrature_means(&rho).expect("quadratures");
            let coh = qubit_block(&rho, 1e-2).map(|b| coherence_l1(&b)).unwrap_or(f64::NAN);
            (theta, x, p, coh, prob)
        });
        for (theta, x, p, coh, prob) in scan {
            rows.push(vec![
                fmt_f64(phi),
                fmt_f64(theta),
                fmt_f64(x),
                fmt_f64(p),
                fmt_f64(coh),
                fmt_f64(prob),
            ]);
        }
    }
    let table = Table {
        name: "angle_scan".into(),
        columns: ["phi", "theta", "x_mean", "p_mean", "coherence_l1", "probability"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    };
    ctx.write("fig2_scan.csv", &data_report("fig2", table, &config))?;

    let mut report = Report::new("figure fig2");
    for (k, v) in &config {
        report.config_entry(k, v.clone());
    }
    for &phi in &phis {
        for sol in solve_postselection_angle(&cf, phi) {
            report.result(&format!("root_phi_{phi}"), fmt_f64(sol.theta));
        }
    }
    Ok(report)
}

enum SpinAxis {
    Relaxation,
    Dephasing,
}

fn fig_fidelity_sweep(ctx: &mut FigureCtx, axis: SpinAxis) -> Result<Report, CliError> {
    let lambda = ctx.f64_of(ctx.args.lambda, "lambda", 0.05)?;
    let t = ctx.f64_of(ctx.args.t, "t", PI)?;
    let nbar_m = ctx.f64_of(ctx.args.nbar_m, "nbar_m", 10.0)?;
    let nbar_q = ctx.f64_of(ctx.args.nbar_q, "nbar_q", 10.0)?;
    let gammas = match ctx.args.gamma {
        Some(g) => vec![g],
        None => vec![1e-3, 1e-4],
    };
    // Ten points, three per decade, over 1e-5 .. 1e-2.
    let rates_axis: Vec<f64> = (0..10).map(|k| 10f64.powf(-5.0 + k as f64 / 3.0)).collect();
    let s = resolve_postselection(lambda, t, ctx.args.theta, ctx.f64_of(ctx.args.phi, "phi", 0.0)?)?;
    let (tag, axis_name) = match axis {
        SpinAxis::Relaxation => ("fig3a", "gamma_spin"),
        SpinAxis::Dephasing => ("fig3b", "gamma_phi"),
    };
    let fixed_spin = match axis {
        SpinAxis::Relaxation => ctx.f64_of(ctx.args.gamma_phi, "gamma_phi", 0.0)?,
        SpinAxis::Dephasing => ctx.f64_of(ctx.args.gamma_spin, "gamma_spin", 1e-4)?,
    };
    let config = [
        ("lambda", fmt_f64(lambda)),
        ("t", fmt_f64(t)),
        ("theta", fmt_f64(s.theta)),
        ("nbar_m", fmt_f64(nbar_m)),
        ("nbar_q", fmt_f64(nbar_q)),
    ];

    let cfg = ctx.solver.solver_config(&ctx.file, nbar_m)?;
    let rho0 = initial_state(&default_preselection(), cfg.n_max);
    let mut rows = Vec::new();
    let mut crossings = Vec::new();
    for &gamma in &gammas {
        let fidelities: Vec<f64> = rates_axis
            .iter()
            .map(|&r| {
                let rates = match axis {
                    SpinAxis::Relaxation => {
                        DecoherenceRates::new(gamma, r, fixed_spin, nbar_m, nbar_q)
                    }
                    SpinAxis::Dephasing => {
                        DecoherenceRates::new(gamma, fixed_spin, r, nbar_m, nbar_q)
                    }
                }?;
                let rho = evolve(&rho0, t, lambda, &rates, &cfg)?;
                let (mech, _) = postselect_spin(&rho, &s)?;
                Ok::<f64, CliError>(fidelity_to_plus_qubit(&mech))
            })
            .collect::<Result<_, _>>()?;
        for (r, f) in rates_axis.iter().zip(&fidelities) {
            rows.push(vec![fmt_f64(gamma), fmt_f64(*r), fmt_f64(*f)]);
        }
        let crossing = rates_axis
            .iter()
            .zip(&fidelities)
            .find(|(_, &f)| f < 0.85)
            .map(|(&r, _)| r);
        crossings.push((gamma, crossing));
    }
    let table = Table {
        name: "fidelity".into(),
        columns: vec!["gamma".into(), axis_name.into(), "fidelity".into()],
        rows,
    };
    ctx.write(&format!("{tag}_fidelity.csv"), &data_report(tag, table, &config))?;

    let mut report = Report::new(&format!("figure {tag}"));
    for (k, v) in &config {
        report.config_entry(k, v.clone());
    }
    for (gamma, crossing) in crossings {
        let value = crossing.map(fmt_f64).unwrap_or_else(|| "none".into());
        report.result(&format!("threshold_{axis_name}_at_gamma_{gamma}"), value);
    }
    Ok(report)
}

fn fig_cat(ctx: &mut FigureCtx) -> Result<Report, CliError> {
    let lambda = ctx.f64_of(ctx.args.lambda, "lambda", 1.0)?;
    let gamma = ctx.f64_of(ctx.args.gamma, "gamma", 1e-2)?;
    let t = ctx.f64_of(ctx.args.t, "t", PI)?;
    let phi = ctx.f64_of(ctx.args.phi, "phi", 0.0)?;
    let theta = ctx.args.theta.unwrap_or(1.5 * PI);
    let s = PostSelection::new(theta, phi);
    let dp = DampedParams::new(lambda, gamma, t)?;
    let config = [
        ("lambda", fmt_f64(lambda)),
        ("gamma", fmt_f64(gamma)),
        ("t", fmt_f64(t)),
        ("theta", fmt_f64(theta)),
        ("phi", fmt_f64(phi)),
    ];

    let probs: Vec<f64> = (0..25)
        .map(|n| damped::phonon_distribution_analytic(&dp, &s, n))
        .collect::<Result<_, _>>()?;
    let phonon = Table {
        name: "phonon_distribution".into(),
        columns: vec!["n".into(), "pr".into()],
        rows: probs.iter().enumerate().map(|(n, &p)| vec![n.to_string(), fmt_f64(p)]).collect(),
    };
    ctx.write("fig4_phonon.csv", &data_report("fig4", phonon, &config))?;

    let (rho, _) = damped::postselected_state_damped(&dp, &s, FockDim::new(32)?, 1e-9)?;
    let spec = GridSpec::default();
    let grid = wigner(&rho, &spec)?;
    let xs = spec.x_axis();
    let ps = spec.p_axis();
    let mut rows = Vec::with_capacity(xs.len() * ps.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            rows.push(vec![fmt_f64(x), fmt_f64(p), fmt_f64(grid.values[[i, j]])]);
        }
    }
    let wt = Table { name: "wigner".into(), columns: vec!["x".into(), "p".into(), "value".into()], rows };
    ctx.write("fig4_wigner.csv", &data_report("fig4", wt, &config))?;

    let p_av = damped::postselection_probability(&dp, &s);
    let (w_min, _, _) = grid.min();
    let mut report = Report::new("figure fig4");
    for (k, v) in &config {
        report.config_entry(k, v.clone());
    }
    report.result("p_av", fmt_f64(p_av));
    report.result("pr1", fmt_f64(probs[1]));
    report.result("w_min", fmt_f64(w_min));
    report.result("negative_volume", fmt_f64(grid.negative_volume()));
    Ok(report)
}

fn fig_monte_carlo(ctx: &mut FigureCtx) -> Result<Report, CliError> {
    let t = ctx.f64_of(ctx.args.t, "t", PI)?;
    let gamma = ctx.f64_of(ctx.args.gamma, "gamma", 1e-3)?;
    let gamma_spin = ctx.f64_of(ctx.args.gamma_spin, "gamma_spin", 1e-4)?;
    let gamma_phi = ctx.f64_of(ctx.args.gamma_phi, "gamma_phi", 1e-3)?;
    let nbar_m = ctx.f64_of(ctx.args.nbar_m, "nbar_m", 10.0)?;
    let nbar_q = ctx.f64_of(ctx.args.nbar_q, "nbar_q", 10.0)?;
    let rel_tol = ctx.file.resolve_f64(None, "rel_tol", 1e-3)?;
    let n_samples = ctx.file.resolve_usize(ctx.n_samples, "n_samples", 500)?;
    let lambdas = match ctx.args.lambda {
        Some(l) => vec![l],
        None => vec![0.05, 0.1, 0.15, 0.2, 0.25],
    };
    let rates = DecoherenceRates::new(gamma, gamma_spin, gamma_phi, nbar_m, nbar_q)?;
    let solver = ctx.solver.solver_config(&ctx.file, nbar_m)?;
    let config = [
        ("t", fmt_f64(t)),
        ("gamma", fmt_f64(gamma)),
        ("gamma_spin", fmt_f64(gamma_spin)),
        ("gamma_phi", fmt_f64(gamma_phi)),
        ("nbar_m", fmt_f64(nbar_m)),
        ("nbar_q", fmt_f64(nbar_q)),
        ("rel_tol", fmt_f64(rel_tol)),
        ("n_samples", n_samples.to_string()),
        ("seed", ctx.seed.to_string()),
    ];

    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let nominal =
            resolve_postselection(lambda, t, ctx.args.theta, ctx.f64_of(ctx.args.phi, "phi", 0.0)?)?;
        let cfg = McConfig::new(
            McModel::Lindblad { lambda, t, rates, solver },
            nominal,
            AngleJitter::uniform(rel_tol),
            n_samples,
            ctx.seed,
        );
        let sm = monte_carlo_preparation_with(&cfg, Strategy::Parallel)?;
        rows.push(vec![
            fmt_f64(lambda),
            fmt_f64(sm.pr0.mean),
            fmt_f64(sm.pr0.std),
            fmt_f64(sm.pr0.std_of_mean),
            fmt_f64(sm.pr1.mean),
            fmt_f64(sm.pr1.std),
            fmt_f64(sm.pr1.std_of_mean),
            fmt_f64(sm.fidelity.mean),
            fmt_f64(sm.fidelity.std),
            fmt_f64(sm.fidelity.std_of_mean),
            fmt_f64(sm.probability.mean),
            fmt_f64(sm.probability.std),
            fmt_f64(sm.probability.std_of_mean),
            sm.n_failures.to_string(),
        ]);
    }
    let table = Table {
        name: "statistics".into(),
        columns: [
            "lambda",
            "pr0_mean",
            "pr0_std",
            "pr0_sem",
            "pr1_mean",
            "pr1_std",
            "pr1_sem",
            "fidelity_mean",
            "fidelity_std",
            "fidelity_sem",
            "probability_mean",
            "probability_std",
            "probability_sem",
            "n_failures",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows,
    };
    ctx.write("fig5_stats.csv", &data_report("fig5", table, &config))?;

    let mut report = Report::new("figure fig5");
    for (k, v) in &config {
        report.config_entry(k, v.clone());
    }
    report.result("n_lambda", lambdas.len());
    Ok(report)
}

fn fig_aav(ctx: &mut FigureCtx) -> Result<Report, CliError> {
    use mechsim_core::aav::{self, AavContext};

    let t = ctx.f64_of(ctx.args.t, "t", PI)?;
    let mask_tol = ctx.file.resolve_f64(None, "mask_tol", 1e-4)?;
    let panels: Vec<(&str, f64, f64)> = match (ctx.args.lambda, ctx.args.phi) {
        (Some(l), phi) => vec![("a", l, phi.unwrap_or(0.0))],
        (None, _) => vec![("a", 0.05, 0.0), ("b", 0.01, 0.08)],
    };
    let step = 1e-3;
    let n_steps = (2.0 * PI / step).floor() as usize;

    let mut report = Report::new("figure fig6");
    report.config_entry("t", fmt_f64(t));
    report.config_entry("mask_tol", fmt_f64(mask_tol));
    for (panel, lambda, phi) in panels {
        let ctx_aav = AavContext::vacuum(lambda, t)?;
        let thetas: Vec<f64> = (0..n_steps).map(|k| k as f64 * step).collect();
        let rows_data = aav::compare_aav_exact(&ctx_aav, phi, &thetas, mask_tol)?;
        let rows = rows_data
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.theta),
                    fmt_f64(r.weak_value_re),
                    fmt_f64(r.weak_value_im),
                    fmt_f64(r.overlap),
                    fmt_f64(r.x_aav),
                    fmt_f64(r.x_exact),
                    (r.masked as u8).to_string(),
                ]
            })
            .collect();
        let table = Table {
            name: "aav".into(),
            columns: ["theta", "weak_re", "weak_im", "overlap", "x_aav", "x_exact", "masked"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows,
        };
        let config = [("lambda", fmt_f64(lambda)), ("phi", fmt_f64(phi)), ("t", fmt_f64(t))];
        ctx.write(&format!("fig6_{panel}.csv"), &data_report("fig6", table, &config))?;
        let max_ratio = rows_data
            .iter()
            .filter(|r| !r.masked && r.x_aav.is_finite() && r.x_exact.abs() > 1e-12)
            .map(|r| (r.x_aav / r.x_exact).abs())
            .fold(0.0f64, f64::max);
        report.config_entry(&format!("lambda_{panel}"), fmt_f64(lambda));
        report.config_entry(&format!("phi_{panel}"), fmt_f64(phi));
        report.result(&format!("max_amplification_{panel}"), fmt_f64(max_ratio));
    }
    Ok(report)
}
