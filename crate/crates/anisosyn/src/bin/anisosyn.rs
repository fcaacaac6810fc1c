//! Command-line front end: norm computation, closed-loop bound analysis,
//! gain synthesis, and the F4E pitch-loop case study.
//!
//! Exit codes: 0 success, 2 infeasible, 3 parse or dimension error,
//! 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use anisosyn::casestudy::{
    self, f4e_model, gain_table_csv, load_gain, load_plant, load_system, run_design, DesignMode,
    RunOptions, F4E_DEFAULT_TS,
};
use anisosyn::norms;
use anisosyn::sdp::SdpSettings;
use anisosyn::synthesis::CclOptions;
use anisosyn::Error;

#[derive(Parser)]
#[command(name = "anisosyn", version, about = "Anisotropic-norm analysis and static output-feedback synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    H2,
    Hinf,
    Aniso,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Hinf,
    Aniso,
    #[value(name = "aniso-subopt")]
    AnisoSubopt,
}

#[derive(Clone, Copy, ValueEnum)]
enum PointArg {
    #[value(name = "1")]
    P1,
    #[value(name = "2")]
    P2,
    #[value(name = "3")]
    P3,
    #[value(name = "4")]
    P4,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a norm of a discrete-time state-space system.
    Norm {
        /// System file: JSON with name, A, B, C, D.
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_enum)]
        kind: NormKind,
        /// Mean anisotropy level for the aniso kind.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        /// Relative tolerance of the iterative norms.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Certify an a-anisotropic norm bound of a closed loop under a gain.
    Analyze {
        /// Plant file: JSON with name, A, B1, B2, C1, C2, D11, D12.
        #[arg(long)]
        plant: PathBuf,
        /// Gain file: JSON with K as a nested array.
        #[arg(long)]
        gain: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        gamma: f64,
    },
    /// Synthesize a static output-feedback gain under an anisotropic bound.
    Synthesize {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        gamma: f64,
        /// Report output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Enable the opt-in iterate damping line search.
        #[arg(long)]
        damping: bool,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Run the F4E pitch-loop case study.
    F4e {
        #[arg(long, value_enum)]
        point: PointArg,
        #[arg(long, value_enum)]
        mode: CliMode,
        /// Sample time in seconds for the zero-order-hold discretization.
        #[arg(long, default_value_t = F4E_DEFAULT_TS)]
        ts: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ParseError(_)
        | Error::DimensionMismatch(_)
        | Error::NotSquare { .. }
        | Error::InvalidPoint(_)
        | Error::InvalidArgs(_)
        | Error::UnstableSystem { .. }
        | Error::UnstableMatrix { .. }
        | Error::NonSymmetric { .. } => 3,
        Error::InfeasibleInitial(_)
        | Error::GainInfeasible { .. }
        | Error::MaxIterations { .. }
        | Error::SingularInnovation { .. } => 2,
        Error::NumericalFailure(_) | Error::ModelError(_) | Error::SolverFailure(_) => 4,
    }
}

fn cli_mode_to_design(mode: CliMode) -> DesignMode {
    match mode {
        CliMode::Hinf => DesignMode::Hinf,
        CliMode::Aniso => DesignMode::Aniso,
        CliMode::AnisoSubopt => DesignMode::AnisoSubopt,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Norm { system, kind, a, tol } => {
            let (sys, config) = load_system(&system)?;
            let value = match kind {
                NormKind::H2 => norms::h2_norm(&sys)?,
                NormKind::Hinf => norms::hinf_norm(&sys, tol)?,
                NormKind::Aniso => norms::aniso_norm(&sys, a, tol)?,
            };
            let label = match kind {
                NormKind::H2 => "h2".to_string(),
                NormKind::Hinf => "hinf".to_string(),
                NormKind::Aniso => format!("aniso(a={a})"),
            };
            println!("{}: {label} = {value:.9}", config.name);
            Ok(0)
        }
        Command::Analyze { plant, gain, a, gamma } => {
            let (plant, config) = load_plant(&plant)?;
            let k = load_gain(&gain)?;
            let cert = anisosyn::analysis::analysis_lmi_feasible(
                &plant,
                &k,
                a,
                gamma,
                &SdpSettings::default(),
            )?;
            if cert.feasible {
                println!(
                    "{}: feasible at a = {a}, gamma = {gamma} (eta^2 = {:.6}, det slack = {:.3e})",
                    config.name, cert.s, cert.det_slack
                );
                Ok(0)
            } else {
                println!("{}: infeasible at a = {a}, gamma = {gamma}", config.name);
                Ok(2)
            }
        }
        Command::Synthesize { plant, a, gamma, out, damping, max_iter } => {
            let (plant, config) = load_plant(&plant)?;
            let opts = CclOptions {
                max_iterations: max_iter,
                damping,
                ..CclOptions::default()
            };
            let run_opts = RunOptions {
                operating_point: config.name.clone(),
                gamma_inf: gamma,
                aniso_factor: 1.0,
                anisotropy: a,
                a_large: a,
                ts: config.sample_time.unwrap_or(1.0),
                ccl: opts,
                sigma_points: 400,
            };
            let report = run_design(&plant, DesignMode::Custom, &run_opts);
            let ok = report.status == "success";
            std::fs::write(&out, serde_json::to_string_pretty(&report).unwrap() + "\n")
                .map_err(|e| Error::ParseError(format!("cannot write {}: {e}", out.display())))?;
            if ok {
                println!(
                    "{}: success, gain norm {:.6}, report at {}",
                    config.name,
                    report.gain_norm.unwrap(),
                    out.display()
                );
                Ok(0)
            } else {
                println!("{}: {} (report at {})", config.name, report.status, out.display());
                Ok(2)
            }
        }
        Command::F4e { point, mode, ts, out_dir } => {
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::ParseError(format!("cannot create {}: {e}", out_dir.display())))?;
            let points: Vec<usize> = match point {
                PointArg::P1 => vec![1],
                PointArg::P2 => vec![2],
                PointArg::P3 => vec![3],
                PointArg::P4 => vec![4],
                PointArg::All => vec![1, 2, 3, 4],
            };
            let design_mode = cli_mode_to_design(mode);

            // operating points are independent; run them concurrently
            let mut reports: Vec<(usize, casestudy::DesignReport)> = Vec::new();
            std::thread::scope(|scope| -> Result<(), Error> {
                let mut handles = Vec::new();
                for &p in &points {
                    handles.push((
                        p,
                        scope.spawn(move || -> Result<casestudy::DesignReport, Error> {
                            let mut config = f4e_model(p)?;
                            config.sample_time = Some(ts);
                            let plant = config.build()?;
                            let mut opts = RunOptions::for_point(p, ts)?;
                            opts.operating_point = config.name.clone();
                            Ok(run_design(&plant, design_mode, &opts))
                        }),
                    ));
                }
                for (p, handle) in handles {
                    let report = handle.join().expect("design thread panicked")?;
                    reports.push((p, report));
                }
                Ok(())
            })?;
            reports.sort_by_key(|(p, _)| *p);

            let mut gain_rows = Vec::new();
            let mut worst: u8 = 0;
            for (p, report) in &reports {
                let stem = format!("f4e_point{p}_{}", report.mode.as_str());
                let report_path = out_dir.join(format!("{stem}.report.json"));
                std::fs::write(&report_path, serde_json::to_string_pretty(report).unwrap() + "\n")
                    .map_err(|e| {
                        Error::ParseError(format!("cannot write {}: {e}", report_path.display()))
                    })?;
                if !report.sigma_data.is_empty() {
                    let mut csv = String::from("freq_rad_s,sigma_max\n");
                    for (w, s) in &report.sigma_data {
                        csv.push_str(&format!("{w},{s}\n"));
                    }
                    let sigma_path = out_dir.join(format!("{stem}.sigma.csv"));
                    std::fs::write(&sigma_path, csv).map_err(|e| {
                        Error::ParseError(format!("cannot write {}: {e}", sigma_path.display()))
                    })?;
                }
                let k = report
                    .k
                    .as_ref()
                    .map(|rows| casestudy::matrix_from_rows("K", rows))
                    .transpose()?;
                gain_rows.push((p.to_string(), report.mode, k));
                if report.status == "success" {
                    println!(
                        "point {p} {}: success, |K| = {:.4}, achieved aniso = {:.4} (bound {:.4})",
                        report.mode.as_str(),
                        report.gain_norm.unwrap_or(f64::NAN),
                        report.achieved_aniso.unwrap_or(f64::NAN),
                        report.gamma_bound
                    );
                } else {
                    println!("point {p} {}: {}", report.mode.as_str(), report.status);
                    worst = worst.max(2);
                }
            }
            let gains_path = out_dir.join(format!("gains_{}.csv", design_mode.as_str()));
            std::fs::write(&gains_path, gain_table_csv(&gain_rows)).map_err(|e| {
                Error::ParseError(format!("cannot write {}: {e}", gains_path.display()))
            })?;
            Ok(worst)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
