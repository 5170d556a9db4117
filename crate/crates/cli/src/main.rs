//! `sisctl`: simulate, verify, and synthesize event-triggered containment of
//! networked SIS epidemics.
//!
//! Exit codes: 0 success, 2 infeasible design / failed verdict / uncertifiable
//! gains, 1 internal error (bad files, bugs, I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sisctl_core::io::{
    self, compare_modes, emit_plots, generate_synthetic, load_gains, load_network,
    load_objective_file, load_scenario, objective_from_file, save_gains, save_network,
    summarize_run, GeneratorParams, Provenance,
};
use sisctl_core::model::Objective;
use sisctl_core::sim::{simulate, Mode, SimConfig};
use sisctl_core::synth::{
    design_lyapunov_p, full_pipeline, GainBounds, PipelineSpec, SynthError, DEFAULT_EPS,
    DEFAULT_P_BOUNDS,
};
use sisctl_core::verify::{verify_exact, Certificate, VerifyError};

#[derive(Parser)]
#[command(name = "sisctl", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Event,
    Continuous,
    None,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Event => Mode::EventTriggered,
            CliMode::Continuous => Mode::Continuous,
            CliMode::None => Mode::Uncontrolled,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic network directory (nodes.csv + edges.csv).
    Generate {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.08)]
        delta_lo: f64,
        #[arg(long, default_value_t = 0.10)]
        delta_hi: f64,
        #[arg(long, default_value_t = 0.05)]
        beta_max: f64,
        #[arg(long, default_value_t = 3)]
        groups: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one closed-loop simulation and write trajectory/inputs/events CSVs.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        /// Gains file; required unless --mode none.
        #[arg(long)]
        gains: Option<PathBuf>,
        /// Objective file enabling group summaries, verdicts, and plots.
        #[arg(long)]
        objective: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: CliMode,
        #[arg(long, default_value_t = 2000.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Master seed; the initial state is drawn from its x0 stream.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Which x0 draw of the seed to use.
        #[arg(long, default_value_t = 0)]
        x0_index: usize,
        #[arg(long, default_value_t = 100)]
        stride: usize,
        #[arg(long, default_value_t = 0.25)]
        tail: f64,
        /// Also emit SVG plots (needs --objective).
        #[arg(long)]
        plots: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check gains against the containment objective (exact certificate).
    Verify {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        gains: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        /// Verdict slack added to each margin comparison.
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Design control and trigger gains for an objective.
    Synthesize {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long, default_value_t = 0.52)]
        k_bar: f64,
        #[arg(long, default_value_t = 0.054)]
        l_bar: f64,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_P_BOUNDS.0)]
        p_lo: f64,
        #[arg(long, default_value_t = DEFAULT_P_BOUNDS.1)]
        p_hi: f64,
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve only the Lyapunov-parameter linear program.
    DesignP {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = DEFAULT_P_BOUNDS.0)]
        p_lo: f64,
        #[arg(long, default_value_t = DEFAULT_P_BOUNDS.1)]
        p_hi: f64,
        /// Output JSON path (array of p values); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run event/continuous/uncontrolled modes from identical initial states.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
    },
}

/// Domain outcomes that exit with code 2 rather than 1.
fn is_domain_failure(err: &(dyn std::error::Error + 'static)) -> bool {
    if let Some(e) = err.downcast_ref::<SynthError>() {
        return matches!(
            e,
            SynthError::ObjectiveUnreachable { .. }
                | SynthError::StageInfeasible { .. }
                | SynthError::GainMassTooSmall { .. }
                | SynthError::Verify(VerifyError::NotPositiveDefinite)
        );
    }
    if let Some(e) = err.downcast_ref::<VerifyError>() {
        return matches!(e, VerifyError::NotPositiveDefinite);
    }
    false
}

fn certificate_json(cert: &Certificate, p: &[f64]) -> serde_json::Value {
    serde_json::json!({
        "check": format!("{:?}", cert.check),
        "level": cert.level,
        "margins": cert.margins,
        "verdicts": cert.verdicts,
        "slack": cert.slack,
        "all_pass": cert.all_pass(),
        "p": p,
    })
}

fn run() -> Result<bool, Box<dyn std::error::Error>> {
    match Cli::parse().cmd {
        Cmd::Generate { n, seed, delta_lo, delta_hi, beta_max, groups, out } => {
            let params = GeneratorParams {
                n,
                seed,
                delta_range: (delta_lo, delta_hi),
                beta_max,
                group_count: groups,
            };
            let loaded = generate_synthetic(&params)?;
            save_network(&out, &loaded)?;
            println!(
                "generated {} nodes / {} edges -> {}",
                loaded.net.node_count(),
                loaded.net.edge_count(),
                out.display()
            );
            Ok(true)
        }
        Cmd::Simulate {
            network,
            gains,
            objective,
            mode,
            horizon,
            step,
            seed,
            x0_index,
            stride,
            tail,
            plots,
            out,
        } => {
            let loaded = load_network(&network)?;
            let gains = match &gains {
                Some(path) => Some(load_gains(path, &loaded.net)?),
                None => None,
            };
            let obj = match &objective {
                Some(path) => {
                    let file = load_objective_file(path)?;
                    let fallback = gains
                        .as_ref()
                        .and_then(|(_, prov)| prov.as_ref().map(|p| p.p.clone()));
                    Some(objective_from_file(&file, &loaded, path, fallback.as_deref())?)
                }
                None => None,
            };
            let x0 = io::draw_x0(seed, x0_index, loaded.net.node_count());
            let config = SimConfig {
                horizon,
                step,
                record_stride: stride,
                initial_trigger_times: None,
            };
            let traj = simulate(
                &loaded.net,
                gains.as_ref().map(|(g, _)| g),
                mode.into(),
                &x0,
                &config,
            )?;
            std::fs::create_dir_all(&out)?;
            io::write_trajectory_csv(&out.join("trajectory.csv"), &traj)?;
            io::write_inputs_csv(&out.join("inputs.csv"), &loaded.net, &traj)?;
            io::write_events_csv(&out.join("events.csv"), &traj)?;
            if let Some(obj) = &obj {
                let summary = summarize_run(&traj, obj, horizon, step, tail);
                io::save_json(&out.join("summary.json"), &summary)?;
                if plots {
                    emit_plots(&traj, obj, &out)?;
                }
                println!(
                    "simulated {:?}: tail peaks {:?} vs thresholds {:?}, {} triggers",
                    traj.mode, summary.group_tail_peak, summary.thresholds, summary.total_triggers
                );
                Ok(summary.verdicts.iter().all(|&v| v))
            } else {
                let counts: Vec<usize> = (0..traj.triggers().node_count())
                    .map(|i| traj.triggers().node(i).len())
                    .collect();
                io::save_json(
                    &out.join("summary.json"),
                    &serde_json::json!({
                        "mode": format!("{:?}", traj.mode),
                        "trigger_counts": counts,
                        "total_triggers": traj.triggers().total(),
                    }),
                )?;
                println!("simulated {:?}: {} triggers", traj.mode, traj.triggers().total());
                Ok(true)
            }
        }
        Cmd::Verify { network, gains, objective, slack, out } => {
            let loaded = load_network(&network)?;
            let (gain_set, prov) = load_gains(&gains, &loaded.net)?;
            let file = load_objective_file(&objective)?;
            let fallback = prov.as_ref().map(|p| p.p.clone());
            let obj = objective_from_file(&file, &loaded, &objective, fallback.as_deref())?;
            let cert = verify_exact(&loaded.net, &gain_set, &obj, slack)?;
            io::save_json(&out, &certificate_json(&cert, obj.p()))?;
            println!(
                "level {:.6e}; margins {:?}; {}",
                cert.level,
                cert.margins,
                if cert.all_pass() { "all objectives certified" } else { "verdict FAILED" }
            );
            Ok(cert.all_pass())
        }
        Cmd::Synthesize {
            network,
            objective,
            k_bar,
            l_bar,
            eps,
            p_lo,
            p_hi,
            slack,
            out,
        } => {
            let loaded = load_network(&network)?;
            let file = load_objective_file(&objective)?;
            let (supports, d_bar, p) = io::resolve_objective(&file, &loaded, &objective)?;
            let bounds = GainBounds::uniform(&loaded.net, k_bar, l_bar);
            let spec = PipelineSpec {
                supports,
                d_bar,
                p,
                p_bounds: (p_lo, p_hi),
                eps,
                slack,
            };
            let output = full_pipeline(&loaded.net, &bounds, &spec)?;
            let prov = Provenance {
                p: output.objective.p().to_vec(),
                stage1_objective: output.stage1.objective,
                stage2_objective: output.stage2.objective,
                relaxed_s: output.relaxed_s.clone(),
                relaxed_r: output.relaxed_r.clone(),
                certified_level: output.certificate.level,
            };
            std::fs::create_dir_all(out.parent().unwrap_or(&out)).ok();
            save_gains(&out, &io::gains_to_file(&loaded.net, &output.gains, Some(prov)))?;
            let cert_path = out.with_file_name("certificate.json");
            io::save_json(&cert_path, &certificate_json(&output.certificate, output.objective.p()))?;
            println!(
                "designed gains -> {}; certified level {:.6e} ({} objectives)",
                out.display(),
                output.certificate.level,
                output.objective.len()
            );
            Ok(output.certificate.all_pass())
        }
        Cmd::DesignP { network, p_lo, p_hi, out } => {
            let loaded = load_network(&network)?;
            let n = loaded.net.node_count();
            let p = design_lyapunov_p(&loaded.net, &vec![p_lo; n], &vec![p_hi; n])?;
            match out {
                Some(path) => io::save_json(&path, &p)?,
                None => println!("{}", serde_json::to_string(&p)?),
            }
            Ok(true)
        }
        Cmd::Compare { scenario } => {
            let sc = load_scenario(&scenario)?;
            let loaded = load_network(&sc.network)?;
            let file = load_objective_file(&sc.objective)?;
            std::fs::create_dir_all(&sc.output_dir)?;
            let (gain_set, obj): (_, Objective) = match &sc.gains {
                Some(path) => {
                    let (g, prov) = load_gains(path, &loaded.net)?;
                    let fallback = prov.as_ref().map(|p| p.p.clone());
                    (g, objective_from_file(&file, &loaded, path, fallback.as_deref())?)
                }
                None => {
                    let (supports, d_bar, p) = io::resolve_objective(&file, &loaded, &sc.objective)?;
                    let bounds = GainBounds::uniform(&loaded.net, sc.k_bar, sc.l_bar);
                    let spec = PipelineSpec {
                        supports,
                        d_bar,
                        p,
                        p_bounds: sc.p_bounds,
                        eps: sc.eps,
                        slack: 0.0,
                    };
                    let output = full_pipeline(&loaded.net, &bounds, &spec)?;
                    let prov = Provenance {
                        p: output.objective.p().to_vec(),
                        stage1_objective: output.stage1.objective,
                        stage2_objective: output.stage2.objective,
                        relaxed_s: output.relaxed_s.clone(),
                        relaxed_r: output.relaxed_r.clone(),
                        certified_level: output.certificate.level,
                    };
                    save_gains(
                        &sc.output_dir.join("gains.json"),
                        &io::gains_to_file(&loaded.net, &output.gains, Some(prov)),
                    )?;
                    (output.gains, output.objective)
                }
            };
            let config = SimConfig {
                horizon: sc.horizon,
                step: sc.step,
                record_stride: sc.record_stride,
                initial_trigger_times: None,
            };
            let report = compare_modes(
                &loaded.net,
                &gain_set,
                &obj,
                &config,
                sc.seed,
                sc.x0_draws,
                sc.tail_fraction,
            )?;
            io::save_json(&sc.output_dir.join("comparison.json"), &report)?;
            println!(
                "compared {} draws: event pass = {}, continuous pass = {}, uncontrolled exceeds = {}, max gap = {:.4}",
                report.runs.len(),
                report.event_all_pass,
                report.continuous_all_pass,
                report.uncontrolled_exceeds,
                report.max_mode_gap
            );
            Ok(report.event_all_pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = e.source();
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            if is_domain_failure(e.as_ref()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
