//! `mimo-cfo` command-line front end.
//!
//! Every subcommand reads a scenario file, writes CSV to `--out` (atomically)
//! or stdout, and reports errors on stderr. Exit codes: 0 success, 1 invalid
//! input, 2 numerical failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    from_db, gamma_threshold, mse_of_estimate_error_model, regime_check, to_db, CrlbEvaluator,
};
use crate::channel::{draw_channel, synthesize_rx, Purpose, RngStream};
use crate::error::{Error, Result};
use crate::estimator::{estimate_all, expected_macs, gain_factor};
use crate::experiments::{
    analytic_row, find_required_snr_sim, fmt_db, mse_row, run_crlb, run_mse_vs_snr, run_sweep, Averaging, Axis,
    ExperimentSpec, SweepTable, MSE_HEADER,
};
use crate::pilot::{build_circulant, check_optimality, generate_all};
use crate::specfile::load_spec;

#[derive(Debug, Parser)]
#[command(name = "mimo-cfo", version, about = "Multi-user CFO estimation for massive MIMO uplinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Master seed; overrides the scenario file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path; stdout if omitted. A `.meta.jsonl` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for trials (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Trials per MSE point and per bisection probe; overrides the scenario file.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Hold one channel draw fixed and average over noise only.
    #[arg(long, global = true)]
    pub condition_on_channel: bool,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the scenario and print derived quantities.
    Validate,
    /// Print every user's training sequence.
    PilotDump,
    /// One seeded transmission: estimate every user's CFO.
    Estimate,
    /// Channel-averaged CRLB over the SNR grid.
    Crlb,
    /// Closed-form MSE, noise variances and required SNR over the grid.
    Theory,
    /// Simulated MSE against theory and CRLB over the SNR grid.
    MseCurve,
    /// Bisection for the SNR reaching `epsilon` at the base scenario.
    RequiredSnr,
    /// Run the scenario's axis: MSE curve for SNR, required-SNR search for M or K.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::PilotDump => "pilot-dump",
            Command::Estimate => "estimate",
            Command::Crlb => "crlb",
            Command::Theory => "theory",
            Command::MseCurve => "mse-curve",
            Command::RequiredSnr => "required-snr",
            Command::Sweep => "sweep",
        }
    }

    fn randomized(self) -> bool {
        matches!(
            self,
            Command::Estimate | Command::Crlb | Command::MseCurve | Command::RequiredSnr | Command::Sweep
        )
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    command: &'a str,
    seed: Option<u64>,
    seed_source: &'a str,
    spec_sha256: String,
    wall_time_s: f64,
    trials: usize,
    probe_trials: usize,
    averaging: &'a str,
    workers: usize,
    crlb: &'a str,
    version: &'a str,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == 1 { "validation" } else { "numerical" };
            eprintln!("error[{kind}]: {e}");
            code
        }
    }
}

fn resolve_spec(cli: &Cli) -> Result<(ExperimentSpec, String, &'static str)> {
    let path = cli
        .common
        .spec
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("--spec <path> is required".into()))?;
    let (mut spec, text) = load_spec(path)?;
    let mut seed_source = if spec.seed.is_some() { "spec" } else { "none" };
    if let Some(s) = cli.common.seed {
        spec.seed = Some(s);
        seed_source = "flag";
    }
    if let Some(w) = cli.common.workers {
        spec.workers = w;
    }
    if let Some(t) = cli.common.trials {
        spec.trials = t;
        spec.probe_trials = t;
    }
    if cli.common.condition_on_channel {
        spec.averaging = Averaging::ConditionOnChannel;
    }
    if cli.command.randomized() && spec.seed.is_none() {
        let s = rand::random::<u64>();
        warn!("no seed given; drew {s} (recorded in metadata)");
        spec.seed = Some(s);
        seed_source = "auto";
    }
    Ok((spec, text, seed_source))
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let (spec, text, seed_source) = resolve_spec(cli)?;
    info!("{}: {:?}", cli.command.name(), spec.axis);
    let csv = match cli.command {
        Command::Validate => validate_table(&spec)?,
        Command::PilotDump => pilot_table(&spec)?,
        Command::Estimate => estimate_table(&spec)?,
        Command::Crlb => crlb_table(&spec)?,
        Command::Theory => theory_table(&spec)?,
        Command::MseCurve => {
            let mut s = format!("{MSE_HEADER}\n");
            for p in run_mse_vs_snr(&spec)? {
                s.push_str(&mse_row(&p));
                s.push('\n');
            }
            s
        }
        Command::RequiredSnr => {
            let sc = spec.base()?;
            let mut row = analytic_row(sc.config().antennas as f64, &sc, spec.epsilon);
            row.sim = Some(find_required_snr_sim(&spec, &sc, spec.epsilon)?);
            SweepTable::RequiredSnr(vec![row]).to_csv("antennas")
        }
        Command::Sweep => run_sweep(&spec)?.to_csv(spec.axis.name()),
    };
    let meta = Metadata {
        command: cli.command.name(),
        seed: spec.seed,
        seed_source,
        spec_sha256: Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
        wall_time_s: started.elapsed().as_secs_f64(),
        trials: spec.trials,
        probe_trials: spec.probe_trials,
        averaging: match spec.averaging {
            Averaging::Marginal => "marginal",
            Averaging::ConditionOnChannel => "condition-on-channel",
        },
        workers: spec.workers,
        crlb: "per-channel bound averaged over the trial channel draws",
        version: env!("CARGO_PKG_VERSION"),
    };
    let meta_line = serde_json::to_string(&meta).map_err(|e| Error::Io(e.to_string()))? + "\n";
    match &cli.common.out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            write_atomic(&sidecar_path(path), meta_line.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes())?;
            info!("metadata: {}", meta_line.trim_end());
        }
    }
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.jsonl");
    PathBuf::from(s)
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

fn validate_table(spec: &ExperimentSpec) -> Result<String> {
    // a bare scenario without a grid is still checkable
    let mut probe = spec.clone();
    if probe.axis.is_empty() {
        probe.axis = Axis::Snr(vec![0.0]);
    }
    probe.validate()?;
    let mut s = String::from(
        "antennas,users,taps,training_len,blocks,block_len,max_abs_omega_kl,snr_db,gamma0_db,macs,macs_per_use,pilots_optimal\n",
    );
    let scenarios = match spec.axis {
        Axis::Snr(_) => vec![spec.base()?],
        _ => spec.points()?.into_iter().map(|(_, sc)| sc).collect(),
    };
    for sc in scenarios {
        let cfg = sc.config();
        let k = spec.user;
        let kl = cfg.block_len() as f64;
        let max_wkl = sc.cfo().omega.iter().map(|w| (w * kl).abs()).fold(0.0, f64::max);
        let mats: Vec<_> = generate_all(cfg)?.iter().map(|p| build_circulant(p, cfg.taps)).collect();
        let mut optimal = true;
        for a in &mats {
            for b in &mats {
                optimal &= check_optimality(a, b)?.satisfies;
            }
        }
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:e},{},{},{},{},{}",
            cfg.antennas,
            cfg.users,
            cfg.taps,
            cfg.training_len,
            cfg.blocks(),
            cfg.block_len(),
            max_wkl,
            fmt_db(to_db(sc.snr(k))),
            fmt_db(to_db(gamma_threshold(cfg, 1.0))),
            expected_macs(cfg),
            expected_macs(cfg) as f64 / cfg.training_len as f64,
            optimal
        );
    }
    Ok(s)
}

fn pilot_table(spec: &ExperimentSpec) -> Result<String> {
    let sc = spec.base()?;
    let mut s = String::from("user,t,re,im\n");
    for p in generate_all(sc.config())? {
        for (t, a) in p.samples().iter().enumerate() {
            let _ = writeln!(s, "{},{},{:e},{:e}", p.user(), t, a.re, a.im);
        }
    }
    Ok(s)
}

fn estimate_table(spec: &ExperimentSpec) -> Result<String> {
    let sc = spec.base()?;
    let cfg = sc.config();
    let stream = RngStream::new(spec.seed.expect("seed resolved"));
    let ch = draw_channel(sc.pdp(), cfg, &mut stream.substream(0, Purpose::Channel))?;
    let pilots = generate_all(cfg)?;
    let rx = synthesize_rx(&ch, &pilots, sc.cfo(), cfg, &mut stream.substream(0, Purpose::Noise))?;
    let est = estimate_all(&rx, cfg, sc.pdp())?;
    let mut s = String::from("user,omega,omega_hat,error,gain,snr_db,rho_re,rho_im,macs\n");
    for (i, stat) in est.stats.iter().enumerate() {
        let k = i + 1;
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{},{},{:e},{:e},{}",
            k,
            sc.cfo().get(k),
            est.omega_hat[i],
            est.omega_hat[i] - sc.cfo().get(k),
            gain_factor(&ch, k, sc.pdp())?,
            fmt_db(to_db(sc.snr(k))),
            stat.rho.re,
            stat.rho.im,
            stat.mac_count + 1
        );
    }
    Ok(s)
}

fn crlb_table(spec: &ExperimentSpec) -> Result<String> {
    let mut s = String::from("snr_db,gamma,crlb_mean,crlb_min,crlb_max,trials\n");
    if spec.axis.is_empty() {
        // no grid: the bound at the scenario's own pilot power for one draw
        let sc = spec.base()?;
        let cfg = sc.config();
        let ch = draw_channel(
            sc.pdp(),
            cfg,
            &mut RngStream::new(spec.seed.expect("seed resolved")).substream(0, Purpose::Channel),
        )?;
        let v = CrlbEvaluator::new(cfg, &generate_all(cfg)?, sc.cfo())?.bound(&ch, cfg.noise_var)?[(spec.user - 1, spec.user - 1)];
        let g = sc.snr(spec.user);
        let _ = writeln!(s, "{},{:e},{:e},{:e},{:e},1", fmt_db(to_db(g)), g, v, v, v);
        return Ok(s);
    }
    for p in run_crlb(spec)? {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{}",
            fmt_db(p.snr_db),
            p.gamma,
            p.crlb_mean,
            p.crlb_min,
            p.crlb_max,
            p.trials
        );
    }
    Ok(s)
}

fn theory_table(spec: &ExperimentSpec) -> Result<String> {
    let k = spec.user;
    match &spec.axis {
        Axis::Snr(grid) => {
            let sc = spec.base()?;
            let cfg = sc.config();
            let omega = sc.cfo().get(k);
            let grid = if grid.is_empty() { vec![to_db(sc.snr(k))] } else { grid.clone() };
            let mut s = String::from("snr_db,gamma,theory_mse,model_mse,var_i,var_q,gamma0_db,regime_ok\n");
            for snr_db in grid {
                let gamma = from_db(snr_db);
                let model = mse_of_estimate_error_model(cfg, gamma, 1.0, omega);
                let regime = regime_check(cfg, gamma, 1.0, omega);
                for w in regime.warnings() {
                    info!("{} dB: {w}", fmt_db(snr_db));
                }
                let _ = writeln!(
                    s,
                    "{},{:e},{:e},{:e},{:e},{:e},{},{}",
                    fmt_db(snr_db),
                    gamma,
                    crate::analysis::theoretical_mse(cfg, gamma, 1.0),
                    model.mse,
                    model.noise.var_i,
                    model.noise.var_q,
                    fmt_db(to_db(regime.gamma_threshold)),
                    regime.holds()
                );
            }
            Ok(s)
        }
        _ => {
            spec.validate()?;
            let rows = spec
                .points()?
                .into_iter()
                .map(|(v, sc)| analytic_row(v, &sc, spec.epsilon))
                .collect();
            Ok(SweepTable::RequiredSnr(rows).to_csv(spec.axis.name()))
        }
    }
}
