//! Seeded Monte-Carlo engine: MSE-vs-SNR curves, noise-statistic checks at a
//! fixed channel, and bisection for the SNR that reaches a target MSE.
//!
//! Trial `t` always draws its channel from substream `(t, Channel)` and its
//! noise from `(t, Noise)`, whatever the SNR point or worker count. Every SNR
//! point therefore sees the same channels and the same unit-variance noise
//! (common random numbers), and per-trial results are reduced in trial order,
//! so tables are bit-identical across runs and thread counts.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::{
    from_db, gamma_threshold, noise_variance, required_snr, required_snr_asymptotic, theoretical_mse, to_db,
    AsymptoticRegime, CrlbEvaluator, SnrQuery,
};
use crate::channel::{draw_channel, synthesize_rx, ChannelRealization, Purpose, RngStream};
use crate::error::{Error, Result};
use crate::estimator::{correlate, estimate_all, estimate_cfo, gain_factor};
use crate::pilot::{generate_all, PilotSequence};
use crate::system::{validate_config, CfoVector, PowerDelayProfile, SystemConfig};

pub const DEFAULT_CURVE_TRIALS: usize = 10_000;
pub const DEFAULT_PROBE_TRIALS: usize = 2_000;
pub const DEFAULT_BRACKET_DB: (f64, f64) = (-30.0, 30.0);
pub const DEFAULT_TOL_DB: f64 = 0.1;

/// A validated (system, CFO, PDP) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    cfg: SystemConfig,
    cfo: CfoVector,
    pdp: PowerDelayProfile,
}

impl Scenario {
    pub fn new(cfg: SystemConfig, cfo: CfoVector, pdp: PowerDelayProfile) -> Result<Self> {
        let (cfg, cfo) = validate_config(cfg, cfo)?.into_parts();
        pdp.check_dims(&cfg)?;
        Ok(Scenario { cfg, cfo, pdp })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn cfo(&self) -> &CfoVector {
        &self.cfo
    }

    pub fn pdp(&self) -> &PowerDelayProfile {
        &self.pdp
    }

    /// Copy with p_u chosen so user `k` sees received SNR `gamma`.
    pub fn at_snr(&self, k: usize, gamma: f64) -> Result<Scenario> {
        let p_u = gamma * self.cfg.noise_var / self.pdp.user_power(k);
        Scenario::new(self.cfg.clone().with_pilot_power(p_u), self.cfo.clone(), self.pdp.clone())
    }

    pub fn snr(&self, k: usize) -> f64 {
        self.pdp.snr(&self.cfg, k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PdpSpec {
    /// sigma^2_{hkl} = 1/L for all users.
    Uniform,
    Explicit(PowerDelayProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CfoSpec {
    /// The same omega for every user.
    Common(f64),
    PerUser(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    /// Received SNR of the designated user, dB.
    Snr(Vec<f64>),
    Antennas(Vec<usize>),
    Users(Vec<usize>),
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Snr(_) => "snr_db",
            Axis::Antennas(_) => "antennas",
            Axis::Users(_) => "users",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::Snr(v) => v.len(),
            Axis::Antennas(v) => v.len(),
            Axis::Users(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Fresh channel per trial: MSE averaged over the channel statistics.
    Marginal,
    /// One channel (trial 0's draw) held fixed; only the noise varies.
    ConditionOnChannel,
}

/// How a swept K that does not divide N is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingPolicy {
    /// N must be a multiple of K*L at every point.
    Exact,
    /// Use the largest multiple of K*L not exceeding N.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoryCurves {
    pub mse: bool,
    pub crlb: bool,
    pub required: bool,
    pub asymptotic: bool,
}

impl Default for TheoryCurves {
    fn default() -> Self {
        TheoryCurves {
            mse: true,
            crlb: true,
            required: true,
            asymptotic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub system: SystemConfig,
    pub pdp: PdpSpec,
    pub cfo: CfoSpec,
    pub axis: Axis,
    /// Trials per point of an MSE curve.
    pub trials: usize,
    /// Trials per bisection probe.
    pub probe_trials: usize,
    pub seed: Option<u64>,
    pub epsilon: f64,
    /// Designated user whose MSE is reported, one-based.
    pub user: usize,
    pub bracket_db: (f64, f64),
    pub tol_db: f64,
    pub averaging: Averaging,
    pub training: TrainingPolicy,
    pub curves: TheoryCurves,
    /// Worker threads for trial execution; 0 means rayon's default.
    pub workers: usize,
}

impl ExperimentSpec {
    pub fn new(system: SystemConfig, axis: Axis) -> Self {
        ExperimentSpec {
            system,
            pdp: PdpSpec::Uniform,
            cfo: CfoSpec::Common(0.0),
            axis,
            trials: DEFAULT_CURVE_TRIALS,
            probe_trials: DEFAULT_PROBE_TRIALS,
            seed: None,
            epsilon: 1e-8,
            user: 1,
            bracket_db: DEFAULT_BRACKET_DB,
            tol_db: DEFAULT_TOL_DB,
            averaging: Averaging::Marginal,
            training: TrainingPolicy::Exact,
            curves: TheoryCurves::default(),
            workers: 0,
        }
    }

    fn scenario_for(&self, antennas: usize, users: usize) -> Result<Scenario> {
        let mut cfg = self.system.clone();
        cfg.antennas = antennas;
        cfg.users = users;
        if self.training == TrainingPolicy::Truncate && users * cfg.taps > 0 {
            let kl = users * cfg.taps;
            cfg.training_len = cfg.training_len / kl * kl;
        }
        let cfo = match &self.cfo {
            CfoSpec::Common(w) => CfoVector::uniform(users, *w),
            CfoSpec::PerUser(v) => CfoVector::new(v.clone()),
        };
        let pdp = match &self.pdp {
            PdpSpec::Uniform => PowerDelayProfile::uniform(users, cfg.taps),
            PdpSpec::Explicit(p) => p.clone(),
        };
        Scenario::new(cfg, cfo, pdp)
    }

    /// The unswept configuration.
    pub fn base(&self) -> Result<Scenario> {
        self.scenario_for(self.system.antennas, self.system.users)
    }

    /// Scenario at every grid value of a system-parameter axis (the base
    /// scenario once for an SNR axis).
    pub fn points(&self) -> Result<Vec<(f64, Scenario)>> {
        match &self.axis {
            Axis::Snr(grid) => {
                let base = self.base()?;
                Ok(grid.iter().map(|s| (*s, base.clone())).collect())
            }
            Axis::Antennas(grid) => grid
                .iter()
                .map(|&m| Ok((m as f64, self.scenario_for(m, self.system.users)?)))
                .collect(),
            Axis::Users(grid) => grid
                .iter()
                .map(|&k| Ok((k as f64, self.scenario_for(self.system.antennas, k)?)))
                .collect(),
        }
    }

    /// Reject the spec before any computation if any grid point is invalid.
    pub fn validate(&self) -> Result<()> {
        if self.axis.is_empty() {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self.trials == 0 || self.probe_trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.bracket_db.0 < self.bracket_db.1) || !(self.tol_db > 0.0) {
            return Err(Error::InvalidParameter("bisection bracket must be increasing with positive tolerance".into()));
        }
        for (value, sc) in self.points()? {
            if self.user == 0 || self.user > sc.cfg.users {
                return Err(Error::IndexOutOfRange(format!(
                    "designated user {} at {}={value}",
                    self.user,
                    self.axis.name()
                )));
            }
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
    }

    fn stream(&self) -> Result<RngStream> {
        self.seed
            .map(RngStream::new)
            .ok_or_else(|| Error::InvalidParameter("randomized run needs a seed".into()))
    }
}

/// Reusable per-scenario state: pilots and (optionally) the fixed channel.
struct TrialKit {
    sc: Scenario,
    pilots: Vec<PilotSequence>,
    stream: RngStream,
    fixed: Option<ChannelRealization>,
}

impl TrialKit {
    fn new(sc: Scenario, stream: RngStream, averaging: Averaging) -> Result<Self> {
        let pilots = generate_all(&sc.cfg)?;
        let fixed = match averaging {
            Averaging::Marginal => None,
            Averaging::ConditionOnChannel => Some(draw_channel(&sc.pdp, &sc.cfg, &mut stream.substream(0, Purpose::Channel))?),
        };
        Ok(TrialKit {
            sc,
            pilots,
            stream,
            fixed,
        })
    }

    fn channel(&self, trial: u64) -> Result<ChannelRealization> {
        match &self.fixed {
            Some(ch) => Ok(ch.clone()),
            None => draw_channel(&self.sc.pdp, &self.sc.cfg, &mut self.stream.substream(trial, Purpose::Channel)),
        }
    }

    fn received(&self, ch: &ChannelRealization, trial: u64) -> Result<crate::channel::ReceivedSignal> {
        let mut rx = synthesize_rx(
            ch,
            &self.pilots,
            &self.sc.cfo,
            &self.sc.cfg,
            &mut self.stream.substream(trial, Purpose::Noise),
        )?;
        rx.seed = Some(self.stream.seed());
        Ok(rx)
    }

    /// Squared estimation error of user `k` alone.
    fn squared_error(&self, k: usize, trial: u64) -> Result<f64> {
        let ch = self.channel(trial)?;
        let rx = self.received(&ch, trial)?;
        let stat = correlate(&rx, k, &self.sc.cfg, &self.sc.pdp)?;
        let err = estimate_cfo(&stat, &self.sc.cfg)? - self.sc.cfo.get(k);
        Ok(err * err)
    }
}

/// Mean and standard error (sample std / sqrt(n)); zero error for one sample.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsePoint {
    pub snr_db: f64,
    pub gamma: f64,
    pub sim_mse: f64,
    pub std_err: f64,
    /// Closed-form MSE at the gain used for theory (1 for marginal runs,
    /// the realized G_k when conditioning on the channel).
    pub theory_mse: f64,
    pub theory_gain: f64,
    /// CRLB diagonal entry of the designated user, averaged over trials.
    pub crlb: f64,
    pub trials: usize,
}

/// Simulated MSE of the designated user over an SNR grid, with the
/// closed-form MSE and the trial-averaged CRLB alongside.
pub fn run_mse_vs_snr(spec: &ExperimentSpec) -> Result<Vec<MsePoint>> {
    let Axis::Snr(grid) = &spec.axis else {
        return Err(Error::InvalidParameter("MSE curve needs an SNR axis".into()));
    };
    spec.validate()?;
    let stream = spec.stream()?;
    let base = spec.base()?;
    let k = spec.user;
    let pool = spec.pool()?;
    let mut out = Vec::with_capacity(grid.len());
    for &snr_db in grid {
        let gamma = from_db(snr_db);
        let sc = base.at_snr(k, gamma)?;
        let kit = TrialKit::new(sc, stream, spec.averaging)?;
        let bound = if spec.curves.crlb {
            Some(CrlbEvaluator::new(&kit.sc.cfg, &kit.pilots, &kit.sc.cfo)?)
        } else {
            None
        };
        let per_trial: Vec<(f64, f64)> = pool.install(|| {
            (0..spec.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let ch = kit.channel(t)?;
                    let rx = kit.received(&ch, t)?;
                    let est = estimate_all(&rx, &kit.sc.cfg, &kit.sc.pdp)?;
                    let err = est.omega_hat[k - 1] - kit.sc.cfo.get(k);
                    let crlb = match &bound {
                        Some(b) => b.bound(&ch, kit.sc.cfg.noise_var)?[(k - 1, k - 1)],
                        None => f64::NAN,
                    };
                    Ok((err * err, crlb))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let sq: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
        let (sim_mse, std_err) = mean_and_stderr(&sq);
        let crlb = per_trial.iter().map(|p| p.1).sum::<f64>() / per_trial.len() as f64;
        let theory_gain = match &kit.fixed {
            Some(ch) => gain_factor(ch, k, &kit.sc.pdp)?,
            None => 1.0,
        };
        out.push(MsePoint {
            snr_db,
            gamma,
            sim_mse,
            std_err,
            theory_mse: theoretical_mse(&kit.sc.cfg, gamma, theory_gain),
            theory_gain,
            crlb,
            trials: spec.trials,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStatPoint {
    pub snr_db: f64,
    pub gain: f64,
    /// Empirical E[Re(nu)^2] and its standard error.
    pub emp_var_i: f64,
    pub se_var_i: f64,
    pub emp_var_q: f64,
    pub se_var_q: f64,
    pub theory_var_i: f64,
    pub theory_var_q: f64,
    pub trials: usize,
}

/// Second moments of nu_k = rho_k - G_k exp(j omega_k K L) at one fixed
/// channel (trial 0's draw), for each SNR on the axis.
pub fn run_noise_statistics(spec: &ExperimentSpec) -> Result<Vec<NoiseStatPoint>> {
    let Axis::Snr(grid) = &spec.axis else {
        return Err(Error::InvalidParameter("noise statistics need an SNR axis".into()));
    };
    spec.validate()?;
    let stream = spec.stream()?;
    let base = spec.base()?;
    let k = spec.user;
    let pool = spec.pool()?;
    let mut out = Vec::with_capacity(grid.len());
    for &snr_db in grid {
        let gamma = from_db(snr_db);
        let kit = TrialKit::new(base.at_snr(k, gamma)?, stream, Averaging::ConditionOnChannel)?;
        let ch = kit.fixed.clone().expect("conditioned kit holds a channel");
        let gain = gain_factor(&ch, k, &kit.sc.pdp)?;
        let omega = kit.sc.cfo.get(k);
        let signal = Complex64::from_polar(gain, omega * kit.sc.cfg.block_len() as f64);
        let nus: Vec<Complex64> = pool.install(|| {
            (0..spec.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let rx = kit.received(&ch, t)?;
                    Ok(correlate(&rx, k, &kit.sc.cfg, &kit.sc.pdp)?.rho - signal)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let (emp_var_i, se_var_i) = mean_and_stderr(&nus.iter().map(|v| v.re * v.re).collect::<Vec<_>>());
        let (emp_var_q, se_var_q) = mean_and_stderr(&nus.iter().map(|v| v.im * v.im).collect::<Vec<_>>());
        let theory = noise_variance(&kit.sc.cfg, gamma, gain, omega);
        out.push(NoiseStatPoint {
            snr_db,
            gain,
            emp_var_i,
            se_var_i,
            emp_var_q,
            se_var_q,
            theory_var_i: theory.var_i,
            theory_var_q: theory.var_q,
            trials: spec.trials,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrlbPoint {
    pub snr_db: f64,
    pub gamma: f64,
    /// Designated user's CRLB diagonal entry, averaged over channel draws.
    pub crlb_mean: f64,
    pub crlb_min: f64,
    pub crlb_max: f64,
    pub trials: usize,
}

/// Channel-averaged CRLB of the designated user over an SNR axis. Trial `t`
/// uses the same channel draw as trial `t` of [`run_mse_vs_snr`].
pub fn run_crlb(spec: &ExperimentSpec) -> Result<Vec<CrlbPoint>> {
    let Axis::Snr(grid) = &spec.axis else {
        return Err(Error::InvalidParameter("CRLB curve needs an SNR axis".into()));
    };
    spec.validate()?;
    let stream = spec.stream()?;
    let base = spec.base()?;
    let k = spec.user;
    let pool = spec.pool()?;
    let trials = match spec.averaging {
        Averaging::Marginal => spec.trials,
        Averaging::ConditionOnChannel => 1,
    };
    grid.iter()
        .map(|&snr_db| {
            let gamma = from_db(snr_db);
            let kit = TrialKit::new(base.at_snr(k, gamma)?, stream, spec.averaging)?;
            let eval = CrlbEvaluator::new(&kit.sc.cfg, &kit.pilots, &kit.sc.cfo)?;
            let vals: Vec<f64> = pool.install(|| {
                (0..trials as u64)
                    .into_par_iter()
                    .map(|t| Ok(eval.bound(&kit.channel(t)?, kit.sc.cfg.noise_var)?[(k - 1, k - 1)]))
                    .collect::<Result<Vec<_>>>()
            })?;
            Ok(CrlbPoint {
                snr_db,
                gamma,
                crlb_mean: vals.iter().sum::<f64>() / trials as f64,
                crlb_min: vals.iter().cloned().fold(f64::INFINITY, f64::min),
                crlb_max: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                trials,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequiredSnr {
    pub snr_db: f64,
    pub gamma: f64,
    pub achieved_mse: f64,
    pub trials: usize,
    pub probes: usize,
}

/// Simulated MSE of one user at one SNR over `trials` seeded trials.
pub fn probe_mse(
    sc: &Scenario,
    user: usize,
    snr_db: f64,
    trials: usize,
    stream: RngStream,
    averaging: Averaging,
    pool: &rayon::ThreadPool,
) -> Result<f64> {
    let kit = TrialKit::new(sc.at_snr(user, from_db(snr_db))?, stream, averaging)?;
    let sq: Vec<f64> = pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| kit.squared_error(user, t))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(sq.iter().sum::<f64>() / trials as f64)
}

/// Bisection in dB for the SNR at which the simulated MSE of `spec.user`
/// meets `epsilon`, on scenario `sc`. Every probe reuses the same trial
/// seeds; a probe that breaks monotonicity in SNR aborts the search.
pub fn find_required_snr_sim(spec: &ExperimentSpec, sc: &Scenario, epsilon: f64) -> Result<RequiredSnr> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let stream = spec.stream()?;
    let pool = spec.pool()?;
    let trials = spec.probe_trials;
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let mut probe = |snr_db: f64| -> Result<f64> {
        let mse = probe_mse(sc, spec.user, snr_db, trials, stream, spec.averaging, &pool)?;
        for &(s, m) in &probes {
            let (lo, hi) = if s < snr_db { ((s, m), (snr_db, mse)) } else { ((snr_db, mse), (s, m)) };
            if lo.0 != hi.0 && hi.1 > lo.1 {
                return Err(Error::NonMonotoneMse {
                    lo_db: lo.0,
                    lo_mse: lo.1,
                    hi_db: hi.0,
                    hi_mse: hi.1,
                });
            }
        }
        probes.push((snr_db, mse));
        Ok(mse)
    };

    let (mut lo, mut hi) = spec.bracket_db;
    let lo_mse = probe(lo)?;
    let hi_mse = probe(hi)?;
    if !(lo_mse > epsilon && hi_mse <= epsilon) {
        return Err(Error::BracketFailure {
            target: epsilon,
            lo_db: lo,
            lo_mse,
            hi_db: hi,
            hi_mse,
        });
    }
    while hi - lo > spec.tol_db {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let snr_db = 0.5 * (lo + hi);
    let achieved_mse = probe(snr_db)?;
    Ok(RequiredSnr {
        snr_db,
        gamma: from_db(snr_db),
        achieved_mse,
        trials,
        probes: probes.len(),
    })
}

/// One row of a required-SNR sweep over M or K.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub antennas: usize,
    pub users: usize,
    pub training_len: usize,
    pub gamma0_db: f64,
    pub analytic_db: f64,
    pub large_m_db: f64,
    pub large_k_db: f64,
    pub m0: f64,
    pub large_m_regime: bool,
    pub sim: Option<RequiredSnr>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTable {
    Mse(Vec<MsePoint>),
    RequiredSnr(Vec<SweepRow>),
}

/// Closed-form columns of a required-SNR row.
pub fn analytic_row(value: f64, sc: &Scenario, epsilon: f64) -> SweepRow {
    let cfg = &sc.cfg;
    let q = SnrQuery::new(epsilon);
    let large_m = required_snr_asymptotic(&q, cfg, AsymptoticRegime::LargeM);
    let large_k = required_snr_asymptotic(&q, cfg, AsymptoticRegime::LargeK);
    SweepRow {
        value,
        antennas: cfg.antennas,
        users: cfg.users,
        training_len: cfg.training_len,
        gamma0_db: to_db(gamma_threshold(cfg, 1.0)),
        analytic_db: to_db(required_snr(&q, cfg)),
        large_m_db: to_db(large_m.gamma),
        large_k_db: to_db(large_k.gamma),
        m0: large_m.m0,
        large_m_regime: large_m.in_regime,
        sim: None,
        error: None,
    }
}

/// Run the spec's axis: an MSE curve for an SNR axis, otherwise a
/// required-SNR search per grid point. A failing point becomes a row with
/// its error recorded and the sweep continues.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepTable> {
    spec.validate()?;
    if let Axis::Snr(_) = spec.axis {
        return run_mse_vs_snr(spec).map(SweepTable::Mse);
    }
    let mut rows = Vec::new();
    for (value, sc) in spec.points()? {
        let mut row = analytic_row(value, &sc, spec.epsilon);
        match find_required_snr_sim(spec, &sc, spec.epsilon) {
            Ok(r) => row.sim = Some(r),
            Err(e) if e.is_validation() => return Err(e),
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }
    Ok(SweepTable::RequiredSnr(rows))
}

/// Format dB values with four decimals.
pub fn fmt_db(x: f64) -> String {
    format!("{x:.4}")
}

impl SweepTable {
    pub fn to_csv(&self, axis: &str) -> String {
        let mut s = String::new();
        match self {
            SweepTable::Mse(points) => {
                s.push_str(MSE_HEADER);
                s.push('\n');
                for p in points {
                    s.push_str(&mse_row(p));
                    s.push('\n');
                }
            }
            SweepTable::RequiredSnr(rows) => {
                let _ = writeln!(
                    s,
                    "{axis},antennas,users,training_len,gamma0_db,analytic_db,large_m_db,large_k_db,m0,large_m_regime,sim_db,achieved_mse,probe_trials,probes,error"
                );
                for r in rows {
                    let (sim_db, mse, trials, probes) = match &r.sim {
                        Some(x) => (fmt_db(x.snr_db), format!("{:e}", x.achieved_mse), x.trials.to_string(), x.probes.to_string()),
                        None => Default::default(),
                    };
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{:e},{},{},{},{},{},{}",
                        r.value,
                        r.antennas,
                        r.users,
                        r.training_len,
                        fmt_db(r.gamma0_db),
                        fmt_db(r.analytic_db),
                        fmt_db(r.large_m_db),
                        fmt_db(r.large_k_db),
                        r.m0,
                        r.large_m_regime,
                        sim_db,
                        mse,
                        trials,
                        probes,
                        r.error.as_deref().unwrap_or("").replace(',', ";"),
                    );
                }
            }
        }
        s
    }
}

pub const MSE_HEADER: &str = "snr_db,gamma,sim_mse,std_err,theory_mse,theory_gain,crlb,trials";

pub fn mse_row(p: &MsePoint) -> String {
    format!(
        "{},{:e},{:e},{:e},{:e},{},{:e},{}",
        fmt_db(p.snr_db),
        p.gamma,
        p.sim_mse,
        p.std_err,
        p.theory_mse,
        p.theory_gain,
        p.crlb,
        p.trials
    )
}
