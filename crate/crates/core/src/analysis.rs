//! Closed-form performance analysis: CRLB, noise-statistic variances,
//! theoretical MSE, the linearization threshold and required-SNR laws.
//!
//! The realized gain factor G_k is an explicit argument everywhere; pass 1.0
//! for the large-M value.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::pilot::{build_circulant, PilotSequence};
use crate::system::{CfoVector, SystemConfig};

/// |omega_k K L| below this fraction of pi counts as "much smaller than pi".
pub const SMALL_OFFSET_FRACTION: f64 = 0.1;
/// gamma_k above this multiple of gamma_k^0 counts as "much larger".
pub const THRESHOLD_MARGIN: f64 = 10.0;
/// Large-M asymptote is flagged usable once M >= this multiple of M_0.
pub const LARGE_M_MARGIN: f64 = 100.0;

fn kl(cfg: &SystemConfig) -> f64 {
    cfg.block_len() as f64
}

fn b_minus_1(cfg: &SystemConfig) -> f64 {
    cfg.blocks() as f64 - 1.0
}

/// Cramer-Rao bound evaluator for a fixed system, pilot set and CFO vector.
///
/// Q(omega) = I_M (x) Q_b with Q_b = [Gamma(omega_1) A_1, ..., Gamma(omega_K) A_K],
/// and the k-th column of the per-antenna block V_m is F Q_b H_m, where H_m
/// stacks h_{km} block-diagonally. Hence
/// Re{V^H P_Q V} = Re{ sum_m H_m^H C H_m } with the KL x KL matrix
/// C = (F Q_b)^H P_b (F Q_b), computed once without forming any N x N or
/// MN x MN projector.
#[derive(Debug, Clone)]
pub struct CrlbEvaluator {
    users: usize,
    taps: usize,
    antennas: usize,
    reduced: DMatrix<Complex64>,
}

impl CrlbEvaluator {
    pub fn new(cfg: &SystemConfig, pilots: &[PilotSequence], cfo: &CfoVector) -> Result<Self> {
        let (n, k_n, l_n) = (cfg.training_len, cfg.users, cfg.taps);
        if pilots.len() != k_n || cfo.len() != k_n || pilots.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "need {k_n} pilots of length {n} and {k_n} CFOs"
            )));
        }
        let q = steered_pilot_matrix(cfg, pilots, cfo);
        let gram = q.adjoint() * &q;
        let chol = gram.clone().cholesky().ok_or(Error::RankDeficientPilot)?;
        let diag: Vec<f64> = (0..k_n * l_n).map(|i| gram[(i, i)].re).collect();
        let scale = diag.iter().cloned().fold(0.0, f64::max);
        let l_diag_min = (0..k_n * l_n)
            .map(|i| chol.l_dirty()[(i, i)].norm_sqr())
            .fold(f64::INFINITY, f64::min);
        if !(scale > 0.0) || l_diag_min <= 1e-12 * scale {
            return Err(Error::RankDeficientPilot);
        }
        let mut fq = q.clone();
        for (t, mut row) in fq.row_iter_mut().enumerate() {
            row *= Complex64::new(t as f64, 0.0);
        }
        let cross = q.adjoint() * &fq;
        let solved = chol.solve(&cross);
        let reduced = fq.adjoint() * &fq - cross.adjoint() * solved;
        Ok(CrlbEvaluator {
            users: k_n,
            taps: l_n,
            antennas: cfg.antennas,
            reduced,
        })
    }

    /// Re{V^H P_Q V} for one channel realization, K x K.
    pub fn information(&self, ch: &ChannelRealization) -> Result<DMatrix<f64>> {
        if ch.users() != self.users || ch.taps() != self.taps || ch.antennas() != self.antennas {
            return Err(Error::DimensionMismatch("channel does not match CRLB system".into()));
        }
        let (k_n, l_n) = (self.users, self.taps);
        let mut info = DMatrix::<f64>::zeros(k_n, k_n);
        for m in 0..self.antennas {
            for i in 0..k_n {
                let hi = ch.taps_of(i + 1, m);
                for j in i..k_n {
                    let hj = ch.taps_of(j + 1, m);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (p, a) in hi.iter().enumerate() {
                        let row = i * l_n + p;
                        let mut inner = Complex64::new(0.0, 0.0);
                        for (q, b) in hj.iter().enumerate() {
                            inner += self.reduced[(row, j * l_n + q)] * b;
                        }
                        acc += a.conj() * inner;
                    }
                    info[(i, j)] += acc.re;
                }
            }
        }
        for i in 0..k_n {
            for j in 0..i {
                info[(i, j)] = info[(j, i)];
            }
        }
        Ok(info)
    }

    /// (sigma^2 / 2) * (Re{V^H P_Q V})^{-1}.
    pub fn bound(&self, ch: &ChannelRealization, noise_var: f64) -> Result<DMatrix<f64>> {
        let info = self.information(ch)?;
        let chol = info.cholesky().ok_or(Error::SingularInformation)?;
        Ok(chol.inverse() * (noise_var / 2.0))
    }
}

/// Q_b, N x KL, column k*L + q holding Gamma(omega_k) A_k[:, q].
pub fn steered_pilot_matrix(cfg: &SystemConfig, pilots: &[PilotSequence], cfo: &CfoVector) -> DMatrix<Complex64> {
    let (n, l_n) = (cfg.training_len, cfg.taps);
    let mut q = DMatrix::<Complex64>::zeros(n, cfg.users * l_n);
    for (ki, pilot) in pilots.iter().enumerate() {
        let a = build_circulant(pilot, l_n);
        for c in 0..l_n {
            for t in 0..n {
                q[(t, ki * l_n + c)] = a.matrix()[(t, c)] * Complex64::from_polar(1.0, cfo.omega[ki] * t as f64);
            }
        }
    }
    q
}

/// K x K Cramer-Rao bound on the CFO vector for a realized channel.
pub fn crlb(
    cfg: &SystemConfig,
    pilots: &[PilotSequence],
    cfo: &CfoVector,
    ch: &ChannelRealization,
    noise_var: f64,
) -> Result<DMatrix<f64>> {
    CrlbEvaluator::new(cfg, pilots, cfo)?.bound(ch, noise_var)
}

/// Second moments of the in-phase and quadrature parts of the noise term nu_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStatistics {
    pub var_i: f64,
    pub var_q: f64,
}

pub fn noise_variance(cfg: &SystemConfig, gamma: f64, gain: f64, omega: f64) -> NoiseStatistics {
    let bm1 = b_minus_1(cfg);
    let denom = cfg.antennas as f64 * kl(cfg) * bm1;
    let coupling = (cfg.blocks() as f64 - 2.0) / bm1 * (2.0 * omega * kl(cfg)).cos();
    let quad = 1.0 / (2.0 * cfg.users as f64 * gamma * gamma);
    NoiseStatistics {
        var_i: (gain / gamma * (1.0 + coupling) + quad) / denom,
        var_q: (gain / gamma * (1.0 - coupling) + quad) / denom,
    }
}

/// M (N - KL) (KL)^2 G^2.
fn d_term(cfg: &SystemConfig, gain: f64) -> f64 {
    cfg.antennas as f64 * (cfg.training_len as f64 - kl(cfg)) * kl(cfg).powi(2) * gain * gain
}

/// Approximate MSE of omega_hat_k: (1/gamma)(G/(B-1) + 1/(2K gamma)) / (M (N-KL) (KL)^2 G^2).
pub fn theoretical_mse(cfg: &SystemConfig, gamma: f64, gain: f64) -> f64 {
    (gain / b_minus_1(cfg) + 1.0 / (2.0 * cfg.users as f64 * gamma)) / (gamma * d_term(cfg, gain))
}

/// SNR gamma_k^0 above which the linearized error model holds.
pub fn gamma_threshold(cfg: &SystemConfig, gain: f64) -> f64 {
    let b = cfg.blocks() as f64;
    let r = 2.0 * b - 3.0;
    let root = (1.0 + 2.0 * cfg.antennas as f64 * cfg.taps as f64 * (b - 1.0).powi(3) / (r * r)).sqrt();
    ((b - 1.0) / r) / (cfg.users as f64 * gain * (root - 1.0))
}

/// Target MSE and the gain factor at which to solve for the required SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrQuery {
    pub epsilon: f64,
    pub gain: f64,
}

impl SnrQuery {
    pub fn new(epsilon: f64) -> Self {
        SnrQuery { epsilon, gain: 1.0 }
    }
}

/// Positive root of eps*d*gamma^2 - (G/(B-1))*gamma - 1/(2K) = 0.
pub fn required_snr(q: &SnrQuery, cfg: &SystemConfig) -> f64 {
    let bm1 = b_minus_1(cfg);
    let ed = q.epsilon * d_term(cfg, q.gain);
    let disc = 1.0 + 2.0 * bm1 * bm1 * ed / (cfg.users as f64 * q.gain * q.gain);
    (q.gain / bm1) / (2.0 * ed) * (1.0 + disc.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticRegime {
    /// gamma ~ 1/sqrt(M) for M >> K / (2 eps (N-KL)^3).
    LargeM,
    /// The large-M law with N - KL replaced by N, for KL << N.
    LargeK,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSnr {
    pub gamma: f64,
    /// M_0 = K / (2 eps (N-KL)^3).
    pub m0: f64,
    /// M >= 100 * M_0.
    pub in_regime: bool,
}

pub fn required_snr_asymptotic(q: &SnrQuery, cfg: &SystemConfig, regime: AsymptoticRegime) -> AsymptoticSnr {
    let (m, k, l, n) = (
        cfg.antennas as f64,
        cfg.users as f64,
        cfg.taps as f64,
        cfg.training_len as f64,
    );
    let g2 = q.gain * q.gain;
    let gamma = match regime {
        AsymptoticRegime::LargeM => (1.0 / m.sqrt()) / (2.0 * q.epsilon * k.powi(3) * l * l * (n - k * l) * g2).sqrt(),
        AsymptoticRegime::LargeK => k.powf(-1.5) / (2.0 * q.epsilon * m * n * l * l * g2).sqrt(),
    };
    let m0 = k / (2.0 * q.epsilon * (n - k * l).powi(3));
    AsymptoticSnr {
        gamma,
        m0,
        in_regime: m >= LARGE_M_MARGIN * m0,
    }
}

/// Which of the two linearization conditions hold at an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub gamma_threshold: f64,
    /// |omega_k K L| < 0.1 pi.
    pub small_offset: bool,
    /// gamma_k > 10 gamma_k^0.
    pub above_threshold: bool,
}

impl RegimeReport {
    pub fn holds(&self) -> bool {
        self.small_offset && self.above_threshold
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.small_offset {
            w.push(format!("|omega*K*L| >= {SMALL_OFFSET_FRACTION}*pi: small-offset approximation is loose"));
        }
        if !self.above_threshold {
            w.push(format!(
                "SNR within {THRESHOLD_MARGIN}x of the threshold {:.6e}: MSE approximation is loose",
                self.gamma_threshold
            ));
        }
        w
    }
}

pub fn regime_check(cfg: &SystemConfig, gamma: f64, gain: f64, omega: f64) -> RegimeReport {
    let g0 = gamma_threshold(cfg, gain);
    RegimeReport {
        gamma_threshold: g0,
        small_offset: (omega * kl(cfg)).abs() < SMALL_OFFSET_FRACTION * PI,
        above_threshold: gamma > THRESHOLD_MARGIN * g0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    /// E[(nu_k^Q)^2] / (G_k K L)^2.
    pub mse: f64,
    pub noise: NoiseStatistics,
    pub regime: RegimeReport,
}

/// MSE implied by omega_hat ~ omega + nu^Q / (G K L), keeping the cos(2 omega K L) term.
pub fn mse_of_estimate_error_model(cfg: &SystemConfig, gamma: f64, gain: f64, omega: f64) -> ErrorModel {
    let noise = noise_variance(cfg, gamma, gain, omega);
    ErrorModel {
        mse: noise.var_q / (gain * kl(cfg)).powi(2),
        noise,
        regime: regime_check(cfg, gamma, gain, omega),
    }
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}
