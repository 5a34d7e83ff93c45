//! Correlation-based per-user CFO estimator.
//!
//! For user k the samples at tau(b, k, l) and tau(b+1, k, l) see the same
//! channel tap, so their conjugate product carries the phase omega_k * K * L.
//! Averaging that product over blocks, antennas and taps gives rho_k, and
//! arg(rho_k) / (K*L) is the estimate. Only M*(B-1)*L complex
//! multiply-accumulates are needed per user.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{ChannelRealization, ReceivedSignal};
use crate::error::{Error, Result};
use crate::system::{tau_unchecked, PowerDelayProfile, SystemConfig};

/// |rho_k| at or below this is treated as a vanished statistic.
pub const RHO_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationStat {
    pub user: usize,
    pub rho: Complex64,
    /// Complex multiply-accumulates spent on rho, M*(B-1)*L.
    pub mac_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfoEstimate {
    pub omega_hat: Vec<f64>,
    pub stats: Vec<CorrelationStat>,
    /// (M*(B-1)*L + 1) * K: one extra operation per user for arg and scaling.
    pub total_macs: u64,
}

impl CfoEstimate {
    pub fn macs_per_channel_use(&self, cfg: &SystemConfig) -> f64 {
        self.total_macs as f64 / cfg.training_len as f64
    }
}

fn check_signal(rx: &ReceivedSignal, cfg: &SystemConfig, pdp: &PowerDelayProfile) -> Result<()> {
    if rx.antennas() != cfg.antennas || rx.len() != cfg.training_len {
        return Err(Error::DimensionMismatch(format!(
            "signal is {}x{}, system is M={} N={}",
            rx.antennas(),
            rx.len(),
            cfg.antennas,
            cfg.training_len
        )));
    }
    pdp.check_dims(cfg)?;
    if cfg.blocks() < 2 || cfg.training_len % cfg.block_len() != 0 {
        return Err(Error::TooFewBlocks { blocks: cfg.blocks() });
    }
    Ok(())
}

/// rho_k for one-based user `k`.
pub fn correlate(
    rx: &ReceivedSignal,
    k: usize,
    cfg: &SystemConfig,
    pdp: &PowerDelayProfile,
) -> Result<CorrelationStat> {
    check_signal(rx, cfg, pdp)?;
    if k == 0 || k > cfg.users {
        return Err(Error::IndexOutOfRange(format!("user {k} of {}", cfg.users)));
    }
    let tap_power = pdp.user_power(k);
    if !(tap_power > 0.0) {
        return Err(Error::ZeroPdp { user: k });
    }
    let (users, taps, blocks) = (cfg.users, cfg.taps, cfg.blocks());
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..cfg.antennas {
        let r = rx.antenna(m);
        for b in 1..blocks {
            let here = tau_unchecked(b, k, 0, users, taps);
            let next = here + users * taps;
            for l in 0..taps {
                acc += r[here + l].conj() * r[next + l];
            }
        }
    }
    let denom = (cfg.antennas * users * taps * (blocks - 1)) as f64 * cfg.pilot_power * tap_power;
    Ok(CorrelationStat {
        user: k,
        rho: acc / denom,
        mac_count: (cfg.antennas * (blocks - 1) * taps) as u64,
    })
}

/// omega_hat_k = arg(rho_k) / (K*L), with arg taken in (-pi, pi].
pub fn estimate_cfo(stat: &CorrelationStat, cfg: &SystemConfig) -> Result<f64> {
    if !(stat.rho.norm() > RHO_FLOOR) {
        return Err(Error::UndefinedEstimate { user: stat.user });
    }
    let mut arg = stat.rho.arg();
    if arg <= -PI {
        arg = PI;
    }
    Ok(arg / cfg.block_len() as f64)
}

/// Estimate every user's CFO from one received slot.
pub fn estimate_all(rx: &ReceivedSignal, cfg: &SystemConfig, pdp: &PowerDelayProfile) -> Result<CfoEstimate> {
    let mut omega_hat = Vec::with_capacity(cfg.users);
    let mut stats = Vec::with_capacity(cfg.users);
    let mut total_macs = 0;
    for k in 1..=cfg.users {
        let stat = correlate(rx, k, cfg, pdp)?;
        omega_hat.push(estimate_cfo(&stat, cfg)?);
        total_macs += stat.mac_count + 1;
        stats.push(stat);
    }
    Ok(CfoEstimate {
        omega_hat,
        stats,
        total_macs,
    })
}

/// Closed-form operation count (M*(B-1)*L + 1) * K.
pub fn expected_macs(cfg: &SystemConfig) -> u64 {
    ((cfg.antennas * (cfg.blocks() - 1) * cfg.taps + 1) * cfg.users) as u64
}

/// Realized gain G_k = sum_{m,l} |h_{km}[l]|^2 / (M * sum_l sigma^2_{hkl}).
pub fn gain_factor(ch: &ChannelRealization, k: usize, pdp: &PowerDelayProfile) -> Result<f64> {
    if k == 0 || k > ch.users() || ch.users() != pdp.users() || ch.taps() != pdp.taps() {
        return Err(Error::DimensionMismatch(format!(
            "user {k}, channel K={} L={}, PDP K={} L={}",
            ch.users(),
            ch.taps(),
            pdp.users(),
            pdp.taps()
        )));
    }
    let tap_power = pdp.user_power(k);
    if !(tap_power > 0.0) {
        return Err(Error::ZeroPdp { user: k });
    }
    let energy: f64 = (0..ch.antennas())
        .flat_map(|m| ch.taps_of(k, m).iter())
        .map(|h| h.norm_sqr())
        .sum();
    Ok(energy / (ch.antennas() as f64 * tap_power))
}
