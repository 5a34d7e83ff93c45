//! System parameters, operating-range validation and pilot-slot time indexing.
//!
//! Index conventions used throughout the crate:
//! - time `t` runs `0..N`, so the CFO phase ramp is `exp(j*omega*t)` starting at 1;
//! - tap `l` runs `0..L` and antenna `m` runs `0..M`;
//! - pilot-block `b` runs `1..=B` and user `k` runs `1..=K`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Scalar parameters of one CFO-estimation uplink slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS antennas (M).
    pub antennas: usize,
    /// Single-antenna user terminals (K).
    pub users: usize,
    /// Channel taps / delay spread in channel uses (L).
    pub taps: usize,
    /// Training length in channel uses (N).
    pub training_len: usize,
    /// Average per-user pilot power p_u, linear.
    pub pilot_power: f64,
    /// Noise variance sigma^2, linear. Zero gives a noiseless slot.
    pub noise_var: f64,
    pub carrier_hz: Option<f64>,
    /// Oscillator accuracy kappa, e.g. 1e-7 for 0.1 PPM.
    pub osc_accuracy: Option<f64>,
    pub bandwidth_hz: Option<f64>,
}

impl SystemConfig {
    pub fn new(antennas: usize, users: usize, taps: usize, training_len: usize) -> Self {
        SystemConfig {
            antennas,
            users,
            taps,
            training_len,
            pilot_power: 1.0,
            noise_var: 1.0,
            carrier_hz: None,
            osc_accuracy: None,
            bandwidth_hz: None,
        }
    }

    pub fn with_pilot_power(mut self, p_u: f64) -> Self {
        self.pilot_power = p_u;
        self
    }

    pub fn with_noise_var(mut self, sigma2: f64) -> Self {
        self.noise_var = sigma2;
        self
    }

    /// K*L, the length of one pilot-block.
    pub fn block_len(&self) -> usize {
        self.users * self.taps
    }

    /// B = N / (K*L). Only meaningful once N is known to be a multiple of K*L.
    pub fn blocks(&self) -> usize {
        self.training_len / self.block_len().max(1)
    }

    /// Sampling period 1/B_w, when the bandwidth is known.
    pub fn sample_period(&self) -> Option<f64> {
        self.bandwidth_hz.map(|bw| 1.0 / bw)
    }

    /// Largest admissible |omega| (radians per channel use) for this K*L.
    pub fn max_abs_cfo(&self) -> f64 {
        PI / self.block_len() as f64
    }
}

/// Per-user CFOs omega_k in radians per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct CfoVector {
    pub omega: Vec<f64>,
}

impl CfoVector {
    pub fn new(omega: Vec<f64>) -> Self {
        CfoVector { omega }
    }

    pub fn uniform(users: usize, omega: f64) -> Self {
        CfoVector { omega: vec![omega; users] }
    }

    /// omega_k = 2*pi*delta_f_k*T_s.
    pub fn from_hz(delta_f: &[f64], sample_period: f64) -> Self {
        CfoVector {
            omega: delta_f.iter().map(|df| 2.0 * PI * df * sample_period).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// CFO of user `k` (one-based).
    pub fn get(&self, k: usize) -> f64 {
        self.omega[k - 1]
    }
}

/// Tap variances sigma^2_{hkl}, stored row-major as K rows of L taps.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    users: usize,
    taps: usize,
    variances: Vec<f64>,
}

impl PowerDelayProfile {
    pub fn new(users: usize, taps: usize, variances: Vec<f64>) -> Result<Self> {
        if users == 0 || taps == 0 {
            return Err(Error::InvalidPdp("empty profile".into()));
        }
        if variances.len() != users * taps {
            return Err(Error::InvalidPdp(format!(
                "expected {}x{} = {} entries, got {}",
                users,
                taps,
                users * taps,
                variances.len()
            )));
        }
        if let Some(bad) = variances.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidPdp(format!(
                "entry {} (user {}, tap {}) is {}",
                bad,
                bad / taps + 1,
                bad % taps,
                variances[bad]
            )));
        }
        let pdp = PowerDelayProfile {
            users,
            taps,
            variances,
        };
        for k in 1..=users {
            if pdp.user_power(k) <= 0.0 {
                return Err(Error::InvalidPdp(format!("user {k} has zero total tap power")));
            }
        }
        Ok(pdp)
    }

    /// Equal power 1/L on every tap of every user.
    pub fn uniform(users: usize, taps: usize) -> Self {
        PowerDelayProfile {
            users,
            taps,
            variances: vec![1.0 / taps as f64; users * taps],
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// sigma^2_{hkl} for one-based user `k`.
    pub fn variance(&self, k: usize, l: usize) -> f64 {
        self.variances[(k - 1) * self.taps + l]
    }

    pub fn user_row(&self, k: usize) -> &[f64] {
        &self.variances[(k - 1) * self.taps..k * self.taps]
    }

    /// Sum over taps of sigma^2_{hkl}.
    pub fn user_power(&self, k: usize) -> f64 {
        self.user_row(k).iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.variances
    }

    /// Received SNR gamma_k = (p_u / sigma^2) * sum_l sigma^2_{hkl}.
    pub fn snr(&self, cfg: &SystemConfig, k: usize) -> f64 {
        cfg.pilot_power / cfg.noise_var * self.user_power(k)
    }

    pub(crate) fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        if self.users != cfg.users || self.taps != cfg.taps {
            return Err(Error::DimensionMismatch(format!(
                "PDP is {}x{}, system has K={} L={}",
                self.users, self.taps, cfg.users, cfg.taps
            )));
        }
        Ok(())
    }
}

/// A configuration and CFO vector that passed [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    cfg: SystemConfig,
    cfo: CfoVector,
}

impl ValidatedConfig {
    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn cfo(&self) -> &CfoVector {
        &self.cfo
    }

    pub fn blocks(&self) -> usize {
        self.cfg.blocks()
    }

    pub fn into_parts(self) -> (SystemConfig, CfoVector) {
        (self.cfg, self.cfo)
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = SystemConfig;

    fn deref(&self) -> &SystemConfig {
        &self.cfg
    }
}

/// Check every operating-range constraint of the estimator.
pub fn validate_config(cfg: SystemConfig, cfo: CfoVector) -> Result<ValidatedConfig> {
    for (name, v) in [
        ("antennas (M)", cfg.antennas),
        ("users (K)", cfg.users),
        ("taps (L)", cfg.taps),
        ("training_len (N)", cfg.training_len),
    ] {
        if v == 0 {
            return Err(Error::ZeroDimension { name });
        }
    }
    let kl = cfg.block_len();
    if cfg.training_len % kl != 0 {
        return Err(Error::NonDivisibleTraining {
            n: cfg.training_len,
            kl,
        });
    }
    let blocks = cfg.blocks();
    if blocks < 2 {
        return Err(Error::TooFewBlocks { blocks });
    }
    if !(cfg.pilot_power > 0.0 && cfg.pilot_power.is_finite()) {
        return Err(Error::NonPositivePower {
            name: "pilot_power",
            value: cfg.pilot_power,
        });
    }
    // sigma^2 = 0 is admitted as the noiseless limit.
    if !(cfg.noise_var >= 0.0 && cfg.noise_var.is_finite()) {
        return Err(Error::NonPositivePower {
            name: "noise_var",
            value: cfg.noise_var,
        });
    }
    if cfo.len() != cfg.users {
        return Err(Error::CfoLength {
            expected: cfg.users,
            got: cfo.len(),
        });
    }
    for (i, &w) in cfo.omega.iter().enumerate() {
        let scaled = (w * kl as f64).abs();
        if !(scaled < PI) {
            return Err(Error::CfoOutOfRange { user: i + 1, scaled });
        }
    }
    Ok(ValidatedConfig { cfg, cfo })
}

/// Largest user count K with K < 1 / (2 * kappa * f_c * T_d).
///
/// A bound that lands on an integer to within 1e-9 relative is treated as
/// that integer, so the strict inequality excludes it.
pub fn max_users(kappa: f64, carrier_hz: f64, delay_spread_s: f64) -> Result<u64> {
    for (name, v) in [
        ("kappa", kappa),
        ("carrier_hz", carrier_hz),
        ("delay_spread_s", delay_spread_s),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let bound = 1.0 / (2.0 * kappa * carrier_hz * delay_spread_s);
    let nearest = bound.round();
    let k = if (bound - nearest).abs() <= 1e-9 * bound {
        nearest - 1.0
    } else {
        bound.floor()
    };
    Ok(k.max(0.0) as u64)
}

/// Time index of tap `l` of user `k` in pilot-block `b`: (b-1)KL + (k-1)L + l.
pub fn tau(b: usize, k: usize, l: usize, cfg: &SystemConfig) -> Result<usize> {
    let blocks = cfg.blocks();
    if b == 0 || b > blocks || k == 0 || k > cfg.users || l >= cfg.taps {
        return Err(Error::IndexOutOfRange(format!(
            "tau(b={b}, k={k}, l={l}) with B={blocks}, K={}, L={}",
            cfg.users, cfg.taps
        )));
    }
    Ok(tau_unchecked(b, k, l, cfg.users, cfg.taps))
}

#[inline]
pub(crate) fn tau_unchecked(b: usize, k: usize, l: usize, users: usize, taps: usize) -> usize {
    (b - 1) * users * taps + (k - 1) * taps + l
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(m: usize, k: usize, l: usize, n: usize) -> SystemConfig {
        SystemConfig::new(m, k, l, n)
    }

    #[test]
    fn remark_one_operating_point_is_valid() {
        let v = validate_config(cfg(100, 10, 5, 500), CfoVector::uniform(10, PI / 2500.0)).unwrap();
        assert_eq!(v.blocks(), 10);
        let scaled = PI / 2500.0 * 50.0;
        assert!((scaled - PI / 50.0).abs() < 1e-15);
    }

    #[test]
    fn smallest_legal_configuration() {
        let v = validate_config(cfg(1, 1, 1, 2), CfoVector::uniform(1, 0.0)).unwrap();
        assert_eq!(v.blocks(), 2);
    }

    #[test]
    fn rejects_each_constraint() {
        assert_eq!(
            validate_config(cfg(1, 2, 2, 10), CfoVector::uniform(2, 0.0)),
            Err(Error::NonDivisibleTraining { n: 10, kl: 4 })
        );
        assert_eq!(
            validate_config(cfg(1, 2, 2, 4), CfoVector::uniform(2, 0.0)),
            Err(Error::TooFewBlocks { blocks: 1 })
        );
        assert!(matches!(
            validate_config(cfg(1, 2, 2, 8), CfoVector::uniform(2, PI / 4.0)),
            Err(Error::CfoOutOfRange { user: 1, .. })
        ));
        assert!(matches!(
            validate_config(cfg(1, 2, 2, 8).with_pilot_power(0.0), CfoVector::uniform(2, 0.0)),
            Err(Error::NonPositivePower { .. })
        ));
        assert!(matches!(
            validate_config(cfg(1, 2, 2, 8).with_noise_var(-1.0), CfoVector::uniform(2, 0.0)),
            Err(Error::NonPositivePower { .. })
        ));
        assert!(matches!(
            validate_config(cfg(0, 2, 2, 8), CfoVector::uniform(2, 0.0)),
            Err(Error::ZeroDimension { .. })
        ));
        assert!(matches!(
            validate_config(cfg(1, 2, 2, 8), CfoVector::uniform(3, 0.0)),
            Err(Error::CfoLength { .. })
        ));
    }

    #[test]
    fn negative_cfo_is_allowed() {
        assert!(validate_config(cfg(1, 2, 2, 8), CfoVector::new(vec![-0.1, 0.1])).is_ok());
    }

    #[test]
    fn max_users_examples() {
        assert_eq!(max_users(1e-7, 2e9, 5e-6).unwrap(), 499);
        assert_eq!(max_users(1e-7, 2e9, 1e-6).unwrap(), 2499);
        // 1/(2 * 0.05 * 1 * 1) = 10 exactly
        assert_eq!(max_users(0.05, 1.0, 1.0).unwrap(), 9);
        assert_eq!(max_users(0.03, 1.0, 1.0).unwrap(), 16);
        assert!(max_users(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn tau_examples() {
        let c = cfg(1, 2, 2, 12);
        assert_eq!(tau(1, 1, 0, &c).unwrap(), 0);
        assert_eq!(tau(2, 1, 0, &c).unwrap(), 4);
        assert_eq!(tau(3, 2, 1, &c).unwrap(), 11);
        assert!(tau(4, 1, 0, &c).is_err());
        assert!(tau(0, 1, 0, &c).is_err());
        assert!(tau(1, 3, 0, &c).is_err());
        assert!(tau(1, 1, 2, &c).is_err());
    }

    #[test]
    fn pdp_validation() {
        assert!(PowerDelayProfile::new(2, 2, vec![0.5, 0.5, 1.0, 0.0]).is_ok());
        assert!(PowerDelayProfile::new(2, 2, vec![0.5, 0.5, 0.0, 0.0]).is_err());
        assert!(PowerDelayProfile::new(2, 2, vec![0.5, -0.5, 1.0, 0.0]).is_err());
        assert!(PowerDelayProfile::new(2, 2, vec![0.5, 0.5, 1.0]).is_err());
        let u = PowerDelayProfile::uniform(3, 4);
        assert!((u.user_power(3) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn tau_is_a_bijection(k in 1usize..6, l in 1usize..5, b in 2usize..6) {
            let c = cfg(1, k, l, b * k * l);
            let mut seen = vec![false; c.training_len];
            for bb in 1..=b {
                for kk in 1..=k {
                    for ll in 0..l {
                        let t = tau(bb, kk, ll, &c).unwrap();
                        prop_assert!(!seen[t]);
                        seen[t] = true;
                    }
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }

        #[test]
        fn validation_matches_invariants(
            m in 0usize..4, k in 1usize..5, l in 1usize..4, n in 0usize..60,
            p in -1.0f64..2.0, s in -1.0f64..2.0, w in -1.5f64..1.5,
        ) {
            let c = cfg(m, k, l, n).with_pilot_power(p).with_noise_var(s);
            let expected = m >= 1 && n >= 1 && n % (k * l) == 0 && n / (k * l) >= 2
                && p > 0.0 && s >= 0.0 && (w * (k * l) as f64).abs() < PI;
            prop_assert_eq!(validate_config(c, CfoVector::uniform(k, w)).is_ok(), expected);
        }
    }
}
