//! Rayleigh frequency-selective channel draws and received-signal synthesis.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pilot::PilotSequence;
use crate::system::{CfoVector, PowerDelayProfile, SystemConfig};

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel = 0,
    Noise = 1,
}

/// Seeded source of independent, order-free random substreams.
///
/// Substream (trial, purpose) is ChaCha8 keyed by the master seed with
/// stream id `2 * trial + purpose`, so a draw never depends on which other
/// trials ran before it or on which worker ran it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, trial: u64, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial.wrapping_mul(2).wrapping_add(purpose as u64));
        rng
    }
}

/// One CN(0, 1) sample.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Tap gains h_{km}[l] for one coherence interval, laid out user-major,
/// then antenna, then tap.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    users: usize,
    antennas: usize,
    taps: usize,
    gains: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn from_gains(users: usize, antennas: usize, taps: usize, gains: Vec<Complex64>) -> Result<Self> {
        if gains.len() != users * antennas * taps {
            return Err(Error::DimensionMismatch(format!(
                "{} gains for K={users} M={antennas} L={taps}",
                gains.len()
            )));
        }
        Ok(ChannelRealization {
            users,
            antennas,
            taps,
            gains,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Taps h_{km}[0..L) for one-based user `k` and zero-based antenna `m`.
    pub fn taps_of(&self, k: usize, m: usize) -> &[Complex64] {
        let start = ((k - 1) * self.antennas + m) * self.taps;
        &self.gains[start..start + self.taps]
    }

    pub fn gain(&self, k: usize, m: usize, l: usize) -> Complex64 {
        self.taps_of(k, m)[l]
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    /// Elementwise sum, for linearity checks.
    pub fn plus(&self, other: &ChannelRealization) -> Result<ChannelRealization> {
        if self.gains.len() != other.gains.len() {
            return Err(Error::DimensionMismatch("channel shapes differ".into()));
        }
        Ok(ChannelRealization {
            gains: self.gains.iter().zip(&other.gains).map(|(a, b)| a + b).collect(),
            ..*self
        })
    }
}

/// Draw h_{km}[l] = sigma_{hkl} * g_{km}[l] with g i.i.d. CN(0, 1).
///
/// Every g is drawn even where sigma_{hkl} = 0, so the stream position does
/// not depend on the profile.
pub fn draw_channel<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    pdp.check_dims(cfg)?;
    let (k_n, m_n, l_n) = (cfg.users, cfg.antennas, cfg.taps);
    let mut gains = Vec::with_capacity(k_n * m_n * l_n);
    for k in 1..=k_n {
        let sigma: Vec<f64> = pdp.user_row(k).iter().map(|v| v.sqrt()).collect();
        for _m in 0..m_n {
            for s in &sigma {
                let g = complex_normal(rng);
                gains.push(if *s == 0.0 { Complex64::new(0.0, 0.0) } else { g * *s });
            }
        }
    }
    Ok(ChannelRealization {
        users: k_n,
        antennas: m_n,
        taps: l_n,
        gains,
    })
}

/// M x N block of received samples r_m[t], stored antenna-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSignal {
    antennas: usize,
    len: usize,
    samples: Vec<Complex64>,
    pub seed: Option<u64>,
}

impl ReceivedSignal {
    pub fn zeros(antennas: usize, len: usize) -> Self {
        ReceivedSignal {
            antennas,
            len,
            samples: vec![Complex64::new(0.0, 0.0); antennas * len],
            seed: None,
        }
    }

    pub fn from_samples(antennas: usize, len: usize, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != antennas * len {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for M={antennas} N={len}",
                samples.len()
            )));
        }
        Ok(ReceivedSignal {
            antennas,
            len,
            samples,
            seed: None,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// r_m[0..N) for zero-based antenna `m`.
    pub fn antenna(&self, m: usize) -> &[Complex64] {
        &self.samples[m * self.len..(m + 1) * self.len]
    }

    pub fn antenna_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.samples[m * self.len..(m + 1) * self.len]
    }

    pub fn at(&self, m: usize, t: usize) -> Complex64 {
        self.samples[m * self.len + t]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    /// Add sigma * CN(0, 1) to every sample, antenna-major.
    pub fn add_noise<R: Rng + ?Sized>(&mut self, noise_var: f64, rng: &mut R) {
        let sigma = noise_var.sqrt();
        for s in &mut self.samples {
            *s += complex_normal(rng) * sigma;
        }
    }

    /// Little-endian dump: 32-byte header (magic, M, N, seed as u64) then
    /// interleaved re/im f64 samples, antenna-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(RX_MAGIC)?;
        w.write_all(&(self.antennas as u64).to_le_bytes())?;
        w.write_all(&(self.len as u64).to_le_bytes())?;
        w.write_all(&self.seed.unwrap_or(0).to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 32];
        r.read_exact(&mut header)?;
        if &header[..8] != RX_MAGIC {
            return Err(Error::Io("not a received-signal dump (bad magic)".into()));
        }
        let word = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
        let (antennas, len, seed) = (word(8) as usize, word(16) as usize, word(24));
        let mut buf = vec![0u8; antennas * len * 16];
        r.read_exact(&mut buf)?;
        let samples = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(ReceivedSignal {
            antennas,
            len,
            samples,
            seed: Some(seed),
        })
    }
}

pub const RX_MAGIC: &[u8; 8] = b"MCFORX01";

/// Noiseless part sum_k Gamma(omega_k) A_k h_{km} for every antenna.
///
/// Works on the nonzero pilot samples only: a[p] feeds time (p + l) mod N
/// through tap l, which is the circulant product without forming A_k.
pub fn synthesize_noiseless(
    ch: &ChannelRealization,
    pilots: &[PilotSequence],
    cfo: &CfoVector,
    cfg: &SystemConfig,
) -> Result<ReceivedSignal> {
    let n = cfg.training_len;
    if ch.users() != cfg.users || ch.antennas() != cfg.antennas || ch.taps() != cfg.taps {
        return Err(Error::DimensionMismatch(format!(
            "channel is K={} M={} L={}, system is K={} M={} L={}",
            ch.users(),
            ch.antennas(),
            ch.taps(),
            cfg.users,
            cfg.antennas,
            cfg.taps
        )));
    }
    if pilots.len() != cfg.users || pilots.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "need {} pilots of length {n}",
            cfg.users
        )));
    }
    if cfo.len() != cfg.users {
        return Err(Error::DimensionMismatch(format!(
            "{} CFOs for {} users",
            cfo.len(),
            cfg.users
        )));
    }

    let mut rx = ReceivedSignal::zeros(cfg.antennas, n);
    for (ki, pilot) in pilots.iter().enumerate() {
        let k = ki + 1;
        let omega = cfo.omega[ki];
        let ramp: Vec<Complex64> = (0..n)
            .map(|t| Complex64::from_polar(1.0, omega * t as f64))
            .collect();
        // (time, a[p] * exp(j omega t), tap) triples shared by all antennas
        let mut feeds = Vec::new();
        for (p, a) in pilot.impulses() {
            for l in 0..cfg.taps {
                let t = (p + l) % n;
                feeds.push((t, a * ramp[t], l));
            }
        }
        for m in 0..cfg.antennas {
            let h = ch.taps_of(k, m);
            let row = rx.antenna_mut(m);
            for &(t, w, l) in &feeds {
                row[t] += w * h[l];
            }
        }
    }
    Ok(rx)
}

/// r_m = sum_k Gamma(omega_k) A_k h_{km} + n_m with n_m[t] i.i.d. CN(0, sigma^2).
pub fn synthesize_rx<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    pilots: &[PilotSequence],
    cfo: &CfoVector,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ReceivedSignal> {
    let mut rx = synthesize_noiseless(ch, pilots, cfo, cfg)?;
    rx.add_noise(cfg.noise_var, rng);
    Ok(rx)
}
