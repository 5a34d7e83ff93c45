//! C ABI over `mimo_cfo`.
//!
//! A scenario is an opaque `MimoCfoSystem*` created with
//! [`mimo_cfo_system_new`] and released with [`mimo_cfo_system_free`]. Every
//! other call returns a [`MimoCfoStatus`]; on failure the message is available
//! from [`mimo_cfo_last_error`] on the same thread. Output pointers are only
//! written on success. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use mimo_cfo::analysis::{gamma_threshold, noise_variance, required_snr, theoretical_mse, CrlbEvaluator, SnrQuery};
use mimo_cfo::channel::{draw_channel, synthesize_rx, Purpose, ReceivedSignal, RngStream};
use mimo_cfo::estimator::estimate_all;
use mimo_cfo::experiments::Scenario;
use mimo_cfo::pilot::{generate_all, PilotSequence};
use mimo_cfo::system::{max_users, CfoVector, PowerDelayProfile, SystemConfig};
use mimo_cfo::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MimoCfoStatus {
    Ok = 0,
    /// Null pointer or undersized output buffer.
    InvalidArgument = 1,
    /// The scenario or inputs violate a model constraint.
    Validation = 2,
    /// A numerical failure (singular bound, undefined estimate, ...).
    Numerical = 3,
    /// Internal panic; the handle should be discarded.
    Panic = 4,
}

/// Opaque scenario handle.
pub struct MimoCfoSystem {
    scenario: Scenario,
    pilots: Vec<PilotSequence>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: MimoCfoStatus, msg: &str) -> MimoCfoStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> MimoCfoStatus {
    let status = if e.is_validation() {
        MimoCfoStatus::Validation
    } else {
        MimoCfoStatus::Numerical
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> MimoCfoStatus) -> MimoCfoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == MimoCfoStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(MimoCfoStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(MimoCfoStatus::InvalidArgument, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn mimo_cfo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create a scenario with a uniform power-delay profile. `omega` holds one
/// CFO per user (radians per channel use), or a single value shared by all.
///
/// # Safety
/// `omega` must point to `omega_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_system_new(
    antennas: usize,
    users: usize,
    taps: usize,
    training_len: usize,
    pilot_power: f64,
    noise_var: f64,
    omega: *const f64,
    omega_len: usize,
    out: *mut *mut MimoCfoSystem,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(omega, out);
        let w = slice::from_raw_parts(omega, omega_len);
        let cfo = match w {
            [one] => CfoVector::uniform(users, *one),
            many => CfoVector::new(many.to_vec()),
        };
        let cfg = SystemConfig::new(antennas, users, taps, training_len)
            .with_pilot_power(pilot_power)
            .with_noise_var(noise_var);
        let pdp = if users > 0 && taps > 0 {
            PowerDelayProfile::uniform(users, taps)
        } else {
            return fail(MimoCfoStatus::Validation, "antennas, users, taps and training_len must be positive");
        };
        let made = Scenario::new(cfg, cfo, pdp).and_then(|scenario| {
            let pilots = generate_all(scenario.config())?;
            Ok(MimoCfoSystem { scenario, pilots })
        });
        match made {
            Ok(sys) => {
                *out = Box::into_raw(Box::new(sys));
                MimoCfoStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `sys` must come from [`mimo_cfo_system_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_system_free(sys: *mut MimoCfoSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of pilot-blocks B = N / (K L).
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_system_blocks(sys: *const MimoCfoSystem, out: *mut usize) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, out);
        *out = (*sys).scenario.config().blocks();
        MimoCfoStatus::Ok
    })
}

unsafe fn write_estimates(
    sys: &MimoCfoSystem,
    rx: &ReceivedSignal,
    omega_hat: *mut f64,
    len: usize,
    macs: *mut u64,
) -> MimoCfoStatus {
    let sc = &sys.scenario;
    match estimate_all(rx, sc.config(), sc.pdp()) {
        Ok(est) => {
            slice::from_raw_parts_mut(omega_hat, len).copy_from_slice(&est.omega_hat);
            if !macs.is_null() {
                *macs = est.total_macs;
            }
            MimoCfoStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Estimate every user's CFO from received samples: `rx` holds M*N complex
/// values as interleaved (re, im) pairs, antenna-major. `omega_hat` receives
/// K values; `macs` (optional) the multiply-accumulate count.
///
/// # Safety
/// `rx` must point to `rx_len` doubles and `omega_hat` to `omega_hat_len`.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_estimate(
    sys: *const MimoCfoSystem,
    rx: *const f64,
    rx_len: usize,
    omega_hat: *mut f64,
    omega_hat_len: usize,
    macs: *mut u64,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, rx, omega_hat);
        let sys = &*sys;
        let cfg = sys.scenario.config();
        if rx_len != 2 * cfg.antennas * cfg.training_len || omega_hat_len != cfg.users {
            return fail(MimoCfoStatus::InvalidArgument, "buffer sizes must be 2*M*N and K");
        }
        let samples = slice::from_raw_parts(rx, rx_len)
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        match ReceivedSignal::from_samples(cfg.antennas, cfg.training_len, samples) {
            Ok(r) => write_estimates(sys, &r, omega_hat, omega_hat_len, macs),
            Err(e) => from_error(e),
        }
    })
}

/// Simulate trial `trial` under master seed `seed` (Rayleigh channel, noise at
/// the handle's noise variance) and estimate every user's CFO.
///
/// # Safety
/// `omega_hat` must point to `omega_hat_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_simulate_estimate(
    sys: *const MimoCfoSystem,
    seed: u64,
    trial: u64,
    omega_hat: *mut f64,
    omega_hat_len: usize,
    macs: *mut u64,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, omega_hat);
        let sys = &*sys;
        let sc = &sys.scenario;
        if omega_hat_len != sc.config().users {
            return fail(MimoCfoStatus::InvalidArgument, "omega_hat must hold K values");
        }
        let stream = RngStream::new(seed);
        let rx = draw_channel(sc.pdp(), sc.config(), &mut stream.substream(trial, Purpose::Channel)).and_then(|ch| {
            synthesize_rx(&ch, &sys.pilots, sc.cfo(), sc.config(), &mut stream.substream(trial, Purpose::Noise))
        });
        match rx {
            Ok(r) => write_estimates(sys, &r, omega_hat, omega_hat_len, macs),
            Err(e) => from_error(e),
        }
    })
}

/// K x K CRLB matrix (row-major) at the channel drawn for `trial` under `seed`.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_crlb(
    sys: *const MimoCfoSystem,
    seed: u64,
    trial: u64,
    out: *mut f64,
    out_len: usize,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, out);
        let sys = &*sys;
        let sc = &sys.scenario;
        let k = sc.config().users;
        if out_len != k * k {
            return fail(MimoCfoStatus::InvalidArgument, "out must hold K*K values");
        }
        let bound = CrlbEvaluator::new(sc.config(), &sys.pilots, sc.cfo()).and_then(|ev| {
            let ch = draw_channel(sc.pdp(), sc.config(), &mut RngStream::new(seed).substream(trial, Purpose::Channel))?;
            ev.bound(&ch, sc.config().noise_var)
        });
        match bound {
            Ok(b) => {
                let dst = slice::from_raw_parts_mut(out, out_len);
                for r in 0..k {
                    for c in 0..k {
                        dst[r * k + c] = b[(r, c)];
                    }
                }
                MimoCfoStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

fn check_positive(name: &str, v: f64) -> Option<MimoCfoStatus> {
    (!(v > 0.0 && v.is_finite())).then(|| fail(MimoCfoStatus::Validation, &format!("{name} must be positive, got {v}")))
}

/// Closed-form MSE at received SNR `gamma` (linear) and gain factor `gain`.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_theoretical_mse(
    sys: *const MimoCfoSystem,
    gamma: f64,
    gain: f64,
    out: *mut f64,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, out);
        if let Some(s) = check_positive("gamma", gamma).or_else(|| check_positive("gain", gain)) {
            return s;
        }
        *out = theoretical_mse((*sys).scenario.config(), gamma, gain);
        MimoCfoStatus::Ok
    })
}

/// SNR (linear) above which the closed-form MSE is accurate.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_gamma_threshold(sys: *const MimoCfoSystem, gain: f64, out: *mut f64) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, out);
        if let Some(s) = check_positive("gain", gain) {
            return s;
        }
        *out = gamma_threshold((*sys).scenario.config(), gain);
        MimoCfoStatus::Ok
    })
}

/// SNR (linear) at which the closed-form MSE equals `epsilon`.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_required_snr(
    sys: *const MimoCfoSystem,
    epsilon: f64,
    gain: f64,
    out: *mut f64,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, out);
        if let Some(s) = check_positive("epsilon", epsilon).or_else(|| check_positive("gain", gain)) {
            return s;
        }
        let q = SnrQuery { epsilon, gain };
        *out = required_snr(&q, (*sys).scenario.config());
        MimoCfoStatus::Ok
    })
}

/// In-phase and quadrature noise variances of the correlation statistic.
///
/// # Safety
/// `sys` must be a live handle; `var_i` and `var_q` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_noise_variance(
    sys: *const MimoCfoSystem,
    gamma: f64,
    gain: f64,
    omega: f64,
    var_i: *mut f64,
    var_q: *mut f64,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(sys, var_i, var_q);
        if let Some(s) = check_positive("gamma", gamma).or_else(|| check_positive("gain", gain)) {
            return s;
        }
        let v = noise_variance((*sys).scenario.config(), gamma, gain, omega);
        *var_i = v.var_i;
        *var_q = v.var_q;
        MimoCfoStatus::Ok
    })
}

/// Largest K with |omega K L| < pi for CFO fraction `kappa` of carrier
/// `carrier_hz` and delay spread `delay_spread_s`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimo_cfo_max_users(
    kappa: f64,
    carrier_hz: f64,
    delay_spread_s: f64,
    out: *mut u64,
) -> MimoCfoStatus {
    guard(|| {
        non_null!(out);
        match max_users(kappa, carrier_hz, delay_spread_s) {
            Ok(k) => {
                *out = k;
                MimoCfoStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
