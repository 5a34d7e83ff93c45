//! Scenario files: INI-style sections of `key = value` lines.
//!
//! ```text
//! [system]
//! antennas = 40
//! users = 5
//! taps = 2
//! training_len = 100
//!
//! [cfo]
//! omega = pi/2500
//!
//! [pdp]
//! profile = uniform
//!
//! [experiment]
//! axis = snr
//! grid = -25:2.5:20
//! seed = 7
//! ```
//!
//! Unknown sections and keys are rejected so that typos fail loudly. See
//! `docs/formats.md` for the full key list.

use std::f64::consts::PI;
use std::path::Path;

use ini::Ini;

use crate::error::{Error, Result};
use crate::experiments::{Averaging, Axis, CfoSpec, ExperimentSpec, PdpSpec, TrainingPolicy};
use crate::system::{CfoVector, PowerDelayProfile, SystemConfig};

const SYSTEM_KEYS: &[&str] = &[
    "antennas",
    "users",
    "taps",
    "training_len",
    "pilot_power",
    "noise_var",
    "carrier_hz",
    "osc_accuracy",
    "bandwidth_hz",
];
const CFO_KEYS: &[&str] = &["omega", "delta_hz"];
const PDP_KEYS: &[&str] = &["profile", "matrix"];
const EXPERIMENT_KEYS: &[&str] = &[
    "axis",
    "grid",
    "trials",
    "probe_trials",
    "seed",
    "epsilon",
    "user",
    "bracket_db",
    "tol_db",
    "mode",
    "training",
    "workers",
];

fn bad(msg: impl Into<String>) -> Error {
    Error::SpecParse(msg.into())
}

/// A real number, or a multiple/fraction of pi: `0.01`, `pi`, `-pi/10`, `2*pi/5`.
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(bad(format!("non-finite number '{t}'"))) };
    }
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, t),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (body, None),
    };
    let coeff = match num.split_once('*') {
        Some((c, p)) if p.trim() == "pi" => c.trim().parse::<f64>().ok(),
        None if num == "pi" => Some(1.0),
        _ => None,
    };
    let div = match den {
        Some(d) => d.parse::<f64>().ok().filter(|d| *d != 0.0),
        None => Some(1.0),
    };
    match (coeff, div) {
        (Some(c), Some(d)) => Ok(sign * c * PI / d),
        _ => Err(bad(format!("cannot parse number '{t}'"))),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_real).collect()
}

fn parse_count(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| bad(format!("{key}: expected a non-negative integer, got '{}'", s.trim())))
}

/// Either a comma-separated list or an inclusive `start:step:stop` range.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [one] => parse_list(one),
        [a, step, b] => {
            let (a, step, b) = (parse_real(a)?, parse_real(step)?, parse_real(b)?);
            if step == 0.0 || (b - a) / step < 0.0 {
                return Err(bad(format!("range {a}:{step}:{b} is empty or unbounded")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(bad(format!("grid '{s}' is neither a list nor start:step:stop"))),
    }
}

fn integer_grid(values: &[f64]) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|v| {
            if *v >= 0.0 && v.fract() == 0.0 {
                Ok(*v as usize)
            } else {
                Err(bad(format!("grid value {v} must be a non-negative integer")))
            }
        })
        .collect()
}

fn check_keys(ini: &Ini, section: &str, allowed: &[&str]) -> Result<()> {
    if let Some(props) = ini.section(Some(section)) {
        for (k, _) in props.iter() {
            if !allowed.contains(&k) {
                return Err(bad(format!("unknown key '{k}' in [{section}]")));
            }
        }
    }
    Ok(())
}

fn get<'a>(ini: &'a Ini, section: &str, key: &str) -> Option<&'a str> {
    ini.section(Some(section)).and_then(|s| s.get(key)).map(str::trim)
}

fn required<'a>(ini: &'a Ini, section: &str, key: &str) -> Result<&'a str> {
    get(ini, section, key).ok_or_else(|| bad(format!("missing [{section}] {key}")))
}

fn optional_real(ini: &Ini, section: &str, key: &str) -> Result<Option<f64>> {
    get(ini, section, key).map(parse_real).transpose()
}

/// Parse scenario text. Structural problems are `SpecParse` errors; the
/// physics (divisibility, CFO range, ...) is checked later by
/// [`ExperimentSpec::validate`].
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let ini = Ini::load_from_str(text).map_err(|e| bad(e.to_string()))?;
    for name in ini.sections().flatten() {
        if !["system", "cfo", "pdp", "experiment"].contains(&name) {
            return Err(bad(format!("unknown section [{name}]")));
        }
    }
    if ini.section(None::<String>).is_some_and(|s| !s.is_empty()) {
        return Err(bad("keys outside of any section"));
    }
    check_keys(&ini, "system", SYSTEM_KEYS)?;
    check_keys(&ini, "cfo", CFO_KEYS)?;
    check_keys(&ini, "pdp", PDP_KEYS)?;
    check_keys(&ini, "experiment", EXPERIMENT_KEYS)?;

    let count = |key: &str| -> Result<usize> { parse_count(key, required(&ini, "system", key)?) };
    let mut system = SystemConfig::new(count("antennas")?, count("users")?, count("taps")?, count("training_len")?);
    if let Some(p) = optional_real(&ini, "system", "pilot_power")? {
        system.pilot_power = p;
    }
    if let Some(s2) = optional_real(&ini, "system", "noise_var")? {
        system.noise_var = s2;
    }
    system.carrier_hz = optional_real(&ini, "system", "carrier_hz")?;
    system.osc_accuracy = optional_real(&ini, "system", "osc_accuracy")?;
    system.bandwidth_hz = optional_real(&ini, "system", "bandwidth_hz")?;

    let cfo = match (get(&ini, "cfo", "omega"), get(&ini, "cfo", "delta_hz")) {
        (Some(_), Some(_)) => return Err(bad("[cfo] takes omega or delta_hz, not both")),
        (Some(w), None) => match parse_list(w)?.as_slice() {
            [one] => CfoSpec::Common(*one),
            many => CfoSpec::PerUser(many.to_vec()),
        },
        (None, Some(hz)) => {
            let ts = system
                .sample_period()
                .ok_or_else(|| bad("[cfo] delta_hz needs [system] bandwidth_hz"))?;
            let cfo = CfoVector::from_hz(&parse_list(hz)?, ts);
            match cfo.omega.as_slice() {
                [one] => CfoSpec::Common(*one),
                many => CfoSpec::PerUser(many.to_vec()),
            }
        }
        (None, None) => CfoSpec::Common(0.0),
    };

    let pdp = match (get(&ini, "pdp", "profile"), get(&ini, "pdp", "matrix")) {
        (Some(_), Some(_)) => return Err(bad("[pdp] takes profile or matrix, not both")),
        (Some("uniform"), None) | (None, None) => PdpSpec::Uniform,
        (Some(other), None) => return Err(bad(format!("unknown pdp profile '{other}'"))),
        (None, Some(m)) => {
            let values = parse_list(m)?;
            PdpSpec::Explicit(
                PowerDelayProfile::new(system.users, system.taps, values).map_err(|e| bad(format!("[pdp] matrix: {e}")))?,
            )
        }
    };

    let grid = get(&ini, "experiment", "grid").map(parse_grid).transpose()?.unwrap_or_default();
    let axis = match get(&ini, "experiment", "axis").unwrap_or("snr") {
        "snr" => Axis::Snr(grid),
        "antennas" => Axis::Antennas(integer_grid(&grid)?),
        "users" => Axis::Users(integer_grid(&grid)?),
        other => return Err(bad(format!("unknown axis '{other}' (snr, antennas, users)"))),
    };

    let mut spec = ExperimentSpec::new(system, axis);
    spec.cfo = cfo;
    spec.pdp = pdp;
    if let Some(v) = get(&ini, "experiment", "trials") {
        spec.trials = parse_count("trials", v)?;
    }
    if let Some(v) = get(&ini, "experiment", "probe_trials") {
        spec.probe_trials = parse_count("probe_trials", v)?;
    }
    if let Some(v) = get(&ini, "experiment", "seed") {
        spec.seed = Some(v.parse().map_err(|_| bad(format!("seed: expected u64, got '{v}'")))?);
    }
    if let Some(v) = optional_real(&ini, "experiment", "epsilon")? {
        spec.epsilon = v;
    }
    if let Some(v) = get(&ini, "experiment", "user") {
        spec.user = parse_count("user", v)?;
    }
    if let Some(v) = get(&ini, "experiment", "bracket_db") {
        match parse_list(v)?.as_slice() {
            [lo, hi] => spec.bracket_db = (*lo, *hi),
            _ => return Err(bad("bracket_db needs two values: lo, hi")),
        }
    }
    if let Some(v) = optional_real(&ini, "experiment", "tol_db")? {
        spec.tol_db = v;
    }
    if let Some(v) = get(&ini, "experiment", "mode") {
        spec.averaging = match v {
            "marginal" => Averaging::Marginal,
            "condition-on-channel" => Averaging::ConditionOnChannel,
            other => return Err(bad(format!("unknown mode '{other}'"))),
        };
    }
    if let Some(v) = get(&ini, "experiment", "training") {
        spec.training = match v {
            "exact" => TrainingPolicy::Exact,
            "truncate" => TrainingPolicy::Truncate,
            other => return Err(bad(format!("unknown training policy '{other}'"))),
        };
    }
    if let Some(v) = get(&ini, "experiment", "workers") {
        spec.workers = parse_count("workers", v)?;
    }
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<(ExperimentSpec, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read spec {}: {e}", path.display())))?;
    Ok((parse_spec(&text)?, text))
}
