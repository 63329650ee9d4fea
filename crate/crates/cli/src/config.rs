//! Flat `key = value` configuration files and the value parsers shared with
//! command-line flags.
//!
//! Rate-study keys:
//!
//! | key | value |
//! |-----|-------|
//! | `model` | synthetic preset name |
//! | `scheme` | `kernel` or `knn` |
//! | `kernel` | `uniform` or `boxed:m1:m2:r1:r2` |
//! | `schedule` | `scale:exponent`, `const:value` or `optimal` |
//! | `n_grid` | `512,1024,...` or `2^9..2^15` |
//! | `replications`, `test_points`, `seed` | integers |
//! | `order` | metric order p ≥ 1 |
//! | `tilde_ck` | nearest-neighbor bound constant for k ≥ 2 |
//! | `tolerance` | slope tolerance |
//! | `bounds` | `true` to also tabulate bounds against risk |
//! | `output` | prefix of the CSV and JSON files |

use std::collections::BTreeMap;
use std::path::Path;

use distreg::bounds::{minimax_rate, ClassParams};
use distreg::experiments::ExperimentPlan;
use distreg::synth::{SyntheticModel, PRESET_NAMES};
use distreg::weights::{KernelKind, SchemeRule, Schedule};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const SEED_ENV: &str = "DISTREG_SEED";

/// Shipped rate-study configurations.
pub const PRESETS: &[(&str, &str)] = &[
    ("binary-k1-kernel", include_str!("../presets/binary-k1-kernel.conf")),
    ("binary-k2-kernel", include_str!("../presets/binary-k2-kernel.conf")),
    ("binary-k1-knn", include_str!("../presets/binary-k1-knn.conf")),
    ("binary-k2-knn", include_str!("../presets/binary-k2-knn.conf")),
    ("gaussian-k1-kernel", include_str!("../presets/gaussian-k1-kernel.conf")),
    ("binary-k1-const-knn", include_str!("../presets/binary-k1-const-knn.conf")),
];

const RATE_KEYS: &[&str] = &[
    "model",
    "scheme",
    "kernel",
    "schedule",
    "n_grid",
    "replications",
    "test_points",
    "seed",
    "order",
    "tilde_ck",
    "tolerance",
    "bounds",
    "output",
];

/// Parsed `key = value` pairs with their source line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
    source: String,
}

impl KeyValues {
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("{source}:{}: expected key = value", i + 1)))?;
            let key = k.trim().to_owned();
            if let Some((_, prev)) = entries.insert(key.clone(), (v.trim().to_owned(), i + 1)) {
                return Err(CliError::usage(format!("{source}:{}: `{key}` already set on line {prev}", i + 1)));
            }
        }
        Ok(Self { entries, source: source.to_owned() })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn preset(name: &str) -> CliResult<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            CliError::usage(format!("unknown preset `{name}`; available: {}", names.join(", ")))
        })?;
        Self::parse(text, &format!("preset {name}"))
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> CliResult<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("override `{assignment}` is not key=value")))?;
        self.entries.insert(k.trim().to_owned(), (v.trim().to_owned(), 0));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match self.entries.get(key) {
            Some((_, line)) if *line > 0 => CliError::usage(format!("{}:{line}: `{key}`: {msg}", self.source)),
            _ => CliError::usage(format!("{}: `{key}`: {msg}", self.source)),
        }
    }

    fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key).ok_or_else(|| CliError::usage(format!("{}: missing required key `{key}`", self.source)))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| v.parse::<T>().map_err(|e| self.err(key, e))).transpose()
    }

    fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(self.err(k, "unknown key")),
            None => Ok(()),
        }
    }
}

/// A validated rate-study configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub plan: ExperimentPlan,
    pub with_bounds: bool,
    pub output: String,
}

impl RateConfig {
    /// Builds and validates the plan. `seed` is the fallback used when the
    /// file sets none.
    pub fn from_keys(kv: &KeyValues, default_output: &str, seed: u64) -> CliResult<Self> {
        kv.check_keys(RATE_KEYS)?;
        let model = parse_model(kv.require("model")?).map_err(|e| kv.err("model", e))?;
        let scheme = parse_rule(
            kv.require("scheme")?,
            kv.get("kernel").unwrap_or("uniform"),
            kv.require("schedule")?,
            &model,
        )
        .map_err(|e| kv.err("scheme", e))?;
        let n_grid = parse_n_grid(kv.require("n_grid")?).map_err(|e| kv.err("n_grid", e))?;
        let replications = kv.parsed::<usize>("replications")?.unwrap_or(40);
        let seed = kv.parsed::<u64>("seed")?.unwrap_or(seed);
        let mut plan = ExperimentPlan::new(model, scheme, n_grid, replications, seed);
        if let Some(t) = kv.parsed::<usize>("test_points")? {
            plan.test_points = t;
        }
        if let Some(p) = kv.parsed::<f64>("order")? {
            plan.order = p;
        }
        if let Some(t) = kv.parsed::<f64>("tolerance")? {
            plan.slope_tolerance = t;
        }
        plan.tilde_ck = kv.parsed::<f64>("tilde_ck")?;
        let with_bounds = kv.parsed::<bool>("bounds")?.unwrap_or(false);
        plan.validate().map_err(|e| CliError::usage(format!("{}: {e}", kv.source)))?;
        if with_bounds {
            if plan.scheme.is_knn() && plan.model.k() >= 2 && plan.tilde_ck.is_none() {
                return Err(CliError::usage(format!("{}: `tilde_ck` is required for knn bounds with k ≥ 2", kv.source)));
            }
            if plan.order != 1.0 || plan.model.d() != 1 {
                return Err(CliError::usage(format!("{}: bounds need order 1 and scalar responses", kv.source)));
            }
        }
        let output = kv.get("output").unwrap_or(default_output).to_owned();
        Ok(Self { plan, with_bounds, output })
    }
}

/// Seed from the environment, else the built-in default.
pub fn default_seed() -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn parse_model(name: &str) -> Result<SyntheticModel, String> {
    SyntheticModel::preset(name).map_err(|_| format!("unknown model `{name}`; available: {}", PRESET_NAMES.join(", ")))
}

/// A number or a fraction `a/b`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

pub fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let kind = match parts.as_slice() {
        ["uniform"] => KernelKind::Uniform,
        ["boxed", m1, m2, r1, r2] => KernelKind::Boxed {
            m1: parse_number(m1)?,
            m2: parse_number(m2)?,
            r1: parse_number(r1)?,
            r2: parse_number(r2)?,
        },
        _ => return Err(format!("kernel `{s}` is not `uniform` or `boxed:m1:m2:r1:r2`")),
    };
    kind.validate().map_err(|e| e.to_string())?;
    Ok(kind)
}

/// `scale:exponent`, `const:value` or `optimal`.
pub fn parse_schedule(s: &str, knn: bool, params: &ClassParams) -> Result<Schedule, String> {
    let s = s.trim();
    if s == "optimal" {
        let rate = minimax_rate(params).map_err(|e| e.to_string())?;
        return Ok(Schedule::power(1.0, if knn { rate.neighbors_exponent } else { rate.bandwidth_exponent }));
    }
    let (a, b) = s.split_once(':').ok_or_else(|| format!("schedule `{s}` is not scale:exponent, const:value or optimal"))?;
    let sched = if a.trim() == "const" {
        Schedule::constant(parse_number(b)?)
    } else {
        Schedule::power(parse_number(a)?, parse_number(b)?)
    };
    if !(sched.scale > 0.0) {
        return Err(format!("schedule `{s}` must have a positive scale"));
    }
    Ok(sched)
}

pub fn parse_rule(scheme: &str, kernel: &str, schedule: &str, model: &SyntheticModel) -> Result<SchemeRule, String> {
    match scheme.trim() {
        "kernel" => Ok(SchemeRule::Kernel { kernel: parse_kernel(kernel)?, bandwidth: parse_schedule(schedule, false, &model.params)? }),
        "knn" => Ok(SchemeRule::Knn { neighbors: parse_schedule(schedule, true, &model.params)? }),
        other => Err(format!("scheme `{other}` is not `kernel` or `knn`")),
    }
}

fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    match s.split_once('^') {
        Some((b, e)) => {
            let b: usize = b.trim().parse().map_err(|_| format!("`{s}` is not a size"))?;
            let e: u32 = e.trim().parse().map_err(|_| format!("`{s}` is not a size"))?;
            b.checked_pow(e).ok_or_else(|| format!("`{s}` overflows"))
        }
        None => s.parse().map_err(|_| format!("`{s}` is not a size")),
    }
}

/// `a,b,c` (each possibly `base^exp`) or `base^lo..base^hi`.
pub fn parse_n_grid(s: &str) -> Result<Vec<usize>, String> {
    let grid = if let Some((lo, hi)) = s.split_once("..") {
        let (b1, e1) = lo.trim().split_once('^').ok_or_else(|| format!("range `{s}` must read base^lo..base^hi"))?;
        let (b2, e2) = hi.trim().split_once('^').ok_or_else(|| format!("range `{s}` must read base^lo..base^hi"))?;
        if b1.trim() != b2.trim() {
            return Err(format!("range `{s}` mixes bases"));
        }
        let base: usize = b1.trim().parse().map_err(|_| format!("`{b1}` is not a base"))?;
        let (e1, e2): (u32, u32) = (
            e1.trim().parse().map_err(|_| format!("`{e1}` is not an exponent"))?,
            e2.trim().parse().map_err(|_| format!("`{e2}` is not an exponent"))?,
        );
        (e1..=e2).map(|e| base.checked_pow(e).ok_or_else(|| format!("`{s}` overflows"))).collect::<Result<_, _>>()?
    } else {
        s.split(',').map(parse_size).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("grid `{s}` must be nonempty, positive and strictly increasing"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_schedules() {
        assert_eq!(parse_n_grid("2^9..2^11").unwrap(), vec![512, 1024, 2048]);
        assert_eq!(parse_n_grid("10, 2^5,100").unwrap(), vec![10, 32, 100]);
        assert!(parse_n_grid("100,10").is_err());
        let m = parse_model("binary-k1").unwrap();
        assert_eq!(parse_schedule("1:-1/3", false, &m.params).unwrap(), Schedule::power(1.0, -1.0 / 3.0));
        assert_eq!(parse_schedule("optimal", false, &m.params).unwrap(), Schedule::power(1.0, -1.0 / 3.0));
        assert_eq!(parse_schedule("optimal", true, &m.params).unwrap(), Schedule::power(1.0, 0.5));
        assert_eq!(parse_schedule("const:5", true, &m.params).unwrap(), Schedule::constant(5.0));
        assert!(parse_schedule("0:1", true, &m.params).is_err());
        assert!(parse_kernel("boxed:0.5:1:0.5:1").is_ok());
        assert!(parse_kernel("gaussian").is_err());
    }

    #[test]
    fn presets_validate() {
        for (name, _) in PRESETS {
            let kv = KeyValues::preset(name).unwrap();
            RateConfig::from_keys(&kv, name, DEFAULT_SEED).unwrap();
        }
    }

    #[test]
    fn config_errors_name_the_line() {
        let kv = KeyValues::parse("model = binary-k1\nscheme = knn\nschedule = 1:1/2\nn_grid = 2^4..2^6\nfoo = 1\n", "t").unwrap();
        let e = RateConfig::from_keys(&kv, "x", 1).unwrap_err().to_string();
        assert!(e.contains("t:5") && e.contains("foo"), "{e}");
        assert!(KeyValues::parse("a = 1\na = 2\n", "t").is_err());
        assert!(KeyValues::parse("novalue\n", "t").is_err());
    }
}
