//! Run parameters from a TOML file and/or command-line flags.
//!
//! Defaults, filled in only for the keys a subcommand uses:
//!
//! | key              | default                                   |
//! |------------------|-------------------------------------------|
//! | `family`         | `cusp`                                    |
//! | `k`              | 128                                       |
//! | `k_list`         | `[64, 128, 256, 512]`                     |
//! | `amplitude`      | `k^{-p}` (`p = 2/3` cusp, `1/2` smooth)   |
//! | `t_end`          | `k^{p}`                                   |
//! | `s`              | 0.6 (cusp), 0.45 (smooth)                 |
//! | `delta`          | 0.05                                      |
//! | `modes`          | 64                                        |
//! | `records`        | 400                                       |
//! | `phase_fraction` | 0.1                                       |
//! | `count`          | 10                                        |
//! | `dynamics`       | `false`                                   |
//! | `vectors`        | `false`                                   |
//!
//! `dt` and `points` have no default: the time step follows the stability
//! rules and the grid follows the resolution rule unless given explicitly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::airy::MAX_ZERO_INDEX;
use crate::dynamics::DEFAULT_PHASE_FRACTION;
use crate::error::{Error, Result};
use crate::experiments::{LipschitzRun, RunSettings, DEFAULT_MODES, DEFAULT_RECORDS};
use crate::field::SobolevIndex;
use crate::metric::{Family, Grid, PotentialProfile};

pub const DEFAULT_K: u32 = 128;
pub const DEFAULT_K_LIST: [u32; 4] = [64, 128, 256, 512];
pub const DEFAULT_DELTA: f64 = 0.05;
/// Largest angular mode accepted; the resolved grid already has ~2.6e4 points.
pub const MAX_K: u32 = 4096;
pub const MAX_RECORDS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Oracle,
    Eig,
    Evolve,
    Modulation,
    Lipschitz,
    Sweep,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Oracle,
        Subcommand::Eig,
        Subcommand::Evolve,
        Subcommand::Modulation,
        Subcommand::Lipschitz,
        Subcommand::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Oracle => "oracle",
            Subcommand::Eig => "eig",
            Subcommand::Evolve => "evolve",
            Subcommand::Modulation => "modulation",
            Subcommand::Lipschitz => "lipschitz",
            Subcommand::Sweep => "sweep",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        const DYNAMICS: [&str; 3] = ["modes", "records", "phase_fraction"];
        match self {
            Subcommand::Oracle => &["count"],
            Subcommand::Eig => &["family", "k", "modes", "points", "vectors"],
            Subcommand::Evolve => &[
                "family", "k", "amplitude", "s", "t_end", "dt", DYNAMICS[0], DYNAMICS[1], DYNAMICS[2],
            ],
            Subcommand::Modulation => &[
                "family", "k", "amplitude", "t_end", "dt", DYNAMICS[0], DYNAMICS[1], DYNAMICS[2],
            ],
            Subcommand::Lipschitz => &[
                "family", "k", "s", "delta", "dt", DYNAMICS[0], DYNAMICS[1], DYNAMICS[2],
            ],
            Subcommand::Sweep => &[
                "family", "k_list", "s", "delta", "dynamics", DYNAMICS[0], DYNAMICS[1], DYNAMICS[2],
            ],
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand `{s}`")))
    }
}

/// Parameters as written by the user. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<bool>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string()))
    }

    /// Keys set in `top` win over keys set in `self`.
    pub fn overlay(self, top: RawConfig) -> RawConfig {
        RawConfig {
            family: top.family.or(self.family),
            k: top.k.or(self.k),
            k_list: top.k_list.or(self.k_list),
            amplitude: top.amplitude.or(self.amplitude),
            s: top.s.or(self.s),
            delta: top.delta.or(self.delta),
            t_end: top.t_end.or(self.t_end),
            dt: top.dt.or(self.dt),
            modes: top.modes.or(self.modes),
            points: top.points.or(self.points),
            records: top.records.or(self.records),
            phase_fraction: top.phase_fraction.or(self.phase_fraction),
            count: top.count.or(self.count),
            dynamics: top.dynamics.or(self.dynamics),
            vectors: top.vectors.or(self.vectors),
        }
    }

    fn present(&self) -> Vec<&'static str> {
        let set = [
            ("family", self.family.is_some()),
            ("k", self.k.is_some()),
            ("k_list", self.k_list.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("s", self.s.is_some()),
            ("delta", self.delta.is_some()),
            ("t_end", self.t_end.is_some()),
            ("dt", self.dt.is_some()),
            ("modes", self.modes.is_some()),
            ("points", self.points.is_some()),
            ("records", self.records.is_some()),
            ("phase_fraction", self.phase_fraction.is_some()),
            ("count", self.count.is_some()),
            ("dynamics", self.dynamics.is_some()),
            ("vectors", self.vectors.is_some()),
        ];
        set.into_iter().filter(|(_, on)| *on).map(|(k, _)| k).collect()
    }
}

/// A validated parameter set: the subcommand plus every key it uses, with
/// defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub params: RawConfig,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn unused_hint(sub: Subcommand, key: &str) -> String {
    let why = match (sub, key) {
        (Subcommand::Lipschitz, "amplitude") => " (amplitudes follow from k and delta)",
        (Subcommand::Lipschitz, "t_end") => " (the run ends at t_star = k^p)",
        (Subcommand::Sweep, "k") => " (use k_list)",
        (Subcommand::Sweep, "dt") => " (each k gets its own automatic step)",
        (_, "k_list") => " (only sweep takes a list of k)",
        (Subcommand::Modulation, "s") => " (the fit does not depend on s)",
        _ => "",
    };
    let flag = key.replace('_', "-");
    format!("`{key}` is not used by {sub}{why}; remove --{flag}")
}

fn check_k(k: i64) -> Result<u32> {
    if k < 1 {
        return Err(config_err(format!("k must be at least 1 (got {k})")));
    }
    if k > i64::from(MAX_K) {
        return Err(config_err(format!("k must be at most {MAX_K} (got {k})")));
    }
    Ok(k as u32)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("{name} must be positive and finite (got {v})")))
    }
}

fn check_modes(profile: &PotentialProfile, grid: &Grid, modes: usize) -> Result<()> {
    let limit = grid.len() / 4;
    if modes == 0 || modes > limit {
        return Err(config_err(format!(
            "modes must lie in 1..={limit} for {} k={} on {} points (got {modes})",
            profile.family(),
            profile.k(),
            grid.len()
        )));
    }
    Ok(())
}

fn grid_for(profile: &PotentialProfile, points: Option<usize>) -> Result<Grid> {
    let resolved = Grid::resolving(profile)?;
    let Some(n) = points else { return Ok(resolved) };
    if n % 2 != 0 {
        return Err(config_err(format!("points must be even (got {n})")));
    }
    if n < resolved.len() {
        return Err(config_err(format!(
            "points = {n} under-resolves {} k={}: use at least {}",
            profile.family(),
            profile.k(),
            resolved.len()
        )));
    }
    Grid::new(n)
}

/// Validates `raw` for `sub` and fills in defaults.
pub fn parse_config(sub: Subcommand, raw: &RawConfig) -> Result<RunConfig> {
    let allowed = sub.keys();
    if let Some(key) = raw.present().into_iter().find(|k| !allowed.contains(k)) {
        return Err(config_err(unused_hint(sub, key)));
    }
    let uses = |key: &str| allowed.contains(&key);
    let family = raw.family.unwrap_or(Family::LipschitzCusp);
    let p = family.length_exponent();
    let mut out = RawConfig::default();

    if uses("count") {
        let count = raw.count.unwrap_or(MAX_ZERO_INDEX);
        if count == 0 || count > MAX_ZERO_INDEX {
            return Err(config_err(format!("count must lie in 1..={MAX_ZERO_INDEX} (got {count})")));
        }
        out.count = Some(count);
        return Ok(RunConfig { subcommand: sub, params: out });
    }

    out.family = Some(family);
    if uses("records") {
        let records = raw.records.unwrap_or(DEFAULT_RECORDS);
        if records < 2 || records > MAX_RECORDS {
            return Err(config_err(format!("records must lie in 2..={MAX_RECORDS} (got {records})")));
        }
        out.records = Some(records);
        let fraction = raw.phase_fraction.unwrap_or(DEFAULT_PHASE_FRACTION);
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(config_err(format!("phase_fraction must lie in (0,1) (got {fraction})")));
        }
        out.phase_fraction = Some(fraction);
    }
    let modes = raw.modes.unwrap_or(DEFAULT_MODES);
    out.modes = Some(modes);

    let ks: Vec<u32> = if uses("k_list") {
        let list = raw
            .k_list
            .clone()
            .unwrap_or_else(|| DEFAULT_K_LIST.iter().map(|&k| i64::from(k)).collect());
        let list = list.into_iter().map(check_k).collect::<Result<Vec<_>>>()?;
        if list.len() < 3 || list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("k_list must be strictly increasing with at least 3 entries"));
        }
        out.k_list = Some(list.iter().map(|&k| i64::from(k)).collect());
        list
    } else {
        let k = check_k(raw.k.unwrap_or(i64::from(DEFAULT_K)))?;
        out.k = Some(i64::from(k));
        vec![k]
    };

    for &k in &ks {
        let profile = PotentialProfile::new(family, k)?;
        let grid = grid_for(&profile, raw.points)?;
        check_modes(&profile, &grid, modes)?;
    }
    out.points = raw.points;
    if uses("vectors") {
        out.vectors = Some(raw.vectors.unwrap_or(false));
    }
    if uses("dynamics") {
        out.dynamics = Some(raw.dynamics.unwrap_or(false));
    }

    let k = f64::from(ks[0]);
    if uses("amplitude") {
        out.amplitude = Some(positive("amplitude", raw.amplitude.unwrap_or(k.powf(-p)))?);
    }
    if uses("t_end") {
        out.t_end = Some(positive("t_end", raw.t_end.unwrap_or(k.powf(p)))?);
    }
    if let Some(dt) = raw.dt {
        out.dt = Some(positive("dt", dt)?);
    }
    if uses("s") {
        let default = match family {
            Family::LipschitzCusp => 0.6,
            Family::SmoothWell => 0.45,
        };
        let s = SobolevIndex::new(raw.s.unwrap_or(default))?.value();
        if uses("delta") && s >= p {
            return Err(config_err(format!(
                "s must be below {} for the {family} family, where the flow is Lipschitz from there on (got {s})",
                if family == Family::LipschitzCusp { "2/3" } else { "1/2" }
            )));
        }
        out.s = Some(s);
    }
    if uses("delta") {
        let delta = raw.delta.unwrap_or(DEFAULT_DELTA);
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(config_err(format!("delta must be positive (got {delta})")));
        }
        let s = SobolevIndex::new(out.s.unwrap_or(0.0))?;
        for &k in &ks {
            LipschitzRun::new(family, k, s, delta).map_err(|e| config_err(format!("delta = {delta}: {e}")))?;
        }
        out.delta = Some(delta);
    }
    Ok(RunConfig { subcommand: sub, params: out })
}

/// Parses a TOML document for `sub`.
pub fn parse_config_str(sub: Subcommand, text: &str) -> Result<RunConfig> {
    parse_config(sub, &RawConfig::from_toml(text)?)
}

impl RunConfig {
    /// Re-runs validation; a config that came out of [`parse_config`] is a
    /// fixed point.
    pub fn validate(&self) -> Result<()> {
        let again = parse_config(self.subcommand, &self.params)?;
        if &again != self {
            return Err(config_err("config is not in resolved form; regenerate it from flags or TOML"));
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        self.params.family.unwrap_or(Family::LipschitzCusp)
    }

    pub fn k(&self) -> u32 {
        self.params.k.map_or(DEFAULT_K, |k| k as u32)
    }

    pub fn k_list(&self) -> Vec<u32> {
        self.params
            .k_list
            .as_ref()
            .map_or_else(|| DEFAULT_K_LIST.to_vec(), |l| l.iter().map(|&k| k as u32).collect())
    }

    pub fn profile(&self) -> Result<PotentialProfile> {
        PotentialProfile::new(self.family(), self.k())
    }

    pub fn grid(&self) -> Result<Grid> {
        grid_for(&self.profile()?, self.params.points)
    }

    pub fn s(&self) -> Result<SobolevIndex> {
        SobolevIndex::new(self.params.s.unwrap_or(0.0))
    }

    pub fn settings(&self) -> RunSettings {
        let d = RunSettings::default();
        RunSettings {
            modes: self.params.modes.unwrap_or(d.modes),
            phase_fraction: self.params.phase_fraction.unwrap_or(d.phase_fraction),
            records: self.params.records.unwrap_or(d.records),
            dt: self.params.dt,
        }
    }
}
