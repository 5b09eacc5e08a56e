//! Simulation configuration: a sectioned `key = value` (TOML) document,
//! validated into a [`SimConfig`].
//!
//! ```toml
//! mass = 1.0
//! t_final = 50.0
//!
//! [wall.oscillating]
//! A = 5.0
//! B = 0.1
//! omega = 2.0
//! ```
//!
//! Every key except `mass`, `t_final` and the wall's `A` has a default; the
//! keys that were filled in are reported by [`ParsedConfig::defaults_applied`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::SpinorPacket;
use crate::observables::Convention;
use crate::wall::{WallLaw, WallMotion};

pub const DEFAULT_N_MAX: usize = 64;
pub const DEFAULT_RECORD_EVERY: usize = 10;
pub const DEFAULT_ORACLE_GRID: usize = 1024;
pub const DEFAULT_ORACLE_REFINE: usize = 4;
pub const DEFAULT_SNAPSHOT_POINTS: usize = 201;
/// Auto step: fastest pair phase advance per step.
pub const AUTO_PHASE_PER_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtauSpec {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub norm: bool,
    pub energy: bool,
    pub position: bool,
    pub force: bool,
    pub wavefunction: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { norm: true, energy: true, position: true, force: true, wavefunction: false }
    }
}

impl Outputs {
    fn names(&self) -> Vec<String> {
        [
            (self.norm, "norm"),
            (self.energy, "energy"),
            (self.position, "position"),
            (self.force, "force"),
            (self.wavefunction, "wavefunction"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| n.to_string())
        .collect()
    }

    fn from_names(names: &[String]) -> Result<Self> {
        let mut out = Self { norm: false, energy: false, position: false, force: false, wavefunction: false };
        for name in names {
            match name.as_str() {
                "norm" => out.norm = true,
                "energy" => out.energy = true,
                "position" => out.position = true,
                "force" => out.force = true,
                "wavefunction" => out.wavefunction = true,
                other => return Err(Error::Config(format!("outputs: unknown output `{other}`"))),
            }
        }
        Ok(out)
    }
}

/// Settings for the finite-difference cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleSettings {
    pub enabled: bool,
    pub grid_points: usize,
    /// Spectral step divided by this gives the oracle's step.
    pub refine: usize,
}

/// Validated simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mass: f64,
    pub wall: WallMotion,
    pub packet: SpinorPacket,
    pub n_max: usize,
    pub dtau: DtauSpec,
    pub t_final: f64,
    pub record_every: usize,
    pub outputs: Outputs,
    pub oracle: OracleSettings,
    pub force_convention: Convention,
    pub position_convention: Convention,
    pub renormalize_initial: bool,
    pub threads: usize,
    pub snapshot_points: usize,
    /// Snapshot every this many recorded rows; 0 means first and last only.
    pub snapshot_every: usize,
}

impl SimConfig {
    /// Configuration with every optional field at its default. The packet
    /// defaults to `d = 0.1`, `x0 = L(0)/2`, `v0 = 0`, spin up.
    pub fn new(mass: f64, wall: WallMotion, t_final: f64) -> Result<Self> {
        let x0 = 0.5 * wall.length(0.0)?;
        let packet = SpinorPacket::new(0.1, x0, 0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))?;
        let cfg = Self {
            mass,
            wall,
            packet,
            n_max: DEFAULT_N_MAX,
            dtau: DtauSpec::Auto,
            t_final,
            record_every: DEFAULT_RECORD_EVERY,
            outputs: Outputs::default(),
            oracle: OracleSettings {
                enabled: false,
                grid_points: DEFAULT_ORACLE_GRID,
                refine: DEFAULT_ORACLE_REFINE,
            },
            force_convention: Convention::Corrected,
            position_convention: Convention::Corrected,
            renormalize_initial: true,
            threads: 1,
            snapshot_points: DEFAULT_SNAPSHOT_POINTS,
            snapshot_every: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::Config(format!("mass: must be finite and >= 0 (got {})", self.mass)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::Config(format!("t_final: must be positive (got {})", self.t_final)));
        }
        if self.t_final > self.wall.window_end() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "t_final: {} exceeds the wall window end {}",
                self.t_final,
                self.wall.window_end()
            )));
        }
        if self.n_max < 1 {
            return Err(Error::Config("n_max: must be >= 1".into()));
        }
        if let DtauSpec::Fixed(d) = self.dtau {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("dtau: must be positive or \"auto\" (got {d})")));
            }
        }
        if self.record_every < 1 {
            return Err(Error::Config("record_every: must be >= 1".into()));
        }
        if self.threads < 1 {
            return Err(Error::Config("threads: must be >= 1".into()));
        }
        if self.oracle.grid_points < 2 || self.oracle.refine < 1 {
            return Err(Error::Config("oracle_grid must be >= 2 and oracle_refine >= 1".into()));
        }
        if self.snapshot_points < 2 {
            return Err(Error::Config("snapshot_points: must be >= 2".into()));
        }
        let l0 = self.wall.length(0.0)?;
        if !(self.packet.x0 > 0.0 && self.packet.x0 < l0) {
            return Err(Error::Config(format!("packet.x0: {} must lie inside (0, {l0})", self.packet.x0)));
        }
        Ok(())
    }

    /// Fastest pair frequency over the window, `√((n_max π)² + (m max L)²)`.
    pub fn max_pair_frequency(&self) -> f64 {
        (self.n_max as f64 * PI).hypot(self.mass * self.wall.max_length())
    }

    /// Step-size target before it is adjusted to land on `τ(t_final)`.
    pub fn dtau_target(&self) -> f64 {
        match self.dtau {
            DtauSpec::Fixed(d) => d,
            DtauSpec::Auto => AUTO_PHASE_PER_STEP / self.max_pair_frequency(),
        }
    }

    /// Final reparametrized time `τ(t_final)`.
    pub fn tau_final(&self) -> Result<f64> {
        self.wall.tau_of_t(self.t_final)
    }

    /// Uniform τ grid: `(steps, dtau)` with `steps · dtau = τ(t_final)`.
    pub fn tau_grid(&self) -> Result<(usize, f64)> {
        let tau_final = self.tau_final()?;
        let steps = ((tau_final / self.dtau_target()) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok((steps, tau_final / steps as f64))
    }

    /// Parses and validates a configuration document.
    pub fn parse(text: &str) -> Result<Self> {
        Ok(ParsedConfig::parse(text)?.config)
    }

    /// Prints the fully resolved configuration; `parse(to_toml())` recovers it.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("configuration serializes")
    }

    pub(crate) fn to_raw(&self) -> RawConfig {
        let wall = match self.wall.law() {
            WallLaw::Linear { a, b } => RawWall { linear: Some(RawLinear { a: *a, b: Some(*b) }), ..Default::default() },
            WallLaw::Oscillating { a, b, omega } => RawWall {
                oscillating: Some(RawOscillating { a: *a, b: *b, omega: *omega }),
                ..Default::default()
            },
            WallLaw::Tabulated(s) => RawWall {
                tabulated: Some(RawTabulated { times: s.knots().to_vec(), lengths: s.values().to_vec() }),
                ..Default::default()
            },
        };
        RawConfig {
            mass: Some(self.mass),
            t_final: Some(self.t_final),
            n_max: Some(self.n_max),
            dtau: Some(match self.dtau {
                DtauSpec::Auto => RawDtau::Text("auto".into()),
                DtauSpec::Fixed(d) => RawDtau::Value(d),
            }),
            record_every: Some(self.record_every),
            outputs: Some(self.outputs.names()),
            oracle: Some(self.oracle.enabled),
            oracle_grid: Some(self.oracle.grid_points),
            oracle_refine: Some(self.oracle.refine),
            force_convention: Some(self.force_convention),
            position_convention: Some(self.position_convention),
            renormalize_initial: Some(self.renormalize_initial),
            threads: Some(self.threads),
            snapshot_points: Some(self.snapshot_points),
            snapshot_every: Some(self.snapshot_every),
            wall: Some(wall),
            packet: Some(RawPacket {
                d: Some(self.packet.d),
                x0: Some(self.packet.x0),
                v0: Some(self.packet.v0),
                s1: Some(RawComplex::Pair([self.packet.s1.re, self.packet.s1.im])),
                s2: Some(RawComplex::Pair([self.packet.s2.re, self.packet.s2.im])),
            }),
        }
    }
}

/// A parsed configuration together with the list of keys that were defaulted.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: SimConfig,
    pub defaults_applied: Vec<String>,
}

impl ParsedConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        raw.into_config()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum RawDtau {
    Value(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum RawComplex {
    Real(f64),
    Pair([f64; 2]),
}

impl RawComplex {
    fn value(&self) -> Complex64 {
        match self {
            RawComplex::Real(r) => Complex64::new(*r, 0.0),
            RawComplex::Pair([r, i]) => Complex64::new(*r, *i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawLinear {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawOscillating {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawTabulated {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawWall {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<RawLinear>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillating: Option<RawOscillating>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulated: Option<RawTabulated>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawPacket {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<RawComplex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<RawComplex>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtau: Option<RawDtau>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_refine: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_convention: Option<Convention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_convention: Option<Convention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize_initial: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<RawWall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet: Option<RawPacket>,
}

fn or_default<T>(value: Option<T>, key: &str, default: T, applied: &mut Vec<String>) -> T {
    value.unwrap_or_else(|| {
        applied.push(key.to_string());
        default
    })
}

impl RawConfig {
    pub(crate) fn into_config(self) -> Result<ParsedConfig> {
        let mut applied = Vec::new();
        let mass = self.mass.ok_or_else(|| Error::Config("mass: missing required key".into()))?;
        let t_final = self.t_final.ok_or_else(|| Error::Config("t_final: missing required key".into()))?;
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::Config(format!("t_final: must be positive (got {t_final})")));
        }
        let wall = self.wall.ok_or_else(|| Error::Config("wall: missing section".into()))?;
        let laws = [wall.linear.is_some(), wall.oscillating.is_some(), wall.tabulated.is_some()];
        if laws.iter().filter(|&&x| x).count() != 1 {
            return Err(Error::Config(
                "wall: exactly one of [wall.linear], [wall.oscillating], [wall.tabulated] is required".into(),
            ));
        }
        let wall_err = |section: &str, e: Error| Error::Config(format!("wall.{section}: {e}"));
        let wall = if let Some(lin) = wall.linear {
            let b = or_default(lin.b, "wall.linear.B", 0.0, &mut applied);
            WallMotion::linear(lin.a, b, t_final).map_err(|e| wall_err("linear", e))?
        } else if let Some(osc) = wall.oscillating {
            WallMotion::oscillating(osc.a, osc.b, osc.omega, t_final).map_err(|e| wall_err("oscillating", e))?
        } else {
            let tab = wall.tabulated.unwrap();
            WallMotion::tabulated(tab.times, tab.lengths).map_err(|e| wall_err("tabulated", e))?
        };
        let l0 = wall.length(0.0)?;
        let packet = self.packet.unwrap_or_default();
        let packet = SpinorPacket::new(
            or_default(packet.d, "packet.d", 0.1, &mut applied),
            or_default(packet.x0, "packet.x0", 0.5 * l0, &mut applied),
            or_default(packet.v0, "packet.v0", 0.0, &mut applied),
            or_default(packet.s1.map(|c| c.value()), "packet.s1", Complex64::new(1.0, 0.0), &mut applied),
            or_default(packet.s2.map(|c| c.value()), "packet.s2", Complex64::new(0.0, 0.0), &mut applied),
        )
        .map_err(|e| Error::Config(format!("packet: {e}")))?;
        let dtau = match or_default(self.dtau, "dtau", RawDtau::Text("auto".into()), &mut applied) {
            RawDtau::Value(d) => DtauSpec::Fixed(d),
            RawDtau::Text(t) if t == "auto" => DtauSpec::Auto,
            RawDtau::Text(t) => return Err(Error::Config(format!("dtau: expected a number or \"auto\", got \"{t}\""))),
        };
        let outputs = match self.outputs {
            Some(names) => Outputs::from_names(&names)?,
            None => {
                applied.push("outputs".into());
                Outputs::default()
            }
        };
        let config = SimConfig {
            mass,
            wall,
            packet,
            n_max: or_default(self.n_max, "n_max", DEFAULT_N_MAX, &mut applied),
            dtau,
            t_final,
            record_every: or_default(self.record_every, "record_every", DEFAULT_RECORD_EVERY, &mut applied),
            outputs,
            oracle: OracleSettings {
                enabled: or_default(self.oracle, "oracle", false, &mut applied),
                grid_points: or_default(self.oracle_grid, "oracle_grid", DEFAULT_ORACLE_GRID, &mut applied),
                refine: or_default(self.oracle_refine, "oracle_refine", DEFAULT_ORACLE_REFINE, &mut applied),
            },
            force_convention: or_default(self.force_convention, "force_convention", Convention::Corrected, &mut applied),
            position_convention: or_default(
                self.position_convention,
                "position_convention",
                Convention::Corrected,
                &mut applied,
            ),
            renormalize_initial: or_default(self.renormalize_initial, "renormalize_initial", true, &mut applied),
            threads: or_default(self.threads, "threads", 1, &mut applied),
            snapshot_points: or_default(self.snapshot_points, "snapshot_points", DEFAULT_SNAPSHOT_POINTS, &mut applied),
            snapshot_every: or_default(self.snapshot_every, "snapshot_every", 0, &mut applied),
        };
        config.validate()?;
        Ok(ParsedConfig { config, defaults_applied: applied })
    }
}

/// Parameters that `sweep` can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    B,
    Omega,
    Mass,
    NMax,
    Dtau,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "b" => Ok(Self::B),
            "omega" => Ok(Self::Omega),
            "mass" | "m" => Ok(Self::Mass),
            "n_max" => Ok(Self::NMax),
            "dtau" => Ok(Self::Dtau),
            other => Err(Error::Config(format!(
                "sweep parameter `{other}` is not sweepable (use B, omega, mass, n_max or dtau)"
            ))),
        }
    }
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::B => "B",
            Self::Omega => "omega",
            Self::Mass => "mass",
            Self::NMax => "n_max",
            Self::Dtau => "dtau",
        }
    }
}

impl SimConfig {
    /// Copy of this configuration with one sweepable parameter replaced.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut raw = self.to_raw();
        match param {
            SweepParam::B => {
                let wall = raw.wall.as_mut().unwrap();
                if let Some(l) = wall.linear.as_mut() {
                    l.b = Some(value);
                } else if let Some(o) = wall.oscillating.as_mut() {
                    o.b = value;
                } else {
                    return Err(Error::Config("B: tabulated walls have no B parameter".into()));
                }
            }
            SweepParam::Omega => {
                let osc = raw.wall.as_mut().unwrap().oscillating.as_mut();
                osc.ok_or_else(|| Error::Config("omega: only oscillating walls have omega".into()))?.omega = value;
            }
            SweepParam::Mass => raw.mass = Some(value),
            SweepParam::NMax => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("n_max: {value} is not a positive integer")));
                }
                raw.n_max = Some(value as usize);
            }
            SweepParam::Dtau => raw.dtau = Some(RawDtau::Value(value)),
        }
        Ok(raw.into_config()?.config)
    }
}
