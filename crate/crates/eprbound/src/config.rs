//! Run configuration: UTF-8 text, one `key = value` per line, dotted key
//! names, `#` starts a comment. Unknown or repeated keys are errors.
//!
//! ```text
//! seed = 7
//! source.pair_rate = 15000
//! frame.beta = 1e-3
//! influence.beta_t = inf
//! ```
//!
//! Angles are in degrees, times in seconds, lengths in metres.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use eprbound_core::bound::ReducedSpeed;
use eprbound_core::coincidence::{
    Apparatus, DayConfig, DetectorChannel, Factorized, InfluenceModel, MismatchSampler, Schedule, Transmission,
};
use eprbound_core::geometry::{BaselineGeometry, DeclinationMode, PreferredFrame, SiderealClock, MEAN_SIDEREAL_DAY};
use eprbound_core::polarization::EntangledState;
use eprbound_core::deg;

use crate::error::{Error, Result};

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "EPRBOUND_CONFIG";

/// Key/value pairs in file order, with 1-based line numbers.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected `key = value`, got `{body}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::parse(line, format!("bad key `{key}`")));
        }
        if value.is_empty() {
            return Err(Error::parse(line, format!("`{key}` has no value")));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::parse(line, format!("`{key}` set twice")));
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmProfile {
    Constant,
    Sunlight,
}

/// Transmission of one arm as configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmConfig {
    pub tau: f64,
    pub profile: ArmProfile,
    /// Relative drop at the height of the stress window.
    pub sunlight_depth: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            profile: ArmProfile::Constant,
            sunlight_depth: 0.3,
        }
    }
}

impl ArmConfig {
    pub fn transmission(&self) -> Transmission {
        match self.profile {
            ArmProfile::Constant => Transmission::Constant(self.tau),
            ArmProfile::Sunlight => Transmission::Sunlight {
                base: self.tau,
                depth: self.sunlight_depth,
                start: 9.0 * 3600.0,
                end: 18.0 * 3600.0,
                period: 40.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchKind {
    Uniform,
    Constant,
}

/// Everything `simulate` reads from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// UTC instant of simulation time zero.
    pub epoch: DateTime<Utc>,
    pub pair_rate: f64,
    pub phi_deg: f64,
    pub detector_a: DetectorChannel,
    pub detector_b: DetectorChannel,
    pub arm_a: ArmConfig,
    pub arm_b: ArmConfig,
    pub beta: f64,
    pub chi_deg: f64,
    pub phase0_deg: f64,
    pub gamma_deg: f64,
    pub latitude_deg: f64,
    pub d_ab_m: f64,
    pub declination: DeclinationMode,
    pub period_s: f64,
    pub beta_t: ReducedSpeed,
    pub rho_bar: f64,
    pub mismatch: MismatchKind,
    pub interval_s: f64,
    pub acquisition_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            epoch: DateTime::from_timestamp(1_767_225_600, 0).expect("valid timestamp"),
            pair_rate: 15_000.0,
            phi_deg: 0.0,
            detector_a: DetectorChannel::default(),
            detector_b: DetectorChannel::default(),
            arm_a: ArmConfig::default(),
            arm_b: ArmConfig::default(),
            beta: 1e-3,
            chi_deg: 90.0,
            phase0_deg: 0.0,
            gamma_deg: 18.0,
            latitude_deg: 43.6,
            d_ab_m: 1200.0,
            declination: DeclinationMode::Exact,
            period_s: MEAN_SIDEREAL_DAY,
            beta_t: ReducedSpeed::Infinite,
            rho_bar: 1.8e-7,
            mismatch: MismatchKind::Uniform,
            interval_s: 100.0,
            acquisition_s: 1.0,
        }
    }
}

fn number(line: usize, key: &str, value: &str) -> Result<f64> {
    f64::from_str(value).map_err(|_| Error::parse(line, format!("`{key}`: `{value}` is not a number")))
}

impl FromStr for RunConfig {
    type Err = Error;

    /// Starts from the defaults and applies every key in `text`.
    fn from_str(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (line, key, value) in parse_pairs(text)? {
            let num = || number(line, &key, &value);
            match key.as_str() {
                "seed" => {
                    c.seed = value
                        .parse()
                        .map_err(|_| Error::parse(line, format!("`seed`: `{value}` is not an unsigned integer")))?
                }
                "run.epoch" => {
                    c.epoch = DateTime::parse_from_rfc3339(&value)
                        .map_err(|e| Error::parse(line, format!("`run.epoch`: {e}")))?
                        .with_timezone(&Utc)
                }
                "source.pair_rate" => c.pair_rate = num()?,
                "source.phi_deg" => c.phi_deg = num()?,
                "detector_a.efficiency" => c.detector_a.efficiency = num()?,
                "detector_a.dark_rate" => c.detector_a.dark_rate = num()?,
                "detector_a.pulse_width" => c.detector_a.pulse_width = num()?,
                "detector_b.efficiency" => c.detector_b.efficiency = num()?,
                "detector_b.dark_rate" => c.detector_b.dark_rate = num()?,
                "detector_b.pulse_width" => c.detector_b.pulse_width = num()?,
                "arm_a.tau" => c.arm_a.tau = num()?,
                "arm_b.tau" => c.arm_b.tau = num()?,
                "arm_a.sunlight_depth" => c.arm_a.sunlight_depth = num()?,
                "arm_b.sunlight_depth" => c.arm_b.sunlight_depth = num()?,
                "arm_a.profile" | "arm_b.profile" => {
                    let p = match value.as_str() {
                        "constant" => ArmProfile::Constant,
                        "sunlight" => ArmProfile::Sunlight,
                        _ => return Err(Error::parse(line, format!("`{key}`: expected constant or sunlight"))),
                    };
                    if key == "arm_a.profile" {
                        c.arm_a.profile = p
                    } else {
                        c.arm_b.profile = p
                    }
                }
                "frame.beta" => c.beta = num()?,
                "frame.chi_deg" => c.chi_deg = num()?,
                "frame.phase0_deg" => c.phase0_deg = num()?,
                "baseline.gamma_deg" => c.gamma_deg = num()?,
                "baseline.latitude_deg" => c.latitude_deg = num()?,
                "baseline.d_ab_m" => c.d_ab_m = num()?,
                "baseline.declination" => {
                    c.declination = match value.as_str() {
                        "exact" => DeclinationMode::Exact,
                        "gallery-tilt" => DeclinationMode::GalleryTilt,
                        _ => return Err(Error::parse(line, "`baseline.declination`: expected exact or gallery-tilt")),
                    }
                }
                "clock.period_s" => c.period_s = num()?,
                "influence.beta_t" => c.beta_t = ReducedSpeed::from_f64(num()?),
                "influence.rho_bar" => c.rho_bar = num()?,
                "influence.mismatch" => {
                    c.mismatch = match value.as_str() {
                        "uniform" => MismatchKind::Uniform,
                        "constant" => MismatchKind::Constant,
                        _ => return Err(Error::parse(line, "`influence.mismatch`: expected uniform or constant")),
                    }
                }
                "schedule.interval_s" => c.interval_s = num()?,
                "schedule.acquisition_s" => c.acquisition_s = num()?,
                _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
            }
        }
        Ok(c)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    /// `--config` if given, else the file named by [`CONFIG_ENV`], else
    /// `None` for the defaults.
    pub fn resolve_path(flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    /// Full config text; parsing it gives back `self`.
    pub fn render(&self) -> String {
        let profile = |p: ArmProfile| match p {
            ArmProfile::Constant => "constant",
            ArmProfile::Sunlight => "sunlight",
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("run.epoch", self.epoch.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true));
        kv("source.pair_rate", self.pair_rate.to_string());
        kv("source.phi_deg", self.phi_deg.to_string());
        for (name, d) in [("detector_a", &self.detector_a), ("detector_b", &self.detector_b)] {
            kv(&format!("{name}.efficiency"), d.efficiency.to_string());
            kv(&format!("{name}.dark_rate"), d.dark_rate.to_string());
            kv(&format!("{name}.pulse_width"), d.pulse_width.to_string());
        }
        for (name, a) in [("arm_a", &self.arm_a), ("arm_b", &self.arm_b)] {
            kv(&format!("{name}.tau"), a.tau.to_string());
            kv(&format!("{name}.profile"), profile(a.profile).to_string());
            kv(&format!("{name}.sunlight_depth"), a.sunlight_depth.to_string());
        }
        kv("frame.beta", self.beta.to_string());
        kv("frame.chi_deg", self.chi_deg.to_string());
        kv("frame.phase0_deg", self.phase0_deg.to_string());
        kv("baseline.gamma_deg", self.gamma_deg.to_string());
        kv("baseline.latitude_deg", self.latitude_deg.to_string());
        kv("baseline.d_ab_m", self.d_ab_m.to_string());
        kv(
            "baseline.declination",
            match self.declination {
                DeclinationMode::Exact => "exact",
                DeclinationMode::GalleryTilt => "gallery-tilt",
            }
            .to_string(),
        );
        kv("clock.period_s", self.period_s.to_string());
        kv("influence.beta_t", self.beta_t.as_f64().to_string());
        kv("influence.rho_bar", self.rho_bar.to_string());
        kv(
            "influence.mismatch",
            match self.mismatch {
                MismatchKind::Uniform => "uniform",
                MismatchKind::Constant => "constant",
            }
            .to_string(),
        );
        kv("schedule.interval_s", self.interval_s.to_string());
        kv("schedule.acquisition_s", self.acquisition_s.to_string());
        s
    }

    /// Validated model configuration.
    pub fn day_config(&self) -> Result<DayConfig> {
        let detector = |d: &DetectorChannel| DetectorChannel::new(d.efficiency, d.dark_rate, d.pulse_width);
        let apparatus = Apparatus {
            detector_a: detector(&self.detector_a)?,
            detector_b: detector(&self.detector_b)?,
            transmission_a: self.arm_a.transmission(),
            transmission_b: self.arm_b.transmission(),
        };
        apparatus.validate()?;
        let mismatch = match self.mismatch {
            MismatchKind::Uniform => MismatchSampler::Uniform { max: self.rho_bar },
            MismatchKind::Constant => MismatchSampler::Constant(self.rho_bar),
        };
        let influence = InfluenceModel {
            beta_t: self.beta_t,
            fallback: Factorized::default(),
            mismatch,
        };
        influence.validate()?;
        if !(self.pair_rate >= 0.0) || !self.pair_rate.is_finite() {
            return Err(Error::Usage(format!("source.pair_rate must be nonnegative, got {}", self.pair_rate)));
        }
        Ok(DayConfig {
            frame: PreferredFrame::new(self.beta, deg(self.chi_deg), deg(self.phase0_deg))?,
            geometry: BaselineGeometry::new(deg(self.gamma_deg), deg(self.latitude_deg), self.d_ab_m)?
                .with_mode(self.declination),
            clock: SiderealClock::new(self.period_s)?,
            state: EntangledState::new(deg(self.phi_deg))?,
            influence,
            schedule: Schedule::new(self.interval_s, self.acquisition_s)?,
            apparatus,
            pair_rate: self.pair_rate,
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_roundtrips() {
        let mut c = RunConfig::default();
        c.beta_t = ReducedSpeed::Finite(1234.5);
        c.arm_b.profile = ArmProfile::Sunlight;
        c.detector_a.dark_rate = 0.1 + 0.2;
        let back: RunConfig = c.render().parse().unwrap();
        assert_eq!(back, c);
        let inf: RunConfig = RunConfig::default().render().parse().unwrap();
        assert!(inf.beta_t.is_infinite());
    }

    #[test]
    fn strictness() {
        let e = "seed = 3\nframe.betta = 0.1\n".parse::<RunConfig>().unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!("seed = 1\nseed = 2".parse::<RunConfig>().is_err());
        assert!("frame.beta".parse::<RunConfig>().is_err());
        assert!("frame.beta = fast".parse::<RunConfig>().is_err());
        let ok: RunConfig = "# comment\n\nframe.beta = 0.5 # trailing\n".parse().unwrap();
        assert_eq!(ok.beta, 0.5);
    }

    #[test]
    fn defaults_build() {
        let d = RunConfig::default().day_config().unwrap();
        assert_eq!(d.schedule.measurement_interval(), 100.0);
        assert!(d.influence.beta_t.is_infinite());
    }
}
