use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 8 km arena, 5 minute flight.
    Desk,
    /// 16 km initial perimeter, 50 minute flight.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Track the nominal plan directly.
    Off,
    Gatekeeper,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            _ => Err(Error::Usage(format!("unknown preset '{s}' (desk, full)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Desk => "desk",
            Preset::Full => "full",
        })
    }
}

impl FromStr for FilterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(FilterMode::Off),
            "gatekeeper" => Ok(FilterMode::Gatekeeper),
            _ => Err(Error::Usage(format!("unknown filter '{s}' (off, gatekeeper)"))),
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMode::Off => "off",
            FilterMode::Gatekeeper => "gatekeeper",
        })
    }
}

/// Firewatch scenario parameters. Lengths in metres, times in seconds,
/// rates in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub preset: Preset,
    pub filter: FilterMode,
    /// Side length of the square simulation grid.
    pub arena: f64,
    pub cell: f64,
    /// Radius of the initial burning disk.
    pub fire_radius: f64,
    /// Unburnt keyhole bays cut into the initial fire along the flight
    /// path: a neck of `pocket_width` x `pocket_depth` ending in a round
    /// chamber of radius `pocket_chamber`.
    pub pockets: usize,
    pub pocket_width: f64,
    pub pocket_depth: f64,
    pub pocket_chamber: f64,
    pub sigma_max_true: f64,
    pub sigma_max_assumed: f64,
    pub standoff: f64,
    pub target_speed: f64,
    /// Initial distance from the fire front.
    pub start_distance: f64,
    pub measurement_period: f64,
    /// Half-width of the square sensor footprint.
    pub sensor_range: f64,
    pub control_dt: f64,
    pub fire_dt: f64,
    pub horizon: f64,
    pub backup: f64,
    pub grid_points: usize,
    pub duration: f64,
    /// State disturbance bound (flat coordinates).
    pub d_bar: f64,
    /// Estimation error bound (flat coordinates).
    pub v_bar: f64,
    pub iss_gain: f64,
    pub iss_decay: f64,
    pub iss_disturbance_gain: f64,
    /// Extra clearance on every set-membership check.
    pub pad: f64,
    pub parallel: bool,
    /// Seconds between fire-front snapshots in the plot data.
    pub front_every: f64,
    /// Post-run check of every commitment against the true fire.
    pub check_commitments: bool,
}

/// 8 km/h.
pub const DEFAULT_SPREAD: f64 = 8.0 / 3.6;

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let desk = Self {
            seed: 1,
            preset,
            filter: FilterMode::Gatekeeper,
            arena: 8000.0,
            cell: 10.0,
            fire_radius: 800.0,
            pockets: 1,
            pocket_width: 400.0,
            pocket_depth: 350.0,
            pocket_chamber: 300.0,
            sigma_max_true: DEFAULT_SPREAD,
            sigma_max_assumed: DEFAULT_SPREAD,
            standoff: 100.0,
            target_speed: 15.0,
            start_distance: 450.0,
            measurement_period: 10.0,
            sensor_range: 1000.0,
            control_dt: 0.05,
            fire_dt: 1.0,
            horizon: 120.0,
            backup: 120.0,
            grid_points: 10,
            duration: 300.0,
            d_bar: 0.0,
            v_bar: 0.0,
            iss_gain: 2.3,
            iss_decay: 0.5,
            iss_disturbance_gain: 6.2,
            pad: 10.0 * std::f64::consts::FRAC_1_SQRT_2,
            parallel: false,
            front_every: 60.0,
            check_commitments: true,
        };
        match preset {
            Preset::Desk => desk,
            Preset::Full => Self {
                arena: 24000.0,
                // 16 km initial perimeter.
                fire_radius: 16000.0 / std::f64::consts::TAU,
                pockets: 8,
                pocket_depth: 600.0,
                pocket_chamber: 400.0,
                duration: 3000.0,
                front_every: 300.0,
                ..desk
            },
        }
    }

    /// Robust validity is used whenever disturbances are configured.
    pub fn robust(&self) -> bool {
        self.d_bar > 0.0 || self.v_bar > 0.0
    }

    /// The assumed spread rate does not bound the true one.
    pub fn assumption_breached(&self) -> bool {
        self.sigma_max_assumed < self.sigma_max_true
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("arena", self.arena),
            ("cell", self.cell),
            ("fire_radius", self.fire_radius),
            ("standoff", self.standoff),
            ("target_speed", self.target_speed),
            ("measurement_period", self.measurement_period),
            ("sensor_range", self.sensor_range),
            ("control_dt", self.control_dt),
            ("fire_dt", self.fire_dt),
            ("horizon", self.horizon),
            ("backup", self.backup),
            ("duration", self.duration),
            ("sigma_max_assumed", self.sigma_max_assumed),
        ];
        for (k, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("sigma_max_true", self.sigma_max_true),
            ("d_bar", self.d_bar),
            ("v_bar", self.v_bar),
            ("pad", self.pad),
            ("start_distance", self.start_distance),
            ("pocket_width", self.pocket_width),
            ("pocket_depth", self.pocket_depth),
            ("pocket_chamber", self.pocket_chamber),
        ];
        for (k, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be non-negative, got {v}")));
            }
        }
        if self.grid_points == 0 {
            return Err(Error::Config("grid_points must be at least 1".into()));
        }
        let ratio = |a: f64, b: f64| {
            let r = a / b;
            (r - r.round()).abs() < 1e-9 && r.round() >= 1.0
        };
        if !ratio(self.fire_dt, self.control_dt) || !ratio(self.measurement_period, self.fire_dt) {
            return Err(Error::Config(
                "measurement_period must be a multiple of fire_dt, and fire_dt of control_dt".into(),
            ));
        }
        if !ratio(self.duration, self.control_dt) {
            return Err(Error::Config("duration must be a multiple of control_dt".into()));
        }
        if self.sigma_max_true * self.fire_dt > 0.5 * self.cell {
            return Err(Error::Config("fire_dt violates the CFL limit for sigma_max_true".into()));
        }
        if self.fire_radius + self.start_distance >= 0.5 * self.arena {
            return Err(Error::Config("start position lies outside the arena".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Usage(format!("bad value '{v}' for {key}")))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "preset" => {
                let p: Preset = value.parse()?;
                let keep = (self.seed, self.filter);
                *self = Self::preset(p);
                (self.seed, self.filter) = keep;
            }
            "filter" => self.filter = value.parse()?,
            "arena" => self.arena = num(key, value)?,
            "cell" => self.cell = num(key, value)?,
            "fire_radius" => self.fire_radius = num(key, value)?,
            "pockets" => self.pockets = num(key, value)?,
            "pocket_width" => self.pocket_width = num(key, value)?,
            "pocket_depth" => self.pocket_depth = num(key, value)?,
            "pocket_chamber" => self.pocket_chamber = num(key, value)?,
            "sigma_max_true" => self.sigma_max_true = num(key, value)?,
            "sigma_max_assumed" => self.sigma_max_assumed = num(key, value)?,
            "standoff" => self.standoff = num(key, value)?,
            "target_speed" => self.target_speed = num(key, value)?,
            "start_distance" => self.start_distance = num(key, value)?,
            "measurement_period" => self.measurement_period = num(key, value)?,
            "sensor_range" => self.sensor_range = num(key, value)?,
            "control_dt" => self.control_dt = num(key, value)?,
            "fire_dt" => self.fire_dt = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "backup" => self.backup = num(key, value)?,
            "grid_points" => self.grid_points = num(key, value)?,
            "duration" => self.duration = num(key, value)?,
            "d_bar" => self.d_bar = num(key, value)?,
            "v_bar" => self.v_bar = num(key, value)?,
            "iss_gain" => self.iss_gain = num(key, value)?,
            "iss_decay" => self.iss_decay = num(key, value)?,
            "iss_disturbance_gain" => self.iss_disturbance_gain = num(key, value)?,
            "pad" => self.pad = num(key, value)?,
            "parallel" => self.parallel = num(key, value)?,
            "front_every" => self.front_every = num(key, value)?,
            "check_commitments" => self.check_commitments = num(key, value)?,
            _ => return Err(Error::Usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file on top of the preset it names (desk
    /// by default). Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = Self::preset(Preset::Desk);
        // The preset resets everything else, so it goes first.
        if let Some((_, p)) = pairs.iter().find(|(k, _)| k == "preset") {
            cfg = Self::preset(p.parse()?);
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Every field as `key = value`, parseable by [`ScenarioConfig::parse`].
    pub fn to_kv(&self) -> String {
        let c = self;
        let fields: Vec<(&str, String)> = vec![
            ("preset", c.preset.to_string()),
            ("seed", c.seed.to_string()),
            ("filter", c.filter.to_string()),
            ("arena", c.arena.to_string()),
            ("cell", c.cell.to_string()),
            ("fire_radius", c.fire_radius.to_string()),
            ("pockets", c.pockets.to_string()),
            ("pocket_width", c.pocket_width.to_string()),
            ("pocket_depth", c.pocket_depth.to_string()),
            ("pocket_chamber", c.pocket_chamber.to_string()),
            ("sigma_max_true", c.sigma_max_true.to_string()),
            ("sigma_max_assumed", c.sigma_max_assumed.to_string()),
            ("standoff", c.standoff.to_string()),
            ("target_speed", c.target_speed.to_string()),
            ("start_distance", c.start_distance.to_string()),
            ("measurement_period", c.measurement_period.to_string()),
            ("sensor_range", c.sensor_range.to_string()),
            ("control_dt", c.control_dt.to_string()),
            ("fire_dt", c.fire_dt.to_string()),
            ("horizon", c.horizon.to_string()),
            ("backup", c.backup.to_string()),
            ("grid_points", c.grid_points.to_string()),
            ("duration", c.duration.to_string()),
            ("d_bar", c.d_bar.to_string()),
            ("v_bar", c.v_bar.to_string()),
            ("iss_gain", c.iss_gain.to_string()),
            ("iss_decay", c.iss_decay.to_string()),
            ("iss_disturbance_gain", c.iss_disturbance_gain.to_string()),
            ("pad", c.pad.to_string()),
            ("parallel", c.parallel.to_string()),
            ("front_every", c.front_every.to_string()),
            ("check_commitments", c.check_commitments.to_string()),
        ];
        fields
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        ScenarioConfig::preset(Preset::Desk).validate().unwrap();
        let full = ScenarioConfig::preset(Preset::Full);
        full.validate().unwrap();
        assert!((full.fire_radius * std::f64::consts::TAU - 16000.0).abs() < 1e-9);
        assert!((DEFAULT_SPREAD - 2.2222222).abs() < 1e-6);
    }

    #[test]
    fn kv_round_trip() {
        let mut c = ScenarioConfig::preset(Preset::Desk);
        c.seed = 42;
        c.sigma_max_assumed = 1.0 / 3.0;
        c.filter = FilterMode::Off;
        c.parallel = true;
        let back = ScenarioConfig::parse(&c.to_kv()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parse_overrides_and_errors() {
        let c = ScenarioConfig::parse("# comment\nseed = 7\n\nduration=60 # trailing\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.duration, 60.0);
        assert!(matches!(ScenarioConfig::parse("bogus = 1"), Err(Error::Usage(_))));
        assert!(matches!(ScenarioConfig::parse("seed 1"), Err(Error::Parse(_))));
        assert!(matches!(ScenarioConfig::parse("seed = x"), Err(Error::Usage(_))));
        let full = ScenarioConfig::parse("seed = 3\npreset = full").unwrap();
        assert_eq!((full.preset, full.seed), (Preset::Full, 3));
    }

    #[test]
    fn validation_catches_bad_steps() {
        let mut c = ScenarioConfig::default();
        c.fire_dt = 0.07;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.sigma_max_true = 10.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.sigma_max_assumed = 1.0;
        assert!(c.assumption_breached());
    }
}
