use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{CloudParams, NetworkTopology, UrfChain};
use crate::error::{Error, Result};
use crate::supply::{default_tiers, tariff_schedule, CityProfile};
use crate::traffic::SeasonFactors;
use crate::domain::Tariff;

/// Users per RRH: low 5, medium 10, high 15.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficLevel {
    Low,
    Medium,
    High,
}

impl TrafficLevel {
    pub const ALL: [TrafficLevel; 3] = [TrafficLevel::Low, TrafficLevel::Medium, TrafficLevel::High];

    pub fn users_per_rrh(self) -> usize {
        match self {
            TrafficLevel::Low => 5,
            TrafficLevel::Medium => 10,
            TrafficLevel::High => 15,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrafficLevel::Low => "low",
            TrafficLevel::Medium => "medium",
            TrafficLevel::High => "high",
        }
    }
}

impl fmt::Display for TrafficLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub nu: f64,
    pub noise_sigma: f64,
    /// Exponential data-size parameter; load ratio is rate / size_param.
    pub size_param: f64,
    pub season: SeasonFactors,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            nu: 2.0,
            noise_sigma: 0.05,
            size_param: 1.0,
            season: SeasonFactors::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolarConfig {
    /// Hourly per-kW files by city name; cities without one use the
    /// synthetic model when `synthetic_fallback` is set.
    pub pvwatts: BTreeMap<String, PathBuf>,
    pub synthetic_fallback: bool,
    /// Multiplier on every generation value (0 disables solar).
    pub scale: f64,
}

impl Default for SolarConfig {
    fn default() -> Self {
        Self {
            pvwatts: BTreeMap::new(),
            synthetic_fallback: true,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TariffConfig {
    /// `(start_hour, end_hour, price)`; `end <= start` wraps midnight.
    pub tiers: Vec<(u32, u32, f64)>,
    pub sell_ratio: f64,
}

impl Default for TariffConfig {
    fn default() -> Self {
        Self {
            tiers: default_tiers(),
            sell_ratio: 0.5,
        }
    }
}

impl TariffConfig {
    pub fn build(&self) -> Result<Tariff> {
        tariff_schedule(&self.tiers, self.sell_ratio)
    }
}

/// Everything a run needs; loaded from TOML, every field optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub methods: Vec<String>,
    /// Day of year (0 = 1 January) of the first simulated day.
    pub first_day: usize,
    pub days: usize,
    pub cities: Vec<String>,
    pub traffic_levels: Vec<TrafficLevel>,
    pub ec_count: usize,
    pub rrhs_per_ec: usize,
    /// DU counts; sized from the traffic level when absent.
    pub du_count_cc: Option<usize>,
    pub du_count_ec: Option<usize>,
    pub chain: Vec<String>,
    pub cc: CloudParams,
    pub ec: CloudParams,
    pub tariff: TariffConfig,
    pub traffic: TrafficConfig,
    pub solar: SolarConfig,
    /// Battery level of every cloud before the first day, as a fraction of capacity.
    pub initial_charge: f64,
    /// Carry each method's end-of-day battery into its next day.
    pub carry_battery: bool,
    /// Directory with `trace_<city>_<level>.csv` and `pvwatts_<city>.csv`
    /// files written by an earlier run; inputs are read instead of generated.
    pub replay_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            methods: vec!["heuristic".into(), "baseline".into()],
            first_day: 0,
            days: 1,
            cities: vec!["stockholm".into()],
            traffic_levels: vec![TrafficLevel::Medium],
            ec_count: 20,
            rrhs_per_ec: 8,
            du_count_cc: None,
            du_count_ec: None,
            chain: UrfChain::default().names().to_vec(),
            cc: CloudParams::central_default(),
            ec: CloudParams::edge_default(),
            tariff: TariffConfig::default(),
            traffic: TrafficConfig::default(),
            solar: SolarConfig::default(),
            initial_charge: 0.0,
            carry_battery: true,
            replay_dir: None,
        }
    }
}

pub const DAYS_PER_YEAR: usize = 365;

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn chain(&self) -> Result<UrfChain> {
        UrfChain::new(self.chain.clone())
    }

    pub fn topology(&self, level: TrafficLevel) -> Result<NetworkTopology> {
        let nf = self.chain.len();
        let mut topo =
            NetworkTopology::with_default_dus(self.ec_count, self.rrhs_per_ec, level.users_per_rrh(), nf, &self.cc, &self.ec);
        if let Some(n) = self.du_count_cc {
            topo.du_count_cc = n;
        }
        if let Some(n) = self.du_count_ec {
            topo.du_count_ec = n;
        }
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.cities.is_empty() || self.traffic_levels.is_empty() {
            return Err(Error::Config("need at least one city and one traffic level".into()));
        }
        if self.days == 0 {
            return Err(Error::Config("day range is empty".into()));
        }
        if self.first_day + self.days > DAYS_PER_YEAR {
            return Err(Error::Config(format!(
                "days {}..{} run past the {DAYS_PER_YEAR}-day horizon",
                self.first_day,
                self.first_day + self.days
            )));
        }
        self.chain()?;
        self.cc.validate("CC")?;
        self.ec.validate("EC")?;
        self.tariff.build()?;
        if !(0.0..=1.0).contains(&self.initial_charge) {
            return Err(Error::Config("initial_charge must lie in [0, 1]".into()));
        }
        if !(self.solar.scale >= 0.0 && self.solar.scale.is_finite()) {
            return Err(Error::Config("solar scale must be finite and >= 0".into()));
        }
        let t = &self.traffic;
        if !(t.nu > 0.0 && t.noise_sigma >= 0.0 && t.size_param > 0.0) {
            return Err(Error::Config("traffic needs nu > 0, noise_sigma >= 0, size_param > 0".into()));
        }
        for city in &self.cities {
            let has_file = self.solar.pvwatts.contains_key(city) || self.replay_dir.is_some();
            if !has_file && !(self.solar.synthetic_fallback && CityProfile::by_name(city).is_some()) {
                return Err(Error::Config(format!("no solar data for city {city:?}")));
            }
        }
        for level in &self.traffic_levels {
            self.topology(*level)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_map_to_user_counts() {
        let counts: Vec<usize> = TrafficLevel::ALL.iter().map(|l| l.users_per_rrh()).collect();
        assert_eq!(counts, vec![5, 10, 15]);
    }

    #[test]
    fn toml_defaults_and_overrides() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            seed = 7
            methods = ["heuristic"]
            traffic_levels = ["low", "high"]
            ec_count = 2
            [ec]
            static_power = 250.0
            per_du_power = 500.0
            du_capacity = 15.0
            battery_cap = 1000.0
            panel_kw = 2.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.ec.battery_cap, 1000.0);
        assert_eq!(cfg.cc, CloudParams::central_default());
        assert_eq!(cfg.traffic_levels, vec![TrafficLevel::Low, TrafficLevel::High]);
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_named() {
        let err = ScenarioConfig::from_toml_str("methods = []").unwrap_err();
        assert!(err.to_string().contains("no methods"));
        let err = ScenarioConfig::from_toml_str("first_day = 360\ndays = 10").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = ScenarioConfig::from_toml_str("cities = [\"atlantis\"]").unwrap_err();
        assert!(err.to_string().contains("atlantis"));
        assert!(ScenarioConfig::from_toml_str("bogus = 1").is_err());
    }
}
