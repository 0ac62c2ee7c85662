//! Scenario data, energy formulas and the OpEx objective.
//!
//! Units: energies are Wh per one-hour slot, prices are currency per kWh.
//! Conversion from Wh to kWh happens only when pricing.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered chain of user-related functions, highest layer first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrfChain {
    functions: Vec<String>,
}

impl UrfChain {
    pub fn new(functions: Vec<String>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::Config("URF chain must not be empty".into()));
        }
        for (k, name) in functions.iter().enumerate() {
            if functions[..k].contains(name) {
                return Err(Error::Config(format!("duplicate URF name {name:?}")));
            }
        }
        Ok(Self { functions })
    }

    /// Chain of `len` anonymous functions `F0..F{len-1}`.
    pub fn anonymous(len: usize) -> Result<Self> {
        Self::new((0..len).map(|k| format!("F{k}")).collect())
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.functions
    }

    /// Human label of a split expressed as the number of CC-resident URFs.
    ///
    /// The CC always holds a top-of-chain prefix, so the count fully
    /// determines the split point.
    pub fn split_label(&self, cc_count: usize) -> String {
        match cc_count {
            0 => "none".to_string(),
            k if k >= self.len() => "all".to_string(),
            k => self.functions[..k].join("+"),
        }
    }
}

impl Default for UrfChain {
    fn default() -> Self {
        Self {
            functions: ["PDCP", "RLC", "MAC", "FEC", "QAM", "Precoding"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CloudKind {
    Central,
    Edge,
}

/// Cloud index: 0 is the central cloud, `r + 1` is edge cloud `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CloudId(pub usize);

impl CloudId {
    pub const CENTRAL: CloudId = CloudId(0);

    pub fn edge(r: usize) -> Self {
        CloudId(r + 1)
    }

    pub fn kind(self) -> CloudKind {
        if self.0 == 0 {
            CloudKind::Central
        } else {
            CloudKind::Edge
        }
    }

    pub fn edge_index(self) -> Option<usize> {
        self.0.checked_sub(1)
    }

    pub fn is_central(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for CloudId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.edge_index() {
            None => write!(f, "cc"),
            Some(r) => write!(f, "ec{r}"),
        }
    }
}

/// Per-kind cloud constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    /// Static consumption, Wh per slot.
    pub static_power: f64,
    /// Consumption of one active DU, Wh per slot.
    pub per_du_power: f64,
    /// Load-weighted URF capacity of one DU (strict upper bound).
    pub du_capacity: f64,
    /// Battery capacity, Wh.
    pub battery_cap: f64,
    /// Solar panel size, kW.
    pub panel_kw: f64,
}

impl CloudParams {
    pub fn central_default() -> Self {
        Self {
            static_power: 750.0,
            per_du_power: 1500.0,
            du_capacity: 50.0,
            battery_cap: 20_000.0,
            panel_kw: 20.0,
        }
    }

    pub fn edge_default() -> Self {
        Self {
            static_power: 250.0,
            per_du_power: 500.0,
            du_capacity: 15.0,
            battery_cap: 5_000.0,
            panel_kw: 5.0,
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let fields = [
            self.static_power,
            self.per_du_power,
            self.du_capacity,
            self.battery_cap,
            self.panel_kw,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!("{what} parameters must be finite and >= 0")));
        }
        if self.du_capacity <= 0.0 {
            return Err(Error::Config(format!("{what} DU capacity must be > 0")));
        }
        Ok(())
    }
}

/// Energy of one cloud in one slot: static term plus active DUs.
pub fn compute_cloud_consumption(params: &CloudParams, du_count: usize, active: usize) -> Result<f64> {
    if active > du_count {
        return Err(Error::Topology(format!(
            "{active} active DUs exceed the {du_count} DUs of the cloud"
        )));
    }
    Ok(params.static_power + active as f64 * params.per_du_power)
}

/// Counts and nesting of clouds, RRHs, users and DUs.
///
/// Users are numbered contiguously: EC `r` owns users
/// `r * users_per_ec .. (r + 1) * users_per_ec`, grouped by RRH.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub ec_count: usize,
    pub rrhs_per_ec: usize,
    pub users_per_rrh: usize,
    pub du_count_cc: usize,
    pub du_count_ec: usize,
}

impl NetworkTopology {
    /// Topology with DU counts sized so that sequential packing of loads
    /// capped at 1 never runs short of DUs.
    pub fn with_default_dus(
        ec_count: usize,
        rrhs_per_ec: usize,
        users_per_rrh: usize,
        chain_len: usize,
        cc: &CloudParams,
        ec: &CloudParams,
    ) -> Self {
        let per_ec = users_per_rrh * rrhs_per_ec * chain_len;
        let total = per_ec * ec_count;
        Self {
            ec_count,
            rrhs_per_ec,
            users_per_rrh,
            du_count_cc: default_du_count(total, cc.du_capacity),
            du_count_ec: default_du_count(per_ec, ec.du_capacity),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ec_count == 0 || self.rrhs_per_ec == 0 {
            return Err(Error::Topology("need at least one EC and one RRH per EC".into()));
        }
        if self.du_count_cc == 0 || self.du_count_ec == 0 {
            return Err(Error::Topology("every cloud needs at least one DU".into()));
        }
        Ok(())
    }

    pub fn users_per_ec(&self) -> usize {
        self.rrhs_per_ec * self.users_per_rrh
    }

    pub fn user_count(&self) -> usize {
        self.ec_count * self.users_per_ec()
    }

    pub fn cloud_count(&self) -> usize {
        self.ec_count + 1
    }

    pub fn clouds(&self) -> impl Iterator<Item = CloudId> {
        (0..self.cloud_count()).map(CloudId)
    }

    pub fn users_of_ec(&self, r: usize) -> Range<usize> {
        let n = self.users_per_ec();
        r * n..(r + 1) * n
    }

    pub fn ec_of_user(&self, user: usize) -> usize {
        user / self.users_per_ec()
    }

    pub fn rrh_of_user(&self, user: usize) -> usize {
        user / self.users_per_rrh
    }

    pub fn du_count(&self, cloud: CloudId) -> usize {
        match cloud.kind() {
            CloudKind::Central => self.du_count_cc,
            CloudKind::Edge => self.du_count_ec,
        }
    }

    /// Global DU number used in exported models: CC DUs first, then each EC.
    pub fn global_du(&self, du: DuRef) -> usize {
        match du.cloud.edge_index() {
            None => du.index,
            Some(r) => self.du_count_cc + r * self.du_count_ec + du.index,
        }
    }

    pub fn du_from_global(&self, g: usize) -> Option<DuRef> {
        if g < self.du_count_cc {
            return Some(DuRef::new(CloudId::CENTRAL, g));
        }
        let rest = g - self.du_count_cc;
        let r = rest / self.du_count_ec;
        (r < self.ec_count).then(|| DuRef::new(CloudId::edge(r), rest % self.du_count_ec))
    }

    pub fn total_dus(&self) -> usize {
        self.du_count_cc + self.ec_count * self.du_count_ec
    }
}

/// `ceil(items / (capacity - 1)) + 1`: each closed DU holds more than
/// `capacity - 1` when items weigh at most 1.
pub fn default_du_count(items: usize, capacity: f64) -> usize {
    let usable = (capacity - 1.0).max(1.0);
    ((items as f64 / usable).ceil() as usize + 1).max(1)
}

/// One DU inside one cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DuRef {
    pub cloud: CloudId,
    pub index: usize,
}

impl DuRef {
    pub fn new(cloud: CloudId, index: usize) -> Self {
        Self { cloud, index }
    }
}

/// Load ratios and delay thresholds, indexed `[slot][user]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrafficTrace {
    pub load: Vec<Vec<f64>>,
    pub delay: Vec<Vec<u32>>,
}

impl TrafficTrace {
    pub fn slots(&self) -> usize {
        self.load.len()
    }

    pub fn users(&self) -> usize {
        self.load.first().map_or(0, Vec::len)
    }
}

/// Time-of-day prices (currency per kWh) and the sell ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tariff {
    pub prices: Vec<f64>,
    pub sell_ratio: f64,
}

impl Tariff {
    pub fn validate(&self) -> Result<()> {
        if self.prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::Config("tariff prices must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.sell_ratio) {
            return Err(Error::Config("sell ratio must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Largest number of CC-resident URFs the delay bound admits.
///
/// The bound is strict (`count < delay`); keeping every URF at the edge is
/// always admissible, so a zero threshold still permits a count of zero.
pub fn max_cc_urfs(delay: u32, chain_len: usize) -> usize {
    (delay.saturating_sub(1) as usize).min(chain_len)
}

/// Everything needed to optimise one horizon (normally one day).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub chain: UrfChain,
    pub topology: NetworkTopology,
    pub cc: CloudParams,
    pub ec: CloudParams,
    pub traffic: TrafficTrace,
    /// Harvested energy already scaled by panel size, `[cloud][slot]` Wh.
    pub generation: Vec<Vec<f64>>,
    pub tariff: Tariff,
    /// Battery level carried into the first slot, per cloud.
    pub carry: Vec<f64>,
}

impl Scenario {
    pub fn slots(&self) -> usize {
        self.tariff.prices.len()
    }

    pub fn params(&self, cloud: CloudId) -> &CloudParams {
        match cloud.kind() {
            CloudKind::Central => &self.cc,
            CloudKind::Edge => &self.ec,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.cc.validate("CC")?;
        self.ec.validate("EC")?;
        self.tariff.validate()?;
        let slots = self.slots();
        let users = self.topology.user_count();
        let clouds = self.topology.cloud_count();
        if self.traffic.load.len() != slots || self.traffic.delay.len() != slots {
            return Err(Error::Shape(format!(
                "traffic has {} slots, tariff has {slots}",
                self.traffic.load.len()
            )));
        }
        for (t, (load, delay)) in self.traffic.load.iter().zip(&self.traffic.delay).enumerate() {
            if load.len() != users || delay.len() != users {
                return Err(Error::Shape(format!("slot {t}: traffic for {} users, expected {users}", load.len())));
            }
            if load.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Config(format!("slot {t}: loads must be >= 0")));
            }
            if delay.iter().any(|&d| d as usize > self.chain.len()) {
                return Err(Error::Config(format!("slot {t}: delay threshold exceeds chain length")));
            }
        }
        if self.generation.len() != clouds || self.generation.iter().any(|g| g.len() != slots) {
            return Err(Error::Shape("generation must be [cloud][slot]".into()));
        }
        if self.generation.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("generation must be >= 0".into()));
        }
        if self.carry.len() != clouds {
            return Err(Error::Shape("carry needs one value per cloud".into()));
        }
        for cloud in self.topology.clouds() {
            let carry = self.carry[cloud.0];
            if !(0.0..=self.params(cloud).battery_cap).contains(&carry) {
                return Err(Error::Config(format!("{cloud}: carried battery level outside [0, B]")));
            }
        }
        Ok(())
    }

    /// Consumption of one cloud with `active` DUs switched on.
    pub fn consumption(&self, cloud: CloudId, active: usize) -> Result<f64> {
        compute_cloud_consumption(self.params(cloud), self.topology.du_count(cloud), active)
    }

    /// Consumption series `[cloud][slot]` implied by a placement's activity flags.
    pub fn consumption_of(&self, plan: &PlacementPlan) -> Result<Vec<Vec<f64>>> {
        self.topology
            .clouds()
            .map(|c| {
                (0..self.slots())
                    .map(|t| self.consumption(c, plan.active_count(t, c)))
                    .collect()
            })
            .collect()
    }
}

/// Per-slot assignment of every URF of every user to a DU, plus DU activity.
///
/// `assign[t][i][f]` is the host of URF `f` of user `i` in slot `t`;
/// `active[t][cloud][d]` is the activity flag of DU `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementPlan {
    pub assign: Vec<Vec<Vec<DuRef>>>,
    pub active: Vec<Vec<Vec<bool>>>,
}

impl PlacementPlan {
    /// Plan whose activity flags are exactly the DUs hosting something.
    pub fn from_assignments(topology: &NetworkTopology, assign: Vec<Vec<Vec<DuRef>>>) -> Self {
        let active = assign
            .iter()
            .map(|users| {
                let mut flags: Vec<Vec<bool>> =
                    topology.clouds().map(|c| vec![false; topology.du_count(c)]).collect();
                for du in users.iter().flatten() {
                    if let Some(flag) = flags.get_mut(du.cloud.0).and_then(|f| f.get_mut(du.index)) {
                        *flag = true;
                    }
                }
                flags
            })
            .collect();
        Self { assign, active }
    }

    pub fn slots(&self) -> usize {
        self.assign.len()
    }

    pub fn active_count(&self, slot: usize, cloud: CloudId) -> usize {
        self.active[slot][cloud.0].iter().filter(|a| **a).count()
    }

    /// Number of CC-resident URFs of `user` in `slot`.
    pub fn cc_count(&self, slot: usize, user: usize) -> usize {
        self.assign[slot][user].iter().filter(|d| d.cloud.is_central()).count()
    }

    pub fn hosts(&self, user: usize, du: DuRef, urf: usize, slot: usize) -> bool {
        self.assign[slot][user][urf] == du
    }

    /// Relabel every user's URFs so that the CC holds a top-of-chain prefix.
    ///
    /// URFs carry identical cost, so this never changes loads or activity.
    pub fn canonicalize(&mut self) {
        for users in &mut self.assign {
            for hosts in users.iter_mut() {
                hosts.sort();
            }
        }
    }
}

/// Dispatch of one cloud: green use, sales and battery level per slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CloudSchedule {
    pub green: Vec<f64>,
    pub sold: Vec<f64>,
    pub battery: Vec<f64>,
    pub carry: f64,
}

impl CloudSchedule {
    pub fn zeros(slots: usize, carry: f64) -> Self {
        Self {
            green: vec![0.0; slots],
            sold: vec![0.0; slots],
            battery: vec![0.0; slots],
            carry,
        }
    }

    pub fn slots(&self) -> usize {
        self.green.len()
    }

    /// Battery level before `slot`.
    pub fn level_before(&self, slot: usize) -> f64 {
        if slot == 0 {
            self.carry
        } else {
            self.battery[slot - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergySchedule {
    pub clouds: Vec<CloudSchedule>,
}

impl EnergySchedule {
    pub fn cloud(&self, cloud: CloudId) -> &CloudSchedule {
        &self.clouds[cloud.0]
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub placement: PlacementPlan,
    pub energy: EnergySchedule,
    pub opex: f64,
}

impl Solution {
    pub fn new(scenario: &Scenario, placement: PlacementPlan, energy: EnergySchedule) -> Result<Self> {
        let consumption = scenario.consumption_of(&placement)?;
        let opex = compute_opex(&consumption, &energy, &scenario.tariff)?;
        Ok(Self {
            placement,
            energy,
            opex,
        })
    }
}

/// Grid cost minus green savings and sale revenue, summed over clouds and
/// slots: `sum (consumption - green - P * sold) * price / 1000`.
pub fn compute_opex(consumption: &[Vec<f64>], energy: &EnergySchedule, tariff: &Tariff) -> Result<f64> {
    if consumption.len() != energy.clouds.len() {
        return Err(Error::Shape(format!(
            "{} consumption series vs {} schedules",
            consumption.len(),
            energy.clouds.len()
        )));
    }
    let slots = tariff.prices.len();
    let mut total = 0.0;
    for (c, (psi, sched)) in consumption.iter().zip(&energy.clouds).enumerate() {
        if psi.len() != slots || sched.green.len() != slots || sched.sold.len() != slots {
            return Err(Error::Shape(format!("cloud {c}: series length differs from {slots} slots")));
        }
        for t in 0..slots {
            let net = psi[t] - sched.green[t] - tariff.sell_ratio * sched.sold[t];
            total += net * tariff.prices[t] / 1000.0;
        }
    }
    Ok(total)
}
