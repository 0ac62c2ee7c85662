use std::collections::HashMap;
use std::fmt;

use crate::domain::{max_cc_urfs, CloudId, CloudParams, DuRef, NetworkTopology, Scenario};
use crate::error::Result;

/// Slack subtracted from the DU capacity to turn the strict bound into `<=`.
pub const CAPACITY_EPS: f64 = 1e-6;

/// Identity of a model variable. DU numbers are global (CC DUs first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    Assign { user: usize, du: usize, urf: usize, slot: usize },
    Active { du: usize, slot: usize },
    Green { cloud: usize, slot: usize },
    Sold { cloud: usize, slot: usize },
    Battery { cloud: usize, slot: usize },
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarKey::Assign { user, du, urf, slot } => write!(f, "m_{user}_{du}_{urf}_{slot}"),
            VarKey::Active { du, slot } => write!(f, "a_{du}_{slot}"),
            VarKey::Green { cloud, slot } => write!(f, "s_{cloud}_{slot}"),
            VarKey::Sold { cloud, slot } => write!(f, "p_{cloud}_{slot}"),
            VarKey::Battery { cloud, slot } => write!(f, "b_{cloud}_{slot}"),
        }
    }
}

impl VarKey {
    pub fn parse(name: &str) -> Option<Self> {
        let mut parts = name.split('_');
        let tag = parts.next()?;
        let nums: Vec<usize> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        Some(match (tag, nums.as_slice()) {
            ("m", &[user, du, urf, slot]) => VarKey::Assign { user, du, urf, slot },
            ("a", &[du, slot]) => VarKey::Active { du, slot },
            ("s", &[cloud, slot]) => VarKey::Green { cloud, slot },
            ("p", &[cloud, slot]) => VarKey::Sold { cloud, slot },
            ("b", &[cloud, slot]) => VarKey::Battery { cloud, slot },
            _ => return None,
        })
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, VarKey::Assign { .. } | VarKey::Active { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub key: VarKey,
    pub lower: f64,
    /// `f64::INFINITY` when unbounded.
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    /// Amount by which `lhs (sense) rhs` is violated, 0 when satisfied.
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Sense::Le => (lhs - rhs).max(0.0),
            Sense::Ge => (rhs - lhs).max(0.0),
            Sense::Eq => (lhs - rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    /// `(variable index, coefficient)`
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Dimensions a model was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelShape {
    pub topology: NetworkTopology,
    pub chain_len: usize,
    pub slots: usize,
}

/// Placement and dispatch MILP of one horizon, minimising OpEx in currency.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub shape: ModelShape,
    pub variables: Vec<Variable>,
    pub objective: Vec<(usize, f64)>,
    /// Static-power cost, which no decision changes.
    pub objective_constant: f64,
    pub rows: Vec<Row>,
    /// Activation constant: functions per DU can never exceed it.
    pub big_m: f64,
    index: HashMap<VarKey, usize>,
}

impl MilpModel {
    pub(crate) fn from_parts(
        shape: ModelShape,
        variables: Vec<Variable>,
        objective: Vec<(usize, f64)>,
        objective_constant: f64,
        rows: Vec<Row>,
        big_m: f64,
    ) -> Self {
        let index = variables.iter().enumerate().map(|(k, v)| (v.key, k)).collect();
        Self {
            shape,
            variables,
            objective,
            objective_constant,
            rows,
            big_m,
            index,
        }
    }

    pub fn var(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn name(&self, var: usize) -> String {
        self.variables[var].key.to_string()
    }

    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.key.is_binary()).count()
    }

    pub fn continuous_count(&self) -> usize {
        self.variables.len() - self.binary_count()
    }

    /// `constant + sum coef * x`
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

struct Builder {
    variables: Vec<Variable>,
    index: HashMap<VarKey, usize>,
    rows: Vec<Row>,
}

impl Builder {
    fn add(&mut self, key: VarKey, upper: f64) -> usize {
        let k = self.variables.len();
        self.variables.push(Variable { key, lower: 0.0, upper });
        self.index.insert(key, k);
        k
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let terms = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        self.rows.push(Row { name, terms, sense, rhs });
    }
}

/// Build the MILP for a scenario's whole horizon.
///
/// Assignment variables exist only for CC DUs and the DUs of the user's own
/// EC. Strict capacity bounds become `<= L - CAPACITY_EPS`; the strict delay
/// bound becomes `<= max(delay - 1, 0)`, and assignment variables for the CC
/// are fixed to zero when that bound is zero.
pub fn build_milp(scenario: &Scenario) -> Result<MilpModel> {
    scenario.validate()?;
    let topo = &scenario.topology;
    let nf = scenario.chain.len();
    let slots = scenario.slots();
    let users = topo.user_count();
    let big_m = (nf * users).max(1) as f64;
    let kwh = |t: usize| scenario.tariff.prices[t] / 1000.0;
    let mut b = Builder {
        variables: Vec::new(),
        index: HashMap::new(),
        rows: Vec::new(),
    };

    let dus_of_user = |i: usize| -> Vec<DuRef> {
        let ec = CloudId::edge(topo.ec_of_user(i));
        (0..topo.du_count_cc)
            .map(|d| DuRef::new(CloudId::CENTRAL, d))
            .chain((0..topo.du_count_ec).map(|d| DuRef::new(ec, d)))
            .collect()
    };
    let all_dus: Vec<DuRef> = topo
        .clouds()
        .flat_map(|c| (0..topo.du_count(c)).map(move |d| DuRef::new(c, d)))
        .collect();

    for t in 0..slots {
        for i in 0..users {
            let cc_fixed = max_cc_urfs(scenario.traffic.delay[t][i], nf) == 0;
            for du in dus_of_user(i) {
                let upper = if cc_fixed && du.cloud.is_central() { 0.0 } else { 1.0 };
                for f in 0..nf {
                    b.add(VarKey::Assign { user: i, du: topo.global_du(du), urf: f, slot: t }, upper);
                }
            }
        }
    }
    for t in 0..slots {
        for du in &all_dus {
            b.add(VarKey::Active { du: topo.global_du(*du), slot: t }, 1.0);
        }
    }
    for c in topo.clouds() {
        for t in 0..slots {
            b.add(VarKey::Green { cloud: c.0, slot: t }, f64::INFINITY);
            b.add(VarKey::Sold { cloud: c.0, slot: t }, f64::INFINITY);
            b.add(VarKey::Battery { cloud: c.0, slot: t }, scenario.params(c).battery_cap);
        }
    }
    let v = |b: &Builder, key| b.index[&key];

    let mut objective = Vec::new();
    let mut constant = 0.0;
    for t in 0..slots {
        for c in topo.clouds() {
            constant += scenario.params(c).static_power * kwh(t);
        }
        for du in &all_dus {
            let pd = scenario.params(du.cloud).per_du_power;
            objective.push((v(&b, VarKey::Active { du: topo.global_du(*du), slot: t }), pd * kwh(t)));
        }
    }
    for c in topo.clouds() {
        for t in 0..slots {
            objective.push((v(&b, VarKey::Green { cloud: c.0, slot: t }), -kwh(t)));
            let sell = -scenario.tariff.sell_ratio * kwh(t);
            if sell != 0.0 {
                objective.push((v(&b, VarKey::Sold { cloud: c.0, slot: t }), sell));
            }
        }
    }

    // hosting terms per DU and slot: (var, user)
    let mut on_du: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for var in &b.variables {
        if let VarKey::Assign { user, du, slot, .. } = var.key {
            on_du.entry((du, slot)).or_default().push((b.index[&var.key], user));
        }
    }
    let hosted = |du: usize, t: usize| on_du.get(&(du, t)).cloned().unwrap_or_default();

    for t in 0..slots {
        for du in &all_dus {
            let g = topo.global_du(*du);
            let cap = scenario.params(du.cloud).du_capacity - CAPACITY_EPS;
            let terms = hosted(g, t)
                .into_iter()
                .map(|(j, i)| (j, scenario.traffic.load[t][i]))
                .collect();
            b.row(format!("cap_{g}_{t}"), terms, Sense::Le, cap);
        }
    }
    for t in 0..slots {
        for du in &all_dus {
            let g = topo.global_du(*du);
            let mut terms = vec![(v(&b, VarKey::Active { du: g, slot: t }), big_m)];
            terms.extend(hosted(g, t).into_iter().map(|(j, _)| (j, -1.0)));
            b.row(format!("act_{g}_{t}"), terms, Sense::Ge, 0.0);
        }
    }
    for t in 0..slots {
        for i in 0..users {
            let terms = dus_of_user(i)
                .into_iter()
                .flat_map(|du| (0..nf).map(move |f| (du, f)))
                .map(|(du, f)| (v(&b, VarKey::Assign { user: i, du: topo.global_du(du), urf: f, slot: t }), 1.0))
                .collect();
            b.row(format!("assign_{i}_{t}"), terms, Sense::Eq, nf as f64);
        }
    }
    for t in 0..slots {
        for i in 0..users {
            let terms = (0..topo.du_count_cc)
                .flat_map(|d| (0..nf).map(move |f| (d, f)))
                .map(|(d, f)| (v(&b, VarKey::Assign { user: i, du: d, urf: f, slot: t }), 1.0))
                .collect();
            let rhs = max_cc_urfs(scenario.traffic.delay[t][i], nf) as f64;
            b.row(format!("delay_{i}_{t}"), terms, Sense::Le, rhs);
        }
    }
    for c in topo.clouds() {
        for t in 0..slots {
            let mut terms = vec![
                (v(&b, VarKey::Battery { cloud: c.0, slot: t }), 1.0),
                (v(&b, VarKey::Green { cloud: c.0, slot: t }), 1.0),
                (v(&b, VarKey::Sold { cloud: c.0, slot: t }), 1.0),
            ];
            let mut rhs = scenario.generation[c.0][t];
            if t == 0 {
                rhs += scenario.carry[c.0];
            } else {
                terms.push((v(&b, VarKey::Battery { cloud: c.0, slot: t - 1 }), -1.0));
            }
            b.row(format!("bal_{}_{t}", c.0), terms, Sense::Eq, rhs);
        }
    }
    for c in topo.clouds() {
        let params: &CloudParams = scenario.params(c);
        for t in 0..slots {
            let mut terms = vec![(v(&b, VarKey::Green { cloud: c.0, slot: t }), 1.0)];
            terms.extend(
                (0..topo.du_count(c))
                    .map(|d| (v(&b, VarKey::Active { du: topo.global_du(DuRef::new(c, d)), slot: t }), -params.per_du_power)),
            );
            b.row(format!("green_{}_{t}", c.0), terms, Sense::Le, params.static_power);
        }
    }

    let shape = ModelShape {
        topology: topo.clone(),
        chain_len: nf,
        slots,
    };
    Ok(MilpModel::from_parts(shape, b.variables, objective, constant, b.rows, big_m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_back() {
        let keys = [
            VarKey::Assign { user: 3, du: 12, urf: 5, slot: 23 },
            VarKey::Active { du: 0, slot: 7 },
            VarKey::Green { cloud: 20, slot: 1 },
            VarKey::Sold { cloud: 1, slot: 0 },
            VarKey::Battery { cloud: 4, slot: 9 },
        ];
        for k in keys {
            assert_eq!(VarKey::parse(&k.to_string()), Some(k));
        }
        for bad in ["m_1_2_3", "x_1_2", "a_1_b", "b"] {
            assert_eq!(VarKey::parse(bad), None, "{bad}");
        }
    }

    #[test]
    fn senses_measure_violation() {
        assert_eq!(Sense::Le.violation(3.0, 2.0), 1.0);
        assert_eq!(Sense::Le.violation(1.0, 2.0), 0.0);
        assert_eq!(Sense::Ge.violation(1.0, 2.0), 1.0);
        assert_eq!(Sense::Eq.violation(1.5, 2.0), 0.5);
    }
}
