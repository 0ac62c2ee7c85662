//! Feasibility check of a candidate solution against every model constraint.
//!
//! Violations are data: the validator never fails, it lists what is wrong.

use std::fmt;

use crate::domain::{compute_opex, max_cc_urfs, CloudId, DuRef, Scenario, Solution};

/// Absolute tolerance for energy equalities and bounds, Wh.
pub const ENERGY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    /// Dimensions of the solution do not match the scenario.
    Shape,
    /// Load on a CC DU must stay strictly below its capacity.
    CapacityCc,
    /// Load on an EC DU must stay strictly below its capacity.
    CapacityEc,
    /// A DU hosting a function must be active.
    Activation,
    /// Every URF is hosted by the CC or the user's own EC.
    Assignment,
    /// CC-resident URF count strictly below the delay threshold.
    Delay,
    /// Battery recurrence.
    BatteryBalance,
    /// Battery level within capacity.
    BatteryCapacity,
    /// Green use cannot exceed the cloud's consumption.
    GreenUseBound,
    /// Green use, sales and battery levels are nonnegative.
    NonNegative,
    /// Reported OpEx differs from the recomputed objective.
    Objective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    pub at: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: lhs {} vs rhs {}", self.constraint, self.at, self.lhs, self.rhs)
    }
}

fn push(out: &mut Vec<Violation>, constraint: Constraint, at: String, lhs: f64, rhs: f64) {
    out.push(Violation {
        constraint,
        at,
        lhs,
        rhs,
    });
}

/// Every violated constraint of `solution`; empty when feasible.
pub fn validate_solution(scenario: &Scenario, solution: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    if !check_shape(scenario, solution, &mut out) {
        return out;
    }
    check_placement(scenario, solution, &mut out);
    check_energy(scenario, solution, &mut out);
    if out.is_empty() {
        let recomputed = scenario
            .consumption_of(&solution.placement)
            .and_then(|psi| compute_opex(&psi, &solution.energy, &scenario.tariff));
        match recomputed {
            Ok(v) if (v - solution.opex).abs() <= 1e-9 * v.abs().max(1.0) => {}
            Ok(v) => push(&mut out, Constraint::Objective, "total".into(), solution.opex, v),
            Err(_) => push(&mut out, Constraint::Objective, "total".into(), solution.opex, f64::NAN),
        }
    }
    out
}

fn check_shape(scenario: &Scenario, solution: &Solution, out: &mut Vec<Violation>) -> bool {
    let topo = &scenario.topology;
    let slots = scenario.slots();
    let users = topo.user_count();
    let plan = &solution.placement;
    let mut bad = |what: &str, got: usize, want: usize| {
        push(out, Constraint::Shape, what.to_string(), got as f64, want as f64);
    };
    if plan.assign.len() != slots || plan.active.len() != slots {
        bad("placement slots", plan.assign.len(), slots);
        return false;
    }
    for t in 0..slots {
        if plan.assign[t].len() != users {
            bad("placement users", plan.assign[t].len(), users);
            return false;
        }
        if plan.assign[t].iter().any(|h| h.len() != scenario.chain.len()) {
            bad("URFs per user", 0, scenario.chain.len());
            return false;
        }
        if plan.active[t].len() != topo.cloud_count() {
            bad("activity clouds", plan.active[t].len(), topo.cloud_count());
            return false;
        }
        for c in topo.clouds() {
            if plan.active[t][c.0].len() != topo.du_count(c) {
                bad("activity DUs", plan.active[t][c.0].len(), topo.du_count(c));
                return false;
            }
        }
    }
    let energy = &solution.energy.clouds;
    if energy.len() != topo.cloud_count() {
        bad("schedule clouds", energy.len(), topo.cloud_count());
        return false;
    }
    for s in energy {
        if s.green.len() != slots || s.sold.len() != slots || s.battery.len() != slots {
            bad("schedule slots", s.green.len(), slots);
            return false;
        }
    }
    true
}

fn check_placement(scenario: &Scenario, solution: &Solution, out: &mut Vec<Violation>) {
    let topo = &scenario.topology;
    let plan = &solution.placement;
    for t in 0..scenario.slots() {
        let mut load: Vec<Vec<f64>> = topo.clouds().map(|c| vec![0.0; topo.du_count(c)]).collect();
        let mut hosted: Vec<Vec<bool>> = topo.clouds().map(|c| vec![false; topo.du_count(c)]).collect();
        for (i, hosts) in plan.assign[t].iter().enumerate() {
            let own = CloudId::edge(topo.ec_of_user(i));
            for (f, du) in hosts.iter().enumerate() {
                let allowed = (du.cloud.is_central() || du.cloud == own) && du.index < topo.du_count(du.cloud);
                if !allowed {
                    push(
                        out,
                        Constraint::Assignment,
                        format!("user {i} urf {f} slot {t} -> {} du {}", du.cloud, du.index),
                        0.0,
                        1.0,
                    );
                    continue;
                }
                load[du.cloud.0][du.index] += scenario.traffic.load[t][i];
                hosted[du.cloud.0][du.index] = true;
            }
            let cc = plan.cc_count(t, i);
            let delay = scenario.traffic.delay[t][i];
            if cc > max_cc_urfs(delay, scenario.chain.len()) {
                push(out, Constraint::Delay, format!("user {i} slot {t}"), cc as f64, delay as f64);
            }
        }
        for c in topo.clouds() {
            let cap = scenario.params(c).du_capacity;
            let kind = if c.is_central() {
                Constraint::CapacityCc
            } else {
                Constraint::CapacityEc
            };
            for d in 0..topo.du_count(c) {
                let du = DuRef::new(c, d);
                if hosted[c.0][d] && load[c.0][d] >= cap {
                    push(out, kind, format!("{} du {} slot {t}", du.cloud, du.index), load[c.0][d], cap);
                }
                if hosted[c.0][d] && !plan.active[t][c.0][d] {
                    push(out, Constraint::Activation, format!("{} du {} slot {t}", du.cloud, du.index), 0.0, 1.0);
                }
            }
        }
    }
}

fn check_energy(scenario: &Scenario, solution: &Solution, out: &mut Vec<Violation>) {
    let Ok(psi) = scenario.consumption_of(&solution.placement) else {
        push(out, Constraint::Shape, "consumption".into(), 0.0, 0.0);
        return;
    };
    for c in scenario.topology.clouds() {
        let sched = solution.energy.cloud(c);
        let cap = scenario.params(c).battery_cap;
        let gen = &scenario.generation[c.0];
        if (sched.carry - scenario.carry[c.0]).abs() > ENERGY_TOL {
            push(out, Constraint::BatteryBalance, format!("{c} carry"), sched.carry, scenario.carry[c.0]);
        }
        for t in 0..scenario.slots() {
            let (s, p, b) = (sched.green[t], sched.sold[t], sched.battery[t]);
            for (name, v) in [("green", s), ("sold", p), ("battery", b)] {
                if v < -ENERGY_TOL || !v.is_finite() {
                    push(out, Constraint::NonNegative, format!("{c} {name} slot {t}"), v, 0.0);
                }
            }
            let expected = sched.level_before(t) - s - p + gen[t];
            if (b - expected).abs() > ENERGY_TOL * expected.abs().max(1.0) {
                push(out, Constraint::BatteryBalance, format!("{c} slot {t}"), b, expected);
            }
            if b > cap + ENERGY_TOL {
                push(out, Constraint::BatteryCapacity, format!("{c} slot {t}"), b, cap);
            }
            if s > psi[c.0][t] + ENERGY_TOL {
                push(out, Constraint::GreenUseBound, format!("{c} slot {t}"), s, psi[c.0][t]);
            }
        }
    }
}
