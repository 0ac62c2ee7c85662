use std::collections::BTreeMap;
use std::io::BufRead;

use super::model::{MilpModel, VarKey};
use crate::domain::{CloudId, CloudSchedule, DuRef, EnergySchedule, PlacementPlan, Scenario, Solution};
use crate::error::{Error, Result};

/// Absolute tolerance on rows and bounds, scaled by `max(1, |rhs|)`.
pub const ROW_TOL: f64 = 1e-6;

/// A row, bound or integrality condition the candidate breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub residuals: Vec<Residual>,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.residuals.is_empty()
    }
}

fn check_dims(model: &MilpModel, candidate: &Solution) -> Result<()> {
    let shape = &model.shape;
    let topo = &shape.topology;
    let plan = &candidate.placement;
    let bad_assign = plan.assign.len() != shape.slots
        || plan
            .assign
            .iter()
            .any(|u| u.len() != topo.user_count() || u.iter().any(|h| h.len() != shape.chain_len));
    let bad_active = plan.active.len() != shape.slots
        || plan
            .active
            .iter()
            .any(|c| c.len() != topo.cloud_count() || topo.clouds().any(|id| c[id.0].len() != topo.du_count(id)));
    let bad_energy = candidate.energy.clouds.len() != topo.cloud_count()
        || candidate.energy.clouds.iter().any(|s| {
            s.green.len() != shape.slots || s.sold.len() != shape.slots || s.battery.len() != shape.slots
        });
    if bad_assign || bad_active || bad_energy {
        return Err(Error::Shape("candidate dimensions do not match the model".into()));
    }
    Ok(())
}

/// Variable vector of a candidate under the model's layout. Assignments to
/// DUs the model has no variable for are reported as residuals.
pub fn candidate_values(model: &MilpModel, candidate: &Solution) -> Result<(Vec<f64>, Vec<Residual>)> {
    check_dims(model, candidate)?;
    let topo = &model.shape.topology;
    let mut x = vec![0.0; model.variables.len()];
    let mut out_of_scope = Vec::new();
    for (t, users) in candidate.placement.assign.iter().enumerate() {
        for (i, hosts) in users.iter().enumerate() {
            for (f, du) in hosts.iter().enumerate() {
                let key = VarKey::Assign {
                    user: i,
                    du: topo.global_du(*du),
                    urf: f,
                    slot: t,
                };
                match model.var(key) {
                    Some(j) => x[j] = 1.0,
                    None => out_of_scope.push(Residual {
                        name: format!("scope:{key}"),
                        lhs: 1.0,
                        rhs: 0.0,
                        excess: 1.0,
                    }),
                }
            }
        }
    }
    for (t, clouds) in candidate.placement.active.iter().enumerate() {
        for c in topo.clouds() {
            for (d, &on) in clouds[c.0].iter().enumerate() {
                let key = VarKey::Active {
                    du: topo.global_du(DuRef::new(c, d)),
                    slot: t,
                };
                if let Some(j) = model.var(key) {
                    x[j] = if on { 1.0 } else { 0.0 };
                }
            }
        }
    }
    for (c, sched) in candidate.energy.clouds.iter().enumerate() {
        for t in 0..model.shape.slots {
            for (key, v) in [
                (VarKey::Green { cloud: c, slot: t }, sched.green[t]),
                (VarKey::Sold { cloud: c, slot: t }, sched.sold[t]),
                (VarKey::Battery { cloud: c, slot: t }, sched.battery[t]),
            ] {
                if let Some(j) = model.var(key) {
                    x[j] = v;
                }
            }
        }
    }
    Ok((x, out_of_scope))
}

/// Rows, bounds and integrality residuals of a raw variable vector.
pub fn residuals(model: &MilpModel, x: &[f64]) -> Vec<Residual> {
    let mut out = Vec::new();
    for row in &model.rows {
        let lhs: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum();
        let excess = row.sense.violation(lhs, row.rhs);
        if excess > ROW_TOL * row.rhs.abs().max(1.0) {
            out.push(Residual {
                name: row.name.clone(),
                lhs,
                rhs: row.rhs,
                excess,
            });
        }
    }
    for (v, &val) in model.variables.iter().zip(x) {
        let scale = ROW_TOL * val.abs().max(1.0);
        let excess = (v.lower - val).max(val - v.upper).max(0.0);
        if excess > scale {
            out.push(Residual {
                name: format!("bound:{}", v.key),
                lhs: val,
                rhs: if val < v.lower { v.lower } else { v.upper },
                excess,
            });
        }
        if v.key.is_binary() && (val - val.round()).abs() > ROW_TOL {
            out.push(Residual {
                name: format!("integral:{}", v.key),
                lhs: val,
                rhs: val.round(),
                excess: (val - val.round()).abs(),
            });
        }
    }
    out
}

/// Objective under the model's coefficients plus every residual.
pub fn evaluate_objective(model: &MilpModel, candidate: &Solution) -> Result<Evaluation> {
    let (x, mut residual_list) = candidate_values(model, candidate)?;
    residual_list.extend(residuals(model, &x));
    Ok(Evaluation {
        objective: model.objective_value(&x),
        residuals: residual_list,
    })
}

/// Parse `name=value` (or `name value`) lines, skipping blanks and `#`
/// comments.
pub fn read_solution_values<R: BufRead>(reader: R) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse("solution", e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, value) = line
            .split_once('=')
            .or_else(|| line.split_once(char::is_whitespace))
            .ok_or_else(|| Error::Data {
                row: n + 1,
                message: format!("expected name=value, got {line:?}"),
            })?;
        let value: f64 = value.trim().parse().map_err(|_| Error::Data {
            row: n + 1,
            message: format!("bad value {:?}", value.trim()),
        })?;
        out.insert(name.trim().to_string(), value);
    }
    Ok(out)
}

/// Rebuild a [`Solution`] from solver values. Each user's URFs in a slot are
/// the DUs with `m = 1`, relabelled so that the CC holds the chain's top; a
/// user with a host count other than the chain length is an error.
pub fn solution_from_values(scenario: &Scenario, model: &MilpModel, values: &BTreeMap<String, f64>) -> Result<Solution> {
    let shape = &model.shape;
    let topo = &shape.topology;
    if topo != &scenario.topology || shape.slots != scenario.slots() || shape.chain_len != scenario.chain.len() {
        return Err(Error::Shape("model was built for a different scenario".into()));
    }
    for name in values.keys() {
        if VarKey::parse(name).and_then(|k| model.var(k)).is_none() {
            return Err(Error::parse("solution", format!("unknown variable {name:?}")));
        }
    }
    let get = |key: VarKey| values.get(&key.to_string()).copied().unwrap_or(0.0);
    let mut hosts = vec![vec![Vec::new(); topo.user_count()]; shape.slots];
    let mut active: Vec<Vec<Vec<bool>>> = (0..shape.slots)
        .map(|_| topo.clouds().map(|c| vec![false; topo.du_count(c)]).collect())
        .collect();
    for var in &model.variables {
        match var.key {
            VarKey::Assign { user, du, slot, .. } if get(var.key) > 0.5 => {
                hosts[slot][user].push(topo.du_from_global(du).expect("model DU"));
            }
            VarKey::Active { du, slot } if get(var.key) > 0.5 => {
                let du = topo.du_from_global(du).expect("model DU");
                active[slot][du.cloud.0][du.index] = true;
            }
            _ => {}
        }
    }
    for (t, users) in hosts.iter_mut().enumerate() {
        for (i, h) in users.iter_mut().enumerate() {
            if h.len() != shape.chain_len {
                return Err(Error::Infeasible(format!(
                    "user {i} slot {t}: {} hosted functions, expected {}",
                    h.len(),
                    shape.chain_len
                )));
            }
            h.sort();
        }
    }
    let clouds = topo
        .clouds()
        .map(|c: CloudId| {
            let mut s = CloudSchedule::zeros(shape.slots, scenario.carry[c.0]);
            for t in 0..shape.slots {
                s.green[t] = get(VarKey::Green { cloud: c.0, slot: t });
                s.sold[t] = get(VarKey::Sold { cloud: c.0, slot: t });
                s.battery[t] = get(VarKey::Battery { cloud: c.0, slot: t });
            }
            s
        })
        .collect();
    let placement = PlacementPlan { assign: hosts, active };
    Solution::new(scenario, placement, EnergySchedule { clouds })
}

/// Write a solution's variables as `name=value` lines (nonzero values only).
pub fn solution_values(model: &MilpModel, candidate: &Solution) -> Result<BTreeMap<String, f64>> {
    let (x, scope) = candidate_values(model, candidate)?;
    if let Some(r) = scope.first() {
        return Err(Error::Infeasible(format!("no model variable for {}", r.name)));
    }
    Ok(model
        .variables
        .iter()
        .zip(x)
        .filter(|(_, v)| *v != 0.0)
        .map(|(var, v)| (var.key.to_string(), v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_lines_accept_both_separators() {
        let text = "# heuristic\n\nm_0_0_0_0=1\n a_0_0 1 \np_1_3 = 2.5\n";
        let v = read_solution_values(text.as_bytes()).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v["a_0_0"], 1.0);
        assert_eq!(v["p_1_3"], 2.5);
    }

    #[test]
    fn malformed_lines_report_their_row() {
        let err = read_solution_values("a_0_0=1\nb_0_0=lots\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Data { row: 2, .. }));
        assert!(read_solution_values("justaname\n".as_bytes()).is_err());
    }
}
