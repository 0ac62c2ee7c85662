//! Exhaustive solver for tiny scenarios, used as a test oracle.
//!
//! Per slot, every combination of per-user CC-resident URF counts is packed
//! optimally into each cloud's DUs. Only Pareto-minimal vectors of active-DU
//! counts survive, because OpEx never decreases with consumption. Every
//! combination of surviving per-slot vectors is then scored with the exact
//! flow dispatch of each cloud.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::dispatch::{flow_oracle, DispatchInstance};
use crate::domain::{max_cc_urfs, CloudId, CloudSchedule, DuRef, EnergySchedule, PlacementPlan, Scenario, Solution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationLimits {
    /// Refuse when placement states or slot-profile combinations exceed this.
    pub max_states: f64,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self { max_states: 1e7 }
    }
}

/// Fewest DUs (at most `max_bins`) holding `sizes` with every DU load
/// strictly below `capacity`. Returns the DU index of each item.
pub fn min_bin_packing(sizes: &[f64], capacity: f64, max_bins: usize) -> Option<Vec<usize>> {
    if sizes.iter().any(|&s| s >= capacity) {
        return None;
    }
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].total_cmp(&sizes[a]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&k| sizes[k]).collect();

    struct Search<'a> {
        sizes: &'a [f64],
        capacity: f64,
        loads: Vec<f64>,
        place: Vec<usize>,
        best: Option<Vec<usize>>,
        best_bins: usize,
    }
    impl Search<'_> {
        fn run(&mut self, k: usize) {
            if self.loads.len() >= self.best_bins {
                return;
            }
            if k == self.sizes.len() {
                self.best_bins = self.loads.len();
                self.best = Some(self.place.clone());
                return;
            }
            let s = self.sizes[k];
            let mut tried: Vec<f64> = Vec::new();
            for b in 0..self.loads.len() {
                let load = self.loads[b];
                if load + s >= self.capacity || tried.contains(&load) {
                    continue;
                }
                tried.push(load);
                self.loads[b] += s;
                self.place[k] = b;
                self.run(k + 1);
                self.loads[b] = load;
            }
            self.loads.push(s);
            self.place[k] = self.loads.len() - 1;
            self.run(k + 1);
            self.loads.pop();
        }
    }
    let mut search = Search {
        sizes: &sorted,
        capacity,
        loads: Vec::new(),
        place: vec![0; sorted.len()],
        best: None,
        best_bins: max_bins + 1,
    };
    search.run(0);
    let sorted_place = search.best?;
    let mut place = vec![0; sizes.len()];
    for (pos, &k) in order.iter().enumerate() {
        place[k] = sorted_place[pos];
    }
    Some(place)
}

/// Cheapest placement of one slot for each Pareto-minimal active-count vector.
type SlotFront = Vec<(Vec<usize>, Vec<Vec<DuRef>>)>;

fn slot_front(scenario: &Scenario, t: usize) -> SlotFront {
    let topo = &scenario.topology;
    let nf = scenario.chain.len();
    let users = topo.user_count();
    let load = &scenario.traffic.load[t];
    let radix: Vec<usize> = (0..users)
        .map(|i| max_cc_urfs(scenario.traffic.delay[t][i], nf) + 1)
        .collect();
    let combos: usize = radix.iter().product();

    let evaluate = |code: usize| -> Option<(Vec<usize>, Vec<Vec<DuRef>>)> {
        let mut k = vec![0; users];
        let mut rest = code;
        for i in 0..users {
            k[i] = rest % radix[i];
            rest /= radix[i];
        }
        let mut hosts = vec![Vec::with_capacity(nf); users];
        let mut counts = Vec::with_capacity(topo.cloud_count());
        for c in topo.clouds() {
            // (user, size) of every function this cloud hosts
            let items: Vec<usize> = match c.edge_index() {
                None => (0..users).flat_map(|i| std::iter::repeat_n(i, k[i])).collect(),
                Some(r) => topo.users_of_ec(r).flat_map(|i| std::iter::repeat_n(i, nf - k[i])).collect(),
            };
            let sizes: Vec<f64> = items.iter().map(|&i| load[i]).collect();
            let params = scenario.params(c);
            let place = min_bin_packing(&sizes, params.du_capacity, topo.du_count(c))?;
            counts.push(place.iter().collect::<BTreeSet<_>>().len());
            for (&i, &d) in items.iter().zip(&place) {
                hosts[i].push(DuRef::new(c, d));
            }
        }
        for h in &mut hosts {
            h.sort();
        }
        Some((counts, hosts))
    };

    let found: BTreeMap<Vec<usize>, Vec<Vec<DuRef>>> = (0..combos)
        .into_par_iter()
        .filter_map(evaluate)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let keys: Vec<&Vec<usize>> = found.keys().collect();
    let dominated = |a: &Vec<usize>| {
        keys.iter()
            .any(|b| *b != a && b.iter().zip(a).all(|(x, y)| x <= y))
    };
    found
        .iter()
        .filter(|(c, _)| !dominated(c))
        .map(|(c, h)| (c.clone(), h.clone()))
        .collect()
}

/// Certified-optimal solution of a tiny scenario (up to whole-Wh dispatch).
pub fn brute_force_tiny(scenario: &Scenario, limits: EnumerationLimits) -> Result<Solution> {
    scenario.validate()?;
    let topo = &scenario.topology;
    let nf = scenario.chain.len();
    let slots = scenario.slots();
    let states: f64 = (0..slots)
        .flat_map(|t| (0..topo.user_count()).map(move |i| (t, i)))
        .map(|(t, i)| (max_cc_urfs(scenario.traffic.delay[t][i], nf) + 1) as f64)
        .product();
    if states > limits.max_states {
        return Err(Error::LimitExceeded {
            states,
            limit: limits.max_states,
        });
    }
    let fronts: Vec<SlotFront> = (0..slots).map(|t| slot_front(scenario, t)).collect();
    if let Some(t) = fronts.iter().position(Vec::is_empty) {
        return Err(Error::Infeasible(format!("slot {t}: no placement fits the DUs")));
    }
    let profiles: f64 = fronts.iter().map(|f| f.len() as f64).product();
    if profiles > limits.max_states {
        return Err(Error::LimitExceeded {
            states: profiles,
            limit: limits.max_states,
        });
    }
    let profiles = profiles as usize;
    let decode = |code: usize| -> Vec<usize> {
        let mut rest = code;
        fronts
            .iter()
            .map(|f| {
                let k = rest % f.len();
                rest /= f.len();
                k
            })
            .collect()
    };

    // dispatch each distinct per-cloud count series once
    let mut series: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    for code in 0..profiles {
        let pick = decode(code);
        for c in topo.clouds() {
            series.insert((c.0, pick.iter().enumerate().map(|(t, &k)| fronts[t][k].0[c.0]).collect()));
        }
    }
    let scored: BTreeMap<(usize, Vec<usize>), (f64, CloudSchedule)> = series
        .into_par_iter()
        .map(|(c, counts)| {
            let cloud = CloudId(c);
            let params = scenario.params(cloud);
            let psi: Vec<f64> = counts
                .iter()
                .map(|&n| params.static_power + n as f64 * params.per_du_power)
                .collect();
            let grid: f64 = psi.iter().zip(&scenario.tariff.prices).map(|(p, e)| p * e / 1000.0).sum();
            let inst = DispatchInstance::for_cloud(scenario, cloud, psi);
            let oracle = flow_oracle(&inst);
            let cost = grid - inst.savings(&oracle.schedule);
            ((c, counts), (cost, oracle.schedule))
        })
        .collect();

    let (best, _) = (0..profiles)
        .into_par_iter()
        .map(|code| {
            let pick = decode(code);
            let total: f64 = topo
                .clouds()
                .map(|c| {
                    let counts: Vec<usize> = pick.iter().enumerate().map(|(t, &k)| fronts[t][k].0[c.0]).collect();
                    scored[&(c.0, counts)].0
                })
                .sum();
            (code, total)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("at least one profile");

    let pick = decode(best);
    let assign: Vec<Vec<Vec<DuRef>>> = pick.iter().enumerate().map(|(t, &k)| fronts[t][k].1.clone()).collect();
    let clouds = topo
        .clouds()
        .map(|c| {
            let counts: Vec<usize> = pick.iter().enumerate().map(|(t, &k)| fronts[t][k].0[c.0]).collect();
            scored[&(c.0, counts)].1.clone()
        })
        .collect();
    let placement = PlacementPlan::from_assignments(topo, assign);
    Solution::new(scenario, placement, EnergySchedule { clouds })
}
