//! Green-aware placement and dispatch heuristic, and its green-blind baseline.
//!
//! The heuristic runs, in order: sequential packing at every EC, green-use
//! dispatch of the ECs, grid-gated offloading to the CC, green-use dispatch of
//! the CC, surplus-driven migration, and finally surplus sales. Every
//! placement change is followed by a re-dispatch of the affected clouds.

mod assign;
mod migrate;
mod offload;
mod state;

pub use assign::{initial_assignment, pack_sequential, DuLoadLedger};
pub use migrate::{migration_decision, MigrationOutcome, SlotEnergy};
pub use offload::{offload_decision, offload_operation, GridGuard, MoveContext, OffloadOutcome};
pub use state::SlotPlacement;

use serde::Serialize;

use crate::dispatch::{compute_overflow, greedy_immediate, schedule_green_use, sell_surplus, DispatchInstance};
use crate::domain::{CloudId, CloudSchedule, EnergySchedule, PlacementPlan, Scenario, Solution};
use crate::error::Result;

/// Rollback snapshot of one slot's placement.
pub type MigrationSnapshot = SlotPlacement;

/// One row of the heuristic's decision log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub step: u8,
    pub cloud: String,
    pub slot: Option<usize>,
    pub action: &'static str,
    pub value: f64,
}

fn event(step: u8, cloud: CloudId, slot: Option<usize>, action: &'static str, value: f64) -> TraceEvent {
    TraceEvent {
        step,
        cloud: cloud.to_string(),
        slot,
        action,
        value,
    }
}

fn context<'a>(scenario: &'a Scenario, t: usize) -> MoveContext<'a> {
    MoveContext {
        loads: &scenario.traffic.load[t],
        delays: &scenario.traffic.delay[t],
        chain_len: scenario.chain.len(),
        cc: &scenario.cc,
        ec: &scenario.ec,
    }
}

fn consumption_series(scenario: &Scenario, states: &[SlotPlacement], cloud: CloudId) -> Vec<f64> {
    states
        .iter()
        .enumerate()
        .map(|(t, s)| context(scenario, t).consumption(s, cloud))
        .collect()
}

fn instance(scenario: &Scenario, states: &[SlotPlacement], cloud: CloudId) -> DispatchInstance {
    DispatchInstance::for_cloud(scenario, cloud, consumption_series(scenario, states, cloud))
}

fn initial_states(scenario: &Scenario, trace: &mut Vec<TraceEvent>) -> Result<Vec<SlotPlacement>> {
    scenario.validate()?;
    let topo = &scenario.topology;
    (0..scenario.slots())
        .map(|t| {
            let mut state = SlotPlacement::empty(topo, scenario.chain.len());
            for r in 0..topo.ec_count {
                let users: Vec<usize> = topo.users_of_ec(r).collect();
                let ledger = initial_assignment(
                    &mut state,
                    CloudId::edge(r),
                    &users,
                    &scenario.traffic.load[t],
                    scenario.ec.du_capacity,
                )?;
                trace.push(event(1, CloudId::edge(r), Some(t), "pack", ledger.active_count() as f64));
            }
            Ok(state)
        })
        .collect()
}

fn finish(scenario: &Scenario, states: Vec<SlotPlacement>, clouds: Vec<CloudSchedule>) -> Result<Solution> {
    let assign = states.into_iter().map(|s| s.hosts).collect();
    let mut plan = PlacementPlan::from_assignments(&scenario.topology, assign);
    plan.canonicalize();
    Solution::new(scenario, plan, EnergySchedule { clouds })
}

pub fn run_heuristic(scenario: &Scenario) -> Result<Solution> {
    run_heuristic_traced(scenario).map(|(s, _)| s)
}

/// The heuristic, also returning its decision log.
pub fn run_heuristic_traced(scenario: &Scenario) -> Result<(Solution, Vec<TraceEvent>)> {
    let mut trace = Vec::new();
    let mut states = initial_states(scenario, &mut trace)?;
    let topo = &scenario.topology;
    let slots = scenario.slots();
    let edges: Vec<CloudId> = (0..topo.ec_count).map(CloudId::edge).collect();
    let mut sched: Vec<CloudSchedule> = topo
        .clouds()
        .map(|c| CloudSchedule::zeros(slots, scenario.carry[c.0]))
        .collect();

    let dispatch_edges = |states: &[SlotPlacement], sched: &mut Vec<CloudSchedule>, trace: &mut Vec<TraceEvent>, step| {
        for &ec in &edges {
            sched[ec.0] = schedule_green_use(&instance(scenario, states, ec));
            trace.push(event(step, ec, None, "dispatch", sched[ec.0].green.iter().sum()));
        }
    };

    dispatch_edges(&states, &mut sched, &mut trace, 2);

    for (t, state) in states.iter_mut().enumerate() {
        let ctx = context(scenario, t);
        for &ec in &edges {
            let guard = GridGuard::GreenAware {
                green_use: sched[ec.0].green[t],
            };
            let out = offload_decision(state, ec, &ctx, guard);
            if out.urfs_moved > 0 {
                trace.push(event(3, ec, Some(t), "offload", out.dus_released as f64));
            }
        }
    }
    dispatch_edges(&states, &mut sched, &mut trace, 3);

    sched[0] = schedule_green_use(&instance(scenario, &states, CloudId::CENTRAL));
    trace.push(event(4, CloudId::CENTRAL, None, "dispatch", sched[0].green.iter().sum()));

    let overflow: Vec<Vec<f64>> = topo
        .clouds()
        .map(|c| compute_overflow(&instance(scenario, &states, c), &sched[c.0]))
        .collect();
    for (t, state) in states.iter_mut().enumerate() {
        let green: Vec<f64> = sched.iter().map(|s| s.green[t]).collect();
        let over: Vec<f64> = overflow.iter().map(|o| o[t]).collect();
        let energy = SlotEnergy {
            price: scenario.tariff.prices[t],
            sell_ratio: scenario.tariff.sell_ratio,
            green: &green,
            overflow: &over,
        };
        let out = migration_decision(state, &context(scenario, t), &energy, |u| topo.ec_of_user(u));
        if out.to_cc > 0 {
            trace.push(event(5, CloudId::CENTRAL, Some(t), "migrate-to-cc", out.to_cc as f64));
        }
        if out.to_ec > 0 {
            trace.push(event(5, CloudId::CENTRAL, Some(t), "migrate-to-ec", out.to_ec as f64));
        }
    }

    for c in topo.clouds() {
        let inst = instance(scenario, &states, c);
        let sched_c = schedule_green_use(&inst);
        sched[c.0] = sell_surplus(&inst, &sched_c);
        trace.push(event(6, c, None, "sell", sched[c.0].sold.iter().sum()));
    }
    Ok((finish(scenario, states, sched)?, trace))
}

/// Green-blind reference: packing, unconditional offloading, immediate green
/// use and surplus sales.
pub fn run_baseline(scenario: &Scenario) -> Result<Solution> {
    let mut states = initial_states(scenario, &mut Vec::new())?;
    for (t, state) in states.iter_mut().enumerate() {
        let ctx = context(scenario, t);
        for r in 0..scenario.topology.ec_count {
            offload_decision(state, CloudId::edge(r), &ctx, GridGuard::Blind);
        }
    }
    let sched = scenario
        .topology
        .clouds()
        .map(|c| {
            let inst = instance(scenario, &states, c);
            sell_surplus(&inst, &greedy_immediate(&inst))
        })
        .collect();
    finish(scenario, states, sched)
}
