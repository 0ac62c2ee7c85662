//! Per-cloud battery dispatch.
//!
//! Three policies produce a [`CloudSchedule`] for a fixed consumption series:
//! * [`schedule_green_use`]: price-ordered green use with backward energy
//!   reservations (the heuristic's policy);
//! * [`greedy_immediate`]: use green energy as soon as it is available;
//! * [`flow_oracle`]: exact optimum via a time-expanded min-cost flow.
//!
//! [`sell_surplus`] turns energy that cannot be stored into sales.

use crate::domain::{CloudId, CloudSchedule, Scenario};
use crate::flow::MinCostFlow;

/// Inputs of one cloud's dispatch over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchInstance {
    /// Total energy consumption per slot, Wh.
    pub consumption: Vec<f64>,
    /// Harvested energy per slot, Wh.
    pub generation: Vec<f64>,
    pub battery_cap: f64,
    pub carry: f64,
    pub prices: Vec<f64>,
    pub sell_ratio: f64,
}

impl DispatchInstance {
    pub fn for_cloud(scenario: &Scenario, cloud: CloudId, consumption: Vec<f64>) -> Self {
        Self {
            consumption,
            generation: scenario.generation[cloud.0].clone(),
            battery_cap: scenario.params(cloud).battery_cap,
            carry: scenario.carry[cloud.0],
            prices: scenario.tariff.prices.clone(),
            sell_ratio: scenario.tariff.sell_ratio,
        }
    }

    pub fn slots(&self) -> usize {
        self.prices.len()
    }

    pub fn is_valid(&self) -> bool {
        let n = self.slots();
        self.consumption.len() == n
            && self.generation.len() == n
            && self
                .consumption
                .iter()
                .chain(&self.generation)
                .chain(&self.prices)
                .all(|v| v.is_finite() && *v >= 0.0)
            && self.battery_cap >= 0.0
            && (0.0..=self.battery_cap).contains(&self.carry)
    }

    /// Money saved by a schedule: `sum price * (green + P * sold) / 1000`.
    pub fn savings(&self, schedule: &CloudSchedule) -> f64 {
        (0..self.slots())
            .map(|t| self.prices[t] * (schedule.green[t] + self.sell_ratio * schedule.sold[t]) / 1000.0)
            .sum()
    }

    /// Slots by descending price, ties by ascending index.
    pub fn price_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.slots()).collect();
        order.sort_by(|&a, &b| self.prices[b].total_cmp(&self.prices[a]).then(a.cmp(&b)));
        order
    }
}

/// Backward energy reservations and battery levels of a green-use run.
///
/// `None` is the unset state; once a slot is reserved it stays reserved.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservationState {
    pub reserved: Vec<Option<f64>>,
    pub battery: Vec<f64>,
}

/// Battery trajectory with storage clipped to `[0, B]` and no sales.
fn clipped_trajectory(inst: &DispatchInstance, green: &[f64]) -> Vec<f64> {
    let mut level = inst.carry;
    green
        .iter()
        .zip(&inst.generation)
        .map(|(s, g)| {
            level = (level + g - s).clamp(0.0, inst.battery_cap);
            level
        })
        .collect()
}

/// Price-ordered green use with reservations; `sold` is left at zero.
pub fn schedule_green_use(inst: &DispatchInstance) -> CloudSchedule {
    schedule_green_use_traced(inst).0
}

pub fn schedule_green_use_traced(inst: &DispatchInstance) -> (CloudSchedule, ReservationState) {
    let n = inst.slots();
    let gen = &inst.generation;
    let mut green = vec![0.0; n];
    let mut reserved: Vec<Option<f64>> = vec![None; n];
    let mut battery = clipped_trajectory(inst, &green);

    for t in inst.price_order() {
        // a reserved slot contributes none of its own harvest and owes any
        // positive reservation to later slots
        let available = match reserved[t] {
            None => gen[t],
            Some(r) => -r.max(0.0),
        };
        // harvest already promised to later slots cannot offset this slot's draw
        let own_harvest = if reserved[t].is_none() { gen[t] } else { 0.0 };
        let before = if t == 0 { inst.carry } else { battery[t - 1] };
        let next_level = before + available;
        green[t] = if next_level >= inst.consumption[t] {
            inst.consumption[t]
        } else {
            next_level.max(0.0)
        };
        battery = clipped_trajectory(inst, &green);

        if t != 0 {
            let mut demanded = (green[t] - own_harvest).max(0.0);
            if demanded > 0.0 {
                for tp in (0..t).rev() {
                    let updated = match reserved[tp] {
                        None => {
                            let r = demanded - gen[tp];
                            demanded -= gen[tp];
                            r
                        }
                        Some(r) => r + demanded,
                    };
                    reserved[tp] = Some(updated);
                    if updated <= 0.0 {
                        break;
                    }
                }
            }
        }
    }

    let schedule = enforce_storage(inst, green);
    let state = ReservationState {
        reserved,
        battery: schedule.battery.clone(),
    };
    (schedule, state)
}

/// Clamp green use to what is physically stored and rebuild the clipped
/// battery trajectory; sales stay zero.
fn enforce_storage(inst: &DispatchInstance, mut green: Vec<f64>) -> CloudSchedule {
    let n = inst.slots();
    let mut battery = vec![0.0; n];
    let mut level = inst.carry;
    for t in 0..n {
        let available = level + inst.generation[t];
        green[t] = green[t].min(available).min(inst.consumption[t]).max(0.0);
        level = (available - green[t]).min(inst.battery_cap);
        battery[t] = level;
    }
    CloudSchedule {
        green,
        sold: vec![0.0; n],
        battery,
        carry: inst.carry,
    }
}

/// Use green energy immediately, store the rest, sell what does not fit.
pub fn greedy_immediate(inst: &DispatchInstance) -> CloudSchedule {
    let n = inst.slots();
    let mut out = CloudSchedule::zeros(n, inst.carry);
    let mut level = inst.carry;
    for t in 0..n {
        let available = level + inst.generation[t];
        out.green[t] = inst.consumption[t].min(available);
        let rest = available - out.green[t];
        level = rest.min(inst.battery_cap);
        out.sold[t] = rest - level;
        out.battery[t] = level;
    }
    out
}

/// Energy per slot that the battery cannot hold given the schedule's own
/// levels: `max(0, b[t-1] + G[t] - s[t] - p[t] - B)`.
pub fn compute_overflow(inst: &DispatchInstance, schedule: &CloudSchedule) -> Vec<f64> {
    (0..inst.slots())
        .map(|t| {
            let v = schedule.level_before(t) + inst.generation[t] - schedule.green[t] - schedule.sold[t]
                - inst.battery_cap;
            v.max(0.0)
        })
        .collect()
}

/// Sell every slot's overflow and restore the exact battery recurrence.
pub fn sell_surplus(inst: &DispatchInstance, schedule: &CloudSchedule) -> CloudSchedule {
    let mut out = schedule.clone();
    let mut level = inst.carry;
    for t in 0..inst.slots() {
        let rest = level + inst.generation[t] - out.green[t] - out.sold[t];
        let overflow = (rest - inst.battery_cap).max(0.0);
        out.sold[t] += overflow;
        level = rest - overflow;
        out.battery[t] = level;
    }
    out
}

/// Fixed-point scale of prices in the flow network (units per currency/Wh).
const PRICE_SCALE: f64 = 1e6;

/// Exact flow result at 1 Wh granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub schedule: CloudSchedule,
    /// Optimal `sum price * (green + P * sold)` in fixed point
    /// (currency per kWh times 1e6, times Wh).
    pub objective_fixed: i64,
}

impl OracleSolution {
    /// Objective in currency.
    pub fn objective(&self) -> f64 {
        self.objective_fixed as f64 / PRICE_SCALE / 1000.0
    }
}

/// Integer value of a schedule under the oracle's fixed-point prices.
/// Only meaningful for schedules with whole-Wh quantities.
pub fn fixed_point_savings(inst: &DispatchInstance, schedule: &CloudSchedule) -> i64 {
    (0..inst.slots())
        .map(|t| {
            let (use_gain, sell_gain) = fixed_gains(inst, t);
            use_gain * schedule.green[t].round() as i64 + sell_gain * schedule.sold[t].round() as i64
        })
        .sum()
}

fn fixed_gains(inst: &DispatchInstance, t: usize) -> (i64, i64) {
    let use_gain = (inst.prices[t] * PRICE_SCALE).round() as i64;
    let sell_gain = (inst.prices[t] * inst.sell_ratio * PRICE_SCALE).round() as i64;
    (use_gain, sell_gain)
}

/// Optimal dispatch for a fixed consumption series.
///
/// Network: source feeds every slot node with its harvest (slot 0 also with
/// the carried level); slot `t` passes up to `B` to slot `t + 1`; slot `t`
/// drains to the sink through a use arc (capacity = consumption, gain =
/// price) and a sell arc (gain = P * price). Negated gains become costs and
/// paths are augmented while they are profitable. Quantities are floored to
/// whole Wh; energy left unrouted stays in the battery and anything above `B`
/// is sold.
pub fn flow_oracle(inst: &DispatchInstance) -> OracleSolution {
    let n = inst.slots();
    let source = 0;
    let sink = n + 1;
    let node = |t: usize| t + 1;
    let mut net = MinCostFlow::new(n + 2);
    let supply = inst.carry.floor() as i64 + inst.generation.iter().map(|g| g.floor() as i64).sum::<i64>();
    let cap = inst.battery_cap.floor() as i64;
    if n > 0 {
        net.add_arc(source, node(0), inst.carry.floor() as i64, 0);
    }
    let mut use_arcs = Vec::with_capacity(n);
    let mut sell_arcs = Vec::with_capacity(n);
    for t in 0..n {
        net.add_arc(source, node(t), inst.generation[t].floor() as i64, 0);
        if t + 1 < n {
            net.add_arc(node(t), node(t + 1), cap, 0);
        }
        let (use_gain, sell_gain) = fixed_gains(inst, t);
        use_arcs.push(net.add_arc(node(t), sink, inst.consumption[t].floor() as i64, -use_gain));
        sell_arcs.push(net.add_arc(node(t), sink, supply, -sell_gain));
    }
    let result = net.min_cost_any_flow(source, sink);

    let mut schedule = CloudSchedule::zeros(n, inst.carry);
    for t in 0..n {
        schedule.green[t] = net.flow(use_arcs[t]) as f64;
        schedule.sold[t] = net.flow(sell_arcs[t]) as f64;
    }
    let schedule = sell_surplus(inst, &schedule);
    OracleSolution {
        schedule,
        objective_fixed: -result.cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn worked() -> DispatchInstance {
        DispatchInstance {
            consumption: vec![1000.0; 3],
            generation: vec![2000.0, 0.0, 0.0],
            battery_cap: 5000.0,
            carry: 0.0,
            prices: vec![0.29, 0.70, 0.46],
            sell_ratio: 0.5,
        }
    }

    #[test]
    fn worked_trace_shifts_harvest_to_expensive_slots() {
        let inst = worked();
        let (sched, state) = schedule_green_use_traced(&inst);
        assert_eq!(sched.green, vec![0.0, 1000.0, 1000.0]);
        assert_eq!(sched.sold, vec![0.0; 3]);
        assert_eq!(state.reserved, vec![Some(0.0), Some(1000.0), None]);
        assert!((inst.savings(&sched) - 1.16).abs() < 1e-12);
    }

    #[test]
    fn greedy_consumes_at_once() {
        let sched = greedy_immediate(&worked());
        assert_eq!(sched.green, vec![1000.0, 1000.0, 0.0]);
        assert_eq!(sched.battery, vec![1000.0, 0.0, 0.0]);
    }

    #[test]
    fn no_generation_means_no_green_use() {
        let mut inst = worked();
        inst.generation = vec![0.0; 3];
        assert_eq!(schedule_green_use(&inst).green, vec![0.0; 3]);
        assert_eq!(greedy_immediate(&inst).green, vec![0.0; 3]);
    }

    #[test]
    fn ample_generation_covers_every_slot() {
        let mut inst = worked();
        inst.generation = vec![1500.0, 1000.0, 1200.0];
        inst.battery_cap = 1e6;
        assert_eq!(schedule_green_use(&inst).green, inst.consumption);
    }

    #[test]
    fn oracle_matches_worked_trace() {
        let sol = flow_oracle(&worked());
        assert_eq!(sol.schedule.green, vec![0.0, 1000.0, 1000.0]);
        assert_eq!(sol.schedule.sold, vec![0.0; 3]);
        assert_eq!(sol.objective_fixed, 1_160_000_000);
        assert!((sol.objective() - 1.16).abs() < 1e-12);
    }

    #[test]
    fn oracle_without_storage_sells_surplus_same_slot() {
        let inst = DispatchInstance {
            consumption: vec![300.0, 300.0],
            generation: vec![0.0, 1000.0],
            battery_cap: 0.0,
            carry: 0.0,
            prices: vec![0.46, 0.46],
            sell_ratio: 0.5,
        };
        let sol = flow_oracle(&inst);
        assert_eq!(sol.schedule.green, vec![0.0, 300.0]);
        assert_eq!(sol.schedule.sold, vec![0.0, 700.0]);
    }

    #[test]
    fn flat_prices_never_sell_absorbable_energy() {
        let inst = DispatchInstance {
            consumption: vec![0.0, 500.0, 500.0],
            generation: vec![800.0, 0.0, 0.0],
            battery_cap: 5000.0,
            carry: 0.0,
            prices: vec![0.46; 3],
            sell_ratio: 0.5,
        };
        let sol = flow_oracle(&inst);
        assert_eq!(sol.schedule.sold, vec![0.0; 3]);
        assert_eq!(sol.schedule.green.iter().sum::<f64>(), 800.0);
    }

    #[test]
    fn overflow_examples() {
        let inst = DispatchInstance {
            consumption: vec![1000.0],
            generation: vec![500.0],
            battery_cap: 5000.0,
            carry: 5000.0,
            prices: vec![0.46],
            sell_ratio: 0.5,
        };
        let idle = CloudSchedule::zeros(1, 5000.0);
        assert_eq!(compute_overflow(&inst, &idle), vec![500.0]);

        let mut partial = CloudSchedule::zeros(1, 4800.0);
        partial.green[0] = 200.0;
        let inst2 = DispatchInstance { carry: 4800.0, ..inst.clone() };
        assert_eq!(compute_overflow(&inst2, &partial), vec![100.0]);

        let empty = DispatchInstance {
            carry: 0.0,
            generation: vec![4000.0],
            ..inst
        };
        assert_eq!(compute_overflow(&empty, &CloudSchedule::zeros(1, 0.0)), vec![0.0]);
    }

    #[test]
    fn selling_surplus() {
        let inst = DispatchInstance {
            consumption: vec![0.0, 0.0],
            generation: vec![300.0, 0.0],
            battery_cap: 0.0,
            carry: 0.0,
            prices: vec![0.46, 0.70],
            sell_ratio: 0.5,
        };
        let base = CloudSchedule::zeros(2, 0.0);
        let sold = sell_surplus(&inst, &base);
        assert_eq!(sold.sold, vec![300.0, 0.0]);
        assert_eq!(sold.battery, vec![0.0, 0.0]);
        assert!((inst.savings(&sold) - inst.savings(&base) - 0.5 * 0.46 * 0.3).abs() < 1e-12);
        // idempotent
        assert_eq!(sell_surplus(&inst, &sold), sold);

        let mut quiet = inst.clone();
        quiet.generation = vec![0.0, 0.0];
        assert_eq!(sell_surplus(&quiet, &base).sold, vec![0.0, 0.0]);
    }
}
