use greensplit::dispatch::{
    compute_overflow, fixed_point_savings, flow_oracle, greedy_immediate, schedule_green_use, sell_surplus,
    DispatchInstance,
};
use greensplit::domain::CloudSchedule;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = DispatchInstance> {
    (1usize..=24).prop_flat_map(|n| {
        (
            prop::collection::vec(0u32..=30, n),
            prop::collection::vec(0u32..=40, n),
            0u32..=50,
            0u32..=100,
            prop::collection::vec(10u32..=90, n),
            0u32..=10,
        )
            .prop_map(|(psi, gen, cap, carry_pct, prices, ratio)| {
                let battery_cap = cap as f64 * 100.0;
                DispatchInstance {
                    consumption: psi.iter().map(|&v| v as f64 * 100.0).collect(),
                    generation: gen.iter().map(|&v| v as f64 * 100.0).collect(),
                    battery_cap,
                    carry: (battery_cap * carry_pct as f64 / 100.0).floor(),
                    prices: prices.iter().map(|&p| p as f64 / 100.0).collect(),
                    sell_ratio: ratio as f64 / 10.0,
                }
            })
    })
}

/// Recurrence, bounds and green-use cap, to 1e-6 Wh.
fn feasible(inst: &DispatchInstance, s: &CloudSchedule) -> Result<(), String> {
    let tol = 1e-6;
    if (s.carry - inst.carry).abs() > tol {
        return Err(format!("carry {} vs {}", s.carry, inst.carry));
    }
    for t in 0..inst.slots() {
        let expect = s.level_before(t) + inst.generation[t] - s.green[t] - s.sold[t];
        if (s.battery[t] - expect).abs() > tol {
            return Err(format!("slot {t}: battery {} vs {expect}", s.battery[t]));
        }
        if s.battery[t] < -tol || s.battery[t] > inst.battery_cap + tol {
            return Err(format!("slot {t}: battery {} outside [0, {}]", s.battery[t], inst.battery_cap));
        }
        if s.green[t] < -tol || s.sold[t] < -tol || s.green[t] > inst.consumption[t] + tol {
            return Err(format!("slot {t}: green {} sold {}", s.green[t], s.sold[t]));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oracle_bounds_green_use_from_above(inst in instance()) {
        let oracle = flow_oracle(&inst);
        let heuristic = fixed_point_savings(&inst, &schedule_green_use(&inst));
        prop_assert!(heuristic >= 0);
        prop_assert!(oracle.objective_fixed >= heuristic);
        prop_assert!(oracle.objective_fixed >= fixed_point_savings(&inst, &greedy_immediate(&inst)));
        prop_assert_eq!(fixed_point_savings(&inst, &oracle.schedule), oracle.objective_fixed);
    }

    #[test]
    fn every_dispatch_is_feasible(inst in instance()) {
        let green = schedule_green_use(&inst);
        let greedy = greedy_immediate(&inst);
        for s in [&sell_surplus(&inst, &green), &sell_surplus(&inst, &greedy), &flow_oracle(&inst).schedule] {
            if let Err(e) = feasible(&inst, s) {
                return Err(TestCaseError::fail(e));
            }
        }
        // before selling, overflow is spilled: levels never exceed the recurrence
        for s in [&green, &greedy] {
            for t in 0..inst.slots() {
                let bound = s.level_before(t) + inst.generation[t] - s.green[t];
                prop_assert!(s.battery[t] <= bound + 1e-6);
                prop_assert!(s.green[t] <= inst.consumption[t] + 1e-6);
            }
        }
    }

    #[test]
    fn energy_is_conserved(inst in instance()) {
        let sold = sell_surplus(&inst, &schedule_green_use(&inst));
        let inflow = inst.carry + inst.generation.iter().sum::<f64>();
        let outflow = sold.green.iter().sum::<f64>() + sold.sold.iter().sum::<f64>() + sold.battery.last().unwrap();
        prop_assert!((inflow - outflow).abs() < 1e-6);
    }

    #[test]
    fn selling_takes_exactly_the_overflow(inst in instance()) {
        let green = schedule_green_use(&inst);
        let overflow = compute_overflow(&inst, &green);
        prop_assert!(overflow.iter().all(|&o| o >= 0.0));
        let sold = sell_surplus(&inst, &green);
        for t in 0..inst.slots() {
            prop_assert!((sold.sold[t] - overflow[t]).abs() < 1e-6);
            prop_assert_eq!(sold.green[t], green.green[t]);
        }
        prop_assert!(compute_overflow(&inst, &sold).iter().all(|&o| o.abs() < 1e-6));
    }
}
