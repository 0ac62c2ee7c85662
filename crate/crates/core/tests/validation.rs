mod common;

use greensplit::domain::{CloudId, DuRef, Scenario, Solution};
use greensplit::exact::{brute_force_tiny, EnumerationLimits};
use greensplit::heuristic::run_heuristic;
use greensplit::validate::{validate_solution, Constraint};

fn solved() -> (Scenario, Solution) {
    let s = common::generated(2, 2, 5, 3, 180, "istanbul");
    let sol = run_heuristic(&s).unwrap();
    assert!(validate_solution(&s, &sol).is_empty());
    (s, sol)
}

fn kinds(s: &Scenario, sol: &Solution) -> Vec<Constraint> {
    let mut k: Vec<Constraint> = validate_solution(s, sol).iter().map(|v| v.constraint).collect();
    k.dedup();
    k
}

/// Slot and cloud where the heuristic keeps an active EC DU.
fn busy_ec_du(sol: &Solution) -> (usize, DuRef) {
    for (t, users) in sol.placement.assign.iter().enumerate() {
        for hosts in users {
            if let Some(du) = hosts.iter().find(|d| !d.cloud.is_central()) {
                return (t, *du);
            }
        }
    }
    panic!("no EC-hosted function");
}

#[test]
fn tight_capacity_is_reported_per_kind() {
    let (mut s, sol) = solved();
    s.ec.du_capacity = 0.01;
    assert!(kinds(&s, &sol).contains(&Constraint::CapacityEc));
}

#[test]
fn inactive_host_breaks_activation() {
    let (s, mut sol) = solved();
    let (t, du) = busy_ec_du(&sol);
    sol.placement.active[t][du.cloud.0][du.index] = false;
    assert!(kinds(&s, &sol).contains(&Constraint::Activation));
}

#[test]
fn foreign_edge_host_breaks_assignment() {
    let (s, mut sol) = solved();
    // user 0 belongs to EC 0; move one of its functions to EC 1
    sol.placement.assign[0][0][0] = DuRef::new(CloudId::edge(1), 0);
    assert_eq!(kinds(&s, &sol), vec![Constraint::Assignment]);
}

#[test]
fn too_many_central_functions_break_delay() {
    let (mut s, mut sol) = solved();
    for row in &mut s.traffic.delay {
        row[0] = 1;
    }
    let nf = s.chain.len();
    sol.placement.assign[0][0] = (0..nf).map(|_| DuRef::new(CloudId(0), 0)).collect();
    sol.placement.active[0][0][0] = true;
    assert!(kinds(&s, &sol).contains(&Constraint::Delay));
}

#[test]
fn energy_perturbations_are_named() {
    let (s, sol) = solved();
    let mut bad = sol.clone();
    bad.energy.clouds[1].battery[5] += 10.0;
    assert!(kinds(&s, &bad).contains(&Constraint::BatteryBalance));

    let mut bad = sol.clone();
    let cap = s.ec.battery_cap;
    bad.energy.clouds[1].battery[23] = cap + 100.0;
    assert!(kinds(&s, &bad).contains(&Constraint::BatteryCapacity));

    let mut bad = sol.clone();
    bad.energy.clouds[0].sold[3] = -1.0;
    assert!(kinds(&s, &bad).contains(&Constraint::NonNegative));

    let mut bad = sol.clone();
    let psi = s.consumption_of(&sol.placement).unwrap();
    bad.energy.clouds[2].green[0] = psi[2][0] + 50.0;
    assert!(kinds(&s, &bad).contains(&Constraint::GreenUseBound));
}

#[test]
fn stale_objective_and_bad_shapes() {
    let (s, mut sol) = solved();
    sol.opex += 1.0;
    assert_eq!(kinds(&s, &sol), vec![Constraint::Objective]);
    sol.placement.assign.pop();
    assert_eq!(kinds(&s, &sol), vec![Constraint::Shape]);
}

#[test]
fn exact_solutions_are_feasible() {
    for seed in 0..20 {
        let s = common::tiny(seed);
        let sol = brute_force_tiny(&s, EnumerationLimits::default()).unwrap();
        let v = validate_solution(&s, &sol);
        assert!(v.is_empty(), "seed {seed}: {:?}", v);
    }
}
