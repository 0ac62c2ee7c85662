//! Scenario builders shared by the integration tests.
#![allow(dead_code)]

use greensplit::dispatch::{flow_oracle, DispatchInstance};
use greensplit::domain::{
    default_du_count, CloudParams, NetworkTopology, PlacementPlan, Scenario, Tariff, TrafficTrace, UrfChain,
};
use greensplit::harness::TrafficConfig;
use greensplit::supply::{default_tariff, synthetic_radiation, CityProfile};
use greensplit::traffic::{build_trace, make_ec_profiles};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generated day on an arbitrary topology with the default cloud constants.
pub fn generated(ec_count: usize, rrhs: usize, users_per_rrh: usize, seed: u64, day: usize, city: &str) -> Scenario {
    let chain = UrfChain::default();
    let cc = CloudParams::central_default();
    let ec = CloudParams::edge_default();
    let topology = NetworkTopology::with_default_dus(ec_count, rrhs, users_per_rrh, chain.len(), &cc, &ec);
    let t = TrafficConfig::default();
    let profiles = make_ec_profiles(seed, ec_count, t.nu, t.noise_sigma, t.season);
    let traffic = build_trace(&topology, &profiles, day, seed, t.size_param, chain.len());
    let solar = synthetic_radiation(&CityProfile::by_name(city).expect("known city"), day, seed);
    let generation = topology
        .clouds()
        .map(|c| {
            let kw = if c.is_central() { cc.panel_kw } else { ec.panel_kw };
            solar.iter().map(|v| v * kw).collect()
        })
        .collect();
    let carry = vec![0.0; topology.cloud_count()];
    let s = Scenario {
        chain,
        topology,
        cc,
        ec,
        traffic,
        generation,
        tariff: default_tariff(),
        carry,
    };
    s.validate().expect("generated scenario is valid");
    s
}

/// Regime of a tiny instance's harvest relative to its draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Harvest {
    /// Per-slot harvest up to one DU's draw, storage up to two slots of it;
    /// grid energy dominates as in the full-size network.
    GridDominated,
    /// Harvest often exceeds the whole cloud's draw.
    SurplusRich,
}

/// Random tiny instance: at most 2 ECs, 3 users, 3 functions and 4 slots,
/// with whole-Wh generation and consumption so flow dispatch is exact.
pub fn tiny(seed: u64) -> Scenario {
    tiny_with(seed, Harvest::GridDominated)
}

pub fn tiny_with(seed: u64, harvest: Harvest) -> Scenario {
    let mut r = rng(seed);
    let ec_count = r.random_range(1..=2);
    let users_per_rrh = if ec_count == 1 { r.random_range(1..=3) } else { 1 };
    let nf = r.random_range(1..=3);
    let slots = r.random_range(1..=4);
    let chain = UrfChain::anonymous(nf).unwrap();
    let cc = CloudParams {
        static_power: 100.0,
        per_du_power: r.random_range(2..=6) as f64 * 100.0,
        du_capacity: [1.5, 2.0, 2.5][r.random_range(0..3)],
        battery_cap: r.random_range(0..=3) as f64 * 500.0,
        panel_kw: 1.0,
    };
    let ec = CloudParams {
        static_power: 50.0,
        per_du_power: r.random_range(1..=4) as f64 * 100.0,
        du_capacity: [1.2, 1.5, 2.0][r.random_range(0..3)],
        battery_cap: r.random_range(0..=3) as f64 * 300.0,
        panel_kw: 1.0,
    };
    let users = ec_count * users_per_rrh;
    let topology = NetworkTopology {
        ec_count,
        rrhs_per_ec: 1,
        users_per_rrh,
        du_count_cc: default_du_count(users * nf, cc.du_capacity),
        du_count_ec: default_du_count(users_per_rrh * nf, ec.du_capacity),
    };
    let delays: Vec<u32> = (0..users).map(|_| r.random_range(0..=nf as u32)).collect();
    let load = (0..slots)
        .map(|_| (0..users).map(|_| r.random_range(1..=19) as f64 * 0.05).collect())
        .collect();
    let generation: Vec<Vec<f64>> = topology
        .clouds()
        .map(|c| {
            let p = if c.is_central() { &cc } else { &ec };
            let top = match harvest {
                Harvest::GridDominated => ((p.static_power + p.per_du_power) / 100.0) as u32,
                Harvest::SurplusRich => 8,
            };
            (0..slots).map(|_| (r.random_range(0..=top) * 100) as f64).collect()
        })
        .collect();
    let all = default_tariff().prices;
    let tariff = Tariff {
        prices: (0..slots).map(|_| all[r.random_range(0..24)]).collect(),
        sell_ratio: [0.0, 0.5, 0.9][r.random_range(0..3)],
    };
    let carry = topology
        .clouds()
        .map(|c| {
            let cap = if c.is_central() { cc.battery_cap } else { ec.battery_cap };
            (cap / 100.0 * r.random_range(0..=100) as f64).floor()
        })
        .collect();
    let s = Scenario {
        chain,
        topology,
        cc,
        ec,
        traffic: TrafficTrace {
            load,
            delay: vec![delays; slots],
        },
        generation,
        tariff,
        carry,
    };
    s.validate().expect("tiny scenario is valid");
    s
}

/// Grid cost of a consumption profile with no renewable offset.
pub fn all_grid_cost(consumption: &[Vec<f64>], tariff: &Tariff) -> f64 {
    consumption
        .iter()
        .map(|c| c.iter().zip(&tariff.prices).map(|(psi, e)| psi * e / 1000.0).sum::<f64>())
        .sum()
}

/// OpEx of a placement when every cloud's energy is dispatched optimally.
pub fn with_optimal_dispatch(scenario: &Scenario, placement: &PlacementPlan) -> f64 {
    let consumption = scenario.consumption_of(placement).expect("placement fits the scenario");
    scenario
        .topology
        .clouds()
        .map(|c| {
            let psi = consumption[c.0].clone();
            let grid: f64 = psi.iter().zip(&scenario.tariff.prices).map(|(p, e)| p * e / 1000.0).sum();
            let inst = DispatchInstance::for_cloud(scenario, c, psi);
            grid - inst.savings(&flow_oracle(&inst).schedule)
        })
        .sum()
}
