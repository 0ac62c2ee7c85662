use crate::domain::{CloudId, DuRef};

use super::offload::{drain_to_cc, MoveContext};
use super::state::SlotPlacement;

/// Energy state of every cloud in one slot, as left by the last dispatch.
#[derive(Debug, Clone, Copy)]
pub struct SlotEnergy<'a> {
    pub price: f64,
    pub sell_ratio: f64,
    /// Green energy used, per cloud.
    pub green: &'a [f64],
    /// Energy that could be neither used nor stored, per cloud.
    pub overflow: &'a [f64],
}

impl SlotEnergy<'_> {
    /// Slot-local cost of running `cloud` at consumption `psi`: grid draw
    /// beyond the green energy on hand, minus the sale value of what is left.
    pub fn cost(&self, cloud: CloudId, psi: f64) -> f64 {
        let on_hand = self.green[cloud.0] + self.overflow[cloud.0];
        if psi >= on_hand {
            self.price * (psi - on_hand)
        } else {
            -self.sell_ratio * self.price * (on_hand - psi)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MigrationOutcome {
    pub to_cc: usize,
    pub to_ec: usize,
    pub rejected: usize,
}

const EPS: f64 = 1e-9;

/// Cost change of the two clouds involved in a move batch.
fn batch_delta(energy: &SlotEnergy, ctx: &MoveContext, before: &SlotPlacement, after: &SlotPlacement, ec: CloudId) -> f64 {
    [CloudId::CENTRAL, ec]
        .iter()
        .map(|&c| energy.cost(c, ctx.consumption(after, c)) - energy.cost(c, ctx.consumption(before, c)))
        .sum()
}

/// Move URFs toward whichever side of the network has surplus green energy
/// in this slot.
///
/// With surplus at the CC, DUs of ECs without surplus are drained to the CC
/// (highest index first) until the surplus is used up. Otherwise CC-resident
/// URFs of users whose EC has surplus are moved back to their EC. A DU's batch
/// of moves is kept only if it lowers the slot cost estimate.
pub fn migration_decision(state: &mut SlotPlacement, ctx: &MoveContext, energy: &SlotEnergy, ec_of_user: impl Fn(usize) -> usize) -> MigrationOutcome {
    let mut out = MigrationOutcome::default();
    let ec_count = state.items.len() - 1;
    let cc_surplus = energy.overflow[0];
    if cc_surplus > EPS {
        let mut remaining = cc_surplus;
        'ecs: for r in 0..ec_count {
            let ec = CloudId::edge(r);
            if energy.overflow[ec.0] > EPS {
                continue;
            }
            for d in (0..state.items[ec.0].len()).rev() {
                if !state.active[ec.0][d] {
                    continue;
                }
                let snapshot = state.clone();
                let moved = drain_to_cc(state, DuRef::new(ec, d), ctx);
                if moved == 0 {
                    continue;
                }
                if batch_delta(energy, ctx, &snapshot, state, ec) >= -EPS {
                    *state = snapshot;
                    out.rejected += 1;
                    continue;
                }
                out.to_cc += moved;
                remaining -= ctx.consumption(state, CloudId::CENTRAL) - ctx.consumption(&snapshot, CloudId::CENTRAL);
                if remaining <= 0.0 {
                    break 'ecs;
                }
            }
        }
        return out;
    }
    for r in 0..ec_count {
        let ec = CloudId::edge(r);
        if energy.overflow[ec.0] <= EPS {
            continue;
        }
        let mut remaining = energy.overflow[ec.0];
        for d in (0..state.items[0].len()).rev() {
            if !state.active[0][d] {
                continue;
            }
            let du = DuRef::new(CloudId::CENTRAL, d);
            let snapshot = state.clone();
            let mut moved = 0;
            for user in state.users_on(du).into_iter().filter(|&u| ec_of_user(u) == r) {
                while state.hosted_on(user, du) > 0 {
                    if state.move_first_fit(user, du, ec, ctx.ec.du_capacity, ctx.loads).is_none() {
                        break;
                    }
                    moved += 1;
                }
            }
            if moved == 0 {
                continue;
            }
            if batch_delta(energy, ctx, &snapshot, state, ec) >= -EPS {
                *state = snapshot;
                out.rejected += 1;
                continue;
            }
            out.to_ec += moved;
            remaining -= ctx.consumption(state, ec) - ctx.consumption(&snapshot, ec);
            if remaining <= 0.0 {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CloudParams, NetworkTopology};

    fn topo() -> NetworkTopology {
        NetworkTopology {
            ec_count: 1,
            rrhs_per_ec: 1,
            users_per_rrh: 1,
            du_count_cc: 2,
            du_count_ec: 2,
        }
    }

    #[test]
    fn cost_estimate_examples() {
        let e = SlotEnergy {
            price: 0.5,
            sell_ratio: 0.5,
            green: &[100.0, 0.0],
            overflow: &[300.0, 0.0],
        };
        assert_eq!(e.cost(CloudId::CENTRAL, 500.0), 50.0);
        assert_eq!(e.cost(CloudId::CENTRAL, 200.0), -50.0);
        assert_eq!(e.cost(CloudId::edge(0), 0.0), 0.0);
    }

    #[test]
    fn cc_surplus_pulls_edge_du() {
        let t = topo();
        let loads = [1.0];
        let ec = CloudId::edge(0);
        let mut s = SlotPlacement::empty(&t, 2);
        s.place(0, 0, DuRef::new(ec, 0), &loads);
        s.place(0, 1, DuRef::new(ec, 1), &loads);
        // CC DU 0 already on, so the move costs the CC nothing extra
        s.loads[0][0] = 1.0;
        s.active[0][0] = true;
        let (cc, ecp) = (CloudParams::central_default(), CloudParams::edge_default());
        let ctx = MoveContext {
            loads: &loads,
            delays: &[2],
            chain_len: 2,
            cc: &cc,
            ec: &ecp,
        };
        let psi_cc = ctx.consumption(&s, CloudId::CENTRAL);
        let energy = SlotEnergy {
            price: 0.46,
            sell_ratio: 0.5,
            green: &[psi_cc, 0.0],
            overflow: &[2000.0, 0.0],
        };
        let out = migration_decision(&mut s, &ctx, &energy, |_| 0);
        assert_eq!(out.to_cc, 1);
        assert_eq!(s.active_count(ec), 1);
        assert_eq!(s.cc_count(0), 1);
    }

    #[test]
    fn unprofitable_batch_is_undone() {
        let t = topo();
        let loads = [1.0];
        let ec = CloudId::edge(0);
        let mut s = SlotPlacement::empty(&t, 2);
        s.place(0, 0, DuRef::new(ec, 0), &loads);
        s.place(0, 1, DuRef::new(ec, 1), &loads);
        let before = s.clone();
        let (cc, ecp) = (CloudParams::central_default(), CloudParams::edge_default());
        let ctx = MoveContext {
            loads: &loads,
            delays: &[2],
            chain_len: 2,
            cc: &cc,
            ec: &ecp,
        };
        // surplus far smaller than the 1500 Wh a fresh CC DU costs
        let energy = SlotEnergy {
            price: 0.46,
            sell_ratio: 0.5,
            green: &[750.0, 0.0],
            overflow: &[10.0, 0.0],
        };
        let out = migration_decision(&mut s, &ctx, &energy, |_| 0);
        // both EC DUs were tried and undone
        assert_eq!(out.rejected, 2);
        assert_eq!(s, before);
    }

    #[test]
    fn edge_surplus_pulls_back_from_cc() {
        let t = topo();
        let loads = [1.0];
        let ec = CloudId::edge(0);
        let mut s = SlotPlacement::empty(&t, 2);
        s.place(0, 0, DuRef::new(CloudId::CENTRAL, 1), &loads);
        s.place(0, 1, DuRef::new(ec, 0), &loads);
        let (cc, ecp) = (CloudParams::central_default(), CloudParams::edge_default());
        let ctx = MoveContext {
            loads: &loads,
            delays: &[2],
            chain_len: 2,
            cc: &cc,
            ec: &ecp,
        };
        let psi_ec = ctx.consumption(&s, ec);
        let energy = SlotEnergy {
            price: 0.70,
            sell_ratio: 0.5,
            green: &[0.0, psi_ec],
            overflow: &[0.0, 400.0],
        };
        let out = migration_decision(&mut s, &ctx, &energy, |_| 0);
        assert_eq!(out.to_ec, 1);
        assert_eq!(s.active_count(CloudId::CENTRAL), 0);
        assert_eq!(s.hosts[0], vec![DuRef::new(ec, 0); 2]);
    }
}
