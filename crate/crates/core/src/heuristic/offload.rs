use crate::domain::{max_cc_urfs, CloudId, CloudParams, DuRef};

use super::state::SlotPlacement;

/// Whether offloading is gated on the EC drawing grid energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridGuard {
    /// Offload only while `consumption - green_use > 0` for the EC.
    GreenAware { green_use: f64 },
    /// Offload regardless of the energy state.
    Blind,
}

/// Slot inputs shared by the move operations.
#[derive(Debug, Clone, Copy)]
pub struct MoveContext<'a> {
    pub loads: &'a [f64],
    pub delays: &'a [u32],
    pub chain_len: usize,
    pub cc: &'a CloudParams,
    pub ec: &'a CloudParams,
}

impl MoveContext<'_> {
    pub fn may_add_cc_urf(&self, state: &SlotPlacement, user: usize) -> bool {
        state.cc_count(user) < max_cc_urfs(self.delays[user], self.chain_len)
    }

    pub fn consumption(&self, state: &SlotPlacement, cloud: CloudId) -> f64 {
        let p = if cloud.is_central() { self.cc } else { self.ec };
        p.static_power + state.active_count(cloud) as f64 * p.per_du_power
    }
}

/// Move one URF of `user` from EC DU `from` to the first CC DU with room.
/// Returns the CC DU, or `None` when no CC DU fits and nothing changed.
pub fn offload_operation(state: &mut SlotPlacement, user: usize, from: DuRef, ctx: &MoveContext) -> Option<DuRef> {
    state.move_first_fit(user, from, CloudId::CENTRAL, ctx.cc.du_capacity, ctx.loads)
}

/// Move every URF hosted on `du` to the CC that the delay bound and CC
/// capacity admit. Returns the number of URFs moved.
pub(crate) fn drain_to_cc(state: &mut SlotPlacement, du: DuRef, ctx: &MoveContext) -> usize {
    let mut moved = 0;
    for user in state.users_on(du) {
        while state.hosted_on(user, du) > 0 {
            if !ctx.may_add_cc_urf(state, user) || offload_operation(state, user, du, ctx).is_none() {
                break;
            }
            moved += 1;
        }
    }
    moved
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OffloadOutcome {
    pub urfs_moved: usize,
    pub dus_released: usize,
    pub rollbacks: usize,
}

/// Offload URFs of EC `ec` to the CC, emptying its DUs from the highest
/// index down. A DU's migrations are kept only if they lower the number of
/// active EC DUs; otherwise the slot state is restored from the snapshot
/// taken before that DU.
pub fn offload_decision(state: &mut SlotPlacement, ec: CloudId, ctx: &MoveContext, guard: GridGuard) -> OffloadOutcome {
    let mut out = OffloadOutcome::default();
    for d in (0..state.items[ec.0].len()).rev() {
        if !state.active[ec.0][d] {
            continue;
        }
        if let GridGuard::GreenAware { green_use } = guard {
            if ctx.consumption(state, ec) - green_use <= 0.0 {
                continue;
            }
        }
        let snapshot = state.clone();
        let before = state.active_count(ec);
        let moved = drain_to_cc(state, DuRef::new(ec, d), ctx);
        if moved == 0 {
            continue;
        }
        if state.active_count(ec) >= before {
            *state = snapshot;
            out.rollbacks += 1;
        } else {
            out.urfs_moved += moved;
            out.dus_released += before - state.active_count(ec);
        }
    }
    out
}
