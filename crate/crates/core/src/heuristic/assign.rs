use crate::domain::{CloudId, DuRef};
use crate::error::{Error, Result};

use super::state::SlotPlacement;

/// Per-DU loads of one cloud after packing.
#[derive(Debug, Clone, PartialEq)]
pub struct DuLoadLedger {
    pub loads: Vec<f64>,
    /// Number of URFs hosted per DU.
    pub items: Vec<usize>,
    pub capacity: f64,
}

impl DuLoadLedger {
    pub fn active_count(&self) -> usize {
        self.items.iter().filter(|n| **n > 0).count()
    }
}

/// Sequential packing of every URF of every user, in user then chain order,
/// into DUs `0, 1, ...`: the current DU takes the next URF while its load
/// stays strictly below `capacity`, otherwise the next DU is opened.
///
/// Returns, per URF in packing order, the DU index it landed on.
pub fn pack_sequential(loads: &[f64], chain_len: usize, capacity: f64, du_count: usize) -> Result<(Vec<usize>, DuLoadLedger)> {
    let mut ledger = DuLoadLedger {
        loads: vec![0.0; du_count],
        items: vec![0; du_count],
        capacity,
    };
    let mut hosts = Vec::with_capacity(loads.len() * chain_len);
    let mut d = 0usize;
    for (k, &rho) in loads.iter().enumerate() {
        for _ in 0..chain_len {
            if d < du_count && ledger.items[d] > 0 && ledger.loads[d] + rho >= capacity {
                d += 1;
            }
            if d >= du_count || rho >= capacity {
                return Err(Error::Infeasible(format!(
                    "user {k} (load {rho}) does not fit: {du_count} DUs of capacity {capacity}"
                )));
            }
            ledger.loads[d] += rho;
            ledger.items[d] += 1;
            hosts.push(d);
        }
    }
    Ok((hosts, ledger))
}

/// Initial packing of one EC's users for one slot into `state`.
pub fn initial_assignment(
    state: &mut SlotPlacement,
    ec: CloudId,
    users: &[usize],
    loads: &[f64],
    capacity: f64,
) -> Result<DuLoadLedger> {
    let chain_len = users.first().map_or(0, |&u| state.hosts[u].len());
    let du_count = state.items[ec.0].len();
    let user_loads: Vec<f64> = users.iter().map(|&u| loads[u]).collect();
    let (hosts, ledger) = pack_sequential(&user_loads, chain_len, capacity, du_count)
        .map_err(|e| Error::Infeasible(format!("{ec}: {e}")))?;
    let mut it = hosts.into_iter();
    for &u in users {
        for f in 0..chain_len {
            let d = it.next().expect("one host per URF");
            state.place(u, f, DuRef::new(ec, d), loads);
        }
    }
    Ok(ledger)
}
