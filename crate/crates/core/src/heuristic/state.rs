use crate::domain::{CloudId, DuRef, NetworkTopology};

/// Working placement of one slot: hosts per URF, DU contents, loads and
/// activity. Cloning it is the rollback snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotPlacement {
    /// `hosts[user][f]`
    pub hosts: Vec<Vec<DuRef>>,
    /// `items[cloud][du]`: one user entry per hosted URF.
    pub items: Vec<Vec<Vec<usize>>>,
    /// Load-weighted URF units per DU, `[cloud][du]`.
    pub loads: Vec<Vec<f64>>,
    pub active: Vec<Vec<bool>>,
}

impl SlotPlacement {
    pub fn empty(topology: &NetworkTopology, chain_len: usize) -> Self {
        fn per_cloud<T: Clone>(topology: &NetworkTopology, fill: T) -> Vec<Vec<T>> {
            topology.clouds().map(|c| vec![fill.clone(); topology.du_count(c)]).collect()
        }
        let placeholder = DuRef::new(CloudId::CENTRAL, usize::MAX);
        Self {
            hosts: vec![vec![placeholder; chain_len]; topology.user_count()],
            items: per_cloud(topology, Vec::new()),
            loads: per_cloud(topology, 0.0),
            active: per_cloud(topology, false),
        }
    }

    pub fn active_count(&self, cloud: CloudId) -> usize {
        self.active[cloud.0].iter().filter(|a| **a).count()
    }

    pub fn total_active(&self) -> usize {
        self.active.iter().flatten().filter(|a| **a).count()
    }

    pub fn cc_count(&self, user: usize) -> usize {
        self.hosts[user].iter().filter(|d| d.cloud.is_central()).count()
    }

    pub fn hosted_on(&self, user: usize, du: DuRef) -> usize {
        self.items[du.cloud.0][du.index].iter().filter(|&&u| u == user).count()
    }

    /// Distinct users with at least one URF on `du`, ascending.
    pub fn users_on(&self, du: DuRef) -> Vec<usize> {
        let mut users = self.items[du.cloud.0][du.index].clone();
        users.sort_unstable();
        users.dedup();
        users
    }

    fn refresh_load(&mut self, du: DuRef, loads: &[f64]) {
        self.loads[du.cloud.0][du.index] = self.items[du.cloud.0][du.index].iter().map(|&u| loads[u]).sum();
    }

    /// Host URF `urf` of `user` on `du` (initial placement).
    pub fn place(&mut self, user: usize, urf: usize, du: DuRef, loads: &[f64]) {
        self.hosts[user][urf] = du;
        self.items[du.cloud.0][du.index].push(user);
        self.loads[du.cloud.0][du.index] += loads[user];
        self.active[du.cloud.0][du.index] = true;
    }

    /// Take one of `user`'s URFs off `du`; clears the DU's flag if emptied.
    /// Returns the URF slot index that was freed.
    pub fn detach(&mut self, user: usize, du: DuRef, loads: &[f64]) -> Option<usize> {
        let urf = self.hosts[user].iter().rposition(|&h| h == du)?;
        let list = &mut self.items[du.cloud.0][du.index];
        let pos = list.iter().position(|&u| u == user)?;
        list.remove(pos);
        if list.is_empty() {
            self.active[du.cloud.0][du.index] = false;
        }
        self.refresh_load(du, loads);
        Some(urf)
    }

    fn attach(&mut self, user: usize, urf: usize, du: DuRef, loads: &[f64]) {
        self.hosts[user][urf] = du;
        self.items[du.cloud.0][du.index].push(user);
        self.active[du.cloud.0][du.index] = true;
        self.refresh_load(du, loads);
    }

    /// Move one URF of `user` from `from` to the first DU of `to` (ascending
    /// index) whose load stays strictly below `capacity`. If none fits, the
    /// source assignment is restored and `None` returned.
    pub fn move_first_fit(
        &mut self,
        user: usize,
        from: DuRef,
        to: CloudId,
        capacity: f64,
        loads: &[f64],
    ) -> Option<DuRef> {
        let saved_hosts = self.hosts[user].clone();
        let saved_items = self.items[from.cloud.0][from.index].clone();
        let saved_load = self.loads[from.cloud.0][from.index];
        let saved_active = self.active[from.cloud.0][from.index];
        let urf = self.detach(user, from, loads)?;
        let target = (0..self.items[to.0].len())
            .map(|d| DuRef::new(to, d))
            .find(|du| *du != from && self.loads[to.0][du.index] + loads[user] < capacity);
        match target {
            Some(du) => {
                self.attach(user, urf, du, loads);
                self.canonicalize_user(user);
                Some(du)
            }
            None => {
                self.hosts[user] = saved_hosts;
                self.items[from.cloud.0][from.index] = saved_items;
                self.loads[from.cloud.0][from.index] = saved_load;
                self.active[from.cloud.0][from.index] = saved_active;
                None
            }
        }
    }

    /// Keep the CC-resident URFs a top-of-chain prefix.
    pub fn canonicalize_user(&mut self, user: usize) {
        self.hosts[user].sort();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topology() -> NetworkTopology {
        NetworkTopology {
            ec_count: 1,
            rrhs_per_ec: 1,
            users_per_rrh: 2,
            du_count_cc: 1,
            du_count_ec: 2,
        }
    }

    #[test]
    fn moves_respect_the_strict_bound_and_roll_back() {
        let loads = [0.6, 0.5];
        let ec = DuRef::new(CloudId::edge(0), 0);
        let mut p = SlotPlacement::empty(&topology(), 2);
        p.place(0, 0, ec, &loads);
        p.place(0, 1, ec, &loads);
        assert!((p.loads[1][0] - 1.2).abs() < 1e-12);

        let to = p.move_first_fit(0, ec, CloudId::CENTRAL, 1.0, &loads);
        assert_eq!(to, Some(DuRef::new(CloudId::CENTRAL, 0)));
        assert_eq!(p.cc_count(0), 1);
        assert_eq!(p.hosts[0][0], DuRef::new(CloudId::CENTRAL, 0));

        let before = p.clone();
        assert_eq!(p.move_first_fit(0, ec, CloudId::CENTRAL, 1.0, &loads), None);
        assert_eq!(p, before);
    }

    #[test]
    fn last_detach_clears_the_flag() {
        let loads = [0.3, 0.3];
        let du = DuRef::new(CloudId::edge(0), 1);
        let mut p = SlotPlacement::empty(&topology(), 1);
        p.place(0, 0, du, &loads);
        p.place(1, 0, du, &loads);
        assert_eq!(p.users_on(du), vec![0, 1]);
        p.detach(0, du, &loads);
        assert!(p.active[1][1]);
        p.detach(1, du, &loads);
        assert!(!p.active[1][1]);
        assert_eq!(p.total_active(), 0);
        assert_eq!(p.loads[1][1], 0.0);
    }
}
