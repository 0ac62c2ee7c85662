//! Integer min-cost flow by successive shortest augmenting paths.
//!
//! Shortest paths use Bellman-Ford (queue-based), so negative arc costs are
//! fine as long as the network has no negative cycle.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: i64,
}

/// Handle to an arc added with [`MinCostFlow::add_arc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcId {
    from: usize,
    idx: usize,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    graph: Vec<Vec<Arc>>,
    initial: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowResult {
    pub flow: i64,
    pub cost: i64,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
            initial: vec![Vec::new(); nodes],
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> ArcId {
        assert!(cap >= 0, "arc capacity must be nonnegative");
        let idx = self.graph[from].len();
        let rev = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc { to, rev, cap, cost });
        self.initial[from].push(cap);
        self.graph[to].push(Arc {
            to: from,
            rev: idx,
            cap: 0,
            cost: -cost,
        });
        self.initial[to].push(0);
        ArcId { from, idx }
    }

    /// Flow currently routed through `arc`.
    pub fn flow(&self, arc: ArcId) -> i64 {
        self.initial[arc.from][arc.idx] - self.graph[arc.from][arc.idx].cap
    }

    fn shortest_path(&self, source: usize) -> (Vec<i64>, Vec<Option<(usize, usize)>>) {
        let n = self.graph.len();
        let mut dist = vec![i64::MAX; n];
        let mut prev = vec![None; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        queued[source] = true;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for (k, arc) in self.graph[u].iter().enumerate() {
                if arc.cap == 0 {
                    continue;
                }
                let nd = dist[u] + arc.cost;
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    prev[arc.to] = Some((u, k));
                    if !queued[arc.to] {
                        queued[arc.to] = true;
                        queue.push_back(arc.to);
                    }
                }
            }
        }
        (dist, prev)
    }

    /// Augment along cheapest paths while they have negative cost, i.e.
    /// compute a minimum-cost flow of any value from `source` to `sink`.
    pub fn min_cost_any_flow(&mut self, source: usize, sink: usize) -> FlowResult {
        let mut total = FlowResult { flow: 0, cost: 0 };
        loop {
            let (dist, prev) = self.shortest_path(source);
            if dist[sink] == i64::MAX || dist[sink] >= 0 {
                return total;
            }
            let mut push = i64::MAX;
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                push = push.min(self.graph[u][k].cap);
                v = u;
            }
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                let rev = self.graph[u][k].rev;
                self.graph[u][k].cap -= push;
                self.graph[v][rev].cap += push;
                v = u;
            }
            total.flow += push;
            total.cost += push * dist[sink];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheapest_routes() {
        // s -> a -> t (cost -5, cap 2), s -> b -> t (cost -3, cap 4), s cap 5
        let mut g = MinCostFlow::new(5);
        let (s, src, a, b, t) = (0, 1, 2, 3, 4);
        g.add_arc(s, src, 5, 0);
        let sa = g.add_arc(src, a, 2, -5);
        let sb = g.add_arc(src, b, 4, -3);
        g.add_arc(a, t, 10, 0);
        g.add_arc(b, t, 10, 0);
        let r = g.min_cost_any_flow(s, t);
        assert_eq!(r, FlowResult { flow: 5, cost: -19 });
        assert_eq!(g.flow(sa), 2);
        assert_eq!(g.flow(sb), 3);
    }

    #[test]
    fn stops_at_nonnegative_paths() {
        let mut g = MinCostFlow::new(2);
        g.add_arc(0, 1, 3, 2);
        assert_eq!(g.min_cost_any_flow(0, 1), FlowResult { flow: 0, cost: 0 });
    }

    #[test]
    fn reroutes_through_residual_arcs() {
        // classic case where the second path cancels part of the first
        let mut g = MinCostFlow::new(4);
        g.add_arc(0, 1, 1, -1);
        g.add_arc(0, 2, 1, -1);
        g.add_arc(1, 2, 1, -1);
        g.add_arc(1, 3, 1, -1);
        g.add_arc(2, 3, 1, -1);
        let r = g.min_cost_any_flow(0, 3);
        assert_eq!(r.flow, 2);
        assert_eq!(r.cost, -4);
    }
}
