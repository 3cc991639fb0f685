//! Min-cost flow by successive shortest paths with node potentials.
//!
//! All arc costs must be nonnegative, so the potentials start at zero. Each
//! phase runs Dijkstra on reduced costs, folds the distances into the
//! potentials, then pushes a blocking flow along the zero-reduced-cost arcs.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

pub type Cost = i64;
pub type Cap = i64;

const INF: Cost = Cost::MAX / 4;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: Cap,
    cost: Cost,
}

#[derive(Clone, Debug, Default)]
pub struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    // original capacity of each forward arc, indexed by arc id / 2
    orig: Vec<Cap>,
    // kept across calls so that a later `run` resumes from a valid state
    pot: Vec<Cost>,
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            arcs: Vec::new(),
            orig: Vec::new(),
            pot: vec![0; n],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds `u -> v` and returns its id.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: Cap, cost: Cost) -> usize {
        assert!(cost >= 0, "arc costs must be nonnegative");
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap, cost });
        self.arcs.push(Arc {
            to: u,
            cap: 0,
            cost: -cost,
        });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        self.orig.push(cap);
        id / 2
    }

    /// Flow currently on edge `e`.
    pub fn flow_on(&self, e: usize) -> Cap {
        self.orig[e] - self.arcs[2 * e].cap
    }

    /// Sends up to `limit` units from `s` to `t` at minimum cost.
    /// Returns `(flow, cost)`.
    pub fn run(&mut self, s: usize, t: usize, limit: Cap) -> (Cap, Cost) {
        let n = self.num_nodes();
        let mut pot = std::mem::take(&mut self.pot);
        let mut dist = vec![INF; n];
        let mut level = vec![usize::MAX; n];
        let mut iter = vec![0usize; n];
        let mut flow = 0;
        let mut cost = 0;

        while flow < limit {
            self.dijkstra(s, &pot, &mut dist);
            if dist[t] >= INF {
                break;
            }
            let dt = dist[t];
            for v in 0..n {
                pot[v] += dist[v].min(dt);
            }
            // blocking flows on the tight subgraph
            loop {
                if !self.levels(s, t, &pot, &mut level) {
                    break;
                }
                iter.iter_mut().for_each(|x| *x = 0);
                let mut pushed_any = false;
                while flow < limit {
                    let f = self.augment(s, t, limit - flow, &pot, &level, &mut iter);
                    if f == 0 {
                        break;
                    }
                    pushed_any = true;
                    flow += f;
                    cost += f * (pot[t] - pot[s]);
                }
                if !pushed_any || flow >= limit {
                    break;
                }
            }
        }
        self.pot = pot;
        (flow, cost)
    }

    fn reduced(&self, u: usize, a: &Arc, pot: &[Cost]) -> Cost {
        a.cost + pot[u] - pot[a.to]
    }

    fn dijkstra(&self, s: usize, pot: &[Cost], dist: &mut [Cost]) {
        dist.iter_mut().for_each(|d| *d = INF);
        dist[s] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0, s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &id in &self.adj[u] {
                let a = &self.arcs[id];
                if a.cap <= 0 {
                    continue;
                }
                let rc = self.reduced(u, a, pot);
                debug_assert!(rc >= 0, "negative reduced cost");
                let nd = d + rc;
                if nd < dist[a.to] {
                    dist[a.to] = nd;
                    heap.push(Reverse((nd, a.to)));
                }
            }
        }
    }

    fn tight(&self, u: usize, id: usize, pot: &[Cost]) -> bool {
        let a = &self.arcs[id];
        a.cap > 0 && self.reduced(u, a, pot) == 0
    }

    fn levels(&self, s: usize, t: usize, pot: &[Cost], level: &mut [usize]) -> bool {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &id in &self.adj[u] {
                let v = self.arcs[id].to;
                if level[v] == usize::MAX && self.tight(u, id, pot) {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level[t] != usize::MAX
    }

    /// One augmenting path on the level graph, iterative DFS.
    fn augment(
        &mut self,
        s: usize,
        t: usize,
        limit: Cap,
        pot: &[Cost],
        level: &[usize],
        iter: &mut [usize],
    ) -> Cap {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let f = path
                    .iter()
                    .map(|&id| self.arcs[id].cap)
                    .min()
                    .unwrap_or(0)
                    .min(limit);
                for &id in &path {
                    self.arcs[id].cap -= f;
                    self.arcs[id ^ 1].cap += f;
                }
                return f;
            }
            let mut advanced = false;
            while iter[u] < self.adj[u].len() {
                let id = self.adj[u][iter[u]];
                let v = self.arcs[id].to;
                if level[v] == level[u] + 1 && self.tight(u, id, pot) {
                    path.push(id);
                    u = v;
                    advanced = true;
                    break;
                }
                iter[u] += 1;
            }
            if !advanced {
                // dead end: retreat
                match path.pop() {
                    None => return 0,
                    Some(id) => {
                        u = self.arcs[id ^ 1].to;
                        iter[u] += 1;
                    }
                }
            }
        }
    }
}
