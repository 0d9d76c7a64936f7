//! Augmenting-path max-flow with reusable search trees.
//!
//! Two trees grow from the terminals; when they touch, the path is
//! augmented, and nodes whose tree link saturated are re-attached (adopted)
//! or freed. Trees persist between augmentations, which makes this fast on
//! grid graphs. Terminal links are stored as one signed residual per node:
//! positive is residual capacity from the source, negative to the sink.

use std::collections::VecDeque;

use super::CutProblem;

const NONE: usize = usize::MAX;
const TERMINAL: usize = usize::MAX - 1;
const ORPHAN: usize = usize::MAX - 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

/// Outcome of [`max_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlowResult {
    pub flow_value: f64,
    /// Per node: `true` when the node lies on the sink side of the minimum cut.
    pub sink_side: Vec<bool>,
    /// Capacity of the returned cut, evaluated on the original capacities.
    pub cut_capacity: f64,
    /// Whether an augmenting path remains in the final residual graph.
    /// Always false for a maximum flow.
    pub sink_reachable: bool,
}

struct Graph {
    first: Vec<usize>,
    head: Vec<usize>,
    next: Vec<usize>,
    r_cap: Vec<f64>,
    tr_cap: Vec<f64>,
    parent: Vec<usize>,
    tree: Vec<Tree>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    in_active: Vec<bool>,
    active: VecDeque<usize>,
    orphans: VecDeque<usize>,
    time: u64,
    flow: f64,
}

impl Graph {
    fn new(problem: &CutProblem) -> Self {
        let n = problem.node_count();
        let m = problem.arcs().len() * 2;
        let mut g = Graph {
            first: vec![NONE; n],
            head: Vec::with_capacity(m),
            next: Vec::with_capacity(m),
            r_cap: Vec::with_capacity(m),
            tr_cap: vec![0.0; n],
            parent: vec![NONE; n],
            tree: vec![Tree::Free; n],
            ts: vec![0; n],
            dist: vec![0; n],
            in_active: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow: 0.0,
        };
        for arc in problem.arcs() {
            g.push_arc(arc.from, arc.to, arc.cap);
            g.push_arc(arc.to, arc.from, arc.reverse_cap);
        }
        for (i, t) in problem.terminals().iter().enumerate() {
            // flow that goes straight source -> i -> sink
            g.flow += t.source.min(t.sink);
            g.tr_cap[i] = t.source - t.sink;
        }
        g
    }

    fn push_arc(&mut self, from: usize, to: usize, cap: f64) {
        let a = self.head.len();
        self.head.push(to);
        self.next.push(self.first[from]);
        self.r_cap.push(cap);
        self.first[from] = a;
    }

    #[inline]
    fn sister(a: usize) -> usize {
        a ^ 1
    }

    fn out_arcs(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let mut a = self.first[i];
        std::iter::from_fn(move || {
            (a != NONE).then(|| {
                let cur = a;
                a = self.next[cur];
                cur
            })
        })
    }

    fn set_active(&mut self, i: usize) {
        if !self.in_active[i] {
            self.in_active[i] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            self.in_active[i] = false;
            if self.parent[i] != NONE {
                return Some(i);
            }
        }
        None
    }

    fn init_trees(&mut self) {
        for i in 0..self.tr_cap.len() {
            if self.tr_cap[i] > 0.0 {
                self.tree[i] = Tree::Source;
            } else if self.tr_cap[i] < 0.0 {
                self.tree[i] = Tree::Sink;
            } else {
                continue;
            }
            self.parent[i] = TERMINAL;
            self.ts[i] = 0;
            self.dist[i] = 1;
            self.set_active(i);
        }
    }

    /// Grows the tree of `i`; returns an arc from the source tree into the
    /// sink tree if the trees meet.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let side = self.tree[i];
        let arcs: Vec<usize> = self.out_arcs(i).collect();
        for a in arcs {
            let residual = match side {
                Tree::Source => self.r_cap[a],
                _ => self.r_cap[Self::sister(a)],
            };
            if residual <= 0.0 {
                continue;
            }
            let j = self.head[a];
            if self.tree[j] == Tree::Free {
                self.tree[j] = side;
                self.parent[j] = Self::sister(a);
                self.ts[j] = self.ts[i];
                self.dist[j] = self.dist[i] + 1;
                self.set_active(j);
            } else if self.tree[j] != side {
                return Some(if side == Tree::Source { a } else { Self::sister(a) });
            } else if self.ts[j] <= self.ts[i] && self.dist[j] > self.dist[i] {
                // shorter route to the terminal through i
                self.parent[j] = Self::sister(a);
                self.ts[j] = self.ts[i];
                self.dist[j] = self.dist[i] + 1;
            }
        }
        None
    }

    fn augment(&mut self, middle: usize) {
        let mut bottleneck = self.r_cap[middle];

        // source side: tree arcs point from child to parent, flow runs parent -> child
        let mut i = self.head[Self::sister(middle)];
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[Self::sister(a)]);
            i = self.head[a];
        }
        bottleneck = bottleneck.min(self.tr_cap[i]);

        // sink side: flow runs child -> parent
        let mut i = self.head[middle];
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[a]);
            i = self.head[a];
        }
        bottleneck = bottleneck.min(-self.tr_cap[i]);

        self.r_cap[Self::sister(middle)] += bottleneck;
        self.r_cap[middle] -= bottleneck;

        let mut i = self.head[Self::sister(middle)];
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            self.r_cap[a] += bottleneck;
            self.r_cap[Self::sister(a)] -= bottleneck;
            if self.r_cap[Self::sister(a)] <= 0.0 {
                self.make_orphan(i);
            }
            i = self.head[a];
        }
        self.tr_cap[i] -= bottleneck;
        if self.tr_cap[i] <= 0.0 {
            self.make_orphan(i);
        }

        let mut i = self.head[middle];
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            self.r_cap[Self::sister(a)] += bottleneck;
            self.r_cap[a] -= bottleneck;
            if self.r_cap[a] <= 0.0 {
                self.make_orphan(i);
            }
            i = self.head[a];
        }
        self.tr_cap[i] += bottleneck;
        if self.tr_cap[i] >= 0.0 {
            self.make_orphan(i);
        }

        self.flow += bottleneck;
    }

    fn make_orphan(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_back(i);
    }

    /// Residual capacity along the tree direction for a candidate link
    /// `i -> head(a)` of a node in tree `side`.
    #[inline]
    fn link_residual(&self, side: Tree, a: usize) -> f64 {
        match side {
            Tree::Source => self.r_cap[Self::sister(a)],
            _ => self.r_cap[a],
        }
    }

    fn adopt(&mut self, i: usize) {
        let side = self.tree[i];
        let mut best: Option<(usize, u32)> = None;
        let arcs: Vec<usize> = self.out_arcs(i).collect();
        for &a in &arcs {
            if self.link_residual(side, a) <= 0.0 {
                continue;
            }
            let mut j = self.head[a];
            if self.tree[j] != side || self.parent[j] == NONE {
                continue;
            }
            // walk to the root, stopping at nodes already validated this round
            let mut d: u32 = 0;
            let valid = loop {
                if self.ts[j] == self.time {
                    d += self.dist[j];
                    break true;
                }
                let p = self.parent[j];
                d += 1;
                if p == TERMINAL {
                    self.ts[j] = self.time;
                    self.dist[j] = 1;
                    break true;
                }
                if p == ORPHAN {
                    break false;
                }
                j = self.head[p];
            };
            if !valid {
                continue;
            }
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((a, d));
            }
            let mut j = self.head[a];
            let mut dd = d;
            while self.ts[j] != self.time {
                self.ts[j] = self.time;
                self.dist[j] = dd;
                dd -= 1;
                j = self.head[self.parent[j]];
            }
        }

        if let Some((a, d)) = best {
            self.parent[i] = a;
            self.ts[i] = self.time;
            self.dist[i] = d + 1;
            return;
        }

        for &a in &arcs {
            let j = self.head[a];
            if self.tree[j] != side || self.parent[j] == NONE {
                continue;
            }
            // j could extend towards i again once i is free
            let towards_i = match side {
                Tree::Source => self.r_cap[Self::sister(a)] > 0.0,
                _ => self.r_cap[a] > 0.0,
            };
            if towards_i {
                self.set_active(j);
            }
            let p = self.parent[j];
            if p != TERMINAL && p != ORPHAN && self.head[p] == i {
                self.parent[j] = ORPHAN;
                self.orphans.push_front(j);
            }
        }
        self.tree[i] = Tree::Free;
        self.parent[i] = NONE;
    }

    fn run(&mut self) {
        self.init_trees();
        let mut current: Option<usize> = None;
        loop {
            let i = match current.take().filter(|&i| self.parent[i] != NONE) {
                Some(i) => i,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let Some(middle) = self.grow(i) else {
                continue;
            };
            // i may have more paths to offer
            current = Some(i);
            self.time += 1;
            self.augment(middle);
            while let Some(o) = self.orphans.pop_front() {
                self.adopt(o);
            }
        }
    }

    /// Nodes that can still push flow to the sink in the residual graph.
    fn sink_reaching(&self) -> Vec<bool> {
        let n = self.tr_cap.len();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.tr_cap[i] < 0.0).collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(j) = queue.pop_front() {
            for a in self.out_arcs(j) {
                let k = self.head[a];
                if !seen[k] && self.r_cap[Self::sister(a)] > 0.0 {
                    seen[k] = true;
                    queue.push_back(k);
                }
            }
        }
        seen
    }

    /// Whether some node with residual source capacity reaches the sink.
    fn augmenting_path_left(&self, sink_reaching: &[bool]) -> bool {
        let n = self.tr_cap.len();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.tr_cap[i] > 0.0).collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            if sink_reaching[i] {
                return true;
            }
            for a in self.out_arcs(i) {
                let j = self.head[a];
                if !seen[j] && self.r_cap[a] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        false
    }
}

/// Maximum source-to-sink flow and a minimum cut.
///
/// The sink side of the returned cut is the set of nodes that can still
/// reach the sink in the final residual graph, so among minimum cuts it has
/// the smallest sink set.
pub fn max_flow(problem: &CutProblem) -> MaxFlowResult {
    let mut g = Graph::new(problem);
    g.run();
    let sink_side = g.sink_reaching();
    let sink_reachable = g.augmenting_path_left(&sink_side);
    let cut_capacity = problem.cut_capacity(&sink_side);
    MaxFlowResult {
        flow_value: g.flow,
        sink_side,
        cut_capacity,
        sink_reachable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_cut::{CutArc, TerminalCaps};

    fn problem(terminals: Vec<(f64, f64)>, arcs: Vec<(usize, usize, f64, f64)>) -> CutProblem {
        CutProblem::new(
            terminals.into_iter().map(|(source, sink)| TerminalCaps { source, sink }).collect(),
            arcs.into_iter()
                .map(|(from, to, cap, reverse_cap)| CutArc { from, to, cap, reverse_cap })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_node() {
        let r = max_flow(&problem(vec![(2.0, 3.0)], vec![]));
        assert_eq!(r.flow_value, 2.0);
        // cutting the source link (2) is cheaper than the sink link (3)
        assert_eq!(r.sink_side, vec![true]);
        assert_eq!(r.cut_capacity, 2.0);
        assert!(!r.sink_reachable);
    }

    #[test]
    fn series_path_bottleneck() {
        // s -5-> 0 -2-> 1 -4-> 2 -7-> t
        let p = problem(
            vec![(5.0, 0.0), (0.0, 0.0), (0.0, 7.0)],
            vec![(0, 1, 2.0, 0.0), (1, 2, 4.0, 0.0)],
        );
        let r = max_flow(&p);
        assert_eq!(r.flow_value, 2.0);
        assert_eq!(r.sink_side, vec![false, true, true]);
        assert_eq!(r.cut_capacity, 2.0);
    }

    #[test]
    fn diamond_with_cross_arc() {
        // classic example with max flow 23 on the CLRS network, expressed with terminal links
        // s->v1 16, s->v2 13, v1->v3 12, v2->v1 4, v2->v4 14, v3->v2 9, v3->t 20, v4->v3 7, v4->t 4
        let p = problem(
            vec![(16.0, 0.0), (13.0, 0.0), (0.0, 20.0), (0.0, 4.0)],
            vec![(0, 2, 12.0, 0.0), (1, 0, 4.0, 0.0), (1, 3, 14.0, 0.0), (2, 1, 9.0, 0.0), (3, 2, 7.0, 0.0)],
        );
        let r = max_flow(&p);
        assert_eq!(r.flow_value, 23.0);
        assert_eq!(r.cut_capacity, 23.0);
    }

    #[test]
    fn no_terminals_no_flow() {
        let p = problem(vec![(0.0, 0.0), (0.0, 0.0)], vec![(0, 1, 3.0, 3.0)]);
        let r = max_flow(&p);
        assert_eq!(r.flow_value, 0.0);
        assert_eq!(r.cut_capacity, 0.0);
    }
}
