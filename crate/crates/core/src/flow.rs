//! Dinic max-flow over exact integer capacities.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use num_traits::Zero;

pub trait Capacity: Clone + Ord + Zero + Add<Output = Self> + Sub<Output = Self> {}
impl<T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T>> Capacity for T {}

#[derive(Clone, Debug)]
struct Arc<C> {
    to: usize,
    cap: C,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork<C> {
    arcs: Vec<Arc<C>>,
    original: Vec<C>,
    adj: Vec<Vec<usize>>,
}

impl<C: Capacity> FlowNetwork<C> {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { arcs: Vec::new(), original: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    /// Adds `u -> v` and returns its arc id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: C) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap: cap.clone() });
        self.original.push(cap);
        self.arcs.push(Arc { to: u, cap: C::zero() });
        self.original.push(C::zero());
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently carried by arc `id`.
    pub fn flow(&self, id: usize) -> C {
        self.original[id].clone() - self.arcs[id].cap.clone()
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> C {
        let mut total = C::zero();
        let n = self.adj.len();
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; n];
            loop {
                let pushed = self.augment(s, t, None, &level, &mut next);
                if pushed.is_zero() {
                    break;
                }
                total = total + pushed;
            }
        }
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &id in &self.adj[u] {
                let a = &self.arcs[id];
                if !a.cap.is_zero() && level[a.to] == usize::MAX {
                    level[a.to] = level[u] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, limit: Option<C>, level: &[usize], next: &mut [usize]) -> C {
        if u == t {
            return limit.expect("sink reached with a bounded path");
        }
        while next[u] < self.adj[u].len() {
            let id = self.adj[u][next[u]];
            let (to, cap) = (self.arcs[id].to, self.arcs[id].cap.clone());
            if !cap.is_zero() && level[to] == level[u] + 1 {
                let bound = match &limit {
                    Some(l) if *l < cap => l.clone(),
                    _ => cap,
                };
                let pushed = self.augment(to, t, Some(bound), level, next);
                if !pushed.is_zero() {
                    self.arcs[id].cap = self.arcs[id].cap.clone() - pushed.clone();
                    self.arcs[id ^ 1].cap = self.arcs[id ^ 1].cap.clone() + pushed.clone();
                    return pushed;
                }
            }
            next[u] += 1;
        }
        C::zero()
    }

    /// Nodes reachable from `s` in the residual network.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        self.levels(s).into_iter().map(|l| l != usize::MAX).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_network() {
        let mut g = FlowNetwork::<i64>::new(4);
        g.add_arc(0, 1, 3);
        g.add_arc(0, 2, 2);
        g.add_arc(1, 2, 1);
        g.add_arc(1, 3, 2);
        g.add_arc(2, 3, 3);
        assert_eq!(g.max_flow(0, 3), 5);
        let reach = g.residual_reachable(0);
        assert!(reach[0] && !reach[3]);
    }

    #[test]
    fn bigint_capacities() {
        let mut g = FlowNetwork::<num_bigint::BigInt>::new(3);
        let a = g.add_arc(0, 1, 7.into());
        g.add_arc(1, 2, 5.into());
        assert_eq!(g.max_flow(0, 2), 5.into());
        assert_eq!(g.flow(a), 5.into());
    }
}
