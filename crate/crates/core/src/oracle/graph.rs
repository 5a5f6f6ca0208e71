//! Explicit directed graph of a small box, searched edge by edge.
//!
//! Edge `i` is the `i`-th entry of [`Rect::edges`]; a configuration is a bit
//! mask over those indices. Nothing here uses the bit-parallel sweep.

use std::collections::HashMap;
use std::collections::VecDeque;

use crate::lattice::{Dir, OrientedEdge, Rect, Site};
use crate::sweep::Path;

#[derive(Debug, Clone)]
pub struct BoxGraph {
    rect: Rect,
    edges: Vec<OrientedEdge>,
    sites: Vec<Site>,
    id: HashMap<Site, usize>,
    /// `(edge index, target site id)` for each site.
    out: Vec<Vec<(usize, usize)>>,
}

impl BoxGraph {
    pub fn new(rect: Rect) -> BoxGraph {
        let sites: Vec<Site> = rect.sites().collect();
        let id: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let edges = rect.edges();
        let mut out = vec![Vec::new(); sites.len()];
        for (i, e) in edges.iter().enumerate() {
            out[id[&e.from]].push((i, id[&e.target()]));
        }
        BoxGraph {
            rect,
            edges,
            sites,
            id,
            out,
        }
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn edges(&self) -> &[OrientedEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn edge_index(&self, from: Site, dir: Dir) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| e.from == from && e.dir == dir)
    }

    /// Breadth-first search from `sources` through open edges; one flag per site.
    pub fn reachable(&self, open: u64, sources: impl IntoIterator<Item = Site>) -> Vec<bool> {
        let mut seen = vec![false; self.sites.len()];
        let mut queue = VecDeque::new();
        for s in sources {
            if let Some(&i) = self.id.get(&s) {
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        while let Some(i) = queue.pop_front() {
            for &(e, t) in &self.out[i] {
                if (open >> e) & 1 == 1 && !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Reached sites, in row-major order.
    pub fn reached_sites(&self, open: u64, sources: impl IntoIterator<Item = Site>) -> Vec<Site> {
        self.reachable(open, sources)
            .iter()
            .zip(&self.sites)
            .filter_map(|(&r, s)| r.then_some(*s))
            .collect()
    }

    fn column(&self, x: i64) -> impl Iterator<Item = Site> + '_ {
        self.sites.iter().copied().filter(move |s| s.x() == x)
    }

    fn row(&self, y: i64) -> impl Iterator<Item = Site> + '_ {
        self.sites.iter().copied().filter(move |s| s.y() == y)
    }

    pub fn vertical_crossing(&self, open: u64) -> bool {
        let seen = self.reachable(open, self.row(self.rect.y_min));
        self.sites
            .iter()
            .zip(seen)
            .any(|(s, r)| r && s.y() == self.rect.y_max)
    }

    pub fn lr_crossing(&self, open: u64) -> bool {
        let seen = self.reachable(open, self.column(self.rect.x_min));
        self.sites
            .iter()
            .zip(seen)
            .any(|(s, r)| r && s.x() == self.rect.x_max)
    }

    pub fn rl_crossing(&self, open: u64) -> bool {
        let seen = self.reachable(open, self.column(self.rect.x_max));
        self.sites
            .iter()
            .zip(seen)
            .any(|(s, r)| r && s.x() == self.rect.x_min)
    }

    /// `from` reaches row `y` inside the box.
    pub fn reaches_row(&self, open: u64, from: Site, y: i64) -> bool {
        let seen = self.reachable(open, [from]);
        self.sites.iter().zip(seen).any(|(s, r)| r && s.y() == y)
    }

    /// Every open left-right crossing: from the left column to the right
    /// column, meeting the right column only at its last site.
    pub fn lr_crossings(&self, open: u64) -> Vec<Path> {
        let mut out = Vec::new();
        let mut stack: Vec<Site> = Vec::new();
        for s in self.column(self.rect.x_min).collect::<Vec<_>>() {
            stack.clear();
            stack.push(s);
            self.extend(open, &mut stack, &mut out);
        }
        out
    }

    fn extend(&self, open: u64, stack: &mut Vec<Site>, out: &mut Vec<Path>) {
        let s = *stack.last().unwrap();
        if s.x() == self.rect.x_max {
            out.push(Path::new(stack.clone()).expect("stack holds a path"));
            return;
        }
        for &(e, t) in &self.out[self.id[&s]] {
            if (open >> e) & 1 == 1 {
                stack.push(self.sites[t]);
                self.extend(open, stack, out);
                stack.pop();
            }
        }
    }
}
