//! Linearization of memory graphs into value terms with `let` and `fix`.
//!
//! Every node that is reached from two places gets a `let`, placed at the
//! closest common ancestor of its references in the term. A strongly
//! connected component becomes a `fix` over its entry nodes (those referenced
//! from outside the component, or the root); the rest of the component is
//! decomposed again, so inner cycles become nested `fix` terms. A component
//! with several entries that is referenced more than once is bound by one
//! `let` with several binders.

use crate::graph::{Node, NodeId, RawGraph, SccScratch};
use crate::value::ValueTerm;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Item {
    Single(NodeId),
    Fix(usize),
}

struct Fix {
    roots: Vec<NodeId>,
    /// Region holding the non-entry nodes of the component.
    inner: u32,
}

/// Shape of a linearized term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Layout {
    pub lets: usize,
    pub fixes: usize,
    /// Largest number of `fix` terms enclosing one another.
    pub max_fix_depth: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub blocks: usize,
    /// Nodes referenced by two or more edges.
    pub shared_nodes: usize,
    /// Strongly connected components with a cycle.
    pub scc_count: usize,
    pub max_fix_depth: usize,
}

pub fn graph_stats(g: &RawGraph) -> GraphStats {
    let (_, layout) = linearize_with_layout(g);
    let cyclic = g
        .tarjan_scc()
        .iter()
        .filter(|c| c.len() > 1 || g.children(c[0]).contains(&c[0]))
        .count();
    GraphStats {
        nodes: g.len(),
        blocks: g.nodes().iter().filter(|n| matches!(n, Node::Block { .. })).count(),
        shared_nodes: g.in_degrees().iter().filter(|&&d| d >= 2).count(),
        scc_count: cyclic,
        max_fix_depth: layout.max_fix_depth,
    }
}

pub fn linearize(g: &RawGraph) -> ValueTerm {
    linearize_with_layout(g).0
}

struct Linearizer<'g> {
    g: &'g RawGraph,
    pred_start: Vec<u32>,
    preds: Vec<u32>,
    /// Innermost region of each node; region 0 is the whole graph.
    region_of: Vec<u32>,
    region_parent: Vec<u32>,
    fixes: Vec<Fix>,
    root_of: Vec<u32>,
    // units: one per node, then one per fix
    parent: Vec<u32>,
    depth: Vec<u32>,
    fix_depth: Vec<u32>,
    hosted: Vec<Vec<(u32, Item)>>,
    shared_name: Vec<u32>,
    rec_name: Vec<u32>,
    next_seq: u32,
    next_p: u32,
    next_r: u32,
}

impl<'g> Linearizer<'g> {
    fn new(g: &'g RawGraph) -> Self {
        let n = g.len();
        let mut pred_start = vec![0u32; n + 1];
        for node in g.nodes() {
            for &c in node.children() {
                pred_start[c + 1] += 1;
            }
        }
        for i in 0..n {
            pred_start[i + 1] += pred_start[i];
        }
        let mut fill = pred_start.clone();
        let mut preds = vec![0u32; pred_start[n] as usize];
        for (u, node) in g.nodes().iter().enumerate() {
            for &c in node.children() {
                preds[fill[c] as usize] = u as u32;
                fill[c] += 1;
            }
        }
        Linearizer {
            g,
            pred_start,
            preds,
            region_of: vec![0; n],
            region_parent: vec![NONE],
            fixes: Vec::new(),
            root_of: vec![NONE; n],
            parent: vec![NONE; n],
            depth: vec![0; n],
            fix_depth: vec![0; n],
            hosted: vec![Vec::new(); n],
            shared_name: vec![NONE; n],
            rec_name: vec![NONE; n],
            next_seq: 0,
            next_p: 0,
            next_r: 0,
        }
    }

    fn preds(&self, x: NodeId) -> &[u32] {
        &self.preds[self.pred_start[x] as usize..self.pred_start[x + 1] as usize]
    }

    fn unit(&self, item: Item) -> usize {
        match item {
            Item::Single(x) => x,
            Item::Fix(f) => self.g.len() + f,
        }
    }

    fn binders(&self, item: Item) -> Vec<String> {
        let p = |x: &NodeId| format!("p{}", self.shared_name[*x]);
        match item {
            Item::Single(x) => vec![p(&x)],
            Item::Fix(f) => self.fixes[f].roots.iter().map(p).collect(),
        }
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a] as usize;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b] as usize;
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
        }
        a
    }

    fn attach(&mut self, unit: usize, parent: u32) {
        if parent == NONE {
            self.parent[unit] = NONE;
            self.depth[unit] = 0;
            self.fix_depth[unit] = 0;
        } else {
            let p = parent as usize;
            self.parent[unit] = parent;
            self.depth[unit] = self.depth[p] + 1;
            self.fix_depth[unit] = self.fix_depth[p];
        }
        if unit >= self.g.len() {
            self.fix_depth[unit] += 1;
        }
    }

    /// Places an item given the nodes referencing it from outside (`NONE`
    /// stands for the root reference).
    fn place(&mut self, item: Item, roots: &[NodeId], sites: &[u32]) {
        let unit = self.unit(item);
        if sites == [NONE] {
            self.attach(unit, NONE);
        } else if sites.len() == 1 && roots.len() == 1 {
            self.attach(unit, sites[0]);
        } else {
            debug_assert!(!sites.contains(&NONE));
            let mut host = sites[0] as usize;
            for &s in &sites[1..] {
                host = self.lca(host, s as usize);
            }
            self.hosted[host].push((self.next_seq, item));
            for &r in roots {
                self.shared_name[r] = self.next_p;
                self.next_p += 1;
            }
            self.attach(unit, host as u32);
        }
        self.next_seq += 1;
    }

    fn single_sites(&self, x: NodeId) -> Vec<u32> {
        let mut sites = self.preds(x).to_vec();
        if x == self.g.root() {
            sites.push(NONE);
        }
        sites
    }

    /// Is `u` one of the nodes of fix `f`'s component?
    fn in_fix(&self, u: NodeId, f: usize) -> bool {
        if self.root_of[u] == f as u32 {
            return true;
        }
        let target = self.fixes[f].inner;
        if target == NONE {
            return false;
        }
        let mut r = self.region_of[u];
        while r != NONE {
            if r == target {
                return true;
            }
            r = self.region_parent[r as usize];
        }
        false
    }

    fn layout(&mut self) {
        let g = self.g;
        let mut scratch = SccScratch::new(g.len());
        let mut stamp = vec![NONE; g.len()];
        let mut top = scratch.run(g, &[g.root()], |_| true);
        top.reverse();
        let mut frames: Vec<(Vec<Vec<NodeId>>, usize)> = vec![(top, 0)];
        let mut scc_id = 0u32;
        while let Some(frame) = frames.last_mut() {
            if frame.1 == frame.0.len() {
                frames.pop();
                continue;
            }
            let comp = std::mem::take(&mut frame.0[frame.1]);
            frame.1 += 1;
            if comp.len() == 1 && !g.children(comp[0]).contains(&comp[0]) {
                let x = comp[0];
                let sites = self.single_sites(x);
                self.place(Item::Single(x), &[x], &sites);
                continue;
            }
            scc_id += 1;
            for &x in &comp {
                stamp[x] = scc_id;
            }
            let mut roots = Vec::new();
            let mut sites = Vec::new();
            for &x in &comp {
                let before = sites.len();
                sites.extend(self.preds(x).iter().copied().filter(|&u| stamp[u as usize] != scc_id));
                if x == g.root() {
                    sites.push(NONE);
                }
                if sites.len() > before {
                    roots.push(x);
                }
            }
            let f = self.fixes.len();
            let region = self.region_parent.len() as u32;
            for &r in &roots {
                self.root_of[r] = f as u32;
            }
            let inner: Vec<NodeId> = comp.iter().copied().filter(|&x| self.root_of[x] != f as u32).collect();
            self.fixes.push(Fix { roots: roots.clone(), inner: if inner.is_empty() { NONE } else { region } });
            self.parent.push(NONE);
            self.depth.push(0);
            self.fix_depth.push(0);
            self.hosted.push(Vec::new());
            self.place(Item::Fix(f), &roots, &sites);
            let fix_unit = self.unit(Item::Fix(f));
            for &r in &roots {
                self.rec_name[r] = self.next_r;
                self.next_r += 1;
                self.attach(r, fix_unit as u32);
            }
            if !inner.is_empty() {
                let outer = self.region_of[inner[0]];
                self.region_parent.push(outer);
                for &y in &inner {
                    self.region_of[y] = region;
                }
                let region_of = &self.region_of;
                let mut sccs = scratch.run(g, &inner, |w| region_of[w] == region);
                sccs.reverse();
                frames.push((sccs, 0));
            }
        }
        for lets in &mut self.hosted {
            // later-placed items are referenced by earlier ones, so they go outside
            lets.sort_by_key(|l| std::cmp::Reverse(l.0));
        }
    }
}

enum Task {
    Unit(usize),
    Lets(usize, usize),
    Core(usize),
    Ref(NodeId, NodeId),
    Block(u32, usize),
    Tuple(usize),
    Let(Item),
    Fix(usize),
}

impl Linearizer<'_> {
    fn build(&self) -> ValueTerm {
        let n = self.g.len();
        let mut out: Vec<ValueTerm> = Vec::new();
        let root_unit = if self.root_of[self.g.root()] == NONE {
            self.g.root()
        } else {
            n + self.root_of[self.g.root()] as usize
        };
        let mut stack = vec![Task::Unit(root_unit)];
        while let Some(task) = stack.pop() {
            match task {
                Task::Unit(u) => {
                    if u >= n {
                        stack.push(Task::Fix(u - n));
                    }
                    stack.push(Task::Lets(u, 0));
                }
                Task::Lets(u, i) => match self.hosted[u].get(i) {
                    None => stack.push(Task::Core(u)),
                    Some(&(_, item)) => {
                        stack.push(Task::Let(item));
                        stack.push(Task::Lets(u, i + 1));
                        stack.push(Task::Unit(self.unit(item)));
                    }
                },
                Task::Core(u) if u >= n => {
                    let roots = &self.fixes[u - n].roots;
                    if roots.len() > 1 {
                        stack.push(Task::Tuple(roots.len()));
                    }
                    stack.extend(roots.iter().rev().map(|&r| Task::Unit(r)));
                }
                Task::Core(x) => match self.g.node(x) {
                    Node::Int(v) => out.push(ValueTerm::Int(*v)),
                    Node::Block { mark, children } => {
                        stack.push(Task::Block(*mark, children.len()));
                        stack.extend(children.iter().rev().map(|&c| Task::Ref(x, c)));
                    }
                },
                Task::Ref(u, c) => {
                    let f = self.root_of[c];
                    if f != NONE && self.in_fix(u, f as usize) {
                        out.push(ValueTerm::Rec(format!("r{}", self.rec_name[c])));
                    } else if self.shared_name[c] != NONE {
                        out.push(ValueTerm::Shared(format!("p{}", self.shared_name[c])));
                    } else if f != NONE {
                        stack.push(Task::Unit(n + f as usize));
                    } else {
                        stack.push(Task::Unit(c));
                    }
                }
                Task::Block(mark, k) => {
                    let fields = out.split_off(out.len() - k);
                    out.push(ValueTerm::Block { mark, fields });
                }
                Task::Tuple(k) => {
                    let fields = out.split_off(out.len() - k);
                    out.push(ValueTerm::Block { mark: 0, fields });
                }
                Task::Let(item) => {
                    let body = out.pop().expect("let body");
                    let bound = out.pop().expect("let bound");
                    out.push(ValueTerm::Let { binders: self.binders(item), bound: Box::new(bound), body: Box::new(body) });
                }
                Task::Fix(f) => {
                    let body = out.pop().expect("fix body");
                    let binders = self.fixes[f].roots.iter().map(|r| format!("r{}", self.rec_name[*r])).collect();
                    out.push(ValueTerm::Fix { binders, body: Box::new(body) });
                }
            }
        }
        debug_assert_eq!(out.len(), 1);
        out.pop().expect("term")
    }
}

/// Linearizes `g` and reports the shape of the result. Binder names are
/// `p0, p1, ...` and `r0, r1, ...` in placement order, so equal graphs give
/// equal terms.
pub fn linearize_with_layout(g: &RawGraph) -> (ValueTerm, Layout) {
    let mut lin = Linearizer::new(g);
    lin.layout();
    let term = lin.build();
    let n = g.len();
    let layout = Layout {
        lets: lin.hosted.iter().map(Vec::len).sum(),
        fixes: lin.fixes.len(),
        max_fix_depth: lin.fix_depth[n..].iter().copied().max().unwrap_or(0) as usize,
    };
    (term, layout)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::graph::{delinearize, rooted_equal};
    use crate::oracles::generate::random_graph;

    fn block(mark: u32, children: Vec<NodeId>) -> Node {
        Node::Block { mark, children }
    }

    fn round_trip(g: &RawGraph) -> ValueTerm {
        let (t, layout) = linearize_with_layout(g);
        if let Err(e) = t.well_formed(true) {
            panic!("{e:?} in {t:?} for {g:?}");
        }
        let back = delinearize(&t).unwrap();
        assert!(rooted_equal(&back, g), "{g:?} -> {t:?} -> {back:?}");
        assert_eq!(layout.max_fix_depth, t.fix_depth());
        t
    }

    #[test]
    fn shared_leaf() {
        let g = RawGraph::new(vec![block(0, vec![1, 1]), Node::Int(1)], 0).unwrap();
        let expected = ValueTerm::let_in(
            &["p0"],
            ValueTerm::Int(1),
            ValueTerm::block(0, vec![ValueTerm::shared("p0"), ValueTerm::shared("p0")]),
        );
        assert_eq!(round_trip(&g), expected);
    }

    #[test]
    fn self_loop() {
        let g = RawGraph::new(vec![block(1, vec![0])], 0).unwrap();
        assert_eq!(round_trip(&g), ValueTerm::fix(&["r0"], ValueTerm::block(1, vec![ValueTerm::rec("r0")])));
    }

    #[test]
    fn tree_has_no_binders() {
        let g = RawGraph::new(vec![block(0, vec![1, 2]), block(2, vec![3]), Node::Int(4), Node::Int(5)], 0).unwrap();
        let t = round_trip(&g);
        let (_, layout) = linearize_with_layout(&g);
        assert_eq!((layout.lets, layout.fixes), (0, 0));
        assert_eq!(t.block_count(), 2);
    }

    #[test]
    fn two_entry_cycle_shared_twice() {
        // root = (a, b, a), a = A(b), b = B(a): one fix with two entries, bound by one let
        let g = RawGraph::new(vec![block(0, vec![1, 2, 1]), block(1, vec![2]), block(2, vec![1])], 0).unwrap();
        let t = round_trip(&g);
        match &t {
            ValueTerm::Let { binders, bound, .. } => {
                assert_eq!(binders.len(), 2);
                assert!(matches!(**bound, ValueTerm::Fix { ref binders, .. } if binders.len() == 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_cycle() {
        // 0 -> 1 -> 2 -> 1 (inner loop), 2 -> 0 (outer loop)
        let g = RawGraph::new(vec![block(1, vec![1]), block(1, vec![2]), block(0, vec![1, 0])], 0).unwrap();
        let (_, layout) = linearize_with_layout(&g);
        round_trip(&g);
        assert_eq!(layout.max_fix_depth, 2);
    }

    #[test]
    fn random_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..2000 {
            let g = random_graph(&mut rng, 1 + i % 60, i % 3 != 0);
            round_trip(&g);
        }
    }

    #[test]
    fn acyclic_graphs_get_no_fix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let g = random_graph(&mut rng, 40, false);
            assert_eq!(linearize_with_layout(&g).1.fixes, 0);
        }
    }

    #[test]
    fn deterministic_names() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(&mut rng, 80, true);
        assert_eq!(linearize(&g), linearize(&g.clone()));
    }

    #[test]
    fn long_chain_does_not_overflow() {
        let n = 200_000;
        let mut nodes: Vec<Node> = (0..n - 1).map(|i| block(1, vec![i + 1])).collect();
        nodes.push(block(2, vec![0]));
        let g = RawGraph::new(nodes, 0).unwrap();
        let t = linearize(&g);
        assert!(rooted_equal(&delinearize(&t).unwrap(), &g));
    }
}
