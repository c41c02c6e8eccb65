//! Rooted memory graphs of decoded values.

use std::collections::HashMap;

use thiserror::Error;

use crate::types::{Name, VarKind};
use crate::value::ValueTerm;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Int(i64),
    /// Mark 0 with at least two children is a tuple; marks >= 1 have exactly
    /// one child.
    Block { mark: u32, children: Vec<NodeId> },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Int(_) => &[],
            Node::Block { children, .. } => children,
        }
    }
}

pub(crate) fn arity_ok(mark: u32, arity: usize) -> bool {
    if mark == 0 {
        arity >= 2
    } else {
        arity == 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("root {0} is out of range")]
    RootOutOfRange(NodeId),
    #[error("node {node} refers to missing node {child}")]
    DanglingChild { node: NodeId, child: NodeId },
    #[error("node {0} is not reachable from the root")]
    Unreachable(NodeId),
    #[error("node {node}: block with mark {mark} cannot have {arity} field(s)")]
    BadArity { node: NodeId, mark: u32, arity: usize },
    #[error("variable `{0}` is not bound")]
    UnboundVariable(Name),
    #[error("a fix binder denotes itself without passing through a block")]
    IllFoundedFix,
    #[error("cannot split a value into {expected} components")]
    Destructure { expected: usize },
    #[error("empty binder list")]
    EmptyBinders,
}

/// A rooted directed graph of integer leaves and marked blocks. Every node
/// is reachable from the root; cycles are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawGraph {
    nodes: Vec<Node>,
    root: NodeId,
}

impl RawGraph {
    pub fn new(nodes: Vec<Node>, root: NodeId) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        if root >= nodes.len() {
            return Err(GraphError::RootOutOfRange(root));
        }
        for (id, node) in nodes.iter().enumerate() {
            if let Node::Block { mark, children } = node {
                if !arity_ok(*mark, children.len()) {
                    return Err(GraphError::BadArity { node: id, mark: *mark, arity: children.len() });
                }
                if let Some(&child) = children.iter().find(|&&c| c >= nodes.len()) {
                    return Err(GraphError::DanglingChild { node: id, child });
                }
            }
        }
        let g = RawGraph { nodes, root };
        let seen = g.reachable();
        if let Some(id) = seen.iter().position(|s| !s) {
            return Err(GraphError::Unreachable(id));
        }
        Ok(g)
    }

    /// Builds a graph whose invariants the caller has already established.
    pub(crate) fn from_valid(nodes: Vec<Node>, root: NodeId) -> Self {
        debug_assert!(RawGraph::new(nodes.clone(), root).is_ok());
        RawGraph { nodes, root }
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(n) = stack.pop() {
            for &c in self.nodes[n].children() {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        seen
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.nodes[id].children()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of references to each node, counting edge multiplicity.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for node in &self.nodes {
            for &c in node.children() {
                deg[c] += 1;
            }
        }
        deg
    }

    /// Strongly connected components, each listed after every component it
    /// points to.
    pub fn tarjan_scc(&self) -> Vec<Vec<NodeId>> {
        SccScratch::new(self.len()).run(self, &[self.root], |_| true)
    }
}

/// Reusable state for iterative Tarjan runs over sub-regions of one graph.
pub(crate) struct SccScratch {
    index: Vec<u32>,
    low: Vec<u32>,
    on_stack: Vec<bool>,
    touched: Vec<NodeId>,
}

const UNSEEN: u32 = u32::MAX;

impl SccScratch {
    pub fn new(n: usize) -> Self {
        SccScratch { index: vec![UNSEEN; n], low: vec![0; n], on_stack: vec![false; n], touched: Vec::new() }
    }

    /// Components of the subgraph induced by `in_region`, reachable from
    /// `starts`, in reverse topological order (sinks first). Nodes inside a
    /// component are in discovery order.
    pub fn run(&mut self, g: &RawGraph, starts: &[NodeId], in_region: impl Fn(NodeId) -> bool) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        let mut counter = 0u32;
        let mut stack: Vec<NodeId> = Vec::new();
        let mut call: Vec<(NodeId, usize)> = Vec::new();
        for &s in starts {
            if self.index[s] != UNSEEN {
                continue;
            }
            self.enter(s, &mut counter, &mut stack);
            call.push((s, 0));
            while let Some(frame) = call.last_mut() {
                let (v, i) = *frame;
                let children = g.children(v);
                if i < children.len() {
                    frame.1 += 1;
                    let w = children[i];
                    if !in_region(w) {
                        continue;
                    }
                    if self.index[w] == UNSEEN {
                        self.enter(w, &mut counter, &mut stack);
                        call.push((w, 0));
                    } else if self.on_stack[w] {
                        self.low[v] = self.low[v].min(self.index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        self.low[parent] = self.low[parent].min(self.low[v]);
                    }
                    if self.low[v] == self.index[v] {
                        let mut component = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            self.on_stack[w] = false;
                            component.push(w);
                            if w == v {
                                break;
                            }
                        }
                        component.reverse();
                        out.push(component);
                    }
                }
            }
        }
        for &t in &self.touched {
            self.index[t] = UNSEEN;
        }
        self.touched.clear();
        out
    }

    fn enter(&mut self, v: NodeId, counter: &mut u32, stack: &mut Vec<NodeId>) {
        self.index[v] = *counter;
        self.low[v] = *counter;
        *counter += 1;
        self.on_stack[v] = true;
        self.touched.push(v);
        stack.push(v);
    }
}

/// Ordered rooted isomorphism: a parallel walk from both roots must pair
/// blocks consistently (a bijection) with equal marks and arities. Integer
/// leaves are immediate values and compare by value, whether or not the
/// same leaf node is referenced twice.
pub fn rooted_equal(a: &RawGraph, b: &RawGraph) -> bool {
    const NONE: usize = usize::MAX;
    let mut fwd = vec![NONE; a.len()];
    let mut bwd = vec![NONE; b.len()];
    let mut stack = vec![(a.root, b.root)];
    while let Some((x, y)) = stack.pop() {
        match (a.node(x), b.node(y)) {
            (Node::Int(m), Node::Int(n)) => {
                if m != n {
                    return false;
                }
            }
            (Node::Block { mark: m, children: xs }, Node::Block { mark: n, children: ys }) => {
                if fwd[x] == y && bwd[y] == x {
                    continue;
                }
                if fwd[x] != NONE || bwd[y] != NONE || m != n || xs.len() != ys.len() {
                    return false;
                }
                fwd[x] = y;
                bwd[y] = x;
                stack.extend(xs.iter().copied().zip(ys.iter().copied()));
            }
            _ => return false,
        }
    }
    true
}

enum Slot {
    Int(i64),
    Block { mark: u32, children: Vec<usize> },
    /// A `fix` binder, resolved to the node it names once the body is built.
    Forward(Option<usize>),
}

/// Builds the memory graph of a closed value term: `let`-bound and
/// `fix`-bound variables become shared and back edges.
///
/// A `fix` with n >= 2 binders denotes the tuple of its roots; a `let` with
/// n >= 2 binders splits a tuple into its components. Helper tuple blocks
/// that end up unreferenced are dropped from the result.
pub fn delinearize(term: &ValueTerm) -> Result<RawGraph, GraphError> {
    enum Task<'a> {
        Eval(&'a ValueTerm),
        Block(u32, usize),
        LetBind(&'a [Name], &'a ValueTerm),
        Unbind(VarKind, &'a [Name]),
        FixClose(&'a [Name], Vec<usize>),
    }

    fn resolve(slots: &[Slot], mut id: usize) -> Option<usize> {
        for _ in 0..=slots.len() {
            match slots[id] {
                Slot::Forward(Some(next)) => id = next,
                Slot::Forward(None) => return None,
                _ => return Some(id),
            }
        }
        None
    }

    fn components(slots: &[Slot], id: usize, n: usize) -> Result<Vec<usize>, GraphError> {
        match resolve(slots, id).map(|i| &slots[i]) {
            Some(Slot::Block { mark: 0, children }) if children.len() == n => Ok(children.clone()),
            _ => Err(GraphError::Destructure { expected: n }),
        }
    }

    let mut slots: Vec<Slot> = Vec::new();
    let mut scope: HashMap<(VarKind, &Name), Vec<usize>> = HashMap::new();
    let mut out: Vec<usize> = Vec::new();
    let mut stack = vec![Task::Eval(term)];

    while let Some(task) = stack.pop() {
        match task {
            Task::Eval(t) => match t {
                ValueTerm::Int(n) => {
                    slots.push(Slot::Int(*n));
                    out.push(slots.len() - 1);
                }
                ValueTerm::Shared(x) | ValueTerm::Rec(x) => {
                    let kind = if matches!(t, ValueTerm::Shared(_)) { VarKind::Shared } else { VarKind::Recursive };
                    let id = scope
                        .get(&(kind, x))
                        .and_then(|s| s.last())
                        .ok_or_else(|| GraphError::UnboundVariable(x.clone()))?;
                    out.push(*id);
                }
                ValueTerm::Block { mark, fields } => {
                    if !arity_ok(*mark, fields.len()) {
                        return Err(GraphError::BadArity { node: slots.len(), mark: *mark, arity: fields.len() });
                    }
                    stack.push(Task::Block(*mark, fields.len()));
                    stack.extend(fields.iter().rev().map(Task::Eval));
                }
                ValueTerm::Let { binders, bound, body } => {
                    if binders.is_empty() {
                        return Err(GraphError::EmptyBinders);
                    }
                    stack.push(Task::LetBind(binders, body));
                    stack.push(Task::Eval(bound));
                }
                ValueTerm::Fix { binders, body } => {
                    if binders.is_empty() {
                        return Err(GraphError::EmptyBinders);
                    }
                    let mut holes = Vec::with_capacity(binders.len());
                    for r in binders {
                        slots.push(Slot::Forward(None));
                        holes.push(slots.len() - 1);
                        scope.entry((VarKind::Recursive, r)).or_default().push(slots.len() - 1);
                    }
                    stack.push(Task::FixClose(binders, holes));
                    stack.push(Task::Eval(body));
                }
            },
            Task::Block(mark, n) => {
                let children = out.split_off(out.len() - n);
                slots.push(Slot::Block { mark, children });
                out.push(slots.len() - 1);
            }
            Task::LetBind(binders, body) => {
                let bound = out.pop().expect("bound");
                let targets = if binders.len() == 1 { vec![bound] } else { components(&slots, bound, binders.len())? };
                for (p, id) in binders.iter().zip(targets) {
                    scope.entry((VarKind::Shared, p)).or_default().push(id);
                }
                stack.push(Task::Unbind(VarKind::Shared, binders));
                stack.push(Task::Eval(body));
            }
            Task::Unbind(kind, binders) => {
                for b in binders {
                    scope.get_mut(&(kind, b)).and_then(Vec::pop);
                }
            }
            Task::FixClose(binders, holes) => {
                for b in binders {
                    scope.get_mut(&(VarKind::Recursive, b)).and_then(Vec::pop);
                }
                let body = *out.last().expect("fix body");
                let targets = if holes.len() == 1 { vec![body] } else { components(&slots, body, holes.len())? };
                for (hole, target) in holes.into_iter().zip(targets) {
                    slots[hole] = Slot::Forward(Some(target));
                }
            }
        }
    }

    let root = out.pop().expect("root");
    let root = resolve(&slots, root).ok_or(GraphError::IllFoundedFix)?;

    // keep reachable real nodes, numbered in preorder from the root
    const NONE: usize = usize::MAX;
    let mut remap = vec![NONE; slots.len()];
    let mut order = Vec::new();
    let mut todo = vec![root];
    remap[root] = 0;
    order.push(root);
    while let Some(id) = todo.pop() {
        if let Slot::Block { children, .. } = &slots[id] {
            for &c in children.iter().rev() {
                let c = resolve(&slots, c).ok_or(GraphError::IllFoundedFix)?;
                if remap[c] == NONE {
                    remap[c] = order.len();
                    order.push(c);
                    todo.push(c);
                }
            }
        }
    }
    let mut nodes = Vec::with_capacity(order.len());
    for &id in &order {
        nodes.push(match &slots[id] {
            Slot::Int(n) => Node::Int(*n),
            Slot::Block { mark, children } => Node::Block {
                mark: *mark,
                children: children.iter().map(|&c| remap[resolve(&slots, c).expect("resolved above")]).collect(),
            },
            Slot::Forward(_) => unreachable!("forwards are resolved"),
        });
    }
    Ok(RawGraph::from_valid(nodes, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(mark: u32, children: Vec<NodeId>) -> Node {
        Node::Block { mark, children }
    }

    /// Mutual reachability by brute force.
    fn scc_oracle(g: &RawGraph) -> Vec<Vec<NodeId>> {
        let n = g.len();
        let mut reach = vec![vec![false; n]; n];
        for s in 0..n {
            let mut stack = vec![s];
            reach[s][s] = true;
            while let Some(v) = stack.pop() {
                for &c in g.children(v) {
                    if !reach[s][c] {
                        reach[s][c] = true;
                        stack.push(c);
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for v in 0..n {
            if seen[v] {
                continue;
            }
            let comp: Vec<_> = (0..n).filter(|&w| reach[v][w] && reach[w][v]).collect();
            for &w in &comp {
                seen[w] = true;
            }
            out.push(comp);
        }
        out
    }

    #[test]
    fn validation() {
        assert_eq!(RawGraph::new(vec![], 0), Err(GraphError::Empty));
        assert!(matches!(RawGraph::new(vec![block(0, vec![1, 1])], 0), Err(GraphError::DanglingChild { .. })));
        assert!(matches!(RawGraph::new(vec![block(1, vec![0, 0])], 0), Err(GraphError::BadArity { .. })));
        assert_eq!(RawGraph::new(vec![Node::Int(1), Node::Int(2)], 0), Err(GraphError::Unreachable(1)));
    }

    #[test]
    fn scc_examples() {
        let leaf = RawGraph::new(vec![Node::Int(1)], 0).unwrap();
        assert_eq!(leaf.tarjan_scc(), vec![vec![0]]);

        let cycle = RawGraph::new(vec![block(1, vec![1]), block(2, vec![0])], 0).unwrap();
        assert_eq!(cycle.tarjan_scc(), vec![vec![0, 1]]);

        // 0 -> 1, 0 -> 2, 1 -> 3, 2 -> 3
        let diamond =
            RawGraph::new(vec![block(0, vec![1, 2]), block(1, vec![3]), block(1, vec![3]), Node::Int(0)], 0).unwrap();
        let sccs = diamond.tarjan_scc();
        assert_eq!(sccs.len(), 4);
        let pos = |n| sccs.iter().position(|c| c.contains(&n)).unwrap();
        assert!(pos(3) < pos(1) && pos(3) < pos(2) && pos(1) < pos(0) && pos(2) < pos(0));
        let mut oracle = scc_oracle(&diamond);
        oracle.sort();
        let mut got = sccs.clone();
        got.sort();
        assert_eq!(got, oracle);
    }

    #[test]
    fn scc_matches_oracle_on_random_graphs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let g = crate::oracles::generate::random_graph(&mut rng, 50, true);
            let sccs = g.tarjan_scc();
            // sinks first: every edge leaving a component points to an earlier one
            let mut pos = vec![0; g.len()];
            for (i, c) in sccs.iter().enumerate() {
                for &v in c {
                    pos[v] = i;
                }
            }
            for v in 0..g.len() {
                assert!(g.children(v).iter().all(|&c| pos[c] <= pos[v]));
            }
            let mut got: Vec<Vec<NodeId>> = sccs
                .into_iter()
                .map(|mut c| {
                    c.sort();
                    c
                })
                .collect();
            got.sort();
            let mut oracle = scc_oracle(&g);
            oracle.sort();
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn rooted_equal_examples() {
        let self_loop = RawGraph::new(vec![block(1, vec![0])], 0).unwrap();
        assert!(rooted_equal(&self_loop, &self_loop));
        let unrolled = RawGraph::new(vec![block(1, vec![1]), block(1, vec![0])], 0).unwrap();
        assert!(!rooted_equal(&self_loop, &unrolled));
        let distinct_marks = RawGraph::new(vec![block(1, vec![1]), block(2, vec![0])], 0).unwrap();
        assert!(!rooted_equal(&self_loop, &distinct_marks));

        let a = RawGraph::new(vec![block(0, vec![1, 1]), block(1, vec![2]), Node::Int(3)], 0).unwrap();
        let b = RawGraph::new(vec![Node::Int(3), block(1, vec![0]), block(0, vec![1, 1])], 2).unwrap();
        assert!(rooted_equal(&a, &b));
        let unshared = RawGraph::new(
            vec![block(0, vec![1, 2]), block(1, vec![3]), block(1, vec![3]), Node::Int(3)],
            0,
        )
        .unwrap();
        assert!(!rooted_equal(&a, &unshared));
    }

    #[test]
    fn delinearize_examples() {
        let t = ValueTerm::let_in(
            &["p0"],
            ValueTerm::Int(1),
            ValueTerm::block(0, vec![ValueTerm::shared("p0"), ValueTerm::shared("p0")]),
        );
        let g = delinearize(&t).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.in_degrees()[g.children(g.root())[0]], 2);

        let g = delinearize(&ValueTerm::Int(7)).unwrap();
        assert_eq!(g.nodes(), &[Node::Int(7)]);

        let g = delinearize(&ValueTerm::fix(&["r0"], ValueTerm::block(1, vec![ValueTerm::rec("r0")]))).unwrap();
        assert_eq!(g.nodes(), &[block(1, vec![0])]);
    }

    #[test]
    fn delinearize_multi_root_cycle() {
        // let (p, q) = fix (r, s) = (A(s), B(r)) in (p, q)
        let fix = ValueTerm::fix(
            &["r", "s"],
            ValueTerm::block(0, vec![
                ValueTerm::block(1, vec![ValueTerm::rec("s")]),
                ValueTerm::block(2, vec![ValueTerm::rec("r")]),
            ]),
        );
        let t = ValueTerm::let_in(
            &["p", "q"],
            fix,
            ValueTerm::block(0, vec![ValueTerm::shared("p"), ValueTerm::shared("q")]),
        );
        let g = delinearize(&t).unwrap();
        let expected = RawGraph::new(vec![block(0, vec![1, 2]), block(1, vec![2]), block(2, vec![1])], 0).unwrap();
        assert!(rooted_equal(&g, &expected));
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn delinearize_rejects_ill_founded_fix() {
        assert_eq!(delinearize(&ValueTerm::fix(&["r"], ValueTerm::rec("r"))), Err(GraphError::IllFoundedFix));
        assert_eq!(delinearize(&ValueTerm::shared("p")), Err(GraphError::UnboundVariable("p".into())));
    }
}
