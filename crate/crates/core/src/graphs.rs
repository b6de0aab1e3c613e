//! Graph schemes over edge streams: triangle counting through moments of a
//! derived stream, and one-sided checks of a prover-supplied witness for
//! perfect matching, connectivity and non-bipartiteness.
//!
//! Edge {u, v} with u < v has id u·n + v. A witness arrives after the stream;
//! its edges are fed to a subset check against the stream's edge set.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Reject};
use crate::field::{FieldElement as Fe, PrimeField};
use crate::moments::engine::{EngineConfig, EngineOutcome, Main, PurityMode};
use crate::moments::online::Reduction;
use crate::moments::subset::{SubsetConfig, SubsetProver, SubsetVerifier};
use crate::pointqueries::fingerprint_field;
use crate::protocol::{Space, Strategy, StreamProver, StreamVerifier};
use crate::streams::{EdgeUpdate, Fingerprint, StreamMeta, Tag, TaggedUpdate};
use crate::wire::{Reader, Writer};

fn choose(n: u64, k: u32) -> u64 {
    match k {
        1 => n,
        2 => n * n.saturating_sub(1) / 2,
        _ => (n as u128 * n.saturating_sub(1) as u128 * n.saturating_sub(2) as u128 / 6) as u64,
    }
}

/// Combinatorial-number-system rank of a < b < c in [C(n, 3)].
pub fn triple_rank(a: u32, b: u32, c: u32) -> u64 {
    debug_assert!(a < b && b < c);
    choose(c as u64, 3) + choose(b as u64, 2) + a as u64
}

/// f(f-1)(f-2)/6 summed over the derived stream.
pub fn triangles_from_moments(f1: i128, f2: i128, f3: i128) -> Option<i128> {
    let six = f3 - 3 * f2 + 2 * f1;
    (six % 6 == 0).then_some(six / 6)
}

/// Each edge update becomes n - 2 updates on the triples containing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangles {
    pub vertices: u32,
}

impl Triangles {
    /// `meta` describes the edge stream keyed by edge id.
    pub fn config(&self, meta: &StreamMeta, c_v: u64, field: Option<PrimeField>) -> Result<EngineConfig, Error> {
        let fan = (self.vertices as u64).saturating_sub(2);
        let mains = vec![Main::moment(1, 0, 3), Main::moment(1, 0, 2), Main::moment(1, 0, 1)];
        let n = choose(self.vertices as u64, 3).max(1);
        let support = meta.sparsity.saturating_mul(fan).max(1);
        EngineConfig::online(n, 1, mains, PurityMode::Strict, support, c_v, meta.mass.saturating_mul(fan), field)
    }

    pub fn for_each_triple(&self, e: &EdgeUpdate, mut f: impl FnMut(u64)) {
        for w in 0..self.vertices {
            if w == e.u || w == e.v {
                continue;
            }
            let mut t = [e.u, e.v, w];
            t.sort_unstable();
            f(triple_rank(t[0], t[1], t[2]));
        }
    }

    /// Metadata of the derived stream.
    pub fn derived_meta(&self, stream: &[EdgeUpdate]) -> StreamMeta {
        let mut derived = Vec::new();
        for e in stream {
            self.for_each_triple(e, |t| derived.push((t, e.delta)));
        }
        StreamMeta::of_keyed(choose(self.vertices as u64, 3), derived)
    }
}

impl Reduction for Triangles {
    type Update = EdgeUpdate;
    type Output = i128;

    fn route(&self, u: &EdgeUpdate, emit: &mut dyn FnMut(usize, u64, i64)) {
        self.for_each_triple(u, |t| emit(0, t, u.delta));
    }

    fn output(&self, out: &EngineOutcome) -> Result<i128, Reject> {
        triangles_from_moments(out.values[2], out.values[1], out.values[0])
            .ok_or(Reject::Inconsistent("moments do not give a whole number of triangles"))
    }
}

/// Brute-force triangle count over the final edge set.
pub fn count_triangles(vertices: u32, edges: &BTreeSet<(u32, u32)>) -> u64 {
    let mut adj = vec![BTreeSet::new(); vertices as usize];
    for &(u, v) in edges {
        adj[u as usize].insert(v);
    }
    let mut count = 0;
    for &(u, v) in edges {
        count += adj[u as usize].intersection(&adj[v as usize]).count() as u64;
    }
    count
}

/// Edges with positive final multiplicity.
pub fn final_edges(stream: &[EdgeUpdate]) -> BTreeSet<(u32, u32)> {
    let mut m: BTreeMap<(u32, u32), i64> = BTreeMap::new();
    for e in stream {
        *m.entry((e.u, e.v)).or_insert(0) += e.delta;
    }
    m.into_iter().filter(|&(_, c)| c > 0).map(|(e, _)| e).collect()
}

/// Output of a relaxed scheme: the property holds. Failure is ⊥, never "false".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelaxedAccept;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    Matching,
    Connectivity,
    OddCycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    /// The endpoint this edge discovers.
    pub vertex: u32,
    pub parent: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Matching(Vec<(u32, u32)>),
    /// Edges in discovery order: each parent is the root or discovered earlier.
    SpanningTree { root: u32, edges: Vec<TreeEdge> },
    /// Closed walk v_0 .. v_L = v_0 with L odd.
    OddCycle(Vec<u32>),
}

impl Witness {
    pub fn kind(&self) -> WitnessKind {
        match self {
            Witness::Matching(_) => WitnessKind::Matching,
            Witness::SpanningTree { .. } => WitnessKind::Connectivity,
            Witness::OddCycle(_) => WitnessKind::OddCycle,
        }
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        match self {
            Witness::Matching(m) => m.clone(),
            Witness::SpanningTree { edges, .. } => edges.iter().map(|e| (e.parent, e.vertex)).collect(),
            Witness::OddCycle(c) => c.windows(2).map(|w| (w[0], w[1])).collect(),
        }
    }

    /// Wire form. Tree entries carry the discovery index of their parent and
    /// their own child count so the verifier can check the order.
    pub fn write(&self, w: &mut Writer) {
        match self {
            Witness::Matching(m) => {
                w.u64(m.len() as u64);
                for &(a, b) in m {
                    w.u64(a as u64).u64(b as u64);
                }
            }
            Witness::SpanningTree { root, edges } => {
                let mut index: BTreeMap<u32, u64> = BTreeMap::new();
                index.insert(*root, 0);
                let mut parent_index = Vec::with_capacity(edges.len());
                let mut children = vec![0u64; edges.len() + 1];
                for (k, e) in edges.iter().enumerate() {
                    // a parent not yet discovered has no honest index; point at the root
                    let j = index.get(&e.parent).copied().unwrap_or(0);
                    parent_index.push(j);
                    children[j as usize] += 1;
                    index.entry(e.vertex).or_insert(k as u64 + 1);
                }
                w.u64(*root as u64).u64(children[0]).u64(edges.len() as u64);
                for (k, e) in edges.iter().enumerate() {
                    w.u64(e.vertex as u64).u64(e.parent as u64).u64(parent_index[k]).u64(children[k + 1]);
                }
            }
            Witness::OddCycle(c) => {
                w.u64(c.len() as u64);
                for &v in c {
                    w.u64(v as u64);
                }
            }
        }
    }
}

pub fn edge_id(vertices: u32, a: u32, b: u32) -> u64 {
    let (u, v) = if a < b { (a, b) } else { (b, a) };
    u as u64 * vertices as u64 + v as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphConfig {
    pub vertices: u32,
    pub kind: WitnessKind,
    pub subset: SubsetConfig,
    pub fp_field: PrimeField,
}

impl GraphConfig {
    /// `meta` describes the edge stream keyed by edge id. The witness adds
    /// at most n edges.
    pub fn new(vertices: u32, kind: WitnessKind, meta: &StreamMeta, c_v: u64, field: Option<PrimeField>) -> Result<Self, Error> {
        let n = vertices as u64;
        let ids = n * n;
        let joint = StreamMeta {
            n: ids.max(1),
            len: meta.len + n,
            sparsity: meta.sparsity + n,
            footprint: meta.footprint + n,
            mass: meta.mass + n,
        };
        let subset = SubsetConfig::new(&joint, c_v, field)?;
        Ok(Self { vertices, kind, subset, fp_field: fingerprint_field(ids.max(n + 1))? })
    }
}

pub struct GraphVerifier {
    cfg: GraphConfig,
    subset: SubsetVerifier,
    basis: Fe,
}

impl GraphVerifier {
    pub fn new<R: RngCore + ?Sized>(cfg: GraphConfig, rng: &mut R) -> Result<Self, Error> {
        let subset = SubsetVerifier::new(cfg.subset.clone(), rng)?;
        let basis = cfg.fp_field.random(rng);
        Ok(Self { cfg, subset, basis })
    }

    fn vertex(&self, r: &mut Reader<'_>) -> Result<u32, Reject> {
        let v = r.u64()?;
        if v >= self.cfg.vertices as u64 {
            return Err(Reject::Malformed("vertex out of range"));
        }
        Ok(v as u32)
    }

    fn witness_edge(&mut self, a: u32, b: u32) -> Result<(), Reject> {
        if a == b {
            return Err(Reject::Inconsistent("witness edge is a self loop"));
        }
        self.subset.update(&TaggedUpdate::new(Tag::S, edge_id(self.cfg.vertices, a, b), 1))
    }

    /// Parses and checks the witness, feeding its edges to the subset check.
    fn witness(&mut self, r: &mut Reader<'_>) -> Result<(), Reject> {
        let n = self.cfg.vertices as u64;
        let field = self.cfg.fp_field;
        let mut vertices = Fingerprint::new(field, self.basis);
        match self.cfg.kind {
            WitnessKind::Matching => {
                if n % 2 != 0 || r.u64()? != n / 2 {
                    return Err(Reject::Inconsistent("a perfect matching has n/2 edges"));
                }
                for _ in 0..n / 2 {
                    let (a, b) = (self.vertex(r)?, self.vertex(r)?);
                    vertices.update(a as u64, 1);
                    vertices.update(b as u64, 1);
                    self.witness_edge(a, b)?;
                }
            }
            WitnessKind::Connectivity => {
                // pairs (discovery index, vertex): claimed parents against actual discoveries
                let mut claimed = Fingerprint::new(field, self.basis);
                let mut actual = Fingerprint::new(field, self.basis);
                let root = self.vertex(r)?;
                let root_children = r.u64()?;
                if root_children > n {
                    return Err(Reject::Malformed("child count out of range"));
                }
                vertices.update(root as u64, 1);
                actual.add_weighted(root as u64, field.from_u64(root_children));
                if r.u64()? != n.saturating_sub(1) {
                    return Err(Reject::Inconsistent("a spanning tree has n - 1 edges"));
                }
                for k in 1..n {
                    let (v, p) = (self.vertex(r)?, self.vertex(r)?);
                    let (j, children) = (r.u64()?, r.u64()?);
                    if j >= k || children > n {
                        return Err(Reject::Inconsistent("parent must be discovered before its child"));
                    }
                    vertices.update(v as u64, 1);
                    claimed.update(j * n + p as u64, 1);
                    actual.add_weighted(k * n + v as u64, field.from_u64(children));
                    self.witness_edge(v, p)?;
                }
                if claimed.value() != actual.value() {
                    return Err(Reject::Inconsistent("claimed parents differ from the discovery order"));
                }
            }
            WitnessKind::OddCycle => {
                let len = r.u64()?;
                if len < 4 || len > n + 1 || len % 2 != 0 {
                    return Err(Reject::Inconsistent("cycle must be closed with an odd number of edges"));
                }
                let first = self.vertex(r)?;
                let mut prev = first;
                for _ in 1..len {
                    let v = self.vertex(r)?;
                    self.witness_edge(prev, v)?;
                    prev = v;
                }
                if prev != first {
                    return Err(Reject::Inconsistent("cycle does not close"));
                }
                return Ok(());
            }
        }
        if vertices.value() != Fingerprint::of_prefix_set(field, self.basis, n).value() {
            return Err(Reject::Inconsistent("witness does not cover every vertex exactly once"));
        }
        Ok(())
    }
}

impl StreamVerifier for GraphVerifier {
    type Update = EdgeUpdate;
    type Output = RelaxedAccept;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        self.subset.start(a)
    }

    fn update(&mut self, e: &EdgeUpdate) -> Result<(), Reject> {
        if e.u >= e.v || e.v >= self.cfg.vertices {
            return Err(Reject::StreamModel("edge endpoints out of range"));
        }
        self.subset.update(&TaggedUpdate::new(Tag::T, e.id(self.cfg.vertices), e.delta))
    }

    fn finish(mut self, a: &[u8]) -> Result<RelaxedAccept, Reject> {
        let mut r = Reader::new(a);
        self.witness(&mut r)?;
        if self.subset.finish(r.rest())? {
            Ok(RelaxedAccept)
        } else {
            Err(Reject::Inconsistent("witness uses edges missing from the graph"))
        }
    }

    fn space(&self) -> Space {
        self.subset.space() + Space::field(4, self.cfg.fp_field.bits()) + Space::aux(4)
    }
}

pub struct GraphProver<R> {
    vertices: u32,
    witness: Witness,
    strategy: Strategy,
    subset: SubsetProver<R>,
    edges: BTreeMap<(u32, u32), i64>,
}

impl<R: RngCore> GraphProver<R> {
    pub const STRATEGIES: [Strategy; 4] =
        [Strategy::FakeWitness, Strategy::TamperProof, Strategy::WrongAnswer, Strategy::FalseCollisionList];

    pub fn new(cfg: GraphConfig, witness: Witness, strategy: Strategy, rng: R) -> Result<Self, Error> {
        if witness.kind() != cfg.kind {
            return Err(Error::InvalidParams("witness does not match the scheme"));
        }
        if !(strategy.is_honest() || Self::STRATEGIES.contains(&strategy)) {
            return Err(Error::InvalidParams("strategy does not apply to this scheme"));
        }
        let inner = if strategy == Strategy::FakeWitness { Strategy::Honest } else { strategy };
        let subset = SubsetProver::new(cfg.subset, inner, rng)?;
        Ok(Self { vertices: cfg.vertices, witness, strategy, subset, edges: BTreeMap::new() })
    }

    /// A structurally wrong version of the witness.
    fn corrupt(&self) -> Witness {
        let present = |a: u32, b: u32| self.edges.get(&(a.min(b), a.max(b))).is_some_and(|&c| c > 0);
        match &self.witness {
            Witness::Matching(m) => {
                let mut m = m.clone();
                // re-pair two edges through a non-edge if possible, else repeat one
                for i in 0..m.len() {
                    for j in i + 1..m.len() {
                        let ((a, b), (c, d)) = (m[i], m[j]);
                        if !present(a, d) {
                            m[i] = (a, d);
                            m[j] = (c, b);
                            return Witness::Matching(m);
                        }
                    }
                }
                if m.len() > 1 {
                    m[1] = m[0];
                } else if let Some(e) = m.first_mut() {
                    e.1 = e.0;
                }
                Witness::Matching(m)
            }
            Witness::SpanningTree { root, edges } => {
                // the last vertex goes missing and another is discovered twice
                let mut edges = edges.clone();
                if let Some(first) = edges.first().copied() {
                    let last = edges.len() - 1;
                    edges[last] = first;
                }
                Witness::SpanningTree { root: *root, edges }
            }
            Witness::OddCycle(c) => {
                // drop a vertex: even length, and usually a missing edge
                let mut c = c.clone();
                if c.len() > 2 {
                    c.remove(1);
                }
                Witness::OddCycle(c)
            }
        }
    }
}

impl<R: RngCore> StreamProver for GraphProver<R> {
    type Update = EdgeUpdate;

    fn start(&mut self) -> Vec<u8> {
        self.subset.start()
    }

    fn observe(&mut self, e: &EdgeUpdate) -> Option<Vec<u8>> {
        *self.edges.entry((e.u, e.v)).or_insert(0) += e.delta;
        self.subset.observe(&TaggedUpdate::new(Tag::T, e.id(self.vertices), e.delta))
    }

    fn finish(&mut self) -> Vec<u8> {
        let witness = if self.strategy == Strategy::FakeWitness { self.corrupt() } else { self.witness.clone() };
        let mut w = Writer::new();
        witness.write(&mut w);
        for (a, b) in witness.edges() {
            if a != b {
                self.subset.observe(&TaggedUpdate::new(Tag::S, edge_id(self.vertices, a, b), 1));
            }
        }
        let mut out = w.into_bytes();
        out.extend(self.subset.finish());
        out
    }
}

fn adjacency(vertices: u32, edges: &BTreeSet<(u32, u32)>) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); vertices as usize];
    for &(u, v) in edges {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    adj
}

/// Backtracking search; gives up after `budget` steps.
pub fn find_perfect_matching(vertices: u32, edges: &BTreeSet<(u32, u32)>, budget: u64) -> Option<Witness> {
    fn go(adj: &[Vec<u32>], mate: &mut [Option<u32>], out: &mut Vec<(u32, u32)>, steps: &mut u64) -> bool {
        let Some(u) = mate.iter().position(|m| m.is_none()) else { return true };
        for &v in &adj[u] {
            if *steps == 0 {
                return false;
            }
            *steps -= 1;
            if mate[v as usize].is_none() && v as usize != u {
                mate[u] = Some(v);
                mate[v as usize] = Some(u as u32);
                out.push((u as u32, v));
                if go(adj, mate, out, steps) {
                    return true;
                }
                out.pop();
                mate[u] = None;
                mate[v as usize] = None;
            }
        }
        false
    }
    if vertices % 2 != 0 {
        return None;
    }
    let adj = adjacency(vertices, edges);
    let mut mate = vec![None; vertices as usize];
    let mut out = Vec::new();
    let mut steps = budget;
    go(&adj, &mut mate, &mut out, &mut steps).then_some(Witness::Matching(out))
}

/// BFS tree from vertex 0, if the graph is connected.
pub fn bfs_tree(vertices: u32, edges: &BTreeSet<(u32, u32)>) -> Option<Witness> {
    if vertices == 0 {
        return None;
    }
    let adj = adjacency(vertices, edges);
    let mut seen = vec![false; vertices as usize];
    let mut queue = VecDeque::from([0u32]);
    seen[0] = true;
    let mut tree = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u as usize] {
            if !seen[v as usize] {
                seen[v as usize] = true;
                tree.push(TreeEdge { vertex: v, parent: u });
                queue.push_back(v);
            }
        }
    }
    (tree.len() + 1 == vertices as usize).then_some(Witness::SpanningTree { root: 0, edges: tree })
}

/// An odd closed walk from a failed 2-colouring, if one exists.
pub fn find_odd_cycle(vertices: u32, edges: &BTreeSet<(u32, u32)>) -> Option<Witness> {
    let adj = adjacency(vertices, edges);
    let mut depth: Vec<Option<u32>> = vec![None; vertices as usize];
    let mut parent = vec![u32::MAX; vertices as usize];
    for s in 0..vertices {
        if depth[s as usize].is_some() {
            continue;
        }
        depth[s as usize] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let du = depth[u as usize].expect("queued vertices have depths");
            for &v in &adj[u as usize] {
                match depth[v as usize] {
                    None => {
                        depth[v as usize] = Some(du + 1);
                        parent[v as usize] = u;
                        queue.push_back(v);
                    }
                    Some(dv) if dv == du => {
                        // climb both sides to the common ancestor
                        let (mut a, mut b) = (vec![u], vec![v]);
                        while a.last() != b.last() {
                            a.push(parent[*a.last().expect("nonempty") as usize]);
                            b.push(parent[*b.last().expect("nonempty") as usize]);
                        }
                        b.pop();
                        b.reverse();
                        a.extend(b);
                        a.push(u);
                        return Some(Witness::OddCycle(a));
                    }
                    _ => {}
                }
            }
        }
    }
    None
}
