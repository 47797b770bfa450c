//! Explicit MDP representation: a weighted directed graph whose vertices are
//! partitioned into player-controlled and probabilistic ones, with exact
//! rational payoffs on edges and exact rational distributions at probabilistic
//! vertices.

use crate::rational::{format_rat, Rat};
use crate::sets::VertexSet;
use num::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Stable dense vertex identifier. Names are for I/O only.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

/// Stable dense edge identifier, assigned in insertion order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v#{}", self.0)
    }
}

impl fmt::Debug for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e#{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Owner {
    /// Controlled by the system (player 1).
    Player,
    /// Resolved by the environment's probability distribution, or
    /// adversarially in the two-player view.
    Random,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Vertex {
    pub name: String,
    pub owner: Owner,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub payoff: Rat,
    /// Present exactly when `from` is probabilistic.
    pub prob: Option<Rat>,
}

/// A structural invariant violation. Violations are data, not failures: the
/// builder reports all of them at once.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum Violation {
    #[error("deadlock at {vertex}")]
    Deadlock { vertex: String },
    #[error("distribution at {vertex} sums to {sum}")]
    BadDistribution { vertex: String, sum: String },
    #[error("non-positive probability {prob} on edge {from} -> {to}")]
    NonPositiveProbability { from: String, to: String, prob: String },
    #[error("probability given on player edge {from} -> {to}")]
    ProbabilityOnPlayerEdge { from: String, to: String },
    #[error("missing probability on edge {from} -> {to} out of probabilistic vertex")]
    MissingProbability { from: String, to: String },
    #[error("parallel edge {from} -> {to}")]
    ParallelEdge { from: String, to: String },
    #[error("duplicate vertex name {name}")]
    DuplicateName { name: String },
}

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("invalid MDP: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
}

/// Incremental construction; `build` validates every model invariant.
#[derive(Clone, Default)]
pub struct MdpBuilder {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    by_name: HashMap<String, VertexId>,
    duplicate_names: Vec<String>,
}

impl MdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, name: &str, owner: Owner) -> VertexId {
        let id = VertexId(self.vertices.len());
        if self.by_name.contains_key(name) {
            self.duplicate_names.push(name.to_string());
        } else {
            self.by_name.insert(name.to_string(), id);
        }
        self.vertices.push(Vertex {
            name: name.to_string(),
            owner,
        });
        id
    }

    pub fn edge(&mut self, from: VertexId, to: VertexId, payoff: Rat, prob: Option<Rat>) -> EdgeId {
        let id = EdgeId(self.edges.len());
        self.edges.push(Edge {
            from,
            to,
            payoff,
            prob,
        });
        id
    }

    pub fn lookup(&self, name: &str) -> Option<VertexId> {
        self.by_name.get(name).copied()
    }

    /// Every violated invariant, with vertex/edge identity.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for name in &self.duplicate_names {
            out.push(Violation::DuplicateName { name: name.clone() });
        }
        let n = self.vertices.len();
        let mut out_count = vec![0usize; n];
        let mut seen_pairs: HashMap<(VertexId, VertexId), ()> = HashMap::new();
        let mut sums: Vec<Rat> = vec![Rat::zero(); n];
        for e in &self.edges {
            out_count[e.from.0] += 1;
            if seen_pairs.insert((e.from, e.to), ()).is_some() {
                out.push(Violation::ParallelEdge {
                    from: self.vertices[e.from.0].name.clone(),
                    to: self.vertices[e.to.0].name.clone(),
                });
            }
            match (self.vertices[e.from.0].owner, &e.prob) {
                (Owner::Player, Some(_)) => out.push(Violation::ProbabilityOnPlayerEdge {
                    from: self.vertices[e.from.0].name.clone(),
                    to: self.vertices[e.to.0].name.clone(),
                }),
                (Owner::Random, None) => out.push(Violation::MissingProbability {
                    from: self.vertices[e.from.0].name.clone(),
                    to: self.vertices[e.to.0].name.clone(),
                }),
                (Owner::Random, Some(p)) => {
                    if !p.is_positive() {
                        out.push(Violation::NonPositiveProbability {
                            from: self.vertices[e.from.0].name.clone(),
                            to: self.vertices[e.to.0].name.clone(),
                            prob: format_rat(p),
                        });
                    }
                    sums[e.from.0] += p;
                }
                (Owner::Player, None) => {}
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if out_count[i] == 0 {
                out.push(Violation::Deadlock {
                    vertex: v.name.clone(),
                });
            } else if v.owner == Owner::Random && !sums[i].is_one() {
                out.push(Violation::BadDistribution {
                    vertex: v.name.clone(),
                    sum: format_rat(&sums[i]),
                });
            }
        }
        out
    }

    pub fn build(self) -> Result<Mdp, MdpError> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(MdpError::Invalid(violations));
        }
        let n = self.vertices.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            out_edges[e.from.0].push(EdgeId(i));
            in_edges[e.to.0].push(EdgeId(i));
        }
        Ok(Mdp {
            vertices: self.vertices,
            edges: self.edges,
            out_edges,
            in_edges,
        })
    }
}

/// A validated MDP. Immutable after construction; all solver operations are
/// pure functions of their inputs.
#[derive(Clone, PartialEq, Eq)]
pub struct Mdp {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl fmt::Debug for Mdp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mdp({} vertices, {} edges)", self.num_vertices(), self.num_edges())
    }
}

impl Mdp {
    /// The zero-vertex MDP. Solvers treat it as having empty regions.
    pub fn empty() -> Self {
        Mdp {
            vertices: Vec::new(),
            edges: Vec::new(),
            out_edges: Vec::new(),
            in_edges: Vec::new(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.0]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn owner(&self, v: VertexId) -> Owner {
        self.vertices[v.0].owner
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertices[v.0].name
    }

    pub fn lookup(&self, name: &str) -> Option<VertexId> {
        self.vertices
            .iter()
            .position(|v| v.name == name)
            .map(VertexId)
    }

    pub fn lookup_or_err(&self, name: &str) -> Result<VertexId, MdpError> {
        self.lookup(name)
            .ok_or_else(|| MdpError::UnknownVertex(name.to_string()))
    }

    /// Out-edges in edge-id order (= insertion order).
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v.0]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v.0]
    }

    pub fn out_neighbours(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.out_edges[v.0].iter().map(move |&e| self.edges[e.0].to)
    }

    pub fn find_edge(&self, from: VertexId, to: VertexId) -> Option<EdgeId> {
        self.out_edges[from.0]
            .iter()
            .copied()
            .find(|&e| self.edges[e.0].to == to)
    }

    pub fn all_vertices(&self) -> VertexSet {
        VertexSet::full(self.num_vertices())
    }

    /// Minimum non-zero probability over all probabilistic edges.
    pub fn p_min(&self) -> Option<Rat> {
        self.edges
            .iter()
            .filter_map(|e| e.prob.clone())
            .min()
    }

    /// Maximum absolute payoff over all edges.
    pub fn w_max(&self) -> Rat {
        self.edges
            .iter()
            .map(|e| e.payoff.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// Re-checks every model invariant; empty means valid. `build` already
    /// enforces these, so this is for externally assembled data.
    pub fn validate(&self) -> Vec<Violation> {
        let mut b = MdpBuilder::new();
        for v in &self.vertices {
            b.vertex(&v.name, v.owner);
        }
        for e in &self.edges {
            b.edge(e.from, e.to, e.payoff.clone(), e.prob.clone());
        }
        b.violations()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubMdpError {
    #[error("vertex {0} has no out-neighbour inside the subset")]
    NoInternalSuccessor(String),
    #[error("probabilistic vertex {0} has an out-neighbour outside the subset")]
    EscapingDistribution(String),
}

/// Restriction of a parent MDP to a vertex subset, with the maps back to the
/// parent's identifiers.
#[derive(Clone, Debug)]
pub struct SubMdp {
    pub mdp: Mdp,
    /// Sub vertex index -> parent vertex id.
    pub parent_vertex: Vec<VertexId>,
    /// Sub edge index -> parent edge id.
    pub parent_edge: Vec<EdgeId>,
    parent_universe: usize,
}

impl SubMdp {
    /// Lifts a vertex set of the restriction into the parent's universe.
    pub fn lift(&self, sub_set: &VertexSet) -> VertexSet {
        VertexSet::from_ids(
            self.parent_universe,
            sub_set.iter().map(|v| self.parent_vertex[v.0]),
        )
    }

    /// Restricts a parent vertex set to this restriction's universe.
    pub fn restrict(&self, parent_set: &VertexSet) -> VertexSet {
        VertexSet::from_ids(
            self.mdp.num_vertices(),
            self.parent_vertex
                .iter()
                .enumerate()
                .filter(|(_, p)| parent_set.contains(**p))
                .map(|(i, _)| VertexId(i)),
        )
    }

    pub fn to_sub(&self, parent: VertexId) -> Option<VertexId> {
        self.parent_vertex
            .iter()
            .position(|&p| p == parent)
            .map(VertexId)
    }
}

fn restriction(m: &Mdp, keep: &VertexSet, renormalize: bool) -> SubMdp {
    let mut sub_index = vec![usize::MAX; m.num_vertices()];
    let mut parent_vertex = Vec::new();
    for v in keep.iter() {
        sub_index[v.0] = parent_vertex.len();
        parent_vertex.push(v);
    }
    let mut b = MdpBuilder::new();
    for &p in &parent_vertex {
        b.vertex(m.name(p), m.owner(p));
    }
    let mut parent_edge = Vec::new();
    // Per-vertex in-set probability mass, for closure renormalization.
    let mut mass: Vec<Rat> = vec![Rat::zero(); parent_vertex.len()];
    if renormalize {
        for (&p, mass) in parent_vertex.iter().zip(mass.iter_mut()) {
            if m.owner(p) == Owner::Random {
                for &e in m.out_edges(p) {
                    if keep.contains(m.edge(e).to) {
                        *mass += m.edge(e).prob.as_ref().unwrap();
                    }
                }
            }
        }
    }
    for e in m.edge_ids() {
        let edge = m.edge(e);
        if !keep.contains(edge.from) || !keep.contains(edge.to) {
            continue;
        }
        let from = VertexId(sub_index[edge.from.0]);
        let to = VertexId(sub_index[edge.to.0]);
        let prob = edge.prob.as_ref().map(|p| {
            if renormalize {
                p / &mass[from.0]
            } else {
                p.clone()
            }
        });
        b.edge(from, to, edge.payoff.clone(), prob);
        parent_edge.push(e);
    }
    SubMdp {
        mdp: b.build().expect("restriction preserves validity"),
        parent_vertex,
        parent_edge,
        parent_universe: m.num_vertices(),
    }
}

/// The subMDP induced by `keep`. Requires that every kept vertex has an
/// out-neighbour in `keep` and that kept probabilistic vertices keep all of
/// their out-neighbours.
pub fn sub_mdp(m: &Mdp, keep: &VertexSet) -> Result<SubMdp, SubMdpError> {
    for v in keep.iter() {
        let mut internal = false;
        for u in m.out_neighbours(v) {
            if keep.contains(u) {
                internal = true;
            } else if m.owner(v) == Owner::Random {
                return Err(SubMdpError::EscapingDistribution(m.name(v).to_string()));
            }
        }
        if !internal {
            return Err(SubMdpError::NoInternalSuccessor(m.name(v).to_string()));
        }
    }
    Ok(restriction(m, keep, false))
}

/// The subMDP closure induced by `keep`: player vertices drop out-of-set
/// edges, probabilistic distributions are renormalized over the kept
/// out-neighbours. Requires only that every kept vertex has an out-neighbour
/// in `keep`.
pub fn sub_mdp_closure(m: &Mdp, keep: &VertexSet) -> Result<SubMdp, SubMdpError> {
    for v in keep.iter() {
        if !m.out_neighbours(v).any(|u| keep.contains(u)) {
            return Err(SubMdpError::NoInternalSuccessor(m.name(v).to_string()));
        }
    }
    Ok(restriction(m, keep, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::rational::{rat, rat_int};

    #[test]
    fn fig1_is_valid() {
        let m = instances::fig1_naive();
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.num_edges(), 5);
        assert!(m.validate().is_empty());
        assert_eq!(m.p_min(), Some(rat(1, 2)));
        assert_eq!(m.w_max(), rat_int(2));
    }

    #[test]
    fn deadlock_is_reported() {
        let mut b = MdpBuilder::new();
        b.vertex("v0", Owner::Player);
        let viols = b.violations();
        assert_eq!(
            viols,
            vec![Violation::Deadlock {
                vertex: "v0".into()
            }]
        );
    }

    #[test]
    fn bad_distribution_is_reported_with_exact_sum() {
        let mut b = MdpBuilder::new();
        let v = b.vertex("p", Owner::Random);
        let a = b.vertex("a", Owner::Player);
        b.edge(v, a, rat_int(0), Some(rat(1, 2)));
        b.edge(v, v, rat_int(0), Some(rat(2, 5)));
        b.edge(a, a, rat_int(0), None);
        let viols = b.violations();
        assert!(viols.contains(&Violation::BadDistribution {
            vertex: "p".into(),
            sum: "9/10".into()
        }));
    }

    #[test]
    fn sub_mdp_of_everything_is_identity() {
        let m = instances::fig4_posreach();
        let sub = sub_mdp(&m, &m.all_vertices()).unwrap();
        assert_eq!(sub.mdp, m);
    }

    #[test]
    fn sub_mdp_conditions() {
        let m = instances::fig4_posreach();
        let keep = VertexSet::from_ids(
            m.num_vertices(),
            ["v2", "v3", "v4"].iter().map(|n| m.lookup(n).unwrap()),
        );
        let sub = sub_mdp(&m, &keep).unwrap();
        assert_eq!(sub.mdp.num_vertices(), 3);
        assert_eq!(sub.mdp.num_edges(), 4); // v2->v3, v2->v4, v3->v4, v4->v4

        // v1 is probabilistic with an out-neighbour outside the set.
        let keep2 = VertexSet::from_ids(m.num_vertices(), [m.lookup("v1").unwrap(), m.lookup("v2").unwrap()]);
        assert!(matches!(
            sub_mdp(&m, &keep2),
            Err(SubMdpError::EscapingDistribution(_))
        ));
    }

    #[test]
    fn self_loop_singleton_is_a_sub_mdp() {
        let m = instances::fig1_naive();
        let keep = VertexSet::from_ids(m.num_vertices(), [m.lookup("v1").unwrap()]);
        let sub = sub_mdp(&m, &keep).unwrap();
        assert_eq!(sub.mdp.num_vertices(), 1);
        assert_eq!(sub.mdp.num_edges(), 1);
    }

    #[test]
    fn closure_renormalizes_exactly() {
        let m = instances::fig1_naive();
        let keep = VertexSet::from_ids(
            m.num_vertices(),
            [m.lookup("v1").unwrap(), m.lookup("v2").unwrap()],
        );
        let sub = sub_mdp_closure(&m, &keep).unwrap();
        // v2 keeps only the edge back to v1, renormalized from 1/2 to 1.
        let v2 = sub.mdp.lookup("v2").unwrap();
        let outs: Vec<_> = sub.mdp.out_edges(v2).to_vec();
        assert_eq!(outs.len(), 1);
        assert_eq!(sub.mdp.edge(outs[0]).prob, Some(rat_int(1)));
        assert!(sub.mdp.validate().is_empty());

        // Closure over everything changes nothing.
        let full = sub_mdp_closure(&m, &m.all_vertices()).unwrap();
        assert_eq!(full.mdp, m);

        // A member without in-set successors fails condition (i).
        let keep3 = VertexSet::from_ids(m.num_vertices(), [m.lookup("v2").unwrap()]);
        assert!(matches!(
            sub_mdp_closure(&m, &keep3),
            Err(SubMdpError::NoInternalSuccessor(_))
        ));
    }

    #[test]
    fn lift_and_restrict_round_trip() {
        let m = instances::fig4_posreach();
        let keep = VertexSet::from_ids(
            m.num_vertices(),
            ["v2", "v3", "v4"].iter().map(|n| m.lookup(n).unwrap()),
        );
        let sub = sub_mdp(&m, &keep).unwrap();
        let inner = VertexSet::from_ids(3, [sub.mdp.lookup("v3").unwrap()]);
        let lifted = sub.lift(&inner);
        assert!(lifted.contains(m.lookup("v3").unwrap()));
        assert_eq!(sub.restrict(&lifted), inner);
    }
}
