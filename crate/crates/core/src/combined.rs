//! Combined sure/almost-sure and sure/limit-sure solvers for the fixed and
//! bounded window mean-payoff objectives, with full iteration traces.

use crate::almost::{almost_sure_bwmp, almost_sure_fwmp};
use crate::graph::{pos_cpre_within, sure_attractor_within, sure_safe};
use crate::mdp::{sub_mdp, sub_mdp_closure, EdgeId, Mdp, Owner, VertexId};
use crate::rational::Rat;
use crate::sets::{EdgeSet, VertexSet};
use crate::sure::{sure_bwmp, sure_dir_bwmp, sure_dir_fwmp, sure_fwmp};
use thiserror::Error;

/// Fixed window length or the bounded variant (which instantiates each
/// sub-query at that MDP's own collapse length).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    Fixed(u32),
    Bounded,
}

impl WindowKind {
    fn sure_region(&self, m: &Mdp, lambda: &Rat) -> VertexSet {
        match self {
            WindowKind::Fixed(l) => sure_fwmp(m, *l, lambda).region,
            WindowKind::Bounded => sure_bwmp(m, lambda).region,
        }
    }

    fn sure_dir_region(&self, m: &Mdp, lambda: &Rat) -> VertexSet {
        match self {
            WindowKind::Fixed(l) => sure_dir_fwmp(m, *l, lambda).region,
            WindowKind::Bounded => sure_dir_bwmp(m, lambda).region,
        }
    }

    fn almost_sure_region(&self, m: &Mdp, lambda: &Rat) -> VertexSet {
        match self {
            WindowKind::Fixed(l) => almost_sure_fwmp(m, *l, lambda).region,
            WindowKind::Bounded => almost_sure_bwmp(m, lambda).region,
        }
    }
}

/// One pass of the combined solver's repeat block, all sets in the ids of
/// the MDP the solver was called on.
#[derive(Clone, Debug)]
pub struct SasIteration {
    /// Probabilistic vertices entering the current region with positive
    /// probability but not surely.
    pub pos_cpre: VertexSet,
    /// New vertices winning the direct-window/Buchi combination outside the
    /// current region.
    pub w_sdab: VertexSet,
    /// Vertices added by the closing sure attractor.
    pub attracted: VertexSet,
    /// Region at the end of the iteration.
    pub w: VertexSet,
}

/// Full audit trail of a combined solve.
#[derive(Clone, Debug)]
pub struct SasTrace {
    /// Thresholds were not in increasing order, so the solve collapsed to
    /// the sure region for the first threshold.
    pub degenerate: bool,
    pub w_sure_alpha: VertexSet,
    /// The sure region for the second threshold inside the first; the
    /// starting region of the repeat block.
    pub w0: VertexSet,
    pub iterations: Vec<SasIteration>,
    pub final_region: VertexSet,
}

impl SasTrace {
    /// The partition and monotonicity facts every run must satisfy:
    /// consecutive regions are ordered, each region splits into the previous
    /// one, the new direct-window part, and the attracted part, a non-empty
    /// direct-window part meets its target set, and the final iteration adds
    /// nothing.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.degenerate {
            return Ok(());
        }
        if !self.w0.is_subset(&self.w_sure_alpha) {
            return Err("w0 not inside the alpha-sure region".into());
        }
        let mut prev = self.w0.clone();
        for (i, it) in self.iterations.iter().enumerate() {
            if !prev.is_subset(&it.w) {
                return Err(format!("iteration {i}: region shrank"));
            }
            let mut union = prev.clone();
            if !union.intersection(&it.w_sdab).is_empty() {
                return Err(format!("iteration {i}: w_sdab overlaps previous region"));
            }
            union.union_with(&it.w_sdab);
            if !union.intersection(&it.attracted).is_empty() {
                return Err(format!("iteration {i}: attracted overlaps"));
            }
            union.union_with(&it.attracted);
            if union != it.w {
                return Err(format!("iteration {i}: partition does not cover the region"));
            }
            if !it.w_sdab.is_empty() && it.w_sdab.intersection(&it.pos_cpre).is_empty() {
                return Err(format!(
                    "iteration {i}: non-empty w_sdab misses its target set"
                ));
            }
            prev = it.w.clone();
        }
        match self.iterations.last() {
            Some(last) if !last.w_sdab.is_empty() => {
                Err("final iteration still added direct-window vertices".into())
            }
            _ if prev != self.final_region => Err("final region mismatch".into()),
            _ => Ok(()),
        }
    }
}

fn empty_trace(m: &Mdp) -> SasTrace {
    SasTrace {
        degenerate: false,
        w_sure_alpha: VertexSet::empty(m.num_vertices()),
        w0: VertexSet::empty(m.num_vertices()),
        iterations: Vec::new(),
        final_region: VertexSet::empty(m.num_vertices()),
    }
}

/// Everything a combined solve produced, including the intermediate objects
/// strategy synthesis rebuilds its controllers from.
pub(crate) struct SasFull {
    pub region: VertexSet,
    pub trace: SasTrace,
    pub sub_alpha: Option<crate::mdp::SubMdp>,
    pub iterations: Vec<SasIterFull>,
}

pub(crate) struct SasIterFull {
    /// Closure of the not-yet-won part of the alpha region, when non-empty.
    pub closure: Option<crate::mdp::SubMdp>,
    /// The direct-window/Buchi solve inside that closure.
    pub absolve: Option<AsBuchiSolve>,
    /// Memoryless attractor choice toward the grown region, on the parent.
    pub attr_choice: Vec<Option<EdgeId>>,
}

pub(crate) fn sas_solve_full(m: &Mdp, kind: WindowKind, alpha: &Rat, beta: &Rat) -> SasFull {
    if alpha >= beta {
        // The combination collapses to sure satisfaction of the stronger
        // threshold.
        let region = kind.sure_region(m, alpha);
        let trace = SasTrace {
            degenerate: true,
            w_sure_alpha: region.clone(),
            w0: region.clone(),
            iterations: Vec::new(),
            final_region: region.clone(),
        };
        return SasFull {
            region,
            trace,
            sub_alpha: None,
            iterations: Vec::new(),
        };
    }
    let w_sure_alpha = kind.sure_region(m, alpha);
    if w_sure_alpha.is_empty() {
        return SasFull {
            region: VertexSet::empty(m.num_vertices()),
            trace: empty_trace(m),
            sub_alpha: None,
            iterations: Vec::new(),
        };
    }
    let sub = sub_mdp(m, &w_sure_alpha).expect("sure region induces a subMDP");
    let w0 = sub.lift(&kind.sure_region(&sub.mdp, beta));

    let mut w = w0.clone();
    let mut iterations = Vec::new();
    let mut full_iterations = Vec::new();
    loop {
        let p = pos_cpre_within(m, &w, &w_sure_alpha);
        let rest = w_sure_alpha.difference(&w);
        let (w_sdab, closure, absolve) = if rest.is_empty() {
            (VertexSet::empty(m.num_vertices()), None, None)
        } else {
            let closure = sub_mdp_closure(m, &rest)
                .expect("vertices outside the attractor-closed region keep a successor");
            let target = closure.restrict(&p);
            let solve = as_buchi_solve(&closure.mdp, kind, alpha, &target);
            (closure.lift(&solve.region), Some(closure), Some(solve))
        };
        let after_sdab = w.union(&w_sdab);
        let attracted_region = sure_attractor_within(m, &after_sdab, &w_sure_alpha);
        let attracted = attracted_region.difference(&after_sdab);
        iterations.push(SasIteration {
            pos_cpre: p,
            w_sdab: w_sdab.clone(),
            attracted,
            w: attracted_region.clone(),
        });
        full_iterations.push(SasIterFull {
            closure,
            absolve,
            attr_choice: crate::graph::sure_attractor_strategy(m, &after_sdab, &w_sure_alpha),
        });
        w = attracted_region;
        if w_sdab.is_empty() {
            break;
        }
    }
    let trace = SasTrace {
        degenerate: false,
        w_sure_alpha,
        w0,
        iterations,
        final_region: w.clone(),
    };
    SasFull {
        region: w,
        trace,
        sub_alpha: Some(sub),
        iterations: full_iterations,
    }
}

fn sas_core(m: &Mdp, kind: WindowKind, alpha: &Rat, beta: &Rat) -> (VertexSet, SasTrace) {
    let full = sas_solve_full(m, kind, alpha, beta);
    (full.region, full.trace)
}

/// Winning region for sure-FWMP(l, alpha) combined with almost-sure
/// FWMP(l, beta), with the full iteration trace.
pub fn sas_fwmp(m: &Mdp, l: u32, alpha: &Rat, beta: &Rat) -> (VertexSet, SasTrace) {
    sas_core(m, WindowKind::Fixed(l), alpha, beta)
}

/// Bounded-window counterpart of [`sas_fwmp`].
pub fn sas_bwmp(m: &Mdp, alpha: &Rat, beta: &Rat) -> (VertexSet, SasTrace) {
    sas_core(m, WindowKind::Bounded, alpha, beta)
}

/// The direct-window/Buchi solve with the final restriction kept around for
/// strategy synthesis.
pub(crate) struct AsBuchiSolve {
    /// Winning region in the ids of the MDP the solve was called on.
    pub region: VertexSet,
    /// The last restriction the recursion reached.
    pub final_mdp: Mdp,
    /// Final-restriction vertex to original vertex.
    pub to_parent: Vec<VertexId>,
    /// Target within the final restriction.
    pub target_final: VertexSet,
    /// The positive-reach solve on the final restriction; covers it exactly
    /// when the region is non-empty.
    pub pos_reach: PosReachResult,
}

pub(crate) fn as_buchi_solve(m: &Mdp, kind: WindowKind, alpha: &Rat, target: &VertexSet) -> AsBuchiSolve {
    let mut current = m.clone();
    let mut to_parent: Vec<VertexId> = m.vertex_ids().collect();
    let mut t = target.clone();
    for _ in 0..=m.num_vertices() {
        let pr = pos_reach_core(&current, kind, alpha, &t, None);
        let done_empty = current.num_vertices() == 0;
        if done_empty || pr.region == current.all_vertices() {
            let region = VertexSet::from_ids(
                m.num_vertices(),
                current.vertex_ids().map(|v| to_parent[v.0]),
            );
            return AsBuchiSolve {
                region,
                final_mdp: current,
                to_parent,
                target_final: t,
                pos_reach: pr,
            };
        }
        let safe = sure_safe(&current, &pr.region);
        if safe.is_empty() {
            return AsBuchiSolve {
                region: VertexSet::empty(m.num_vertices()),
                final_mdp: Mdp::empty(),
                to_parent: Vec::new(),
                target_final: VertexSet::empty(0),
                pos_reach: pr,
            };
        }
        let sub = sub_mdp(&current, &safe).expect("safety region induces a subMDP");
        t = sub.restrict(&t);
        to_parent = sub.parent_vertex.iter().map(|v| to_parent[v.0]).collect();
        current = sub.mdp;
    }
    unreachable!("each round strictly shrinks the MDP");
}

fn as_buchi_core(m: &Mdp, kind: WindowKind, alpha: &Rat, target: &VertexSet) -> VertexSet {
    as_buchi_solve(m, kind, alpha, target).region
}

/// Winning region for sure-DirFWMP(l, alpha) combined with almost-sure
/// Buchi(target): restrict to the positive-reach region's safety core until
/// every vertex can reach the target positively.
pub fn sure_dirfwmp_as_buchi(m: &Mdp, l: u32, alpha: &Rat, target: &VertexSet) -> VertexSet {
    as_buchi_core(m, WindowKind::Fixed(l), alpha, target)
}

/// Bounded-window counterpart of [`sure_dirfwmp_as_buchi`].
pub fn sure_dirbwmp_as_buchi(m: &Mdp, alpha: &Rat, target: &VertexSet) -> VertexSet {
    as_buchi_core(m, WindowKind::Bounded, alpha, target)
}

/// Result of the good/bad edge classification, all in the ids of the MDP the
/// solver was called on.
#[derive(Clone, Debug)]
pub struct PosReachResult {
    /// Vertices winning the direct-window/positive-reach combination.
    pub region: VertexSet,
    pub good_edges: EdgeSet,
    pub bad_edges: EdgeSet,
    /// The direct-window region everything was restricted to.
    pub dir_region: VertexSet,
    /// Every classification query in order.
    pub verdicts: Vec<(EdgeId, bool)>,
    /// Good edges in addition order.
    pub good_edge_order: Vec<EdgeId>,
    /// Vertices in the order they joined the region, with the first good
    /// out-edge that admitted them and the size of the good set just after.
    pub added: Vec<(VertexId, EdgeId, usize)>,
}

fn pos_reach_core(
    m: &Mdp,
    kind: WindowKind,
    alpha: &Rat,
    target: &VertexSet,
    rank: Option<&[usize]>,
) -> PosReachResult {
    let n = m.num_vertices();
    let dir_region = kind.sure_dir_region(m, alpha);
    let empty = PosReachResult {
        region: VertexSet::empty(n),
        good_edges: EdgeSet::empty(m.num_edges()),
        bad_edges: EdgeSet::empty(m.num_edges()),
        dir_region: dir_region.clone(),
        verdicts: Vec::new(),
        good_edge_order: Vec::new(),
        added: Vec::new(),
    };
    if dir_region.is_empty() {
        return empty;
    }
    let sub = sub_mdp(m, &dir_region).expect("direct region induces a subMDP");
    let t = sub.restrict(target);

    let sn = sub.mdp.num_vertices();
    let se = sub.mdp.num_edges();
    let mut region = t.clone();
    let mut good = EdgeSet::empty(se);
    let mut bad = EdgeSet::empty(se);
    let mut verdicts = Vec::new();
    let mut good_order = Vec::new();
    let mut added = Vec::new();
    let max_rounds = se * se + se + 1;
    for _ in 0..max_rounds {
        let candidate = sub
            .mdp
            .edge_ids()
            .filter(|&e| {
                let edge = sub.mdp.edge(e);
                !t.contains(edge.from)
                    && region.contains(edge.to)
                    && !good.contains(e)
                    && !bad.contains(e)
            })
            .min_by_key(|&e| {
                let parent = sub.parent_edge[e.0];
                rank.map_or(parent.0, |r| r[parent.0])
            });
        let Some(e) = candidate else { break };
        let ok = is_good_edge_in(&sub.mdp, kind, alpha, e, &good, &region, &t);
        verdicts.push((sub.parent_edge[e.0], ok));
        if ok {
            let s = sub.mdp.edge(e).from;
            good.insert(e);
            good_order.push(e);
            if !region.contains(s) {
                region.insert(s);
                added.push((
                    sub.parent_vertex[s.0],
                    sub.parent_edge[e.0],
                    good_order.len(),
                ));
            }
            bad = EdgeSet::empty(se);
        } else {
            bad.insert(e);
        }
    }

    let lift_edges = |set: &EdgeSet| {
        EdgeSet::from_ids(m.num_edges(), set.iter().map(|e| sub.parent_edge[e.0]))
    };
    PosReachResult {
        region: sub.lift(&region),
        good_edges: lift_edges(&good),
        bad_edges: lift_edges(&bad),
        dir_region,
        verdicts,
        good_edge_order: good_order.iter().map(|e| sub.parent_edge[e.0]).collect(),
        added,
    }
}

/// Winning region for sure-DirFWMP(l, alpha) combined with positive
/// reachability of `target`, together with the good/bad edge sets.
/// Candidate edges are examined in lowest-id order; the final region is
/// order-independent.
pub fn sure_dirfwmp_pos_reach(m: &Mdp, l: u32, alpha: &Rat, target: &VertexSet) -> PosReachResult {
    pos_reach_core(m, WindowKind::Fixed(l), alpha, target, None)
}

/// As [`sure_dirfwmp_pos_reach`] with an explicit candidate priority:
/// `rank[edge_id]` orders the while loop's arbitrary choice.
pub fn sure_dirfwmp_pos_reach_ordered(
    m: &Mdp,
    l: u32,
    alpha: &Rat,
    target: &VertexSet,
    rank: &[usize],
) -> PosReachResult {
    pos_reach_core(m, WindowKind::Fixed(l), alpha, target, Some(rank))
}

/// Bounded-window counterpart of [`sure_dirfwmp_pos_reach`].
pub fn sure_dirbwmp_pos_reach(m: &Mdp, alpha: &Rat, target: &VertexSet) -> PosReachResult {
    pos_reach_core(m, WindowKind::Bounded, alpha, target, None)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("edge source must lie outside the target set")]
    SourceInTarget,
    #[error("edge target must lie in the current region")]
    TargetOutsideRegion,
    #[error("edge already classified")]
    AlreadyClassified,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GadgetRole {
    Base,
    Copy,
    Start,
}

/// The auxiliary MDP deciding whether an edge is good: a copy of the region
/// restricted to good edges is glued onto the original MDP, with a fresh
/// start vertex forcing the queried edge first.
#[derive(Clone, Debug)]
pub struct GadgetMdp {
    pub mdp: Mdp,
    pub start: VertexId,
    /// Gadget vertex to base vertex.
    pub proj: Vec<VertexId>,
    pub role: Vec<GadgetRole>,
}

/// Builds the gadget for edge `e` with respect to the good set. Player
/// copies keep only good out-edges; probabilistic copies keep their full
/// distribution, good edges staying in the copy and the rest dropping to the
/// base; the start vertex is a copy of the edge's source whose queried edge
/// leads into the copy region.
pub fn build_gadget(
    m: &Mdp,
    e: EdgeId,
    good: &EdgeSet,
    region: &VertexSet,
    target: &VertexSet,
) -> GadgetMdp {
    use crate::mdp::MdpBuilder;

    let edge = m.edge(e);
    let (s, t) = (edge.from, edge.to);
    let mut b = MdpBuilder::new();
    let mut proj = Vec::new();
    let mut role = Vec::new();
    let mut used_names: std::collections::HashSet<String> =
        m.vertex_ids().map(|v| m.name(v).to_string()).collect();
    let mut fresh = |base: &str, tag: char, used: &mut std::collections::HashSet<String>| {
        let mut name = format!("{base}{tag}");
        while used.contains(&name) {
            name.push(tag);
        }
        used.insert(name.clone());
        name
    };

    for v in m.vertex_ids() {
        b.vertex(m.name(v), m.owner(v));
        proj.push(v);
        role.push(GadgetRole::Base);
    }
    // Copies for the region outside the target; target copies are merged
    // with their base vertices.
    let mut copy_of = vec![None; m.num_vertices()];
    for v in region.iter() {
        if target.contains(v) {
            continue;
        }
        let name = fresh(m.name(v), '~', &mut used_names);
        let id = b.vertex(&name, m.owner(v));
        copy_of[v.0] = Some(id);
        proj.push(v);
        role.push(GadgetRole::Copy);
    }
    let start_name = fresh(m.name(s), '^', &mut used_names);
    let start = b.vertex(&start_name, m.owner(s));
    proj.push(s);
    role.push(GadgetRole::Start);

    let copy_target = |v: VertexId| copy_of[v.0].unwrap_or(v);

    for ge in m.edge_ids() {
        let edge = m.edge(ge);
        // Base edges always survive.
        b.edge(edge.from, edge.to, edge.payoff.clone(), edge.prob.clone());
    }
    for v in region.iter() {
        let Some(cv) = copy_of[v.0] else { continue };
        for &ge in m.out_edges(v) {
            let edge = m.edge(ge);
            if good.contains(ge) {
                b.edge(cv, copy_target(edge.to), edge.payoff.clone(), edge.prob.clone());
            } else if m.owner(v) == Owner::Random {
                b.edge(cv, edge.to, edge.payoff.clone(), edge.prob.clone());
            }
        }
    }
    b.edge(start, copy_target(t), edge.payoff.clone(), edge.prob.clone());
    if m.owner(s) == Owner::Random {
        for &ge in m.out_edges(s) {
            let other = m.edge(ge);
            if other.to != t {
                b.edge(start, other.to, other.payoff.clone(), other.prob.clone());
            }
        }
    }

    GadgetMdp {
        mdp: b.build().expect("gadget construction preserves validity"),
        start,
        proj,
        role,
    }
}

fn is_good_edge_in(
    m: &Mdp,
    kind: WindowKind,
    alpha: &Rat,
    e: EdgeId,
    good: &EdgeSet,
    region: &VertexSet,
    target: &VertexSet,
) -> bool {
    let gadget = build_gadget(m, e, good, region, target);
    kind.sure_dir_region(&gadget.mdp, alpha).contains(gadget.start)
}

/// Is `e` good with respect to the good set: can the player, starting with
/// `e`, reach the target with positive probability through good edges only
/// while surely closing every window within `l` steps?
pub fn is_good_edge(
    m: &Mdp,
    e: EdgeId,
    good: &EdgeSet,
    region: &VertexSet,
    target: &VertexSet,
    l: u32,
    alpha: &Rat,
) -> Result<bool, GadgetError> {
    let edge = m.edge(e);
    if target.contains(edge.from) {
        return Err(GadgetError::SourceInTarget);
    }
    if !region.contains(edge.to) {
        return Err(GadgetError::TargetOutsideRegion);
    }
    if good.contains(e) {
        return Err(GadgetError::AlreadyClassified);
    }
    Ok(is_good_edge_in(
        m,
        WindowKind::Fixed(l),
        alpha,
        e,
        good,
        region,
        target,
    ))
}

fn sls_core(m: &Mdp, kind: WindowKind, alpha: &Rat, beta: &Rat) -> VertexSet {
    if alpha >= beta {
        return kind.sure_region(m, alpha);
    }
    let w_sure_alpha = kind.sure_region(m, alpha);
    if w_sure_alpha.is_empty() {
        return w_sure_alpha;
    }
    let sub = sub_mdp(m, &w_sure_alpha).expect("sure region induces a subMDP");
    sub.lift(&kind.almost_sure_region(&sub.mdp, beta))
}

/// Winning region for sure-FWMP(l, alpha) combined with limit-sure
/// FWMP(l, beta): the almost-sure region for beta inside the sure region for
/// alpha.
pub fn sls_fwmp(m: &Mdp, l: u32, alpha: &Rat, beta: &Rat) -> VertexSet {
    sls_core(m, WindowKind::Fixed(l), alpha, beta)
}

/// Bounded-window counterpart of [`sls_fwmp`].
pub fn sls_bwmp(m: &Mdp, alpha: &Rat, beta: &Rat) -> VertexSet {
    sls_core(m, WindowKind::Bounded, alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::rational::rat_int;

    fn named_set(m: &Mdp, names: &[&str]) -> VertexSet {
        VertexSet::from_ids(m.num_vertices(), names.iter().map(|n| m.lookup(n).unwrap()))
    }

    #[test]
    fn fig1_sas_region_is_v3_only() {
        let m = instances::fig1_naive();
        let (region, trace) = sas_fwmp(&m, 2, &rat_int(1), &rat_int(2));
        assert_eq!(region, named_set(&m, &["v3"]));
        trace.check_invariants().unwrap();
        assert_eq!(trace.w_sure_alpha, m.all_vertices());
        assert_eq!(trace.w0, named_set(&m, &["v3"]));
        assert_eq!(trace.iterations[0].pos_cpre, named_set(&m, &["v2"]));
    }

    #[test]
    fn fig1_sls_region_is_everything() {
        let m = instances::fig1_naive();
        assert_eq!(sls_fwmp(&m, 2, &rat_int(1), &rat_int(2)), m.all_vertices());
    }

    #[test]
    fn degenerate_thresholds_collapse_to_sure() {
        let m = instances::fig1_naive();
        let (region, trace) = sas_fwmp(&m, 2, &rat_int(1), &rat_int(1));
        assert!(trace.degenerate);
        assert_eq!(region, crate::sure::sure_fwmp(&m, 2, &rat_int(1)).region);
        assert_eq!(sls_fwmp(&m, 2, &rat_int(1), &rat_int(1)), region);
    }

    #[test]
    fn fig3_as_buchi_is_empty() {
        let m = instances::fig3_sdab();
        let t = named_set(&m, &["v1"]);
        assert!(sure_dirfwmp_as_buchi(&m, 2, &rat_int(0), &t).is_empty());
    }

    #[test]
    fn fig3_pos_reach_excludes_v2() {
        let m = instances::fig3_sdab();
        let t = named_set(&m, &["v1"]);
        let pr = sure_dirfwmp_pos_reach(&m, 2, &rat_int(0), &t);
        assert_eq!(pr.region, t);
        assert!(pr.good_edges.is_empty());
    }

    #[test]
    fn pos_reach_with_target_everything() {
        let m = instances::fig3_sdab();
        let pr = sure_dirfwmp_pos_reach(&m, 2, &rat_int(0), &m.all_vertices());
        assert_eq!(pr.region, m.all_vertices());
        assert!(pr.good_edges.is_empty());
    }

    #[test]
    fn as_buchi_trivial_when_everything_is_target() {
        let m = instances::fig4_posreach();
        let r = sure_dirfwmp_as_buchi(&m, 3, &rat_int(-2), &m.all_vertices());
        assert_eq!(r, m.all_vertices());
    }

    #[test]
    fn fig4_pos_reach_reproduces_the_worked_run() {
        let m = instances::fig4_posreach();
        let t = named_set(&m, &["v4"]);
        let pr = sure_dirfwmp_pos_reach(&m, 3, &rat_int(0), &t);
        assert_eq!(pr.region, named_set(&m, &["v1", "v2", "v3", "v4"]));

        let name = |e: EdgeId| {
            let edge = m.edge(e);
            format!("{}->{}", m.name(edge.from), m.name(edge.to))
        };
        let log: Vec<(String, bool)> = pr.verdicts.iter().map(|&(e, ok)| (name(e), ok)).collect();
        let expected = [
            ("v2->v4", true),
            ("v1->v2", false),
            ("v3->v4", true),
            ("v2->v3", true),
            ("v1->v2", true),
            ("v0->v3", false),
        ];
        assert_eq!(
            log,
            expected
                .iter()
                .map(|(n, v)| (n.to_string(), *v))
                .collect::<Vec<_>>()
        );
        assert_eq!(pr.bad_edges.len(), 1);
    }

    #[test]
    fn fig4_region_is_order_independent() {
        let m = instances::fig4_posreach();
        let t = named_set(&m, &["v4"]);
        let base = sure_dirfwmp_pos_reach(&m, 3, &rat_int(0), &t);
        let ne = m.num_edges();
        // A few fixed permutations standing in for arbitrary choice.
        let perms: Vec<Vec<usize>> = vec![
            (0..ne).rev().collect(),
            (0..ne).map(|i| (i * 3 + 1) % ne).collect(),
            (0..ne).map(|i| (i * 5 + 2) % ne).collect(),
            (0..ne).map(|i| (i * 7 + 4) % ne).collect(),
            (0..ne).map(|i| ne - 1 - (i * 3) % ne).collect(),
        ];
        for rank in perms {
            let pr = sure_dirfwmp_pos_reach_ordered(&m, 3, &rat_int(0), &t, &rank);
            assert_eq!(pr.region, base.region);
        }
    }

    #[test]
    fn is_good_edge_checks_preconditions() {
        let m = instances::fig4_posreach();
        let t = named_set(&m, &["v4"]);
        let good = EdgeSet::empty(m.num_edges());
        let e_v4_loop = m.find_edge(m.lookup("v4").unwrap(), m.lookup("v4").unwrap()).unwrap();
        assert_eq!(
            is_good_edge(&m, e_v4_loop, &good, &t, &t, 3, &rat_int(0)),
            Err(GadgetError::SourceInTarget)
        );
        let e_v0_v0 = m.find_edge(m.lookup("v0").unwrap(), m.lookup("v0").unwrap()).unwrap();
        assert_eq!(
            is_good_edge(&m, e_v0_v0, &good, &t, &t, 3, &rat_int(0)),
            Err(GadgetError::TargetOutsideRegion)
        );
    }

    #[test]
    fn gadget_start_has_no_in_edges_and_distributions_survive() {
        let m = instances::fig4_posreach();
        let t = named_set(&m, &["v4"]);
        let region = named_set(&m, &["v2", "v3", "v4"]);
        let good = EdgeSet::from_ids(
            m.num_edges(),
            [
                m.find_edge(m.lookup("v2").unwrap(), m.lookup("v4").unwrap()).unwrap(),
                m.find_edge(m.lookup("v3").unwrap(), m.lookup("v4").unwrap()).unwrap(),
            ],
        );
        let e = m.find_edge(m.lookup("v1").unwrap(), m.lookup("v2").unwrap()).unwrap();
        let g = build_gadget(&m, e, &good, &region, &t);
        assert!(g.mdp.validate().is_empty());
        assert!(g.mdp.in_edges(g.start).is_empty());
        assert_eq!(g.role[g.start.0], GadgetRole::Start);
        // v1 is probabilistic, so the start keeps its full distribution.
        assert_eq!(g.mdp.out_edges(g.start).len(), 2);
    }

    #[test]
    fn fig5_sas_region_is_everything() {
        let m = instances::fig5_memory_fwmp();
        let (region, trace) = sas_fwmp(&m, 2, &rat_int(0), &rat_int(5));
        assert_eq!(region, m.all_vertices());
        trace.check_invariants().unwrap();
        assert_eq!(trace.w0, named_set(&m, &["c"]));
        assert_eq!(trace.iterations[0].pos_cpre, named_set(&m, &["b"]));
        assert_eq!(
            trace.iterations[0].w_sdab,
            named_set(&m, &["v3", "a", "v2", "v1", "b"])
        );
    }

    #[test]
    fn fig6_sas_bwmp_contains_v1() {
        let m = instances::fig6_memory_bwmp();
        let (region, trace) = sas_bwmp(&m, &rat_int(0), &rat_int(5));
        assert!(region.contains(m.lookup("v1").unwrap()));
        trace.check_invariants().unwrap();
    }

    #[test]
    fn sas_is_within_sls_is_within_sure() {
        let m = instances::fig1_naive();
        let (sas, trace) = sas_fwmp(&m, 2, &rat_int(1), &rat_int(2));
        let sls = sls_fwmp(&m, 2, &rat_int(1), &rat_int(2));
        let sure = crate::sure::sure_fwmp(&m, 2, &rat_int(1)).region;
        assert!(sas.is_subset(&sls));
        assert!(sls.is_subset(&sure));
        // The starting region is always kept.
        assert!(trace.w0.is_subset(&sas));
    }
}
