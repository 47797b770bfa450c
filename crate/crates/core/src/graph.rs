//! Graph-theoretic primitives shared by every solver: sure attractors, sure
//! safety, positive controllable predecessors, maximal end components, and
//! almost-sure reachability.

use crate::mdp::{EdgeId, Mdp, Owner, VertexId};
use crate::sets::VertexSet;

/// Least fixpoint containing `target`: player vertices join with one
/// out-neighbour inside, probabilistic vertices join once all out-neighbours
/// are inside. Equals the winning region for sure reachability of `target`.
pub fn sure_attractor(m: &Mdp, target: &VertexSet) -> VertexSet {
    sure_attractor_within(m, target, &m.all_vertices())
}

/// Attractor restricted to `within`: only vertices of `within` may join and
/// only edges staying in `within` count. `target` is intersected with
/// `within` first.
pub fn sure_attractor_within(m: &Mdp, target: &VertexSet, within: &VertexSet) -> VertexSet {
    let mut attr = target.intersection(within);
    let mut queue: Vec<VertexId> = attr.iter().collect();
    // Count of in-`within` successors not yet attracted, per probabilistic vertex.
    let mut pending: Vec<usize> = m
        .vertex_ids()
        .map(|v| {
            if within.contains(v) && m.owner(v) == Owner::Random {
                m.out_neighbours(v)
                    .filter(|u| within.contains(*u) && !attr.contains(*u))
                    .count()
            } else {
                usize::MAX
            }
        })
        .collect();
    while let Some(v) = queue.pop() {
        for &e in m.in_edges(v) {
            let u = m.edge(e).from;
            if !within.contains(u) || attr.contains(u) {
                continue;
            }
            match m.owner(u) {
                Owner::Player => {
                    attr.insert(u);
                    queue.push(u);
                }
                Owner::Random => {
                    pending[u.0] -= 1;
                    if pending[u.0] == 0 {
                        attr.insert(u);
                        queue.push(u);
                    }
                }
            }
        }
    }
    attr
}

/// Extracts the memoryless attractor strategy: for each player vertex of the
/// attractor (outside the target) the lowest-id edge into a strictly closer
/// layer of the fixpoint.
pub fn sure_attractor_strategy(m: &Mdp, target: &VertexSet, within: &VertexSet) -> Vec<Option<EdgeId>> {
    let attr = sure_attractor_within(m, target, within);
    // Rank by BFS layers of the fixpoint.
    let mut rank = vec![usize::MAX; m.num_vertices()];
    for v in target.intersection(within).iter() {
        rank[v.0] = 0;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for v in attr.iter() {
            if rank[v.0] == 0 {
                continue;
            }
            let candidate = match m.owner(v) {
                Owner::Player => m
                    .out_neighbours(v)
                    .filter(|u| within.contains(*u) && attr.contains(*u))
                    .map(|u| rank[u.0])
                    .min(),
                Owner::Random => {
                    let ranks: Vec<usize> = m
                        .out_neighbours(v)
                        .filter(|u| within.contains(*u))
                        .map(|u| rank[u.0])
                        .collect();
                    if ranks.iter().any(|&r| r == usize::MAX) {
                        None
                    } else {
                        ranks.iter().max().copied()
                    }
                }
            };
            if let Some(r) = candidate {
                if r != usize::MAX && r.saturating_add(1) < rank[v.0] {
                    rank[v.0] = r + 1;
                    changed = true;
                }
            }
        }
    }
    let mut strategy = vec![None; m.num_vertices()];
    for v in attr.iter() {
        if m.owner(v) != Owner::Player || target.contains(v) {
            continue;
        }
        strategy[v.0] = m
            .out_edges(v)
            .iter()
            .copied()
            .filter(|&e| {
                let u = m.edge(e).to;
                within.contains(u) && attr.contains(u) && rank[u.0] < rank[v.0]
            })
            .next();
    }
    strategy
}

/// Greatest subset of `safe` in which the player can keep the token forever:
/// probabilistic vertices must have all out-neighbours inside, player
/// vertices at least one.
pub fn sure_safe(m: &Mdp, safe: &VertexSet) -> VertexSet {
    let mut current = safe.clone();
    loop {
        let mut removed = Vec::new();
        for v in current.iter() {
            let keep = match m.owner(v) {
                Owner::Player => m.out_neighbours(v).any(|u| current.contains(u)),
                Owner::Random => m.out_neighbours(v).all(|u| current.contains(u)),
            };
            if !keep {
                removed.push(v);
            }
        }
        if removed.is_empty() {
            return current;
        }
        for v in removed {
            current.remove(v);
        }
    }
}

/// Probabilistic vertices outside `w` with at least one out-neighbour in `w`
/// and at least one outside: the token enters `w` from them with positive
/// probability but not surely.
pub fn pos_cpre(m: &Mdp, w: &VertexSet) -> VertexSet {
    pos_cpre_within(m, w, &m.all_vertices())
}

pub fn pos_cpre_within(m: &Mdp, w: &VertexSet, within: &VertexSet) -> VertexSet {
    let mut out = VertexSet::empty(m.num_vertices());
    for v in within.iter() {
        if m.owner(v) != Owner::Random || w.contains(v) {
            continue;
        }
        let mut some_in = false;
        let mut some_out = false;
        for u in m.out_neighbours(v) {
            if !within.contains(u) {
                continue;
            }
            if w.contains(u) {
                some_in = true;
            } else {
                some_out = true;
            }
        }
        if some_in && some_out {
            out.insert(v);
        }
    }
    out
}

/// Iterative Tarjan over the subgraph induced by `within` (self-contained so
/// the verification oracle can keep its own graph machinery separate).
fn sccs_within(m: &Mdp, within: &VertexSet) -> Vec<Vec<VertexId>> {
    let n = m.num_vertices();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<VertexId> = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    enum Frame {
        Enter(VertexId),
        Resume(VertexId, usize),
    }

    for root in within.iter() {
        if index[root.0] != usize::MAX {
            continue;
        }
        let mut call = vec![Frame::Enter(root)];
        while let Some(frame) = call.pop() {
            match frame {
                Frame::Enter(v) => {
                    index[v.0] = next_index;
                    low[v.0] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v.0] = true;
                    call.push(Frame::Resume(v, 0));
                }
                Frame::Resume(v, mut i) => {
                    let outs = m.out_edges(v);
                    let mut descended = false;
                    while i < outs.len() {
                        let u = m.edge(outs[i]).to;
                        i += 1;
                        if !within.contains(u) {
                            continue;
                        }
                        if index[u.0] == usize::MAX {
                            call.push(Frame::Resume(v, i));
                            call.push(Frame::Enter(u));
                            descended = true;
                            break;
                        } else if on_stack[u.0] {
                            low[v.0] = low[v.0].min(index[u.0]);
                        }
                    }
                    if descended {
                        continue;
                    }
                    if low[v.0] == index[v.0] {
                        let mut comp = Vec::new();
                        loop {
                            let u = stack.pop().unwrap();
                            on_stack[u.0] = false;
                            comp.push(u);
                            if u == v {
                                break;
                            }
                        }
                        comp.sort();
                        components.push(comp);
                    } else if let Some(Frame::Resume(parent, _)) = call.last() {
                        low[parent.0] = low[parent.0].min(low[v.0]);
                    }
                }
            }
        }
    }
    components.sort_by_key(|c| c[0]);
    components
}

/// Maximal end components: pairwise-disjoint strongly connected sets that
/// induce subMDPs, by the standard iterative SCC-pruning algorithm.
pub fn mec_decomposition(m: &Mdp) -> Vec<VertexSet> {
    let mut work: Vec<VertexSet> = vec![m.all_vertices()];
    let mut mecs: Vec<VertexSet> = Vec::new();
    while let Some(cand) = work.pop() {
        if cand.is_empty() {
            continue;
        }
        for comp in sccs_within(m, &cand) {
            let mut set = VertexSet::from_ids(m.num_vertices(), comp.iter().copied());
            // Prune vertices that no EC inside this component can contain.
            loop {
                let mut removed = Vec::new();
                for v in set.iter() {
                    let ok = match m.owner(v) {
                        Owner::Player => m.out_neighbours(v).any(|u| set.contains(u)),
                        Owner::Random => m.out_neighbours(v).all(|u| set.contains(u)),
                    };
                    if !ok {
                        removed.push(v);
                    }
                }
                if removed.is_empty() {
                    break;
                }
                for v in removed {
                    set.remove(v);
                }
            }
            if set.is_empty() {
                continue;
            }
            if set.len() == comp.len() && is_strongly_connected_with_edge(m, &set) {
                mecs.push(set);
            } else {
                // Something was pruned (or the component is a trivial
                // singleton); re-decompose the rest.
                if set.len() == comp.len() {
                    continue; // trivial SCC without a self-loop
                }
                work.push(set);
            }
        }
    }
    mecs.sort_by_key(|s| s.iter().next().map(|v| v.0).unwrap_or(usize::MAX));
    mecs
}

fn is_strongly_connected_with_edge(m: &Mdp, set: &VertexSet) -> bool {
    if set.len() == 1 {
        let v = set.iter().next().unwrap();
        return m.out_neighbours(v).any(|u| u == v);
    }
    sccs_within(m, set).len() == 1
}

/// Vertices from which the player has a strategy reaching `target` with
/// probability one, by the standard iterative removal construction.
pub fn almost_sure_reach(m: &Mdp, target: &VertexSet) -> VertexSet {
    almost_sure_reach_with_strategy(m, target).0
}

/// As [`almost_sure_reach`], also returning a memoryless witness: for player
/// vertices in the region, the lowest-id edge that decreases the distance
/// rank of the final inner fixpoint.
pub fn almost_sure_reach_with_strategy(
    m: &Mdp,
    target: &VertexSet,
) -> (VertexSet, Vec<Option<EdgeId>>) {
    let mut universe = m.all_vertices();
    let mut rank: Vec<usize>;
    loop {
        // Inner fixpoint: positive reachability of `target` while the play
        // (and every probabilistic branch) stays inside `universe`.
        let mut reach = target.intersection(&universe);
        rank = vec![usize::MAX; m.num_vertices()];
        for v in reach.iter() {
            rank[v.0] = 0;
        }
        let mut frontier: Vec<VertexId> = reach.iter().collect();
        let mut depth = 0usize;
        while !frontier.is_empty() {
            depth += 1;
            let mut next = Vec::new();
            for &v in &frontier {
                for &e in m.in_edges(v) {
                    let u = m.edge(e).from;
                    if !universe.contains(u) || reach.contains(u) {
                        continue;
                    }
                    let joins = match m.owner(u) {
                        Owner::Player => true,
                        Owner::Random => m.out_neighbours(u).all(|x| universe.contains(x)),
                    };
                    if joins {
                        reach.insert(u);
                        rank[u.0] = depth;
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        if reach == universe {
            break;
        }
        universe = reach;
        if universe.is_empty() {
            break;
        }
    }
    let mut strategy = vec![None; m.num_vertices()];
    for v in universe.iter() {
        if m.owner(v) != Owner::Player || target.contains(v) {
            continue;
        }
        strategy[v.0] = m
            .out_edges(v)
            .iter()
            .copied()
            .find(|&e| {
                let u = m.edge(e).to;
                universe.contains(u) && rank[u.0] < rank[v.0]
            });
    }
    (universe, strategy)
}
