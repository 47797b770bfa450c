//! Winning regions for sure satisfaction of the window objectives, with
//! probabilistic vertices viewed as adversarial.

use crate::graph::sure_attractor_within;
use crate::mdp::{Mdp, Owner, VertexId};
use crate::objective::{ScaledPayoffs, scaled_w_max};
use crate::rational::Rat;
use crate::sets::VertexSet;

/// Hopeless sentinel for the value iteration; guarded against overflow by
/// never adding two sentinels.
const NEG_INF: i64 = i64::MIN / 4;

#[derive(Clone, Debug)]
pub struct SureSolveResult {
    pub region: VertexSet,
    /// For good-window solves: per vertex, the number of steps within which
    /// the first window provably closes.
    pub witness_steps: Vec<Option<u32>>,
    /// Intermediate regions of the outer fixpoint.
    pub iterations: Vec<VertexSet>,
}

/// Finite-horizon tables of the good-window value iteration.
///
/// `tables[j][v]` is the best scaled running-sum peak the player can enforce
/// within `j` steps from `v`: the optimum over edges of
/// `w(e) + max(0, tables[j-1][target])`, maximizing at player vertices and
/// minimizing at adversarial ones. A vertex closes the window opened now
/// within `j` steps iff `tables[j][v] >= 0`.
///
/// `alive` is the current subgame: edges leaving it are ignored for both
/// players. `ok` is the candidate set inside `alive`: an adversarial edge
/// from `ok` into `alive \ ok` is a win for the adversary, and player edges
/// into `alive \ ok` are never taken.
pub(crate) struct GwTables {
    pub tables: Vec<Vec<i64>>,
}

impl GwTables {
    pub(crate) fn compute(
        m: &Mdp,
        view: &ScaledPayoffs,
        l: u32,
        alive: &VertexSet,
        ok: &VertexSet,
    ) -> Self {
        let n = m.num_vertices();
        let mut tables = Vec::with_capacity(l as usize + 1);
        tables.push(vec![NEG_INF; n]);
        for j in 1..=l as usize {
            let prev = &tables[j - 1];
            let mut cur = vec![NEG_INF; n];
            for v in ok.iter() {
                let mut best: Option<i64> = None;
                let mut dead = false;
                for &e in m.out_edges(v) {
                    let u = m.edge(e).to;
                    if !alive.contains(u) {
                        continue;
                    }
                    if !ok.contains(u) {
                        match m.owner(v) {
                            Owner::Player => continue,
                            Owner::Random => {
                                dead = true;
                                break;
                            }
                        }
                    }
                    let val = view.payoff[e.0] + prev[u.0].max(0);
                    best = Some(match (best, m.owner(v)) {
                        (None, _) => val,
                        (Some(b), Owner::Player) => b.max(val),
                        (Some(b), Owner::Random) => b.min(val),
                    });
                }
                cur[v.0] = if dead { NEG_INF } else { best.unwrap_or(NEG_INF) };
            }
            tables.push(cur);
        }
        GwTables { tables }
    }

    pub(crate) fn wins(&self, v: VertexId) -> bool {
        self.tables[self.tables.len() - 1][v.0] >= 0
    }

    fn first_closing_step(&self, v: VertexId) -> Option<u32> {
        (1..self.tables.len()).find(|&j| self.tables[j][v.0] >= 0).map(|j| j as u32)
    }

    /// The lowest-id edge achieving the optimum at horizon `j`, restricted to
    /// `ok` targets. Used by strategy extraction.
    pub(crate) fn best_edge(
        &self,
        m: &Mdp,
        view: &ScaledPayoffs,
        j: usize,
        v: VertexId,
        alive: &VertexSet,
        ok: &VertexSet,
    ) -> Option<crate::mdp::EdgeId> {
        debug_assert_eq!(m.owner(v), Owner::Player);
        let prev = &self.tables[j.saturating_sub(1)];
        let mut best: Option<(i64, crate::mdp::EdgeId)> = None;
        for &e in m.out_edges(v) {
            let u = m.edge(e).to;
            if !alive.contains(u) || !ok.contains(u) {
                continue;
            }
            let val = view.payoff[e.0] + prev[u.0].max(0);
            best = match best {
                Some((b, be)) if b >= val => Some((b, be)),
                _ => Some((val, e)),
            };
        }
        best.map(|(_, e)| e)
    }
}

/// Vertices from which the player surely closes the window opened now within
/// `l` steps.
pub fn sure_good_win(m: &Mdp, l: u32, lambda: &Rat) -> SureSolveResult {
    assert!(l >= 1);
    let (scaled, view) = ScaledPayoffs::scale(m, lambda).expect("payoffs fit");
    let all = m.all_vertices();
    let gw = GwTables::compute(&scaled, &view, l, &all, &all);
    let region = VertexSet::from_ids(m.num_vertices(), m.vertex_ids().filter(|&v| gw.wins(v)));
    let witness_steps = m.vertex_ids().map(|v| gw.first_closing_step(v)).collect();
    SureSolveResult {
        iterations: vec![region.clone()],
        region,
        witness_steps,
    }
}

pub(crate) fn sure_dir_fwmp_within(
    m: &Mdp,
    view: &ScaledPayoffs,
    l: u32,
    alive: &VertexSet,
) -> (VertexSet, Vec<VertexSet>) {
    let mut ok = alive.clone();
    let mut iterations = Vec::new();
    loop {
        let gw = GwTables::compute(m, view, l, alive, &ok);
        let next = VertexSet::from_ids(m.num_vertices(), ok.iter().filter(|&v| gw.wins(v)));
        iterations.push(next.clone());
        if next == ok {
            return (ok, iterations);
        }
        ok = next;
    }
}

/// Greatest fixpoint of the good-window restriction: the winning region for
/// surely closing every window within `l` steps. The region induces a subMDP.
pub fn sure_dir_fwmp(m: &Mdp, l: u32, lambda: &Rat) -> SureSolveResult {
    assert!(l >= 1);
    let (scaled, view) = ScaledPayoffs::scale(m, lambda).expect("payoffs fit");
    let (region, iterations) = sure_dir_fwmp_within(&scaled, &view, l, &m.all_vertices());
    SureSolveResult {
        witness_steps: vec![None; m.num_vertices()],
        region,
        iterations,
    }
}

/// One round of the prefix-independent solver: within the residual subgame,
/// the direct region and the player attractor toward it.
#[derive(Clone, Debug)]
pub(crate) struct FwmpLayer {
    pub residual: VertexSet,
    pub dir: VertexSet,
    pub attracted: VertexSet,
}

pub(crate) fn sure_fwmp_layers(scaled: &Mdp, view: &ScaledPayoffs, l: u32) -> Vec<FwmpLayer> {
    let mut residual = scaled.all_vertices();
    let mut layers = Vec::new();
    loop {
        if residual.is_empty() {
            break;
        }
        let (dir, _) = sure_dir_fwmp_within(scaled, view, l, &residual);
        let attracted = sure_attractor_within(scaled, &dir, &residual);
        if attracted.is_empty() {
            break;
        }
        let next = residual.difference(&attracted);
        layers.push(FwmpLayer {
            residual: residual.clone(),
            dir,
            attracted,
        });
        residual = next;
    }
    layers
}

/// Winning region for the prefix-independent objective: the player wins from
/// anywhere it can surely attract the token to a region that stays winning
/// directly; iterated on the residual subgame until nothing is added.
pub fn sure_fwmp(m: &Mdp, l: u32, lambda: &Rat) -> SureSolveResult {
    assert!(l >= 1);
    let (scaled, view) = ScaledPayoffs::scale(m, lambda).expect("payoffs fit");
    let mut won = VertexSet::empty(m.num_vertices());
    let mut iterations = Vec::new();
    for layer in sure_fwmp_layers(&scaled, &view, l) {
        won.union_with(&layer.attracted);
        iterations.push(won.clone());
    }
    SureSolveResult {
        witness_steps: vec![None; m.num_vertices()],
        region: won,
        iterations,
    }
}

/// The window length at which bounded-window objectives collapse to
/// fixed-window ones: `|V| * (|V| * w_max + 1)` with the scaled integer
/// `w_max` for the given threshold.
pub fn bwmp_window_bound(m: &Mdp, lambda: &Rat) -> u64 {
    let n = m.num_vertices() as u64;
    let w = scaled_w_max(m, lambda) as u64;
    (n * (n * w + 1)).max(1)
}

fn bound_as_u32(bound: u64) -> u32 {
    u32::try_from(bound).expect("window bound exceeds u32; instance too large for explicit solving")
}

/// Sure winning region for the direct bounded-window objective, via the
/// fixed-window solver at the collapse length.
pub fn sure_dir_bwmp(m: &Mdp, lambda: &Rat) -> SureSolveResult {
    sure_dir_fwmp(m, bound_as_u32(bwmp_window_bound(m, lambda)), lambda)
}

/// Sure winning region for the prefix-independent bounded-window objective.
pub fn sure_bwmp(m: &Mdp, lambda: &Rat) -> SureSolveResult {
    sure_fwmp(m, bound_as_u32(bwmp_window_bound(m, lambda)), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::mdp::sub_mdp;
    use crate::rational::rat_int;

    fn named_set(m: &Mdp, names: &[&str]) -> VertexSet {
        VertexSet::from_ids(m.num_vertices(), names.iter().map(|n| m.lookup(n).unwrap()))
    }

    #[test]
    fn good_win_on_fig3() {
        let m = instances::fig3_sdab();
        let r = sure_good_win(&m, 2, &rat_int(0));
        assert!(r.region.contains(m.lookup("v2").unwrap()));
        assert_eq!(r.witness_steps[m.lookup("v2").unwrap().0], Some(1));
    }

    #[test]
    fn good_win_trivial_cases() {
        let m = instances::fig1_naive();
        // Every vertex whose best edge already meets the threshold wins at l=1.
        let r = sure_good_win(&m, 1, &rat_int(1));
        assert!(r.region.contains(m.lookup("v1").unwrap()));
        assert!(r.region.contains(m.lookup("v3").unwrap()));
        assert!(!r.region.contains(m.lookup("v2").unwrap()));
        // Fig.1 at l=2, lambda=1: v1 wins via the self-loop.
        let r2 = sure_good_win(&m, 2, &rat_int(1));
        assert!(r2.region.contains(m.lookup("v1").unwrap()));
    }

    #[test]
    fn dir_fwmp_on_fig3() {
        let m = instances::fig3_sdab();
        let r = sure_dir_fwmp(&m, 2, &rat_int(0));
        assert_eq!(r.region, m.all_vertices());
    }

    #[test]
    fn dir_fwmp_all_payoffs_above_threshold() {
        let m = instances::fig4_posreach();
        let r = sure_dir_fwmp(&m, 1, &rat_int(-2));
        assert_eq!(r.region, m.all_vertices());
    }

    #[test]
    fn fwmp_on_fig1() {
        let m = instances::fig1_naive();
        assert_eq!(sure_fwmp(&m, 2, &rat_int(1)).region, m.all_vertices());
        assert_eq!(sure_fwmp(&m, 2, &rat_int(2)).region, named_set(&m, &["v3"]));
    }

    #[test]
    fn regions_induce_sub_mdps() {
        for (_, m) in instances::bundled() {
            for lam in [-1i64, 0, 1, 2] {
                for l in [1u32, 2, 3] {
                    for r in [
                        sure_dir_fwmp(&m, l, &rat_int(lam)).region,
                        sure_fwmp(&m, l, &rat_int(lam)).region,
                    ] {
                        if !r.is_empty() {
                            assert!(sub_mdp(&m, &r).is_ok(), "region {r:?} not a subMDP");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dir_region_within_fwmp_region_and_monotone() {
        for (_, m) in instances::bundled() {
            for lam in [0i64, 1] {
                let lam = rat_int(lam);
                for l in [1u32, 2, 3] {
                    let dir = sure_dir_fwmp(&m, l, &lam).region;
                    let fw = sure_fwmp(&m, l, &lam).region;
                    let fw_next = sure_fwmp(&m, l + 1, &lam).region;
                    let fw_easier = sure_fwmp(&m, l, &(lam.clone() - rat_int(1))).region;
                    assert!(dir.is_subset(&fw));
                    assert!(fw.is_subset(&fw_next));
                    assert!(fw.is_subset(&fw_easier));
                }
            }
        }
    }

    #[test]
    fn window_bound_formula() {
        let m = instances::fig6_memory_bwmp();
        assert_eq!(bwmp_window_bound(&m, &rat_int(0)), 164);

        let mut b = crate::mdp::MdpBuilder::new();
        let x = b.vertex("x", Owner::Player);
        let y = b.vertex("y", Owner::Player);
        b.edge(x, y, rat_int(1), None);
        b.edge(y, x, rat_int(-1), None);
        let two = b.build().unwrap();
        assert_eq!(bwmp_window_bound(&two, &rat_int(0)), 6);

        let mut b1 = crate::mdp::MdpBuilder::new();
        let z = b1.vertex("z", Owner::Player);
        b1.edge(z, z, rat_int(0), None);
        let one = b1.build().unwrap();
        assert_eq!(bwmp_window_bound(&one, &rat_int(0)), 1);
    }

    #[test]
    fn bwmp_on_fig6() {
        let m = instances::fig6_memory_bwmp();
        let r = sure_bwmp(&m, &rat_int(0));
        assert!(r.region.contains(m.lookup("v1").unwrap()));
        // Every payoff at or above the threshold wins everywhere.
        let easy = sure_bwmp(&m, &rat_int(-10));
        assert_eq!(easy.region, m.all_vertices());
    }

    #[test]
    fn dir_bwmp_region_stable_under_doubling_the_bound() {
        for (_, m) in [("fig3", instances::fig3_sdab()), ("fig6", instances::fig6_memory_bwmp())] {
            for lam in [0i64, 5] {
                let lam = rat_int(lam);
                let bound = bwmp_window_bound(&m, &lam) as u32;
                let at_bound = sure_dir_fwmp(&m, bound, &lam).region;
                let doubled = sure_dir_fwmp(&m, 2 * bound, &lam).region;
                assert_eq!(at_bound, doubled);
                assert_eq!(sure_dir_bwmp(&m, &lam).region, at_bound);
            }
        }
    }
}
