//! Ultimately-periodic plays and exact objective evaluation on them.

use crate::mdp::{EdgeId, Mdp, VertexId};
use crate::monitor::{monitor_step, WindowMonitorState};
use crate::objective::{Objective, ScaledPayoffs};
use crate::rational::Rat;
use num::{Signed, Zero};
use std::collections::HashMap;
use thiserror::Error;

/// A lasso play: `stem` followed by `cycle` repeated forever. The stem may be
/// empty; the cycle may not.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Lasso {
    pub stem: Vec<VertexId>,
    pub cycle: Vec<VertexId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LassoError {
    #[error("cycle must be nonempty")]
    EmptyCycle,
    #[error("missing edge {0} -> {1}")]
    MissingEdge(String, String),
}

impl Lasso {
    pub fn new(stem: Vec<VertexId>, cycle: Vec<VertexId>) -> Self {
        Lasso { stem, cycle }
    }

    /// Edge-consistency against `m`: consecutive stem vertices, the stem-to-
    /// cycle hop, consecutive cycle vertices, and the wrap-around must all be
    /// edges.
    pub fn check(&self, m: &Mdp) -> Result<(), LassoError> {
        if self.cycle.is_empty() {
            return Err(LassoError::EmptyCycle);
        }
        let pairs = self.edge_pairs();
        for (a, b) in pairs {
            if m.find_edge(a, b).is_none() {
                return Err(LassoError::MissingEdge(
                    m.name(a).to_string(),
                    m.name(b).to_string(),
                ));
            }
        }
        Ok(())
    }

    /// All distinct consecutive pairs of the play: stem edges, the hop into
    /// the cycle, cycle edges, and the wrap-around edge.
    fn edge_pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut pairs = Vec::new();
        for w in self.stem.windows(2) {
            pairs.push((w[0], w[1]));
        }
        if let Some(&last) = self.stem.last() {
            pairs.push((last, self.cycle[0]));
        }
        for w in self.cycle.windows(2) {
            pairs.push((w[0], w[1]));
        }
        pairs.push((*self.cycle.last().unwrap(), self.cycle[0]));
        pairs
    }

    /// Vertex at play position `i`.
    pub fn vertex_at(&self, i: usize) -> VertexId {
        if i < self.stem.len() {
            self.stem[i]
        } else {
            self.cycle[(i - self.stem.len()) % self.cycle.len()]
        }
    }

    /// Number of edges before the play becomes periodic.
    pub fn stem_edges(&self) -> usize {
        self.stem.len()
    }

    /// Edge ids of the play, `count` of them from position 0.
    pub fn edges(&self, m: &Mdp, count: usize) -> Vec<EdgeId> {
        (0..count)
            .map(|i| {
                m.find_edge(self.vertex_at(i), self.vertex_at(i + 1))
                    .expect("lasso checked")
            })
            .collect()
    }

    /// Scaled integer payoffs of the play, `count` of them from position 0.
    pub fn scaled_payoffs(&self, m: &Mdp, view: &ScaledPayoffs, count: usize) -> Vec<i64> {
        self.edges(m, count)
            .into_iter()
            .map(|e| view.payoff[e.0])
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error(transparent)]
    Lasso(#[from] LassoError),
    #[error(transparent)]
    Objective(#[from] crate::objective::ObjectiveError),
}

/// Exact truth value of `obj` on the lasso play.
pub fn eval_on_lasso(m: &Mdp, lasso: &Lasso, obj: &Objective) -> Result<bool, EvalError> {
    lasso.check(m)?;
    obj.check()?;
    let s = lasso.stem_edges();
    let c = lasso.cycle.len();
    Ok(match obj {
        Objective::GoodWindow { l, lambda } => {
            let (scaled, view) = ScaledPayoffs::scale(m, lambda)?;
            let payoffs = lasso.scaled_payoffs(&scaled, &view, *l as usize);
            let mut sum = 0i64;
            payoffs.iter().any(|p| {
                sum += p;
                sum >= 0
            })
        }
        Objective::DirFwmp { l, lambda } => {
            monitor_verdict(m, lasso, *l, lambda)?.direct
        }
        Objective::Fwmp { l, lambda } => monitor_verdict(m, lasso, *l, lambda)?.eventual,
        Objective::DirBwmp { lambda } => {
            let (scaled, view) = ScaledPayoffs::scale(m, lambda)?;
            every_window_eventually_closes(lasso, &scaled, &view)
        }
        Objective::Bwmp { lambda } => {
            let (scaled, view) = ScaledPayoffs::scale(m, lambda)?;
            let l_c = cycle_window_bound(lasso, &scaled, &view);
            monitor_verdict(m, lasso, l_c, lambda)?.eventual
        }
        Objective::MeanPayoff { lambda } => {
            let sum = cycle_payoff_sum(m, lasso);
            sum / Rat::from_integer(c.into()) >= *lambda
        }
        Objective::TotalPayoff { lambda } => {
            let cycle_sum = cycle_payoff_sum(m, lasso);
            if cycle_sum.is_positive() {
                true
            } else if cycle_sum.is_zero() {
                // Prefix sums in the periodic part recur forever; the limsup
                // is their maximum over one full cycle pass.
                let edges = lasso.edges(m, s + c);
                let mut sum = Rat::zero();
                let mut best: Option<Rat> = None;
                for (i, e) in edges.iter().enumerate() {
                    sum += &m.edge(*e).payoff;
                    if i >= s {
                        best = Some(match best {
                            Some(b) if b >= sum => b,
                            _ => sum.clone(),
                        });
                    }
                }
                best.expect("cycle nonempty") >= *lambda
            } else {
                false
            }
        }
        Objective::Reach { target } => (0..s + c).any(|i| target.contains(lasso.vertex_at(i))),
        Objective::BoundedReach { bound, target } => {
            (0..=*bound as usize).any(|i| target.contains(lasso.vertex_at(i)))
        }
        Objective::EdgeRestrictedReach { allowed, target } => {
            let edges = lasso.edges(m, s + c + 1);
            let mut ok = false;
            for i in 0..=s + c {
                if target.contains(lasso.vertex_at(i)) {
                    ok = true;
                    break;
                }
                if !allowed.contains(edges[i]) {
                    break;
                }
            }
            ok
        }
        Objective::Safe { target } => (0..s + c).all(|i| target.contains(lasso.vertex_at(i))),
        Objective::Buchi { target } => lasso.cycle.iter().any(|v| target.contains(*v)),
        Objective::CoBuchi { target } => lasso.cycle.iter().all(|v| target.contains(*v)),
    })
}

struct MonitorVerdict {
    direct: bool,
    eventual: bool,
}

/// Runs the window monitor along the play until its state repeats at the
/// same cycle position. The monitor resets at least every `l` steps and the
/// trajectory after a reset depends only on the cycle position, so the run
/// is periodic within `stem + (cycle+2)·l` steps.
fn monitor_verdict(m: &Mdp, lasso: &Lasso, l: u32, lambda: &Rat) -> Result<MonitorVerdict, EvalError> {
    let (scaled, view) = ScaledPayoffs::scale(m, lambda)?;
    let s = lasso.stem_edges();
    let c = lasso.cycle.len();
    let horizon = s + (c + 2) * l as usize + 1;
    let payoffs = lasso.scaled_payoffs(&scaled, &view, horizon);

    let mut st = WindowMonitorState::initial();
    let mut overflow_steps = Vec::new();
    let mut seen: HashMap<(usize, u32, i64), usize> = HashMap::new();
    let mut period = None;
    for (i, p) in payoffs.iter().enumerate() {
        if i >= s {
            let key = ((i - s) % c, st.steps, st.sum);
            if let Some(&first) = seen.get(&key) {
                period = Some((first, i));
                break;
            }
            seen.insert(key, i);
        }
        st = monitor_step(st, *p, l);
        if st.overflow {
            overflow_steps.push(i);
        }
    }
    let (loop_start, loop_end) = period.expect("monitor trajectory must repeat within horizon");
    Ok(MonitorVerdict {
        direct: overflow_steps.is_empty(),
        eventual: !overflow_steps
            .iter()
            .any(|&t| t >= loop_start && t < loop_end),
    })
}

/// Does every window of the play eventually close? With non-positive cycle
/// sum the supremum of forward partial sums is reached within two extra
/// cycle passes; with positive cycle sum sums diverge and every window
/// closes.
fn every_window_eventually_closes(lasso: &Lasso, scaled: &Mdp, view: &ScaledPayoffs) -> bool {
    let s = lasso.stem_edges();
    let c = lasso.cycle.len();
    let payoffs = lasso.scaled_payoffs(scaled, view, s + 4 * c);
    let cycle_sum: i64 = payoffs[s..s + c].iter().sum();
    if cycle_sum > 0 {
        return true;
    }
    for start in 0..s + c {
        // Forward sums from `start`: anything after the remaining stem plus
        // two full cycle passes only adds cycle sums <= 0.
        let lookahead = s.saturating_sub(start) + 3 * c;
        let mut sum = 0i64;
        let mut closes = false;
        for p in payoffs[start..].iter().take(lookahead) {
            sum += p;
            if sum >= 0 {
                closes = true;
                break;
            }
        }
        if !closes {
            return false;
        }
    }
    true
}

/// The cycle-local window bound: every bounded-window question on the lasso
/// reduces to the fixed-window objective at this length.
pub fn cycle_window_bound(lasso: &Lasso, scaled: &Mdp, view: &ScaledPayoffs) -> u32 {
    let s = lasso.stem_edges();
    let c = lasso.cycle.len() as u64;
    let w = lasso
        .scaled_payoffs(scaled, view, s + lasso.cycle.len())
        .into_iter()
        .skip(s)
        .map(|p| p.unsigned_abs())
        .max()
        .unwrap_or(0);
    (c * (c * w + 1)).max(1).try_into().unwrap_or(u32::MAX)
}

fn cycle_payoff_sum(m: &Mdp, lasso: &Lasso) -> Rat {
    let s = lasso.stem_edges();
    let c = lasso.cycle.len();
    lasso
        .edges(m, s + c)
        .into_iter()
        .skip(s)
        .map(|e| m.edge(e).payoff.clone())
        .fold(Rat::zero(), |a, b| a + b)
}

/// Brute-force direct fixed-window evaluation by explicit window
/// enumeration; the independent oracle for the monitor-based evaluator.
pub fn brute_dir_fwmp_on_lasso(m: &Mdp, lasso: &Lasso, l: u32, lambda: &Rat) -> bool {
    let (scaled, view) = ScaledPayoffs::scale(m, lambda).expect("scaled payoffs fit");
    let s = lasso.stem_edges();
    let c = lasso.cycle.len();
    let payoffs = lasso.scaled_payoffs(&scaled, &view, s + c + l as usize);
    (0..s + c).all(|i| window_closes(&payoffs, i, l))
}

/// Brute-force prefix-independent fixed-window evaluation: only windows
/// opening in the periodic part matter, and each of them recurs forever.
pub fn brute_fwmp_on_lasso(m: &Mdp, lasso: &Lasso, l: u32, lambda: &Rat) -> bool {
    let (scaled, view) = ScaledPayoffs::scale(m, lambda).expect("scaled payoffs fit");
    let s = lasso.stem_edges();
    let c = lasso.cycle.len();
    let payoffs = lasso.scaled_payoffs(&scaled, &view, s + c + l as usize);
    (s..s + c).all(|i| window_closes(&payoffs, i, l))
}

fn window_closes(payoffs: &[i64], start: usize, l: u32) -> bool {
    let mut sum = 0i64;
    payoffs[start..start + l as usize].iter().any(|p| {
        sum += p;
        sum >= 0
    })
}

/// True iff the lasso's memberships respect the inclusion chains
/// direct ⊆ prefix-independent ⊆ bounded ⊆ mean payoff, monotonicity in the
/// window length, and antitonicity in the threshold.
pub fn inclusion_chain_check(m: &Mdp, lasso: &Lasso, l: u32, lambda: &Rat) -> Result<bool, EvalError> {
    let dir = eval_on_lasso(m, lasso, &Objective::DirFwmp { l, lambda: lambda.clone() })?;
    let fw = eval_on_lasso(m, lasso, &Objective::Fwmp { l, lambda: lambda.clone() })?;
    let dirb = eval_on_lasso(m, lasso, &Objective::DirBwmp { lambda: lambda.clone() })?;
    let bw = eval_on_lasso(m, lasso, &Objective::Bwmp { lambda: lambda.clone() })?;
    let mp = eval_on_lasso(m, lasso, &Objective::MeanPayoff { lambda: lambda.clone() })?;
    let fw_longer = eval_on_lasso(m, lasso, &Objective::Fwmp { l: l + 1, lambda: lambda.clone() })?;
    let easier = lambda.clone() - Rat::from_integer(1.into());
    let fw_easier = eval_on_lasso(m, lasso, &Objective::Fwmp { l, lambda: easier })?;
    let implies = |a: bool, b: bool| !a || b;
    Ok(implies(dir, fw)
        && implies(fw, bw)
        && implies(bw, mp)
        && implies(dir, dirb)
        && implies(dirb, bw)
        && implies(fw, fw_longer)
        && implies(fw, fw_easier))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::rational::{rat_int, Rat};
    use crate::sets::VertexSet;

    fn lasso(m: &Mdp, stem: &[&str], cycle: &[&str]) -> Lasso {
        Lasso::new(
            stem.iter().map(|n| m.lookup(n).unwrap()).collect(),
            cycle.iter().map(|n| m.lookup(n).unwrap()).collect(),
        )
    }

    #[test]
    fn fig1_stem_to_v3_satisfies_fwmp_2_2() {
        let m = instances::fig1_naive();
        let play = lasso(&m, &["v1", "v2"], &["v3"]);
        assert!(eval_on_lasso(&m, &play, &Objective::Fwmp { l: 2, lambda: rat_int(2) }).unwrap());
    }

    #[test]
    fn fig1_ping_pong_fails_fwmp_2_1() {
        let m = instances::fig1_naive();
        let play = lasso(&m, &[], &["v1", "v2"]);
        assert!(!eval_on_lasso(&m, &play, &Objective::Fwmp { l: 2, lambda: rat_int(1) }).unwrap());
        // The self-loop on v1 satisfies it.
        let stay = lasso(&m, &[], &["v1"]);
        assert!(eval_on_lasso(&m, &stay, &Objective::Fwmp { l: 2, lambda: rat_int(1) }).unwrap());
    }

    #[test]
    fn safety_of_everything_is_trivially_true() {
        let m = instances::fig1_naive();
        let play = lasso(&m, &["v1", "v2"], &["v3"]);
        let obj = Objective::Safe { target: m.all_vertices() };
        assert!(eval_on_lasso(&m, &play, &obj).unwrap());
    }

    #[test]
    fn inconsistent_lasso_is_rejected() {
        let m = instances::fig1_naive();
        let play = lasso(&m, &["v3"], &["v1"]);
        assert!(matches!(
            eval_on_lasso(&m, &play, &Objective::MeanPayoff { lambda: rat_int(0) }),
            Err(EvalError::Lasso(LassoError::MissingEdge(_, _)))
        ));
    }

    #[test]
    fn fwmp_monotone_in_window_length() {
        let m = instances::fig1_naive();
        let play = lasso(&m, &[], &["v1", "v2"]);
        let minus_one = rat_int(-1);
        let at2 = eval_on_lasso(&m, &play, &Objective::Fwmp { l: 2, lambda: minus_one.clone() }).unwrap();
        let at3 = eval_on_lasso(&m, &play, &Objective::Fwmp { l: 3, lambda: minus_one }).unwrap();
        assert!(!at2 || at3);
    }

    #[test]
    fn chain_holds_on_handpicked_lassos() {
        let m = instances::fig1_naive();
        for (stem, cycle) in [
            (vec![], vec!["v1"]),
            (vec![], vec!["v1", "v2"]),
            (vec!["v1", "v2"], vec!["v3"]),
            (vec!["v1"], vec!["v1", "v2"]),
        ] {
            let play = lasso(&m, &stem, &cycle);
            for lam in [-1i64, 0, 1, 2] {
                for l in [1u32, 2, 3] {
                    assert!(inclusion_chain_check(&m, &play, l, &rat_int(lam)).unwrap());
                }
            }
        }
    }

    #[test]
    fn total_payoff_cases() {
        let m = instances::fig1_naive();
        // Positive cycle sum: any threshold is met.
        let play = lasso(&m, &["v1", "v2"], &["v3"]);
        assert!(eval_on_lasso(&m, &play, &Objective::TotalPayoff { lambda: rat_int(1000) }).unwrap());
        // Negative cycle sum: never met.
        let pp = lasso(&m, &[], &["v1", "v2"]);
        assert!(!eval_on_lasso(&m, &pp, &Objective::TotalPayoff { lambda: rat_int(-1000) }).unwrap());
    }

    #[test]
    fn zero_sum_cycle_total_payoff_uses_peak() {
        use crate::mdp::{MdpBuilder, Owner};
        let mut b = MdpBuilder::new();
        let x = b.vertex("x", Owner::Player);
        let y = b.vertex("y", Owner::Player);
        b.edge(x, y, rat_int(3), None);
        b.edge(y, x, rat_int(-3), None);
        let m = b.build().unwrap();
        let play = Lasso::new(vec![], vec![x, y]);
        assert!(eval_on_lasso(&m, &play, &Objective::TotalPayoff { lambda: rat_int(3) }).unwrap());
        assert!(!eval_on_lasso(&m, &play, &Objective::TotalPayoff { lambda: rat_int(4) }).unwrap());
    }

    #[test]
    fn edge_restricted_reach() {
        let m = instances::fig1_naive();
        let v3 = VertexSet::from_ids(m.num_vertices(), [m.lookup("v3").unwrap()]);
        let play = lasso(&m, &["v1", "v2"], &["v3"]);
        let all_edges = crate::sets::EdgeSet::full(m.num_edges());
        let obj = Objective::EdgeRestrictedReach { allowed: all_edges, target: v3.clone() };
        assert!(eval_on_lasso(&m, &play, &obj).unwrap());
        let no_edges = crate::sets::EdgeSet::empty(m.num_edges());
        let obj2 = Objective::EdgeRestrictedReach { allowed: no_edges, target: v3 };
        assert!(!eval_on_lasso(&m, &play, &obj2).unwrap());
    }

    #[test]
    fn monitor_route_matches_brute_force_on_small_grid() {
        let m = instances::fig1_naive();
        let plays = [
            lasso(&m, &[], &["v1"]),
            lasso(&m, &[], &["v1", "v2"]),
            lasso(&m, &["v1"], &["v1", "v2"]),
            lasso(&m, &["v1", "v2"], &["v3"]),
            lasso(&m, &["v1", "v2", "v1"], &["v1", "v2"]),
        ];
        for play in &plays {
            for l in 1..=4u32 {
                for lam in [-2i64, -1, 0, 1, 2] {
                    let lam = Rat::from_integer(lam.into());
                    let dir = eval_on_lasso(&m, play, &Objective::DirFwmp { l, lambda: lam.clone() }).unwrap();
                    let fw = eval_on_lasso(&m, play, &Objective::Fwmp { l, lambda: lam.clone() }).unwrap();
                    assert_eq!(dir, brute_dir_fwmp_on_lasso(&m, play, l, &lam));
                    assert_eq!(fw, brute_fwmp_on_lasso(&m, play, l, &lam));
                }
            }
        }
    }
}
