//! Objective specifications and exact payoff scaling.
//!
//! Scaling replaces every payoff `w` by the integer `L·(b·w − a)` for a
//! threshold `λ = a/b` and `L` the least common multiple of the payoff
//! denominators. Mean payoff at least `λ` over an infix is then exactly a
//! non-negative scaled sum, so every monitor and solver works with integer
//! payoffs against threshold zero.

use crate::mdp::{Mdp, MdpBuilder};
use crate::rational::{rat_to_i64, Rat};
use crate::sets::{EdgeSet, VertexSet};
use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};
use thiserror::Error;

/// Which objective a solver or evaluator should decide.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Objective {
    /// The window opened at the first vertex closes within `l` steps.
    GoodWindow { l: u32, lambda: Rat },
    /// Every window closes within `l` steps.
    DirFwmp { l: u32, lambda: Rat },
    /// From some point on, every window closes within `l` steps.
    Fwmp { l: u32, lambda: Rat },
    /// Some window length bounds every window of the whole play.
    DirBwmp { lambda: Rat },
    /// Some window length eventually bounds every window.
    Bwmp { lambda: Rat },
    /// Limit-average payoff at least `lambda`.
    MeanPayoff { lambda: Rat },
    /// limsup of the partial sums at least `lambda`.
    TotalPayoff { lambda: Rat },
    Reach { target: VertexSet },
    /// Reach the target using only edges of `allowed` until the first visit.
    EdgeRestrictedReach { allowed: EdgeSet, target: VertexSet },
    /// Reach the target within `bound` steps.
    BoundedReach { bound: u32, target: VertexSet },
    Safe { target: VertexSet },
    Buchi { target: VertexSet },
    CoBuchi { target: VertexSet },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ObjectiveError {
    #[error("window length must be at least 1")]
    ZeroWindow,
    #[error("scaled payoff magnitude exceeds i64")]
    ScaleOverflow,
}

impl Objective {
    pub fn check(&self) -> Result<(), ObjectiveError> {
        match self {
            Objective::GoodWindow { l, .. }
            | Objective::DirFwmp { l, .. }
            | Objective::Fwmp { l, .. }
                if *l == 0 =>
            {
                Err(ObjectiveError::ZeroWindow)
            }
            _ => Ok(()),
        }
    }
}

/// Records how payoffs were scaled, so thresholds become zero: each scaled
/// payoff is `factor·w − shift` with `factor = L·b` and `shift = L·a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleCert {
    pub lambda: Rat,
    pub factor: BigInt,
    pub shift: BigInt,
}

/// Replaces every payoff by its scaled integer value. Probabilities and the
/// graph are untouched.
pub fn scale_payoffs(m: &Mdp, lambda: &Rat) -> (Mdp, ScaleCert) {
    let mut l = BigInt::one();
    for e in m.edge_ids() {
        l = l.lcm(m.edge(e).payoff.denom());
    }
    let factor = &l * lambda.denom();
    let shift = &l * lambda.numer();
    let mut b = MdpBuilder::new();
    for v in m.vertex_ids() {
        b.vertex(m.name(v), m.owner(v));
    }
    for e in m.edge_ids() {
        let edge = m.edge(e);
        let scaled = &edge.payoff * Rat::from_integer(factor.clone())
            - Rat::from_integer(shift.clone());
        debug_assert!(scaled.denom().is_one());
        b.edge(edge.from, edge.to, scaled, edge.prob.clone());
    }
    (
        b.build().expect("scaling preserves validity"),
        ScaleCert {
            lambda: lambda.clone(),
            factor,
            shift,
        },
    )
}

/// Integer payoffs of a scaled MDP, cached for the inner loops.
#[derive(Clone, Debug)]
pub struct ScaledPayoffs {
    pub payoff: Vec<i64>,
    pub w_max: i64,
}

impl ScaledPayoffs {
    pub fn of_scaled(m: &Mdp) -> Result<Self, ObjectiveError> {
        let mut payoff = Vec::with_capacity(m.num_edges());
        for e in m.edge_ids() {
            payoff.push(rat_to_i64(&m.edge(e).payoff).ok_or(ObjectiveError::ScaleOverflow)?);
        }
        let w_max = payoff.iter().map(|p| p.abs()).max().unwrap_or(0);
        Ok(ScaledPayoffs { payoff, w_max })
    }

    /// Scales `m` against `lambda` and extracts the integer payoffs.
    pub fn scale(m: &Mdp, lambda: &Rat) -> Result<(Mdp, Self), ObjectiveError> {
        let (scaled, _) = scale_payoffs(m, lambda);
        let view = Self::of_scaled(&scaled)?;
        Ok((scaled, view))
    }
}

/// Maximum absolute scaled payoff for the threshold, as an integer.
pub fn scaled_w_max(m: &Mdp, lambda: &Rat) -> i64 {
    let (_, view) = ScaledPayoffs::scale(m, lambda).expect("desk-scale payoffs fit i64");
    view.w_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Owner;
    use crate::rational::{rat, rat_int};

    fn line_mdp(payoffs: &[Rat]) -> Mdp {
        let mut b = MdpBuilder::new();
        let n = payoffs.len();
        let vs: Vec<_> = (0..n).map(|i| b.vertex(&format!("x{i}"), Owner::Player)).collect();
        for (i, p) in payoffs.iter().enumerate() {
            b.edge(vs[i], vs[(i + 1) % n], p.clone(), None);
        }
        b.build().unwrap()
    }

    fn payoffs_of(m: &Mdp) -> Vec<Rat> {
        m.edge_ids().map(|e| m.edge(e).payoff.clone()).collect()
    }

    #[test]
    fn integer_scaling() {
        let m = line_mdp(&[rat_int(1), rat_int(-1), rat_int(2)]);
        let (s1, _) = scale_payoffs(&m, &rat_int(1));
        assert_eq!(payoffs_of(&s1), vec![rat_int(0), rat_int(-2), rat_int(1)]);
        let (s2, _) = scale_payoffs(&m, &rat_int(2));
        assert_eq!(payoffs_of(&s2), vec![rat_int(-1), rat_int(-3), rat_int(0)]);
    }

    #[test]
    fn fractional_scaling_clears_denominators() {
        let m = line_mdp(&[rat(1, 2)]);
        let (s, cert) = scale_payoffs(&m, &rat(1, 3));
        assert_eq!(payoffs_of(&s), vec![rat_int(1)]);
        assert_eq!(cert.factor, BigInt::from(6));
        assert_eq!(cert.shift, BigInt::from(2));
    }

    #[test]
    fn zero_window_rejected() {
        let obj = Objective::Fwmp { l: 0, lambda: rat_int(0) };
        assert_eq!(obj.check(), Err(ObjectiveError::ZeroWindow));
    }
}
