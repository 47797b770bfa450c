//! Almost-sure winning regions: the probabilistic half of the combined
//! solvers.

use crate::graph::{almost_sure_reach_with_strategy, mec_decomposition};
use crate::mdp::{EdgeId, Mdp};
use crate::rational::Rat;
use crate::sets::VertexSet;
use crate::sure::{bwmp_window_bound, sure_fwmp};

#[derive(Clone, Debug)]
pub struct AsSolveResult {
    pub region: VertexSet,
    /// Maximal end components intersecting the sure region.
    pub good_mecs: Vec<VertexSet>,
    /// Memoryless choice for the almost-sure-reach phase, per player vertex.
    pub attractor_hint: Vec<Option<EdgeId>>,
}

/// Almost-sure region for the fixed window mean-payoff objective: label the
/// maximal end components intersecting the sure region as good, then reach
/// them with probability one.
pub fn almost_sure_fwmp(m: &Mdp, l: u32, lambda: &Rat) -> AsSolveResult {
    let sure = sure_fwmp(m, l, lambda).region;
    let mecs = mec_decomposition(m);
    let mut good_union = VertexSet::empty(m.num_vertices());
    let mut good_mecs = Vec::new();
    for mec in mecs {
        if !mec.intersection(&sure).is_empty() {
            good_union.union_with(&mec);
            good_mecs.push(mec);
        }
    }
    let (region, attractor_hint) = almost_sure_reach_with_strategy(m, &good_union);
    AsSolveResult {
        region,
        good_mecs,
        attractor_hint,
    }
}

/// Almost-sure region for the bounded variant, at the collapse length.
pub fn almost_sure_bwmp(m: &Mdp, lambda: &Rat) -> AsSolveResult {
    let l = u32::try_from(bwmp_window_bound(m, lambda))
        .expect("window bound exceeds u32; instance too large for explicit solving");
    almost_sure_fwmp(m, l, lambda)
}

/// Standard almost-sure Buchi region: reach, with probability one, the union
/// of maximal end components that intersect the target.
pub fn almost_sure_buchi(m: &Mdp, target: &VertexSet) -> VertexSet {
    let mut good = VertexSet::empty(m.num_vertices());
    for mec in mec_decomposition(m) {
        if !mec.intersection(target).is_empty() {
            good.union_with(&mec);
        }
    }
    almost_sure_reach_with_strategy(m, &good).0
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
    fn fig1_almost_sure_fwmp() {
        let m = instances::fig1_naive();
        let r = almost_sure_fwmp(&m, 2, &rat_int(2));
        assert_eq!(r.region, m.all_vertices());
        assert_eq!(r.good_mecs, vec![named_set(&m, &["v3"])]);
    }

    #[test]
    fn empty_sure_region_gives_empty_almost_sure_region() {
        let m = instances::fig1_naive();
        // No vertex closes 3-windows at every step forever.
        let r = almost_sure_fwmp(&m, 2, &rat_int(3));
        assert!(r.region.is_empty());
        assert!(r.good_mecs.is_empty());
    }

    #[test]
    fn fig5_almost_sure_fwmp() {
        let m = instances::fig5_memory_fwmp();
        let r = almost_sure_fwmp(&m, 2, &rat_int(5));
        assert_eq!(r.region, m.all_vertices());
        assert_eq!(r.good_mecs, vec![named_set(&m, &["c"])]);
    }

    #[test]
    fn fig6_almost_sure_bwmp() {
        let m = instances::fig6_memory_bwmp();
        let r = almost_sure_bwmp(&m, &rat_int(5));
        assert_eq!(r.region, m.all_vertices());
        assert_eq!(r.good_mecs, vec![named_set(&m, &["c"])]);
    }

    #[test]
    fn almost_sure_contains_sure() {
        for (_, m) in instances::bundled() {
            for lam in [0i64, 1, 2] {
                for l in [1u32, 2, 3] {
                    let sure = crate::sure::sure_fwmp(&m, l, &rat_int(lam)).region;
                    let almost = almost_sure_fwmp(&m, l, &rat_int(lam)).region;
                    assert!(sure.is_subset(&almost));
                    if !almost.is_empty() {
                        assert!(sub_mdp(&m, &almost).is_ok());
                    }
                }
            }
        }
    }

    #[test]
    fn buchi_on_fig3_and_fig1() {
        let m3 = instances::fig3_sdab();
        assert_eq!(
            almost_sure_buchi(&m3, &named_set(&m3, &["v1"])),
            m3.all_vertices()
        );
        let m1 = instances::fig1_naive();
        assert_eq!(
            almost_sure_buchi(&m1, &named_set(&m1, &["v1"])),
            named_set(&m1, &["v1"])
        );
        assert_eq!(almost_sure_buchi(&m1, &m1.all_vertices()), m1.all_vertices());
    }
}
