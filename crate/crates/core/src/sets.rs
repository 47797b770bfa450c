//! Compact bitsets over vertex and edge identifiers.
//!
//! Set operations dominate the fixpoint solvers, so both set types are plain
//! word vectors indexed by the dense ids handed out by [`crate::mdp::Mdp`].

use crate::mdp::{EdgeId, VertexId};

#[derive(Clone, PartialEq, Eq, Hash)]
struct BitSet {
    words: Vec<u64>,
    universe: usize,
}

impl BitSet {
    fn new(universe: usize) -> Self {
        BitSet {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    fn full(universe: usize) -> Self {
        let mut s = Self::new(universe);
        for i in 0..universe {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        debug_assert!(i < self.universe);
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        debug_assert!(i < self.universe);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    fn difference_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |&i| self.contains(i))
    }
}

macro_rules! impl_id_set {
    ($set:ident, $id:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Clone, PartialEq, Eq, Hash)]
        pub struct $set(BitSet);

        impl $set {
            pub fn empty(universe: usize) -> Self {
                $set(BitSet::new(universe))
            }

            pub fn full(universe: usize) -> Self {
                $set(BitSet::full(universe))
            }

            pub fn from_ids<I: IntoIterator<Item = $id>>(universe: usize, ids: I) -> Self {
                let mut s = Self::empty(universe);
                for id in ids {
                    s.insert(id);
                }
                s
            }

            pub fn universe(&self) -> usize {
                self.0.universe
            }

            pub fn insert(&mut self, id: $id) {
                self.0.insert(id.0);
            }

            pub fn remove(&mut self, id: $id) {
                self.0.remove(id.0);
            }

            pub fn contains(&self, id: $id) -> bool {
                self.0.contains(id.0)
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.len() == 0
            }

            pub fn union_with(&mut self, other: &Self) {
                self.0.union_with(&other.0);
            }

            pub fn intersect_with(&mut self, other: &Self) {
                self.0.intersect_with(&other.0);
            }

            pub fn difference_with(&mut self, other: &Self) {
                self.0.difference_with(&other.0);
            }

            pub fn union(&self, other: &Self) -> Self {
                let mut s = self.clone();
                s.union_with(other);
                s
            }

            pub fn intersection(&self, other: &Self) -> Self {
                let mut s = self.clone();
                s.intersect_with(other);
                s
            }

            pub fn difference(&self, other: &Self) -> Self {
                let mut s = self.clone();
                s.difference_with(other);
                s
            }

            pub fn complement(&self) -> Self {
                Self::full(self.universe()).difference(self)
            }

            pub fn is_subset(&self, other: &Self) -> bool {
                self.0.is_subset(&other.0)
            }

            /// Ascending id order; everything derived from sets stays
            /// deterministic because of this.
            pub fn iter(&self) -> impl Iterator<Item = $id> + '_ {
                self.0.iter().map($id)
            }
        }

        impl std::fmt::Debug for $set {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.debug_set().entries(self.iter().map(|id| id.0)).finish()
            }
        }
    };
}

impl_id_set!(VertexSet, VertexId, "Subset of the vertices of a specific `Mdp`.");
impl_id_set!(EdgeSet, EdgeId, "Subset of the edges of a specific `Mdp`.");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let mut a = VertexSet::empty(100);
        a.insert(VertexId(3));
        a.insert(VertexId(64));
        a.insert(VertexId(99));
        assert_eq!(a.len(), 3);
        assert!(a.contains(VertexId(64)));
        assert!(!a.contains(VertexId(65)));

        let b = VertexSet::from_ids(100, [VertexId(64)]);
        assert!(b.is_subset(&a));
        assert_eq!(a.intersection(&b), b);
        assert_eq!(a.difference(&b).len(), 2);
        assert_eq!(a.union(&b), a);
        assert_eq!(a.iter().map(|v| v.0).collect::<Vec<_>>(), vec![3, 64, 99]);
        assert_eq!(a.complement().len(), 97);
    }

    #[test]
    fn edge_sets_share_the_same_machinery() {
        let mut e = EdgeSet::empty(5);
        e.insert(EdgeId(4));
        assert!(e.contains(EdgeId(4)));
        assert_eq!(e.complement().len(), 4);
    }
}
