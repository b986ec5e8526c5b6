//! Binary relations over a finite set of worlds `0..n`, stored as bit rows.

use std::fmt;

use fixedbitset::FixedBitSet;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    rows: Vec<FixedBitSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation {
            rows: vec![FixedBitSet::with_capacity(n); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for s in 0..n {
            r.insert(s, s);
        }
        r
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(n: usize, pairs: I) -> Self {
        let mut r = Relation::empty(n);
        for (s, t) in pairs {
            r.insert(s, t);
        }
        r
    }

    /// Number of worlds the relation ranges over.
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn insert(&mut self, s: usize, t: usize) -> bool {
        !self.rows[s].put(t)
    }

    pub fn contains(&self, s: usize, t: usize) -> bool {
        self.rows[s].contains(t)
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(FixedBitSet::is_clear)
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[s].ones()
    }

    pub fn row(&self, s: usize) -> &FixedBitSet {
        &self.rows[s]
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.ones().map(move |t| (s, t)))
    }

    pub fn union(&self, other: &Relation) -> Relation {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn union_with(&mut self, other: &Relation) {
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            a.union_with(b);
        }
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        let mut out = self.clone();
        for (a, b) in out.rows.iter_mut().zip(&other.rows) {
            a.intersect_with(b);
        }
        out
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.rows
            .iter()
            .zip(&other.rows)
            .all(|(a, b)| a.is_subset(b))
    }

    /// Least transitive relation containing this one.
    pub fn transitive_closure(&self) -> Relation {
        let mut out = self.clone();
        let n = out.size();
        for k in 0..n {
            let via = out.rows[k].clone();
            for i in 0..n {
                if out.rows[i].contains(k) {
                    out.rows[i].union_with(&via);
                }
            }
        }
        out
    }

    /// Least equivalence relation containing this one.
    pub fn rst_closure(&self) -> Relation {
        let mut out = self.clone();
        for (s, t) in self.pairs() {
            out.insert(t, s);
        }
        for s in 0..self.size() {
            out.insert(s, s);
        }
        out.transitive_closure()
    }

    pub fn reflexivity_violation(&self) -> Option<usize> {
        (0..self.size()).find(|&s| !self.contains(s, s))
    }

    pub fn symmetry_violation(&self) -> Option<(usize, usize)> {
        self.pairs().find(|&(s, t)| !self.contains(t, s))
    }

    /// A pair `(s, u)` missing although `(s, t)` and `(t, u)` are present.
    pub fn transitivity_violation(&self) -> Option<(usize, usize)> {
        for (s, t) in self.pairs() {
            if !self.rows[t].is_subset(&self.rows[s]) {
                let u = self.rows[t]
                    .difference(&self.rows[s])
                    .next()
                    .expect("non-subset");
                return Some((s, u));
            }
        }
        None
    }

    pub fn is_equivalence(&self) -> bool {
        self.reflexivity_violation().is_none()
            && self.symmetry_violation().is_none()
            && self.transitivity_violation().is_none()
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}
