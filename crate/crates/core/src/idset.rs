use std::fmt;

/// A set of dense ids in `0..64`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IdSet(pub u64);

pub const MAX_IDS: usize = 64;

impl IdSet {
    pub const EMPTY: IdSet = IdSet(0);

    pub fn singleton(id: usize) -> IdSet {
        debug_assert!(id < MAX_IDS);
        IdSet(1 << id)
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> IdSet {
        if n >= 64 {
            IdSet(u64::MAX)
        } else {
            IdSet((1u64 << n) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn insert(&mut self, id: usize) {
        self.0 |= 1 << id;
    }

    pub fn remove(&mut self, id: usize) {
        self.0 &= !(1 << id);
    }

    pub fn contains(self, id: usize) -> bool {
        id < MAX_IDS && self.0 >> id & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: IdSet) -> IdSet {
        IdSet(self.0 | o.0)
    }

    pub fn intersection(self, o: IdSet) -> IdSet {
        IdSet(self.0 & o.0)
    }

    pub fn difference(self, o: IdSet) -> IdSet {
        IdSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: IdSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_strict_subset(self, o: IdSet) -> bool {
        self.is_subset(o) && self != o
    }

    pub fn is_disjoint(self, o: IdSet) -> bool {
        self.0 & o.0 == 0
    }

    /// Ids in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All nonempty subsets, in increasing bitmask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = IdSet> {
        let full = self.0;
        let mut sub: u64 = 0;
        let mut done = full == 0;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            // next submask in increasing order
            sub = (sub.wrapping_sub(full)) & full;
            if sub == full {
                done = true;
            }
            Some(IdSet(sub))
        })
    }
}

impl FromIterator<usize> for IdSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = IdSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for IdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
