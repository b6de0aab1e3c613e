use alloc::vec::Vec;

/// Dyadic ranges over [n], n padded to 2^levels.
///
/// Range [j·2^k, (j+1)·2^k - 1] gets id 2^(levels-k) + j - 1, so the root is 0,
/// ids grow top-down and left-to-right, and ids fill [2^(levels+1) - 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dyadic {
    levels: u32,
}

impl Dyadic {
    pub fn new(n: u64) -> Self {
        let levels = if n <= 1 { 0 } else { 64 - (n - 1).leading_zeros() };
        Self { levels }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn padded(&self) -> u64 {
        1 << self.levels
    }

    /// Size of the derived universe.
    pub fn id_count(&self) -> u64 {
        (1 << (self.levels + 1)) - 1
    }

    pub fn id(&self, level: u32, index: u64) -> u64 {
        (1u64 << (self.levels - level)) + index - 1
    }

    pub fn root(&self) -> u64 {
        0
    }

    /// (level, index) of an id.
    pub fn locate(&self, id: u64) -> (u32, u64) {
        let heap = id + 1;
        let depth = 63 - heap.leading_zeros();
        (self.levels - depth, heap - (1 << depth))
    }

    /// Inclusive item range covered by an id.
    pub fn range(&self, id: u64) -> (u64, u64) {
        let (level, index) = self.locate(id);
        (index << level, ((index + 1) << level) - 1)
    }

    pub fn children(&self, id: u64) -> Option<(u64, u64)> {
        let (level, index) = self.locate(id);
        (level > 0).then(|| (self.id(level - 1, 2 * index), self.id(level - 1, 2 * index + 1)))
    }

    pub fn is_leaf(&self, id: u64) -> bool {
        self.locate(id).0 == 0
    }

    /// The levels + 1 ranges containing `item`, leaf first.
    pub fn decompose(&self, item: u64) -> Vec<u64> {
        (0..=self.levels).map(|k| self.id(k, item >> k)).collect()
    }

    /// Disjoint ranges whose union is [0, len), largest first.
    pub fn prefix(&self, len: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in (0..=self.levels).rev() {
            if start + (1 << k) <= len {
                out.push(self.id(k, start >> k));
                start += 1 << k;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn examples() {
        let d = Dyadic::new(8);
        let ranges = |i| d.decompose(i).into_iter().map(|id| d.range(id)).collect::<Vec<_>>();
        assert_eq!(ranges(0), [(0, 0), (0, 1), (0, 3), (0, 7)]);
        assert_eq!(ranges(5), [(5, 5), (4, 5), (4, 7), (0, 7)]);
        assert_eq!(d.id_count(), 15);
        assert_eq!(Dyadic::new(5).padded(), 8);
        assert_eq!(Dyadic::new(1).decompose(0), [0]);
    }

    #[test]
    fn ids_are_a_bijection() {
        let d = Dyadic::new(16);
        let mut seen = BTreeSet::new();
        for level in 0..=4 {
            for index in 0..(16 >> level) {
                let id = d.id(level, index);
                assert_eq!(d.locate(id), (level, index));
                seen.insert(id);
            }
        }
        assert_eq!(seen.len() as u64, d.id_count());
        assert_eq!(*seen.iter().max().unwrap(), d.id_count() - 1);
    }

    #[test]
    fn shared_ids_follow_lca_depth() {
        for n in [2u64, 8, 32, 64] {
            let d = Dyadic::new(n);
            for i in 0..n {
                assert_eq!(d.decompose(i).len() as u32, d.levels() + 1);
                for j in 0..n {
                    let a: BTreeSet<u64> = d.decompose(i).into_iter().collect();
                    let b: BTreeSet<u64> = d.decompose(j).into_iter().collect();
                    // brute force: ranges containing both items
                    let both = (0..d.id_count())
                        .filter(|&id| {
                            let (lo, hi) = d.range(id);
                            (lo..=hi).contains(&i) && (lo..=hi).contains(&j)
                        })
                        .count();
                    assert_eq!(a.intersection(&b).count(), both);
                    let lca_level = 64 - (i ^ j).leading_zeros();
                    assert_eq!(both as u32, d.levels() + 1 - lca_level);
                }
            }
        }
    }

    #[test]
    fn prefix_covers_exactly() {
        let d = Dyadic::new(16);
        for len in 0..=16 {
            let mut covered = Vec::new();
            for id in d.prefix(len) {
                let (lo, hi) = d.range(id);
                covered.extend(lo..=hi);
            }
            covered.sort_unstable();
            assert_eq!(covered, (0..len).collect::<Vec<_>>());
        }
    }
}
