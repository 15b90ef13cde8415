//! Closed frequent itemset mining by prefix-preserving closure extension (LCM).
//!
//! Transactions are held vertically as tid bitsets. Every closed itemset has exactly one
//! parent in the extension tree, so each is reported once without a duplicate check, and a
//! length cap prunes whole subtrees because children strictly extend their parent.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedItemset {
    /// Item ids, ascending.
    pub items: Vec<u32>,
    /// Indices of the supporting transactions, ascending.
    pub tids: Vec<u32>,
}

impl ClosedItemset {
    pub fn support(&self) -> usize {
        self.tids.len()
    }
}

#[derive(Clone)]
struct Bitset(Vec<u64>);

impl Bitset {
    fn empty(words: usize) -> Self {
        Bitset(vec![0; words])
    }

    fn full(n: usize) -> Self {
        let mut b = Bitset::empty(n.div_ceil(64));
        for i in 0..n {
            b.set(i);
        }
        b
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bitset) -> Bitset {
        Bitset(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn is_subset_of(&self, other: &Bitset) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    fn ones(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (wi, &w) in self.0.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push((wi * 64) as u32 + w.trailing_zeros());
                w &= w - 1;
            }
        }
        out
    }
}

struct Miner<'a> {
    /// Original id of each local (frequent) item; local ids follow original order.
    item_ids: Vec<u32>,
    tidsets: Vec<Bitset>,
    /// Transactions rewritten over local item ids, ascending.
    local: Vec<Vec<usize>>,
    min_support: usize,
    max_len: usize,
    out: &'a mut Vec<ClosedItemset>,
}

impl Miner<'_> {
    /// Items contained in every transaction of `tids` (ascending local ids).
    fn closure(&self, tids: &Bitset) -> Vec<usize> {
        let Some(first) = tids.first() else {
            return Vec::new();
        };
        self.local[first]
            .iter()
            .copied()
            .filter(|&j| tids.is_subset_of(&self.tidsets[j]))
            .collect()
    }

    fn emit(&mut self, items: &[usize], tids: &Bitset) {
        if items.is_empty() || items.len() > self.max_len {
            return;
        }
        self.out.push(ClosedItemset {
            items: items.iter().map(|&j| self.item_ids[j]).collect(),
            tids: tids.ones(),
        });
    }

    fn expand(&mut self, items: &[usize], tids: &Bitset, core: Option<usize>) {
        self.emit(items, tids);
        if items.len() >= self.max_len {
            return;
        }
        let start = core.map_or(0, |c| c + 1);
        for e in start..self.item_ids.len() {
            if items.binary_search(&e).is_ok() {
                continue;
            }
            let ext = tids.and(&self.tidsets[e]);
            if ext.count() < self.min_support {
                continue;
            }
            let closed = self.closure(&ext);
            // Prefix preservation: the closure may not add any item below `e`.
            let below_new = closed.iter().take_while(|&&j| j < e);
            let below_old = items.iter().take_while(|&&j| j < e);
            if !below_new.eq(below_old) {
                continue;
            }
            if closed.len() > self.max_len {
                continue;
            }
            self.expand(&closed, &ext, Some(e));
        }
    }
}

/// All non-empty closed itemsets with support `>= min_support` and at most `max_len` items,
/// in discovery order. An itemset is closed when no proper superset has the same support.
pub fn mine_closed(
    transactions: &[Vec<u32>],
    min_support: usize,
    max_len: Option<usize>,
) -> Vec<ClosedItemset> {
    let min_support = min_support.max(1);
    let n = transactions.len();
    let mut out = Vec::new();
    if n < min_support {
        return out;
    }

    let mut counts: std::collections::BTreeMap<u32, usize> = std::collections::BTreeMap::new();
    for t in transactions {
        let mut t = t.clone();
        t.sort_unstable();
        t.dedup();
        for i in t {
            *counts.entry(i).or_default() += 1;
        }
    }
    let item_ids: Vec<u32> = counts
        .iter()
        .filter(|(_, &c)| c >= min_support)
        .map(|(&i, _)| i)
        .collect();
    let local_of: std::collections::HashMap<u32, usize> =
        item_ids.iter().enumerate().map(|(j, &i)| (i, j)).collect();

    let words = n.div_ceil(64);
    let mut tidsets = vec![Bitset::empty(words); item_ids.len()];
    let mut local = Vec::with_capacity(n);
    for (tid, t) in transactions.iter().enumerate() {
        let mut l: Vec<usize> = t.iter().filter_map(|i| local_of.get(i).copied()).collect();
        l.sort_unstable();
        l.dedup();
        for &j in &l {
            tidsets[j].set(tid);
        }
        local.push(l);
    }

    let mut miner = Miner {
        item_ids,
        tidsets,
        local,
        min_support,
        max_len: max_len.unwrap_or(usize::MAX),
        out: &mut out,
    };
    let all = Bitset::full(n);
    let root = miner.closure(&all);
    if root.len() <= miner.max_len {
        miner.expand(&root, &all, None);
    }
    out
}
