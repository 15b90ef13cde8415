//! Greedy maximizer against exhaustive search on small pools.

use likemind_core::dataset::{PoiIdx, VisitorIdx};
use likemind_core::engine::maximize;
use likemind_core::groups::{Group, ItemId};
use likemind_core::Budget;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracles;
use crate::Verdict;

const POOLS: usize = 50;
const K: usize = 2;
const MAX_GAP: f64 = 0.05;

fn random_pool(rng: &mut ChaCha8Rng) -> Vec<Group> {
    (0..rng.gen_range(1..=8))
        .map(|g| {
            let pois: Vec<PoiIdx> = (0..6u32).filter(|_| rng.gen_bool(0.35)).map(PoiIdx).collect();
            let support = rng.gen_range(2..40);
            Group {
                itemset: vec![ItemId(g)],
                members: (0..support as u32).map(VisitorIdx).collect(),
                support,
                demog_items: vec![],
                poi_items: pois,
                category_items: vec![],
                time_items: vec![],
                display_pois: vec![],
            }
        })
        .collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

pub fn run() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut not_local = 0;
    let mut not_increasing = 0;
    let mut gaps = Vec::new();
    let mut relaxed_skipped = 0;
    while gaps.len() < POOLS {
        let pool = random_pool(&mut rng);
        let scores: Vec<f64> = pool.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let portfolio: Vec<PoiIdx> = (0..6u32).filter(|_| rng.gen_bool(0.25)).map(PoiIdx).collect();
        let sigma = [0.0, 0.01, 0.3][rng.gen_range(0..3)];
        let survivors: Vec<usize> = (0..pool.len())
            .filter(|&i| oracles::relevance(&pool[i].poi_items, &portfolio) >= sigma)
            .collect();
        if survivors.is_empty() {
            relaxed_skipped += 1;
            continue;
        }

        let out = maximize(&pool, |i| scores[i], &portfolio, sigma, K, Budget::UNLIMITED, |_, _| false);
        let objective = |sel: &[usize]| sel.iter().map(|&i| scores[i]).sum::<f64>();

        let mut local = out.selected.iter().all(|s| survivors.contains(s));
        for slot in 0..out.selected.len() {
            for &c in survivors.iter().filter(|c| !out.selected.contains(c)) {
                let mut trial = out.selected.clone();
                trial[slot] = c;
                if objective(&trial) > objective(&out.selected) {
                    local = false;
                }
            }
        }
        if !local {
            not_local += 1;
        }
        if !out.accepted.windows(2).all(|w| w[1] > w[0]) {
            not_increasing += 1;
        }

        let size = K.min(survivors.len());
        let best = subsets(survivors.len(), size)
            .iter()
            .map(|s| s.iter().map(|&j| scores[survivors[j]]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        gaps.push(if best > 0.0 { (best - out.objective) / best } else { 0.0 });
    }
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let passed = not_local == 0 && not_increasing == 0 && mean_gap <= MAX_GAP;
    Verdict::new(
        passed,
        format!(
            "{POOLS} pools, k = {K}: {not_local} not swap-optimal, {not_increasing} with non-increasing accepted objectives, mean gap to exhaustive optimum {:.4} (limit {MAX_GAP}); {relaxed_skipped} fully pruned pools redrawn",
            mean_gap
        ),
    )
}
