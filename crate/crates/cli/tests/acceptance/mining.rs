//! Closed itemset completeness and the built-in mindset table.

use likemind_core::groups::miner::mine_closed;
use likemind_core::mindsets::builtin_mindsets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracles;
use crate::Verdict;

pub fn completeness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let sets = 100;
    let mut mismatched = 0;
    let mut total_itemsets = 0;
    for _ in 0..sets {
        let n_items = rng.gen_range(1..=15u32);
        let density = rng.gen_range(0.1..0.7);
        let transactions: Vec<Vec<u32>> = (0..rng.gen_range(0..=12))
            .map(|_| (0..n_items).filter(|_| rng.gen_bool(density)).collect())
            .collect();
        let mut mined: Vec<(Vec<u32>, Vec<u32>)> = mine_closed(&transactions, 2, None)
            .into_iter()
            .map(|c| (c.items, c.tids))
            .collect();
        mined.sort();
        let mut expected = oracles::closed_itemsets(&transactions, 2);
        expected.sort();
        total_itemsets += expected.len();
        if mined != expected {
            mismatched += 1;
        }
    }
    Verdict::new(
        mismatched == 0,
        format!("{} of {sets} transaction sets match exhaustive enumeration ({total_itemsets} closed itemsets)", sets - mismatched),
    )
}

/// Rows transcribed from the published table, as decimal text.
const TABLE: [(&str, [&str; 8]); 7] = [
    ("I'm new here", ["0.25", "0.25", "0.10", "0.15", "0.00", "0.00", "0.25", "0.00"]),
    ("surprise me", ["0.25", "0.20", "0.00", "0.00", "0.30", "0.00", "0.15", "0.10"]),
    ("let's workout", ["0.25", "0.25", "0.00", "0.10", "0.00", "0.40", "0.00", "0.00"]),
    ("me time", ["0.10", "0.10", "0.00", "0.10", "0.00", "0.40", "0.00", "0.30"]),
    ("I'm hungry", ["0.05", "0.20", "0.10", "0.15", "0.00", "0.40", "0.05", "0.05"]),
    ("let's learn", ["0.20", "0.20", "0.00", "0.10", "0.00", "0.40", "0.10", "0.00"]),
    ("hidden gems", ["0.30", "0.30", "0.15", "0.00", "0.00", "0.00", "0.00", "0.25"]),
];

const SUM_TOL: f64 = 1e-9;

pub fn builtin_priors() -> Verdict {
    let builtins = builtin_mindsets();
    let mut problems = Vec::new();
    if builtins.len() != TABLE.len() {
        problems.push(format!("{} mindsets instead of {}", builtins.len(), TABLE.len()));
    }
    for (m, (label, row)) in builtins.iter().zip(TABLE) {
        if m.label != label {
            problems.push(format!("label `{}` instead of `{label}`", m.label));
        }
        for (i, text) in row.iter().enumerate() {
            let expected: f64 = text.parse().unwrap();
            if m.priors.0[i].to_bits() != expected.to_bits() {
                problems.push(format!("{label} column {i}: {} instead of {text}", m.priors.0[i]));
            }
        }
        let sum: f64 = m.priors.0.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            problems.push(format!("{label} sums to {sum}"));
        }
    }
    if problems.is_empty() {
        Verdict::new(true, "7 rows bit-identical, every row sums to 1 within 1e-9")
    } else {
        Verdict::new(false, problems.join("; "))
    }
}
