//! End-to-end iteration latency and per-stage timings.

use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use likemind_core::engine::StageTimings;
use likemind_core::mindsets::builtin_mindsets;
use likemind_core::simulator::sample_session;
use likemind_core::{EngineParams, Session};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::simulation::engine;
use crate::{report, Verdict};

const ITERATIONS: usize = 100;
const MAX_MEAN: Duration = Duration::from_secs(1);
const KS: [usize; 8] = [5, 10, 20, 30, 40, 50, 60, 70];
const SWEEP_ITERATIONS: usize = 20;
/// Largest relative deviation of the per-k mean of stages 1-3 from their overall mean.
const FLAT_TOLERANCE: f64 = 0.3;

#[derive(Default)]
struct Mean {
    stages: [f64; 4],
    total: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, t: &StageTimings, total: Duration) {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        for (acc, d) in self.stages.iter_mut().zip([t.nearby, t.checkins, t.mining, t.maximize]) {
            *acc += ms(d);
        }
        self.total += ms(total);
        self.n += 1;
    }

    fn stage(&self, i: usize) -> f64 {
        self.stages[i] / self.n as f64
    }

    fn first_three(&self) -> f64 {
        (0..3).map(|i| self.stage(i)).sum()
    }

    fn total(&self) -> f64 {
        self.total / self.n as f64
    }
}

/// Independent iterations: a fresh session per sampled context, one random mindset each.
/// Every context is run under each of `param_sets` in turn, so drift in machine load spreads
/// evenly over them.
fn measure(param_sets: &[EngineParams], iterations: usize) -> Vec<Mean> {
    let engine = engine();
    let ds = engine.dataset();
    let catalog = builtin_mindsets();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let at = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut means: Vec<Mean> = param_sets.iter().map(|_| Mean::default()).collect();
    for i in 0..iterations {
        let sampled = sample_session(ds, 31, i, param_sets[0].radius_m).unwrap();
        let m = &catalog[rng.gen_range(0..catalog.len())];
        for (params, mean) in param_sets.iter().zip(&mut means) {
            let mut session = Session::new(format!("l{i}"), sampled.context.clone());
            session.masked_visitor = Some(sampled.visitor);
            let started = Instant::now();
            let rec = engine.iterate_at(&mut session, m, params, at).unwrap();
            mean.add(&rec.timings, started.elapsed());
        }
    }
    means
}

pub fn run() -> Verdict {
    let defaults = EngineParams::default();
    let base = measure(&[defaults], ITERATIONS).remove(0);
    report(&format!(
        "          stages at r = {} m, k = {}: nearby {:.2} ms, check-ins {:.2} ms, mining {:.2} ms, maximize {:.2} ms, end to end {:.2} ms",
        defaults.radius_m,
        defaults.k,
        base.stage(0),
        base.stage(1),
        base.stage(2),
        base.stage(3),
        base.total()
    ));
    let fast_enough = base.total() <= MAX_MEAN.as_secs_f64() * 1e3;

    let params: Vec<EngineParams> = KS.iter().map(|&k| EngineParams { k, ..defaults }).collect();
    let sweep: Vec<(usize, Mean)> = KS.into_iter().zip(measure(&params, SWEEP_ITERATIONS)).collect();
    for (k, m) in &sweep {
        report(&format!(
            "          k = {k:>2}: stages 1-3 {:.2} ms, maximize {:.2} ms",
            m.first_three(),
            m.stage(3)
        ));
    }
    let overall = sweep.iter().map(|(_, m)| m.first_three()).sum::<f64>() / sweep.len() as f64;
    let flat = sweep
        .iter()
        .all(|(_, m)| (m.first_three() - overall).abs() <= FLAT_TOLERANCE * overall);
    let (first, last) = (&sweep[0].1, &sweep[sweep.len() - 1].1);
    let grows = last.stage(3) > first.stage(3);

    Verdict::new(
        fast_enough && flat && grows,
        format!(
            "mean end-to-end {:.1} ms over {ITERATIONS} iterations (limit {} ms); maximize {:.1} ms at k = 5 and {:.1} ms at k = 70{}; stages 1-3 {} within {:.0}% of {overall:.1} ms",
            base.total(),
            MAX_MEAN.as_millis(),
            first.stage(3),
            last.stage(3),
            if grows { "" } else { " (no growth)" },
            if flat { "stay" } else { "do not stay" },
            FLAT_TOLERANCE * 100.0
        ),
    )
}
