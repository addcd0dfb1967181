//! Multi-threaded ensemble driver.
//!
//! Workers claim fixed-size chunks of trajectory indices from a shared
//! counter and accumulate them locally. The accumulators hold integer sums,
//! so the merged result does not depend on how chunks were distributed.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use radpair_core::mcwf::{
    run_ensemble_range, EnsembleAccumulator, EnsembleResult, EnsembleSettings,
};
use radpair_core::model::ModelOperators;

use crate::error::{Error, Result};

/// Trajectories per work item.
pub const CHUNK: u64 = 64;

/// Run `settings.n_samples` trajectories on `workers` threads. On failure the
/// error of the lowest failing trajectory index is returned.
pub fn run_ensemble(
    model: &ModelOperators,
    settings: &EnsembleSettings,
    workers: usize,
) -> Result<EnsembleResult> {
    settings.validate()?;
    let n = settings.n_samples;
    let workers = workers.clamp(1, n.div_ceil(CHUNK).max(1) as usize);
    let next = AtomicU64::new(0);
    // Lowest failing index seen so far; chunks starting above it are skipped.
    let failed_at = AtomicU64::new(u64::MAX);
    let failure: Mutex<Option<(u64, radpair_core::Error)>> = Mutex::new(None);

    let partials: Vec<EnsembleAccumulator> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut acc =
                        EnsembleAccumulator::new(settings.grid.len(), model.reactions.len());
                    loop {
                        let start = next.fetch_add(CHUNK, Ordering::Relaxed);
                        if start >= n || start > failed_at.load(Ordering::Relaxed) {
                            break;
                        }
                        let end = (start + CHUNK).min(n);
                        match run_ensemble_range(model, settings, start..end) {
                            Ok(part) => acc.merge(&part),
                            Err(e) => {
                                let index = locate_failure(model, settings, start..end)
                                    .unwrap_or(start);
                                failed_at.fetch_min(index, Ordering::Relaxed);
                                let mut slot = failure.lock().unwrap();
                                if slot.as_ref().is_none_or(|(i, _)| index < *i) {
                                    *slot = Some((index, e));
                                }
                            }
                        }
                    }
                    acc
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    if let Some((index, source)) = failure.into_inner().unwrap() {
        return Err(Error::Worker { index, source });
    }
    let mut total = EnsembleAccumulator::new(settings.grid.len(), model.reactions.len());
    for p in &partials {
        total.merge(p);
    }
    debug_assert_eq!(total.n_samples(), n);
    Ok(total.finish(settings))
}

fn locate_failure(
    model: &ModelOperators,
    settings: &EnsembleSettings,
    range: std::ops::Range<u64>,
) -> Option<u64> {
    range
        .into_iter()
        .find(|&i| run_ensemble_range(model, settings, i..i + 1).is_err())
}
