//! Wall-clock medians.

use std::hint::black_box;
use std::time::Instant;

/// Runs for timing assertions; a ratio check passes if any run meets it.
pub const GUARD_RUNS: usize = 3;

/// Median time of one call of `f` in nanoseconds, over `reps` timed calls
/// after `reps / 10` untimed warm-up calls.
pub fn median_ns<R>(reps: usize, mut f: impl FnMut() -> R) -> f64 {
    let reps = reps.max(1);
    for _ in 0..reps / 10 {
        black_box(f());
    }
    let mut samples: Vec<u64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            black_box(f());
            t.elapsed().as_nanos() as u64
        })
        .collect();
    samples.sort_unstable();
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid] as f64
    } else {
        0.5 * (samples[mid - 1] + samples[mid]) as f64
    }
}

/// Largest of up to [`GUARD_RUNS`] values of `measure`, stopping at the
/// first value that satisfies `accept`. Meant for larger-is-better ratios.
pub fn guarded<E>(
    mut measure: impl FnMut() -> Result<f64, E>,
    accept: impl Fn(f64) -> bool,
) -> Result<f64, E> {
    let mut best = f64::NAN;
    for _ in 0..GUARD_RUNS {
        let v = measure()?;
        if v.is_finite() && (best.is_nan() || v > best) {
            best = v;
        }
        if accept(v) {
            return Ok(v);
        }
    }
    Ok(best)
}
