//! Knee-angle peak detection with a subject-specific height threshold.

use std::cmp::Ordering;

/// Indices of local maxima in `signal` that reach `threshold`, thinned so
/// that kept peaks are at least `min_distance` samples apart.
///
/// A candidate `i` satisfies `x[i] > x[i-1]`, `x[i] >= x[i+1]` and
/// `x[i] >= threshold` (a plateau is reported at its left edge). Thinning is
/// greedy by priority: higher amplitude first, earlier index on ties; each
/// kept peak suppresses every remaining candidate closer than `min_distance`.
///
/// Signals shorter than three samples have no interior points and yield no
/// peaks.
pub fn detect_peaks(signal: &[f64], threshold: f64, min_distance: usize) -> Vec<usize> {
    if signal.len() < 3 {
        return Vec::new();
    }
    let candidates: Vec<usize> = (1..signal.len() - 1)
        .filter(|&i| {
            signal[i] > signal[i - 1] && signal[i] >= signal[i + 1] && signal[i] >= threshold
        })
        .collect();
    if min_distance <= 1 || candidates.len() < 2 {
        return candidates;
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| priority(signal, candidates[a], candidates[b]));

    let mut keep = vec![true; candidates.len()];
    for &c in &order {
        if !keep[c] {
            continue;
        }
        let pos = candidates[c];
        // candidates are sorted by index, so suppression scans outward
        for j in (0..c).rev() {
            if pos - candidates[j] >= min_distance {
                break;
            }
            keep[j] = false;
        }
        for j in c + 1..candidates.len() {
            if candidates[j] - pos >= min_distance {
                break;
            }
            keep[j] = false;
        }
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(i, k)| k.then_some(i))
        .collect()
}

/// Ordering used by the thinning step: larger value first, then lower index.
fn priority(signal: &[f64], a: usize, b: usize) -> Ordering {
    signal[b].total_cmp(&signal[a]).then(a.cmp(&b))
}
