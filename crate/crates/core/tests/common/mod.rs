//! Test-only numerical oracles, independent of the library's closed forms.

#![allow(dead_code)]

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Integral over `[a, inf)` via `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: &F, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        f(a + t / s) / (s * s)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// All `2^n` hit/miss patterns with their probabilities.
pub fn patterns(n: u32, p: f64) -> impl Iterator<Item = (u32, f64)> {
    (0u32..1 << n).map(move |mask| {
        let hits = mask.count_ones();
        (
            mask,
            p.powi(hits as i32) * (1.0 - p).powi((n - hits) as i32),
        )
    })
}

/// Per-event detector assignment on a timeline, replayed by brute force:
/// event `e` goes to the first detector not inside the dead window of any
/// of that detector's earlier detections.
pub fn replay_first_live(events: &[f64], holds: &[f64]) -> Vec<Option<usize>> {
    let mut detections: Vec<Vec<f64>> = vec![Vec::new(); holds.len()];
    let mut out = Vec::with_capacity(events.len());
    for &t in events {
        let slot = (0..holds.len())
            .find(|&i| detections[i].iter().all(|&s| !(s <= t && t < s + holds[i])));
        if let Some(i) = slot {
            detections[i].push(t);
        }
        out.push(slot);
    }
    out
}
