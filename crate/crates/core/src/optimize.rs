//! One-dimensional extremum search: dense sampling followed by golden-section
//! refinement of every promising sample.

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping once the
/// bracket is narrower than `xtol`. Returns the best point seen.
pub fn golden_section_min<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // Bounded even if f is pathological.
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Global minimum of `f` on `[a, b]`: `samples` equally spaced evaluations
/// (endpoints included), then golden-section refinement inside the bracket of
/// each of the `max_refinements` lowest sampled local minima.
///
/// Non-finite values of `f` are treated as `+inf` (excluded points).
pub fn scan_minimum<F>(f: F, a: f64, b: f64, samples: usize, max_refinements: usize, xtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    assert!(samples >= 3, "need at least three samples");
    let g = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let step = (b - a) / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples).map(|i| if i + 1 == samples { b } else { a + step * i as f64 }).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| g(x)).collect();

    let mut candidates: Vec<usize> = (0..samples)
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { ys[i - 1] };
            let right = if i + 1 == samples { f64::INFINITY } else { ys[i + 1] };
            ys[i].is_finite() && ys[i] <= left && ys[i] <= right
        })
        .collect();
    candidates.sort_by(|&i, &j| ys[i].total_cmp(&ys[j]).then(i.cmp(&j)));
    candidates.truncate(max_refinements);

    let mut best = match candidates.first() {
        Some(&i) => (xs[i], ys[i]),
        None => {
            let i = (0..samples).min_by(|&i, &j| ys[i].total_cmp(&ys[j])).unwrap_or(0);
            return (xs[i], ys[i]);
        }
    };
    for &i in &candidates {
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(samples - 1)];
        let (x, y) = golden_section_min(g, lo, hi, xtol);
        if y < best.1 {
            best = (x, y);
        }
    }
    best
}
