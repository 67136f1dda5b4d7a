//! Scalar search machinery: grids and golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `n` points spaced evenly in log scale over `[lo, hi]`, both ends included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` evenly spaced points over `[lo, hi]`, both ends included.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
///
/// Returns the best point seen, interior points only; callers compare
/// against the endpoints themselves.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let (mut best_x, mut best_f) = if f2 > f1 { (x2, f2) } else { (x1, f1) };
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            if f1 > best_f || (f1 == best_f && x1 < best_x) {
                best_x = x1;
                best_f = f1;
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            if f2 > best_f {
                best_x = x2;
                best_f = f2;
            }
        }
    }
    (best_x, best_f)
}

/// Golden-section search for a minimum; see [`golden_max`].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|t| -f(t), a, b, tol);
    (x, -v)
}

/// Maximizes `f` over `[lo, hi]` by scanning `grid` (which must be sorted and
/// lie in `[lo, hi]`), then golden-refining between the neighbours of the
/// best grid point. Suitable for concave or unimodal objectives.
pub fn grid_then_golden_max<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], tol: f64) -> (f64, f64) {
    assert!(!grid.is_empty());
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for i in 1..vals.len() {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    let (mut bx, mut bv) = (grid[best], vals[best]);
    if grid.len() >= 2 && bv.is_finite() {
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(grid.len() - 1)];
        if b > a {
            let (x, v) = golden_max(&mut f, a, b, tol);
            if v > bv {
                bx = x;
                bv = v;
            }
        }
    }
    (bx, bv)
}
