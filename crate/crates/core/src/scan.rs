//! Grid scan for zeros of a smooth scalar function with a known derivative.
//!
//! Simple zeros show up as sign changes between neighbouring grid points.
//! A pair of zeros closer than the grid step, or an even-order zero, shows
//! up instead as a sign change of the derivative with no sign change of the
//! function; those cells are split at the critical point, and an unsplit
//! critical point whose distance to zero (`√(2|f/f''|)`) is below
//! `touch_tol` is reported as a double zero.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ScanSettings {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub root_tol: f64,
    pub merge_tol: f64,
    pub touch_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Zero {
    pub x: f64,
    pub bracket: (f64, f64),
    pub multiplicity: u8,
    /// Estimated distance to an exact zero for touching (double) zeros.
    pub touch_gap: f64,
}

fn opposite(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Bisection of `f` on a sign-changing bracket down to width `tol`, finished
/// by one linear interpolation inside the final bracket.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> (f64, (f64, f64)) {
    if fa == 0.0 {
        return (a, (a, a));
    }
    if fb == 0.0 {
        return (b, (b, b));
    }
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return (mid, (mid, mid));
        }
        if opposite(fa, fm) {
            b = mid;
            fb = fm;
        } else {
            a = mid;
            fa = fm;
        }
    }
    let x = if fa != fb { a - fa * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
    (x.clamp(a, b), (a, b))
}

pub(crate) fn find_zeros<F>(f: F, s: &ScanSettings) -> Vec<Zero>
where
    F: Fn(f64) -> (f64, f64) + Sync,
{
    let cells = ((s.hi - s.lo) / s.step).ceil().max(1.0) as usize + 2;
    let grid: Vec<f64> = (0..=cells).map(|i| s.lo - s.step + i as f64 * s.step).collect();
    let values: Vec<(f64, f64)> = grid.par_iter().map(|&x| f(x)).collect();

    let found: Vec<Vec<Zero>> = (0..cells)
        .into_par_iter()
        .map(|i| cell_zeros(&f, grid[i], grid[i + 1], values[i], values[i + 1], s))
        .collect();
    let mut zeros: Vec<Zero> = found
        .into_iter()
        .flatten()
        .filter(|z| z.x >= s.lo - s.root_tol && z.x <= s.hi + s.root_tol)
        .collect();
    zeros.sort_by(|a, b| a.x.total_cmp(&b.x));
    merge(zeros, s.merge_tol)
}

fn merge(zeros: Vec<Zero>, merge_tol: f64) -> Vec<Zero> {
    let mut out: Vec<Zero> = Vec::with_capacity(zeros.len());
    for z in zeros {
        if let Some(last) = out.last_mut() {
            if z.x - last.x < merge_tol {
                last.multiplicity = last.multiplicity.saturating_add(z.multiplicity);
                last.bracket = (last.bracket.0.min(z.bracket.0), last.bracket.1.max(z.bracket.1));
                last.x = 0.5 * (last.x + z.x);
                continue;
            }
        }
        out.push(z);
    }
    out
}

fn cell_zeros<F>(f: &F, a: f64, b: f64, (fa, da): (f64, f64), (fb, db): (f64, f64), s: &ScanSettings) -> Vec<Zero>
where
    F: Fn(f64) -> (f64, f64),
{
    let value = |x: f64| f(x).0;
    let simple = |a: f64, b: f64, fa: f64, fb: f64| {
        let (x, bracket) = bisect(value, a, b, fa, fb, s.root_tol);
        Zero { x, bracket, multiplicity: 1, touch_gap: 0.0 }
    };
    if fa == 0.0 {
        // Owned by the cell to its left, unless this is the first grid point.
        return if a < s.lo { vec![Zero { x: a, bracket: (a, a), multiplicity: 1, touch_gap: 0.0 }] } else { vec![] };
    }
    if fb == 0.0 {
        return vec![Zero { x: b, bracket: (b, b), multiplicity: 1, touch_gap: 0.0 }];
    }
    if opposite(fa, fb) {
        return vec![simple(a, b, fa, fb)];
    }
    if !opposite(da, db) {
        return vec![];
    }
    // Same sign at both ends but an extremum inside.
    let slope = |x: f64| f(x).1;
    let (c, _) = bisect(slope, a, b, da, db, 1e-3 * s.root_tol);
    let fc = value(c);
    if fc == 0.0 || opposite(fa, fc) {
        if fc == 0.0 {
            return vec![Zero { x: c, bracket: (c, c), multiplicity: 2, touch_gap: 0.0 }];
        }
        return vec![simple(a, c, fa, fc), simple(c, b, fc, fb)];
    }
    let h = (1e-6 * (b - a)).max(1e-9);
    let curvature = (slope(c + h) - slope(c - h)) / (2.0 * h);
    if curvature == 0.0 {
        return vec![];
    }
    let gap = (2.0 * (fc / curvature).abs()).sqrt();
    if gap <= s.touch_tol && fc.signum() * curvature.signum() > 0.0 {
        vec![Zero { x: c, bracket: (c - gap, c + gap), multiplicity: 2, touch_gap: gap }]
    } else {
        vec![]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(lo: f64, hi: f64, step: f64) -> ScanSettings {
        ScanSettings { lo, hi, step, root_tol: 1e-12, merge_tol: 1e-9, touch_tol: 1e-6 }
    }

    #[test]
    fn simple_zeros_of_sine() {
        let z = find_zeros(|x: f64| (x.sin(), x.cos()), &settings(0.5, 10.0, 0.01));
        let xs: Vec<f64> = z.iter().map(|z| z.x).collect();
        assert_eq!(xs.len(), 3);
        for (k, x) in xs.iter().enumerate() {
            assert!((x - (k + 1) as f64 * std::f64::consts::PI).abs() < 1e-11);
        }
    }

    #[test]
    fn close_pair_inside_one_cell() {
        // zeros 1e-4 apart with a grid step of 1e-2
        let (r1, r2) = (1.0037, 1.0038);
        let f = |x: f64| ((x - r1) * (x - r2), 2.0 * x - r1 - r2);
        let z = find_zeros(f, &settings(0.0, 2.0, 0.01));
        assert_eq!(z.len(), 2);
        assert!((z[0].x - r1).abs() < 1e-11);
        assert!((z[1].x - r2).abs() < 1e-11);
    }

    #[test]
    fn double_zero_is_detected() {
        let f = |x: f64| ((x - 0.7312).powi(2) * (x + 3.0), 2.0 * (x - 0.7312) * (x + 3.0) + (x - 0.7312).powi(2));
        let z = find_zeros(f, &settings(0.0, 2.0, 0.01));
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].multiplicity, 2);
        assert!((z[0].x - 0.7312).abs() < 1e-9);
    }

    #[test]
    fn near_miss_is_not_a_zero() {
        let f = |x: f64| ((x - 0.5).powi(2) + 1e-6, 2.0 * (x - 0.5));
        assert!(find_zeros(f, &settings(0.0, 1.0, 0.01)).is_empty());
    }

    #[test]
    fn zero_on_window_edge_is_kept() {
        let z = find_zeros(|x: f64| (x - 1.0, 1.0), &settings(1.0, 2.0, 0.1));
        assert_eq!(z.len(), 1);
        assert!((z[0].x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_tight_bracket() {
        let (x, _) = bisect(|x| x - 0.3, 0.0, 1.0, -0.3, 0.7, 1e-14);
        assert!((x - 0.3).abs() < 1e-15);
    }
}
