use super::{TestReport, Verdict};

/// Largest half-enumeration the search will build.
const HALF_BUDGET: usize = 4_000_000;

/// Every `Σ n_j v_j` with `|n|_∞ <= n_max`, tagged by its coefficient index.
fn combos(vectors: &[[f64; 2]], n_max: i64) -> Vec<[f64; 2]> {
    let mut out = vec![[0.0, 0.0]];
    for v in vectors {
        let mut next = Vec::with_capacity(out.len() * (2 * n_max as usize + 1));
        for p in &out {
            for k in -n_max..=n_max {
                next.push([p[0] + k as f64 * v[0], p[1] + k as f64 * v[1]]);
            }
        }
        out = next;
    }
    out
}

fn decode(mut index: usize, len: usize, n_max: i64) -> Vec<i64> {
    let side = 2 * n_max as usize + 1;
    let mut n = vec![0; len];
    for slot in n.iter_mut().rev() {
        *slot = (index % side) as i64 - n_max;
        index /= side;
    }
    n
}

/// Smallest `|a + b|` over `a ∈ left`, `b ∈ right`, skipping the all-zero pair.
fn closest_sum(left: &[[f64; 2]], right: &[[f64; 2]], zero: (usize, usize)) -> (f64, usize, usize) {
    let mut neg: Vec<(f64, f64, usize)> = right.iter().enumerate().map(|(i, p)| (-p[0], -p[1], i)).collect();
    neg.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (f64::INFINITY, 0, 0);
    let consider = |best: &mut (f64, usize, usize), i: usize, a: &[f64; 2], q: &(f64, f64, usize)| {
        if (i, q.2) != zero {
            let d = (a[0] - q.0).hypot(a[1] - q.1);
            if d < best.0 {
                *best = (d, i, q.2);
            }
        }
    };
    for (i, a) in left.iter().enumerate() {
        let start = neg.partition_point(|q| q.0 < a[0]);
        for q in &neg[start..] {
            if q.0 - a[0] >= best.0 {
                break;
            }
            consider(&mut best, i, a, q);
        }
        for q in neg[..start].iter().rev() {
            if a[0] - q.0 >= best.0 {
                break;
            }
            consider(&mut best, i, a, q);
        }
    }
    best
}

fn search(xi: &[[f64; 2]], n_max: i64) -> (f64, Vec<i64>) {
    let split = xi.len() / 2;
    let (lo, hi) = xi.split_at(split);
    let left = combos(lo, n_max);
    let right = combos(hi, n_max);
    let centre = |len: usize| {
        let side = 2 * n_max as usize + 1;
        (0..len).fold(0, |acc, _| acc * side + n_max as usize)
    };
    let (d, i, j) = closest_sum(&left, &right, (centre(lo.len()), centre(hi.len())));
    let mut n = decode(i, lo.len(), n_max);
    n.extend(decode(j, hi.len(), n_max));
    (d, n)
}

fn half_size(len: usize, n_max: i64) -> f64 {
    (2.0 * n_max as f64 + 1.0).powi(len.div_ceil(2) as i32)
}

/// Minimum of `|Σ n_j ξ_j|` over nonzero integer vectors with `|n|_∞ <= n_max`.
/// Passes (independent) iff the minimum exceeds `tol`.
pub fn rational_independence(xi: &[[f64; 2]], n_max: usize, tol: f64) -> TestReport {
    let mut report = TestReport::new("rational_independence", xi.len());
    report
        .stat("n_max", n_max as f64)
        .threshold("min_combination", tol)
        .primary("min_combination", "min_combination");
    if xi.is_empty() || n_max == 0 {
        report.note("nothing to search");
        return report.finish(Verdict::Inconclusive);
    }
    let n_max = n_max as i64;
    if half_size(xi.len(), n_max) > HALF_BUDGET as f64 {
        // Fall back to the largest box that fits: a lower bound on how far the
        // independence holds, not a certificate at the requested size.
        let mut reach = n_max - 1;
        while reach > 0 && half_size(xi.len(), reach) > HALF_BUDGET as f64 {
            reach -= 1;
        }
        if reach > 0 {
            let (d, n) = search(xi, reach);
            report
                .stat("partial_min_combination", d)
                .stat("searched_n_max", reach as f64)
                .note(format!("budget exceeded; searched |n| <= {reach}, minimiser {n:?}"));
        } else {
            report.note("budget exceeded before any search");
        }
        return report.finish(Verdict::Inconclusive);
    }
    let (d, n) = search(xi, n_max);
    report.stat("min_combination", d).note(format!("minimiser {n:?}"));
    report.finish(Verdict::from_pass(d > tol))
}
