//! Independent reference implementations used only by tests.
#![allow(dead_code)]

/// Quadratic-weighted kappa by direct double loops over raw counts.
/// Unnormalized weights `(i - j)^2`; expected counts `row_i * col_j / N`.
pub fn brute_qwk(counts: &[Vec<u64>]) -> f64 {
    let k = counts.len();
    let mut n = 0.0;
    let mut row = vec![0.0; k];
    let mut col = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            let c = counts[i][j] as f64;
            n += c;
            row[i] += c;
            col[j] += c;
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..k {
        for j in 0..k {
            let w = ((i as i64 - j as i64) * (i as i64 - j as i64)) as f64;
            num += w * counts[i][j] as f64;
            den += w * row[i] * col[j] / n;
        }
    }
    if den == 0.0 {
        return if num == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - num / den
}

/// Expected cost under `|i - j| / (K - 1)` by direct double loop.
pub fn brute_linear_cost(counts: &[Vec<u64>]) -> f64 {
    let k = counts.len();
    let mut total = 0.0;
    let mut n = 0.0;
    for i in 0..k {
        for j in 0..k {
            let c = counts[i][j] as f64;
            total += c * (i as f64 - j as f64).abs() / (k - 1) as f64;
            n += c;
        }
    }
    total / n
}

/// Expected cost under `((i - j) / (K - 1))^2`.
pub fn brute_quadratic_cost(counts: &[Vec<u64>]) -> f64 {
    let k = counts.len();
    let mut total = 0.0;
    let mut n = 0.0;
    for i in 0..k {
        for j in 0..k {
            let c = counts[i][j] as f64;
            let d = (i as f64 - j as f64) / (k - 1) as f64;
            total += c * d * d;
            n += c;
        }
    }
    total / n
}

/// Expected score `sum_y q_y S(p, y)`.
pub fn expected_score(q: &[f64], score: impl Fn(usize) -> f64) -> f64 {
    q.iter().enumerate().map(|(y, &qy)| qy * score(y)).sum()
}

/// All points of the K=3 probability simplex on a grid of `steps` per unit.
pub fn simplex_grid_3(steps: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for a in 0..=steps {
        for b in 0..=(steps - a) {
            let c = steps - a - b;
            let s = steps as f64;
            out.push([a as f64 / s, b as f64 / s, c as f64 / s]);
        }
    }
    out
}
