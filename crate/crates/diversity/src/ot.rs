//! Exact optimal transport between empirical measures.

use rayon::prelude::*;

use forge_core::error::{ensure_dim, invalid, Result};
use forge_core::SampleSet;

/// Default cap on the number of points matched by [`w1_empirical`].
pub const DEFAULT_MAX_POINTS: usize = 2048;

/// Minimum-cost perfect matching on a dense `n x n` cost matrix
/// (Hungarian method with potentials, `O(n^3)`). Returns the column
/// assigned to each row.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    ensure_dim(n * n, cost.len(), "cost matrix")?;
    if cost.iter().any(|c| !c.is_finite()) {
        return invalid("cost matrix has non-finite entries");
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = none)
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[p[j] - 1] = j - 1;
    }
    Ok(out)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pairwise Euclidean costs, row-major.
pub fn cost_matrix(p: &SampleSet, q: &SampleSet) -> Vec<f64> {
    (0..p.n())
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = p.row(i);
            (0..q.n()).map(move |j| euclid(a, q.row(j)))
        })
        .collect()
}

/// Total of the matched costs, summed in ascending order so the result does
/// not depend on which side is the row set.
fn matched_mean(costs: &mut [f64]) -> f64 {
    costs.sort_by(f64::total_cmp);
    costs.iter().sum::<f64>() / costs.len() as f64
}

/// W1 between the empirical measures of `p` and `q`.
///
/// Both sets are truncated to the first `min(n_p, n_q, DEFAULT_MAX_POINTS)` rows.
pub fn w1_empirical(p: &SampleSet, q: &SampleSet) -> Result<f64> {
    w1_empirical_capped(p, q, DEFAULT_MAX_POINTS)
}

pub fn w1_empirical_capped(p: &SampleSet, q: &SampleSet, cap: usize) -> Result<f64> {
    ensure_dim(p.d(), q.d(), "sample dimension")?;
    let n = p.n().min(q.n()).min(cap);
    if n == 0 {
        return invalid("empty sample set");
    }
    let (p, q) = (p.head(n), q.head(n));
    let cost = cost_matrix(&p, &q);
    let assign = min_cost_assignment(&cost, n)?;
    let mut matched: Vec<f64> = assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
    Ok(matched_mean(&mut matched))
}

/// W1 between two empirical measures on the line, of any sizes:
/// the integral of `|F - G|`.
pub fn w1_line(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return invalid("empty sample");
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return invalid("non-finite sample value");
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() == b.len() {
        let mut d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
        return Ok(matched_mean(&mut d));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut prev = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::Provenance;

    fn set(rows: &[Vec<f64>]) -> SampleSet {
        SampleSet::from_rows(rows, Provenance::new("test", 0)).unwrap()
    }

    #[test]
    fn point_masses() {
        let p = set(&[vec![0.0, 0.0]]);
        let q = set(&[vec![1.0, 0.0]]);
        assert_eq!(w1_empirical(&p, &q).unwrap(), 1.0);
        assert_eq!(w1_empirical(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn assignment_small() {
        let c = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        assert_eq!(min_cost_assignment(&c, 3).unwrap(), vec![1, 0, 2]);
    }

    #[test]
    fn line_unequal_sizes() {
        // {0} vs {0, 1}: mass 1/2 moves distance 1
        assert_eq!(w1_line(&[0.0], &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(w1_line(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 0.0);
    }
}
