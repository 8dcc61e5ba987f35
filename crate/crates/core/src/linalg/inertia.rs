//! Inertia of shifted sparse symmetric matrices.
//!
//! `A − σI` is factored as `P (L D Lᵀ) Pᵀ`; by Sylvester's law of inertia the
//! number of eigenvalues of `A` above `σ` equals the number of positive
//! eigenvalues of the block-diagonal `D`. Elimination starts sparse in
//! minimum-degree order with a threshold test on each pivot; pivots that fail
//! the test are deferred, and once the remaining Schur complement is dense it
//! is finished with Bunch–Kaufman diagonal pivoting.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::sparse::CsrMatrix;

/// Sparse pivots must satisfy `|d| ≥ THRESHOLD · max_i |a_ip|`.
const THRESHOLD: f64 = 0.01;
/// Switch to dense once the pivot degree reaches this fraction of the remainder.
const DENSE_FRACTION: f64 = 0.25;
const DENSE_MIN: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum InertiaError {
    /// A pivot is numerically zero: the shift is (close to) an eigenvalue.
    #[error("singular pivot in shifted factorization")]
    Singular,
    /// Fill-in left a dense Schur complement larger than the allowed size.
    #[error("dense Schur complement of size {size} exceeds the limit")]
    TooDense { size: usize },
}

/// Inertia of `A − shift·I`. The factorization is abandoned when the dense
/// remainder would exceed `max_dense` rows.
pub fn shifted_inertia(a: &CsrMatrix, shift: f64, max_dense: usize) -> Result<Inertia, InertiaError> {
    let n = a.n;
    let scale = a.max_abs_row_sum().max(shift.abs()).max(1.0);
    let mut diag = vec![-shift; n];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in a.row(i) {
            if j == i {
                diag[i] += v;
            } else {
                row.push((j, v));
            }
        }
    }
    // fill guard: beyond this many stored entries the dense remainder cannot
    // be expected to fit
    let mut stored: usize = rows.iter().map(Vec::len).sum();
    let budget = (4 * stored).saturating_add(max_dense.saturating_mul(max_dense) / 4);
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|i| Reverse((rows[i].len(), i))).collect();
    let mut deferred = vec![false; n];
    let mut inertia = Inertia {
        positive: 0,
        negative: 0,
    };

    while let Some(Reverse((deg, p))) = heap.pop() {
        if !alive[p] || deferred[p] || deg != rows[p].len() {
            continue;
        }
        if remaining <= DENSE_MIN || deg as f64 >= DENSE_FRACTION * remaining as f64 {
            break;
        }
        if stored > budget {
            return Err(InertiaError::TooDense { size: remaining });
        }
        let piv = diag[p];
        let row_max = rows[p].iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        if piv.abs() < THRESHOLD * row_max || piv.abs() <= 1e-13 * scale {
            deferred[p] = true;
            continue;
        }
        if piv > 0.0 {
            inertia.positive += 1;
        } else {
            inertia.negative += 1;
        }
        alive[p] = false;
        remaining -= 1;
        let nbrs = std::mem::take(&mut rows[p]);
        stored -= nbrs.len();
        for &(i, a_ip) in &nbrs {
            let l = a_ip / piv;
            diag[i] -= l * a_ip;
            let update = nbrs
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(j, a_jp)| (j, -l * a_jp));
            stored -= rows[i].len();
            rows[i] = merge_rows(rows[i].iter().copied().filter(|&(j, _)| j != p), update);
            stored += rows[i].len();
            if !deferred[i] {
                heap.push(Reverse((rows[i].len(), i)));
            }
        }
        // a deferred pivot may become acceptable after its row changes
        for &(i, _) in &nbrs {
            if deferred[i] {
                deferred[i] = false;
                heap.push(Reverse((rows[i].len(), i)));
            }
        }
    }

    let rest: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    if rest.is_empty() {
        return Ok(inertia);
    }
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in rest.iter().enumerate() {
        pos[i] = k;
    }
    let r = rest.len();
    if r > max_dense {
        return Err(InertiaError::TooDense { size: r });
    }
    let mut dense = vec![0.0; r * r];
    for (k, &i) in rest.iter().enumerate() {
        dense[k * r + k] = diag[i];
        for &(j, v) in &rows[i] {
            dense[k * r + pos[j]] = v;
        }
    }
    let tail = bunch_kaufman_inertia(&mut dense, r, scale)?;
    inertia.positive += tail.positive;
    inertia.negative += tail.negative;
    Ok(inertia)
}

fn merge_rows(
    a: impl Iterator<Item = (usize, f64)>,
    b: impl Iterator<Item = (usize, f64)>,
) -> Vec<(usize, f64)> {
    let mut a = a.peekable();
    let mut b = b.peekable();
    let mut out = Vec::new();
    loop {
        match (a.peek().copied(), b.peek().copied()) {
            (Some((ja, va)), Some((jb, vb))) => {
                if ja == jb {
                    out.push((ja, va + vb));
                    a.next();
                    b.next();
                } else if ja < jb {
                    out.push((ja, va));
                    a.next();
                } else {
                    out.push((jb, vb));
                    b.next();
                }
            }
            (Some(x), None) => {
                out.push(x);
                a.next();
            }
            (None, Some(x)) => {
                out.push(x);
                b.next();
            }
            (None, None) => return out,
        }
    }
}

fn swap_sym(m: &mut [f64], r: usize, i: usize, j: usize) {
    if i == j {
        return;
    }
    for c in 0..r {
        m.swap(i * r + c, j * r + c);
    }
    for row in 0..r {
        m.swap(row * r + i, row * r + j);
    }
}

/// Inertia of a dense symmetric matrix (row-major, full storage, destroyed).
pub fn bunch_kaufman_inertia(m: &mut [f64], r: usize, scale: f64) -> Result<Inertia, InertiaError> {
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let tiny = 1e-13 * scale;
    let mut inertia = Inertia {
        positive: 0,
        negative: 0,
    };
    let mut k = 0;
    while k < r {
        let akk = m[k * r + k].abs();
        let (ip, lambda) = (k + 1..r)
            .map(|i| (i, m[i * r + k].abs()))
            .fold((k, 0.0), |best, x| if x.1 > best.1 { x } else { best });
        if akk.max(lambda) <= tiny {
            return Err(InertiaError::Singular);
        }
        let two_by_two = if akk >= alpha * lambda {
            false
        } else {
            let sigma = (k..r)
                .filter(|&j| j != ip)
                .map(|j| m[ip * r + j].abs())
                .fold(0.0, f64::max);
            if akk * sigma >= alpha * lambda * lambda {
                false
            } else if m[ip * r + ip].abs() >= alpha * sigma {
                swap_sym(m, r, k, ip);
                false
            } else {
                swap_sym(m, r, k + 1, ip);
                true
            }
        };
        if !two_by_two {
            let d = m[k * r + k];
            if d.abs() <= tiny {
                return Err(InertiaError::Singular);
            }
            if d > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
            for i in k + 1..r {
                let l = m[i * r + k] / d;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=i {
                    m[i * r + j] -= l * m[j * r + k];
                }
            }
            // restore symmetry of the updated trailing block
            for i in k + 1..r {
                for j in i + 1..r {
                    m[i * r + j] = m[j * r + i];
                }
            }
            k += 1;
        } else {
            let (a, b, c) = (m[k * r + k], m[(k + 1) * r + k], m[(k + 1) * r + k + 1]);
            let det = a * c - b * b;
            if det.abs() <= tiny * tiny {
                return Err(InertiaError::Singular);
            }
            if det < 0.0 {
                inertia.positive += 1;
                inertia.negative += 1;
            } else if a + c > 0.0 {
                inertia.positive += 2;
            } else {
                inertia.negative += 2;
            }
            // Schur complement: S -= [x y] D⁻¹ [x y]ᵀ
            for i in k + 2..r {
                let (xi, yi) = (m[i * r + k], m[i * r + k + 1]);
                let ui = (c * xi - b * yi) / det;
                let vi = (a * yi - b * xi) / det;
                for j in k + 2..=i {
                    let (xj, yj) = (m[j * r + k], m[j * r + k + 1]);
                    m[i * r + j] -= ui * xj + vi * yj;
                }
            }
            for i in k + 2..r {
                for j in i + 1..r {
                    m[i * r + j] = m[j * r + i];
                }
            }
            k += 2;
        }
    }
    Ok(inertia)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense_count_above(g: &Graph, shift: f64) -> usize {
        let a = g.adjacency_matrix().map(|x| x as f64);
        SymmetricEigen::new(a)
            .eigenvalues
            .iter()
            .filter(|&&l| l > shift)
            .count()
    }

    #[test]
    fn complete_graph_inertia() {
        let k4 = Graph::complete(4);
        let a = CsrMatrix::adjacency(&k4);
        assert_eq!(shifted_inertia(&a, 0.0, 10).unwrap(), Inertia { positive: 1, negative: 3 });
        assert_eq!(shifted_inertia(&a, -1.5, 10).unwrap(), Inertia { positive: 4, negative: 0 });
        assert!(shifted_inertia(&a, -1.0, 10).is_err());
    }

    #[test]
    fn bunch_kaufman_handles_zero_diagonal() {
        // [[0,1],[1,0]] needs a 2×2 pivot
        let mut m = vec![0.0, 1.0, 1.0, 0.0];
        assert_eq!(
            bunch_kaufman_inertia(&mut m, 2, 1.0).unwrap(),
            Inertia { positive: 1, negative: 1 }
        );
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 2.0, 0.0, 1.0, 0.0, 1.0, -3.0]);
        let expect = SymmetricEigen::new(d.clone()).eigenvalues;
        let mut m: Vec<f64> = d.transpose().iter().copied().collect();
        let got = bunch_kaufman_inertia(&mut m, 3, 3.0).unwrap();
        assert_eq!(got.positive, expect.iter().filter(|&&x| x > 0.0).count());
        assert_eq!(got.negative, expect.iter().filter(|&&x| x < 0.0).count());
    }

    #[test]
    fn random_regular_graphs_match_dense_counts() {
        for seed in 0..20 {
            let g = crate::models::sample_permutation_model(150, 4, seed).unwrap();
            let a = CsrMatrix::adjacency(&g);
            for shift in [3.4641016, 2.0, 0.1234, -1.7] {
                let got = shifted_inertia(&a, shift, 150).unwrap();
                assert_eq!(got.positive, dense_count_above(&g, shift), "seed {seed} shift {shift}");
                assert_eq!(got.positive + got.negative, 150);
            }
        }
    }

    #[test]
    fn dense_limit_is_enforced() {
        let g = crate::models::sample_permutation_model(400, 4, 1).unwrap();
        let a = CsrMatrix::adjacency(&g);
        assert!(matches!(shifted_inertia(&a, 0.5, 10), Err(InertiaError::TooDense { .. })));
    }
}
