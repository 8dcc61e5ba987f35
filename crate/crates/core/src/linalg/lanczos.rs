//! Lanczos iteration for the top of a sparse symmetric spectrum.
//!
//! The Krylov basis is kept and fully reorthogonalised (two passes of
//! classical Gram–Schmidt), so Ritz values do not produce ghost copies.
//! Known eigenvectors can be deflated, and the operator can be replaced by a
//! Chebyshev polynomial `p(A)` that is bounded by one on `[lo, c]` and grows
//! fast above `c`, which separates the eigenvalues just above `c`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevFilter {
    /// Lower end of the damped interval, at or below the smallest eigenvalue.
    pub lo: f64,
    /// Upper end of the damped interval.
    pub c: f64,
    pub degree: usize,
}

impl ChebyshevFilter {
    fn affine(&self) -> (f64, f64) {
        ((self.c + self.lo) / 2.0, (self.c - self.lo) / 2.0)
    }

    /// `T_degree((x − centre)/half_width)`
    pub fn eval(&self, x: f64) -> f64 {
        let (e, h) = self.affine();
        let y = (x - e) / h;
        if y.abs() <= 1.0 {
            (self.degree as f64 * y.acos()).cos()
        } else {
            let s = if y < 0.0 && self.degree % 2 == 1 { -1.0 } else { 1.0 };
            s * (self.degree as f64 * y.abs().acosh()).cosh()
        }
    }

    /// `y = scale · p(A) x`
    fn apply(&self, a: &CsrMatrix, x: &[f64], y: &mut [f64], scale: f64, work: &mut [Vec<f64>; 2]) {
        let (e, h) = self.affine();
        let n = x.len();
        let [prev, cur] = work;
        prev.copy_from_slice(x);
        if self.degree == 0 {
            y.iter_mut().zip(x).for_each(|(yi, xi)| *yi = scale * xi);
            return;
        }
        a.mul_vec(x, cur);
        for i in 0..n {
            cur[i] = (cur[i] - e * x[i]) / h;
        }
        for _ in 1..self.degree {
            a.mul_vec(cur, y);
            for i in 0..n {
                let next = 2.0 * (y[i] - e * cur[i]) / h - prev[i];
                prev[i] = cur[i];
                cur[i] = next;
            }
        }
        y.iter_mut().zip(cur.iter()).for_each(|(yi, ci)| *yi = scale * ci);
    }
}

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// The `k` largest eigenvalues.
    Top(usize),
    /// Every eigenvalue `≥ cut`, plus the largest one below it.
    DownTo(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    pub max_steps: usize,
    pub check_every: usize,
    /// Ritz pairs count as converged when the residual estimate is below
    /// `rel_tol · max |θ|` in operator space.
    pub rel_tol: f64,
    pub seed: u64,
    /// Return the current Ritz pairs instead of failing when `max_steps` is
    /// reached.
    pub best_effort: bool,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_steps: 400,
            check_every: 10,
            rel_tol: 1e-10,
            seed: 0x6c61_6e63_7a6f_7321,
            best_effort: false,
        }
    }
}

/// An approximate eigenpair, reported through its Rayleigh quotient with
/// respect to `A` (not the filtered operator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ritz {
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LanczosError {
    #[error("Lanczos did not converge within {steps} steps")]
    NotConverged { steps: usize },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, w)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(-c, q, w);
        }
    }
}

/// Top eigenpairs of `A` on the orthogonal complement of `deflate` (which
/// must be orthonormal eigenvectors of `A`), descending by value.
pub fn top_eigenpairs(
    a: &CsrMatrix,
    deflate: &[Vec<f64>],
    filter: Option<ChebyshevFilter>,
    target: Target,
    cfg: &LanczosConfig,
) -> Result<Vec<Ritz>, LanczosError> {
    let n = a.n;
    let room = n.saturating_sub(deflate.len());
    if room == 0 {
        return Ok(Vec::new());
    }
    let scale = match (filter, target) {
        (Some(f), Target::DownTo(cut)) => 1.0 / f.eval(cut).abs().max(1.0),
        _ => 1.0,
    };
    let op_cut = match target {
        Target::DownTo(cut) => Some(filter.map_or(cut, |f| scale * f.eval(cut))),
        Target::Top(_) => None,
    };
    let mut work = [vec![0.0; n], vec![0.0; n]];
    let mut apply = |x: &[f64], y: &mut [f64]| match &filter {
        Some(f) => f.apply(a, x, y, scale, &mut work),
        None => a.mul_vec(x, y),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    orthogonalize(&mut q, deflate);
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let steps = cfg.max_steps.min(room);
    loop {
        let j = basis.len() - 1;
        apply(&basis[j], &mut w);
        orthogonalize(&mut w, deflate);
        let aj = dot(&basis[j], &w);
        alpha.push(aj);
        orthogonalize(&mut w, &basis);
        let bj = dot(&w, &w).sqrt();
        let m = alpha.len();
        let exhausted = m == room || bj <= 1e-12 * alpha.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        let check = exhausted || m == steps || m.is_multiple_of(cfg.check_every);
        if check {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
            let theta_max = eig.eigenvalues.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            let converged = |i: usize| exhausted || bj * eig.eigenvectors[(m - 1, order[i])].abs() <= cfg.rel_tol * theta_max;
            let (need, enough) = match (target, op_cut) {
                (Target::Top(k), _) => (k.min(m), m >= k.min(room)),
                (Target::DownTo(_), Some(oc)) => {
                    let above = order.iter().take_while(|&&i| eig.eigenvalues[i] >= oc).count();
                    ((above + 1).min(m), above < m || exhausted)
                }
                _ => unreachable!(),
            };
            let give_up = m == steps && cfg.best_effort;
            if give_up || (enough && (0..need).all(converged)) {
                let mut pairs: Vec<Ritz> = order[..need]
                    .iter()
                    .map(|&col| ritz(a, &basis, eig.eigenvectors.column(col).as_slice()))
                    .collect();
                pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
                return Ok(pairs);
            }
            if exhausted || m == steps {
                return Err(LanczosError::NotConverged { steps: m });
            }
        }
        beta.push(bj);
        w.iter_mut().for_each(|x| *x /= bj);
        basis.push(std::mem::replace(&mut w, vec![0.0; n]));
    }
}

fn ritz(a: &CsrMatrix, basis: &[Vec<f64>], s: &[f64]) -> Ritz {
    let n = a.n;
    let mut x = vec![0.0; n];
    for (q, &c) in basis.iter().zip(s) {
        axpy(c, q, &mut x);
    }
    let norm = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    let mut ax = vec![0.0; n];
    a.mul_vec(&x, &mut ax);
    let value = dot(&x, &ax);
    axpy(-value, &x, &mut ax);
    Ritz {
        value,
        residual: dot(&ax, &ax).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sample_permutation_model;
    use nalgebra::SymmetricEigen;

    fn dense_desc(g: &crate::Graph) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(g.adjacency_matrix().map(|x| x as f64))
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    fn constant(n: usize) -> Vec<f64> {
        vec![1.0 / (n as f64).sqrt(); n]
    }

    #[test]
    fn chebyshev_filter_values() {
        let f = ChebyshevFilter { lo: -1.0, c: 1.0, degree: 3 };
        assert!((f.eval(0.5) - (4.0 * 0.125 - 3.0 * 0.5)).abs() < 1e-14);
        assert!((f.eval(2.0) - (4.0 * 8.0 - 6.0)).abs() < 1e-10);
        assert!((f.eval(-2.0) + 26.0).abs() < 1e-10);
    }

    #[test]
    fn plain_top_values_match_dense() {
        let g = sample_permutation_model(300, 4, 7).unwrap();
        let a = CsrMatrix::adjacency(&g);
        let dense = dense_desc(&g);
        let top = top_eigenpairs(&a, &[], None, Target::Top(1), &LanczosConfig::default()).unwrap();
        assert!((top[0].value - dense[0]).abs() < 1e-9);
        let defl = top_eigenpairs(&a, &[constant(300)], None, Target::Top(1), &LanczosConfig::default()).unwrap();
        assert!((defl[0].value - dense[1]).abs() < 1e-6, "{} vs {}", defl[0].value, dense[1]);
    }

    #[test]
    fn filtered_values_down_to_cut_match_dense() {
        for seed in 0..5 {
            let g = sample_permutation_model(400, 4, seed).unwrap();
            if g.component_count() != 1 {
                continue;
            }
            let a = CsrMatrix::adjacency(&g);
            let dense = dense_desc(&g);
            let cut = 3.3;
            let filter = ChebyshevFilter { lo: -4.0, c: 3.2, degree: 20 };
            let got = top_eigenpairs(&a, &[constant(400)], Some(filter), Target::DownTo(cut), &LanczosConfig::default())
                .unwrap();
            let expect: Vec<f64> = dense[1..].iter().copied().filter(|&x| x >= cut).collect();
            let found: Vec<f64> = got.iter().map(|r| r.value).filter(|&x| x >= cut).collect();
            assert_eq!(found.len(), expect.len(), "seed {seed}");
            for (x, y) in found.iter().zip(&expect) {
                assert!((x - y).abs() < 1e-8);
            }
            assert!(got.last().unwrap().value < cut);
        }
    }
}
