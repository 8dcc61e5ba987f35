//! Adjacency and Hashimoto spectra, threshold counting, non-Ramanujan
//! classification and the new spectrum of a covering map.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::graph::Graph;
use crate::linalg::inertia::{shifted_inertia, InertiaError};
use crate::linalg::lanczos::{top_eigenpairs, ChebyshevFilter, LanczosConfig, LanczosError, Target};
use crate::linalg::CsrMatrix;
use crate::models::CoveringMap;

/// Largest matrix handed to a dense eigensolver.
pub const DENSE_LIMIT: usize = 4096;
/// Below this size, threshold counts come from the full dense spectrum.
const SMALL: usize = 400;
const JITTER_RETRIES: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("matrix of size {size} exceeds the dense limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("shifted factorization broke down at shift {shift}")]
    FactorizationBreakdown { shift: f64 },
    #[error("method unsupported: {0}")]
    MethodUnsupported(String),
    #[error("graph is not regular")]
    NotRegular,
    #[error("old eigenvalue {re}{im:+}i has no partner in the total spectrum")]
    UnmatchedOldEigenvalue { re: f64, im: f64 },
    #[error(transparent)]
    Lanczos(#[from] LanczosError),
}

fn desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn dense_symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    desc(SymmetricEigen::new(m).eigenvalues.iter().copied().collect())
}

/// All adjacency eigenvalues, descending.
pub fn adjacency_spectrum(g: &Graph) -> Result<Vec<f64>, SpectralError> {
    let n = g.vertex_count();
    if n > DENSE_LIMIT {
        return Err(SpectralError::TooLarge { size: n, limit: DENSE_LIMIT });
    }
    Ok(dense_symmetric_eigenvalues(g.adjacency_matrix().map(|x| x as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMethod {
    /// Dense spectrum for small graphs, shifted inertia when its fill stays
    /// bounded, Lanczos otherwise.
    #[default]
    Auto,
    Dense,
    Inertia,
    Lanczos,
}

/// Number of adjacency eigenvalues `λ ≥ t − tol`.
pub fn count_adjacency_eigenvalues_geq(g: &Graph, t: f64, tol: f64) -> Result<usize, SpectralError> {
    count_adjacency_eigenvalues_geq_with(g, t, tol, CountMethod::Auto)
}

pub fn count_adjacency_eigenvalues_geq_with(
    g: &Graph,
    t: f64,
    tol: f64,
    method: CountMethod,
) -> Result<usize, SpectralError> {
    let n = g.vertex_count();
    let shift = t - tol;
    let dense = || adjacency_spectrum(g).map(|s| s.iter().filter(|&&l| l >= shift).count());
    match method {
        CountMethod::Dense => dense(),
        CountMethod::Lanczos => Ok(lanczos_above(g, shift, false)?.count),
        CountMethod::Inertia => match inertia_count(g, t, tol, usize::MAX) {
            Err(InertiaError::Singular) => Err(SpectralError::FactorizationBreakdown { shift }),
            Err(InertiaError::TooDense { .. }) => unreachable!("no dense limit requested"),
            Ok(c) => Ok(c),
        },
        CountMethod::Auto if n <= SMALL => dense(),
        CountMethod::Auto => match inertia_count(g, t, tol, DENSE_LIMIT) {
            Ok(c) => Ok(c),
            Err(_) if n <= DENSE_LIMIT => dense(),
            Err(InertiaError::TooDense { .. }) => Ok(lanczos_above(g, shift, false)?.count),
            Err(InertiaError::Singular) => Err(SpectralError::FactorizationBreakdown { shift }),
        },
    }
}

/// Inertia count at `t − tol`; a singular factorization is retried with the
/// shift moved further down inside a band of width `tol`.
fn inertia_count(g: &Graph, t: f64, tol: f64, max_dense: usize) -> Result<usize, InertiaError> {
    let a = CsrMatrix::adjacency(g);
    let mut last = InertiaError::Singular;
    for k in 0..=JITTER_RETRIES {
        let shift = t - tol * (1.0 + k as f64 / (2 * JITTER_RETRIES) as f64);
        match shifted_inertia(&a, shift, max_dense) {
            Ok(i) => return Ok(i.positive),
            Err(e @ InertiaError::TooDense { .. }) => return Err(e),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Eigenvalues from a Lanczos run: the exact ones contributed by deflated
/// component indicators, and converged Ritz values.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosProfile {
    pub count: usize,
    /// Descending.
    pub values: Vec<f64>,
}

/// Every eigenvalue `≥ cut` by filtered Lanczos. For a regular graph the
/// component indicators are exact eigenvectors for `d` and are deflated.
/// With `with_next`, `values` also contains the largest eigenvalue below
/// `cut` (when there is one).
fn lanczos_above(g: &Graph, cut: f64, with_next: bool) -> Result<LanczosProfile, SpectralError> {
    let n = g.vertex_count();
    let a = CsrMatrix::adjacency(g);
    let mut values = Vec::new();
    let mut deflate = Vec::new();
    if let Some(d) = g.regular_degree() {
        let comps = g.components();
        let k = comps.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; k];
        comps.iter().for_each(|&c| sizes[c] += 1);
        for (c, &size) in sizes.iter().enumerate() {
            let w = 1.0 / (size as f64).sqrt();
            deflate.push(comps.iter().map(|&x| if x == c { w } else { 0.0 }).collect::<Vec<f64>>());
            values.push(d as f64);
        }
    }
    let bound = a.max_abs_row_sum();
    let (lo, hi) = (-bound, bound);
    let c = cut - 0.0125 * (hi - lo);
    let filter = (c > lo).then_some(ChebyshevFilter { lo, c, degree: 40 });
    let cfg = LanczosConfig::default();
    let ritz = if deflate.len() < n {
        top_eigenpairs(&a, &deflate, filter, Target::DownTo(cut), &cfg)?
    } else {
        Vec::new()
    };
    let mut below: Vec<f64> = Vec::new();
    let mut found = Vec::new();
    for r in &ritz {
        if r.value >= cut {
            found.push(r.value);
        } else {
            below.push(r.value);
        }
    }
    let count = values.len() + found.len();
    values.extend(found);
    if with_next && values.len() < n {
        // the filter ranks eigenvalues in [lo, c] by |p(λ)|, not by value
        let next = match below.first() {
            Some(&v) if v >= c => Some(v),
            _ => {
                let cfg = LanczosConfig { best_effort: true, ..cfg };
                let plain = top_eigenpairs(&a, &deflate, None, Target::Top(values.len() - deflate.len() + 1), &cfg)?;
                plain.last().map(|r| r.value)
            }
        };
        values.extend(next);
    }
    Ok(LanczosProfile { count, values: desc(values) })
}

/// Threshold count and the two largest adjacency eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdProfile {
    pub count: usize,
    pub lambda1: f64,
    /// `NaN` for a one-vertex graph.
    pub lambda2: f64,
}

pub fn threshold_profile(g: &Graph, t: f64, tol: f64) -> Result<ThresholdProfile, SpectralError> {
    let n = g.vertex_count();
    let shift = t - tol;
    let top2 = |v: &[f64]| (v.first().copied().unwrap_or(f64::NAN), v.get(1).copied().unwrap_or(f64::NAN));
    if n <= SMALL {
        let spec = adjacency_spectrum(g)?;
        let (lambda1, lambda2) = top2(&spec);
        let count = spec.iter().filter(|&&l| l >= shift).count();
        return Ok(ThresholdProfile { count, lambda1, lambda2 });
    }
    let profile = lanczos_above(g, shift, true)?;
    let (lambda1, lambda2) = top2(&profile.values);
    let count = if n <= DENSE_LIMIT {
        count_adjacency_eigenvalues_geq(g, t, tol)?
    } else {
        match inertia_count(g, t, tol, DENSE_LIMIT) {
            Ok(c) => c,
            Err(InertiaError::TooDense { .. }) => profile.count,
            Err(InertiaError::Singular) => return Err(SpectralError::FactorizationBreakdown { shift }),
        }
    };
    Ok(ThresholdProfile { count, lambda1, lambda2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashimotoMethod {
    /// Dense nonsymmetric eigensolve of the Hashimoto matrix.
    #[default]
    Direct,
    /// Quadratic lifts of the adjacency spectrum via the Ihara determinant.
    Ihara,
}

/// The `|E^dir|` Hashimoto eigenvalues (unordered multiset).
pub fn hashimoto_spectrum(g: &Graph, method: HashimotoMethod) -> Result<Vec<Complex64>, SpectralError> {
    match method {
        HashimotoMethod::Direct => {
            let m = g.directed_edge_count();
            if m > DENSE_LIMIT {
                return Err(SpectralError::TooLarge { size: m, limit: DENSE_LIMIT });
            }
            if m == 0 {
                return Ok(Vec::new());
            }
            let h = g.hashimoto_matrix();
            let h = faer::Mat::<f64>::from_fn(m, m, |i, j| h[(i, j)] as f64);
            let values = h
                .eigenvalues()
                .map_err(|e| SpectralError::MethodUnsupported(format!("eigensolver failed: {e:?}")))?;
            Ok(values.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
        }
        HashimotoMethod::Ihara => ihara_lift(g),
    }
}

/// For a d-regular graph, `det(μI − H) = Π_λ (μ² − λμ + d − 1) · (μ+1)^{|half|}
/// · (μ² − 1)^{|pair| − |V|}`.
fn ihara_lift(g: &Graph) -> Result<Vec<Complex64>, SpectralError> {
    let d = g
        .regular_degree()
        .ok_or_else(|| SpectralError::MethodUnsupported("the Ihara lift needs a regular graph".into()))?;
    let counts = g.counts();
    let mut roots = Vec::with_capacity(g.directed_edge_count() + 2 * counts.vertices);
    for lambda in adjacency_spectrum(g)? {
        let disc = Complex64::new(lambda * lambda - 4.0 * (d as f64 - 1.0), 0.0).sqrt();
        roots.push((lambda + disc) / 2.0);
        roots.push((lambda - disc) / 2.0);
    }
    roots.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), counts.half_loops));
    let excess = counts.pairs as i64 - counts.vertices as i64;
    if excess >= 0 {
        for _ in 0..excess {
            roots.push(Complex64::new(1.0, 0.0));
            roots.push(Complex64::new(-1.0, 0.0));
        }
    } else {
        // negative exponent: cancel factors of μ² − 1 against the product
        for _ in 0..-excess {
            for target in [1.0, -1.0] {
                let (idx, dist) = roots
                    .iter()
                    .enumerate()
                    .map(|(i, z)| (i, (z - target).norm()))
                    .fold((usize::MAX, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
                if dist > 1e-6 {
                    return Err(SpectralError::MethodUnsupported(format!(
                        "no root at {target} to cancel in the Ihara lift"
                    )));
                }
                roots.swap_remove(idx);
            }
        }
    }
    Ok(roots)
}

/// Adjacency and Hashimoto spectra of a regular graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub adjacency_eigenvalues: Vec<f64>,
    #[serde(serialize_with = "serialize_complex")]
    pub hashimoto_eigenvalues: Vec<Complex64>,
    pub d: usize,
}

fn serialize_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

impl SpectrumReport {
    pub fn new(g: &Graph, method: HashimotoMethod) -> Result<Self, SpectralError> {
        let d = g.regular_degree().ok_or(SpectralError::NotRegular)?;
        Ok(Self {
            adjacency_eigenvalues: adjacency_spectrum(g)?,
            hashimoto_eigenvalues: hashimoto_spectrum(g, method)?,
            d,
        })
    }
}

/// Default tolerances for degree `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub real_tol: f64,
    pub special_tol: f64,
    pub threshold_tol: f64,
}

impl Tolerances {
    pub fn for_degree(d: usize) -> Self {
        let d = d as f64;
        Self {
            real_tol: 1e-8 * (d - 1.0),
            special_tol: 1e-8 * d,
            threshold_tol: 1e-9 * d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Witness {
    Adjacency(f64),
    Hashimoto(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonRamanujanReport {
    pub h_positive: usize,
    pub h_negative: usize,
    pub a_positive: usize,
    pub a_negative: usize,
    pub witnesses: Vec<Witness>,
}

impl NonRamanujanReport {
    pub fn is_ramanujan(&self) -> bool {
        self.h_positive + self.h_negative + self.a_positive + self.a_negative == 0
    }
}

fn hashimoto_special_values(d: usize) -> [f64; 3] {
    let q = d as f64 - 1.0;
    [1.0, q.sqrt(), q]
}

pub fn classify_non_ramanujan(report: &SpectrumReport, real_tol: f64, special_tol: f64) -> NonRamanujanReport {
    let d = report.d as f64;
    let special = hashimoto_special_values(report.d);
    let mut out = NonRamanujanReport {
        h_positive: 0,
        h_negative: 0,
        a_positive: 0,
        a_negative: 0,
        witnesses: Vec::new(),
    };
    for z in &report.hashimoto_eigenvalues {
        if z.im.abs() > real_tol {
            continue;
        }
        let x = z.re;
        if special.iter().any(|&s| (x.abs() - s).abs() <= special_tol) {
            continue;
        }
        if x > 0.0 {
            out.h_positive += 1;
        } else {
            out.h_negative += 1;
        }
        out.witnesses.push(Witness::Hashimoto(x));
    }
    let edge = 2.0 * (d - 1.0).sqrt();
    for &l in &report.adjacency_eigenvalues {
        if l.abs() > edge + special_tol && l.abs() < d - special_tol {
            if l > 0.0 {
                out.a_positive += 1;
            } else {
                out.a_negative += 1;
            }
            out.witnesses.push(Witness::Adjacency(l));
        }
    }
    out
}

/// Whether every real Hashimoto eigenvalue is a special value `±1, ±(d−1)`
/// or lies within relative `eps` of `±(d−1)^{1/2}` (both signs).
pub fn is_epsilon_spectral(report: &SpectrumReport, eps: f64) -> bool {
    let tol = Tolerances::for_degree(report.d);
    let q = report.d as f64 - 1.0;
    report
        .hashimoto_eigenvalues
        .iter()
        .filter(|z| z.im.abs() <= tol.real_tol)
        .all(|z| {
            let x = z.re.abs();
            (x - 1.0).abs() <= tol.special_tol || (x - q).abs() <= tol.special_tol || (1.0 - x / q.sqrt()).abs() < eps
        })
}

/// New adjacency and Hashimoto spectra of a cover.
#[derive(Debug, Clone, PartialEq)]
pub struct NewSpectra {
    pub adjacency: Vec<f64>,
    pub hashimoto: Vec<Complex64>,
}

/// Removes from `total` the nearest partner of every `old` value.
fn remove_old<T: Copy>(
    mut total: Vec<T>,
    old: &[T],
    dist: impl Fn(T, T) -> f64,
    size: impl Fn(T) -> f64,
    as_complex: impl Fn(T) -> Complex64,
) -> Result<Vec<T>, SpectralError> {
    for &o in old {
        let best = total
            .iter()
            .enumerate()
            .map(|(i, &x)| (i, dist(x, o)))
            .fold(None, |b: Option<(usize, f64)>, x| match b {
                Some(b) if b.1 <= x.1 => Some(b),
                _ => Some(x),
            });
        match best {
            Some((i, dd)) if dd <= 1e-6 * size(o).max(1.0) => {
                total.remove(i);
            }
            _ => {
                let z = as_complex(o);
                return Err(SpectralError::UnmatchedOldEigenvalue { re: z.re, im: z.im });
            }
        }
    }
    Ok(total)
}

pub fn new_spectra(cover: &CoveringMap) -> Result<NewSpectra, SpectralError> {
    let adjacency = remove_old(
        adjacency_spectrum(&cover.total)?,
        &adjacency_spectrum(&cover.base)?,
        |a, b| (a - b).abs(),
        f64::abs,
        |x| Complex64::new(x, 0.0),
    )?;
    let hashimoto = remove_old(
        hashimoto_spectrum(&cover.total, HashimotoMethod::Direct)?,
        &hashimoto_spectrum(&cover.base, HashimotoMethod::Direct)?,
        |a, b| (a - b).norm(),
        |z| z.norm(),
        |z| z,
    )?;
    Ok(NewSpectra { adjacency, hashimoto })
}

/// Greedy multiset distance: the largest nearest-partner distance after
/// matching `a` against `b` element by element, or `None` if sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut rest = b.to_vec();
    let mut worst = 0.0f64;
    for &x in a {
        let (i, dd) = rest
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
        worst = worst.max(dd);
        rest.swap_remove(i);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_bouquet, sample_cover, sample_permutation_model};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn adjacency_spectrum_examples() {
        assert!(close(&adjacency_spectrum(&Graph::complete(4)).unwrap(), &[3.0, -1.0, -1.0, -1.0], 1e-12));
        let mut pet = vec![3.0];
        pet.extend([1.0; 5]);
        pet.extend([-2.0; 4]);
        assert!(close(&adjacency_spectrum(&Graph::petersen()).unwrap(), &pet, 1e-12));
        assert!(close(&adjacency_spectrum(&build_bouquet(2, 0)).unwrap(), &[4.0], 0.0));
    }

    #[test]
    fn threshold_count_examples() {
        let t2 = 2.0 * 2f64.sqrt();
        assert_eq!(count_adjacency_eigenvalues_geq(&Graph::complete(4), t2, 1e-9).unwrap(), 1);
        assert_eq!(count_adjacency_eigenvalues_geq(&Graph::petersen(), t2, 1e-9).unwrap(), 1);
        let t3 = 2.0 * 3f64.sqrt();
        assert_eq!(count_adjacency_eigenvalues_geq(&build_bouquet(2, 0), t3, 1e-9).unwrap(), 1);
        for method in [CountMethod::Dense, CountMethod::Inertia, CountMethod::Lanczos] {
            assert_eq!(
                count_adjacency_eigenvalues_geq_with(&Graph::petersen(), t2, 1e-9, method).unwrap(),
                1,
                "{method:?}"
            );
        }
        // an eigenvalue exactly at the threshold is counted
        assert_eq!(count_adjacency_eigenvalues_geq_with(&Graph::petersen(), 1.0, 1e-9, CountMethod::Inertia).unwrap(), 6);
    }

    #[test]
    fn hashimoto_examples() {
        let s7 = 7f64.sqrt() / 2.0;
        let mut k4 = vec![c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)];
        for _ in 0..3 {
            k4.push(c(-0.5, s7));
            k4.push(c(-0.5, -s7));
        }
        for method in [HashimotoMethod::Direct, HashimotoMethod::Ihara] {
            let got = hashimoto_spectrum(&Graph::complete(4), method).unwrap();
            assert!(multiset_distance(&got, &k4).unwrap() < 1e-6, "{method:?}");
        }
        let b = vec![c(3.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        for method in [HashimotoMethod::Direct, HashimotoMethod::Ihara] {
            let got = hashimoto_spectrum(&build_bouquet(2, 0), method).unwrap();
            assert!(multiset_distance(&got, &b).unwrap() < 1e-9);
        }
        let h = vec![c(2.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)];
        for method in [HashimotoMethod::Direct, HashimotoMethod::Ihara] {
            let got = hashimoto_spectrum(&build_bouquet(0, 3), method).unwrap();
            assert!(multiset_distance(&got, &h).unwrap() < 1e-9);
        }
        let one = hashimoto_spectrum(&build_bouquet(0, 1), HashimotoMethod::Ihara).unwrap();
        assert!(multiset_distance(&one, &[c(0.0, 0.0)]).unwrap() < 1e-12);
    }

    #[test]
    fn classification_examples() {
        for g in [Graph::complete(4), Graph::petersen()] {
            let r = SpectrumReport::new(&g, HashimotoMethod::Direct).unwrap();
            let tol = Tolerances::for_degree(r.d);
            assert!(classify_non_ramanujan(&r, tol.real_tol, tol.special_tol).is_ramanujan());
        }
        let k4 = SpectrumReport::new(&Graph::complete(4), HashimotoMethod::Direct).unwrap();
        assert!(is_epsilon_spectral(&k4, 0.1));
        let b = SpectrumReport::new(&build_bouquet(2, 0), HashimotoMethod::Direct).unwrap();
        assert!(is_epsilon_spectral(&b, 0.1));
    }

    #[test]
    fn new_spectra_examples() {
        let base = build_bouquet(2, 0);
        let swap = vec![vec![1, 0]; 4];
        let cover = CoveringMap::from_permutations(&base, 2, &swap).unwrap();
        let new = new_spectra(&cover).unwrap();
        assert!(close(&new.adjacency, &[-4.0], 1e-9));
        assert_eq!(new.hashimoto.len(), 4);
        let id = CoveringMap::identity(&base);
        let new = new_spectra(&id).unwrap();
        assert!(new.adjacency.is_empty() && new.hashimoto.is_empty());
        let cover = sample_cover(&base, 9, 3).unwrap();
        let new = new_spectra(&cover).unwrap();
        assert_eq!(new.adjacency.len(), 8);
        assert_eq!(new.hashimoto.len(), 32);
    }

    #[test]
    fn profile_matches_dense_on_mid_sized_graphs() {
        let t = 2.0 * 3f64.sqrt();
        for seed in 0..6 {
            let g = sample_permutation_model(700, 4, seed).unwrap();
            let spec = adjacency_spectrum(&g).unwrap();
            let p = threshold_profile(&g, t, 4e-9).unwrap();
            assert_eq!(p.count, spec.iter().filter(|&&l| l >= t - 4e-9).count());
            assert!((p.lambda1 - spec[0]).abs() < 1e-9);
            assert!((p.lambda2 - spec[1]).abs() < 1e-7, "{} vs {}", p.lambda2, spec[1]);
            let lz = count_adjacency_eigenvalues_geq_with(&g, t, 4e-9, CountMethod::Lanczos).unwrap();
            assert_eq!(lz, p.count);
        }
    }
}
