//! Exact non-backtracking traces, the divisor-sum prediction for their
//! expectation, Monte Carlo estimates, a brute-force expectation over all
//! permutation tuples, and empirical `1/n` fits.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::graph::Graph;
use crate::models::{derive_seed, graph_from_permutations, ModelError, ModelId};

/// Work budget (edge relaxations) for one exact trace computation.
pub const TRACE_WORK_LIMIT: u128 = 20_000_000_000;
/// Largest number of permutation tuples the exact expectation enumerates.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("exact computation too large: {0}")]
    TooLarge(String),
    #[error("trace of H^{k} overflows 128 bits")]
    Overflow { k: usize },
    #[error("walk enumeration gives {walks} but propagation gives {trace} for k = {k}")]
    CrossCheck { k: usize, walks: u128, trace: u128 },
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `Tr(H^j)` for `j = 0..=k_max`, by propagating walk counts from every
/// directed edge separately along non-backtracking successors.
pub fn hashimoto_traces(g: &Graph, k_max: usize) -> Result<Vec<u128>, TraceError> {
    let m = g.directed_edge_count();
    let succ = g.nonbacktracking_successors();
    let branching = succ.iter().map(Vec::len).max().unwrap_or(0) as u128;
    let mut work: u128 = 0;
    let mut front: u128 = 1;
    for _ in 0..k_max {
        front = (front * branching.max(1)).min(m as u128);
        work = work.saturating_add(front * branching * m as u128);
    }
    if work > TRACE_WORK_LIMIT {
        return Err(TraceError::TooLarge(format!(
            "about {work} steps for {m} directed edges and k = {k_max}"
        )));
    }
    let mut traces = vec![0u128; k_max + 1];
    traces[0] = m as u128;
    let mut cur = vec![0u128; m];
    let mut next = vec![0u128; m];
    let mut cur_list: Vec<usize> = Vec::new();
    let mut next_list: Vec<usize> = Vec::new();
    for source in 0..m {
        cur_list.clear();
        cur_list.push(source);
        cur[source] = 1;
        for trace in traces.iter_mut().skip(1) {
            for &e in &cur_list {
                let c = cur[e];
                for &f in &succ[e] {
                    if next[f] == 0 {
                        next_list.push(f);
                    }
                    next[f] = next[f].checked_add(c).ok_or(TraceError::Overflow { k: k_max })?;
                }
                cur[e] = 0;
            }
            *trace = trace.checked_add(next[source]).ok_or(TraceError::Overflow { k: k_max })?;
            std::mem::swap(&mut cur, &mut next);
            std::mem::swap(&mut cur_list, &mut next_list);
            next_list.clear();
        }
        for &e in &cur_list {
            cur[e] = 0;
        }
    }
    Ok(traces)
}

/// `Tr(H^k)`, the number of strictly non-backtracking closed walks of length
/// `k`. Small cases are cross-checked against explicit enumeration.
pub fn tr_hashimoto_power(g: &Graph, k: usize) -> Result<u128, TraceError> {
    let trace = hashimoto_traces(g, k)?[k];
    if g.directed_edge_count() <= 64 && k <= 6 {
        let walks = count_closed_nonbacktracking_walks(g, k);
        if walks != trace {
            return Err(TraceError::CrossCheck { k, walks, trace });
        }
    }
    Ok(trace)
}

/// Depth-first enumeration of closed walks `e_0 e_1 … e_{k−1}` with
/// `h(e_i) = t(e_{i+1})` and `e_{i+1} ≠ ι(e_i)`, cyclically.
pub fn count_closed_nonbacktracking_walks(g: &Graph, k: usize) -> u128 {
    let m = g.directed_edge_count();
    if k == 0 {
        return m as u128;
    }
    let out = g.out_edges();
    fn extend(g: &Graph, out: &[Vec<usize>], first: usize, last: usize, left: usize) -> u128 {
        if left == 0 {
            let closes = g.head(last) == g.tail(first) && first != g.opposite(last);
            return u128::from(closes);
        }
        out[g.head(last)]
            .iter()
            .filter(|&&f| f != g.opposite(last))
            .map(|&f| extend(g, out, first, f, left - 1))
            .sum()
    }
    (0..m).map(|e| extend(g, &out, e, e, k - 1)).sum()
}

/// `Σ_{k' | k} (d−1)^{k'}`.
pub fn p0_divisor_sum(k: u32, d: u32) -> BigInt {
    assert!(k >= 1, "k must be positive");
    let q = BigInt::from(d) - BigInt::from(1);
    (1..=k).filter(|j| k.is_multiple_of(*j)).map(|j| q.pow(j)).sum()
}

fn serialize_u128s<S: serde::Serializer>(v: &[u128], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

/// Monte Carlo estimate of `E[Tr(H^k)]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEstimate {
    pub model: ModelId,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    pub master_seed: u64,
    /// Per-sample traces, in sample order.
    #[serde(serialize_with = "serialize_u128s")]
    pub values: Vec<u128>,
}

/// Mean and standard error (sample standard deviation over `√len`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let s = values.len() as f64;
    let mean = values.iter().sum::<f64>() / s;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1.0);
    (mean, (var / s).sqrt())
}

pub fn estimate_expected_trace(
    model: &ModelId,
    n: usize,
    d: usize,
    k: usize,
    samples: usize,
    master_seed: u64,
) -> Result<TraceEstimate, TraceError> {
    if samples == 0 {
        return Err(ModelError::InvalidParams("samples must be at least 1".into()).into());
    }
    model.validate(n, d)?;
    let values = (0..samples)
        .into_par_iter()
        .map(|i| {
            let g = model.sample(n, d, derive_seed(master_seed, i as u64))?;
            Ok(hashimoto_traces(&g, k)?[k])
        })
        .collect::<Result<Vec<u128>, TraceError>>()?;
    let as_f64: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    let (mean, stderr) = mean_stderr(&as_f64);
    Ok(TraceEstimate {
        model: model.clone(),
        n,
        d,
        k,
        samples,
        mean,
        stderr,
        master_seed,
        values,
    })
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Exact `E[Tr(H^k)]` under the permutation model, averaging over all
/// `(n!)^{d/2}` permutation tuples.
pub fn exact_expected_trace_small(n: usize, d: usize, k: usize) -> Result<BigRational, TraceError> {
    ModelId::Perm.validate(n, d)?;
    let fact = (1..=n as u128).try_fold(1u128, |acc, i| acc.checked_mul(i));
    let tuples = fact.and_then(|f| (0..d / 2).try_fold(1u128, |acc, _| acc.checked_mul(f)));
    let tuples = match tuples {
        Some(t) if t <= ENUMERATION_LIMIT => t as usize,
        _ => {
            return Err(TraceError::TooLarge(format!(
                "({n}!)^{} permutation tuples exceed {ENUMERATION_LIMIT}",
                d / 2
            )))
        }
    };
    let perms = all_permutations(n);
    let mut total = BigInt::zero();
    let mut idx = vec![0usize; d / 2];
    for _ in 0..tuples {
        let tuple: Vec<Vec<usize>> = idx.iter().map(|&i| perms[i].clone()).collect();
        let g = graph_from_permutations(n, &tuple);
        total += BigInt::from(hashimoto_traces(&g, k)?[k]);
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < perms.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(BigRational::new(total, BigInt::from(tuples)))
}

/// Weighted least-squares fit of `E[Tr(H^k)] ≈ a + b/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionFit {
    pub model: ModelId,
    pub k: usize,
    pub d: usize,
    pub n_grid: Vec<usize>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    /// `√(Σ wᵢ rᵢ²)` with weights `1/stderrᵢ²`.
    pub residual_norm: f64,
}

/// Fits `a + b/n` to `(n, mean ± stderr)` points.
pub fn fit_inverse_n(points: &[(usize, f64, f64)]) -> Result<(f64, f64, f64, f64, f64), TraceError> {
    let mut distinct: Vec<usize> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(TraceError::IllConditioned(format!(
            "{} distinct n values; at least 3 are needed",
            distinct.len()
        )));
    }
    let floor = points.iter().map(|p| p.2).filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    let (mut s00, mut s01, mut s11, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(n, y, se) in points {
        let w = 1.0 / se.max(floor).powi(2);
        let x = 1.0 / n as f64;
        s00 += w;
        s01 += w * x;
        s11 += w * x * x;
        t0 += w * y;
        t1 += w * x * y;
    }
    let det = s00 * s11 - s01 * s01;
    if det <= 1e-12 * s00 * s11 {
        return Err(TraceError::IllConditioned("normal equations are singular".into()));
    }
    let a = (s11 * t0 - s01 * t1) / det;
    let b = (s00 * t1 - s01 * t0) / det;
    let resid = points
        .iter()
        .map(|&(n, y, se)| (y - a - b / n as f64).powi(2) / se.max(floor).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok((a, (s11 / det).sqrt(), b, (s00 / det).sqrt(), resid))
}

pub fn fit_expansion_coefficients(
    model: &ModelId,
    d: usize,
    k: usize,
    n_grid: &[usize],
    samples_per_n: usize,
    master_seed: u64,
) -> Result<ExpansionFit, TraceError> {
    let mut distinct = n_grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(TraceError::IllConditioned(format!(
            "{} distinct n values; at least 3 are needed",
            distinct.len()
        )));
    }
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let est = estimate_expected_trace(model, n, d, k, samples_per_n, master_seed)?;
        points.push((n, est.mean, est.stderr));
    }
    let (intercept, intercept_stderr, slope, slope_stderr, residual_norm) = fit_inverse_n(&points)?;
    Ok(ExpansionFit {
        model: model.clone(),
        k,
        d,
        n_grid: n_grid.to_vec(),
        means: points.iter().map(|p| p.1).collect(),
        stderrs: points.iter().map(|p| p.2).collect(),
        intercept,
        intercept_stderr,
        slope,
        slope_stderr,
        residual_norm,
    })
}
