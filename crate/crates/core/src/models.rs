//! Seeded samplers for random regular multigraphs and random covers.
//!
//! All samplers are pure functions of their parameters and a `u64` seed. The
//! seed initialises a ChaCha8 stream; permutations come from a Fisher–Yates
//! shuffle, a uniform `n`-cycle from closing a shuffled order into a cycle,
//! and a uniform perfect matching from pairing consecutive elements of a
//! shuffled order.
//!
//! Cover orientation convention: for a non-half-loop base edge pair
//! `{e, ι(e)}` the lower-indexed directed edge receives the sampled
//! permutation `σ` and its opposite receives `σ⁻¹`. The lift of base edge `e`
//! over fibre element `i` runs from `(t(e), i)` to `(h(e), σ_e(i))`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `index` in a run with `master_seed`:
/// `mix64(master_seed + (index + 1)·γ)` with `γ = 0x9E3779B97F4A7C15`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which random model a census or trace estimate draws from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    /// `d/2` uniform permutations.
    Perm,
    /// `d/2` uniform single `n`-cycles.
    Cycle,
    /// `d` uniform perfect matchings.
    Match,
    /// Random degree-`n` cover of a base graph.
    Cover(Graph),
}

impl ModelId {
    pub fn name(&self) -> &'static str {
        match self {
            ModelId::Perm => "perm",
            ModelId::Cycle => "cycle",
            ModelId::Match => "match",
            ModelId::Cover(_) => "cover",
        }
    }

    /// Checks `(n, d)` against the model's constraints. For covers `d` is
    /// ignored (the degree is inherited from the base).
    pub fn validate(&self, n: usize, d: usize) -> Result<(), ModelError> {
        match self {
            ModelId::Perm => check_perm_params(n, d),
            ModelId::Cycle => {
                check_perm_params(n, d)?;
                if n < 2 {
                    return Err(ModelError::InvalidParams("cycle model needs n ≥ 2".into()));
                }
                Ok(())
            }
            ModelId::Match => check_match_params(n, d),
            ModelId::Cover(_) => {
                if n == 0 {
                    return Err(ModelError::InvalidParams("cover degree must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Draws one graph. For covers this is the total graph of the cover.
    pub fn sample(&self, n: usize, d: usize, seed: u64) -> Result<Graph, ModelError> {
        match self {
            ModelId::Perm => sample_permutation_model(n, d, seed),
            ModelId::Cycle => sample_single_cycle_model(n, d, seed),
            ModelId::Match => sample_matching_model(n, d, seed),
            ModelId::Cover(base) => Ok(sample_cover(base, n, seed)?.total),
        }
    }
}

fn check_perm_params(n: usize, d: usize) -> Result<(), ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidParams("n must be positive".into()));
    }
    if d < 4 || !d.is_multiple_of(2) {
        return Err(ModelError::InvalidParams(format!(
            "d must be even and at least 4, got {d}"
        )));
    }
    Ok(())
}

fn check_match_params(n: usize, d: usize) -> Result<(), ModelError> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(ModelError::InvalidParams(format!(
            "matching model needs a positive even n, got {n}; odd n is a cover of a half-loop bouquet"
        )));
    }
    if d < 3 {
        return Err(ModelError::InvalidParams(format!("d must be at least 3, got {d}")));
    }
    Ok(())
}

pub fn random_permutation<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Uniform permutation consisting of a single `n`-cycle.
pub fn random_cycle<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let order = random_permutation(n, rng);
    let mut p = vec![0; n];
    for k in 0..n {
        p[order[k]] = order[(k + 1) % n];
    }
    p
}

/// Uniform fixed-point-free involution for even `n`. For odd `n`, one
/// uniformly chosen fixed point and a uniform matching on the rest.
pub fn random_matching<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let order = random_permutation(n, rng);
    let mut p = vec![0; n];
    let rest = if n % 2 == 1 {
        p[order[0]] = order[0];
        &order[1..]
    } else {
        &order[..]
    };
    for pair in rest.chunks_exact(2) {
        p[pair[0]] = pair[1];
        p[pair[1]] = pair[0];
    }
    p
}

/// Undirected edges `{i, π(i)}` for each permutation, in permutation-major order.
pub fn graph_from_permutations(n: usize, perms: &[Vec<usize>]) -> Graph {
    let edges: Vec<(usize, usize)> = perms
        .iter()
        .flat_map(|p| p.iter().enumerate().map(|(i, &j)| (i, j)))
        .collect();
    Graph::from_undirected(n, &edges).expect("permutation graph is valid")
}

/// Undirected edges `{i, m(i)}` for each matched pair, listed once per pair.
fn graph_from_matchings(n: usize, matchings: &[Vec<usize>]) -> Graph {
    let edges: Vec<(usize, usize)> = matchings
        .iter()
        .flat_map(|m| {
            m.iter()
                .enumerate()
                .filter(|&(i, &j)| i < j)
                .map(|(i, &j)| (i, j))
        })
        .collect();
    Graph::from_undirected(n, &edges).expect("matching graph is valid")
}

/// The permutation model: `d/2` independent uniform permutations of `0..n`.
pub fn sample_permutation_model(n: usize, d: usize, seed: u64) -> Result<Graph, ModelError> {
    check_perm_params(n, d)?;
    let mut rng = rng_from(seed);
    let perms: Vec<_> = (0..d / 2).map(|_| random_permutation(n, &mut rng)).collect();
    Ok(graph_from_permutations(n, &perms))
}

/// Like the permutation model, with each permutation a uniform single `n`-cycle.
pub fn sample_single_cycle_model(n: usize, d: usize, seed: u64) -> Result<Graph, ModelError> {
    ModelId::Cycle.validate(n, d)?;
    let mut rng = rng_from(seed);
    let perms: Vec<_> = (0..d / 2).map(|_| random_cycle(n, &mut rng)).collect();
    Ok(graph_from_permutations(n, &perms))
}

/// `d` independent uniform perfect matchings on an even number of vertices.
pub fn sample_matching_model(n: usize, d: usize, seed: u64) -> Result<Graph, ModelError> {
    check_match_params(n, d)?;
    let mut rng = rng_from(seed);
    let ms: Vec<_> = (0..d).map(|_| random_matching(n, &mut rng)).collect();
    Ok(graph_from_matchings(n, &ms))
}

/// One vertex carrying `whole_loops` whole-loops followed by `half_loops` half-loops.
pub fn build_bouquet(whole_loops: usize, half_loops: usize) -> Graph {
    let m = 2 * whole_loops + half_loops;
    let edges = vec![(0, 0); m];
    let involution: Vec<usize> = (0..m)
        .map(|e| {
            if e < 2 * whole_loops {
                e ^ 1
            } else {
                e
            }
        })
        .collect();
    Graph::new(1, &edges, &involution).expect("bouquet is valid")
}

/// A degree-`n` covering map `total → base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringMap {
    pub base: Graph,
    pub total: Graph,
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
    pub degree: usize,
}

impl CoveringMap {
    /// The trivial degree-1 cover of `base` by itself.
    pub fn identity(base: &Graph) -> Self {
        Self {
            base: base.clone(),
            total: base.clone(),
            vertex_map: (0..base.vertex_count()).collect(),
            edge_map: (0..base.directed_edge_count()).collect(),
            degree: 1,
        }
    }

    /// Builds the cover from one permutation per base directed edge. Requires
    /// `perms[ι(e)] = perms[e]⁻¹`, which makes half-loop permutations involutions.
    pub fn from_permutations(base: &Graph, n: usize, perms: &[Vec<usize>]) -> Result<Self, ModelError> {
        let m = base.directed_edge_count();
        if perms.len() != m || perms.iter().any(|p| p.len() != n) {
            return Err(ModelError::InvalidParams(
                "need one permutation of 0..n per base directed edge".into(),
            ));
        }
        let mut edges = Vec::with_capacity(m * n);
        let mut involution = Vec::with_capacity(m * n);
        for e in 0..m {
            let opp = base.opposite(e);
            for i in 0..n {
                let j = perms[e][i];
                if j >= n || perms[opp][j] != i {
                    return Err(ModelError::InvalidParams(format!(
                        "permutation of edge {opp} is not the inverse of edge {e}"
                    )));
                }
                edges.push((base.tail(e) * n + i, base.head(e) * n + j));
                involution.push(opp * n + j);
            }
        }
        let total = Graph::new(base.vertex_count() * n, &edges, &involution)?;
        Ok(Self {
            base: base.clone(),
            total,
            vertex_map: (0..base.vertex_count() * n).map(|w| w / n).collect(),
            edge_map: (0..m * n).map(|f| f / n).collect(),
            degree: n,
        })
    }

    /// Exhaustive check of the covering-map axioms; returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        let (b, g, n) = (&self.base, &self.total, self.degree);
        if self.vertex_map.len() != g.vertex_count() || self.edge_map.len() != g.directed_edge_count() {
            return Err("fibre map lengths do not match the total graph".into());
        }
        for f in 0..g.directed_edge_count() {
            let e = self.edge_map[f];
            if b.tail(e) != self.vertex_map[g.tail(f)] || b.head(e) != self.vertex_map[g.head(f)] {
                return Err(format!("edge map does not commute with tail/head at {f}"));
            }
            if self.edge_map[g.opposite(f)] != b.opposite(e) {
                return Err(format!("edge map does not commute with the involution at {f}"));
            }
        }
        let mut vfib = vec![0usize; b.vertex_count()];
        for &v in &self.vertex_map {
            vfib[v] += 1;
        }
        let mut efib = vec![0usize; b.directed_edge_count()];
        for &e in &self.edge_map {
            efib[e] += 1;
        }
        if vfib.iter().chain(&efib).any(|&c| c != n) {
            return Err("a fibre does not have exactly n elements".into());
        }
        // local isomorphism: out-edges and in-edges at w biject onto those at its image
        let mut seen_out = vec![Vec::<usize>::new(); g.vertex_count()];
        let mut seen_in = vec![Vec::<usize>::new(); g.vertex_count()];
        for f in 0..g.directed_edge_count() {
            seen_out[g.tail(f)].push(self.edge_map[f]);
            seen_in[g.head(f)].push(self.edge_map[f]);
        }
        let base_out = b.out_edges();
        let mut base_in = vec![Vec::<usize>::new(); b.vertex_count()];
        for e in 0..b.directed_edge_count() {
            base_in[b.head(e)].push(e);
        }
        for w in 0..g.vertex_count() {
            let v = self.vertex_map[w];
            for (seen, expect) in [(&mut seen_out[w], &base_out[v]), (&mut seen_in[w], &base_in[v])] {
                seen.sort_unstable();
                if seen != expect {
                    return Err(format!("not a local isomorphism at vertex {w}"));
                }
            }
        }
        Ok(())
    }
}

/// Random degree-`n` cover of `base`.
///
/// Each non-half-loop pair gets a uniform permutation on its lower-indexed
/// orientation and the inverse on the other; each half-loop gets a uniform
/// perfect matching (even `n`) or a uniform fixed point plus a uniform perfect
/// matching of the remaining `n − 1` elements (odd `n`).
pub fn sample_cover(base: &Graph, n: usize, seed: u64) -> Result<CoveringMap, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidParams("cover degree must be positive".into()));
    }
    let mut rng = rng_from(seed);
    let m = base.directed_edge_count();
    let mut perms: Vec<Vec<usize>> = vec![Vec::new(); m];
    for e in 0..m {
        let opp = base.opposite(e);
        if opp == e {
            perms[e] = random_matching(n, &mut rng);
        } else if e < opp {
            let p = random_permutation(n, &mut rng);
            let mut inv = vec![0; n];
            for (i, &j) in p.iter().enumerate() {
                inv[j] = i;
            }
            perms[e] = p;
            perms[opp] = inv;
        }
    }
    CoveringMap::from_permutations(base, n, &perms)
}
