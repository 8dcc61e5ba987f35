mod common;

use common::{brute_force_closed_walks, corpus, load, random_regular};
use ihara_core::linalg::integer_char_poly;
use ihara_core::models::sample_cover;
use ihara_core::spectral::{
    adjacency_spectrum, classify_non_ramanujan, hashimoto_spectrum, is_epsilon_spectral, multiset_distance,
    new_spectra, HashimotoMethod, SpectrumReport, Tolerances,
};
use ihara_core::traces::tr_hashimoto_power;
use ihara_core::zeta::{
    contour_pole_count, essential_log_derivative_coeffs, neg_log_derivative_zeta, remainder_rational, ContourSign,
    ContourSpec, LogDerivative, ZetaError,
};
use ihara_core::{build_bouquet, Graph, IntPolynomial};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Berkowitz's division-free characteristic polynomial, `det(xI − M)`.
fn berkowitz(m: &DMatrix<i64>) -> IntPolynomial {
    let n = m.nrows();
    let at = |i: usize, j: usize| BigInt::from(m[(i, j)]);
    // coefficients in descending order
    let mut c: Vec<BigInt> = vec![BigInt::from(1)];
    for r in 0..n {
        // leading principal block of size r + 1, split as [[A, R], [S, a]]
        let a = at(r, r);
        let mut t: Vec<BigInt> = vec![BigInt::from(1), -a.clone()];
        let mut power: Vec<BigInt> = (0..r).map(|i| at(i, r)).collect();
        for _ in 0..r {
            let s: BigInt = (0..r).map(|j| at(r, j) * &power[j]).sum();
            t.push(-s);
            power = (0..r).map(|i| (0..r).map(|j| at(i, j) * &power[j]).sum()).collect();
        }
        let mut next = vec![BigInt::from(0); r + 2];
        for (i, ti) in t.iter().enumerate().take(r + 2) {
            for (j, cj) in c.iter().enumerate() {
                if i + j < r + 2 {
                    next[i + j] += ti * cj;
                }
            }
        }
        c = next;
    }
    c.reverse();
    IntPolynomial::new(c)
}

#[test]
fn char_poly_matches_berkowitz_oracle() {
    for (name, g) in corpus() {
        let h = g.hashimoto_matrix();
        assert_eq!(integer_char_poly(&h), berkowitz(&h), "{name}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for size in 1..14 {
        let m = DMatrix::from_fn(size, size, |_, _| rng.random_range(-40i64..=40));
        assert_eq!(integer_char_poly(&m), berkowitz(&m), "size {size}");
    }
}

#[test]
fn traces_match_walks_and_spectral_powers() {
    for (name, g) in corpus() {
        let spec = hashimoto_spectrum(&g, HashimotoMethod::Direct).unwrap();
        for k in 0..=6 {
            let t = tr_hashimoto_power(&g, k).unwrap();
            if k <= 5 {
                assert_eq!(t, brute_force_closed_walks(&g, k) as u128, "{name} k={k}");
            }
            let s: Complex64 = spec.iter().map(|mu| mu.powu(k as u32)).sum();
            let scale = (t as f64).max(1.0);
            assert!((s.re - t as f64).abs() <= 1e-6 * scale && s.im.abs() <= 1e-6 * scale, "{name} k={k}: {s} vs {t}");
        }
    }
}

#[test]
fn hashimoto_methods_agree_on_corpus() {
    for (name, g) in corpus() {
        if g.directed_edge_count() == 0 {
            continue;
        }
        let a = hashimoto_spectrum(&g, HashimotoMethod::Direct).unwrap();
        let b = hashimoto_spectrum(&g, HashimotoMethod::Ihara).unwrap();
        let dist = multiset_distance(&a, &b).unwrap();
        assert!(dist < 1e-8, "{name}: {dist}");
    }
}

#[test]
fn log_derivative_identity_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, g) in corpus() {
        let d = g.regular_degree().unwrap();
        if d < 2 {
            continue;
        }
        let l = LogDerivative::new(&g).unwrap();
        let rem = remainder_rational(&g.counts(), d);
        for _ in 0..20 {
            let r = rng.random_range(1.2..4.0);
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let u = Complex64::from_polar(r, theta);
            let lhs = neg_log_derivative_zeta(&g, u).unwrap();
            let rhs = l.eval(u).unwrap() + rem.eval_complex(u);
            assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1.0), "{name} u={u}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn series_agrees_with_closed_form_far_out() {
    for (name, g) in corpus() {
        let d = g.regular_degree().unwrap();
        if d < 2 {
            continue;
        }
        let series = essential_log_derivative_coeffs(&g, 40).unwrap();
        assert_eq!(series.coefficients[0], BigInt::from(g.directed_edge_count()).into(), "{name}");
        let l = LogDerivative::new(&g).unwrap();
        for u in [Complex64::new(3.0, 0.0), Complex64::new(-2.0, 2.5)] {
            let a = series.eval(u);
            let b = l.eval(u).unwrap();
            assert!((a - b).norm() < 1e-9 * b.norm(), "{name} u={u}: {a} vs {b}");
        }
    }
}

#[test]
fn series_coefficients_are_bounded() {
    for i in 0..20 {
        let g = random_regular(i);
        let d = g.regular_degree().unwrap();
        let n = g.vertex_count();
        let s = essential_log_derivative_coeffs(&g, 8).unwrap();
        for (k, c) in s.coefficients.iter().enumerate().skip(1) {
            let bound = num_rational::BigRational::new((n * d).into(), (d - 1).into());
            assert!(c <= &bound, "sample {i} k={k}");
        }
    }
}

/// Poles `μ/(d−1)` inside the contour rectangle, from the adjacency
/// spectrum and the quadratic `μ² − λμ + (d−1) = 0`.
fn poles_inside_from_adjacency(g: &Graph, spec: &ContourSpec) -> usize {
    let d = g.regular_degree().unwrap();
    let q = (d - 1) as f64;
    let ((x0, x1), (y0, y1)) = spec.rectangle(d);
    adjacency_spectrum(g)
        .unwrap()
        .into_iter()
        .flat_map(|lambda| {
            let disc = Complex64::new(lambda * lambda - 4.0 * q, 0.0).sqrt();
            [(lambda + disc) / 2.0, (lambda - disc) / 2.0]
        })
        .map(|mu| mu / q)
        .filter(|u| u.re > x0 && u.re < x1 && u.im > y0 && u.im < y1)
        .count()
}

#[test]
fn contour_counts_agree_with_poles() {
    let mut checked = 0;
    for (name, g) in corpus() {
        for sign in [ContourSign::Plus, ContourSign::Minus] {
            for (eps, delta) in [(0.2, 0.05), (0.1, 0.2), (0.35, 0.1)] {
                let spec = ContourSpec::new(eps, delta, sign);
                match contour_pole_count(&g, &spec) {
                    Ok(c) => {
                        let err = Complex64::new(c.numeric_re - c.exact as f64, c.numeric_im).norm();
                        assert!(err < 1e-6, "{name} {spec:?}: {c:?}");
                        checked += 1;
                    }
                    Err(ZetaError::InvalidContour(_) | ZetaError::DegreeTooSmall(_)) => {}
                    Err(e) => panic!("{name} {spec:?}: {e}"),
                }
            }
        }
    }
    assert!(checked >= 30, "only {checked} admissible contours");
}

#[test]
fn contour_witnesses_have_nonzero_counts() {
    let joined = load("joined_k5_blocks");
    let spec = ContourSpec::new(0.1, 0.2, ContourSign::Plus);
    let c = contour_pole_count(&joined, &spec).unwrap();
    assert_eq!(c.exact, poles_inside_from_adjacency(&joined, &spec));
    assert_eq!(c.exact, 2);
    assert!((c.numeric_re - 2.0).abs() < 1e-6 && c.numeric_im.abs() < 1e-6);

    let ring = load("ring_k5_blocks");
    let spec = ContourSpec::new(0.35, 0.05, ContourSign::Plus);
    let c = contour_pole_count(&ring, &spec).unwrap();
    let report = SpectrumReport::new(&ring, HashimotoMethod::Direct).unwrap();
    let tol = Tolerances::for_degree(4);
    let nr = classify_non_ramanujan(&report, tol.real_tol, tol.special_tol);
    assert_eq!(c.exact, poles_inside_from_adjacency(&ring, &spec));
    assert_eq!(c.exact, nr.h_positive);
    assert!((c.numeric_re - c.exact as f64).abs() < 1e-6);
}

#[test]
fn contour_near_a_pole_is_refused() {
    // put the top edge of the rectangle through the λ2 pole of the witness
    let g = load("joined_k5_blocks");
    let l = LogDerivative::new(&g).unwrap();
    let pole = l
        .poles
        .iter()
        .filter(|p| p.im > 0.1 && (p.re - 0.56).abs() < 0.01)
        .copied()
        .next()
        .unwrap();
    let spec = ContourSpec::new(0.1, pole.im, ContourSign::Plus);
    assert!(matches!(contour_pole_count(&g, &spec), Err(ZetaError::NearContourPole { .. })));
}

#[test]
fn residue_of_l_at_one_counts_components() {
    for (name, g) in corpus() {
        let d = g.regular_degree().unwrap();
        if d < 2 {
            continue;
        }
        let l = LogDerivative::new(&g).unwrap();
        let r = l.residue_at(Complex64::new(1.0, 0.0), 512).unwrap();
        let expect = g.component_count() as f64;
        assert!((r.re - expect).abs() < 1e-8 && r.im.abs() < 1e-8, "{name}: {r}");
    }
}

#[test]
fn witness_classification() {
    let tol = Tolerances::for_degree(4);
    let ring = SpectrumReport::new(&load("ring_k5_blocks"), HashimotoMethod::Direct).unwrap();
    let nr = classify_non_ramanujan(&ring, tol.real_tol, tol.special_tol);
    assert_eq!((nr.a_positive, nr.h_positive), (2, 4));
    assert!(!is_epsilon_spectral(&ring, 0.01));

    // two joined blocks have λ2 ≈ 3.372 < 2√3
    let joined = SpectrumReport::new(&load("joined_k5_blocks"), HashimotoMethod::Direct).unwrap();
    assert!((joined.adjacency_eigenvalues[1] - 3.372281323269).abs() < 1e-9);
    assert!(classify_non_ramanujan(&joined, tol.real_tol, tol.special_tol).is_ramanujan());
    assert!(is_epsilon_spectral(&joined, 0.01));
}

#[test]
fn new_spectrum_traces_are_differences() {
    let bases = [build_bouquet(2, 0), build_bouquet(1, 1), build_bouquet(0, 3), Graph::complete(4)];
    for (i, base) in bases.iter().enumerate() {
        for n in [1, 2, 3, 5] {
            let cover = sample_cover(base, n, 100 + i as u64).unwrap();
            let new = new_spectra(&cover).unwrap();
            assert_eq!(new.adjacency.len(), (n - 1) * base.vertex_count());
            assert_eq!(new.hashimoto.len(), (n - 1) * base.directed_edge_count());
            for k in 1..=8 {
                let total = tr_hashimoto_power(&cover.total, k).unwrap() as f64;
                let old = tr_hashimoto_power(base, k).unwrap() as f64;
                let s: Complex64 = new.hashimoto.iter().map(|mu| mu.powu(k as u32)).sum();
                let scale = total.max(1.0);
                assert!((s.re - (total - old)).abs() <= 1e-6 * scale, "base {i} n={n} k={k}");
                assert!(s.im.abs() <= 1e-6 * scale);
            }
        }
    }
}
