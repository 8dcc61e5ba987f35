//! Ihara zeta data: exact characteristic polynomials and determinant
//! identities, the essential logarithmic derivative `L(u)` and its rational
//! remainder `e(u)`, contour pole counts, and the residues of `cP_0`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::graph::{Graph, GraphCounts};
use crate::linalg::integer_char_poly;
use crate::poly::IntPolynomial;
use crate::spectral::{hashimoto_spectrum, HashimotoMethod, SpectralError};
use crate::traces::{hashimoto_traces, TraceError};

/// Largest number of directed edges for exact polynomial work.
pub const EXACT_EDGE_LIMIT: usize = 512;
/// Evaluation points closer than this to a pole are refused.
pub const POLE_GUARD: f64 = 1e-12;
/// Contours passing closer than this to a pole are refused.
pub const CONTOUR_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ZetaError {
    #[error("{edges} directed edges exceed the exact limit {limit}")]
    TooLarge { edges: usize, limit: usize },
    #[error("graph is not regular")]
    NotRegular,
    #[error("degree {0} is too small")]
    DegreeTooSmall(usize),
    #[error("{form} identity fails:\n  lhs = {lhs}\n  rhs = {rhs}")]
    IdentityViolation {
        form: &'static str,
        lhs: IntPolynomial,
        rhs: IntPolynomial,
    },
    #[error("u = {re}{im:+}i is within {POLE_GUARD} of a pole")]
    NearPole { re: f64, im: f64 },
    #[error("a pole lies {distance} from the contour")]
    NearContourPole { distance: f64 },
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

fn check_size(g: &Graph) -> Result<(), ZetaError> {
    let m = g.directed_edge_count();
    if m > EXACT_EDGE_LIMIT {
        return Err(ZetaError::TooLarge { edges: m, limit: EXACT_EDGE_LIMIT });
    }
    Ok(())
}

fn regular_degree(g: &Graph) -> Result<usize, ZetaError> {
    g.regular_degree().ok_or(ZetaError::NotRegular)
}

/// `det(μI − H)`.
pub fn hashimoto_char_poly(g: &Graph) -> Result<IntPolynomial, ZetaError> {
    check_size(g)?;
    Ok(integer_char_poly(&g.hashimoto_matrix()))
}

/// `det(I − uH) = 1/ζ(u)`.
pub fn zeta_reciprocal_poly(g: &Graph) -> Result<IntPolynomial, ZetaError> {
    Ok(hashimoto_char_poly(g)?.reciprocal(g.directed_edge_count()))
}

/// `det(μ²I − μA + (D − I))`, as the characteristic polynomial of the
/// block companion matrix `[[A, I − D], [I, 0]]`.
pub fn quadratic_adjacency_poly(g: &Graph) -> IntPolynomial {
    let n = g.vertex_count();
    let a = g.adjacency_matrix();
    let deg = g.degrees();
    let mut c = nalgebra::DMatrix::<i64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            c[(i, j)] = a[(i, j)];
        }
        c[(i, n + i)] = 1 - deg[i] as i64;
        c[(n + i, i)] = 1;
    }
    integer_char_poly(&c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IharaCheck {
    pub form: &'static str,
    pub lhs: IntPolynomial,
    pub rhs: IntPolynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IharaReport {
    pub vertices: usize,
    pub pairs: usize,
    pub half_loops: usize,
    pub euler_characteristic: i64,
    /// `det(μI − H)`, ascending coefficients.
    pub hashimoto_char_poly: IntPolynomial,
    /// Identities checked, both sides with denominators cleared.
    pub checks: Vec<IharaCheck>,
}

fn poly(c: &[i64]) -> IntPolynomial {
    IntPolynomial::from_i64(c)
}

/// Multiplies `p` by `f^e`, or `q` by `f^{−e}` when `e < 0`.
fn clear(p: &IntPolynomial, q: &IntPolynomial, f: &IntPolynomial, e: i64) -> (IntPolynomial, IntPolynomial) {
    if e >= 0 {
        (p * &f.pow(e as u32), q.clone())
    } else {
        (p.clone(), q * &f.pow((-e) as u32))
    }
}

/// Checks the Ihara determinant identities exactly. Without half-loops:
/// `det(I − uH) = det(I − uA + u²(d−1)I)·(1 − u²)^{−χ}`. In general:
/// `det(μI − H) = det(μ²I − μA + (D−I))·(μ+1)^{|half|}·(μ² − 1)^{|pair| − |V|}`.
pub fn verify_ihara(g: &Graph) -> Result<IharaReport, ZetaError> {
    check_size(g)?;
    let d = regular_degree(g)?;
    let counts = g.counts();
    let p_h = hashimoto_char_poly(g)?;
    let q = quadratic_adjacency_poly(g);
    let mut checks = Vec::new();

    let (rhs, lhs) = clear(
        &(&q * &poly(&[1, 1]).pow(counts.half_loops as u32)),
        &p_h,
        &poly(&[-1, 0, 1]),
        counts.pairs as i64 - counts.vertices as i64,
    );
    checks.push(IharaCheck { form: "mu", lhs, rhs });

    if counts.half_loops == 0 {
        let m = g.directed_edge_count();
        let zeta_inv = p_h.reciprocal(m);
        let n = counts.vertices;
        // det(I − uA + u²(d−1)I) = Σ_k a_k u^{n−k}(1 + (d−1)u²)^k from the
        // characteristic polynomial Σ_k a_k x^k of A
        let p_a = integer_char_poly(&g.adjacency_matrix());
        let lift = poly(&[1, 0, d as i64 - 1]);
        let mut direct = IntPolynomial::zero();
        for k in 0..=n {
            let term = &lift.pow(k as u32) * &IntPolynomial::x().pow((n - k) as u32);
            direct = &direct + &(&term * &IntPolynomial::new(vec![p_a.coeff(k)]));
        }
        let (rhs, lhs) = clear(&direct, &zeta_inv, &poly(&[1, 0, -1]), -counts.euler_characteristic);
        checks.push(IharaCheck { form: "u", lhs, rhs });
    }
    for c in &checks {
        if c.lhs != c.rhs {
            return Err(ZetaError::IdentityViolation {
                form: c.form,
                lhs: c.lhs.clone(),
                rhs: c.rhs.clone(),
            });
        }
    }
    Ok(IharaReport {
        vertices: counts.vertices,
        pairs: counts.pairs,
        half_loops: counts.half_loops,
        euler_characteristic: counts.euler_characteristic,
        hashimoto_char_poly: p_h,
        checks,
    })
}

fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn serialize_rationals<S: serde::Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational_string))
}

fn to_complex(r: &BigRational) -> Complex64 {
    Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
}

/// `L(u) = Σ_k c_k u^{−1−k}` truncated, `c_k = Tr(H^k)(d−1)^{−k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesAtInfinity {
    pub d: usize,
    pub truncation: usize,
    #[serde(serialize_with = "serialize_rationals")]
    pub coefficients: Vec<BigRational>,
}

impl SeriesAtInfinity {
    pub fn eval(&self, u: Complex64) -> Complex64 {
        let w = u.inv();
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = acc * w + to_complex(c);
        }
        acc * w
    }
}

pub fn essential_log_derivative_coeffs(g: &Graph, k_max: usize) -> Result<SeriesAtInfinity, ZetaError> {
    let d = regular_degree(g)?;
    let traces = hashimoto_traces(g, k_max)?;
    let q = BigInt::from(d) - BigInt::one();
    let coefficients = traces
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let t = BigInt::from(t);
            if k == 0 {
                BigRational::from_integer(t)
            } else if q.is_zero() {
                // d = 1: every directed edge has no successor, so H = 0
                debug_assert!(t.is_zero());
                BigRational::zero()
            } else {
                BigRational::new(t, q.pow(k as u32))
            }
        })
        .collect();
    Ok(SeriesAtInfinity { d, truncation: k_max, coefficients })
}

/// `L(u) = Σ_{μ ∈ Spec H} 1/(u − μ/(d−1))`, evaluated from the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDerivative {
    pub d: usize,
    /// The poles `μ/(d−1)`, one per Hashimoto eigenvalue.
    pub poles: Vec<Complex64>,
}

impl LogDerivative {
    pub fn new(g: &Graph) -> Result<Self, ZetaError> {
        let d = regular_degree(g)?;
        if d < 2 {
            return Err(ZetaError::DegreeTooSmall(d));
        }
        let q = (d - 1) as f64;
        let poles = hashimoto_spectrum(g, HashimotoMethod::Direct)?
            .into_iter()
            .map(|mu| mu / q)
            .collect();
        Ok(Self { d, poles })
    }

    pub fn eval(&self, u: Complex64) -> Result<Complex64, ZetaError> {
        let mut acc = Compensated::default();
        for &p in &self.poles {
            let diff = u - p;
            if diff.norm() < POLE_GUARD {
                return Err(ZetaError::NearPole { re: u.re, im: u.im });
            }
            acc.add(diff.inv());
        }
        Ok(acc.value())
    }

    /// Residue at `at` by a circle integral whose radius is half the
    /// distance to the nearest other pole.
    pub fn residue_at(&self, at: Complex64, points: usize) -> Result<Complex64, ZetaError> {
        let cluster = 1e-6;
        let gap = self
            .poles
            .iter()
            .map(|p| (p - at).norm())
            .filter(|&r| r > cluster)
            .fold(f64::INFINITY, f64::min);
        let radius = if gap.is_finite() { gap / 2.0 } else { 1.0 };
        let mut err = None;
        let value = circle_integral(at, radius, points, |u| {
            self.eval(u).unwrap_or_else(|e| {
                err = Some(e);
                Complex64::new(0.0, 0.0)
            })
        });
        match err {
            Some(e) => Err(e),
            None => Ok(value / Complex64::new(0.0, 2.0 * std::f64::consts::PI)),
        }
    }
}

pub fn evaluate_l(g: &Graph, u: Complex64) -> Result<Complex64, ZetaError> {
    LogDerivative::new(g)?.eval(u)
}

/// `L(u)` exactly at rational `u`: `(d−1)·P'(x)/P(x)` with
/// `P(x) = det(xI − H)` and `x = (d−1)u`.
pub fn evaluate_l_exact(g: &Graph, u: &BigRational) -> Result<BigRational, ZetaError> {
    let d = regular_degree(g)?;
    if d < 2 {
        return Err(ZetaError::DegreeTooSmall(d));
    }
    let p = hashimoto_char_poly(g)?;
    let q = BigRational::from_integer(BigInt::from(d - 1));
    let x = &q * u;
    let px = p.eval_rational(&x);
    if px.is_zero() {
        let v = u.to_f64().unwrap_or(f64::NAN);
        return Err(ZetaError::NearPole { re: v, im: 0.0 });
    }
    Ok(q * p.derivative().eval_rational(&x) / px)
}

/// `−ζ'/ζ(u) = R'(u)/R(u)` with `R(u) = det(I − uH)`, exactly.
pub fn neg_log_derivative_zeta_exact(g: &Graph, u: &BigRational) -> Result<BigRational, ZetaError> {
    let r = zeta_reciprocal_poly(g)?;
    let ru = r.eval_rational(u);
    if ru.is_zero() {
        let v = u.to_f64().unwrap_or(f64::NAN);
        return Err(ZetaError::NearPole { re: v, im: 0.0 });
    }
    Ok(r.derivative().eval_rational(u) / ru)
}

/// `−ζ'/ζ(u) = Σ_{μ ≠ 0} 1/(u − 1/μ)`, from the spectrum.
pub fn neg_log_derivative_zeta(g: &Graph, u: Complex64) -> Result<Complex64, ZetaError> {
    let spec = hashimoto_spectrum(g, HashimotoMethod::Direct)?;
    let mut acc = Compensated::default();
    for mu in spec {
        if mu.norm() < 1e-9 {
            continue;
        }
        let diff = u - mu.inv();
        if diff.norm() < POLE_GUARD {
            return Err(ZetaError::NearPole { re: u.re, im: u.im });
        }
        acc.add(diff.inv());
    }
    Ok(acc.value())
}

/// A ratio of integer polynomials in `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalFunction {
    pub numerator: IntPolynomial,
    pub denominator: IntPolynomial,
}

impl RationalFunction {
    pub fn eval_rational(&self, u: &BigRational) -> Option<BigRational> {
        let den = self.denominator.eval_rational(u);
        (!den.is_zero()).then(|| self.numerator.eval_rational(u) / den)
    }

    pub fn eval_complex(&self, u: Complex64) -> Complex64 {
        self.numerator.eval_complex(u) / self.denominator.eval_complex(u)
    }

    /// Coefficients `s_k` of `Σ_k s_k u^{−1−k}` for a strictly proper
    /// function, `k = 0..len`.
    pub fn series_at_infinity(&self, len: usize) -> Vec<BigRational> {
        let m = self.denominator.degree().expect("nonzero denominator");
        let lead = BigRational::from_integer(self.denominator.coeff(m));
        assert!(
            self.numerator.degree().is_none_or(|k| k < m),
            "series at infinity needs a strictly proper function"
        );
        let mut s: Vec<BigRational> = Vec::with_capacity(len);
        for i in 0..len {
            let mut acc = if i < m {
                BigRational::from_integer(self.numerator.coeff(m - 1 - i))
            } else {
                BigRational::zero()
            };
            for j in 0..m {
                if i + j >= m {
                    acc -= BigRational::from_integer(self.denominator.coeff(j)) * &s[i + j - m];
                }
            }
            s.push(acc / &lead);
        }
        s
    }
}

/// `e(u) = n(d−2)·[u/(u²−1) − (d−1)²u/((d−1)²u² − 1)]`
/// `= n(d−2)((d−1)² − 1)·u / ((u² − 1)((d−1)²u² − 1))`.
pub fn e_rational(n_vertices: usize, d: usize) -> RationalFunction {
    let q2 = ((d as i64) - 1).pow(2);
    let c = BigInt::from(n_vertices) * BigInt::from(d as i64 - 2) * BigInt::from(q2 - 1);
    RationalFunction {
        numerator: IntPolynomial::new(vec![BigInt::zero(), c]),
        denominator: &poly(&[-1, 0, 1]) * &poly(&[-1, 0, q2]),
    }
}

pub fn evaluate_e(n_vertices: usize, d: usize, u: Complex64) -> Complex64 {
    e_rational(n_vertices, d).eval_complex(u)
}

/// `−ζ'/ζ − L` for a d-regular graph that may have half-loops. The
/// eigenvalues `+1` and `−1` occur `a = |pair| − |V|` and
/// `b = |pair| − |V| + |half|` times beyond the quadratic lifts, giving
/// `(d−2)·[(a−b)(d−1)u² + (a+b)d·u + (a−b)] / ((u²−1)((d−1)²u²−1))`.
/// Without half-loops this is [`e_rational`].
pub fn remainder_rational(counts: &GraphCounts, d: usize) -> RationalFunction {
    let q = d as i64 - 1;
    let a = BigInt::from(counts.pairs as i64 - counts.vertices as i64);
    let b = &a + BigInt::from(counts.half_loops);
    let scale = BigInt::from(q - 1);
    let diff = (&a - &b) * &scale;
    let numerator = IntPolynomial::new(vec![
        diff.clone(),
        (&a + &b) * BigInt::from(q + 1) * &scale,
        diff * BigInt::from(q),
    ]);
    RationalFunction {
        numerator,
        denominator: &poly(&[-1, 0, 1]) * &poly(&[-1, 0, q * q]),
    }
}

/// Neumaier-compensated complex sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    re: (f64, f64),
    im: (f64, f64),
}

impl Compensated {
    fn step((sum, comp): (f64, f64), x: f64) -> (f64, f64) {
        let t = sum + x;
        let c = if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        (t, comp + c)
    }

    fn add(&mut self, z: Complex64) {
        self.re = Self::step(self.re, z.re);
        self.im = Self::step(self.im, z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// `∫_a^b f(u) du` along a segment, by the trapezoidal rule after the
/// substitution `s = φ(t)`, `φ'(t) = (8/3) sin⁴(πt)`, which makes the
/// integrand vanish to high order at both ends.
fn segment_integral(a: Complex64, b: Complex64, points: usize, f: &mut impl FnMut(Complex64) -> Complex64) -> Complex64 {
    use std::f64::consts::PI;
    let mut acc = Compensated::default();
    let h = 1.0 / points as f64;
    for j in 1..points {
        let t = j as f64 * h;
        let s = t - 2.0 * (2.0 * PI * t).sin() / (3.0 * PI) + (4.0 * PI * t).sin() / (12.0 * PI);
        let w = 8.0 / 3.0 * (PI * t).sin().powi(4);
        acc.add(f(a + (b - a) * s) * (b - a) * (w * h));
    }
    acc.value()
}

/// Counterclockwise `∮ f(u) du` around `[x0, x1] × [y0, y1]`.
pub fn rectangle_integral(
    x: (f64, f64),
    y: (f64, f64),
    points: usize,
    mut f: impl FnMut(Complex64) -> Complex64,
) -> Complex64 {
    let corners = [
        Complex64::new(x.0, y.0),
        Complex64::new(x.1, y.0),
        Complex64::new(x.1, y.1),
        Complex64::new(x.0, y.1),
    ];
    let mut acc = Compensated::default();
    for i in 0..4 {
        acc.add(segment_integral(corners[i], corners[(i + 1) % 4], points, &mut f));
    }
    acc.value()
}

/// Counterclockwise `∮ f(u) du` over a circle, by the trapezoidal rule.
pub fn circle_integral(
    center: Complex64,
    radius: f64,
    points: usize,
    mut f: impl FnMut(Complex64) -> Complex64,
) -> Complex64 {
    let mut acc = Compensated::default();
    for j in 0..points {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
        let z = Complex64::from_polar(radius, theta);
        acc.add(f(center + z) * Complex64::new(0.0, 1.0) * z);
    }
    acc.value() * (2.0 * std::f64::consts::PI / points as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum ContourSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// The rectangle `|1 − sign·x(d−1)^{1/2}| ≤ ε`, `|y| ≤ δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    pub epsilon: f64,
    pub delta: f64,
    pub sign: ContourSign,
    pub quadrature_points: usize,
}

impl ContourSpec {
    pub fn new(epsilon: f64, delta: f64, sign: ContourSign) -> Self {
        Self {
            epsilon,
            delta,
            sign,
            quadrature_points: 512,
        }
    }

    /// `(x range, y range)` for degree `d`.
    pub fn rectangle(&self, d: usize) -> ((f64, f64), (f64, f64)) {
        let r = ((d - 1) as f64).sqrt();
        let (a, b) = ((1.0 - self.epsilon) / r, (1.0 + self.epsilon) / r);
        let x = match self.sign {
            ContourSign::Plus => (a, b),
            ContourSign::Minus => (-b, -a),
        };
        (x, (-self.delta, self.delta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourCount {
    pub numeric_re: f64,
    pub numeric_im: f64,
    pub exact: usize,
    /// Distance from the contour to the nearest pole of `L`.
    pub pole_distance: f64,
}

fn distance_to_rectangle_boundary(z: Complex64, x: (f64, f64), y: (f64, f64)) -> f64 {
    let inside = z.re >= x.0 && z.re <= x.1 && z.im >= y.0 && z.im <= y.1;
    if inside {
        (z.re - x.0).min(x.1 - z.re).min(z.im - y.0).min(y.1 - z.im)
    } else {
        let dx = (x.0 - z.re).max(0.0).max(z.re - x.1);
        let dy = (y.0 - z.im).max(0.0).max(z.im - y.1);
        dx.hypot(dy)
    }
}

/// `(1/2πi) ∮ L(u) du` over the contour, with the exact number of poles
/// `μ/(d−1)` inside it.
pub fn contour_pole_count(g: &Graph, spec: &ContourSpec) -> Result<ContourCount, ZetaError> {
    if !(spec.epsilon > 0.0 && spec.delta > 0.0 && spec.quadrature_points >= 2) {
        return Err(ZetaError::InvalidContour("ε, δ must be positive and points ≥ 2".into()));
    }
    if spec.epsilon >= 1.0 {
        return Err(ZetaError::InvalidContour("ε must be below 1".into()));
    }
    let l = LogDerivative::new(g)?;
    let (x, y) = spec.rectangle(l.d);
    let q = (l.d - 1) as f64;
    for special in [1.0, -1.0, 1.0 / q, -1.0 / q] {
        if special >= x.0 && special <= x.1 {
            return Err(ZetaError::InvalidContour(format!("rectangle contains u = {special}")));
        }
    }
    let pole_distance = l
        .poles
        .iter()
        .map(|&p| distance_to_rectangle_boundary(p, x, y))
        .fold(f64::INFINITY, f64::min);
    if pole_distance < CONTOUR_GUARD {
        return Err(ZetaError::NearContourPole { distance: pole_distance });
    }
    let exact = l
        .poles
        .iter()
        .filter(|p| p.re > x.0 && p.re < x.1 && p.im > y.0 && p.im < y.1)
        .count();
    let integral = rectangle_integral(x, y, spec.quadrature_points, |u| {
        l.eval(u).expect("contour keeps clear of poles")
    });
    let numeric = integral / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    Ok(ContourCount {
        numeric_re: numeric.re,
        numeric_im: numeric.im,
        exact,
        pole_distance,
    })
}

/// `cP_0(u) = 1/(u−1) + u/(u² − (d−1)^{−1}) + h(u)`, where `h` collects the
/// divisor terms `k' ∉ {k, k/2}` of `Σ_k u^{−1−k}(d−1)^{−k} Σ_{k'|k}(d−1)^{k'}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cp0Report {
    pub d: usize,
    pub poles: Vec<f64>,
    pub residues: Vec<String>,
    /// `h` is holomorphic for `|u|` above this radius, `(d−1)^{−2/3}`.
    pub remainder_radius: f64,
}

pub fn cp0_residues(d: usize) -> Cp0Report {
    assert!(d >= 3, "cP_0 needs d ≥ 3");
    let q = (d - 1) as f64;
    let c = q.sqrt().recip();
    Cp0Report {
        d,
        poles: vec![1.0, c, -c],
        residues: vec!["1".into(), "1/2".into(), "1/2".into()],
        remainder_radius: q.powf(-2.0 / 3.0),
    }
}

/// Coefficients `a_k` (`k ≥ 0`) of `h(u) = Σ_k a_k u^{−1−k}`:
/// `a_k = Σ_{k'|k, k' ∉ {k, k/2}} (d−1)^{k'−k}`.
pub fn cp0_remainder_coefficients(d: usize, len: usize) -> Vec<f64> {
    let q = (d - 1) as f64;
    (0..len)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            (1..=k / 3)
                .filter(|j| k % j == 0)
                .map(|j| q.powi(j as i32 - k as i32))
                .sum()
        })
        .collect()
}

/// Evaluates `cP_0` for `|u| > (d−1)^{−2/3}` with the remainder series
/// summed to double precision.
#[derive(Debug, Clone)]
pub struct Cp0 {
    pub d: usize,
    remainder: Vec<f64>,
}

impl Cp0 {
    /// Coefficients are kept for evaluation down to `|u| ≥ min_radius`.
    pub fn new(d: usize, min_radius: f64) -> Self {
        let q = (d - 1) as f64;
        let ratio = q.powf(-2.0 / 3.0) / min_radius;
        assert!(ratio < 1.0, "cP_0 remainder diverges at radius {min_radius}");
        // the k-th coefficient is at most k·(d−1)^{−2k/3}
        let len = ((-45.0 / ratio.ln()).ceil() as usize).clamp(16, 200_000);
        Self {
            d,
            remainder: cp0_remainder_coefficients(d, len),
        }
    }

    pub fn remainder(&self, u: Complex64) -> Complex64 {
        let w = u.inv();
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in self.remainder.iter().rev() {
            acc = acc * w + a;
        }
        acc * w
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        let q = (self.d - 1) as f64;
        (u - 1.0).inv() + u / (u * u - q.recip()) + self.remainder(u)
    }
}

/// `(1/2πi) ∮ cP_0(u) du` on a circle around `±(d−1)^{−1/2}` that excludes
/// `1`, the opposite pole and the disc where `h` diverges.
pub fn cp0_residue_numeric(d: usize, sign: ContourSign, points: usize) -> Complex64 {
    let q = (d - 1) as f64;
    let c = q.sqrt().recip();
    let ring = q.powf(-2.0 / 3.0);
    let radius = 0.5 * (c - ring).min(1.0 - c).min(2.0 * c);
    let center = match sign {
        ContourSign::Plus => c,
        ContourSign::Minus => -c,
    };
    let cp0 = Cp0::new(d, c - radius);
    let integral = circle_integral(Complex64::new(center, 0.0), radius, points, |u| cp0.eval(u));
    integral / Complex64::new(0.0, 2.0 * std::f64::consts::PI)
}

/// Rational value as a decimal approximation with an exact string form.
pub fn describe_rational(r: &BigRational) -> (String, f64) {
    (rational_string(r), r.to_f64().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_bouquet;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn golden_polynomials() {
        let k4 = zeta_reciprocal_poly(&Graph::complete(4)).unwrap();
        let expect = &(&(&poly(&[1, -1]) * &poly(&[1, -2])) * &poly(&[1, 1, 2]).pow(3)) * &poly(&[1, 0, -1]).pow(2);
        assert_eq!(k4, expect);
        let b = zeta_reciprocal_poly(&build_bouquet(2, 0)).unwrap();
        assert_eq!(b, &(&poly(&[1, -1]) * &poly(&[1, -3])) * &poly(&[1, 0, -1]));
        let h = hashimoto_char_poly(&build_bouquet(0, 3)).unwrap();
        assert_eq!(h, &poly(&[-2, 1]) * &poly(&[1, 1]).pow(2));
    }

    #[test]
    fn ihara_identity_small_cases() {
        for g in [
            Graph::complete(4),
            Graph::petersen(),
            build_bouquet(2, 0),
            build_bouquet(0, 1),
            build_bouquet(0, 2),
            build_bouquet(0, 3),
            build_bouquet(1, 1),
        ] {
            verify_ihara(&g).unwrap();
        }
        let r = verify_ihara(&build_bouquet(0, 1)).unwrap();
        assert_eq!(r.hashimoto_char_poly, poly(&[0, 1]));
    }

    #[test]
    fn series_examples() {
        let s = essential_log_derivative_coeffs(&Graph::complete(4), 3).unwrap();
        assert_eq!(s.coefficients, vec![rat(12, 1), rat(0, 1), rat(0, 1), rat(3, 1)]);
        let s = essential_log_derivative_coeffs(&build_bouquet(2, 0), 2).unwrap();
        assert_eq!(s.coefficients, vec![rat(4, 1), rat(4, 3), rat(4, 3)]);
        let s = essential_log_derivative_coeffs(&build_bouquet(0, 1), 4).unwrap();
        assert_eq!(s.coefficients, vec![rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1), rat(0, 1)]);
    }

    #[test]
    fn log_derivative_values() {
        let k4 = Graph::complete(4);
        let two = rat(2, 1);
        assert_eq!(evaluate_l_exact(&k4, &two).unwrap(), rat(344, 55));
        assert_eq!(e_rational(4, 3).eval_rational(&two).unwrap(), rat(8, 15));
        assert_eq!(neg_log_derivative_zeta_exact(&k4, &two).unwrap(), rat(224, 33));
        let l = evaluate_l(&k4, Complex64::new(2.0, 0.0)).unwrap();
        assert!((l.re - 344.0 / 55.0).abs() < 1e-12 && l.im.abs() < 1e-12);
        let b = evaluate_l_exact(&build_bouquet(2, 0), &two).unwrap();
        assert_eq!(b, rat(92, 35));
    }

    #[test]
    fn e_series_matches_defining_sum() {
        for (n, d) in [(4usize, 3usize), (10, 4), (7, 6)] {
            let s = e_rational(n, d).series_at_infinity(12);
            let q = BigInt::from(d - 1);
            for (k, sk) in s.iter().enumerate() {
                let expect = if k % 2 == 1 {
                    BigRational::zero()
                } else {
                    let one = BigRational::one();
                    let qk = BigRational::from_integer(q.pow(k as u32));
                    (one - qk.recip()) * BigRational::from_integer(BigInt::from(n * (d - 2)))
                };
                assert_eq!(sk, &expect, "n={n} d={d} k={k}");
            }
        }
    }

    #[test]
    fn remainder_reduces_to_e_and_handles_half_loops() {
        let k4 = Graph::complete(4);
        assert_eq!(remainder_rational(&k4.counts(), 3), e_rational(4, 3));
        for g in [build_bouquet(0, 3), build_bouquet(1, 1), build_bouquet(1, 2), Graph::complete(4)] {
            let d = g.regular_degree().unwrap();
            let r = remainder_rational(&g.counts(), d);
            for u in [rat(2, 1), rat(-7, 3), rat(5, 4)] {
                let lhs = neg_log_derivative_zeta_exact(&g, &u).unwrap();
                let rhs = evaluate_l_exact(&g, &u).unwrap() + r.eval_rational(&u).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn contour_examples() {
        let spec = ContourSpec::new(0.2, 0.05, ContourSign::Plus);
        for g in [Graph::complete(4), build_bouquet(2, 0)] {
            let c = contour_pole_count(&g, &spec).unwrap();
            assert_eq!(c.exact, 0);
            assert!(c.numeric_re.abs() < 1e-6 && c.numeric_im.abs() < 1e-6, "{c:?}");
        }
        let wide = ContourSpec::new(0.9, 0.05, ContourSign::Plus);
        assert!(matches!(contour_pole_count(&Graph::complete(4), &wide), Err(ZetaError::InvalidContour(_))));
    }

    #[test]
    fn cp0_residue_is_one_half() {
        for d in [4, 6, 10] {
            for sign in [ContourSign::Plus, ContourSign::Minus] {
                let r = cp0_residue_numeric(d, sign, 512);
                assert!((r.re - 0.5).abs() < 1e-8 && r.im.abs() < 1e-8, "d={d} {r}");
            }
            let c = cp0_residues(d);
            assert_eq!(c.residues, vec!["1", "1/2", "1/2"]);
        }
        let c = cp0_residues(10);
        assert!((c.poles[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn residue_of_l_at_one() {
        let l = LogDerivative::new(&Graph::petersen()).unwrap();
        let r = l.residue_at(Complex64::new(1.0, 0.0), 256).unwrap();
        assert!((r.re - 1.0).abs() < 1e-9 && r.im.abs() < 1e-9);
    }
}
