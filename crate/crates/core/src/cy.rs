//! Pointwise linear algebra of the flat Calabi-Yau model `C^n`, possibly
//! with flat torus factors.
//!
//! Real coordinates are interleaved as `(x_1, y_1, ..., x_n, y_n)`, so
//! `omega = sum dx_j ^ dy_j`, `J(x, y) = (-y, x)`, `g = omega(., J .)` is the
//! Euclidean inner product and `Omega = dz_1 ^ ... ^ dz_n`.
//!
//! In almost Calabi-Yau mode with a weight `rho`, the metric used for
//! calibration is `rho^(-2/n) g` and the holomorphic form is scaled to
//! `rho^(-1) dz_1 ^ ... ^ dz_n`, which keeps `Re Omega` a calibration for
//! that metric.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, orthonormalize, project, sub, wrap_delta};

/// Conformal weight of the almost Calabi-Yau mode.
#[derive(Clone)]
pub enum Rho {
    Constant(f64),
    Function(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Rho {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Rho::Constant(c) => *c,
            Rho::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::Constant(c) => write!(f, "Rho::Constant({c})"),
            Rho::Function(_) => write!(f, "Rho::Function(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CYSpace {
    n: usize,
    /// Per real coordinate.
    periods: Vec<Option<f64>>,
    rho: Option<Rho>,
}

impl CYSpace {
    pub fn flat(n: usize) -> Self {
        Self {
            n,
            periods: vec![None; 2 * n],
            rho: None,
        }
    }

    /// Periods per complex coordinate, as `(x period, y period)`; a factor
    /// `C / (a Z + i b Z)` is `Some((a, b))`.
    pub fn with_periods(n: usize, lattice: &[Option<(f64, f64)>]) -> Result<Self> {
        if lattice.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} period entries for complex dimension {n}",
                lattice.len()
            )));
        }
        let periods = lattice
            .iter()
            .flat_map(|p| match p {
                Some((a, b)) => [Some(*a), Some(*b)],
                None => [None, None],
            })
            .collect();
        Ok(Self { n, periods, rho: None })
    }

    pub fn from_real_periods(periods: Vec<Option<f64>>) -> Result<Self> {
        if periods.len() % 2 != 0 || periods.is_empty() {
            return Err(Error::DimensionMismatch("real dimension must be even and positive".into()));
        }
        Ok(Self {
            n: periods.len() / 2,
            periods,
            rho: None,
        })
    }

    pub fn with_rho(mut self, rho: Rho) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn rho(&self) -> Option<&Rho> {
        self.rho.as_ref()
    }

    pub fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != 2 * self.n {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in real dimension {}",
                u.len(),
                2 * self.n
            )));
        }
        Ok(())
    }

    pub fn omega(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(omega(u, v))
    }

    pub fn metric(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(metric(u, v))
    }

    pub fn jay(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(jay(u))
    }

    pub fn omega_top(&self, vectors: &[Vec<f64>]) -> Result<Complex64> {
        if vectors.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "Omega takes {} vectors, got {}",
                self.n,
                vectors.len()
            )));
        }
        for v in vectors {
            self.check(v)?;
        }
        Ok(omega_top(vectors))
    }

    /// Minimal-image displacement `b - a`.
    pub fn delta(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        wrap_delta(a, b, &self.periods)
    }
}

pub fn omega(u: &[f64], v: &[f64]) -> f64 {
    u.chunks(2).zip(v.chunks(2)).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).sum()
}

pub fn metric(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v)
}

pub fn jay(u: &[f64]) -> Vec<f64> {
    u.chunks(2).flat_map(|a| [-a[1], a[0]]).collect()
}

pub fn complex_coords(u: &[f64]) -> Vec<Complex64> {
    u.chunks(2).map(|a| Complex64::new(a[0], a[1])).collect()
}

/// `dz_1 ^ ... ^ dz_n (v_1, ..., v_n)`: determinant of complex coordinates.
pub fn omega_top(vectors: &[Vec<f64>]) -> Complex64 {
    let n = vectors.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        let v = &vectors[j];
        Complex64::new(v[2 * i], v[2 * i + 1])
    });
    m.determinant()
}

/// `i_V Omega` evaluated on `n - 1` further vectors.
pub fn contract_omega_top(v: &[f64], args: &[Vec<f64>]) -> Complex64 {
    let mut all = Vec::with_capacity(args.len() + 1);
    all.push(v.to_vec());
    all.extend(args.iter().cloned());
    omega_top(&all)
}

fn parity(p: &[usize]) -> f64 {
    let mut sign = 1.0;
    let mut seen = vec![false; p.len()];
    for i in 0..p.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    // Heap's algorithm
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Residual of `(-1)^{n(n-1)/2} (i/2)^n Omega ^ conj(Omega) = omega^n / n!`,
/// both sides evaluated on the standard frame `(e_x1, e_y1, ..., e_xn, e_yn)`.
pub fn normalization_check(n: usize) -> f64 {
    let m = 2 * n;
    let frame: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect();
    let nf = crate::geometry::factorial(n);
    let mut wedge_oo = Complex64::new(0.0, 0.0);
    let mut omega_n = 0.0;
    for_each_permutation(m, |p| {
        let s = parity(p);
        let first: Vec<Vec<f64>> = p[..n].iter().map(|&i| frame[i].clone()).collect();
        let second: Vec<Vec<f64>> = p[n..].iter().map(|&i| frame[i].clone()).collect();
        wedge_oo += omega_top(&first) * omega_top(&second).conj() * s;
        let prod: f64 = (0..n).map(|j| omega(&frame[p[2 * j]], &frame[p[2 * j + 1]])).product();
        omega_n += s * prod;
    });
    wedge_oo /= nf * nf;
    omega_n /= 2f64.powi(n as i32);
    let sign = if (n * (n.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let lhs = wedge_oo * Complex64::new(0.0, 0.5).powi(n as i32) * sign;
    let rhs = omega_n / nf;
    (lhs - rhs).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePlane {
    pub base: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl FramePlane {
    pub fn new(base: Vec<f64>, basis: Vec<Vec<f64>>) -> Result<Self> {
        if basis.iter().any(|b| b.len() != base.len()) {
            return Err(Error::DimensionMismatch("basis vectors and base point differ in length".into()));
        }
        if orthonormalize(&basis, 1e-10).len() != basis.len() {
            return Err(Error::InvalidImmersion("plane basis is linearly dependent".into()));
        }
        Ok(Self { base, basis })
    }

    /// Orthonormal basis with the orientation of `basis`.
    pub fn orthonormal(&self) -> Vec<Vec<f64>> {
        orthonormalize(&self.basis, 1e-10)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianAffine {
    pub point: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl LagrangianAffine {
    pub fn new(point: Vec<f64>, basis: Vec<Vec<f64>>) -> Result<Self> {
        let n2 = point.len();
        if n2 % 2 != 0 || basis.len() != n2 / 2 || basis.iter().any(|b| b.len() != n2) {
            return Err(Error::DimensionMismatch(format!(
                "Lagrangian in R^{n2} needs {} basis vectors of length {n2}",
                n2 / 2
            )));
        }
        let on = orthonormalize(&basis, 1e-10);
        if on.len() != basis.len() {
            return Err(Error::InvalidImmersion("Lagrangian basis is linearly dependent".into()));
        }
        let res = lagrangian_residual(&on);
        if res > 1e-12 {
            return Err(Error::InvalidImmersion(format!("affine plane is not Lagrangian (residual {res:e})")));
        }
        Ok(Self { point, basis: on })
    }

    /// Line through `point` at angle `alpha` in the first complex factor
    /// times the real axes of the remaining factors.
    pub fn product_line(point: Vec<f64>, alpha: f64) -> Result<Self> {
        let n = point.len() / 2;
        let mut basis = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; 2 * n];
            if j == 0 {
                e[0] = alpha.cos();
                e[1] = alpha.sin();
            } else {
                e[2 * j] = 1.0;
            }
            basis.push(e);
        }
        Self::new(point, basis)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Component of `v` normal to the direction space.
    pub fn normal_part(&self, v: &[f64]) -> Vec<f64> {
        sub(v, &project(v, &self.basis))
    }

    /// Distance of `x` to the plane, with displacements taken modulo `periods`.
    pub fn distance(&self, x: &[f64], periods: &[Option<f64>]) -> f64 {
        let d = wrap_delta(&self.point, x, periods);
        let normal = self.normal_part(&d);
        // a periodic shift can move the foot point; retry after re-wrapping the normal part
        let again = wrap_delta(&vec![0.0; normal.len()], &normal, periods);
        norm(&self.normal_part(&again)).min(norm(&normal))
    }

    /// Orthogonal projection of `x` onto the plane (in the chart around `point`).
    pub fn project_point(&self, x: &[f64], periods: &[Option<f64>]) -> Vec<f64> {
        let d = wrap_delta(&self.point, x, periods);
        let n = self.normal_part(&d);
        sub(x, &n)
    }
}

fn lagrangian_residual(on: &[Vec<f64>]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..on.len() {
        for j in i + 1..on.len() {
            r = r.max(omega(&on[i], &on[j]).abs());
        }
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneCheck {
    pub holds: bool,
    pub residual: f64,
}

pub const PLANE_TOL: f64 = 1e-10;

/// `max |omega(b_i, b_j)|` on an orthonormalized basis.
pub fn is_lagrangian(plane: &FramePlane) -> PlaneCheck {
    let residual = lagrangian_residual(&plane.orthonormal());
    PlaneCheck {
        holds: residual < PLANE_TOL,
        residual,
    }
}

/// Lagrangian and `|Im Omega| / |Omega|` small. The reported residual is the
/// larger of the two.
pub fn is_special_lagrangian(plane: &FramePlane) -> PlaneCheck {
    let lag = is_lagrangian(plane);
    let on = plane.orthonormal();
    let w = omega_top(&on);
    let phase = if w.norm() > 0.0 { (w.im / w.norm()).abs() } else { 1.0 };
    let residual = lag.residual.max(phase);
    PlaneCheck {
        holds: residual < PLANE_TOL,
        residual,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `|Re Omega(e) - 1|` on an orthonormal basis of the calibration metric.
    pub residual: f64,
    /// The given basis had to be reversed to make `Re Omega` positive.
    pub flipped: bool,
}

/// Evaluates `Re Omega` on an oriented orthonormal basis. With a weight
/// `rho` (value at the plane's base point), both the metric and `Omega`
/// are rescaled as described in the module docs.
pub fn calibration_check(plane: &FramePlane, rho: Option<&Rho>) -> Result<Calibration> {
    let sl = is_special_lagrangian(plane);
    if !sl.holds {
        return Err(Error::NotSpecialLagrangian(sl.residual));
    }
    let n = plane.basis.len() as f64;
    let on = plane.orthonormal();
    let mut value = omega_top(&on).re;
    if let Some(r) = rho {
        let r = r.eval(&plane.base);
        // orthonormal for rho^(-2/n) g is rho^(1/n) e; Omega carries rho^(-1)
        value *= r.powf(1.0 / n).powf(n) / r;
    }
    let flipped = value < 0.0;
    Ok(Calibration {
        residual: (value.abs() - 1.0).abs(),
        flipped,
    })
}

/// `|Im Omega(JY, args) - Re Omega(Y, args)|`.
pub fn rotation_identity_check(y: &[f64], args: &[Vec<f64>]) -> f64 {
    let lhs = contract_omega_top(&jay(y), args).im;
    let rhs = contract_omega_top(y, args).re;
    (lhs - rhs).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRotation {
    pub a: f64,
    /// Orthonormal tangent frame `(b_1, ..., b_{n-1}, v_n)`: boundary tangent
    /// first, then the unit conormal inside the tangent plane.
    pub tangent_basis: Vec<Vec<f64>>,
    /// `(a + J) t_i` for the tangent frame above.
    pub e_basis: Vec<Vec<f64>>,
    /// `dim(E_p ∩ T Lambda)`.
    pub intersection_dim: usize,
    /// Distance of the unit vector `(a + J) v_n / |.|` from `T Lambda`.
    pub membership_residual: f64,
}

pub fn rotate(a: f64, v: &[f64]) -> Vec<f64> {
    let jv = jay(v);
    v.iter().zip(&jv).map(|(x, y)| a * x + y).collect()
}

/// Distance of the normalized `(a + J) v` from the direction space of `lambda`.
pub fn membership_residual(a: f64, v: &[f64], lambda: &LagrangianAffine) -> f64 {
    let w = rotate(a, v);
    let nw = norm(&w);
    norm(&lambda.normal_part(&w)) / nw
}

/// Dimension of the intersection of two subspaces given by spanning sets.
pub fn intersection_dim(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> usize {
    let oa = orthonormalize(a, tol);
    let ob = orthonormalize(b, tol);
    let mut all = oa.clone();
    all.extend(ob.iter().cloned());
    let m = DMatrix::from_fn(all[0].len(), all.len(), |i, j| all[j][i]);
    let sv = m.singular_values();
    let rank = sv.iter().filter(|&&s| s > tol).count();
    oa.len() + ob.len() - rank
}

/// The unique `a` with `(a + J) v_n` tangent to `lambda`.
///
/// `v_n` is the unit vector of the tangent plane orthogonal to the boundary
/// tangent; `w` is the unit vector of `T Lambda` orthogonal to the boundary
/// tangent. Writing `w = c v_n + d J v_n + ...`, the answer is `a = c / d`.
pub fn boundary_rotation_a(
    tangent: &FramePlane,
    boundary_tangent: &FramePlane,
    lambda: &LagrangianAffine,
) -> Result<BoundaryRotation> {
    let n = lambda.dim();
    if tangent.basis.len() != n || boundary_tangent.basis.len() + 1 != n {
        return Err(Error::DimensionMismatch(format!(
            "tangent needs {n} and boundary tangent {} vectors",
            n.saturating_sub(1)
        )));
    }
    let bt = orthonormalize(&boundary_tangent.basis, 1e-10);
    if bt.len() + 1 != n {
        return Err(Error::InvalidImmersion("boundary tangent is degenerate".into()));
    }
    let t_on = tangent.orthonormal();
    let vn = unit_complement(&t_on, &bt)?;
    // orient v_n so that (b, v_n) has the orientation of the given tangent basis
    let mut frame = bt.clone();
    frame.push(vn.clone());
    let orient = DMatrix::from_fn(n, n, |i, j| dot(&frame[j], &t_on[i])).determinant();
    let vn = if orient < 0.0 { vn.iter().map(|x| -x).collect() } else { vn };
    frame[n - 1] = vn.clone();

    let w = unit_complement(&lambda.basis, &bt)?;
    let c = dot(&w, &vn);
    let d = dot(&w, &jay(&vn));
    if d.abs() <= 1e-12 {
        return Err(Error::TangentEqualsLambda(d));
    }
    let a = c / d;
    let e_basis: Vec<Vec<f64>> = frame.iter().map(|t| rotate(a, t)).collect();
    let intersection_dim = intersection_dim(&e_basis, &lambda.basis, 1e-9);
    Ok(BoundaryRotation {
        a,
        membership_residual: membership_residual(a, &vn, lambda),
        tangent_basis: frame,
        e_basis,
        intersection_dim,
    })
}

/// Unit vector in span(`space`) orthogonal to the orthonormal set `remove`,
/// assuming the complement is one-dimensional (the best candidate otherwise).
fn unit_complement(space: &[Vec<f64>], remove: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for s in space {
        let mut r = sub(s, &project(s, remove));
        for _ in 0..1 {
            r = sub(&r, &project(&r, remove));
        }
        let nr = norm(&r);
        if nr > best_norm {
            best_norm = nr;
            best = Some(r.iter().map(|x| x / nr).collect());
        }
    }
    match best {
        Some(v) if best_norm > 1e-10 => Ok(v),
        _ => Err(Error::InvalidImmersion("no direction transverse to the boundary tangent".into())),
    }
}

/// `Phi(V) = omega(V, .)` on the tangent basis.
pub fn phi_map(tangent_basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    tangent_basis.iter().map(|t| omega(v, t)).collect()
}

/// Inverse of [`phi_map`] on the fiber spanned by `e_basis`.
pub fn phi_inverse(e_basis: &[Vec<f64>], tangent_basis: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>> {
    let n = e_basis.len();
    if tangent_basis.len() != n || theta.len() != n {
        return Err(Error::DimensionMismatch("Phi needs matching fiber, tangent and covector sizes".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = DMatrix::from_fn(n, n, |j, i| omega(&e_basis[i], &tangent_basis[j]));
    let sv = m.singular_values();
    if sv.min() <= 1e-12 * sv.max().max(f64::MIN_POSITIVE) {
        return Err(Error::SingularPhi);
    }
    let c = m.lu().solve(&DVector::from_column_slice(theta)).ok_or(Error::SingularPhi)?;
    let mut v = vec![0.0; e_basis[0].len()];
    for (i, e) in e_basis.iter().enumerate() {
        crate::geometry::axpy(&mut v, c[i], e);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; 2 * n];
        v[i] = 1.0;
        v
    }

    fn random_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Product of lines at angles `alphas` in each factor.
    fn product_plane(alphas: &[f64]) -> Vec<Vec<f64>> {
        let n = alphas.len();
        (0..n)
            .map(|j| {
                let mut v = vec![0.0; 2 * n];
                v[2 * j] = alphas[j].cos();
                v[2 * j + 1] = alphas[j].sin();
                v
            })
            .collect()
    }

    #[test]
    fn standard_structures() {
        let s = CYSpace::flat(2);
        assert_eq!(s.omega(&e(2, 0), &e(2, 1)).unwrap(), 1.0);
        assert_eq!(s.omega(&e(2, 0), &e(2, 2)).unwrap(), 0.0);
        assert!(matches!(s.omega(&[1.0], &[0.0]), Err(Error::DimensionMismatch(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = random_vec(&mut rng, 4);
            let v = random_vec(&mut rng, 4);
            let jj = jay(&jay(&u));
            assert!(jj.iter().zip(&u).all(|(a, b)| (a + b).abs() < 1e-15));
            assert!((metric(&u, &v) - omega(&u, &jay(&v))).abs() < 1e-14);
            assert!(metric(&u, &u) > 0.0);
        }
    }

    #[test]
    fn omega_top_phase_and_alternation() {
        let n = 3;
        let real: Vec<Vec<f64>> = (0..n).map(|j| e(n, 2 * j)).collect();
        assert!((omega_top(&real) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let mut swapped = real.clone();
        swapped.swap(0, 2);
        assert!((omega_top(&swapped) + Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let alphas = [0.3, -1.1, 0.45];
        let w = omega_top(&product_plane(&alphas));
        let expect = Complex64::from_polar(1.0, alphas.iter().sum());
        assert!((w - expect).norm() < 1e-14);
    }

    #[test]
    fn flat_normalization_identity() {
        for n in 1..=3 {
            assert!(normalization_check(n) < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn lagrangian_predicates() {
        let base = vec![0.0; 4];
        let real = FramePlane::new(base.clone(), vec![e(2, 0), e(2, 2)]).unwrap();
        assert!(is_lagrangian(&real).holds && is_special_lagrangian(&real).holds);
        let complex_line = FramePlane::new(base.clone(), vec![e(2, 0), e(2, 1)]).unwrap();
        assert!(!is_lagrangian(&complex_line).holds);
        let p = FramePlane::new(base.clone(), product_plane(&[0.4, 0.9])).unwrap();
        assert!(is_lagrangian(&p).holds && !is_special_lagrangian(&p).holds);
        let q = FramePlane::new(base.clone(), product_plane(&[0.4, std::f64::consts::PI - 0.4])).unwrap();
        assert!(is_special_lagrangian(&q).holds);
    }

    #[test]
    fn calibration() {
        let base = vec![0.0; 4];
        let real = FramePlane::new(base.clone(), vec![e(2, 0), e(2, 2)]).unwrap();
        let c = calibration_check(&real, None).unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(!c.flipped);
        let q = FramePlane::new(base.clone(), product_plane(&[0.7, -0.7])).unwrap();
        assert!(calibration_check(&q, None).unwrap().residual < 1e-12);
        let rev = FramePlane::new(base.clone(), vec![e(2, 2), e(2, 0)]).unwrap();
        assert!(calibration_check(&rev, None).unwrap().flipped);
        let bad = FramePlane::new(base.clone(), product_plane(&[0.2, 0.2])).unwrap();
        assert!(matches!(calibration_check(&bad, None), Err(Error::NotSpecialLagrangian(_))));
        let w = calibration_check(&q, Some(&Rho::Constant(3.0))).unwrap();
        assert!(w.residual < 1e-12);
    }

    #[test]
    fn rotation_identity() {
        assert!(rotation_identity_check(&[1.0, 0.0], &[]) < 1e-15);
        assert!((contract_omega_top(&jay(&[1.0, 0.0]), &[]).im - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3 {
            for _ in 0..20 {
                let y = random_vec(&mut rng, 2 * n);
                let args: Vec<Vec<f64>> = (1..n).map(|_| random_vec(&mut rng, 2 * n)).collect();
                assert!(rotation_identity_check(&y, &args) < 1e-12);
            }
        }
    }

    fn interval_rotation(alpha: f64) -> Result<BoundaryRotation> {
        let tangent = FramePlane::new(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).unwrap();
        let boundary = FramePlane::new(vec![0.0, 0.0], vec![]).unwrap();
        let lambda = LagrangianAffine::product_line(vec![0.0, 0.0], alpha).unwrap();
        boundary_rotation_a(&tangent, &boundary, &lambda)
    }

    #[test]
    fn rotation_a_in_one_dimension() {
        let r = interval_rotation(std::f64::consts::FRAC_PI_2).unwrap();
        assert!(r.a.abs() < 1e-15);
        let r = interval_rotation(1.0).unwrap();
        assert!((r.a - 1.0 / 1.0f64.tan()).abs() < 1e-12);
        assert_eq!(r.intersection_dim, 1);
        assert!(r.membership_residual < 1e-12);
        assert!(matches!(interval_rotation(1e-14), Err(Error::TangentEqualsLambda(_))));
    }

    #[test]
    fn rotation_a_is_unique() {
        let r = interval_rotation(0.8).unwrap();
        let lambda = LagrangianAffine::product_line(vec![0.0, 0.0], 0.8).unwrap();
        for da in [-1e-3, 1e-3] {
            assert!(membership_residual(r.a + da, &r.tangent_basis[0], &lambda) > 1e-4);
        }
    }

    #[test]
    fn rotation_a_on_product_matches_factor() {
        // tangent: (x1 axis) x (x2 axis); boundary tangent along x2; Lambda: line at alpha x real axis
        let alpha = 1.2;
        let tangent = FramePlane::new(vec![0.0; 4], vec![e(2, 0), e(2, 2)]).unwrap();
        let boundary = FramePlane::new(vec![0.0; 4], vec![e(2, 2)]).unwrap();
        let lambda = LagrangianAffine::product_line(vec![0.0; 4], alpha).unwrap();
        let r = boundary_rotation_a(&tangent, &boundary, &lambda).unwrap();
        assert!((r.a - interval_rotation(alpha).unwrap().a).abs() < 1e-12);
        assert_eq!(r.intersection_dim, 1);
        // E_p is Lagrangian for every a
        for a in [-2.0, 0.0, 0.5, 3.0] {
            let eb: Vec<Vec<f64>> = r.tangent_basis.iter().map(|t| rotate(a, t)).collect();
            assert!(lagrangian_residual(&eb) < 1e-12);
        }
    }

    #[test]
    fn phi_round_trip_and_boundary_equivalence() {
        let t = vec![e(2, 0), e(2, 2)];
        let je: Vec<Vec<f64>> = t.iter().map(|v| jay(v)).collect();
        let th = phi_map(&t, &je[0]);
        assert_eq!(th, vec![-1.0, 0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let alpha = rng.gen_range(0.2..2.9);
            let lambda = LagrangianAffine::product_line(vec![0.0; 4], alpha).unwrap();
            // random Lagrangian tangent: rotate the real plane by a unitary diag(e^{i b1}, e^{i b2})
            let b1: f64 = rng.gen_range(-0.5..0.5);
            let tangent = FramePlane::new(vec![0.0; 4], vec![vec![b1.cos(), b1.sin(), 0.0, 0.0], e(2, 2)]).unwrap();
            let boundary = FramePlane::new(vec![0.0; 4], vec![e(2, 2)]).unwrap();
            let r = boundary_rotation_a(&tangent, &boundary, &lambda).unwrap();
            let theta = random_vec(&mut rng, 2);
            let v = phi_inverse(&r.e_basis, &r.tangent_basis, &theta).unwrap();
            let back = phi_map(&r.tangent_basis, &v);
            assert!(back.iter().zip(&theta).all(|(a, b)| (a - b).abs() < 1e-12));
            // theta killing the boundary tangent <=> Phi^{-1} theta in T Lambda
            let killed = vec![0.0, theta[1]];
            let v = phi_inverse(&r.e_basis, &r.tangent_basis, &killed).unwrap();
            assert!(norm(&lambda.normal_part(&v)) < 1e-10 * norm(&v).max(1.0));
            let not_killed = vec![1.0, theta[1]];
            let v = phi_inverse(&r.e_basis, &r.tangent_basis, &not_killed).unwrap();
            assert!(norm(&lambda.normal_part(&v)) > 1e-6);
        }
    }

    #[test]
    fn singular_phi_detected() {
        let t = vec![e(1, 0)];
        assert!(matches!(phi_inverse(&t, &t, &[1.0]), Err(Error::SingularPhi)));
    }
}
