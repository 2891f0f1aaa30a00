//! Harmonic fields under Dirichlet and Neumann conditions, the three-term
//! orthogonal decomposition, and the Dirichlet Poisson problem.
//!
//! Everything here is dense linear algebra. Null spaces come from the
//! symmetric eigenproblem of the star-scaled operator; least-squares
//! potentials come from a QR factorization on the row space, which also gives
//! the minimal-norm choice.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::Cochain;
use crate::error::{Error, Result};
use crate::metric::MetricComplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HodgeConfig {
    /// Eigenvalues below `kernel_tol * largest` count as zero.
    pub kernel_tol: f64,
    /// Required ratio between the first nonzero and the last zero eigenvalue.
    pub gap_ratio: f64,
    /// Relative cutoff on singular values in least-squares solves (floored at 1e-7).
    pub svd_tol: f64,
}

impl Default for HodgeConfig {
    fn default() -> Self {
        Self {
            kernel_tol: 1e-9,
            gap_ratio: 1e3,
            svd_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub last_zero: f64,
    pub first_nonzero: f64,
    /// `first_nonzero / max(last_zero, eps * largest)`; infinite when one side is empty.
    pub ratio: f64,
    pub largest: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicBasis {
    pub degree: usize,
    pub condition: BoundaryCondition,
    pub fields: Vec<Cochain>,
    /// Star inner products of the fields (identity up to roundoff).
    pub gram: DMatrix<f64>,
    pub gap: SpectralGap,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.fields.len()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HodgeSplit {
    pub input: Cochain,
    pub coexact_neumann: Cochain,
    pub harmonic: Cochain,
    pub exact_dirichlet: Cochain,
    /// Minimal-norm Dirichlet `(k-1)`-potential of the exact part.
    pub exact_potential: Option<Cochain>,
    /// Minimal-norm `(k+1)`-potential of the coexact part.
    pub coexact_potential: Option<Cochain>,
    pub residuals: SplitResiduals,
}

impl HodgeSplit {
    pub fn residual(&self) -> f64 {
        self.residuals.max()
    }
}

/// All residuals relative to the squared (or plain) star norm of the input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitResiduals {
    pub reconstruction: f64,
    pub exact_coexact: f64,
    pub exact_harmonic: f64,
    pub coexact_harmonic: f64,
    /// `|d h|` and `|d* h|` on interior simplices, relative to `|input|`.
    pub harmonic_d: f64,
    pub harmonic_codiff: f64,
}

impl SplitResiduals {
    pub fn max(&self) -> f64 {
        [
            self.reconstruction,
            self.exact_coexact,
            self.exact_harmonic,
            self.coexact_harmonic,
            self.harmonic_d,
            self.harmonic_codiff,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn orthogonality(&self) -> f64 {
        self.exact_coexact.max(self.exact_harmonic).max(self.coexact_harmonic)
    }
}

/// Orthonormal range basis `q` and row-space basis `v` of a star-scaled
/// operator `A`, with `A v = q r` and `r` upper triangular.
///
/// The row space comes from the symmetric eigenproblem of `A^T A` rather
/// than from an SVD of `A`: nalgebra's bidiagonal SVD loses accuracy (to
/// 1e-4) on the highly symmetric torus coboundaries, the eigensolver does
/// not. The Gram matrix only resolves singular values down to about
/// `sqrt(eps) * largest`, so the cutoff is floored there.
#[derive(Debug)]
struct Range {
    q: DMatrix<f64>,
    v: DMatrix<f64>,
    r: DMatrix<f64>,
}

const GRAM_CUTOFF_FLOOR: f64 = 1e-7;

impl Range {
    fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let empty = |rows, cols| Self {
            q: DMatrix::zeros(rows, 0),
            v: DMatrix::zeros(cols, 0),
            r: DMatrix::zeros(0, 0),
        };
        if m.nrows() == 0 || m.ncols() == 0 {
            return Ok(empty(m.nrows(), m.ncols()));
        }
        let eig = (m.transpose() * &m).symmetric_eigen();
        let lmax = eig.eigenvalues.max();
        if !lmax.is_finite() {
            return Err(Error::SolverFailure("non-finite operator entries".into()));
        }
        if lmax <= 0.0 {
            return Ok(empty(m.nrows(), m.ncols()));
        }
        let cut = tol.max(GRAM_CUTOFF_FLOOR).powi(2) * lmax;
        let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > cut).collect();
        let v = eig.eigenvectors.select_columns(&keep);
        let qr = (&m * &v).qr();
        Ok(Self { q: qr.q(), r: qr.r(), v })
    }

    /// Returns `(projection onto the range, minimal-norm preimage)`.
    fn solve(&self, rhs: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let c = self.q.transpose() * rhs;
        let proj = &self.q * &c;
        let y = self.r.solve_upper_triangular(&c).expect("nonzero diagonal above the cutoff");
        (proj, &self.v * y)
    }
}

fn sqrt_diag(s: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| s[i].sqrt()))
}

fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn degrees_caches<T>(n: usize) -> Vec<OnceLock<T>> {
    (0..=n).map(|_| OnceLock::new()).collect()
}

/// Hodge theory on one metric complex. Factorizations are computed lazily
/// and cached; each cache cell is written once, so a shared solver may be
/// used from several threads.
pub struct HodgeSolver<'a> {
    metric: &'a MetricComplex,
    config: HodgeConfig,
    exact: Vec<OnceLock<std::result::Result<Range, String>>>,
    coexact: Vec<OnceLock<std::result::Result<Range, String>>>,
    poisson: OnceLock<std::result::Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, Vec<usize>), String>>,
}

impl<'a> HodgeSolver<'a> {
    pub fn new(metric: &'a MetricComplex, config: HodgeConfig) -> Self {
        let n = metric.dim();
        Self {
            metric,
            config,
            exact: degrees_caches(n),
            coexact: degrees_caches(n),
            poisson: OnceLock::new(),
        }
    }

    pub fn metric(&self) -> &MetricComplex {
        self.metric
    }

    pub fn config(&self) -> &HodgeConfig {
        &self.config
    }

    fn check(&self, k: usize) -> Result<()> {
        if k > self.metric.dim() {
            return Err(Error::DegreeOutOfRange {
                degree: k,
                max: self.metric.dim(),
            });
        }
        Ok(())
    }

    pub fn harmonic_fields(&self, k: usize, condition: BoundaryCondition) -> Result<HarmonicBasis> {
        harmonic_fields(self.metric, k, condition, &self.config)
    }

    /// `S_k^{1/2} d_{k-1} S_{k-1}^{-1/2}` on Dirichlet potentials.
    fn exact_range(&self, k: usize) -> Result<&Range> {
        let cell = self.exact[k].get_or_init(|| {
            let m = self.metric;
            let rows = all(m.complex().count(k));
            let cols = m.complex().interior(k - 1);
            let sk = sqrt_diag(m.star_diagonal(k).expect("degree"), &rows);
            let sl = sqrt_diag(m.star_diagonal(k - 1).expect("degree"), &cols);
            let mut a = m.complex().coboundary_dense(k - 1).select_columns(&cols);
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    a[(i, j)] *= sk[i] / sl[j];
                }
            }
            Range::new(a, self.config.svd_tol).map_err(|e| e.to_string())
        });
        cell.as_ref().map_err(|e| Error::SolverFailure(e.clone()))
    }

    /// `S_k^{-1/2} d_k^T S_{k+1}^{1/2}` on all `(k+1)`-potentials.
    fn coexact_range(&self, k: usize) -> Result<&Range> {
        let cell = self.coexact[k].get_or_init(|| {
            let m = self.metric;
            let sk = sqrt_diag(m.star_diagonal(k).expect("degree"), &all(m.complex().count(k)));
            let su = sqrt_diag(m.star_diagonal(k + 1).expect("degree"), &all(m.complex().count(k + 1)));
            let mut a = m.complex().coboundary_dense(k).transpose();
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    a[(i, j)] *= su[j] / sk[i];
                }
            }
            Range::new(a, self.config.svd_tol).map_err(|e| e.to_string())
        });
        cell.as_ref().map_err(|e| Error::SolverFailure(e.clone()))
    }

    /// Splits `alpha` into coexact (Neumann potential), harmonic and exact
    /// (Dirichlet potential) parts.
    pub fn decompose(&self, alpha: &Cochain) -> Result<HodgeSplit> {
        let m = self.metric;
        alpha.validate(m.complex())?;
        let k = alpha.degree;
        self.check(k)?;
        let n = m.dim();
        let s = m.star_diagonal(k)?;
        let sh = s.map(f64::sqrt);
        let u = alpha.values.component_mul(&sh);
        let size = alpha.len();

        let (exact, exact_potential) = if k >= 1 {
            let r = self.exact_range(k)?;
            let (proj, pre) = r.solve(&u);
            let cols = m.complex().interior(k - 1);
            let sl = m.star_diagonal(k - 1)?;
            let mut pot = DVector::zeros(m.complex().count(k - 1));
            for (j, &c) in cols.iter().enumerate() {
                pot[c] = pre[j] / sl[c].sqrt();
            }
            (proj.component_div(&sh), Some(Cochain::new(k - 1, pot)))
        } else {
            (DVector::zeros(size), None)
        };
        let (coexact, coexact_potential) = if k < n {
            let r = self.coexact_range(k)?;
            let (proj, pre) = r.solve(&u);
            let su = m.star_diagonal(k + 1)?;
            let pot = pre.component_div(&su.map(f64::sqrt));
            (proj.component_div(&sh), Some(Cochain::new(k + 1, pot)))
        } else {
            (DVector::zeros(size), None)
        };
        let harmonic = &alpha.values - &exact - &coexact;

        let ip = |a: &DVector<f64>, b: &DVector<f64>| a.component_mul(b).dot(s);
        let norm2 = ip(&alpha.values, &alpha.values).max(f64::MIN_POSITIVE);
        let recon = &exact + &coexact + &harmonic - &alpha.values;
        let mut residuals = SplitResiduals {
            reconstruction: ip(&recon, &recon).sqrt() / norm2.sqrt(),
            exact_coexact: ip(&exact, &coexact).abs() / norm2,
            exact_harmonic: ip(&exact, &harmonic).abs() / norm2,
            coexact_harmonic: ip(&coexact, &harmonic).abs() / norm2,
            ..Default::default()
        };
        let h = Cochain::new(k, harmonic.clone());
        if k < n {
            let dh = m.complex().d(&h)?;
            residuals.harmonic_d = m.norm(&dh)? / norm2.sqrt();
        }
        if k >= 1 {
            let cd = m.codifferential(k)? * &harmonic;
            let interior = m.complex().interior(k - 1);
            let sl = m.star_diagonal(k - 1)?;
            let v: f64 = interior.iter().map(|&i| cd[i] * cd[i] * sl[i]).sum();
            residuals.harmonic_codiff = v.sqrt() / norm2.sqrt();
        }

        Ok(HodgeSplit {
            input: alpha.clone(),
            coexact_neumann: Cochain::new(k, coexact),
            harmonic: h,
            exact_dirichlet: Cochain::new(k, exact),
            exact_potential,
            coexact_potential,
            residuals,
        })
    }

    /// Solves for a Dirichlet 0-cochain `f` with `d*(theta + df) = phi`
    /// balanced on every interior dual cell, where `phi` is given on the dual
    /// `(n-1)`-cells (indexed by edges, the same values a star of a
    /// 1-cochain produces). Written with the dual coboundary `d_0^T`:
    /// `d_0^T (S_1 (theta + d_0 f) - phi) = 0` at interior vertices.
    pub fn poisson_dirichlet(&self, theta: &Cochain, phi: &Cochain) -> Result<Cochain> {
        let m = self.metric;
        theta.validate(m.complex())?;
        if theta.degree != 1 {
            return Err(Error::CochainLength {
                degree: 1,
                expected: m.complex().count(1),
                got: theta.len(),
            });
        }
        if phi.len() != m.complex().count(1) {
            return Err(Error::CochainLength {
                degree: m.dim().saturating_sub(1),
                expected: m.complex().count(1),
                got: phi.len(),
            });
        }
        let cell = self.poisson.get_or_init(|| {
            let (lap, idx) = dirichlet_stiffness(m);
            match lap.cholesky() {
                Some(c) => Ok((c, idx)),
                None => Err("Dirichlet stiffness matrix is not positive definite".to_string()),
            }
        });
        let (chol, idx) = cell.as_ref().map_err(|e| Error::SolverFailure(e.clone()))?;
        let rhs_full = poisson_rhs(m, theta, phi);
        let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| rhs_full[i]));
        let sol = chol.solve(&rhs);
        let mut f = DVector::zeros(m.complex().count(0));
        for (j, &i) in idx.iter().enumerate() {
            f[i] = sol[j];
        }
        let f = Cochain::new(0, f);
        let res = poisson_residual(m, theta, phi, &f);
        if !(res < 1e-8) {
            return Err(Error::SolverFailure(format!("Poisson residual {res:e}")));
        }
        Ok(f)
    }
}

/// `d_0^T S_1 d_0` restricted to interior vertices.
fn dirichlet_stiffness(m: &MetricComplex) -> (DMatrix<f64>, Vec<usize>) {
    let idx = m.complex().interior(0);
    let d = m.complex().coboundary_dense(0).select_columns(&idx);
    let s = m.star_diagonal(1).expect("degree 1 exists");
    let sd = DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] * s[i]);
    (d.transpose() * sd, idx)
}

/// `d_0^T (phi - S_1 theta)` on all vertices.
fn poisson_rhs(m: &MetricComplex, theta: &Cochain, phi: &Cochain) -> DVector<f64> {
    let s = m.star_diagonal(1).expect("degree 1 exists");
    let flux = &phi.values - theta.values.component_mul(s);
    m.complex().coboundary_dense(0).transpose() * flux
}

/// `|P d_0^T (S_1(theta + df) - phi)| / |P d_0^T phi|` over interior vertices;
/// falls back to the scale of `S_1 theta` when `phi` has no interior divergence.
pub fn poisson_residual(m: &MetricComplex, theta: &Cochain, phi: &Cochain, f: &Cochain) -> f64 {
    let s = m.star_diagonal(1).expect("degree 1 exists");
    let d0t = m.complex().coboundary_dense(0).transpose();
    let df = m.complex().coboundary_dense(0) * &f.values;
    let lhs = &d0t * (theta.values.clone() + df).component_mul(s);
    let rhs = &d0t * &phi.values;
    let idx = m.complex().interior(0);
    let pick = |v: &DVector<f64>| DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]));
    let (l, r) = (pick(&lhs), pick(&rhs));
    let scale = r.norm().max(pick(&(&d0t * theta.values.component_mul(s))).norm());
    if scale == 0.0 {
        return (l - r).norm();
    }
    (l - r).norm() / scale
}

/// Null space of `d^T S d + S d S^{-1} d^T S` on the admissible `k`-cochains,
/// as a generalized eigenproblem against `S_k`.
pub fn harmonic_fields(
    m: &MetricComplex,
    k: usize,
    condition: BoundaryCondition,
    config: &HodgeConfig,
) -> Result<HarmonicBasis> {
    let n = m.dim();
    if k > n {
        return Err(Error::DegreeOutOfRange { degree: k, max: n });
    }
    let cx = m.complex();
    let pick = |deg: usize| match condition {
        BoundaryCondition::Dirichlet => cx.interior(deg),
        BoundaryCondition::Neumann => all(cx.count(deg)),
    };
    let ik = pick(k);
    let sk = m.star_diagonal(k)?;
    let sh = sqrt_diag(sk, &ik);
    let size = ik.len();
    // B = S^{-1/2} A S^{-1/2}, assembled as sum of Gram matrices
    let mut b = DMatrix::zeros(size, size);
    if k < n {
        let iu = pick(k + 1);
        let su = sqrt_diag(m.star_diagonal(k + 1)?, &iu);
        let d = cx.coboundary_dense(k).select_rows(&iu).select_columns(&ik);
        let w = DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] * su[i] / sh[j]);
        b += w.transpose() * &w;
    }
    if k >= 1 {
        let il = pick(k - 1);
        let sl = sqrt_diag(m.star_diagonal(k - 1)?, &il);
        let d = cx.coboundary_dense(k - 1).select_rows(&ik).select_columns(&il);
        // rows of S_{k-1}^{-1/2} d^T S_k^{1/2}
        let w = DMatrix::from_fn(d.ncols(), d.nrows(), |i, j| d[(j, i)] * sh[j] / sl[i]);
        b += w.transpose() * &w;
    }
    let b = (&b + b.transpose()) * 0.5;

    let (values, vectors) = if size == 0 {
        (DVector::zeros(0), DMatrix::zeros(0, 0))
    } else {
        let eig = b.symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let largest = values.iter().cloned().fold(0.0, f64::max);
    let cutoff = config.kernel_tol * largest;
    let zeros: Vec<usize> = order.iter().copied().filter(|&i| values[i] <= cutoff).collect();
    let last_zero = zeros.last().map_or(0.0, |&i| values[i].max(0.0));
    let first_nonzero = order.get(zeros.len()).map_or(f64::INFINITY, |&i| values[i]);
    let ratio = if zeros.is_empty() || first_nonzero.is_infinite() {
        f64::INFINITY
    } else {
        first_nonzero / last_zero.max(f64::EPSILON * largest)
    };
    let gap = SpectralGap {
        last_zero,
        first_nonzero,
        ratio,
        largest,
    };
    if ratio < config.gap_ratio || (zeros.is_empty() && first_nonzero < config.gap_ratio * cutoff) {
        return Err(Error::SpectralGapTooSmall {
            last_zero,
            first_nonzero,
            ratio,
        });
    }

    let mut fields = Vec::with_capacity(zeros.len());
    for &z in &zeros {
        let y = vectors.column(z);
        let mut v = DVector::zeros(cx.count(k));
        for (j, &i) in ik.iter().enumerate() {
            v[i] = y[j] / sh[j];
        }
        // deterministic sign: largest entry positive
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v = -v;
        }
        fields.push(Cochain::new(k, v));
    }
    let gram = DMatrix::from_fn(fields.len(), fields.len(), |i, j| {
        fields[i].values.component_mul(&fields[j].values).dot(sk)
    });
    Ok(HarmonicBasis {
        degree: k,
        condition,
        fields,
        gram,
        gap,
    })
}

pub fn harmonic_fields_dirichlet(m: &MetricComplex, k: usize, config: &HodgeConfig) -> Result<HarmonicBasis> {
    harmonic_fields(m, k, BoundaryCondition::Dirichlet, config)
}

pub fn harmonic_fields_neumann(m: &MetricComplex, k: usize, config: &HodgeConfig) -> Result<HarmonicBasis> {
    harmonic_fields(m, k, BoundaryCondition::Neumann, config)
}

pub fn hodge_decompose(m: &MetricComplex, alpha: &Cochain, config: &HodgeConfig) -> Result<HodgeSplit> {
    HodgeSolver::new(m, *config).decompose(alpha)
}

pub fn poisson_dirichlet(m: &MetricComplex, theta: &Cochain, phi: &Cochain) -> Result<Cochain> {
    HodgeSolver::new(m, HodgeConfig::default()).poisson_dirichlet(theta, phi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarBijection {
    pub degree: usize,
    pub dirichlet_dim: usize,
    /// Numerical rank of the starred fields.
    pub rank: usize,
    /// Largest interior dual-closedness residual of the starred fields.
    pub dual_closed: f64,
    /// Largest residual of `d h` (co-closedness of the dual form).
    pub dual_coclosed: f64,
}

/// Stars the Dirichlet harmonic `k`-fields into dual `(n-k)`-cochains and
/// checks they stay closed and co-closed with full rank.
pub fn star_bijection_check(m: &MetricComplex, k: usize, config: &HodgeConfig) -> Result<StarBijection> {
    let basis = harmonic_fields_dirichlet(m, k, config)?;
    let s = m.star_diagonal(k)?;
    let cx = m.complex();
    let mut dual_closed: f64 = 0.0;
    let mut dual_coclosed: f64 = 0.0;
    let starred: Vec<DVector<f64>> = basis.fields.iter().map(|f| f.values.component_mul(s)).collect();
    for (f, st) in basis.fields.iter().zip(&starred) {
        let scale = st.amax().max(f64::MIN_POSITIVE);
        if k >= 1 {
            let div = cx.coboundary_dense(k - 1).transpose() * st;
            for i in cx.interior(k - 1) {
                dual_closed = dual_closed.max(div[i].abs() / scale);
            }
        }
        if k < m.dim() {
            let df = cx.coboundary_dense(k) * &f.values;
            dual_coclosed = dual_coclosed.max(df.amax() / f.values.amax().max(f64::MIN_POSITIVE));
        }
    }
    let rank = if starred.is_empty() {
        0
    } else {
        let mat = DMatrix::from_columns(&starred);
        let sv = mat.singular_values();
        let smax = sv.max();
        sv.iter().filter(|&&x| x > 1e-10 * smax).count()
    };
    Ok(StarBijection {
        degree: k,
        dirichlet_dim: basis.dim(),
        rank,
        dual_closed,
        dual_coclosed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::{betti, relative_betti};
    use crate::fixtures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn metric(f: (crate::complex::SimplicialComplex, crate::geometry::Embedding)) -> MetricComplex {
        MetricComplex::barycentric(f.0, f.1).unwrap()
    }

    #[test]
    fn interval_dirichlet_field_is_uniform() {
        let m = metric(fixtures::interval(6));
        let b = harmonic_fields_dirichlet(&m, 1, &HodgeConfig::default()).unwrap();
        assert_eq!(b.dim(), 1);
        let v = &b.fields[0].values;
        assert!((v.max() - v.min()).abs() < 1e-12);
        assert!((b.gram[(0, 0)] - 1.0).abs() < 1e-12);
        let n0 = harmonic_fields_neumann(&m, 0, &HodgeConfig::default()).unwrap();
        assert_eq!(n0.dim(), 1);
    }

    #[test]
    fn dimensions_match_betti_numbers() {
        let cfg = HodgeConfig::default();
        for (name, k, e) in fixtures::all() {
            let m = MetricComplex::barycentric(k.clone(), e).unwrap();
            for deg in 0..=k.dim() {
                let d = harmonic_fields_dirichlet(&m, deg, &cfg).unwrap();
                let nm = harmonic_fields_neumann(&m, deg, &cfg).unwrap();
                assert_eq!(d.dim(), relative_betti(&k, deg).unwrap(), "{name} D{deg}");
                assert_eq!(nm.dim(), betti(&k, deg).unwrap(), "{name} N{deg}");
            }
        }
    }

    #[test]
    fn dirichlet_fields_vanish_on_boundary() {
        let m = metric(fixtures::annulus(2, 10));
        let b = harmonic_fields_dirichlet(&m, 1, &HodgeConfig::default()).unwrap();
        for i in 0..m.complex().count(1) {
            if m.complex().is_boundary(1, i) {
                assert_eq!(b.fields[0].values[i], 0.0);
            }
        }
        // pairs nontrivially with a radial relative cycle
        let (rings, sectors) = (2, 10);
        let mut total = 0.0;
        for r in 0..rings {
            let (a, c) = (r * sectors, (r + 1) * sectors);
            let e = m.complex().find(&[a.min(c), a.max(c)]).unwrap();
            total += b.fields[0].values[e] * m.complex().orientation(1, e) as f64;
        }
        assert!(total.abs() > 1e-3);
    }

    #[test]
    fn decomposition_summands_are_fixed() {
        let m = metric(fixtures::annulus(2, 10));
        let solver = HodgeSolver::new(&m, HodgeConfig::default());
        let h = solver.harmonic_fields(1, BoundaryCondition::Dirichlet).unwrap().fields[0].clone();
        let s = solver.decompose(&h).unwrap();
        assert!((&s.harmonic.values - &h.values).amax() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut f = DVector::zeros(m.complex().count(0));
        for i in m.complex().interior(0) {
            f[i] = rng.gen_range(-1.0..1.0);
        }
        let df = m.complex().d(&Cochain::new(0, f)).unwrap();
        let s = solver.decompose(&df).unwrap();
        assert!((&s.exact_dirichlet.values - &df.values).amax() < 1e-9);
        assert!(s.harmonic.values.amax() < 1e-9);
    }

    #[test]
    fn random_split_residuals() {
        let m = metric(fixtures::annulus(2, 10));
        let solver = HodgeSolver::new(&m, HodgeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = Cochain::new(1, DVector::from_fn(m.complex().count(1), |_, _| rng.gen_range(-1.0..1.0)));
            let s = solver.decompose(&a).unwrap();
            assert!(s.residual() < 1e-8, "{:?}", s.residuals);
        }
    }

    #[test]
    fn closed_dirichlet_cochains_have_no_coexact_part() {
        let m = metric(fixtures::pair_of_pants(1));
        let solver = HodgeSolver::new(&m, HodgeConfig::default());
        let basis = solver.harmonic_fields(1, BoundaryCondition::Dirichlet).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut f = DVector::zeros(m.complex().count(0));
        for i in m.complex().interior(0) {
            f[i] = rng.gen_range(-1.0..1.0);
        }
        let mut closed = m.complex().d(&Cochain::new(0, f)).unwrap();
        closed.values += &basis.fields[1].values * 0.7;
        let s = solver.decompose(&closed).unwrap();
        let rel = m.norm(&s.coexact_neumann).unwrap() / m.norm(&closed).unwrap();
        assert!(rel < 1e-8);
    }

    #[test]
    fn poisson_trivial_cases() {
        let m = metric(fixtures::disk(3, 6));
        let zero = Cochain::zeros(m.complex(), 1);
        let f = poisson_dirichlet(&m, &zero, &zero).unwrap();
        assert_eq!(f.values.amax(), 0.0);

        let m = metric(fixtures::annulus(2, 10));
        let h = harmonic_fields_dirichlet(&m, 1, &HodgeConfig::default()).unwrap().fields[0].clone();
        let phi = Cochain::new(1, h.values.component_mul(m.star_diagonal(1).unwrap()));
        let f = poisson_dirichlet(&m, &h, &phi).unwrap();
        assert!(f.values.amax() < 1e-10);
    }

    #[test]
    fn poisson_against_dense_lu() {
        let cells = 32;
        let m = metric(fixtures::interval(cells));
        let x: Vec<f64> = m.embedding().positions.iter().map(|p| p[0]).collect();
        let theta = Cochain::from_vec(1, (0..cells).map(|i| 0.5 * (x[i] + x[i + 1]) * (x[i + 1] - x[i])).collect());
        let phi = Cochain::zeros(m.complex(), 1);
        let f = poisson_dirichlet(&m, &theta, &phi).unwrap();
        // oracle: assemble the tridiagonal system directly
        let h = 1.0 / cells as f64;
        let mut a = DMatrix::zeros(cells - 1, cells - 1);
        let mut b = DVector::zeros(cells - 1);
        for i in 0..cells - 1 {
            a[(i, i)] = 2.0 / h;
            if i > 0 {
                a[(i, i - 1)] = -1.0 / h;
            }
            if i + 1 < cells - 1 {
                a[(i, i + 1)] = -1.0 / h;
            }
            // vertex i+1: flux in from edge i, out through edge i+1
            b[i] = (theta.values[i + 1] - theta.values[i]) / h;
        }
        let oracle = a.lu().solve(&b).unwrap();
        for i in 0..cells - 1 {
            assert!((f.values[i + 1] - oracle[i]).abs() < 1e-10);
        }
        assert_eq!(f.values[0], 0.0);
        assert_eq!(f.values[cells], 0.0);
    }

    #[test]
    fn star_maps_dirichlet_to_neumann_set() {
        let m = metric(fixtures::pair_of_pants(1));
        let r = star_bijection_check(&m, 1, &HodgeConfig::default()).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.dirichlet_dim, betti(m.complex(), 1).unwrap());
        assert!(r.dual_closed < 1e-8 && r.dual_coclosed < 1e-8);
    }

    #[test]
    fn concurrent_readers_share_the_cache() {
        let m = metric(fixtures::annulus(2, 10));
        let solver = HodgeSolver::new(&m, HodgeConfig::default());
        let a = Cochain::new(1, DVector::from_fn(m.complex().count(1), |i, _| (i as f64).sin()));
        let results: Vec<f64> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..4).map(|_| s.spawn(|| solver.decompose(&a).unwrap().harmonic.values.sum())).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(results.windows(2).all(|w| w[0] == w[1]));
    }
}
