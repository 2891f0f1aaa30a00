//! Discrete immersions of `L` into the flat model, the pullback forms that
//! make up the special Lagrangian operator, and deformations generated by
//! Dirichlet 1-cochains.
//!
//! Conventions: with `omega = sum dx ^ dy`, `g = omega(., J .)` and `L`
//! oriented so that `Re Omega` restricts to its volume form, a normal field
//! satisfies `f*(i_V Im Omega) = -* f*(i_V omega)`. The duality check and the
//! linearization use this sign.

pub mod configs;
mod newton;

pub use newton::{newton_trace, project_to_sl, CorrectorReport, TraceOptions, TraceStep};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cohomology::{betti, relative_betti};
use crate::complex::{Cochain, SimplicialComplex};
use crate::cy::{self, CYSpace, FramePlane, LagrangianAffine};
use crate::error::{Error, Result};
use crate::geometry::{dot, factorial, norm, orthonormalize, project, simplex_volume, sub, Embedding};
use crate::hodge::{harmonic_fields_dirichlet, HodgeConfig, SpectralGap};
use crate::metric::{DualScheme, MetricComplex};

/// Per-vertex frame: oriented orthonormal tangent basis (boundary tangent
/// first at constrained boundary vertices), the rotation `a` and the fiber
/// `E_v = (a + J) T_v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexFrame {
    pub tangent: Vec<Vec<f64>>,
    /// Number of leading tangent vectors spanning the boundary tangent.
    pub boundary_dim: usize,
    pub a: f64,
    pub fiber: Vec<Vec<f64>>,
    /// Boundary component carrying a Lagrangian constraint.
    pub component: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Immersion {
    complex: SimplicialComplex,
    space: CYSpace,
    embedding: Embedding,
    lambdas: Vec<LagrangianAffine>,
    free_a: f64,
    frames: Vec<VertexFrame>,
    vertex_tops: Vec<Vec<usize>>,
}

/// Distance tolerance for boundary vertices on their Lagrangian.
pub const ON_LAMBDA_TOL: f64 = 1e-10;

/// Per-vertex vectors in `R^{2n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationField {
    pub vectors: Vec<Vec<f64>>,
}

impl DeformationField {
    pub fn zeros(num_vertices: usize, real_dim: usize) -> Self {
        Self {
            vectors: vec![vec![0.0; real_dim]; num_vertices],
        }
    }

    /// Largest normal component to `Lambda_i` over boundary vertices of `C_i`.
    pub fn admissibility_residual(&self, imm: &Immersion) -> f64 {
        let mut r: f64 = 0.0;
        for (v, f) in imm.frames.iter().enumerate() {
            if let Some(c) = f.component {
                r = r.max(norm(&imm.lambdas[c].normal_part(&self.vectors[v])));
            }
        }
        r
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SLResidual {
    pub omega_part: Cochain,
    pub im_omega_part: Cochain,
    pub omega_norm: f64,
    pub im_omega_norm: f64,
}

impl SLResidual {
    /// Largest absolute entry over both parts.
    pub fn max(&self) -> f64 {
        self.omega_norm.max(self.im_omega_norm)
    }

    /// Both parts stacked into one vector.
    pub fn stacked(&self) -> DVector<f64> {
        let a = &self.omega_part.values;
        let b = &self.im_omega_part.values;
        DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
    }
}

pub(crate) fn qualities_in(cx: &SimplicialComplex, emb: &Embedding) -> Vec<f64> {
    let n = cx.dim();
    (0..cx.count(n))
        .map(|i| {
            let pts = emb.local_points(cx.simplex(n, i));
            let mut longest: f64 = 0.0;
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    longest = longest.max(norm(&sub(&pts[a], &pts[b])));
                }
            }
            simplex_volume(&pts) / longest.powi(n as i32)
        })
        .collect()
}

fn amax(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.amax()
    }
}

/// Top `k` eigenvectors of a symmetric matrix, by decreasing eigenvalue.
fn top_eigenvectors(m: &DMatrix<f64>, k: usize) -> Vec<Vec<f64>> {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    order[..k].iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect()
}

fn projector(basis: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(dim, dim);
    for b in basis {
        let v = DVector::from_column_slice(b);
        p += &v * v.transpose();
    }
    p
}

impl Immersion {
    /// Immersion with a Lagrangian constraint per boundary component
    /// (`lambdas[i]` for the `i`-th component in the complex's ordering).
    pub fn new(
        complex: SimplicialComplex,
        space: CYSpace,
        positions: Vec<Vec<f64>>,
        lambdas: Vec<LagrangianAffine>,
    ) -> Result<Self> {
        if lambdas.len() != complex.num_boundary_components() {
            return Err(Error::InvalidImmersion(format!(
                "{} Lagrangians for {} boundary components",
                lambdas.len(),
                complex.num_boundary_components()
            )));
        }
        Self::assemble(complex, space, positions, lambdas, 0.0)
    }

    /// Immersion without boundary constraints. Frames use the constant
    /// rotation `a` everywhere. Such immersions carry a pullback metric and
    /// all pointwise forms, but cannot be traced when `L` has boundary.
    pub fn unconstrained(complex: SimplicialComplex, space: CYSpace, positions: Vec<Vec<f64>>, a: f64) -> Result<Self> {
        Self::assemble(complex, space, positions, Vec::new(), a)
    }

    fn assemble(
        complex: SimplicialComplex,
        space: CYSpace,
        positions: Vec<Vec<f64>>,
        lambdas: Vec<LagrangianAffine>,
        free_a: f64,
    ) -> Result<Self> {
        let n = complex.dim();
        if space.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "L has dimension {n} but the ambient space has complex dimension {}",
                space.n()
            )));
        }
        if positions.len() != complex.num_vertices() || positions.iter().any(|p| p.len() != 2 * n) {
            return Err(Error::InvalidImmersion(format!(
                "need {} positions in R^{}",
                complex.num_vertices(),
                2 * n
            )));
        }
        if positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidImmersion("non-finite position".into()));
        }
        for l in &lambdas {
            if l.dim() != n || l.point.len() != 2 * n {
                return Err(Error::DimensionMismatch("Lagrangian dimension differs from L".into()));
            }
        }
        let embedding = Embedding::with_periods(positions, space.periods().to_vec());
        let mut vertex_tops = vec![Vec::new(); complex.num_vertices()];
        for (i, t) in complex.simplices(n).iter().enumerate() {
            for &v in t {
                vertex_tops[v].push(i);
            }
        }
        let mut imm = Self {
            complex,
            space,
            embedding,
            lambdas,
            free_a,
            frames: Vec::new(),
            vertex_tops,
        };
        imm.check_simplices()?;
        if !imm.lambdas.is_empty() {
            for (c, l) in imm.lambdas.iter().enumerate() {
                for v in imm.complex.component_vertices(c) {
                    let d = l.distance(&imm.embedding.positions[v], imm.space.periods());
                    if d > ON_LAMBDA_TOL {
                        return Err(Error::InvalidImmersion(format!(
                            "boundary vertex {v} is {d:e} away from its Lagrangian {c}"
                        )));
                    }
                }
            }
        }
        imm.frames = imm.compute_frames()?;
        Ok(imm)
    }

    /// Same complex, space and constraints at new positions.
    pub fn with_positions(&self, positions: Vec<Vec<f64>>) -> Result<Self> {
        Self::assemble(
            self.complex.clone(),
            self.space.clone(),
            positions,
            self.lambdas.clone(),
            self.free_a,
        )
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn space(&self) -> &CYSpace {
        &self.space
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.embedding.positions
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn lambdas(&self) -> &[LagrangianAffine] {
        &self.lambdas
    }

    pub fn is_constrained(&self) -> bool {
        !self.lambdas.is_empty()
    }

    pub fn frames(&self) -> &[VertexFrame] {
        &self.frames
    }

    pub fn n(&self) -> usize {
        self.complex.dim()
    }

    pub fn delta(&self, a: usize, b: usize) -> Vec<f64> {
        self.embedding.delta(a, b)
    }

    /// Edge vectors from the first vertex of the positively oriented top simplex `i`.
    pub fn top_edges(&self, i: usize) -> Vec<Vec<f64>> {
        top_edges_in(&self.complex, &self.embedding, i)
    }

    fn check_simplices(&self) -> Result<()> {
        let n = self.n();
        let vols: Vec<f64> = (0..self.complex.count(n))
            .map(|i| simplex_volume(&self.embedding.local_points(self.complex.simplex(n, i))))
            .collect();
        let scale = vols.iter().cloned().fold(0.0, f64::max);
        for (i, &v) in vols.iter().enumerate() {
            if !(v > 1e-13 * scale) || scale == 0.0 {
                return Err(Error::SimplexDegenerated(i));
            }
        }
        Ok(())
    }

    /// `volume / longest_edge^n` per top simplex.
    pub fn qualities(&self) -> Vec<f64> {
        qualities_in(&self.complex, &self.embedding)
    }

    pub fn min_quality(&self) -> f64 {
        self.qualities().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Oriented orthonormal basis of a top simplex's plane.
    fn simplex_frame(&self, i: usize) -> Vec<Vec<f64>> {
        orthonormalize(&self.top_edges(i), 1e-12)
    }

    fn compute_frames(&self) -> Result<Vec<VertexFrame>> {
        let n = self.n();
        let m = 2 * n;
        let nv = self.complex.num_vertices();
        let mut frames = Vec::with_capacity(nv);
        // boundary (n-1)-simplices incident to each vertex
        let mut vertex_bfaces = vec![Vec::new(); nv];
        if n >= 1 {
            for (i, s) in self.complex.simplices(n - 1).iter().enumerate() {
                if self.complex.is_boundary(n - 1, i) {
                    for &v in s {
                        vertex_bfaces[v].push(i);
                    }
                }
            }
        }
        for v in 0..nv {
            let tops = &self.vertex_tops[v];
            if tops.is_empty() {
                return Err(Error::InvalidImmersion(format!("vertex {v} belongs to no top simplex")));
            }
            let mut p = DMatrix::zeros(m, m);
            let mut wsum = 0.0;
            for &t in tops {
                let w = simplex_volume(&self.embedding.local_points(self.complex.simplex(n, t)));
                p += projector(&self.simplex_frame(t), m) * w;
                wsum += w;
            }
            p /= wsum;
            let component = if self.lambdas.is_empty() { None } else { self.complex.boundary_component(0, v) };
            let mut tangent;
            let mut boundary_dim = 0;
            if component.is_some() {
                let mut bt = Vec::new();
                if n >= 2 {
                    let mut pb = DMatrix::zeros(m, m);
                    for &f in &vertex_bfaces[v] {
                        let s = self.complex.simplex(n - 1, f);
                        let edges: Vec<Vec<f64>> = s[1..].iter().map(|&u| self.delta(s[0], u)).collect();
                        let w = simplex_volume(&self.embedding.local_points(s));
                        pb += projector(&orthonormalize(&edges, 1e-12), m) * w;
                    }
                    bt = top_eigenvectors(&pb, n - 1);
                }
                let candidates = top_eigenvectors(&p, n);
                let mut best = Vec::new();
                let mut best_norm = 0.0;
                for c in &candidates {
                    let r = sub(c, &project(c, &bt));
                    let nr = norm(&r);
                    if nr > best_norm {
                        best_norm = nr;
                        best = r.iter().map(|x| x / nr).collect();
                    }
                }
                boundary_dim = bt.len();
                tangent = bt;
                tangent.push(best);
            } else {
                tangent = top_eigenvectors(&p, n);
            }
            // orientation from the first incident simplex
            let edges = self.top_edges(tops[0]);
            let det = DMatrix::from_fn(n, n, |i, j| dot(&tangent[i], &edges[j])).determinant();
            if det < 0.0 {
                for x in tangent[n - 1].iter_mut() {
                    *x = -*x;
                }
            }
            frames.push(VertexFrame {
                tangent,
                boundary_dim,
                a: self.free_a,
                fiber: Vec::new(),
                component,
            });
        }

        if !self.lambdas.is_empty() {
            for v in 0..nv {
                if let Some(c) = frames[v].component {
                    let f = &frames[v];
                    let base = self.embedding.positions[v].clone();
                    let tangent = FramePlane::new(base.clone(), f.tangent.clone())?;
                    let boundary = FramePlane::new(base, f.tangent[..f.boundary_dim].to_vec())?;
                    let r = cy::boundary_rotation_a(&tangent, &boundary, &self.lambdas[c])?;
                    frames[v].a = r.a;
                }
            }
            let a = self.harmonic_extension(&frames)?;
            for (f, av) in frames.iter_mut().zip(a) {
                f.a = av;
            }
        }
        for f in &mut frames {
            f.fiber = f.tangent.iter().map(|t| cy::rotate(f.a, t)).collect();
        }
        Ok(frames)
    }

    /// Discrete harmonic extension of the boundary values of `a`.
    fn harmonic_extension(&self, frames: &[VertexFrame]) -> Result<Vec<f64>> {
        let m = self.pullback_metric_unweighted()?;
        let cx = &self.complex;
        let interior = cx.interior(0);
        let mut a: Vec<f64> = frames.iter().map(|f| f.a).collect();
        if interior.is_empty() {
            return Ok(a);
        }
        let s1 = m.star_diagonal(1)?;
        let d0 = cx.coboundary_dense(0);
        let sd = DMatrix::from_fn(d0.nrows(), d0.ncols(), |i, j| d0[(i, j)] * s1[i]);
        let lap = d0.transpose() * sd;
        let boundary: Vec<usize> = (0..cx.count(0)).filter(|&v| cx.is_boundary(0, v)).collect();
        let aii = lap.select_rows(&interior).select_columns(&interior);
        let aib = lap.select_rows(&interior).select_columns(&boundary);
        let ab = DVector::from_iterator(boundary.len(), boundary.iter().map(|&v| a[v]));
        let rhs = -(aib * ab);
        let sol = aii
            .cholesky()
            .ok_or_else(|| Error::SolverFailure("harmonic extension of a".into()))?
            .solve(&rhs);
        for (j, &v) in interior.iter().enumerate() {
            a[v] = sol[j];
        }
        Ok(a)
    }

    fn pullback_metric_unweighted(&self) -> Result<MetricComplex> {
        MetricComplex::new(self.complex.clone(), self.embedding.clone(), DualScheme::Barycentric, None)
    }

    /// Metric complex of the induced metric, weighted by the ambient `rho`
    /// sampled at the vertices in almost Calabi-Yau mode.
    pub fn pullback_metric(&self, scheme: DualScheme) -> Result<MetricComplex> {
        let rho = self
            .space
            .rho()
            .map(|r| self.embedding.positions.iter().map(|p| r.eval(p)).collect());
        MetricComplex::new(self.complex.clone(), self.embedding.clone(), scheme, rho)
    }

    /// Sign making `Re Omega` positive on the oriented top simplices.
    pub fn calibrated_sign(&self) -> f64 {
        let s: f64 = (0..self.complex.count(self.n()))
            .map(|i| cy::omega_top(&self.top_edges(i)).re)
            .sum();
        if s < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Whitney 1-form of `theta` at vertex `v`, averaged over incident top
    /// simplices by volume, as an ambient vector.
    pub fn whitney_covector(&self, theta: &Cochain, v: usize) -> Vec<f64> {
        let n = self.n();
        let mut acc = vec![0.0; 2 * n];
        let mut wsum = 0.0;
        for &t in &self.vertex_tops[v] {
            let s = self.complex.simplex(n, t);
            let others: Vec<usize> = s.iter().copied().filter(|&u| u != v).collect();
            let edges: Vec<Vec<f64>> = others.iter().map(|&u| self.delta(v, u)).collect();
            let vals = DVector::from_iterator(
                n,
                others.iter().map(|&u| {
                    let e = self.complex.find(&[v, u]).expect("edge of a simplex");
                    let dir = if v < u { 1.0 } else { -1.0 };
                    dir * theta.values[e]
                }),
            );
            let gram = DMatrix::from_fn(n, n, |i, j| dot(&edges[i], &edges[j]));
            let coef = gram.lu().solve(&vals).unwrap_or_else(|| DVector::zeros(n));
            let w = simplex_volume(&self.embedding.local_points(s));
            for (i, e) in edges.iter().enumerate() {
                crate::geometry::axpy(&mut acc, w * coef[i], e);
            }
            wsum += w;
        }
        acc.iter().map(|x| x / wsum).collect()
    }

    /// Components of the averaged covector on the vertex frame.
    pub fn covector_components(&self, theta: &Cochain, v: usize) -> Vec<f64> {
        let c = self.whitney_covector(theta, v);
        self.frames[v].tangent.iter().map(|t| dot(&c, t)).collect()
    }

    /// `Phi^{-1}` of the averaged covector at each vertex. At constrained
    /// boundary vertices the boundary-tangent components are removed first
    /// and the result is projected onto `T Lambda`, so boundary vertices move
    /// inside their Lagrangian.
    pub fn deformation_field(&self, theta: &Cochain) -> Result<DeformationField> {
        theta.validate(&self.complex)?;
        if theta.degree != 1 {
            return Err(Error::CochainLength {
                degree: 1,
                expected: self.complex.count(1),
                got: theta.len(),
            });
        }
        let mut vectors = Vec::with_capacity(self.complex.num_vertices());
        for v in 0..self.complex.num_vertices() {
            let f = &self.frames[v];
            let mut comps = self.covector_components(theta, v);
            if f.component.is_some() {
                for c in comps.iter_mut().take(f.boundary_dim) {
                    *c = 0.0;
                }
            }
            let mut vec = cy::phi_inverse(&f.fiber, &f.tangent, &comps)?;
            if let Some(c) = f.component {
                vec = project(&vec, &self.lambdas[c].basis);
            }
            vectors.push(vec);
        }
        Ok(DeformationField { vectors })
    }

    /// Moves every vertex by the corresponding vector.
    pub fn displaced(&self, field: &DeformationField) -> Result<Self> {
        let pos = self
            .embedding
            .positions
            .iter()
            .zip(&field.vectors)
            .map(|(p, v)| p.iter().zip(v).map(|(a, b)| a + b).collect())
            .collect();
        let out = self.with_positions(pos)?;
        // orientation of every top simplex must survive
        let n = self.n();
        for i in 0..self.complex.count(n) {
            let old = self.simplex_frame(i);
            let new_edges = out.top_edges(i);
            let det = DMatrix::from_fn(n, n, |r, c| dot(&old[r], &new_edges[c])).determinant();
            if !(det > 0.0) {
                return Err(Error::SimplexDegenerated(i));
            }
        }
        Ok(out)
    }
}

fn top_edges_in(cx: &SimplicialComplex, emb: &Embedding, i: usize) -> Vec<Vec<f64>> {
    let t = cx.oriented_top(i);
    t[1..].iter().map(|&v| emb.delta(t[0], v)).collect()
}

pub(crate) fn omega_values(cx: &SimplicialComplex, emb: &Embedding) -> Vec<f64> {
    if cx.dim() < 2 {
        return Vec::new();
    }
    (0..cx.count(2))
        .map(|i| {
            let s = cx.simplex(2, i);
            let sign = cx.orientation(2, i) as f64;
            sign * 0.5 * cy::omega(&emb.delta(s[0], s[1]), &emb.delta(s[0], s[2]))
        })
        .collect()
}

pub(crate) fn im_omega_values(cx: &SimplicialComplex, emb: &Embedding) -> Vec<f64> {
    let n = cx.dim();
    let nf = factorial(n);
    (0..cx.count(n))
        .map(|i| cy::omega_top(&top_edges_in(cx, emb, i)).im / nf)
        .collect()
}

/// Per 2-simplex `[p, q, r]`: `omega(q - p, r - p) / 2`.
pub fn pullback_omega(imm: &Immersion) -> Cochain {
    Cochain::from_vec(2, omega_values(imm.complex(), imm.embedding()))
}

/// Per top simplex: `Im Omega(edge vectors) / n!`.
pub fn pullback_im_omega(imm: &Immersion) -> Cochain {
    Cochain::from_vec(imm.n(), im_omega_values(imm.complex(), imm.embedding()))
}

pub fn sl_residual(imm: &Immersion) -> SLResidual {
    let omega_part = pullback_omega(imm);
    let im_omega_part = pullback_im_omega(imm);
    SLResidual {
        omega_norm: amax(&omega_part.values),
        im_omega_norm: amax(&im_omega_part.values),
        omega_part,
        im_omega_part,
    }
}

fn check_field(imm: &Immersion, v: &DeformationField) -> Result<()> {
    if v.vectors.len() != imm.complex().num_vertices() || v.vectors.iter().any(|x| x.len() != 2 * imm.n()) {
        return Err(Error::DimensionMismatch("deformation field does not match the immersion".into()));
    }
    Ok(())
}

/// Trapezoid value `(omega(V_p, q - p) + omega(V_q, q - p)) / 2` per edge.
pub fn tangent_one_form(imm: &Immersion, v: &DeformationField) -> Result<Cochain> {
    check_field(imm, v)?;
    let cx = imm.complex();
    let vals = cx
        .simplices(1)
        .iter()
        .map(|e| {
            let d = imm.delta(e[0], e[1]);
            0.5 * (cy::omega(&v.vectors[e[0]], &d) + cy::omega(&v.vectors[e[1]], &d))
        })
        .collect();
    Ok(Cochain::from_vec(1, vals))
}

/// Vertex average of `Im Omega(V, e_1, ..., e_{n-1}) / (n-1)!` per
/// `(n-1)`-simplex with edges from its first vertex.
pub fn dual_form(imm: &Immersion, v: &DeformationField) -> Result<Cochain> {
    check_field(imm, v)?;
    let cx = imm.complex();
    let n = cx.dim();
    let nf = factorial(n - 1);
    let vals = (0..cx.count(n - 1))
        .map(|i| {
            let s = cx.simplex(n - 1, i);
            let sign = cx.orientation(n - 1, i) as f64;
            let edges: Vec<Vec<f64>> = s[1..].iter().map(|&u| imm.delta(s[0], u)).collect();
            let mean = s
                .iter()
                .map(|&u| cy::contract_omega_top(&v.vectors[u], &edges).im)
                .sum::<f64>()
                / s.len() as f64;
            sign * mean / nf
        })
        .collect();
    Ok(Cochain::from_vec(n - 1, vals))
}

/// Pointwise star of the averaged covector of `theta`, integrated over
/// `(n-1)`-simplices by the vertex rule, with `L` oriented by `Re Omega`.
pub fn star_one_form(imm: &Immersion, theta: &Cochain) -> Result<Cochain> {
    theta.validate(imm.complex())?;
    let cx = imm.complex();
    let n = cx.dim();
    let nf = factorial(n - 1);
    let orient = imm.calibrated_sign();
    let covectors: Vec<Vec<f64>> = (0..cx.num_vertices()).map(|v| imm.whitney_covector(theta, v)).collect();
    let vals = (0..cx.count(n - 1))
        .map(|i| {
            let s = cx.simplex(n - 1, i);
            let sign = cx.orientation(n - 1, i) as f64;
            let edges: Vec<Vec<f64>> = s[1..].iter().map(|&u| imm.delta(s[0], u)).collect();
            let mean = s
                .iter()
                .map(|&u| {
                    let t = &imm.frames()[u].tangent;
                    let mut cols = vec![covectors[u].clone()];
                    cols.extend(edges.iter().cloned());
                    let det = DMatrix::from_fn(n, n, |r, c| dot(&t[r], &cols[c])).determinant();
                    let frame_sign = cy::omega_top(t).re.signum();
                    // vertex frames follow the complex orientation; re-orient by Re Omega
                    det * if frame_sign == 0.0 { orient } else { frame_sign }
                })
                .sum::<f64>()
                / s.len() as f64;
            sign * mean / nf
        })
        .collect();
    Ok(Cochain::from_vec(n - 1, vals))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// `|phi + *theta| / |theta|` (plain Euclidean norms of the cochains).
    pub residual: f64,
    pub theta: Cochain,
    pub phi: Cochain,
    pub star_theta: Cochain,
}

/// Largest SL residual entry of a simplex divided by its volume: the sine of
/// the phase defect for the `Im Omega` part, the Kahler angle for the
/// `omega` part. Sampled smooth SL immersions have defect `O(h)`.
pub fn sl_defect(imm: &Immersion) -> f64 {
    let cx = imm.complex();
    let emb = imm.embedding();
    let relative = |k: usize, vals: Vec<f64>| {
        vals.iter()
            .enumerate()
            .map(|(i, v)| v.abs() / simplex_volume(&emb.local_points(cx.simplex(k, i))))
            .fold(0.0, f64::max)
    };
    let im = relative(imm.n(), im_omega_values(cx, emb));
    if imm.n() >= 2 {
        im.max(relative(2, omega_values(cx, emb)))
    } else {
        im
    }
}

fn require_sl(imm: &Immersion, tol: f64) -> Result<()> {
    let r = sl_defect(imm);
    if r > tol {
        return Err(Error::NotSpecialLagrangian(r));
    }
    Ok(())
}

/// Compares `phi = f*(i_V Im Omega)` with `-*theta`, `theta = f*(i_V omega)`.
/// `tol` bounds the [`sl_defect`] of `imm`.
pub fn hodge_duality_check(imm: &Immersion, v: &DeformationField, tol: f64) -> Result<DualityReport> {
    require_sl(imm, tol)?;
    let theta = tangent_one_form(imm, v)?;
    let phi = dual_form(imm, v)?;
    let star_theta = star_one_form(imm, &theta)?;
    let tn = theta.values.norm();
    let diff = (&phi.values + &star_theta.values).norm();
    let residual = if tn == 0.0 { diff } else { diff / tn };
    Ok(DualityReport {
        residual,
        theta,
        phi,
        star_theta,
    })
}

/// `f_theta`: every vertex moved by the deformation field of `theta`.
pub fn deform(imm: &Immersion, theta: &Cochain) -> Result<Immersion> {
    let field = imm.deformation_field(theta)?;
    imm.displaced(&field)
}

/// `F(theta) = (f_theta* omega, f_theta* Im Omega)`.
pub fn sl_operator(imm: &Immersion, theta: &Cochain) -> Result<SLResidual> {
    Ok(sl_residual(&deform(imm, theta)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationPoint {
    pub t: f64,
    /// `|F(t theta)|` (Euclidean norm of the stacked parts).
    pub f_norm: f64,
    /// `|F(t theta) - t L| / |t theta|` with `L` the discrete derivative.
    pub residual: f64,
    /// Same with `L` replaced by `(d theta, -d * theta)`.
    pub residual_continuum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub points: Vec<LinearizationPoint>,
    /// Norms of `d theta_hat` and `d phi_hat`, the discrete derivative.
    pub d_theta: f64,
    pub d_phi: f64,
    /// `|(d theta_hat, d phi_hat) - (d theta, -d * theta)| / |theta|`.
    pub discretization_gap: f64,
    /// Largest `|sum of omega-part|` over connected pieces (relative fundamental cycles).
    pub omega_exactness: f64,
    /// Least-squares slopes of `log residual` and `log |F|` against `log t`.
    pub residual_slope: f64,
    pub f_slope: f64,
}

pub fn loglog_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Finite-difference study of `F` along `t theta`.
///
/// The discrete derivative of `F` at the origin is `(d theta_hat, d phi_hat)`
/// with `theta_hat` and `phi_hat` the tangent and dual forms of the
/// deformation field of `theta`; the trapezoid rules make this exact, so the
/// residual against it is `O(t)`. The gap to `(d theta, -d * theta)` is the
/// discretization error of the averaging map and is reported separately.
pub fn linearization_check(
    imm: &Immersion,
    theta: &Cochain,
    ts: &[f64],
    tol: f64,
) -> Result<LinearizationReport> {
    require_sl(imm, tol)?;
    let cx = imm.complex();
    let field = imm.deformation_field(theta)?;
    let theta_hat = tangent_one_form(imm, &field)?;
    let phi_hat = dual_form(imm, &field)?;
    let d_theta_hat = cx.d(&theta_hat)?;
    let d_phi_hat = cx.d(&phi_hat)?;
    let lin = stack(&d_theta_hat.values, &d_phi_hat.values);
    let star = star_one_form(imm, theta)?;
    let d_theta = cx.d(theta)?;
    let d_star = cx.d(&star)?;
    let lin_cont = stack(&d_theta.values, &(-d_star.values));
    let theta_norm = theta.values.norm().max(f64::MIN_POSITIVE);
    let base = sl_residual(imm).stacked();

    let mut points = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut scaled = theta.clone();
        scaled.values *= t;
        let f = sl_operator(imm, &scaled)?.stacked();
        let r = (&f - &base - &lin * t).norm() / (t * theta_norm);
        let rc = (&f - &base - &lin_cont * t).norm() / (t * theta_norm);
        points.push(LinearizationPoint {
            t,
            f_norm: (&f - &base).norm(),
            residual: r,
            residual_continuum: rc,
        });
    }
    // omega part pairs to zero with the relative fundamental class
    let mut omega_exactness: f64 = 0.0;
    if cx.dim() == 2 {
        if let Some(&t) = ts.first() {
            let mut scaled = theta.clone();
            scaled.values *= t;
            let f = sl_operator(imm, &scaled)?;
            omega_exactness = f.omega_part.values.sum().abs();
        }
    }
    let tvals: Vec<f64> = points.iter().map(|p| p.t).collect();
    Ok(LinearizationReport {
        residual_slope: loglog_slope(&tvals, &points.iter().map(|p| p.residual).collect::<Vec<_>>()),
        f_slope: loglog_slope(&tvals, &points.iter().map(|p| p.f_norm).collect::<Vec<_>>()),
        d_theta: d_theta_hat.values.norm(),
        d_phi: d_phi_hat.values.norm(),
        discretization_gap: (&lin - &lin_cont).norm() / theta_norm,
        omega_exactness,
        points,
    })
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuliDimension {
    pub harmonic: usize,
    pub relative_betti: usize,
    pub betti_n_minus_1: usize,
    pub gap: SpectralGap,
}

/// Dimension of the harmonic Dirichlet 1-fields of the pullback metric,
/// cross-checked against `b_1(L, dL)` and `b_{n-1}(L)`.
pub fn moduli_dimension(imm: &Immersion, config: &HodgeConfig) -> Result<ModuliDimension> {
    let m = imm.pullback_metric(DualScheme::Barycentric)?;
    let basis = harmonic_fields_dirichlet(&m, 1, config)?;
    let rel = relative_betti(imm.complex(), 1)?;
    let abs = betti(imm.complex(), imm.n() - 1)?;
    if basis.dim() != rel || rel != abs {
        return Err(Error::DimensionMismatch(format!(
            "harmonic {} vs relative Betti {rel} vs Betti {abs}",
            basis.dim()
        )));
    }
    Ok(ModuliDimension {
        harmonic: basis.dim(),
        relative_betti: rel,
        betti_n_minus_1: abs,
        gap: basis.gap,
    })
}

/// Largest calibration residual over the top simplices.
pub fn calibration_residual(imm: &Immersion) -> Result<f64> {
    let n = imm.n();
    let mut worst: f64 = 0.0;
    for i in 0..imm.complex().count(n) {
        let plane = FramePlane::new(imm.positions()[imm.complex().simplex(n, i)[0]].clone(), imm.top_edges(i))?;
        let c = cy::calibration_check(&plane, imm.space().rho())?;
        worst = worst.max(c.residual);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
