//! Diagonal Hodge stars on a simplicial complex with an embedding.
//!
//! Dual cells are built from flags of faces inside each top simplex, so the
//! barycentric scheme works in any dimension. The circumcentric scheme is
//! accepted only on well-centered meshes.
//!
//! Orientation: the star uses the orientation of the top simplices fixed by
//! [`SimplicialComplex::build`]; entries are unsigned ratios of volumes, so
//! the orientation only enters through the coboundary signs.
//!
//! With a conformal weight `rho`, the metric is `rho^(-2/n) g` and the star on
//! k-forms picks up the factor `rho^((2k - n)/n)`, with `rho` averaged over
//! the vertices of the top simplices around each primal simplex.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::{Cochain, SimplicialComplex};
use crate::error::{Error, Result};
use crate::geometry::{centroid, circumcenter, simplex_volume, Embedding};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualScheme {
    #[default]
    Barycentric,
    Circumcentric,
}

impl std::str::FromStr for DualScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "barycentric" => Ok(Self::Barycentric),
            "circumcentric" => Ok(Self::Circumcentric),
            other => Err(Error::Parse {
                line: None,
                message: format!("unknown dual scheme `{other}`"),
            }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MetricComplex {
    complex: SimplicialComplex,
    embedding: Embedding,
    scheme: DualScheme,
    rho: Option<Vec<f64>>,
    primal: Vec<Vec<f64>>,
    dual: Vec<Vec<f64>>,
    star: Vec<DVector<f64>>,
}

/// Relative volume below which a simplex counts as degenerate.
const DEGENERATE: f64 = 1e-13;

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, size, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, size, 0, &mut cur, &mut out);
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

impl MetricComplex {
    pub fn new(
        complex: SimplicialComplex,
        embedding: Embedding,
        scheme: DualScheme,
        rho: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = complex.dim();
        if embedding.positions.len() != complex.num_vertices() {
            return Err(Error::InvalidMesh(format!(
                "{} positions for {} vertices",
                embedding.positions.len(),
                complex.num_vertices()
            )));
        }
        let m = embedding.ambient_dim();
        if m < n || embedding.positions.iter().any(|p| p.len() != m) {
            return Err(Error::InvalidMesh(format!(
                "positions must all have dimension {m} >= {n}"
            )));
        }
        if let Some(r) = &rho {
            if r.len() != complex.num_vertices() || r.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidMesh(
                    "rho must be positive and finite at every vertex".into(),
                ));
            }
        }

        // primal volumes
        let mut primal = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut vols = Vec::with_capacity(complex.count(k));
            for s in complex.simplices(k) {
                vols.push(simplex_volume(&embedding.local_points(s)));
            }
            primal.push(vols);
        }
        let scale = primal[n].iter().cloned().fold(0.0, f64::max);
        for (i, &v) in primal[n].iter().enumerate() {
            if !(v > DEGENERATE * scale) {
                return Err(Error::DegenerateSimplex {
                    simplex: complex.simplex(n, i).to_vec(),
                    volume: v,
                });
            }
        }
        for k in 1..n {
            let lscale = primal[k].iter().cloned().fold(0.0, f64::max);
            for (i, &v) in primal[k].iter().enumerate() {
                if !(v > DEGENERATE * lscale) {
                    return Err(Error::DegenerateSimplex {
                        simplex: complex.simplex(k, i).to_vec(),
                        volume: v,
                    });
                }
            }
        }

        // dual volumes from flags inside each top simplex
        let mut dual: Vec<Vec<f64>> = (0..=n).map(|k| vec![0.0; complex.count(k)]).collect();
        for t in complex.simplices(n) {
            let pts = embedding.local_points(t);
            let mut centers: std::collections::HashMap<Vec<usize>, Vec<f64>> = Default::default();
            for size in 1..=n + 1 {
                for sub in subsets(n + 1, size) {
                    let sp: Vec<Vec<f64>> = sub.iter().map(|&i| pts[i].clone()).collect();
                    let c = match scheme {
                        DualScheme::Barycentric => centroid(&sp),
                        DualScheme::Circumcentric => {
                            let (c, bary) = circumcenter(&sp);
                            if size > 1 && bary.iter().any(|&b| b <= 1e-12) {
                                return Err(Error::NotWellCentered {
                                    simplex: sub.iter().map(|&i| t[i]).collect(),
                                });
                            }
                            c
                        }
                    };
                    centers.insert(sub, c);
                }
            }
            for k in 0..=n {
                for face in subsets(n + 1, k + 1) {
                    let global: Vec<usize> = face.iter().map(|&i| t[i]).collect();
                    let idx = complex.find(&global).expect("face of a top simplex");
                    if k == n {
                        dual[k][idx] = 1.0;
                        continue;
                    }
                    let rest: Vec<usize> = (0..=n).filter(|i| !face.contains(i)).collect();
                    let mut vol = 0.0;
                    for order in permutations(&rest) {
                        let mut cur = face.clone();
                        let mut chain = vec![centers[&cur].clone()];
                        for &v in &order {
                            cur.push(v);
                            cur.sort_unstable();
                            chain.push(centers[&cur].clone());
                        }
                        vol += simplex_volume(&chain);
                    }
                    dual[k][idx] += vol;
                }
            }
        }

        // conformal weights sampled over the closed star of each simplex
        let weights: Vec<Vec<f64>> = match &rho {
            None => (0..=n).map(|k| vec![1.0; complex.count(k)]).collect(),
            Some(r) => {
                let mut stars: Vec<Vec<BTreeSet<usize>>> =
                    (0..=n).map(|k| vec![BTreeSet::new(); complex.count(k)]).collect();
                for t in complex.simplices(n) {
                    for k in 0..=n {
                        for face in subsets(n + 1, k + 1) {
                            let global: Vec<usize> = face.iter().map(|&i| t[i]).collect();
                            let idx = complex.find(&global).expect("face of a top simplex");
                            stars[k][idx].extend(t.iter().copied());
                        }
                    }
                }
                stars
                    .iter()
                    .enumerate()
                    .map(|(k, per)| {
                        let expo = (2.0 * k as f64 - n as f64) / n as f64;
                        per.iter()
                            .map(|vs| {
                                let avg = vs.iter().map(|&v| r[v]).sum::<f64>() / vs.len() as f64;
                                avg.powf(expo)
                            })
                            .collect()
                    })
                    .collect()
            }
        };

        let star = (0..=n)
            .map(|k| {
                DVector::from_iterator(
                    complex.count(k),
                    (0..complex.count(k)).map(|i| weights[k][i] * dual[k][i] / primal[k][i]),
                )
            })
            .collect();

        Ok(Self {
            complex,
            embedding,
            scheme,
            rho,
            primal,
            dual,
            star,
        })
    }

    /// Barycentric duals, no weight.
    pub fn barycentric(complex: SimplicialComplex, embedding: Embedding) -> Result<Self> {
        Self::new(complex, embedding, DualScheme::Barycentric, None)
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn scheme(&self) -> DualScheme {
        self.scheme
    }

    pub fn rho(&self) -> Option<&[f64]> {
        self.rho.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.complex.dim()
    }

    pub fn primal_volumes(&self, k: usize) -> &[f64] {
        &self.primal[k]
    }

    pub fn dual_volumes(&self, k: usize) -> &[f64] {
        &self.dual[k]
    }

    fn check(&self, k: usize, lo: usize) -> Result<()> {
        if k < lo || k > self.dim() {
            return Err(Error::DegreeOutOfRange {
                degree: k,
                max: self.dim(),
            });
        }
        Ok(())
    }

    /// Diagonal of the star on `k`-cochains.
    pub fn star_diagonal(&self, k: usize) -> Result<&DVector<f64>> {
        self.check(k, 0)?;
        Ok(&self.star[k])
    }

    pub fn hodge_star(&self, k: usize) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_diagonal(self.star_diagonal(k)?))
    }

    /// `<a, b>` weighted by the star in the degree of the cochains.
    pub fn inner(&self, a: &Cochain, b: &Cochain) -> Result<f64> {
        a.validate(&self.complex)?;
        b.validate(&self.complex)?;
        let s = &self.star[a.degree];
        Ok(a.values.iter().zip(b.values.iter()).zip(s.iter()).map(|((x, y), w)| x * y * w).sum())
    }

    pub fn norm(&self, a: &Cochain) -> Result<f64> {
        Ok(self.inner(a, a)?.max(0.0).sqrt())
    }

    /// Dense coboundary `d_k`; `0 x count(n)` when `k = n`.
    pub fn d(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check(k, 0)?;
        Ok(self.complex.coboundary_dense(k))
    }

    /// `d*_k = star_{k-1}^{-1} d_{k-1}^T star_k`, mapping `k`- to `(k-1)`-cochains.
    pub fn codifferential(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check(k, 1)?;
        let mut m = self.complex.coboundary_dense(k - 1).transpose();
        let (left, right) = (&self.star[k - 1], &self.star[k]);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                m[(i, j)] *= right[j] / left[i];
            }
        }
        Ok(m)
    }

    /// `d d* + d* d` on all `k`-cochains (natural boundary behaviour).
    pub fn laplacian(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check(k, 0)?;
        let size = self.complex.count(k);
        let mut lap = DMatrix::zeros(size, size);
        if k >= 1 {
            lap += self.complex.coboundary_dense(k - 1) * self.codifferential(k)?;
        }
        if k < self.dim() {
            lap += self.codifferential(k + 1)? * self.complex.coboundary_dense(k);
        }
        Ok(lap)
    }

    /// Laplacian on Dirichlet cochains, as a matrix on the interior
    /// `k`-simplices whose indices are returned alongside.
    pub fn dirichlet_laplacian(&self, k: usize) -> Result<(DMatrix<f64>, Vec<usize>)> {
        self.check(k, 0)?;
        let n = self.dim();
        let ik = self.complex.interior(k);
        let mut lap = DMatrix::zeros(ik.len(), ik.len());
        let s = &self.star;
        if k >= 1 {
            let il = self.complex.interior(k - 1);
            let d = self.complex.coboundary_dense(k - 1).select_rows(&ik).select_columns(&il);
            // d (star_{k-1}^{-1} d^T star_k)
            let mut adj = d.transpose();
            for i in 0..adj.nrows() {
                for j in 0..adj.ncols() {
                    adj[(i, j)] *= s[k][ik[j]] / s[k - 1][il[i]];
                }
            }
            lap += &d * adj;
        }
        if k < n {
            let iu = self.complex.interior(k + 1);
            let d = self.complex.coboundary_dense(k).select_rows(&iu).select_columns(&ik);
            let mut adj = d.transpose();
            for i in 0..adj.nrows() {
                for j in 0..adj.ncols() {
                    adj[(i, j)] *= s[k + 1][iu[j]] / s[k][ik[i]];
                }
            }
            lap += adj * d;
        }
        Ok((lap, ik))
    }
}

/// MatrixMarket coordinate dump of a dense matrix (zeros skipped).
pub fn to_matrix_market(m: &DMatrix<f64>) -> String {
    let entries: Vec<(usize, usize, f64)> = (0..m.ncols())
        .flat_map(|j| (0..m.nrows()).map(move |i| (i, j)))
        .filter_map(|(i, j)| (m[(i, j)] != 0.0).then(|| (i, j, m[(i, j)])))
        .collect();
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interval(cells: usize) -> MetricComplex {
        let (k, e) = fixtures::interval(cells);
        MetricComplex::barycentric(k, e).unwrap()
    }

    #[test]
    fn uniform_interval_star() {
        let (k, mut e) = fixtures::interval(3);
        for p in &mut e.positions {
            p[0] *= 3.0;
        }
        let m = MetricComplex::barycentric(k, e).unwrap();
        let s0: Vec<f64> = m.star_diagonal(0).unwrap().iter().copied().collect();
        assert_eq!(s0, vec![0.5, 1.0, 1.0, 0.5]);
        assert!(m.star_diagonal(1).unwrap().iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn equilateral_pair_by_hand() {
        // two unit equilateral triangles sharing an edge
        let h = 3f64.sqrt() / 2.0;
        let k = SimplicialComplex::build(2, &[vec![0, 1, 2], vec![1, 3, 2]]).unwrap();
        let e = Embedding::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, h],
            vec![1.5, h],
        ]);
        let m = MetricComplex::barycentric(k, e).unwrap();
        let area = h / 2.0;
        // each vertex of a triangle owns a third of it
        let s0 = m.star_diagonal(0).unwrap();
        let v0 = m.complex().find(&[0]).unwrap();
        let v1 = m.complex().find(&[1]).unwrap();
        assert!((s0[v0] - area / 3.0).abs() < 1e-14);
        assert!((s0[v1] - 2.0 * area / 3.0).abs() < 1e-14);
        // shared edge: dual runs centroid -> midpoint -> centroid, each leg h/3
        let e12 = m.complex().find(&[1, 2]).unwrap();
        let dual = 2.0 * h / 3.0;
        assert!((m.star_diagonal(1).unwrap()[e12] - dual).abs() < 1e-14);
        let s2 = m.star_diagonal(2).unwrap();
        assert!(s2.iter().all(|&x| (x - 1.0 / area).abs() < 1e-12));
    }

    #[test]
    fn three_point_stencil() {
        let cells = 8;
        let m = interval(cells);
        let h = 1.0 / cells as f64;
        let lap = m.codifferential(1).unwrap() * m.d(0).unwrap();
        for i in 1..cells {
            assert!((lap[(i, i)] - 2.0 / (h * h)).abs() < 1e-9);
            assert!((lap[(i, i - 1)] + 1.0 / (h * h)).abs() < 1e-9);
            assert!((lap[(i, i + 1)] + 1.0 / (h * h)).abs() < 1e-9);
        }
        let c = DVector::from_element(cells + 1, 3.0);
        assert!((lap * c).amax() < 1e-9);
    }

    #[test]
    fn dirichlet_eigenvalue_near_pi_squared() {
        let m = interval(64);
        let (lap, _) = m.dirichlet_laplacian(0).unwrap();
        // similar to a symmetric matrix through the star; eigenvalues are real
        let s: Vec<f64> = m.complex().interior(0).iter().map(|&i| m.star_diagonal(0).unwrap()[i]).collect();
        let sym = DMatrix::from_fn(lap.nrows(), lap.ncols(), |i, j| lap[(i, j)] * s[i].sqrt() / s[j].sqrt());
        let eig = sym.symmetric_eigen();
        let lo = eig.eigenvalues.min();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((lo - pi2).abs() / pi2 < 0.05, "{lo}");
    }

    #[test]
    fn adjointness_on_disk() {
        let (k, e) = fixtures::disk(3, 8);
        let m = MetricComplex::barycentric(k, e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for deg in 1..=2 {
            let d = m.d(deg - 1).unwrap();
            let ds = m.codifferential(deg).unwrap();
            let proj = m.complex().dirichlet_projector(deg).unwrap();
            for _ in 0..5 {
                let a = DVector::from_fn(m.complex().count(deg - 1), |_, _| rng.gen_range(-1.0..1.0));
                let b = proj.apply(&Cochain::new(
                    deg,
                    DVector::from_fn(m.complex().count(deg), |_, _| rng.gen_range(-1.0..1.0)),
                ));
                let lhs = m.inner(&Cochain::new(deg, &d * &a), &b).unwrap();
                let rhs = m.inner(&Cochain::new(deg - 1, a.clone()), &Cochain::new(deg - 1, &ds * &b.values)).unwrap();
                assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn laplacian_self_adjoint_and_torus_constants() {
        let (k, e) = fixtures::torus(5, 4);
        let m = MetricComplex::barycentric(k, e).unwrap();
        for deg in 0..=2 {
            let lap = m.laplacian(deg).unwrap();
            let s = m.hodge_star(deg).unwrap();
            let a = &s * &lap;
            assert!((&a - a.transpose()).norm() < 1e-10 * a.norm());
        }
        let lap0 = m.laplacian(0).unwrap();
        let c = DVector::from_element(m.complex().count(0), 1.0);
        assert!((lap0 * c).amax() < 1e-10);
    }

    #[test]
    fn rho_scaling_exponent() {
        let (k, e) = fixtures::disk(2, 6);
        let base = MetricComplex::barycentric(k.clone(), e.clone()).unwrap();
        let ones = MetricComplex::new(k.clone(), e.clone(), DualScheme::Barycentric, Some(vec![1.0; k.num_vertices()])).unwrap();
        let c = 2.5;
        let scaled = MetricComplex::new(k.clone(), e, DualScheme::Barycentric, Some(vec![c; k.num_vertices()])).unwrap();
        for deg in 0..=2 {
            let s0 = base.star_diagonal(deg).unwrap();
            assert_eq!(s0, ones.star_diagonal(deg).unwrap());
            let factor = c.powf((2.0 * deg as f64 - 2.0) / 2.0);
            let s1 = scaled.star_diagonal(deg).unwrap();
            assert!((s1 - s0 * factor).amax() < 1e-12 * s0.amax() * factor);
        }
    }

    #[test]
    fn circumcentric_requires_well_centered() {
        // right triangles have circumcenters on the hypotenuse
        let (k, e) = fixtures::square_grid(2, 2);
        let err = MetricComplex::new(k, e, DualScheme::Circumcentric, None).unwrap_err();
        assert!(matches!(err, Error::NotWellCentered { .. }));
        let (k, e) = fixtures::interval(4);
        let c = MetricComplex::new(k.clone(), e.clone(), DualScheme::Circumcentric, None).unwrap();
        let b = MetricComplex::barycentric(k, e).unwrap();
        assert!((c.star_diagonal(0).unwrap() - b.star_diagonal(0).unwrap()).amax() < 1e-15);
    }

    #[test]
    fn degenerate_simplex_rejected() {
        let k = SimplicialComplex::build(2, &[vec![0, 1, 2]]).unwrap();
        let e = Embedding::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert!(matches!(
            MetricComplex::barycentric(k, e),
            Err(Error::DegenerateSimplex { .. })
        ));
    }

    #[test]
    fn matrix_market_header() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let s = to_matrix_market(&m);
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n"));
    }
}
