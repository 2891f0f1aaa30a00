//! Small dense geometry helpers shared by the metric and immersion code.

use nalgebra::{DMatrix, DVector};

/// Ambient coordinates with optional per-coordinate periods (flat tori
/// factors). Differences are taken as minimal images.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub positions: Vec<Vec<f64>>,
    pub periods: Vec<Option<f64>>,
}

impl Embedding {
    pub fn new(positions: Vec<Vec<f64>>) -> Self {
        let m = positions.first().map_or(0, Vec::len);
        Self {
            positions,
            periods: vec![None; m],
        }
    }

    pub fn with_periods(positions: Vec<Vec<f64>>, periods: Vec<Option<f64>>) -> Self {
        Self { positions, periods }
    }

    pub fn ambient_dim(&self) -> usize {
        self.periods.len()
    }

    /// Minimal-image displacement from vertex `a` to vertex `b`.
    pub fn delta(&self, a: usize, b: usize) -> Vec<f64> {
        wrap_delta(&self.positions[a], &self.positions[b], &self.periods)
    }

    /// Positions of a simplex unwrapped into one chart around its first vertex.
    pub fn local_points(&self, simplex: &[usize]) -> Vec<Vec<f64>> {
        let base = &self.positions[simplex[0]];
        simplex
            .iter()
            .map(|&v| {
                let d = self.delta(simplex[0], v);
                base.iter().zip(&d).map(|(b, x)| b + x).collect()
            })
            .collect()
    }
}

pub fn wrap_delta(a: &[f64], b: &[f64], periods: &[Option<f64>]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let d = y - x;
            match periods.get(i).copied().flatten() {
                Some(p) => d - p * (d / p).round(),
                None => d,
            }
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// k-dimensional volume of the simplex spanned by `points` (k+1 points).
pub fn simplex_volume(points: &[Vec<f64>]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&edges[i], &edges[j]));
    let det = gram.determinant().max(0.0);
    det.sqrt() / factorial(k)
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let mut c = vec![0.0; points[0].len()];
    for p in points {
        axpy(&mut c, 1.0 / points.len() as f64, p);
    }
    c
}

/// Circumcenter in the affine hull, with its barycentric coordinates.
pub fn circumcenter(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = points.len() - 1;
    if k == 0 {
        return (points[0].clone(), vec![1.0]);
    }
    let edges: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&edges[i], &edges[j]));
    let rhs = DVector::from_fn(k, |i, _| 0.5 * dot(&edges[i], &edges[i]));
    let coeff = gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(k));
    let mut c = points[0].clone();
    for (i, e) in edges.iter().enumerate() {
        axpy(&mut c, coeff[i], e);
    }
    let mut bary = vec![1.0 - coeff.sum()];
    bary.extend(coeff.iter());
    (c, bary)
}

/// Gram-Schmidt; drops vectors whose residual falls below `tol` times their norm.
pub fn orthonormalize(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = dot(&w, u);
                axpy(&mut w, -c, u);
            }
        }
        let n = norm(&w);
        if n > tol * norm(v).max(f64::MIN_POSITIVE) {
            out.push(scale(&w, 1.0 / n));
        }
    }
    out
}

/// Orthogonal projection of `v` onto the span of orthonormal `basis`.
pub fn project(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for b in basis {
        axpy(&mut out, dot(v, b), b);
    }
    out
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_area_and_circumcenter() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]];
        assert!((simplex_volume(&pts) - 2.0).abs() < 1e-14);
        let (c, b) = circumcenter(&pts);
        assert!((c[0] - 1.0).abs() < 1e-14 && (c[1] - 1.0).abs() < 1e-14);
        // right triangle: circumcenter on the hypotenuse
        assert!(b[0].abs() < 1e-14);
    }

    #[test]
    fn minimal_image() {
        let d = wrap_delta(&[0.95, 0.0], &[0.05, 0.0], &[Some(1.0), None]);
        assert!((d[0] - 0.1).abs() < 1e-12);
    }
}
