//! Ready-made special Lagrangian configurations over the bundled meshes.

use crate::complex::SimplicialComplex;
use crate::cy::{CYSpace, LagrangianAffine};
use crate::error::Result;
use crate::fixtures;

use super::Immersion;

/// Orders `make(c)` so that entry `i` belongs to boundary component `i`.
fn lambdas_by_component(
    complex: &SimplicialComplex,
    positions: &[Vec<f64>],
    make: impl Fn(&[f64]) -> Result<LagrangianAffine>,
) -> Result<Vec<LagrangianAffine>> {
    (0..complex.num_boundary_components())
        .map(|c| {
            let v = complex.component_vertices(c)[0];
            make(&positions[v])
        })
        .collect()
}

/// Endpoints of the horizontal segment at height `c` between the line
/// through `0` at angle `beta1` and the line through `1` at angle `beta2`.
pub fn two_line_endpoints(beta1: f64, beta2: f64, c: f64) -> (f64, f64) {
    (c / beta1.tan(), 1.0 + c / beta2.tan())
}

/// `n = 1`: a horizontal segment at height `c` between two affine lines.
/// The exact moduli space is the family of such segments.
pub fn interval_between_lines(cells: usize, beta1: f64, beta2: f64, c: f64) -> Result<Immersion> {
    let (complex, _) = fixtures::interval(cells);
    let (x0, x1) = two_line_endpoints(beta1, beta2, c);
    let positions: Vec<Vec<f64>> = (0..=cells)
        .map(|i| vec![x0 + (x1 - x0) * i as f64 / cells as f64, c])
        .collect();
    let lambdas = lambdas_by_component(&complex, &positions, |p| {
        let (o, b) = if p[0] < 0.5 * (x0 + x1) { (0.0, beta1) } else { (1.0, beta2) };
        LagrangianAffine::product_line(vec![o, 0.0], b)
    })?;
    Immersion::new(complex, CYSpace::flat(1), positions, lambdas)
}

/// Flat cylinder `[0, 1] x S^1` in `C x (C / Z^2)`, spanned by the real
/// axes, between `Lambda_i = (line through i at angle beta_i) x R`.
pub fn cylinder_sl(ns: usize, nphi: usize, beta0: f64, beta1: f64) -> Result<Immersion> {
    let (complex, emb) = fixtures::cylinder(ns, nphi);
    let positions: Vec<Vec<f64>> = emb.positions.iter().map(|p| vec![p[0], 0.0, p[1], 0.0]).collect();
    let space = CYSpace::with_periods(2, &[None, Some((1.0, 1.0))])?;
    let lambdas = lambdas_by_component(&complex, &positions, |p| {
        let (o, b) = if p[0] < 0.5 { (0.0, beta0) } else { (1.0, beta1) };
        LagrangianAffine::product_line(vec![o, 0.0, 0.0, 0.0], b)
    })?;
    Immersion::new(complex, space, positions, lambdas)
}

/// Graph of `grad(c log r)` over the annulus `0.5 <= r <= 1`, sampled at
/// the vertices. The smooth surface is special Lagrangian because `log r`
/// is harmonic, and each boundary circle lies in the linear Lagrangian
/// `y = (c / R^2) x`. The sampled immersion has [`super::sl_defect`] of
/// order `h`.
pub fn curved_annulus(rings: usize, sectors: usize, c: f64) -> Result<Immersion> {
    let (complex, emb) = fixtures::annulus(rings, sectors);
    let positions: Vec<Vec<f64>> = emb
        .positions
        .iter()
        .map(|p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            vec![p[0], c * p[0] / r2, p[1], c * p[1] / r2]
        })
        .collect();
    let lambdas = lambdas_by_component(&complex, &positions, |p| {
        let r2 = p[0] * p[0] + p[2] * p[2];
        let k = c / r2;
        LagrangianAffine::new(vec![0.0; 4], vec![vec![1.0, k, 0.0, 0.0], vec![0.0, 0.0, 1.0, k]])
    })?;
    Immersion::new(complex, CYSpace::flat(2), positions, lambdas)
}

/// Flat SL patch: the unit square grid rotated into the special Lagrangian
/// plane `e^{i a} R x e^{-i a} R`. No boundary constraints.
pub fn flat_patch(nx: usize, ny: usize, a: f64) -> Result<Immersion> {
    let (complex, emb) = fixtures::square_grid(nx, ny);
    let (c, s) = (a.cos(), a.sin());
    let positions = emb
        .positions
        .iter()
        .map(|p| vec![c * p[0], s * p[0], c * p[1], -s * p[1]])
        .collect();
    Immersion::unconstrained(complex, CYSpace::flat(2), positions, 0.0)
}

/// Disk in the real plane `R^2 ⊂ C^2`, without boundary constraints.
pub fn disk_in_plane(rings: usize, sectors: usize) -> Result<Immersion> {
    let (complex, emb) = fixtures::disk(rings, sectors);
    let positions = emb.positions.iter().map(|p| vec![p[0], 0.0, p[1], 0.0]).collect();
    Immersion::unconstrained(complex, CYSpace::flat(2), positions, 0.0)
}

/// Pair of pants in the real plane `R^2 ⊂ C^2`, without boundary constraints.
pub fn pants_in_plane(r: usize) -> Result<Immersion> {
    let (complex, emb) = fixtures::pair_of_pants(r);
    let positions = emb.positions.iter().map(|p| vec![p[0], 0.0, p[1], 0.0]).collect();
    Immersion::unconstrained(complex, CYSpace::flat(2), positions, 0.0)
}
