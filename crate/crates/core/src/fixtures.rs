//! Bundled example meshes. Each generator returns the complex together with
//! vertex coordinates; periodic directions carry their period in the
//! [`Embedding`].

use std::f64::consts::TAU;

use crate::complex::SimplicialComplex;
use crate::geometry::Embedding;

fn build(dim: usize, tops: &[Vec<usize>]) -> SimplicialComplex {
    SimplicialComplex::build(dim, tops).expect("fixture meshes are valid")
}

/// Path on `cells + 1` vertices along `[0, 1]`.
pub fn interval(cells: usize) -> (SimplicialComplex, Embedding) {
    let tops: Vec<Vec<usize>> = (0..cells).map(|i| vec![i, i + 1]).collect();
    let pos = (0..=cells).map(|i| vec![i as f64 / cells as f64]).collect();
    (build(1, &tops), Embedding::new(pos))
}

fn grid_triangles(
    nx: usize,
    ny: usize,
    id: impl Fn(usize, usize) -> usize,
    skip: impl Fn(usize, usize) -> bool,
) -> Vec<Vec<usize>> {
    let mut tops = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if skip(i, j) {
                continue;
            }
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tops.push(vec![a, b, c]);
            tops.push(vec![a, c, d]);
        }
    }
    tops
}

/// Unit square split into `2 nx ny` right triangles.
pub fn square_grid(nx: usize, ny: usize) -> (SimplicialComplex, Embedding) {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let tops = grid_triangles(nx, ny, id, |_, _| false);
    let mut pos = vec![Vec::new(); (nx + 1) * (ny + 1)];
    for i in 0..=nx {
        for j in 0..=ny {
            pos[id(i, j)] = vec![i as f64 / nx as f64, j as f64 / ny as f64];
        }
    }
    (build(2, &tops), Embedding::new(pos))
}

/// Triangulates the band between two concentric vertex rings by merging
/// their angular orders.
fn zip_rings(inner: &[usize], outer: &[usize], tops: &mut Vec<Vec<usize>>) {
    let (m1, m2) = (inner.len(), outer.len());
    let (mut i, mut j) = (0, 0);
    while i < m1 || j < m2 {
        let next_in = (i + 1) as f64 / m1 as f64;
        let next_out = (j + 1) as f64 / m2 as f64;
        if j >= m2 || (i < m1 && next_in <= next_out) {
            tops.push(vec![inner[i % m1], outer[j % m2], inner[(i + 1) % m1]]);
            i += 1;
        } else {
            tops.push(vec![inner[i % m1], outer[j % m2], outer[(j + 1) % m2]]);
            j += 1;
        }
    }
}

/// Unit disk: a center vertex and `rings` circles, ring `r` carrying
/// `sectors * r` vertices. The boundary polygon is inscribed in the unit
/// circle, so refining both parameters tracks a curved boundary.
pub fn disk(rings: usize, sectors: usize) -> (SimplicialComplex, Embedding) {
    let mut pos = vec![vec![0.0, 0.0]];
    let mut prev = vec![0usize];
    let mut tops = Vec::new();
    for r in 1..=rings {
        let m = sectors * r;
        let radius = r as f64 / rings as f64;
        let ring: Vec<usize> = (0..m).map(|j| pos.len() + j).collect();
        for j in 0..m {
            let a = TAU * j as f64 / m as f64;
            pos.push(vec![radius * a.cos(), radius * a.sin()]);
        }
        if r == 1 {
            for j in 0..m {
                tops.push(vec![0, ring[j], ring[(j + 1) % m]]);
            }
        } else {
            zip_rings(&prev, &ring, &mut tops);
        }
        prev = ring;
    }
    (build(2, &tops), Embedding::new(pos))
}

/// Annulus `0.5 <= |x| <= 1` with `rings + 1` circles of `sectors` vertices.
pub fn annulus(rings: usize, sectors: usize) -> (SimplicialComplex, Embedding) {
    let id = |i: usize, j: usize| i * sectors + (j % sectors);
    let tops = grid_triangles(rings, sectors, id, |_, _| false);
    let mut pos = vec![Vec::new(); (rings + 1) * sectors];
    for i in 0..=rings {
        let r = 0.5 + 0.5 * i as f64 / rings as f64;
        for j in 0..sectors {
            let a = TAU * j as f64 / sectors as f64;
            pos[id(i, j)] = vec![r * a.cos(), r * a.sin()];
        }
    }
    (build(2, &tops), Embedding::new(pos))
}

/// `[0, 1] x S^1` as a grid with the second coordinate periodic (period 1).
pub fn cylinder(ns: usize, nphi: usize) -> (SimplicialComplex, Embedding) {
    assert!(nphi >= 3, "the periodic direction needs at least three cells");
    let id = |i: usize, j: usize| (j % nphi) * (ns + 1) + i;
    let tops = grid_triangles(ns, nphi, id, |_, _| false);
    let mut pos = vec![Vec::new(); (ns + 1) * nphi];
    for i in 0..=ns {
        for j in 0..nphi {
            pos[id(i, j)] = vec![i as f64 / ns as f64, j as f64 / nphi as f64];
        }
    }
    (build(2, &tops), Embedding::with_periods(pos, vec![None, Some(1.0)]))
}

/// Flat torus `R^2 / Z^2`.
pub fn torus(n1: usize, n2: usize) -> (SimplicialComplex, Embedding) {
    assert!(n1 >= 3 && n2 >= 3, "each periodic direction needs three cells");
    let id = |i: usize, j: usize| (j % n2) * n1 + (i % n1);
    let tops = grid_triangles(n1, n2, id, |_, _| false);
    let mut pos = vec![Vec::new(); n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            pos[id(i, j)] = vec![i as f64 / n1 as f64, j as f64 / n2 as f64];
        }
    }
    (build(2, &tops), Embedding::with_periods(pos, vec![Some(1.0), Some(1.0)]))
}

/// Three-holed sphere: a `7r x 3r` grid with two `r x r` square holes.
pub fn pair_of_pants(r: usize) -> (SimplicialComplex, Embedding) {
    let (nx, ny) = (7 * r, 3 * r);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let hole = |i: usize, j: usize| (r..2 * r).contains(&j) && ((r..2 * r).contains(&i) || (5 * r..6 * r).contains(&i));
    let tops = grid_triangles(nx, ny, id, hole);
    let h = 1.0 / r as f64;
    let mut pos = vec![Vec::new(); (nx + 1) * (ny + 1)];
    for i in 0..=nx {
        for j in 0..=ny {
            pos[id(i, j)] = vec![i as f64 * h, j as f64 * h];
        }
    }
    // drop vertices strictly inside the holes (none exist for r = 1)
    compact(2, tops, pos, vec![None, None])
}

/// Solid torus in R^3: an `m x m` square cross-section swept around a circle
/// of radius 2 in `slices` steps, each cube cut into six tetrahedra.
pub fn solid_torus(m: usize, slices: usize) -> (SimplicialComplex, Embedding) {
    assert!(slices >= 3);
    let id = |i: usize, j: usize, l: usize| ((l % slices) * (m + 1) + j) * (m + 1) + i;
    let mut tops = Vec::new();
    let axes_orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for i in 0..m {
        for j in 0..m {
            for l in 0..slices {
                for order in &axes_orders {
                    let mut c = [i, j, l];
                    let mut tet = vec![id(c[0], c[1], c[2])];
                    for &a in order {
                        c[a] += 1;
                        tet.push(id(c[0], c[1], c[2]));
                    }
                    tops.push(tet);
                }
            }
        }
    }
    let mut pos = vec![Vec::new(); (m + 1) * (m + 1) * slices];
    for i in 0..=m {
        for j in 0..=m {
            for l in 0..slices {
                let (x, y) = (i as f64 / m as f64 - 0.5, j as f64 / m as f64 - 0.5);
                let a = TAU * l as f64 / slices as f64;
                pos[id(i, j, l)] = vec![(2.0 + x) * a.cos(), (2.0 + x) * a.sin(), y];
            }
        }
    }
    (build(3, &tops), Embedding::new(pos))
}

/// Renumbers vertices so that only those used by `tops` remain.
fn compact(
    dim: usize,
    tops: Vec<Vec<usize>>,
    pos: Vec<Vec<f64>>,
    periods: Vec<Option<f64>>,
) -> (SimplicialComplex, Embedding) {
    let mut map = vec![usize::MAX; pos.len()];
    let mut new_pos = Vec::new();
    let tops: Vec<Vec<usize>> = tops
        .into_iter()
        .map(|t| {
            t.into_iter()
                .map(|v| {
                    if map[v] == usize::MAX {
                        map[v] = new_pos.len();
                        new_pos.push(pos[v].clone());
                    }
                    map[v]
                })
                .collect()
        })
        .collect();
    (build(dim, &tops), Embedding::with_periods(new_pos, periods))
}

/// The seven bundled meshes at their default resolution.
pub fn all() -> Vec<(&'static str, SimplicialComplex, Embedding)> {
    let named = |name, (k, e): (SimplicialComplex, Embedding)| (name, k, e);
    vec![
        named("interval", interval(8)),
        named("disk", disk(3, 6)),
        named("annulus", annulus(2, 10)),
        named("cylinder", cylinder(3, 6)),
        named("pair_of_pants", pair_of_pants(1)),
        named("torus", torus(4, 4)),
        named("solid_torus", solid_torus(2, 4)),
    ]
}
