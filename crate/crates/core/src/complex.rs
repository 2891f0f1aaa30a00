//! Oriented simplicial complexes with boundary.
//!
//! Every simplex of degree `k < n` is stored as a sorted vertex tuple with the
//! orientation of its sorted order. Top simplices additionally carry a sign
//! (`+1`/`-1`) relative to the sorted order, fixed at build time so that the
//! complex is consistently oriented. Induced face orientations follow the
//! alternating-sign rule: removing the vertex at sorted position `i` from a
//! simplex with sign `s` yields the face with sign `s * (-1)^i`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Integer sparse matrix in triplet form, used for boundary and coboundary
/// operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, value)` with no duplicate positions and no zero values.
    pub entries: Vec<(usize, usize, i64)>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_unstable();
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    /// Exact integer product.
    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); other.rows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k] {
                *acc.entry((r, c)).or_insert(0) += v * w;
            }
        }
        IntMatrix {
            rows: self.rows,
            cols: other.cols,
            entries: acc
                .into_iter()
                .filter(|&(_, v)| v != 0)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, _, v)| v == 0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v as f64;
        }
        m
    }

    /// Rows as sparse `(col, value)` lists.
    pub fn row_lists(&self) -> Vec<Vec<(usize, i64)>> {
        let mut rows = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.entries {
            rows[r].push((c, v));
        }
        rows
    }

    /// Keeps only the listed rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> IntMatrix {
        let row_map: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let col_map: HashMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let entries = self
            .entries
            .iter()
            .filter_map(|&(r, c, v)| Some((*row_map.get(&r)?, *col_map.get(&c)?, v)))
            .collect();
        IntMatrix {
            rows: rows.len(),
            cols: cols.len(),
            entries,
        }
    }
}

/// A real-valued cochain on the oriented `degree`-simplices of a complex.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cochain {
    pub degree: usize,
    pub values: DVector<f64>,
}

impl Cochain {
    pub fn new(degree: usize, values: DVector<f64>) -> Self {
        Self { degree, values }
    }

    pub fn zeros(complex: &SimplicialComplex, degree: usize) -> Self {
        Self::new(degree, DVector::zeros(complex.count(degree)))
    }

    pub fn from_vec(degree: usize, values: Vec<f64>) -> Self {
        Self::new(degree, DVector::from_vec(values))
    }

    /// Checks length against the complex and finiteness of every entry.
    pub fn validate(&self, complex: &SimplicialComplex) -> Result<()> {
        let expected = complex.count(self.degree);
        if self.values.len() != expected {
            return Err(Error::CochainLength {
                degree: self.degree,
                expected,
                got: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("cochain has non-finite values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    dim: usize,
    num_vertices: usize,
    simplices: Vec<Vec<Vec<usize>>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
    top_sign: Vec<i64>,
    boundary: Vec<Vec<bool>>,
    /// Component id per boundary simplex, per degree (`None` for interior).
    component_of: Vec<Vec<Option<usize>>>,
    components: usize,
}

/// Sign of the permutation sorting `tuple`, plus the sorted tuple.
fn sort_with_parity(tuple: &[usize]) -> (Vec<usize>, i64) {
    let mut v = tuple.to_vec();
    let mut sign = 1;
    // insertion sort keeps track of transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (v, sign)
}

fn remove_at(tuple: &[usize], i: usize) -> Vec<usize> {
    tuple
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect()
}

fn all_faces(tuple: &[usize], size: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(t: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..t.len() {
            cur.push(t[i]);
            rec(t, size, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(tuple, size, 0, &mut Vec::new(), out);
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl SimplicialComplex {
    /// Builds the full face lattice, fixes a consistent orientation of the
    /// top simplices and identifies boundary components.
    ///
    /// The first top simplex of each connected piece keeps its input
    /// orientation; the rest are flipped as needed.
    pub fn build(dim: usize, top_simplices: &[Vec<usize>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMesh("dimension must be at least 1".into()));
        }
        if top_simplices.is_empty() {
            return Err(Error::InvalidMesh("no top simplices".into()));
        }
        let mut tops = Vec::with_capacity(top_simplices.len());
        let mut signs = Vec::with_capacity(top_simplices.len());
        let mut top_index = HashMap::new();
        for t in top_simplices {
            if t.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!(
                    "top simplex {t:?} has {} vertices, expected {}",
                    t.len(),
                    dim + 1
                )));
            }
            let (sorted, sign) = sort_with_parity(t);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("repeated vertex in {t:?}")));
            }
            if top_index.insert(sorted.clone(), tops.len()).is_some() {
                return Err(Error::InvalidMesh(format!("duplicate top simplex {t:?}")));
            }
            tops.push(sorted);
            signs.push(sign);
        }
        let num_vertices = tops.iter().flatten().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; num_vertices];
        for &v in tops.iter().flatten() {
            used[v] = true;
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any top simplex")));
        }

        // face lattice, sorted lexicographically per degree for determinism
        let mut simplices: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim + 1];
        for k in 0..dim {
            let mut set = std::collections::BTreeSet::new();
            let mut buf = Vec::new();
            for t in &tops {
                buf.clear();
                all_faces(t, k + 1, &mut buf);
                set.extend(buf.drain(..));
            }
            simplices[k] = set.into_iter().collect();
        }
        simplices[dim] = tops.clone();
        let index: Vec<HashMap<Vec<usize>, usize>> = simplices
            .iter()
            .map(|s| s.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect())
            .collect();

        // codimension-one incidence
        let nfaces = simplices[dim - 1].len();
        let mut cofaces: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nfaces];
        for (ti, t) in tops.iter().enumerate() {
            for i in 0..=dim {
                let f = index[dim - 1][&remove_at(t, i)];
                cofaces[f].push((ti, i));
            }
        }
        for (f, cf) in cofaces.iter().enumerate() {
            if cf.len() > 2 {
                return Err(Error::NonManifold {
                    face: simplices[dim - 1][f].clone(),
                    count: cf.len(),
                });
            }
        }

        // orientation propagation over interior faces
        let mut fixed = vec![false; tops.len()];
        let mut adjacency: Vec<Vec<(usize, usize, usize, usize)>> = vec![Vec::new(); tops.len()];
        for (f, cf) in cofaces.iter().enumerate() {
            if let [(a, ia), (b, ib)] = cf[..] {
                adjacency[a].push((b, ia, ib, f));
                adjacency[b].push((a, ib, ia, f));
            }
        }
        for start in 0..tops.len() {
            if fixed[start] {
                continue;
            }
            fixed[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(a) = queue.pop_front() {
                for &(b, ia, ib, f) in &adjacency[a] {
                    let induced_a = signs[a] * if ia % 2 == 0 { 1 } else { -1 };
                    let parity_b = if ib % 2 == 0 { 1 } else { -1 };
                    let wanted = -induced_a * parity_b;
                    if fixed[b] {
                        if signs[b] != wanted {
                            return Err(Error::NonOrientable {
                                face: simplices[dim - 1][f].clone(),
                            });
                        }
                    } else {
                        signs[b] = wanted;
                        fixed[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }

        // boundary simplices and components
        let mut boundary: Vec<Vec<bool>> = simplices.iter().map(|s| vec![false; s.len()]).collect();
        let bfaces: Vec<usize> = (0..nfaces).filter(|&f| cofaces[f].len() == 1).collect();
        let mut uf = UnionFind::new(nfaces);
        if dim >= 2 {
            let mut ridge_owner: HashMap<Vec<usize>, usize> = HashMap::new();
            for &f in &bfaces {
                for i in 0..dim {
                    let ridge = remove_at(&simplices[dim - 1][f], i);
                    match ridge_owner.get(&ridge) {
                        Some(&g) => uf.union(f, g),
                        None => {
                            ridge_owner.insert(ridge, f);
                        }
                    }
                }
            }
        }
        let mut root_min: HashMap<usize, usize> = HashMap::new();
        for &f in &bfaces {
            let r = uf.find(f);
            let m = simplices[dim - 1][f][0];
            let e = root_min.entry(r).or_insert(m);
            *e = (*e).min(m);
        }
        let mut roots: Vec<(usize, usize)> = root_min.into_iter().map(|(r, m)| (m, r)).collect();
        roots.sort_unstable();
        let comp_of_root: HashMap<usize, usize> = roots.iter().enumerate().map(|(i, &(_, r))| (r, i)).collect();
        let mut component_of: Vec<Vec<Option<usize>>> = simplices.iter().map(|s| vec![None; s.len()]).collect();
        let mut buf = Vec::new();
        for &f in &bfaces {
            let c = comp_of_root[&uf.find(f)];
            let face = simplices[dim - 1][f].clone();
            for k in 0..dim {
                buf.clear();
                all_faces(&face, k + 1, &mut buf);
                for s in &buf {
                    let i = index[k][s];
                    boundary[k][i] = true;
                    match component_of[k][i] {
                        Some(existing) if existing != c => {
                            return Err(Error::InvalidMesh(format!(
                                "boundary components {existing} and {c} touch at {s:?}"
                            )))
                        }
                        _ => component_of[k][i] = Some(c),
                    }
                }
            }
        }

        Ok(Self {
            dim,
            num_vertices,
            simplices,
            index,
            top_sign: signs,
            boundary,
            component_of,
            components: roots.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Number of `k`-simplices (0 for `k > n`).
    pub fn count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    /// Sorted vertex tuples of degree `k`.
    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        &self.simplices[k]
    }

    pub fn simplex(&self, k: usize, i: usize) -> &[usize] {
        &self.simplices[k][i]
    }

    pub fn find(&self, simplex: &[usize]) -> Option<usize> {
        let (sorted, _) = sort_with_parity(simplex);
        self.index.get(sorted.len().checked_sub(1)?)?.get(&sorted).copied()
    }

    /// Orientation sign of simplex `i` of degree `k` relative to its sorted
    /// vertex order. Always `+1` below the top degree.
    pub fn orientation(&self, k: usize, i: usize) -> i64 {
        if k == self.dim {
            self.top_sign[i]
        } else {
            1
        }
    }

    /// Top simplex vertices listed in positively oriented order.
    pub fn oriented_top(&self, i: usize) -> Vec<usize> {
        let mut t = self.simplices[self.dim][i].clone();
        if self.top_sign[i] < 0 && t.len() >= 2 {
            t.swap(0, 1);
        }
        t
    }

    pub fn is_boundary(&self, k: usize, i: usize) -> bool {
        self.boundary[k][i]
    }

    pub fn boundary_mask(&self, k: usize) -> &[bool] {
        &self.boundary[k]
    }

    /// Indices of `k`-simplices not contained in the boundary.
    pub fn interior(&self, k: usize) -> Vec<usize> {
        (0..self.count(k)).filter(|&i| !self.boundary[k][i]).collect()
    }

    pub fn num_boundary_components(&self) -> usize {
        self.components
    }

    pub fn boundary_component(&self, k: usize, i: usize) -> Option<usize> {
        self.component_of[k][i]
    }

    /// Boundary vertices of component `c`, ascending.
    pub fn component_vertices(&self, c: usize) -> Vec<usize> {
        (0..self.count(0)).filter(|&v| self.component_of[0][v] == Some(c)).collect()
    }

    pub fn has_boundary(&self) -> bool {
        self.components > 0
    }

    /// Alternating sum of simplex counts.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|k| if k % 2 == 0 { self.count(k) as i64 } else { -(self.count(k) as i64) })
            .sum()
    }

    fn check_degree(&self, k: usize, lo: usize, hi: usize) -> Result<()> {
        if k < lo || k > hi {
            return Err(Error::DegreeOutOfRange { degree: k, max: hi });
        }
        Ok(())
    }

    /// Boundary operator from `k`-chains to `(k-1)`-chains, `1 <= k <= n`.
    pub fn boundary_matrix(&self, k: usize) -> Result<IntMatrix> {
        self.check_degree(k, 1, self.dim)?;
        let mut entries = Vec::with_capacity(self.count(k) * (k + 1));
        for (j, s) in self.simplices[k].iter().enumerate() {
            let sign = self.orientation(k, j);
            for i in 0..=k {
                let f = self.index[k - 1][&remove_at(s, i)];
                let parity = if i % 2 == 0 { 1 } else { -1 };
                entries.push((f, j, sign * parity * self.orientation(k - 1, f)));
            }
        }
        entries.sort_unstable();
        Ok(IntMatrix {
            rows: self.count(k - 1),
            cols: self.count(k),
            entries,
        })
    }

    /// Discrete exterior derivative on `k`-cochains, `0 <= k <= n-1`.
    pub fn coboundary(&self, k: usize) -> Result<IntMatrix> {
        if k >= self.dim {
            return Err(Error::DegreeOutOfRange {
                degree: k,
                max: self.dim - 1,
            });
        }
        Ok(self.boundary_matrix(k + 1)?.transpose())
    }

    /// Dense real coboundary; an empty `0 x count(k)` matrix for `k = n`.
    pub fn coboundary_dense(&self, k: usize) -> DMatrix<f64> {
        if k >= self.dim {
            return DMatrix::zeros(0, self.count(k));
        }
        self.coboundary(k).expect("degree checked").to_dense()
    }

    /// Applies the coboundary to a cochain.
    pub fn d(&self, c: &Cochain) -> Result<Cochain> {
        c.validate(self)?;
        let m = self.coboundary(c.degree)?;
        let mut out = DVector::zeros(m.rows);
        for &(r, col, v) in &m.entries {
            out[r] += v as f64 * c.values[col];
        }
        Ok(Cochain::new(c.degree + 1, out))
    }

    /// Selector of the interior degrees of freedom: zeroes every entry on a
    /// boundary `k`-simplex. Its image is the space of Dirichlet cochains.
    pub fn dirichlet_projector(&self, k: usize) -> Result<DirichletProjector> {
        self.check_degree(k, 0, self.dim)?;
        Ok(DirichletProjector {
            degree: k,
            keep: self.boundary[k].iter().map(|&b| !b).collect(),
        })
    }

    /// One round of global barycentric subdivision. Vertices of the new
    /// complex are indexed by the simplices of `self` (degree-major order);
    /// `positions`, if given, are carried to barycenters.
    pub fn barycentric_subdivision(
        &self,
        positions: Option<&[Vec<f64>]>,
    ) -> Result<(SimplicialComplex, Option<Vec<Vec<f64>>>)> {
        let mut offset = vec![0; self.dim + 2];
        for k in 0..=self.dim {
            offset[k + 1] = offset[k] + self.count(k);
        }
        let vid = |k: usize, i: usize| offset[k] + i;
        let mut tops = Vec::new();
        for t in 0..self.count(self.dim) {
            let oriented = self.oriented_top(t);
            // each permutation of the top simplex gives one flag
            let mut perm: Vec<usize> = (0..=self.dim).collect();
            loop {
                let mut chain = Vec::with_capacity(self.dim + 1);
                let mut sign = 1i64;
                for k in 0..=self.dim {
                    let mut face: Vec<usize> = perm[..=k].iter().map(|&p| oriented[p]).collect();
                    face.sort_unstable();
                    chain.push(vid(k, self.index[k][&face]));
                }
                // flag orientation matches the parity of the permutation
                for i in 0..perm.len() {
                    for j in i + 1..perm.len() {
                        if perm[i] > perm[j] {
                            sign = -sign;
                        }
                    }
                }
                if sign < 0 {
                    chain.swap(0, 1);
                }
                tops.push(chain);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        let sub = SimplicialComplex::build(self.dim, &tops)?;
        let pos = positions.map(|p| {
            let mut out = Vec::with_capacity(offset[self.dim + 1]);
            for k in 0..=self.dim {
                for s in &self.simplices[k] {
                    let m = p[s[0]].len();
                    let mut c = vec![0.0; m];
                    for &v in s {
                        for (ci, x) in c.iter_mut().zip(&p[v]) {
                            *ci += x / s.len() as f64;
                        }
                    }
                    out.push(c);
                }
            }
            out
        });
        Ok((sub, pos))
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Idempotent projector onto Dirichlet cochains of one degree.
#[derive(Clone, Debug)]
pub struct DirichletProjector {
    pub degree: usize,
    keep: Vec<bool>,
}

impl DirichletProjector {
    pub fn apply(&self, c: &Cochain) -> Cochain {
        let mut out = c.clone();
        for (v, &k) in out.values.iter_mut().zip(&self.keep) {
            if !k {
                *v = 0.0;
            }
        }
        out
    }

    /// Indices of kept (interior) simplices.
    pub fn kept(&self) -> Vec<usize> {
        self.keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.keep.iter().all(|&k| k)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.keep.len(),
            self.keep.iter().map(|&k| if k { 1.0 } else { 0.0 }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> SimplicialComplex {
        SimplicialComplex::build(1, &[vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap()
    }

    fn two_triangles() -> SimplicialComplex {
        SimplicialComplex::build(2, &[vec![0, 1, 2], vec![1, 3, 2]]).unwrap()
    }

    #[test]
    fn interval_has_two_boundary_points() {
        let k = path4();
        assert_eq!(k.dim(), 1);
        assert_eq!(k.num_boundary_components(), 2);
        assert!(k.is_boundary(0, 0) && k.is_boundary(0, 3));
        assert!(!k.is_boundary(0, 1));
        assert_eq!(k.component_vertices(0), vec![0]);
        assert_eq!(k.component_vertices(1), vec![3]);
    }

    #[test]
    fn disk_has_one_boundary_cycle() {
        let k = two_triangles();
        assert_eq!(k.num_boundary_components(), 1);
        let bedges = (0..k.count(1)).filter(|&e| k.is_boundary(1, e)).count();
        assert_eq!(bedges, 4);
    }

    #[test]
    fn mobius_strip_is_rejected() {
        // minimal 5-triangle Moebius strip on vertices 0..4
        let tris = vec![vec![0, 1, 2], vec![1, 2, 3], vec![2, 3, 4], vec![3, 4, 0], vec![4, 0, 1]];
        match SimplicialComplex::build(2, &tris) {
            Err(Error::NonOrientable { .. }) => {}
            other => panic!("expected NonOrientable, got {other:?}"),
        }
    }

    #[test]
    fn three_triangles_on_one_edge_is_non_manifold() {
        let tris = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]];
        assert!(matches!(
            SimplicialComplex::build(2, &tris),
            Err(Error::NonManifold { count: 3, .. })
        ));
    }

    #[test]
    fn inconsistent_input_orientation_is_repaired() {
        // second triangle listed with the same orientation on the shared edge
        let k = SimplicialComplex::build(2, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let d1 = k.boundary_matrix(1).unwrap();
        let d2 = k.boundary_matrix(2).unwrap();
        assert!(d1.mul(&d2).is_zero());
        // the shared edge gets opposite induced signs
        let e = k.find(&[1, 2]).unwrap();
        let vals: Vec<i64> = d2.entries.iter().filter(|&&(r, _, _)| r == e).map(|&(_, _, v)| v).collect();
        assert_eq!(vals.len(), 2);
        assert_eq!(vals[0], -vals[1]);
    }

    #[test]
    fn path_incidence_columns_sum_to_zero() {
        let d1 = path4().boundary_matrix(1).unwrap();
        assert_eq!((d1.rows, d1.cols), (4, 3));
        let dense = d1.to_dense();
        for c in 0..3 {
            assert_eq!(dense.column(c).sum(), 0.0);
        }
    }

    #[test]
    fn single_triangle_boundary_column() {
        let k = SimplicialComplex::build(2, &[vec![0, 1, 2]]).unwrap();
        let d2 = k.boundary_matrix(2).unwrap().to_dense();
        // edges sorted: [0,1], [0,2], [1,2]; boundary = [1,2] - [0,2] + [0,1]
        assert_eq!(d2.column(0).as_slice(), &[1.0, -1.0, 1.0]);
    }

    #[test]
    fn coboundary_of_vertex_index_is_one_on_every_edge() {
        let k = path4();
        let f = Cochain::from_vec(0, vec![0.0, 1.0, 2.0, 3.0]);
        let df = k.d(&f).unwrap();
        assert_eq!(df.values.as_slice(), &[1.0, 1.0, 1.0]);
        let c = Cochain::from_vec(0, vec![5.0; 4]);
        assert!(k.d(&c).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degree_errors() {
        let k = path4();
        assert!(matches!(k.boundary_matrix(0), Err(Error::DegreeOutOfRange { .. })));
        assert!(matches!(k.boundary_matrix(2), Err(Error::DegreeOutOfRange { .. })));
        assert!(matches!(k.coboundary(1), Err(Error::DegreeOutOfRange { .. })));
    }

    #[test]
    fn dirichlet_projector_on_interval_and_disk() {
        let k = path4();
        let p1 = k.dirichlet_projector(1).unwrap();
        assert!(p1.is_identity());
        let p0 = k.dirichlet_projector(0).unwrap();
        let c = p0.apply(&Cochain::from_vec(0, vec![1.0, 2.0, 3.0, 4.0]));
        assert_eq!(c.values.as_slice(), &[0.0, 2.0, 3.0, 0.0]);

        let disk = two_triangles();
        let p = disk.dirichlet_projector(1).unwrap();
        assert_eq!(p.kept().len(), 1);
    }

    #[test]
    fn subdivision_preserves_manifold_structure() {
        let k = two_triangles();
        let (s, _) = k.barycentric_subdivision(None).unwrap();
        assert_eq!(s.count(2), 12);
        assert_eq!(s.euler_characteristic(), 1);
        assert_eq!(s.num_boundary_components(), 1);
        let d1 = s.boundary_matrix(1).unwrap();
        let d2 = s.boundary_matrix(2).unwrap();
        assert!(d1.mul(&d2).is_zero());
    }
}
