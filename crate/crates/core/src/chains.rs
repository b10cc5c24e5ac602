//! Oriented cells, integer chains and boundary operators of a 3-complex.
//!
//! Orientation convention: an edge is oriented from its start to its end
//! node, so `∂e = end - start`. A face carries an ordered edge loop with a
//! sign per edge (+1 if the edge runs along the loop), and a volume carries
//! its faces with outward-consistent signs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub dim: usize,
    pub index: usize,
}

impl CellId {
    pub fn new(dim: usize, index: usize) -> Self {
        Self { dim, index }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["n", "e", "f", "v"].get(self.dim).copied().unwrap_or("?");
        write!(f, "{}{}", prefix, self.index)
    }
}

/// A formal sum of `dim`-cells with integer coefficients. Zero coefficients
/// are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain {
    dim: usize,
    coeffs: BTreeMap<usize, i64>,
}

impl Chain {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn cell(id: CellId) -> Self {
        Self::from_terms(id.dim, [(id.index, 1)])
    }

    pub fn from_terms<I: IntoIterator<Item = (usize, i64)>>(dim: usize, terms: I) -> Self {
        let mut c = Self::zero(dim);
        for (index, coeff) in terms {
            c.add_term(index, coeff);
        }
        c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, index: usize, coeff: i64) {
        let entry = self.coeffs.entry(index).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.coeffs.remove(&index);
        }
    }

    pub fn coefficient(&self, index: usize) -> i64 {
        self.coeffs.get(&index).copied().unwrap_or(0)
    }

    /// Terms in ascending cell index.
    pub fn iter(&self) -> impl Iterator<Item = (CellId, i64)> + '_ {
        self.coeffs
            .iter()
            .map(move |(&i, &c)| (CellId::new(self.dim, i), c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, k: i64) -> Self {
        Self::from_terms(self.dim, self.coeffs.iter().map(|(&i, &c)| (i, c * k)))
    }

    pub fn plus(&self, other: &Chain) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                chain: other.dim,
                matrix: self.dim,
            });
        }
        let mut out = self.clone();
        for (&i, &c) in &other.coeffs {
            out.add_term(i, c);
        }
        Ok(out)
    }
}

/// The matrix of `∂_j`: rows are `(j-1)`-cells, columns are `j`-cells.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMatrix {
    pub dim: usize,
    pub matrix: SparseMatrix<i32>,
}

/// Ordered faces of a volume or edges of a face, with orientation signs.
pub type SignedLoop = Vec<(usize, i32)>;

/// Cell counts, boundary matrices and orientation records of a 3-complex.
/// Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSkeleton {
    counts: [usize; 4],
    boundaries: [BoundaryMatrix; 3],
    edges: Vec<[usize; 2]>,
    faces: Vec<SignedLoop>,
    volumes: Vec<SignedLoop>,
}

impl ComplexSkeleton {
    pub fn empty() -> Self {
        Self::from_cells(0, Vec::new(), Vec::new(), Vec::new()).expect("empty complex")
    }

    /// Builds a skeleton from orientation records: edges as `[start, end]`,
    /// faces as signed edge loops, volumes as signed face lists.
    pub fn from_cells(
        n_nodes: usize,
        edges: Vec<[usize; 2]>,
        faces: Vec<SignedLoop>,
        volumes: Vec<SignedLoop>,
    ) -> Result<Self> {
        let check = |what: &str, i: usize, n: usize| {
            if i >= n {
                Err(Error::Shape(format!("{what} index {i} out of range {n}")))
            } else {
                Ok(())
            }
        };
        let mut t1 = Vec::with_capacity(2 * edges.len());
        for (e, &[a, b]) in edges.iter().enumerate() {
            check("node", a, n_nodes)?;
            check("node", b, n_nodes)?;
            t1.push((a, e, -1));
            t1.push((b, e, 1));
        }
        let mut t2 = Vec::new();
        for (f, lp) in faces.iter().enumerate() {
            for &(e, s) in lp {
                check("edge", e, edges.len())?;
                t2.push((e, f, s));
            }
        }
        let mut t3 = Vec::new();
        for (v, lp) in volumes.iter().enumerate() {
            for &(f, s) in lp {
                check("face", f, faces.len())?;
                t3.push((f, v, s));
            }
        }
        let counts = [n_nodes, edges.len(), faces.len(), volumes.len()];
        let boundaries = [
            BoundaryMatrix {
                dim: 1,
                matrix: SparseMatrix::from_triplets(counts[0], counts[1], t1),
            },
            BoundaryMatrix {
                dim: 2,
                matrix: SparseMatrix::from_triplets(counts[1], counts[2], t2),
            },
            BoundaryMatrix {
                dim: 3,
                matrix: SparseMatrix::from_triplets(counts[2], counts[3], t3),
            },
        ];
        Ok(Self {
            counts,
            boundaries,
            edges,
            faces,
            volumes,
        })
    }

    /// Wraps raw boundary matrices without checking them; use
    /// [`validate_complex`] to inspect the result. Orientation records are
    /// read back from the matrix columns.
    pub fn from_matrices(
        counts: [usize; 4],
        d1: SparseMatrix<i32>,
        d2: SparseMatrix<i32>,
        d3: SparseMatrix<i32>,
    ) -> Self {
        let columns = |m: &SparseMatrix<i32>| {
            let mut cols: Vec<SignedLoop> = vec![Vec::new(); m.ncols()];
            for (r, c, v) in m.iter() {
                cols[c].push((r, v));
            }
            cols
        };
        let edges = columns(&d1)
            .into_iter()
            .map(|col| {
                let start = col.iter().find(|t| t.1 < 0).map_or(usize::MAX, |t| t.0);
                let end = col.iter().find(|t| t.1 > 0).map_or(usize::MAX, |t| t.0);
                [start, end]
            })
            .collect();
        let faces = columns(&d2);
        let volumes = columns(&d3);
        Self {
            counts,
            boundaries: [
                BoundaryMatrix { dim: 1, matrix: d1 },
                BoundaryMatrix { dim: 2, matrix: d2 },
                BoundaryMatrix { dim: 3, matrix: d3 },
            ],
            edges,
            faces,
            volumes,
        }
    }

    pub fn counts(&self) -> [usize; 4] {
        self.counts
    }

    pub fn count(&self, dim: usize) -> usize {
        self.counts[dim]
    }

    /// `∂_j` for `j` in 1..=3.
    pub fn boundary_matrix(&self, j: usize) -> &BoundaryMatrix {
        &self.boundaries[j - 1]
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn face_loop(&self, f: usize) -> &[(usize, i32)] {
        &self.faces[f]
    }

    pub fn faces(&self) -> &[SignedLoop] {
        &self.faces
    }

    pub fn volume_faces(&self, v: usize) -> &[(usize, i32)] {
        &self.volumes[v]
    }

    pub fn volumes(&self) -> &[SignedLoop] {
        &self.volumes
    }

    pub fn contains(&self, id: CellId) -> bool {
        id.dim <= 3 && id.index < self.counts[id.dim]
    }
}

/// Applies the boundary operator to a chain.
pub fn boundary(c: &Chain, skeleton: &ComplexSkeleton) -> Result<Chain> {
    let j = c.dim();
    if j == 0 {
        return Err(Error::ZeroChainBoundary);
    }
    if j > 3 {
        return Err(Error::DimensionMismatch { chain: j, matrix: 3 });
    }
    let d = &skeleton.boundary_matrix(j).matrix;
    let mut out = Chain::zero(j - 1);
    for (id, _) in c.iter() {
        if !skeleton.contains(id) || id.index >= d.ncols() {
            return Err(Error::UnknownCell(id));
        }
    }
    // Walk rows once; columns are looked up from the chain.
    let dt = d.transpose();
    for (id, coeff) in c.iter() {
        for (row, v) in dt.row(id.index) {
            out.add_term(row, coeff * i64::from(v));
        }
    }
    Ok(out)
}

/// The co-boundary matrix `d^j = (∂_j)^T`, shape (j-cells × (j-1)-cells).
pub fn coboundary_matrix(skeleton: &ComplexSkeleton, j: usize) -> Result<SparseMatrix<i32>> {
    if !(1..=3).contains(&j) {
        return Err(Error::CoboundaryRange(j));
    }
    Ok(skeleton.boundary_matrix(j).matrix.transpose())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixEntry {
    /// Dimension `j` of the offending product or matrix.
    pub j: usize,
    pub row: usize,
    pub col: usize,
    pub value: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Nonzero entries of `∂_{j-1}·∂_j`, reported at the column of the j-cell.
    pub double_boundary: Vec<MatrixEntry>,
    /// Boundary-matrix entries outside {-1, 0, +1}.
    pub entry_range: Vec<MatrixEntry>,
    /// Edge columns of `∂_1` without exactly one +1 and one -1.
    pub malformed_edges: Vec<usize>,
    /// Cells referenced by no higher cell and referencing nothing.
    pub orphans: Vec<CellId>,
    pub shape_mismatches: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.double_boundary.is_empty()
            && self.entry_range.is_empty()
            && self.malformed_edges.is_empty()
            && self.orphans.is_empty()
            && self.shape_mismatches.is_empty()
    }

    pub fn violation_count(&self) -> usize {
        self.double_boundary.len()
            + self.entry_range.len()
            + self.malformed_edges.len()
            + self.orphans.len()
            + self.shape_mismatches.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "complex valid: no violations");
        }
        writeln!(f, "complex invalid: {} violation(s)", self.violation_count())?;
        for m in &self.shape_mismatches {
            writeln!(f, "  shape: {m}")?;
        }
        for e in &self.double_boundary {
            writeln!(
                f,
                "  boundary of boundary: d{}d{} [{}, {}] = {}",
                e.j - 1,
                e.j,
                e.row,
                e.col,
                e.value
            )?;
        }
        for e in &self.entry_range {
            writeln!(f, "  entry range: d{} [{}, {}] = {}", e.j, e.row, e.col, e.value)?;
        }
        for e in &self.malformed_edges {
            writeln!(f, "  malformed edge column e{e}")?;
        }
        for c in &self.orphans {
            writeln!(f, "  orphan cell {c}")?;
        }
        Ok(())
    }
}

/// Checks the chain-complex property and the structural invariants of the
/// boundary matrices. Never fails; findings are collected in the report.
pub fn validate_complex(skeleton: &ComplexSkeleton) -> ValidationReport {
    let mut report = ValidationReport::default();
    let counts = skeleton.counts();
    let mats: Vec<&SparseMatrix<i32>> = (1..=3).map(|j| &skeleton.boundary_matrix(j).matrix).collect();

    let mut shapes_ok = [true; 3];
    for j in 1..=3 {
        let expected = (counts[j - 1], counts[j]);
        if mats[j - 1].shape() != expected {
            shapes_ok[j - 1] = false;
            report.shape_mismatches.push(format!(
                "d{j} is {:?}, expected {:?}",
                mats[j - 1].shape(),
                expected
            ));
        }
    }

    for j in 1..=3 {
        for (r, c, v) in mats[j - 1].iter() {
            if !(-1..=1).contains(&v) {
                report.entry_range.push(MatrixEntry {
                    j,
                    row: r,
                    col: c,
                    value: i64::from(v),
                });
            }
        }
    }

    let mut edge_plus = vec![0usize; mats[0].ncols()];
    let mut edge_minus = vec![0usize; mats[0].ncols()];
    for (_, c, v) in mats[0].iter() {
        if v == 1 {
            edge_plus[c] += 1;
        } else if v == -1 {
            edge_minus[c] += 1;
        } else {
            edge_plus[c] += 2;
        }
    }
    for e in 0..mats[0].ncols() {
        if edge_plus[e] != 1 || edge_minus[e] != 1 {
            report.malformed_edges.push(e);
        }
    }

    for j in 2..=3 {
        let (lo, hi) = (mats[j - 2], mats[j - 1]);
        if lo.ncols() != hi.nrows() {
            continue;
        }
        let product = lo.map(i64::from).matmul(&hi.map(i64::from)).expect("shapes checked");
        for (r, c, v) in product.iter() {
            report.double_boundary.push(MatrixEntry {
                j,
                row: r,
                col: c,
                value: v,
            });
        }
    }
    report.double_boundary.sort_by_key(|e| (e.j, e.col, e.row));

    // A j-cell is orphaned when no (j+1)-cell uses it and it has no boundary.
    for j in 0..=3 {
        let n = counts[j];
        let mut used = vec![false; n];
        let mut has_boundary = vec![j == 0; n];
        if j < 3 && shapes_ok[j] {
            for (r, _, _) in mats[j].iter() {
                used[r] = true;
            }
        }
        if j > 0 && shapes_ok[j - 1] {
            for (_, c, _) in mats[j - 1].iter() {
                has_boundary[c] = true;
            }
        }
        // Nodes have empty boundary by definition, so only usage matters.
        for i in 0..n {
            let orphan = if j == 0 { !used[i] } else { !used[i] && !has_boundary[i] };
            if orphan {
                report.orphans.push(CellId::new(j, i));
            }
        }
    }
    report
}
