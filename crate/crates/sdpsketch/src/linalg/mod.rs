//! Symmetric-matrix storage and the spectral primitives everything else is
//! built on: eigendecomposition, Schatten norms, PSD tests, trace products.

pub mod dense;
mod eigen;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use dense::Mat;
pub use eigen::{min_eigenvalue, sym_eigen_full, sym_eigenvalues};

/// Storage for a symmetric matrix: either a full dense square (kept exactly
/// symmetric) or the upper triangle as a sorted coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub enum SymStorage {
    Dense(Mat),
    /// Entries `(row, col, value)` with `row <= col`, strictly increasing
    /// `(row, col)` keys and no explicit zeros. Off-diagonal entries carry
    /// implicit symmetry.
    SparseUpper(Vec<(u32, u32, f64)>),
}

/// Symmetric `D x D` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    storage: SymStorage,
}

impl SymMatrix {
    /// Build from a row-major dense square. The input is symmetrized via
    /// `(M + M^T) / 2`, so mildly asymmetric inputs (rounding in user files)
    /// are accepted.
    pub fn dense_from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
        }
        let mut m = Mat::from_vec(dim, dim, data)?;
        m.symmetrize_average();
        Ok(SymMatrix {
            dim,
            storage: SymStorage::Dense(m),
        })
    }

    /// Build from upper-triangle coordinates. Entries must satisfy
    /// `row <= col`; duplicates are summed and exact zeros dropped.
    pub fn sparse_from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
        }
        let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r > c {
                return Err(Error::InvalidInput(format!(
                    "coo-upper entry ({r}, {c}) has row > col"
                )));
            }
            if c >= dim {
                return Err(Error::InvalidInput(format!(
                    "coo-upper entry ({r}, {c}) outside dimension {dim}"
                )));
            }
            entries.push((r as u32, c as u32, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut folded: Vec<(u32, u32, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match folded.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => folded.push((r, c, v)),
            }
        }
        folded.retain(|&(_, _, v)| v != 0.0);
        Ok(SymMatrix {
            dim,
            storage: SymStorage::SparseUpper(folded),
        })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            storage: SymStorage::SparseUpper(Vec::new()),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let entries = (0..dim as u32).map(|i| (i, i, 1.0)).collect();
        SymMatrix {
            dim,
            storage: SymStorage::SparseUpper(entries),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, i as u32, *v))
            .collect();
        SymMatrix {
            dim: values.len(),
            storage: SymStorage::SparseUpper(entries),
        }
    }

    /// Wrap an already-symmetric dense matrix without re-symmetrizing.
    /// The caller guarantees exact symmetry (e.g. output of a conjugation or
    /// of [`Mat::symmetrize_average`]).
    pub fn from_symmetric_mat(m: Mat) -> Self {
        debug_assert_eq!(m.rows(), m.cols());
        debug_assert!({
            let n = m.rows();
            (0..n).all(|i| (0..n).all(|j| m.get(i, j).to_bits() == m.get(j, i).to_bits()))
        });
        SymMatrix {
            dim: m.rows(),
            storage: SymStorage::Dense(m),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &SymStorage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, SymStorage::SparseUpper(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        match &self.storage {
            SymStorage::Dense(m) => m.get(i, j),
            SymStorage::SparseUpper(entries) => {
                let (r, c) = if i <= j { (i, j) } else { (j, i) };
                let key = (r as u32, c as u32);
                match entries.binary_search_by_key(&key, |&(r, c, _)| (r, c)) {
                    Ok(pos) => entries[pos].2,
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Number of floats this matrix actually stores.
    pub fn stored_len(&self) -> usize {
        match &self.storage {
            SymStorage::Dense(m) => m.data().len(),
            SymStorage::SparseUpper(entries) => entries.len(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.storage {
            SymStorage::Dense(m) => m.is_finite(),
            SymStorage::SparseUpper(entries) => entries.iter().all(|&(_, _, v)| v.is_finite()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            SymStorage::Dense(m) => m.max_abs(),
            SymStorage::SparseUpper(entries) => entries
                .iter()
                .fold(0.0_f64, |acc, &(_, _, v)| acc.max(v.abs())),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.storage {
            SymStorage::Dense(m) => m.trace(),
            SymStorage::SparseUpper(entries) => entries
                .iter()
                .filter(|&&(r, c, _)| r == c)
                .map(|&(_, _, v)| v)
                .sum(),
        }
    }

    /// Dense copy of the full matrix.
    pub fn to_mat(&self) -> Mat {
        match &self.storage {
            SymStorage::Dense(m) => m.clone(),
            SymStorage::SparseUpper(entries) => {
                let mut m = Mat::zeros(self.dim, self.dim);
                for &(r, c, v) in entries {
                    m.set(r as usize, c as usize, v);
                    m.set(c as usize, r as usize, v);
                }
                m
            }
        }
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        match &self.storage {
            SymStorage::Dense(m) => {
                let mut out = m.clone();
                out.scale_in_place(s);
                SymMatrix {
                    dim: self.dim,
                    storage: SymStorage::Dense(out),
                }
            }
            SymStorage::SparseUpper(entries) => {
                let scaled = entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect();
                SymMatrix {
                    dim: self.dim,
                    storage: SymStorage::SparseUpper(scaled),
                }
            }
        }
    }

    /// `B * W` into `out` (all dense shapes `dim x w_cols`), exploiting sparse
    /// storage of `B` when present.
    pub fn mul_dense_into(&self, w: &Mat, out: &mut Mat) {
        assert_eq!(w.rows(), self.dim, "mul_dense_into shape mismatch");
        assert_eq!(out.rows(), self.dim);
        assert_eq!(out.cols(), w.cols());
        match &self.storage {
            SymStorage::Dense(m) => {
                dense::gemm_into(1.0, m, false, w, false, 0.0, out);
            }
            SymStorage::SparseUpper(entries) => {
                out.data_mut().fill(0.0);
                for &(r, c, v) in entries {
                    let (r, c) = (r as usize, c as usize);
                    if r == c {
                        let src = w.row(r).to_vec();
                        let dst = out.row_mut(r);
                        for (d, s) in dst.iter_mut().zip(src.iter()) {
                            *d += v * s;
                        }
                    } else {
                        let src_c = w.row(c).to_vec();
                        let src_r = w.row(r).to_vec();
                        for (d, s) in out.row_mut(r).iter_mut().zip(src_c.iter()) {
                            *d += v * s;
                        }
                        for (d, s) in out.row_mut(c).iter_mut().zip(src_r.iter()) {
                            *d += v * s;
                        }
                    }
                }
            }
        }
    }

    /// `Tr(B X)` against a dense symmetric `X`, without forming products.
    pub fn trace_with_mat(&self, x: &Mat) -> f64 {
        debug_assert_eq!(x.rows(), self.dim);
        match &self.storage {
            SymStorage::Dense(m) => m.dot(x),
            SymStorage::SparseUpper(entries) => entries
                .iter()
                .map(|&(r, c, v)| {
                    let w = if r == c { 1.0 } else { 2.0 };
                    w * v * x.get(r as usize, c as usize)
                })
                .sum(),
        }
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues in nonincreasing
/// order, eigenvector `j` in column `j` of the orthogonal factor.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Mat {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Q diag(lambda) Q^T`, for reconstruction checks.
    pub fn reconstruct(&self) -> Mat {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            for i in 0..n {
                scaled.set(i, j, self.eigenvectors.get(i, j) * self.eigenvalues[j]);
            }
        }
        dense::mat_mul_nt(&scaled, &self.eigenvectors)
    }
}

/// Schatten norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchattenP {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

/// Full eigendecomposition. Deterministic for fixed input.
pub fn eigendecomp_sym(m: &SymMatrix) -> Result<Spectrum> {
    if !m.is_finite() {
        return Err(Error::NonFinite("eigendecomp_sym input"));
    }
    let (eigenvalues, eigenvectors) = sym_eigen_full(&m.to_mat())?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Schatten p-norm via the spectrum: `(sum |lambda_i|^p)^(1/p)` for p in
/// {1, 2}, `max |lambda_i|` for p = infinity.
pub fn schatten_norm(m: &SymMatrix, p: SchattenP) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite("schatten_norm input"));
    }
    let vals = sym_eigenvalues(&m.to_mat())?;
    Ok(match p {
        SchattenP::One => vals.iter().map(|v| v.abs()).sum(),
        SchattenP::Two => vals.iter().map(|v| v * v).sum::<f64>().sqrt(),
        SchattenP::Inf => vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
    })
}

/// True iff the minimum eigenvalue is at least `-tol`.
pub fn is_psd(m: &SymMatrix, tol: f64) -> Result<bool> {
    if !m.is_finite() {
        return Err(Error::NonFinite("is_psd input"));
    }
    let lambda_min = min_eigenvalue(&m.to_mat())?;
    Ok(lambda_min >= -tol)
}

/// `Tr(M N)` for symmetric operands, using sparse structure when available.
pub fn trace_product(m: &SymMatrix, n: &SymMatrix) -> Result<f64> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace_product: {} vs {}",
            m.dim(),
            n.dim()
        )));
    }
    let value = match (&m.storage, &n.storage) {
        (SymStorage::Dense(a), SymStorage::Dense(b)) => a.dot(b),
        (SymStorage::SparseUpper(entries), _) => sparse_trace(entries, n),
        (_, SymStorage::SparseUpper(entries)) => sparse_trace(entries, m),
    };
    Ok(value)
}

fn sparse_trace(entries: &[(u32, u32, f64)], other: &SymMatrix) -> f64 {
    entries
        .iter()
        .map(|&(r, c, v)| {
            let w = if r == c { 1.0 } else { 2.0 };
            w * v * other.entry(r as usize, c as usize)
        })
        .sum()
}

// --- JSON encoding -------------------------------------------------------
//
// Dense:  {"dim": D, "format": "dense", "data": [row-major floats]}
// Sparse: {"format": "coo-upper", "rows": [...], "cols": [...],
//          "vals": [...], "dim": D}

#[derive(Serialize, Deserialize)]
#[serde(tag = "format")]
enum MatrixJson {
    #[serde(rename = "dense")]
    Dense { dim: usize, data: Vec<f64> },
    #[serde(rename = "coo-upper")]
    CooUpper {
        rows: Vec<u32>,
        cols: Vec<u32>,
        vals: Vec<f64>,
        dim: usize,
    },
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let json = match &self.storage {
            SymStorage::Dense(m) => MatrixJson::Dense {
                dim: self.dim,
                data: m.data().to_vec(),
            },
            SymStorage::SparseUpper(entries) => MatrixJson::CooUpper {
                rows: entries.iter().map(|e| e.0).collect(),
                cols: entries.iter().map(|e| e.1).collect(),
                vals: entries.iter().map(|e| e.2).collect(),
                dim: self.dim,
            },
        };
        json.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        match MatrixJson::deserialize(deserializer)? {
            MatrixJson::Dense { dim, data } => {
                SymMatrix::dense_from_rows(dim, data).map_err(D::Error::custom)
            }
            MatrixJson::CooUpper {
                rows,
                cols,
                vals,
                dim,
            } => {
                if rows.len() != cols.len() || rows.len() != vals.len() {
                    return Err(D::Error::custom("coo-upper arrays have unequal lengths"));
                }
                let triplets: Vec<(usize, usize, f64)> = rows
                    .iter()
                    .zip(cols.iter())
                    .zip(vals.iter())
                    .map(|((&r, &c), &v)| (r as usize, c as usize, v))
                    .collect();
                SymMatrix::sparse_from_triplets(dim, &triplets).map_err(D::Error::custom)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_symmetrizes() {
        let m = SymMatrix::dense_from_rows(2, vec![1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.entry(0, 1), 3.0);
        assert_eq!(m.entry(1, 0), 3.0);
        // Bit-for-bit symmetric.
        assert_eq!(m.entry(0, 1).to_bits(), m.entry(1, 0).to_bits());
    }

    #[test]
    fn sparse_canonicalization() {
        let m =
            SymMatrix::sparse_from_triplets(3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5)]).unwrap();
        match m.storage() {
            SymStorage::SparseUpper(e) => {
                assert_eq!(e.as_slice(), &[(0, 0, 2.0), (0, 2, 1.5)]);
            }
            _ => panic!("expected sparse"),
        }
        assert_eq!(m.entry(2, 0), 1.5);
        assert!(SymMatrix::sparse_from_triplets(3, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn eigendecomp_examples() {
        let m = SymMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let s = eigendecomp_sym(&m).unwrap();
        assert_eq!(s.eigenvalues(), &[3.0, 2.0, 1.0]);

        let flip = SymMatrix::dense_from_rows(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let s = eigendecomp_sym(&flip).unwrap();
        assert!((s.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues()[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn schatten_examples() {
        let m = SymMatrix::diagonal(&[1.0, -2.0, 3.0]);
        assert!((schatten_norm(&m, SchattenP::One).unwrap() - 6.0).abs() < 1e-12);
        let id = SymMatrix::identity(3);
        assert!((schatten_norm(&id, SchattenP::Inf).unwrap() - 1.0).abs() < 1e-14);
        let flip = SymMatrix::dense_from_rows(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((schatten_norm(&flip, SchattenP::Two).unwrap() - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn schatten_two_matches_frobenius() {
        let m = SymMatrix::dense_from_rows(3, vec![1.5, -0.3, 0.2, -0.3, 0.8, 0.9, 0.2, 0.9, -1.1])
            .unwrap();
        let via_spectrum = schatten_norm(&m, SchattenP::Two).unwrap();
        let frob: f64 = m.to_mat().data().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((via_spectrum - frob).abs() <= 1e-10 * frob);
    }

    #[test]
    fn is_psd_examples() {
        assert!(is_psd(&SymMatrix::identity(4), 0.0).unwrap());
        assert!(!is_psd(&SymMatrix::diagonal(&[1.0, -1e-3]), 1e-6).unwrap());
        assert!(is_psd(&SymMatrix::diagonal(&[1.0, -1e-9]), 1e-6).unwrap());
    }

    #[test]
    fn trace_product_examples() {
        let id3 = SymMatrix::identity(3);
        assert_eq!(trace_product(&id3, &id3).unwrap(), 3.0);
        let a = SymMatrix::diagonal(&[1.0, 2.0]);
        let b = SymMatrix::diagonal(&[3.0, 4.0]);
        assert_eq!(trace_product(&a, &b).unwrap(), 11.0);
        assert!(trace_product(&id3, &a).is_err());
    }

    #[test]
    fn trace_product_sparse_vs_dense_oracle() {
        // Random sparse pair checked against the dense multiply.
        let mut state = 42_u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let n = 6;
        let mut tri_a = Vec::new();
        let mut tri_b = Vec::new();
        for i in 0..n {
            for j in i..n {
                if next() > 0.2 {
                    tri_a.push((i, j, next()));
                }
                if next() > 0.4 {
                    tri_b.push((i, j, next()));
                }
            }
        }
        let a = SymMatrix::sparse_from_triplets(n, &tri_a).unwrap();
        let b = SymMatrix::sparse_from_triplets(n, &tri_b).unwrap();
        let fast = trace_product(&a, &b).unwrap();
        let dense = dense::mat_mul(&a.to_mat(), &b.to_mat()).trace();
        let scale = fast.abs().max(dense.abs()).max(1.0);
        assert!((fast - dense).abs() <= 1e-10 * scale);
    }

    #[test]
    fn json_roundtrip_dense_and_sparse() {
        let d = SymMatrix::dense_from_rows(2, vec![1.0, 0.5, 0.5, 2.0]).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert!(text.contains("\"format\":\"dense\""));
        let back: SymMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);

        let s = SymMatrix::sparse_from_triplets(4, &[(0, 1, -1.5), (2, 2, 3.0)]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"format\":\"coo-upper\""));
        let back: SymMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn mul_dense_into_sparse_matches_dense() {
        let s =
            SymMatrix::sparse_from_triplets(3, &[(0, 1, 2.0), (1, 2, -1.0), (2, 2, 0.5)]).unwrap();
        let w = Mat::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = Mat::zeros(3, 2);
        s.mul_dense_into(&w, &mut out);
        let expect = dense::mat_mul(&s.to_mat(), &w);
        for (a, b) in out.data().iter().zip(expect.data().iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
