//! Coordinates on symmetric matrices and the multiindex bookkeeping used by
//! the Price identity.
//!
//! A symmetric n x n matrix is parametrized by its upper triangle: the index
//! set `I = {(i, j) : i <= j}` with `n(n+1)/2` elements. [`CovCoords`] holds a
//! real vector over `I`, [`omega_pack`] / [`omega_unpack`] convert between
//! coordinates and full matrices, and [`CovMultiindex`] counts derivative
//! orders per coordinate. Pairs are 0-based internally; the serialized forms
//! and the CLI use 1-based pairs.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

/// Default relative tolerance for [`validate_pd`], in units of the largest
/// diagonal entry.
pub const DEFAULT_PD_TOL: f64 = 1e-10;

/// An index pair `(i, j)` with `i <= j`, 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexPair {
    i: usize,
    j: usize,
}

impl IndexPair {
    /// Builds the pair, swapping the arguments if needed so that `i <= j`.
    pub fn new(i: usize, j: usize) -> Self {
        if i <= j {
            Self { i, j }
        } else {
            Self { i: j, j: i }
        }
    }

    /// Accepts the 1-based convention used in serialized formats.
    pub fn from_one_based(i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 {
            return Err(Error::InvalidParameter(
                "index pairs are 1-based; got a zero index".into(),
            ));
        }
        Ok(Self::new(i - 1, j - 1))
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn is_diagonal(&self) -> bool {
        self.i == self.j
    }
}

/// Number of index pairs for dimension `n`.
fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(i, j)` in the packed row-major upper triangle.
fn packed_index(n: usize, p: IndexPair) -> usize {
    debug_assert!(p.j < n);
    p.i * n - p.i * (p.i + 1) / 2 + p.j
}

/// Iterate over `I` in row-major order.
pub fn index_pairs(n: usize) -> impl Iterator<Item = IndexPair> {
    (0..n).flat_map(move |i| (i..n).map(move |j| IndexPair::new(i, j)))
}

/// A real vector over the index set `I`: the coordinates of a symmetric
/// matrix in the upper-triangle parametrization.
#[derive(Clone, Debug, PartialEq)]
pub struct CovCoords {
    n: usize,
    entries: Vec<f64>,
}

impl CovCoords {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; pair_count(n)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(IndexPair) -> f64) -> Self {
        let mut c = Self::zeros(n);
        for p in index_pairs(n) {
            let idx = packed_index(n, p);
            c.entries[idx] = f(p);
        }
        c
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: IndexPair) -> f64 {
        self.entries[packed_index(self.n, p)]
    }

    pub fn set(&mut self, p: IndexPair, v: f64) {
        self.entries[packed_index(self.n, p)] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndexPair, f64)> + '_ {
        index_pairs(self.n).map(move |p| (p, self.get(p)))
    }
}

/// Coordinates of the 2x2 equicorrelation matrix `[[1, alpha], [alpha, 1]]`.
pub fn correlation_coords(alpha: f64) -> CovCoords {
    let mut c = CovCoords::zeros(2);
    c.set(IndexPair::new(0, 0), 1.0);
    c.set(IndexPair::new(0, 1), alpha);
    c.set(IndexPair::new(1, 1), 1.0);
    c
}

/// A symmetric matrix, exactly symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from `f` evaluated only on `i <= j`, mirroring the result, so
    /// the matrix is symmetric bit for bit.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Validates that `rows` is square and exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "row {} has length {}, expected {}",
                    i + 1,
                    row.len(),
                    n
                )));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i][j].to_bits() != rows[j][i].to_bits() {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({}, {}): {} vs {}",
                        i + 1,
                        j + 1,
                        rows[i][j],
                        rows[j][i]
                    )));
                }
            }
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n)
            .map(|i| self.get(i, i))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }
}

/// The parametrization `Omega`: coordinates over `I` to a symmetric matrix.
pub fn omega_pack(a: &CovCoords) -> SymMatrix {
    SymMatrix::from_fn(a.dim(), |i, j| a.get(IndexPair::new(i, j)))
}

/// Inverse of [`omega_pack`]; reads the upper triangle.
pub fn omega_unpack(s: &SymMatrix) -> CovCoords {
    CovCoords::from_fn(s.n(), |p| s.get(p.i(), p.j()))
}

/// A symmetric positive definite matrix together with its Cholesky factor and
/// a certified lower bound on the smallest eigenvalue.
#[derive(Clone, Debug)]
pub struct CovMatrix {
    sym: SymMatrix,
    chol: Vec<f64>,
    sigma_min: f64,
}

/// Certifies positive definiteness of `s`.
///
/// The certificate is a Cholesky factorization plus a smallest-eigenvalue
/// bound from 20 inverse power iterations; the matrix is rejected when the
/// bound falls below `tol` times the largest diagonal entry.
pub fn validate_pd(s: &SymMatrix, tol: f64) -> Result<CovMatrix> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    let n = s.n();
    let max_diag = s.max_diag();
    if !(max_diag.is_finite() && max_diag > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "largest diagonal entry is {max_diag}"
        )));
    }
    let chol = linalg::cholesky_lower(n, s.data())
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let sigma_min = linalg::smallest_eigenvalue_bound(n, s.data(), &chol, 20, 1e-12);
    if !(sigma_min >= tol * max_diag) {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue bound {sigma_min:.3e} below tolerance {:.3e}",
            tol * max_diag
        )));
    }
    Ok(CovMatrix {
        sym: s.clone(),
        chol,
        sigma_min,
    })
}

impl CovMatrix {
    /// [`validate_pd`] with the default tolerance.
    pub fn validate(s: &SymMatrix) -> Result<Self> {
        validate_pd(s, DEFAULT_PD_TOL)
    }

    pub fn n(&self) -> usize {
        self.sym.n()
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// Lower-triangular factor `L` with `Sigma = L L^T`, row-major.
    pub(crate) fn chol(&self) -> &[f64] {
        &self.chol
    }

    /// `log det Sigma`, from the Cholesky diagonal.
    pub fn log_det(&self) -> f64 {
        let n = self.n();
        2.0 * (0..n).map(|i| self.chol[i * n + i].ln()).sum::<f64>()
    }
}

/// A multiindex over the index set `I`: how many times each coordinate
/// direction is differentiated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CovMultiindex {
    n: usize,
    beta: Vec<u32>,
}

impl CovMultiindex {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            beta: vec![0; pair_count(n)],
        }
    }

    /// The unit multiindex `e_p`.
    pub fn unit(n: usize, p: IndexPair) -> Self {
        let mut b = Self::zeros(n);
        b.set(p, 1);
        b
    }

    pub fn from_pairs(n: usize, pairs: &[(IndexPair, u32)]) -> Self {
        let mut b = Self::zeros(n);
        for &(p, k) in pairs {
            b.set(p, b.get(p) + k);
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: IndexPair) -> u32 {
        self.beta[packed_index(self.n, p)]
    }

    pub fn set(&mut self, p: IndexPair, k: u32) {
        self.beta[packed_index(self.n, p)] = k;
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = self.clone();
        for (a, b) in out.beta.iter_mut().zip(&other.beta) {
            *a += b;
        }
        Ok(out)
    }

    pub fn scale(&self, k: u32) -> Self {
        let mut out = self.clone();
        for a in out.beta.iter_mut() {
            *a *= k;
        }
        out
    }

    /// Total order `|beta|`.
    pub fn total(&self) -> u32 {
        self.beta.iter().sum()
    }

    /// The flattened multiindex over coordinates of `R^n`: each count on
    /// `(i, j)` contributes to components `i` and `j` (twice when `i = j`).
    /// Its total order is always `2 |beta|`.
    pub fn flatten(&self) -> Vec<u32> {
        let mut out = vec![0_u32; self.n];
        for p in index_pairs(self.n) {
            let k = self.get(p);
            out[p.i()] += k;
            out[p.j()] += k;
        }
        out
    }

    /// Total order restricted to diagonal pairs; this drives the `(1/2)`
    /// prefactor of the Price identity.
    pub fn parallel_weight(&self) -> u32 {
        (0..self.n)
            .map(|i| self.get(IndexPair::new(i, i)))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndexPair, u32)> + '_ {
        index_pairs(self.n).map(move |p| (p, self.get(p)))
    }

    /// Parses the textual form `"i,j:k;i,j:k;..."` with 1-based pairs.
    /// Repeated pairs accumulate.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let mut out = Self::zeros(n);
        let mut pos = 0_usize;
        for part in s.split(';') {
            let trimmed = part.trim();
            if trimmed.is_empty() {
                pos += part.len() + 1;
                continue;
            }
            let err = |msg: String| Error::Parse { pos, msg };
            let (pair_str, count_str) = trimmed
                .split_once(':')
                .ok_or_else(|| err(format!("expected 'i,j:k' in '{trimmed}'")))?;
            let (i_str, j_str) = pair_str
                .split_once(',')
                .ok_or_else(|| err(format!("expected 'i,j' in '{pair_str}'")))?;
            let i: usize = i_str
                .trim()
                .parse()
                .map_err(|_| err(format!("bad index '{}'", i_str.trim())))?;
            let j: usize = j_str
                .trim()
                .parse()
                .map_err(|_| err(format!("bad index '{}'", j_str.trim())))?;
            let k: u32 = count_str
                .trim()
                .parse()
                .map_err(|_| err(format!("bad order '{}'", count_str.trim())))?;
            if i > j {
                return Err(err(format!("pair must satisfy i <= j, got {i},{j}")));
            }
            if j > n {
                return Err(err(format!("index {j} exceeds dimension {n}")));
            }
            let p = IndexPair::from_one_based(i, j)?;
            out.set(p, out.get(p) + k);
            pos += part.len() + 1;
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Serialization. SymMatrix uses {"n", "rows"} and re-validates symmetry on
// load; CovCoords and CovMultiindex use 1-based {"i", "j", ...} entry lists.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SymMatrixRepr {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SymMatrixRepr {
            n: self.n,
            rows: self.rows(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SymMatrixRepr::deserialize(deserializer)?;
        if repr.rows.len() != repr.n {
            return Err(D::Error::custom(format!(
                "expected {} rows, got {}",
                repr.n,
                repr.rows.len()
            )));
        }
        SymMatrix::from_rows(&repr.rows).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct CoordEntry {
    i: usize,
    j: usize,
    v: f64,
}

#[derive(Serialize, Deserialize)]
struct CovCoordsRepr {
    n: usize,
    entries: Vec<CoordEntry>,
}

impl Serialize for CovCoords {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CovCoordsRepr {
            n: self.n,
            entries: self
                .iter()
                .map(|(p, v)| CoordEntry {
                    i: p.i() + 1,
                    j: p.j() + 1,
                    v,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CovCoords {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = CovCoordsRepr::deserialize(deserializer)?;
        if repr.entries.len() != pair_count(repr.n) {
            return Err(D::Error::custom(format!(
                "expected {} entries for n = {}, got {}",
                pair_count(repr.n),
                repr.n,
                repr.entries.len()
            )));
        }
        let mut out = CovCoords::zeros(repr.n);
        let mut seen = vec![false; pair_count(repr.n)];
        for e in &repr.entries {
            if e.i > e.j || e.j > repr.n || e.i == 0 {
                return Err(D::Error::custom(format!(
                    "bad index pair ({}, {})",
                    e.i, e.j
                )));
            }
            let p = IndexPair::new(e.i - 1, e.j - 1);
            let idx = packed_index(repr.n, p);
            if seen[idx] {
                return Err(D::Error::custom(format!(
                    "duplicate entry for ({}, {})",
                    e.i, e.j
                )));
            }
            seen[idx] = true;
            out.set(p, e.v);
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct BetaEntry {
    i: usize,
    j: usize,
    k: u32,
}

impl Serialize for CovMultiindex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            n: usize,
            entries: Vec<BetaEntry>,
        }
        Repr {
            n: self.n,
            entries: self
                .iter()
                .filter(|(_, k)| *k > 0)
                .map(|(p, k)| BetaEntry {
                    i: p.i() + 1,
                    j: p.j() + 1,
                    k,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}
