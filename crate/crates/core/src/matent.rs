//! Log-determinant entropy of complex positive semidefinite matrices and the
//! contraction parametrization of block completions.
//!
//! Index sets are positions into the matrix. Conditional entropies follow the
//! tuple convention `H(α|β) = ½ log det` of the Schur complement, while
//! [`logdet`] is the plain matrix log-determinant.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// A PSD matrix is nonsingular iff its least eigenvalue exceeds this times
/// `max(1, λ_max)`.
pub const SINGULAR_TOL: f64 = 1e-10;
/// Eigenvalues below `-PSD_TOL · max(1, λ_max)` make a matrix non-PSD.
pub const PSD_TOL: f64 = 1e-9;
/// Slack on the operator norm of a contraction.
pub const CONTRACTION_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

/// A Hermitian matrix, stored exactly symmetrized.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    let mut out = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    for i in 0..out.nrows() {
        out[(i, i)].im = 0.0;
    }
    out
}

/// Spectral data of a Hermitian matrix.
struct Spectrum {
    values: DVector<f64>,
    vectors: CMatrix,
}

impl Spectrum {
    fn of(m: &CMatrix) -> Spectrum {
        let e = SymmetricEigen::new(m.clone());
        Spectrum {
            values: e.eigenvalues,
            vectors: e.eigenvectors,
        }
    }

    fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn scale(&self) -> f64 {
        self.max().max(1.0)
    }

    fn check_psd(&self) -> Result<()> {
        let min = self.min();
        if min < -PSD_TOL * self.scale() {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(())
    }

    fn is_nonsingular(&self) -> bool {
        self.values.is_empty() || self.min() > SINGULAR_TOL * self.scale()
    }

    fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let c = Complex64::new(f(self.values[j]), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= c;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

impl HermitianMatrix {
    /// Validates Hermitian symmetry within `1e-12·(1 + max|Q|)` and symmetrizes.
    pub fn new(m: CMatrix) -> Result<HermitianMatrix> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        let defect = max_abs(&(&m - m.adjoint()));
        if defect > HERMITIAN_TOL * (1.0 + max_abs(&m)) {
            return Err(Error::ShapeMismatch {
                expected: "Hermitian matrix".into(),
                found: format!("asymmetry {defect:e}"),
            });
        }
        Ok(HermitianMatrix { m: symmetrize(&m) })
    }

    /// Symmetrizes without validating; for matrices Hermitian by construction.
    pub fn from_raw(m: CMatrix) -> HermitianMatrix {
        HermitianMatrix { m: symmetrize(&m) }
    }

    pub fn identity(n: usize) -> HermitianMatrix {
        HermitianMatrix {
            m: CMatrix::identity(n, n),
        }
    }

    pub fn from_real(n: usize, entries: &[f64]) -> Result<HermitianMatrix> {
        HermitianMatrix::new(CMatrix::from_row_iterator(
            n,
            n,
            entries.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Spectrum::of(&self.m).values.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return f64::INFINITY;
        }
        Spectrum::of(&self.m).min()
    }

    /// PSD within [`PSD_TOL`].
    pub fn is_psd(&self) -> bool {
        Spectrum::of(&self.m).check_psd().is_ok()
    }

    /// PSD and least eigenvalue above [`SINGULAR_TOL`].
    pub fn is_nonsingular(&self) -> bool {
        let s = Spectrum::of(&self.m);
        s.check_psd().is_ok() && s.is_nonsingular()
    }

    /// Principal submatrix on the given positions, in the given order.
    pub fn principal(&self, idx: &[usize]) -> HermitianMatrix {
        HermitianMatrix {
            m: self.block(idx, idx),
        }
    }

    /// The (rows, cols) block.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self.m[(rows[i], cols[j])])
    }

    pub fn logdet(&self) -> Result<f64> {
        logdet(self)
    }
}

/// `log det Q`, or `-∞` when `Q` is singular.
pub fn logdet(q: &HermitianMatrix) -> Result<f64> {
    if q.dim() == 0 {
        return Ok(0.0);
    }
    let s = Spectrum::of(&q.m);
    s.check_psd()?;
    if !s.is_nonsingular() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(s.values.iter().map(|x| x.ln()).sum())
}

/// Inverse of a nonsingular PSD matrix, via its spectrum.
fn inverse_pd(q: &CMatrix) -> Result<CMatrix> {
    let s = Spectrum::of(q);
    s.check_psd()?;
    if !s.is_nonsingular() {
        return Err(Error::Singular {
            min_eigenvalue: s.min(),
        });
    }
    Ok(s.apply(|x| 1.0 / x))
}

/// `Q_αα − Q_αβ Q_ββ⁻¹ Q_βα`.
pub fn schur_complement(q: &HermitianMatrix, alpha: &[usize], beta: &[usize]) -> Result<HermitianMatrix> {
    let qaa = q.block(alpha, alpha);
    if beta.is_empty() {
        return Ok(HermitianMatrix::from_raw(qaa));
    }
    let qbb_inv = inverse_pd(&q.block(beta, beta))?;
    let qab = q.block(alpha, beta);
    Ok(HermitianMatrix::from_raw(&qaa - &qab * qbb_inv * qab.adjoint()))
}

/// `H_Q(α|β) = ½ log det` of the Schur complement; `β` may be empty.
pub fn cond_entropy(q: &HermitianMatrix, alpha: &[usize], beta: &[usize]) -> Result<f64> {
    Ok(0.5 * logdet(&schur_complement(q, alpha, beta)?)?)
}

/// `H_Q(α) = ½ log det Q_αα`.
pub fn entropy(q: &HermitianMatrix, alpha: &[usize]) -> Result<f64> {
    cond_entropy(q, alpha, &[])
}

/// `I_Q(α;β|γ) = H_Q(α|γ) − H_Q(α|β∪γ)`.
pub fn mutual_info(q: &HermitianMatrix, alpha: &[usize], beta: &[usize], gamma: &[usize]) -> Result<f64> {
    let outer = cond_entropy(q, alpha, gamma)?;
    let bg: Vec<usize> = beta.iter().chain(gamma).copied().collect();
    let inner = cond_entropy(q, alpha, &bg)?;
    if outer == f64::NEG_INFINITY {
        let spec = Spectrum::of(&schur_complement(q, alpha, gamma)?.m);
        return Err(Error::Singular {
            min_eigenvalue: spec.min(),
        });
    }
    Ok(outer - inner)
}

/// PSD square root; eigenvalues in `[-1e-10·max(1,‖Q‖), 0)` are clamped to zero.
pub fn sqrt_psd(q: &HermitianMatrix) -> Result<HermitianMatrix> {
    if q.dim() == 0 {
        return Ok(q.clone());
    }
    let s = Spectrum::of(&q.m);
    let min = s.min();
    if min < -SINGULAR_TOL * s.scale() {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(HermitianMatrix::from_raw(s.apply(|x| x.max(0.0).sqrt())))
}

/// `Q^{-1/2}` for nonsingular PSD `Q`.
pub fn inv_sqrt_pd(q: &HermitianMatrix) -> Result<HermitianMatrix> {
    if q.dim() == 0 {
        return Ok(q.clone());
    }
    let s = Spectrum::of(&q.m);
    s.check_psd()?;
    if !s.is_nonsingular() {
        return Err(Error::Singular {
            min_eigenvalue: s.min(),
        });
    }
    Ok(HermitianMatrix::from_raw(s.apply(|x| 1.0 / x.sqrt())))
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.ncols() == 1 || m.nrows() == 1 {
        return m.norm();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// A complex matrix of operator norm at most `1 + 1e-10`.
#[derive(Clone, Debug, PartialEq)]
pub struct Contraction {
    m: CMatrix,
    norm: f64,
}

impl Contraction {
    pub fn new(m: CMatrix) -> Result<Contraction> {
        let norm = operator_norm(&m);
        if !norm.is_finite() || norm > 1.0 + CONTRACTION_TOL {
            return Err(Error::NotContraction(norm));
        }
        Ok(Contraction { m, norm })
    }

    pub fn zeros(rows: usize, cols: usize) -> Contraction {
        Contraction {
            m: CMatrix::zeros(rows, cols),
            norm: 0.0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Operator norm below `1 − 1e-10`.
    pub fn is_strict(&self) -> bool {
        self.norm < 1.0 - CONTRACTION_TOL
    }

    /// `log det(I − C*C)`, with `-∞` at the boundary.
    pub fn defect_logdet(&self) -> f64 {
        let n = self.cols();
        let d = CMatrix::identity(n, n) - self.m.adjoint() * &self.m;
        logdet(&HermitianMatrix::from_raw(d)).unwrap_or(f64::NEG_INFINITY)
    }
}

/// `C = Q11^{-1/2} R Q22^{-1/2}` for the block matrix `[[Q11, R], [R*, Q22]]`.
pub fn two_block_contraction(q11: &HermitianMatrix, r: &CMatrix, q22: &HermitianMatrix) -> Result<Contraction> {
    if r.nrows() != q11.dim() || r.ncols() != q22.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", q11.dim(), q22.dim()),
            found: format!("{}x{}", r.nrows(), r.ncols()),
        });
    }
    let a = inv_sqrt_pd(q11)?;
    let b = inv_sqrt_pd(q22)?;
    Contraction::new(a.matrix() * r * b.matrix())
}

/// A 3×3 block matrix with the corner block `R = Q13` missing.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialThreeBlock {
    pub q11: HermitianMatrix,
    pub q12: CMatrix,
    pub q22: HermitianMatrix,
    pub q23: CMatrix,
    pub q33: HermitianMatrix,
}

/// Quantities shared by completion and extraction.
struct Pivots {
    center: CMatrix,
    s11_sqrt: HermitianMatrix,
    s33_sqrt: HermitianMatrix,
}

impl PartialThreeBlock {
    /// Block sizes `(k, ℓ, m)`.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.q11.dim(), self.q22.dim(), self.q33.dim())
    }

    fn check_shapes(&self) -> Result<()> {
        let (k, l, m) = self.sizes();
        let ok = self.q12.nrows() == k && self.q12.ncols() == l && self.q23.nrows() == l && self.q23.ncols() == m;
        if !ok {
            return Err(Error::ShapeMismatch {
                expected: format!("Q12 {k}x{l}, Q23 {l}x{m}"),
                found: format!(
                    "Q12 {}x{}, Q23 {}x{}",
                    self.q12.nrows(),
                    self.q12.ncols(),
                    self.q23.nrows(),
                    self.q23.ncols()
                ),
            });
        }
        Ok(())
    }

    /// The two Schur complements `S11`, `S33` and the central corner
    /// `Q12 Q22⁻¹ Q23`.
    fn schurs(&self) -> Result<(CMatrix, HermitianMatrix, HermitianMatrix)> {
        self.check_shapes()?;
        let (k, l, m) = self.sizes();
        if l == 0 {
            return Ok((CMatrix::zeros(k, m), self.q11.clone(), self.q33.clone()));
        }
        let inv = inverse_pd(self.q22.matrix())?;
        let center = &self.q12 * &inv * &self.q23;
        let s11 = HermitianMatrix::from_raw(self.q11.matrix() - &self.q12 * &inv * self.q12.adjoint());
        let s33 = HermitianMatrix::from_raw(self.q33.matrix() - self.q23.adjoint() * &inv * &self.q23);
        Ok((center, s11, s33))
    }

    fn pivots(&self) -> Result<Pivots> {
        let (center, s11, s33) = self.schurs()?;
        Ok(Pivots {
            center,
            s11_sqrt: sqrt_psd(&s11)?,
            s33_sqrt: sqrt_psd(&s33)?,
        })
    }

    /// Assembles the full matrix for a given corner `R`.
    pub fn assemble(&self, r: &CMatrix) -> HermitianMatrix {
        let (k, l, m) = self.sizes();
        let n = k + l + m;
        let mut q = CMatrix::zeros(n, n);
        q.view_mut((0, 0), (k, k)).copy_from(self.q11.matrix());
        q.view_mut((0, k), (k, l)).copy_from(&self.q12);
        q.view_mut((k, 0), (l, k)).copy_from(&self.q12.adjoint());
        q.view_mut((k, k), (l, l)).copy_from(self.q22.matrix());
        q.view_mut((k, k + l), (l, m)).copy_from(&self.q23);
        q.view_mut((k + l, k), (m, l)).copy_from(&self.q23.adjoint());
        q.view_mut((k + l, k + l), (m, m)).copy_from(self.q33.matrix());
        q.view_mut((0, k + l), (k, m)).copy_from(r);
        q.view_mut((k + l, 0), (m, k)).copy_from(&r.adjoint());
        HermitianMatrix::from_raw(q)
    }

    /// Splits a full `(k+ℓ+m)`-square matrix into its partial data and corner.
    pub fn split(q: &HermitianMatrix, k: usize, l: usize, m: usize) -> Result<(PartialThreeBlock, CMatrix)> {
        if q.dim() != k + l + m {
            return Err(Error::ShapeMismatch {
                expected: format!("dimension {}", k + l + m),
                found: format!("dimension {}", q.dim()),
            });
        }
        let a = q.matrix();
        let part = PartialThreeBlock {
            q11: HermitianMatrix::from_raw(a.view((0, 0), (k, k)).into_owned()),
            q12: a.view((0, k), (k, l)).into_owned(),
            q22: HermitianMatrix::from_raw(a.view((k, k), (l, l)).into_owned()),
            q23: a.view((k, k + l), (l, m)).into_owned(),
            q33: HermitianMatrix::from_raw(a.view((k + l, k + l), (m, m)).into_owned()),
        };
        Ok((part, a.view((0, k + l), (k, m)).into_owned()))
    }
}

/// Completes the corner as `R = Q12 Q22⁻¹ Q23 + S11^{1/2} C S33^{1/2}`.
/// `C = 0` gives the central, determinant-maximizing completion.
pub fn three_block_complete(p: &PartialThreeBlock, c: &Contraction) -> Result<HermitianMatrix> {
    let (k, _, m) = p.sizes();
    if c.rows() != k || c.cols() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("contraction {k}x{m}"),
            found: format!("{}x{}", c.rows(), c.cols()),
        });
    }
    let piv = p.pivots()?;
    let r = piv.center + piv.s11_sqrt.matrix() * c.matrix() * piv.s33_sqrt.matrix();
    Ok(p.assemble(&r))
}

/// Inverse of [`three_block_complete`] on partially nonsingular matrices.
pub fn three_block_extract(
    q: &HermitianMatrix,
    k: usize,
    l: usize,
    m: usize,
) -> Result<(PartialThreeBlock, Contraction)> {
    let (part, r) = PartialThreeBlock::split(q, k, l, m)?;
    let (center, s11, s33) = part.schurs()?;
    let a = inv_sqrt_pd(&s11)?;
    let b = inv_sqrt_pd(&s33)?;
    let c = Contraction::new(a.matrix() * (r - center) * b.matrix())?;
    Ok((part, c))
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

/// Serde adapter: matrices as row-major arrays of `{re, im}`.
pub mod matrix_json {
    use super::*;

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<CMatrix> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of length {ncols}"),
                found: "ragged rows".into(),
            });
        }
        Ok(CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<ComplexJson>> = to_rows(m)
            .into_iter()
            .map(|r| r.into_iter().map(|z| ComplexJson { re: z.re, im: z.im }).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows: Vec<Vec<ComplexJson>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
            .collect();
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: a complex number as `{re, im}`.
pub mod complex_json {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        ComplexJson { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        let z = ComplexJson::deserialize(d)?;
        Ok(Complex64::new(z.re, z.im))
    }
}

/// Serde adapter: a list of complex numbers as `[{re, im}, …]`.
pub mod complex_vec_json {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let out: Vec<ComplexJson> = v.iter().map(|z| ComplexJson { re: z.re, im: z.im }).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Complex64>, D::Error> {
        let v: Vec<ComplexJson> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
    }
}
