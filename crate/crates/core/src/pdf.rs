//! Matrix-valued positive definite functions on free groups and their
//! restrictions to grounded sets.
//!
//! A [`PdfSpec`] describes a function `φ: Γ → M_k` by a finite recipe. Its
//! restriction to an ordered set `F` is the block matrix with `(g, h)` block
//! `φ(g⁻¹h)`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegroup::{GroundedSet, Word};
use crate::groupalg::GroupAlgebraElement;
use crate::matent::{self, complex_vec_json, matrix_json, CMatrix, HermitianMatrix, PSD_TOL};

/// Residual allowed in the translation symmetry of a partial function.
pub const TOEPLITZ_TOL: f64 = 1e-10;

fn one() -> usize {
    1
}

/// A recipe for a positive definite function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PdfSpec {
    /// `φ(g) = δ_{g,e} I_k`.
    Regular {
        rank: u32,
        #[serde(default = "one")]
        k: usize,
    },
    /// Scalar and multiplicative along reduced words, with `φ(s) = a_s` and
    /// `φ(s⁻¹) = conj(a_s)`.
    Haagerup {
        rank: u32,
        #[serde(default = "one")]
        k: usize,
        #[serde(with = "complex_vec_json")]
        params: Vec<Complex64>,
    },
    /// `φ_t(e) = I_k`, `φ_t(g) = t φ(g)` otherwise.
    Mollified { t: f64, base: Box<PdfSpec> },
    /// `φ(g) = (a* ∗ δ_g ∗ a)(e) / (a* ∗ a)(e)`.
    Induced {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<u32>,
        element: GroupAlgebraElement,
    },
    /// Block-diagonal direct sum.
    #[serde(rename = "diag")]
    DiagonalJoin { parts: Vec<PdfSpec> },
    /// A table of values on a ball.
    Explicit(ExplicitPdf),
}

/// Values of `φ` on the ball of a given radius.
///
/// A word whose inverse is listed takes the adjoint of that value; a word
/// with neither listed takes the zero matrix, and a missing identity takes
/// `I_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExplicitJson", into = "ExplicitJson")]
pub struct ExplicitPdf {
    rank: u32,
    k: usize,
    radius: usize,
    table: HashMap<Vec<i32>, CMatrix>,
}

#[derive(Clone, Serialize, Deserialize)]
struct ExplicitEntry {
    word: Vec<i32>,
    #[serde(with = "matrix_json")]
    matrix: CMatrix,
}

#[derive(Clone, Serialize, Deserialize)]
struct ExplicitJson {
    rank: u32,
    k: usize,
    radius: usize,
    values: Vec<ExplicitEntry>,
}

impl TryFrom<ExplicitJson> for ExplicitPdf {
    type Error = Error;

    fn try_from(j: ExplicitJson) -> Result<ExplicitPdf> {
        ExplicitPdf::new(j.rank, j.k, j.radius, j.values.into_iter().map(|e| (e.word, e.matrix)))
    }
}

impl From<ExplicitPdf> for ExplicitJson {
    fn from(p: ExplicitPdf) -> ExplicitJson {
        let mut values: Vec<ExplicitEntry> = p
            .table
            .into_iter()
            .map(|(word, matrix)| ExplicitEntry { word, matrix })
            .collect();
        values.sort_by(|a, b| a.word.len().cmp(&b.word.len()).then_with(|| a.word.cmp(&b.word)));
        ExplicitJson {
            rank: p.rank,
            k: p.k,
            radius: p.radius,
            values,
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

impl ExplicitPdf {
    pub fn new(
        rank: u32,
        k: usize,
        radius: usize,
        values: impl IntoIterator<Item = (Vec<i32>, CMatrix)>,
    ) -> Result<ExplicitPdf> {
        if k == 0 {
            return Err(Error::InvalidParameter("block size k must be positive".into()));
        }
        let mut table: HashMap<Vec<i32>, CMatrix> = HashMap::new();
        for (letters, m) in values {
            let w = Word::new(rank, &letters)?;
            if w.len() > radius {
                return Err(Error::ExplicitOutOfRange { word: letters, radius });
            }
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::ShapeMismatch {
                    expected: format!("{k}x{k}"),
                    found: format!("{}x{}", m.nrows(), m.ncols()),
                });
            }
            if table.insert(w.letters().to_vec(), m).is_some() {
                return Err(Error::InvalidParameter(format!("word {w} listed twice")));
            }
        }
        for (letters, m) in &table {
            let inv: Vec<i32> = letters.iter().rev().map(|l| -l).collect();
            if let Some(mi) = table.get(&inv) {
                let defect = max_abs(&(mi - m.adjoint()));
                if defect > 1e-12 * (1.0 + max_abs(m)) {
                    return Err(Error::InvalidParameter(format!(
                        "values at {letters:?} and its inverse are not adjoint (defect {defect:e})"
                    )));
                }
            }
        }
        Ok(ExplicitPdf { rank, k, radius, table })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    fn value(&self, g: &Word) -> Result<CMatrix> {
        if g.len() > self.radius {
            return Err(Error::ExplicitOutOfRange {
                word: g.letters().to_vec(),
                radius: self.radius,
            });
        }
        if let Some(m) = self.table.get(g.letters()) {
            return Ok(m.clone());
        }
        if let Some(m) = self.table.get(g.inverse().letters()) {
            return Ok(m.adjoint());
        }
        if g.is_identity() {
            return Ok(CMatrix::identity(self.k, self.k));
        }
        Ok(CMatrix::zeros(self.k, self.k))
    }

    fn conjugate_by(&self, s: &CMatrix) -> ExplicitPdf {
        ExplicitPdf {
            rank: self.rank,
            k: self.k,
            radius: self.radius,
            table: self.table.iter().map(|(w, m)| (w.clone(), s * m * s)).collect(),
        }
    }
}

fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    out
}

impl PdfSpec {
    pub fn regular(rank: u32, k: usize) -> PdfSpec {
        PdfSpec::Regular { rank, k }
    }

    /// Haagerup function with real parameters.
    pub fn haagerup(params: &[f64]) -> PdfSpec {
        PdfSpec::Haagerup {
            rank: params.len() as u32,
            k: 1,
            params: params.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        }
    }

    pub fn mollified(t: f64, base: PdfSpec) -> PdfSpec {
        PdfSpec::Mollified {
            t,
            base: Box::new(base),
        }
    }

    pub fn diag(parts: Vec<PdfSpec>) -> PdfSpec {
        PdfSpec::DiagonalJoin { parts }
    }

    /// Parses and validates a JSON spec.
    pub fn from_json(s: &str) -> Result<PdfSpec> {
        let spec: PdfSpec = serde_json::from_str(s)?;
        let spec = spec.canonical()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("specs always serialize")
    }

    /// Re-ranks induced elements to the rank of the spec.
    fn canonical(self) -> Result<PdfSpec> {
        Ok(match self {
            PdfSpec::Induced { rank, element } => {
                let r = rank.unwrap_or(element.rank());
                if r < element.rank() {
                    return Err(Error::RankMismatch(r, element.rank()));
                }
                PdfSpec::Induced {
                    rank: Some(r),
                    element: element.with_rank(r)?,
                }
            }
            PdfSpec::Mollified { t, base } => PdfSpec::Mollified {
                t,
                base: Box::new(base.canonical()?),
            },
            PdfSpec::DiagonalJoin { parts } => PdfSpec::DiagonalJoin {
                parts: parts.into_iter().map(PdfSpec::canonical).collect::<Result<_>>()?,
            },
            other => other,
        })
    }

    pub fn rank(&self) -> u32 {
        match self {
            PdfSpec::Regular { rank, .. } | PdfSpec::Haagerup { rank, .. } => *rank,
            PdfSpec::Mollified { base, .. } => base.rank(),
            PdfSpec::Induced { rank, element } => rank.unwrap_or(element.rank()),
            PdfSpec::DiagonalJoin { parts } => parts.first().map_or(1, PdfSpec::rank),
            PdfSpec::Explicit(e) => e.rank,
        }
    }

    /// Block size.
    pub fn k(&self) -> usize {
        match self {
            PdfSpec::Regular { k, .. } => *k,
            PdfSpec::Haagerup { .. } | PdfSpec::Induced { .. } => 1,
            PdfSpec::Mollified { base, .. } => base.k(),
            PdfSpec::DiagonalJoin { parts } => parts.iter().map(PdfSpec::k).sum(),
            PdfSpec::Explicit(e) => e.k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PdfSpec::Regular { rank, k } => {
                if *rank == 0 {
                    return Err(Error::ZeroRank);
                }
                if *k == 0 {
                    return Err(Error::InvalidParameter("block size k must be positive".into()));
                }
            }
            PdfSpec::Haagerup { rank, k, params } => {
                if *rank == 0 {
                    return Err(Error::ZeroRank);
                }
                if *k != 1 {
                    return Err(Error::InvalidParameter("Haagerup functions are scalar (k = 1)".into()));
                }
                if params.len() != *rank as usize {
                    return Err(Error::InvalidParameter(format!(
                        "expected {rank} Haagerup parameters, found {}",
                        params.len()
                    )));
                }
                if let Some(a) = params.iter().find(|a| a.norm().is_nan() || a.norm() > 1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "Haagerup parameter {a} lies outside the closed unit disk"
                    )));
                }
            }
            PdfSpec::Mollified { t, base } => {
                if !(*t > 0.0 && *t <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "mollification t = {t} is outside (0, 1]"
                    )));
                }
                base.validate()?;
            }
            PdfSpec::Induced { rank, element } => {
                if element.is_zero() {
                    return Err(Error::ZeroElement);
                }
                if let Some(r) = rank {
                    if *r != element.rank() {
                        return Err(Error::RankMismatch(*r, element.rank()));
                    }
                }
            }
            PdfSpec::DiagonalJoin { parts } => {
                let first = parts
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("diagonal join needs at least one part".into()))?;
                for p in parts {
                    p.validate()?;
                    if p.rank() != first.rank() {
                        return Err(Error::RankMismatch(first.rank(), p.rank()));
                    }
                }
            }
            PdfSpec::Explicit(e) => {
                if e.rank == 0 {
                    return Err(Error::ZeroRank);
                }
            }
        }
        Ok(())
    }

    /// `φ(g)` as a `k×k` matrix.
    pub fn evaluate(&self, g: &Word) -> Result<CMatrix> {
        if g.rank() != self.rank() {
            return Err(Error::RankMismatch(self.rank(), g.rank()));
        }
        match self {
            PdfSpec::Regular { k, .. } => Ok(if g.is_identity() {
                CMatrix::identity(*k, *k)
            } else {
                CMatrix::zeros(*k, *k)
            }),
            PdfSpec::Haagerup { params, .. } => {
                // Π_s a_s^{p_s} conj(a_s)^{m_s}, evaluated so that g and g⁻¹
                // give exact conjugates
                let mut counts = vec![(0i32, 0i32); params.len()];
                for &l in g.letters() {
                    let c = &mut counts[l.unsigned_abs() as usize - 1];
                    if l > 0 {
                        c.0 += 1;
                    } else {
                        c.1 += 1;
                    }
                }
                let mut z = Complex64::new(1.0, 0.0);
                for (a, &(p, m)) in params.iter().zip(&counts) {
                    if p + m == 0 {
                        continue;
                    }
                    if a.norm() > 1.0 + 1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "Haagerup parameter {a} lies outside the closed unit disk"
                        )));
                    }
                    z *= a.powi(p) * a.powi(m).conj();
                }
                Ok(CMatrix::from_element(1, 1, z))
            }
            PdfSpec::Mollified { t, base } => {
                if g.is_identity() {
                    let k = base.k();
                    Ok(CMatrix::identity(k, k))
                } else {
                    Ok(base.evaluate(g)? * Complex64::new(*t, 0.0))
                }
            }
            PdfSpec::Induced { element, .. } => {
                let z = if element.rank() == g.rank() {
                    element.induced_value(g)?
                } else {
                    element.with_rank(g.rank())?.induced_value(g)?
                };
                Ok(CMatrix::from_element(1, 1, z))
            }
            PdfSpec::DiagonalJoin { parts } => {
                let blocks = parts.iter().map(|p| p.evaluate(g)).collect::<Result<Vec<_>>>()?;
                Ok(block_diag(&blocks))
            }
            PdfSpec::Explicit(e) => e.value(g),
        }
    }

    /// The block matrix `[φ(g⁻¹h)]` over an arbitrary ordered list of words,
    /// without a positivity check.
    pub fn gram(&self, words: &[Word]) -> Result<HermitianMatrix> {
        let k = self.k();
        let n = words.len();
        let mut memo: HashMap<Word, CMatrix> = HashMap::new();
        let mut q = CMatrix::zeros(k * n, k * n);
        for (i, gi) in words.iter().enumerate() {
            let inv = gi.inverse();
            for (j, gj) in words.iter().enumerate().skip(i) {
                let d = inv.mul_unchecked(gj);
                let v = match memo.get(&d) {
                    Some(v) => v.clone(),
                    None => {
                        let v = self.evaluate(&d)?;
                        memo.insert(d, v.clone());
                        v
                    }
                };
                q.view_mut((k * i, k * j), (k, k)).copy_from(&v);
                if i != j {
                    q.view_mut((k * j, k * i), (k, k)).copy_from(&v.adjoint());
                }
            }
        }
        Ok(HermitianMatrix::from_raw(q))
    }

    /// `φ_(F)`, checked to be PSD.
    pub fn restrict(&self, f: &GroundedSet) -> Result<PartialPdf> {
        if f.rank() != self.rank() {
            return Err(Error::RankMismatch(self.rank(), f.rank()));
        }
        let q = self.gram(f.elements())?;
        check_positive(&q)?;
        Ok(PartialPdf {
            set: f.clone(),
            k: self.k(),
            q,
        })
    }
}

fn check_positive(q: &HermitianMatrix) -> Result<()> {
    let ev = q.eigenvalues();
    if let (Some(&min), Some(&max)) = (ev.first(), ev.last()) {
        if min < -PSD_TOL * max.max(1.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
    }
    Ok(())
}

/// Log-determinant of `φ(e)` together with the unital function
/// `φ(e)^{-1/2} φ φ(e)^{-1/2}`; the latter is `None` when `φ(e)` is singular.
pub fn normalize(spec: &PdfSpec) -> Result<(f64, Option<PdfSpec>)> {
    let rank = spec.rank();
    let phi_e = HermitianMatrix::new(spec.evaluate(&Word::identity(rank))?)?;
    let h = matent::logdet(&phi_e)?;
    if h == f64::NEG_INFINITY {
        return Ok((h, None));
    }
    let out = match spec {
        PdfSpec::Explicit(e) => {
            let s = matent::inv_sqrt_pd(&phi_e)?;
            PdfSpec::Explicit(e.conjugate_by(s.matrix()))
        }
        PdfSpec::DiagonalJoin { parts } => {
            let mut normalized = Vec::with_capacity(parts.len());
            for p in parts {
                let (_, q) = normalize(p)?;
                normalized.push(q.expect("parts of a nonsingular block diagonal are nonsingular"));
            }
            PdfSpec::DiagonalJoin { parts: normalized }
        }
        other => other.clone(),
    };
    Ok((h, Some(out)))
}

/// A partial positive definite function `φ_(F)` over an ordered grounded set.
#[derive(Clone, Debug)]
pub struct PartialPdf {
    set: GroundedSet,
    k: usize,
    q: HermitianMatrix,
}

impl PartialPdf {
    /// Validates shape, unital diagonal, translation symmetry and positivity.
    pub fn new(set: GroundedSet, k: usize, q: HermitianMatrix) -> Result<PartialPdf> {
        let p = PartialPdf::new_unchecked(set, k, q)?;
        let n = p.set.len();
        for i in 0..n {
            let d = p.block(i, i) - CMatrix::identity(k, k);
            if max_abs(&d) > TOEPLITZ_TOL {
                return Err(Error::InvalidParameter(format!(
                    "diagonal block {i} differs from the identity by {:e}",
                    max_abs(&d)
                )));
            }
        }
        let res = p.toeplitz_residual();
        if res > TOEPLITZ_TOL {
            return Err(Error::ConsistencyViolation(res));
        }
        check_positive(&p.q)?;
        Ok(p)
    }

    /// Checks only the shape.
    pub(crate) fn new_unchecked(set: GroundedSet, k: usize, q: HermitianMatrix) -> Result<PartialPdf> {
        if q.dim() != k * set.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("dimension {}", k * set.len()),
                found: format!("dimension {}", q.dim()),
            });
        }
        Ok(PartialPdf { set, k, q })
    }

    pub fn set(&self) -> &GroundedSet {
        &self.set
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.q
    }

    /// The `(i, j)` block, indexed by positions in the set.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        let k = self.k;
        self.q.matrix().view((k * i, k * j), (k, k)).into_owned()
    }

    /// Scalar indices of the blocks for the given words.
    pub fn indices(&self, words: &[Word]) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(words.len() * self.k);
        for w in words {
            let p = self.set.position(w)?;
            out.extend(p * self.k..(p + 1) * self.k);
        }
        Some(out)
    }

    /// Largest deviation from `Q(g1,h1) = Q(g2,h2)` whenever `g1⁻¹h1 = g2⁻¹h2`.
    pub fn toeplitz_residual(&self) -> f64 {
        let els = self.set.elements();
        let mut first: HashMap<Word, CMatrix> = HashMap::new();
        let mut worst: f64 = 0.0;
        for (i, g) in els.iter().enumerate() {
            let gi = g.inverse();
            for (j, h) in els.iter().enumerate() {
                let b = self.block(i, j);
                match first.get(&gi.mul_unchecked(h)) {
                    Some(v) => worst = worst.max(max_abs(&(v - &b))),
                    None => {
                        first.insert(gi.mul_unchecked(h), b);
                    }
                }
            }
        }
        worst
    }

    pub fn is_nonsingular(&self) -> bool {
        self.q.is_nonsingular()
    }

    pub fn logdet(&self) -> Result<f64> {
        matent::logdet(&self.q)
    }

    /// The restriction to a grounded subset.
    pub fn restrict_to(&self, sub: &GroundedSet) -> Result<PartialPdf> {
        let idx = self
            .indices(sub.elements())
            .ok_or_else(|| Error::InvalidParameter("subset is not contained in the domain".into()))?;
        Ok(PartialPdf {
            set: sub.clone(),
            k: self.k,
            q: self.q.principal(&idx),
        })
    }

    /// `{rank, k, set, matrix}` with the set in block order.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            rank: u32,
            k: usize,
            set: &'a [Word],
            #[serde(with = "matrix_json")]
            matrix: CMatrix,
        }
        let out = Out {
            rank: self.set.rank(),
            k: self.k,
            set: self.set.elements(),
            matrix: self.q.matrix().clone(),
        };
        serde_json::to_string(&out).expect("partial functions always serialize")
    }
}
