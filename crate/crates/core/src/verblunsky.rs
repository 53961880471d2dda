//! Verblunsky coefficients of partial positive definite functions along
//! grounded enlargements.
//!
//! For an enlargement `F → F ∪ g` in direction `s`, the blocks are ordered as
//! `F ∖ sF`, then `F ∩ sF`, then `g`. The entries `Q(h, g)` for `h ∈ F ∩ sF`
//! are fixed by translation, and the coefficient is the `k|F∖sF| × k`
//! contraction parametrizing the remaining column.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegroup::{
    enlargement_direction, shift_difference, shift_overlap, Enumeration, GroundedSet, LetterOrder, Word,
};
use crate::matent::{self, matrix_json, CMatrix, Contraction, HermitianMatrix, PartialThreeBlock};
use crate::pdf::{PartialPdf, PdfSpec};

/// Tolerance on the translation-forced entries of an enlarged function.
pub const CONSISTENCY_TOL: f64 = 1e-10;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn singular_of(q: &HermitianMatrix) -> Error {
    Error::Singular {
        min_eigenvalue: q.min_eigenvalue(),
    }
}

/// Layout of one enlargement.
struct Layout {
    diff: Vec<Word>,
    overlap: Vec<Word>,
}

impl Layout {
    fn of(f: &GroundedSet, s: i32) -> Layout {
        Layout {
            diff: shift_difference(f, s),
            overlap: shift_overlap(f, s),
        }
    }
}

/// Shape `(rows, cols)` of the coefficient for enlarging `F` by `g`.
pub fn coefficient_shape(f: &GroundedSet, g: &Word, k: usize) -> Result<(usize, usize)> {
    let s = enlargement_direction(f, g)?;
    Ok((k * shift_difference(f, s).len(), k))
}

/// The Verblunsky coefficient of `q` (over `F ∪ g`) for the enlargement
/// that adds `g`.
pub fn extract_coefficient(q: &PartialPdf, g: &Word) -> Result<Contraction> {
    let pos = q
        .set()
        .position(g)
        .ok_or_else(|| Error::NotAnEnlargement(format!("{g} is not in the domain")))?;
    let mut rest = q.set().elements().to_vec();
    rest.remove(pos);
    let f = GroundedSet::new(q.set().rank(), rest)?;
    let s = enlargement_direction(&f, g)?;
    let k = q.k();
    let lay = Layout::of(&f, s);

    let qf = q
        .matrix()
        .principal(&q.indices(f.elements()).expect("F lies in the domain"));
    if !qf.is_nonsingular() {
        return Err(singular_of(&qf));
    }

    let gi = q.indices(std::slice::from_ref(g)).expect("g lies in the domain");
    let parent = g.parent().expect("enlargements are not the identity");
    let pi = q.indices(std::slice::from_ref(&parent)).expect("parent lies in F");
    let mut worst: f64 = 0.0;
    for h in &lay.overlap {
        let hi = q.indices(std::slice::from_ref(h)).expect("h lies in F");
        let shifted = q.indices(&[h.left_mul(-s)]).expect("s⁻¹h lies in F for h ∈ F ∩ sF");
        let lhs = q.matrix().block(&hi, &gi);
        let rhs = q.matrix().block(&shifted, &pi);
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    if worst > CONSISTENCY_TOL {
        return Err(Error::ConsistencyViolation(worst));
    }

    let mut order = q.indices(&lay.diff).expect("F ∖ sF lies in F");
    order.extend(q.indices(&lay.overlap).expect("F ∩ sF lies in F"));
    order.extend(gi);
    let permuted = q.matrix().principal(&order);
    let (_, c) = matent::three_block_extract(&permuted, k * lay.diff.len(), k * lay.overlap.len(), k)?;
    Ok(c)
}

/// The unique extension of `q` (over `F`) to `F ∪ g` with coefficient `c`.
pub fn extend_with_coefficient(q: &PartialPdf, g: &Word, c: &Contraction) -> Result<PartialPdf> {
    let f = q.set();
    let s = enlargement_direction(f, g)?;
    let k = q.k();
    let lay = Layout::of(f, s);
    let expected = (k * lay.diff.len(), k);
    if (c.rows(), c.cols()) != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", c.rows(), c.cols()),
        });
    }
    if !q.matrix().is_nonsingular() {
        return Err(singular_of(q.matrix()));
    }

    let m = q.matrix();
    let di = q.indices(&lay.diff).expect("F ∖ sF lies in F");
    let oi = q.indices(&lay.overlap).expect("F ∩ sF lies in F");
    let parent = g.parent().expect("enlargements are not the identity");
    let pi = q.indices(std::slice::from_ref(&parent)).expect("parent lies in F");
    let shifted: Vec<Word> = lay.overlap.iter().map(|h| h.left_mul(-s)).collect();
    let si = q.indices(&shifted).expect("s⁻¹(F ∩ sF) lies in F");
    let q23 = m.block(&si, &pi);

    let part = PartialThreeBlock {
        q11: m.principal(&di),
        q12: m.block(&di, &oi),
        q22: m.principal(&oi),
        q23: q23.clone(),
        q33: HermitianMatrix::identity(k),
    };
    let full = matent::three_block_complete(&part, c)?;
    let r = full.matrix().view((0, di.len() + oi.len()), (di.len(), k)).into_owned();

    let n = m.dim();
    let mut out = CMatrix::zeros(n + k, n + k);
    out.view_mut((0, 0), (n, n)).copy_from(m.matrix());
    let mut column = CMatrix::zeros(n, k);
    for (row, &i) in di.iter().enumerate() {
        column.row_mut(i).copy_from(&r.row(row));
    }
    for (row, &i) in oi.iter().enumerate() {
        column.row_mut(i).copy_from(&q23.row(row));
    }
    out.view_mut((0, n), (n, k)).copy_from(&column);
    out.view_mut((n, 0), (k, n)).copy_from(&column.adjoint());
    out.view_mut((n, n), (k, k)).copy_from(&CMatrix::identity(k, k));

    let (set, _) = f.enlarge(g)?;
    PartialPdf::new_unchecked(set, k, HermitianMatrix::from_raw(out))
}

/// Coefficients `C_0, …, C_{N-1}` of `spec` along the first `N` steps of `en`.
pub fn coefficient_sequence(spec: &PdfSpec, en: &Enumeration, steps: usize) -> Result<Vec<Contraction>> {
    if steps >= en.len() {
        return Err(Error::InvalidParameter(format!(
            "enumeration has {} elements, {steps} steps need {}",
            en.len(),
            steps + 1
        )));
    }
    let full = spec.restrict(&en.prefix(steps))?;
    coefficients_of(&full, en, steps)
}

/// Coefficients of an already restricted function whose domain begins with
/// the first `steps + 1` elements of `en`.
pub fn coefficients_of(full: &PartialPdf, en: &Enumeration, steps: usize) -> Result<Vec<Contraction>> {
    let k = full.k();
    let mut out = Vec::with_capacity(steps);
    for step in en.steps().into_iter().take(steps) {
        let set = en.prefix(step.index + 1);
        let q = full.restrict_to(&set)?;
        match extract_coefficient(&q, &step.new_element) {
            Ok(c) => out.push(c),
            Err(Error::Singular { .. }) => return Err(Error::SingularPrefix { step: step.index }),
            Err(e) => return Err(e),
        }
        debug_assert_eq!(out.last().map(|c| c.cols()), Some(k));
    }
    Ok(out)
}

/// The partial function over `F_N` whose coefficients along `en` are `coeffs`.
pub fn reconstruct(k: usize, coeffs: &[Contraction], en: &Enumeration) -> Result<PartialPdf> {
    if coeffs.len() >= en.len() {
        return Err(Error::InvalidParameter(format!(
            "{} coefficients need an enumeration of {} elements",
            coeffs.len(),
            coeffs.len() + 1
        )));
    }
    let mut q = PartialPdf::new_unchecked(GroundedSet::singleton(en.rank()), k, HermitianMatrix::identity(k))?;
    for (step, c) in en.steps().iter().zip(coeffs) {
        q = match extend_with_coefficient(&q, &step.new_element, c) {
            Err(Error::Singular { .. }) => return Err(Error::SingularPrefix { step: step.index }),
            other => other?,
        };
    }
    Ok(q)
}

/// One serialized coefficient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientJson {
    pub rows: usize,
    pub cols: usize,
    #[serde(with = "matrix_json")]
    pub matrix: CMatrix,
}

/// A coefficient sequence with the enumeration it refers to.
#[derive(Clone, Debug, Serialize)]
pub struct VerblunskySequence {
    pub rank: u32,
    pub k: usize,
    pub letter_order: Vec<i32>,
    pub enumeration: Vec<Word>,
    pub coefficients: Vec<CoefficientJson>,
}

#[derive(Deserialize)]
struct VerblunskySequenceRaw {
    rank: u32,
    k: usize,
    letter_order: Vec<i32>,
    enumeration: Vec<Vec<i32>>,
    coefficients: Vec<CoefficientJson>,
}

impl VerblunskySequence {
    pub fn new(k: usize, en: &Enumeration, coeffs: &[Contraction]) -> VerblunskySequence {
        VerblunskySequence {
            rank: en.rank(),
            k,
            letter_order: en.letter_order().letters().to_vec(),
            enumeration: en.words()[..=coeffs.len()].to_vec(),
            coefficients: coeffs
                .iter()
                .map(|c| CoefficientJson {
                    rows: c.rows(),
                    cols: c.cols(),
                    matrix: c.matrix().clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<VerblunskySequence> {
        let raw: VerblunskySequenceRaw = serde_json::from_str(s)?;
        let enumeration = raw
            .enumeration
            .iter()
            .map(|l| Word::new(raw.rank, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(VerblunskySequence {
            rank: raw.rank,
            k: raw.k,
            letter_order: raw.letter_order,
            enumeration,
            coefficients: raw.coefficients,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sequences always serialize")
    }

    /// Validated enumeration and contractions, with declared shapes checked.
    pub fn parts(&self) -> Result<(Enumeration, Vec<Contraction>)> {
        let order = LetterOrder::new(self.rank, self.letter_order.clone())?;
        let en = Enumeration::grounded(&order, self.enumeration.clone())?;
        let coeffs = self
            .coefficients
            .iter()
            .map(|c| {
                if (c.matrix.nrows(), c.matrix.ncols()) != (c.rows, c.cols) {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{}x{}", c.rows, c.cols),
                        found: format!("{}x{}", c.matrix.nrows(), c.matrix.ncols()),
                    });
                }
                Contraction::new(c.matrix.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((en, coeffs))
    }
}
