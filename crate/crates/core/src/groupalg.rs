//! Finitely supported elements of the complex group algebra of a free group.

use std::collections::HashMap;
use std::ops::Add;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::freegroup::{LetterOrder, Word};
use crate::pdf::PdfSpec;

/// Coefficients at or below this magnitude are dropped after arithmetic.
pub const PRUNE_TOL: f64 = 1e-15;

/// A finitely supported map `Word → ℂ` with no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAlgebraElement {
    rank: u32,
    coeffs: HashMap<Word, Complex64>,
}

impl GroupAlgebraElement {
    pub fn zero(rank: u32) -> GroupAlgebraElement {
        GroupAlgebraElement {
            rank,
            coeffs: HashMap::new(),
        }
    }

    /// `δ_g`.
    pub fn delta(g: &Word) -> GroupAlgebraElement {
        GroupAlgebraElement::from_terms(g.rank(), [(g.clone(), Complex64::new(1.0, 0.0))])
            .expect("single term has matching rank")
    }

    /// Sums the given terms; repeated words accumulate.
    pub fn from_terms(rank: u32, terms: impl IntoIterator<Item = (Word, Complex64)>) -> Result<GroupAlgebraElement> {
        let mut out = GroupAlgebraElement::zero(rank);
        for (w, c) in terms {
            if w.rank() != rank {
                return Err(Error::RankMismatch(rank, w.rank()));
            }
            *out.coeffs.entry(w).or_default() += c;
        }
        out.prune();
        Ok(out)
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.norm() > PRUNE_TOL);
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, g: &Word) -> Complex64 {
        self.coeffs.get(g).copied().unwrap_or_default()
    }

    /// Support in length-lexicographic order under the standard letter order.
    pub fn terms(&self) -> Vec<(Word, Complex64)> {
        let order = LetterOrder::standard(self.rank);
        let mut out: Vec<(Word, Complex64)> = self.coeffs.iter().map(|(w, c)| (w.clone(), *c)).collect();
        out.sort_by(|a, b| order.cmp_words(&a.0, &b.0));
        out
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    /// `Σ_g |a_g|²`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, c: Complex64) -> GroupAlgebraElement {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= c;
        }
        out.prune();
        out
    }

    /// `(a∗b)_g = Σ_{hk=g} a_h b_k`.
    pub fn convolve(&self, other: &GroupAlgebraElement) -> Result<GroupAlgebraElement> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch(self.rank, other.rank));
        }
        let mut out = GroupAlgebraElement::zero(self.rank);
        for (h, a) in &self.coeffs {
            for (k, b) in &other.coeffs {
                *out.coeffs.entry(h.mul_unchecked(k)).or_default() += a * b;
            }
        }
        out.prune();
        Ok(out)
    }

    /// `a*_g = conj(a_{g⁻¹})`.
    pub fn involution(&self) -> GroupAlgebraElement {
        GroupAlgebraElement {
            rank: self.rank,
            coeffs: self.coeffs.iter().map(|(g, c)| (g.inverse(), c.conj())).collect(),
        }
    }

    /// `(a* ∗ δ_g ∗ a)(e) / (a* ∗ a)(e) = Σ_u conj(a_u) a_{g⁻¹u} / Σ_u |a_u|²`.
    pub fn induced_value(&self, g: &Word) -> Result<Complex64> {
        let norm = self.norm_sq();
        if norm == 0.0 {
            return Err(Error::ZeroElement);
        }
        let ginv = g.inverse();
        let sum: Complex64 = self
            .coeffs
            .iter()
            .map(|(u, a)| a.conj() * self.coeff(&ginv.mul_unchecked(u)))
            .sum();
        Ok(sum / norm)
    }

    /// Re-interprets the element in a free group of larger rank.
    pub fn with_rank(&self, rank: u32) -> Result<GroupAlgebraElement> {
        let terms = self
            .coeffs
            .iter()
            .map(|(w, c)| Ok((Word::new(rank, w.letters())?, *c)))
            .collect::<Result<Vec<_>>>()?;
        GroupAlgebraElement::from_terms(rank, terms)
    }
}

impl Add for &GroupAlgebraElement {
    type Output = GroupAlgebraElement;

    fn add(self, other: &GroupAlgebraElement) -> GroupAlgebraElement {
        assert_eq!(self.rank, other.rank, "rank mismatch in group algebra sum");
        let mut out = self.clone();
        for (w, c) in &other.coeffs {
            *out.coeffs.entry(w.clone()).or_default() += c;
        }
        out.prune();
        out
    }
}

/// The unital scalar positive definite function induced by `a ≠ 0`.
pub fn induced_pdf(a: &GroupAlgebraElement) -> Result<PdfSpec> {
    if a.is_zero() {
        return Err(Error::ZeroElement);
    }
    Ok(PdfSpec::Induced {
        rank: Some(a.rank()),
        element: a.clone(),
    })
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    word: Vec<i32>,
    re: f64,
    im: f64,
}

impl Serialize for GroupAlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermJson> = self
            .terms()
            .into_iter()
            .map(|(w, c)| TermJson {
                word: w.letters().to_vec(),
                re: c.re,
                im: c.im,
            })
            .collect();
        terms.serialize(s)
    }
}

/// The rank is inferred as the largest generator index that occurs.
impl<'de> Deserialize<'de> for GroupAlgebraElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms: Vec<TermJson> = Vec::deserialize(d)?;
        let rank = terms
            .iter()
            .flat_map(|t| t.word.iter())
            .map(|l| l.unsigned_abs())
            .max()
            .unwrap_or(1)
            .max(1);
        let terms = terms
            .into_iter()
            .map(|t| Ok((Word::new(rank, &t.word)?, Complex64::new(t.re, t.im))))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        GroupAlgebraElement::from_terms(rank, terms).map_err(serde::de::Error::custom)
    }
}
