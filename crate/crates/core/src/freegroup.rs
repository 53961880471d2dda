//! Reduced words in a finitely generated free group and the combinatorics of
//! its left Cayley graph.
//!
//! Letters are signed generator indices: `i` stands for the generator `s_i`
//! and `-i` for its inverse, with `1 <= i <= rank`. Words are always stored
//! reduced. The left Cayley graph joins `g` to `s g`, so the neighbour of a
//! non-identity word that is one step closer to the identity is obtained by
//! dropping its leftmost letter.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A signed generator index.
pub type Letter = i32;

/// A reduced word in the free group of a given rank.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    rank: u32,
    letters: Vec<Letter>,
}

fn check_letter(rank: u32, letter: Letter) -> Result<()> {
    if letter == 0 || letter.unsigned_abs() > rank {
        return Err(Error::InvalidLetter { letter, rank });
    }
    Ok(())
}

/// Free reduction of a letter sequence.
pub fn reduce(rank: u32, letters: &[Letter]) -> Result<Word> {
    if rank == 0 {
        return Err(Error::ZeroRank);
    }
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        check_letter(rank, l)?;
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    Ok(Word { rank, letters: out })
}

#[allow(clippy::len_without_is_empty)] // the empty word is `is_identity`
impl Word {
    pub fn identity(rank: u32) -> Word {
        Word {
            rank,
            letters: Vec::new(),
        }
    }

    /// Builds a word from arbitrary letters, reducing it.
    pub fn new(rank: u32, letters: &[Letter]) -> Result<Word> {
        reduce(rank, letters)
    }

    pub fn letter(rank: u32, letter: Letter) -> Result<Word> {
        reduce(rank, &[letter])
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Leftmost letter.
    pub fn first_letter(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    /// The word with its leftmost letter removed: the neighbour of `self`
    /// one step closer to the identity in the left Cayley graph.
    pub fn parent(&self) -> Option<Word> {
        if self.letters.is_empty() {
            None
        } else {
            Some(Word {
                rank: self.rank,
                letters: self.letters[1..].to_vec(),
            })
        }
    }

    pub fn inverse(&self) -> Word {
        Word {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    /// Group product `self * other`.
    pub fn multiply(&self, other: &Word) -> Result<Word> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch(self.rank, other.rank));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Word) -> Word {
        let mut cancel = 0;
        let a = &self.letters;
        let b = &other.letters;
        while cancel < a.len() && cancel < b.len() && a[a.len() - 1 - cancel] == -b[cancel] {
            cancel += 1;
        }
        let mut letters = Vec::with_capacity(a.len() + b.len() - 2 * cancel);
        letters.extend_from_slice(&a[..a.len() - cancel]);
        letters.extend_from_slice(&b[cancel..]);
        Word {
            rank: self.rank,
            letters,
        }
    }

    /// `s * self` for a single letter `s`.
    pub fn left_mul(&self, s: Letter) -> Word {
        if self.letters.first() == Some(&-s) {
            Word {
                rank: self.rank,
                letters: self.letters[1..].to_vec(),
            }
        } else {
            let mut letters = Vec::with_capacity(self.letters.len() + 1);
            letters.push(s);
            letters.extend_from_slice(&self.letters);
            Word {
                rank: self.rank,
                letters,
            }
        }
    }

    /// `self^{-1} * other`.
    pub fn left_quotient(&self, other: &Word) -> Word {
        self.inverse().mul_unchecked(other)
    }

    /// True when `self` is obtained from `other` by extending it on the left.
    pub fn has_suffix(&self, other: &Word) -> bool {
        self.letters.ends_with(&other.letters)
    }

    /// True when `self` begins with the letters of `other`.
    pub fn has_prefix(&self, other: &Word) -> bool {
        self.letters.starts_with(&other.letters)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, "·")?;
            }
            if *l > 0 {
                write!(f, "s{l}")?;
            } else {
                write!(f, "s{}⁻¹", -l)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.letters.serialize(serializer)
    }
}

/// A total order on the `2r` signed letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetterOrder {
    rank: u32,
    order: Vec<Letter>,
    position: Vec<usize>,
}

fn letter_slot(l: Letter) -> usize {
    2 * (l.unsigned_abs() as usize - 1) + usize::from(l < 0)
}

impl LetterOrder {
    /// `s_1 < s_1⁻¹ < s_2 < s_2⁻¹ < …`
    pub fn standard(rank: u32) -> LetterOrder {
        let order: Vec<Letter> = (1..=rank as i32).flat_map(|i| [i, -i]).collect();
        LetterOrder::new(rank, order).expect("standard order is a permutation")
    }

    pub fn new(rank: u32, order: Vec<Letter>) -> Result<LetterOrder> {
        if rank == 0 {
            return Err(Error::ZeroRank);
        }
        if order.len() != 2 * rank as usize {
            return Err(Error::InvalidLetterOrder(format!(
                "expected {} letters, found {}",
                2 * rank,
                order.len()
            )));
        }
        let mut position = vec![usize::MAX; order.len()];
        for (i, &l) in order.iter().enumerate() {
            check_letter(rank, l)?;
            let slot = letter_slot(l);
            if position[slot] != usize::MAX {
                return Err(Error::InvalidLetterOrder(format!("letter {l} repeated")));
            }
            position[slot] = i;
        }
        Ok(LetterOrder { rank, order, position })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.order
    }

    pub fn position(&self, l: Letter) -> usize {
        self.position[letter_slot(l)]
    }

    pub fn reversed(&self) -> LetterOrder {
        let mut order = self.order.clone();
        order.reverse();
        LetterOrder::new(self.rank, order).expect("reversal is a permutation")
    }

    pub fn cmp_letters(&self, a: Letter, b: Letter) -> Ordering {
        self.position(a).cmp(&self.position(b))
    }

    /// Length-lexicographic comparison.
    pub fn cmp_words(&self, a: &Word, b: &Word) -> Ordering {
        a.len().cmp(&b.len()).then_with(|| {
            for (x, y) in a.letters.iter().zip(&b.letters) {
                if x != y {
                    return self.cmp_letters(*x, *y);
                }
            }
            Ordering::Equal
        })
    }

    pub fn sort(&self, words: &mut [Word]) {
        words.sort_by(|a, b| self.cmp_words(a, b));
    }

    /// All reduced words of length `n`, in lexicographic order.
    pub fn sphere(&self, n: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut buf = Vec::with_capacity(n);
        self.fill_sphere(n, &mut buf, &mut out);
        out
    }

    fn fill_sphere(&self, n: usize, buf: &mut Vec<Letter>, out: &mut Vec<Word>) {
        if buf.len() == n {
            out.push(Word {
                rank: self.rank,
                letters: buf.clone(),
            });
            return;
        }
        for &l in &self.order {
            if buf.last() == Some(&-l) {
                continue;
            }
            buf.push(l);
            self.fill_sphere(n, buf, out);
            buf.pop();
        }
    }

    /// The closed ball `B_n` in length-lexicographic order.
    pub fn ball_words(&self, n: usize) -> Vec<Word> {
        (0..=n).flat_map(|m| self.sphere(m)).collect()
    }
}

/// Closed-form size of the ball of radius `n`.
pub fn ball_size(rank: u32, n: usize) -> usize {
    if rank == 1 {
        2 * n + 1
    } else {
        let r = rank as usize;
        1 + 2 * r * ((2 * r - 1).pow(n as u32) - 1) / (2 * r - 2)
    }
}

/// A finite set containing the identity and connected in the left Cayley
/// graph, stored in a fixed order.
#[derive(Clone, Debug)]
pub struct GroundedSet {
    rank: u32,
    elements: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl PartialEq for GroundedSet {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.elements == other.elements
    }
}

impl GroundedSet {
    pub fn new(rank: u32, elements: Vec<Word>) -> Result<GroundedSet> {
        let mut index = HashMap::with_capacity(elements.len());
        for (i, w) in elements.iter().enumerate() {
            if w.rank != rank {
                return Err(Error::RankMismatch(rank, w.rank));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::NotGrounded(format!("{w} repeated")));
            }
        }
        if !index.contains_key(&Word::identity(rank)) {
            return Err(Error::NotGrounded("identity missing".into()));
        }
        for w in &elements {
            if let Some(p) = w.parent() {
                if !index.contains_key(&p) {
                    return Err(Error::NotGrounded(format!("{w} is disconnected from e")));
                }
            }
        }
        Ok(GroundedSet { rank, elements, index })
    }

    pub fn singleton(rank: u32) -> GroundedSet {
        GroundedSet::new(rank, vec![Word::identity(rank)]).expect("{e} is grounded")
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn elements(&self) -> &[Word] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.index.contains_key(w)
    }

    pub fn position(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// `F ∪ g` with `g` appended, together with the enlargement direction.
    pub fn enlarge(&self, g: &Word) -> Result<(GroundedSet, Letter)> {
        let s = enlargement_direction(self, g)?;
        let mut elements = self.elements.clone();
        elements.push(g.clone());
        let mut index = self.index.clone();
        index.insert(g.clone(), elements.len() - 1);
        Ok((
            GroundedSet {
                rank: self.rank,
                elements,
                index,
            },
            s,
        ))
    }
}

/// The ball `B_n` in length-lexicographic order.
pub fn ball(rank: u32, n: usize, order: &LetterOrder) -> Result<GroundedSet> {
    if order.rank() != rank {
        return Err(Error::RankMismatch(rank, order.rank()));
    }
    GroundedSet::new(rank, order.ball_words(n))
}

/// The unique letter `s` with `g ∈ sF`, for `g` on the exterior boundary of `F`.
pub fn enlargement_direction(f: &GroundedSet, g: &Word) -> Result<Letter> {
    if g.rank != f.rank {
        return Err(Error::RankMismatch(f.rank, g.rank));
    }
    if f.contains(g) {
        return Err(Error::NotAnEnlargement(format!("{g} already lies in F")));
    }
    // e ∈ F, so g is not the identity here
    let parent = g.parent().expect("non-identity word");
    if !f.contains(&parent) {
        return Err(Error::NotAnEnlargement(format!("{g} is not adjacent to F")));
    }
    Ok(g.first_letter().expect("non-identity word"))
}

/// `F ∩ sF`, listed in the order of `F`.
pub fn shift_overlap(f: &GroundedSet, s: Letter) -> Vec<Word> {
    f.elements
        .iter()
        .filter(|h| f.contains(&h.left_mul(-s)))
        .cloned()
        .collect()
}

/// `F ∖ sF`, listed in the order of `F`.
pub fn shift_difference(f: &GroundedSet, s: Letter) -> Vec<Word> {
    f.elements
        .iter()
        .filter(|h| !f.contains(&h.left_mul(-s)))
        .cloned()
        .collect()
}

/// `F ∪ sF`, with `F` first (in its order) followed by the new elements of `sF`.
pub fn shift_union(f: &GroundedSet, s: Letter) -> Vec<Word> {
    let mut out = f.elements.clone();
    for h in &f.elements {
        let t = h.left_mul(s);
        if !f.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// All words strictly before `g` in the length-lexicographic order.
pub fn predecessors(g: &Word, order: &LetterOrder) -> Vec<Word> {
    let mut out: Vec<Word> = order.ball_words(g.len().saturating_sub(1));
    if g.is_identity() {
        return Vec::new();
    }
    out.extend(
        order
            .sphere(g.len())
            .into_iter()
            .take_while(|w| order.cmp_words(w, g) == Ordering::Less),
    );
    out
}

/// `Q(g) = g⁻¹ P(g)`, sorted in length-lexicographic order.
pub fn q_set(g: &Word, order: &LetterOrder) -> Vec<Word> {
    let ginv = g.inverse();
    let mut out: Vec<Word> = predecessors(g, order).iter().map(|h| ginv.mul_unchecked(h)).collect();
    order.sort(&mut out);
    out
}

/// The crescent `C(g) = Q(g) ∖ Q(parent(g))`.
pub fn crescent(g: &Word, order: &LetterOrder) -> Result<Vec<Word>> {
    let parent = g.parent().ok_or(Error::IdentityCrescent)?;
    let inner: HashSet<Word> = q_set(&parent, order).into_iter().collect();
    Ok(q_set(g, order).into_iter().filter(|w| !inner.contains(w)).collect())
}

/// How an enumeration was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationKind {
    Grounded,
    LengthLex,
}

/// One enlargement `F_n → F_n ∪ g_{n+1}` along an enumeration.
#[derive(Clone, Debug)]
pub struct Step {
    /// `n`: the prefix `F_n` has `n + 1` elements.
    pub index: usize,
    pub new_element: Word,
    pub direction: Letter,
}

/// A finite prefix `g_0 = e, g_1, …, g_N` of a grounded enumeration.
#[derive(Clone, Debug)]
pub struct Enumeration {
    letter_order: LetterOrder,
    order: Vec<Word>,
    kind: EnumerationKind,
}

impl Enumeration {
    /// The first `len` elements of the length-lexicographic enumeration.
    pub fn length_lex(letter_order: &LetterOrder, len: usize) -> Enumeration {
        let mut order = Vec::with_capacity(len);
        let mut radius = 0;
        while order.len() < len {
            for w in letter_order.sphere(radius) {
                if order.len() == len {
                    break;
                }
                order.push(w);
            }
            radius += 1;
        }
        Enumeration {
            letter_order: letter_order.clone(),
            order,
            kind: EnumerationKind::LengthLex,
        }
    }

    /// The length-lexicographic enumeration of exactly the ball `B_radius`.
    pub fn length_lex_ball(letter_order: &LetterOrder, radius: usize) -> Enumeration {
        Enumeration::length_lex(letter_order, ball_size(letter_order.rank(), radius))
    }

    /// A caller-supplied grounded enumeration; every element after the first
    /// must lie on the exterior boundary of its predecessors.
    pub fn grounded(letter_order: &LetterOrder, order: Vec<Word>) -> Result<Enumeration> {
        let rank = letter_order.rank();
        match order.first() {
            Some(w) if w.is_identity() => {}
            _ => return Err(Error::NotGrounded("enumeration must start at e".into())),
        }
        let mut f = GroundedSet::singleton(rank);
        for g in &order[1..] {
            f = f.enlarge(g)?.0;
        }
        Ok(Enumeration {
            letter_order: letter_order.clone(),
            order,
            kind: EnumerationKind::Grounded,
        })
    }

    pub fn letter_order(&self) -> &LetterOrder {
        &self.letter_order
    }

    pub fn rank(&self) -> u32 {
        self.letter_order.rank()
    }

    pub fn kind(&self) -> EnumerationKind {
        self.kind
    }

    pub fn words(&self) -> &[Word] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `F_n = {g_0, …, g_n}`.
    pub fn prefix(&self, n: usize) -> GroundedSet {
        GroundedSet::new(self.rank(), self.order[..=n].to_vec())
            .expect("prefixes of a grounded enumeration are grounded")
    }

    /// The enlargements `F_n → F_{n+1}` for `n = 0..len-1`.
    pub fn steps(&self) -> Vec<Step> {
        (1..self.order.len())
            .map(|i| {
                let g = &self.order[i];
                Step {
                    index: i - 1,
                    new_element: g.clone(),
                    direction: g.first_letter().expect("only g_0 is the identity"),
                }
            })
            .collect()
    }
}
