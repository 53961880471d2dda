//! Annealed AP entropy by ball determinants, union determinants, the
//! Verblunsky series and the Seward expansion.
//!
//! Every method produces one value per level `L = 0, 1, …`:
//!
//! | method       | value at level `L`                                             |
//! |--------------|----------------------------------------------------------------|
//! | `formula1`   | `log det φ(B_{L+1}) − Σ_s log det φ(B_{L+1} ∩ sB_{L+1})`        |
//! | `formula2`   | `Σ_s log det φ(B_L ∪ sB_L) − (2r−1) log det φ(B_L)`             |
//! | `verblunsky` | `Σ log det(I − C_n*C_n)` over enlargements by words of length ≤ `L+1` |
//! | `seward`     | Seward expansion summed through level `L`                      |
//! | `seward-cmi` | the same expansion written with conditional mutual information  |
//!
//! Sums run over the `r` generators `s`, not their inverses. Functions that
//! are not unital are first normalized, and `log det φ(e)` is added back.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::freegroup::{crescent, q_set, shift_overlap, Enumeration, GroundedSet, LetterOrder, Word};
use crate::matent;
use crate::pdf::{normalize, PartialPdf, PdfSpec};
use crate::verblunsky;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_LEVEL: usize = 3;

/// An estimation route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Formula1,
    Formula2,
    Verblunsky,
    Seward,
    SewardCmi,
}

impl Method {
    /// The four independent routes.
    pub const MAIN: [Method; 4] = [Method::Formula1, Method::Formula2, Method::Verblunsky, Method::Seward];

    pub fn name(self) -> &'static str {
        match self {
            Method::Formula1 => "formula1",
            Method::Formula2 => "formula2",
            Method::Verblunsky => "verblunsky",
            Method::Seward => "seward",
            Method::SewardCmi => "seward-cmi",
        }
    }

    fn convention(self) -> &'static str {
        match self {
            Method::Formula1 => {
                "matrix log-det; level L value = log det φ(B_{L+1}) − Σ_s log det φ(B_{L+1}∩sB_{L+1}) = 2E_L"
            }
            Method::Formula2 => {
                "matrix log-det; level L value = Σ_s log det φ(B_L∪sB_L) − (2r−1) log det φ(B_L) = 2E'_L"
            }
            Method::Verblunsky => {
                "matrix log-det; level L value = Σ log det(I − C*C) over enlargements by words of length ≤ L+1"
            }
            Method::Seward => "tuple entropy H = ½ log det; level L value = E_L + E'_L = H(B_{L+1}) − (2r−1)H(B_L)",
            Method::SewardCmi => "tuple entropy H = ½ log det; level L term = −Σ_{|g|=L+1} I(e; C(g) | Q(parent g))",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "formula1" => Ok(Method::Formula1),
            "formula2" => Ok(Method::Formula2),
            "verblunsky" => Ok(Method::Verblunsky),
            "seward" => Ok(Method::Seward),
            "seward-cmi" | "seward_cmi" | "cmi" => Ok(Method::SewardCmi),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

fn ext_str(x: f64) -> Option<&'static str> {
    if x == f64::NEG_INFINITY {
        Some("-inf")
    } else if x == f64::INFINITY {
        Some("inf")
    } else if x.is_nan() {
        Some("nan")
    } else {
        None
    }
}

/// Formats an extended real; `-inf` for `−∞`.
pub fn format_ext(x: f64) -> String {
    match ext_str(x) {
        Some(s) => s.to_string(),
        None => format!("{x}"),
    }
}

fn ser_ext<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    match ext_str(*x) {
        Some(t) => s.serialize_str(t),
        None => s.serialize_f64(*x),
    }
}

#[derive(Serialize)]
struct Ext(#[serde(serialize_with = "ser_ext")] f64);

fn ser_ext_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|&x| Ext(x)))
}

fn ser_ext_opt_vec<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_ext_vec(v, s),
        None => s.serialize_none(),
    }
}

/// Extended-real sum where `−∞` absorbs everything.
fn ext_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// `a − b` for `a, b ∈ [−∞, ∞)` with `b` finite whenever `a` is.
fn ext_sub(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a - b
    }
}

/// Additivity diagnostic for block-diagonal functions.
#[derive(Clone, Debug, Serialize)]
pub struct Additivity {
    #[serde(serialize_with = "ser_ext_vec")]
    pub parts: Vec<f64>,
    #[serde(serialize_with = "ser_ext")]
    pub sum_of_parts: f64,
    #[serde(serialize_with = "ser_ext")]
    pub joint: f64,
    /// `|joint − sum|`, or 0 when both are `−∞`.
    pub difference: f64,
}

/// The outcome of one estimation run.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub method: Method,
    pub convention: String,
    /// `log det φ(e)`, already included in every value.
    #[serde(serialize_with = "ser_ext")]
    pub normalization: f64,
    pub levels: Vec<usize>,
    /// Per-level term: the sequence value for the formulas, the level
    /// increment for the series.
    #[serde(serialize_with = "ser_ext_vec")]
    pub terms: Vec<f64>,
    /// Running estimate per level.
    #[serde(serialize_with = "ser_ext_vec")]
    pub partial_sums: Vec<f64>,
    /// Per-enlargement terms of the Verblunsky series.
    #[serde(serialize_with = "ser_ext_opt_vec", skip_serializing_if = "Option::is_none")]
    pub step_terms: Option<Vec<f64>>,
    #[serde(serialize_with = "ser_ext")]
    pub estimate: f64,
    pub stabilized: bool,
    pub last_increment: f64,
    pub levels_computed: usize,
    pub first_singular_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additivity: Option<Additivity>,
}

impl EntropyReport {
    fn empty(method: Method, normalization: f64) -> EntropyReport {
        EntropyReport {
            method,
            convention: method.convention().to_string(),
            normalization,
            levels: Vec::new(),
            terms: Vec::new(),
            partial_sums: Vec::new(),
            step_terms: None,
            estimate: f64::NAN,
            stabilized: false,
            last_increment: f64::NAN,
            levels_computed: 0,
            first_singular_level: None,
            additivity: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// `level,term,partial_sum` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,term,partial_sum\n");
        for ((l, t), p) in self.levels.iter().zip(&self.terms).zip(&self.partial_sums) {
            out.push_str(&format!("{l},{},{}\n", format_ext(*t), format_ext(*p)));
        }
        out
    }

    /// Whether the estimate is `−∞`.
    pub fn is_singular(&self) -> bool {
        self.estimate == f64::NEG_INFINITY
    }
}

/// Run configuration.
#[derive(Clone, Debug)]
pub struct EntropyOptions {
    pub max_level: usize,
    pub tol: f64,
    pub order: Option<LetterOrder>,
    /// Stop once two consecutive increments fall below `tol`.
    pub stop_when_stable: bool,
}

impl Default for EntropyOptions {
    fn default() -> EntropyOptions {
        EntropyOptions {
            max_level: DEFAULT_MAX_LEVEL,
            tol: DEFAULT_TOL,
            order: None,
            stop_when_stable: true,
        }
    }
}

/// `h_F(q) = log det q − Σ_{s∈S} log det q_(F∩sF)`, or `−∞` when singular.
pub fn h_f_rate(p: &PartialPdf) -> Result<f64> {
    let total = p.logdet()?;
    if total == f64::NEG_INFINITY {
        return Ok(total);
    }
    let mut h = total;
    for s in 1..=p.set().rank() as i32 {
        let idx = p.indices(&shift_overlap(p.set(), s)).expect("overlap lies in F");
        h -= matent::logdet(&p.matrix().principal(&idx))?;
    }
    Ok(h)
}

/// `H_φ(B_n) = ½ log det φ(B_n)`.
pub fn ball_entropy(spec: &PdfSpec, n: usize) -> Result<f64> {
    let order = LetterOrder::standard(spec.rank());
    let f = crate::freegroup::ball(spec.rank(), n, &order)?;
    Ok(0.5 * spec.restrict(&f)?.logdet()?)
}

/// Restriction of the largest ball needed so far.
struct BallCache<'a> {
    spec: &'a PdfSpec,
    order: LetterOrder,
    radius: Option<usize>,
    full: Option<PartialPdf>,
}

impl<'a> BallCache<'a> {
    fn new(spec: &'a PdfSpec, order: LetterOrder) -> BallCache<'a> {
        BallCache {
            spec,
            order,
            radius: None,
            full: None,
        }
    }

    fn ensure(&mut self, n: usize) -> Result<&PartialPdf> {
        if self.radius.is_none_or(|r| r < n) {
            let en = Enumeration::length_lex_ball(&self.order, n);
            self.full = Some(self.spec.restrict(&en.prefix(en.len() - 1))?);
            self.radius = Some(n);
        }
        Ok(self.full.as_ref().expect("just filled"))
    }

    fn ball_set(&self, n: usize) -> GroundedSet {
        let en = Enumeration::length_lex_ball(&self.order, n);
        en.prefix(en.len() - 1)
    }

    fn logdet_of(&mut self, words: &[Word], n: usize) -> Result<f64> {
        let full = self.ensure(n)?;
        let idx = full.indices(words).expect("words lie in the cached ball");
        matent::logdet(&full.matrix().principal(&idx))
    }
}

fn formula1_term(cache: &mut BallCache, n: usize) -> Result<f64> {
    let ball = cache.ball_set(n);
    let total = cache.logdet_of(ball.elements(), n)?;
    if total == f64::NEG_INFINITY {
        return Ok(total);
    }
    let mut h = total;
    for s in 1..=ball.rank() as i32 {
        h -= cache.logdet_of(&shift_overlap(&ball, s), n)?;
    }
    Ok(h)
}

fn formula2_term(cache: &mut BallCache, n: usize) -> Result<f64> {
    let inner = cache.ball_set(n);
    let outer = cache.ball_set(n + 1);
    let r = inner.rank() as i32;
    let mut h = 0.0;
    for s in 1..=r {
        // B_n ∪ sB_n = B_{n+1} ∩ sB_{n+1}
        h = ext_add(h, cache.logdet_of(&shift_overlap(&outer, s), n + 1)?);
    }
    let base = cache.logdet_of(inner.elements(), n + 1)?;
    if base == f64::NEG_INFINITY {
        return Ok(base);
    }
    Ok(ext_sub(h, (2 * r - 1) as f64 * base))
}

/// `H_φ(e | X)` computed on the Gram matrix of `{e} ∪ X`.
fn cond_entropy_of_identity(spec: &PdfSpec, given: &[Word]) -> Result<f64> {
    let k = spec.k();
    let mut words = Vec::with_capacity(given.len() + 1);
    words.push(Word::identity(spec.rank()));
    words.extend_from_slice(given);
    let q = spec.gram(&words)?;
    let alpha: Vec<usize> = (0..k).collect();
    let beta: Vec<usize> = (k..q.dim()).collect();
    match matent::cond_entropy(&q, &alpha, &beta) {
        Err(Error::Singular { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

/// Seward terms `−[H(e|Q(parent g)) − H(e|Q(g))]` for every `g` of length
/// `level + 1`, in lexicographic order.
pub fn seward_word_terms(spec: &PdfSpec, order: &LetterOrder, level: usize) -> Result<Vec<(Word, f64)>> {
    let words = order.sphere(level + 1);
    words
        .into_par_iter()
        .map(|g| {
            let parent = g.parent().expect("length at least one");
            let outer = cond_entropy_of_identity(spec, &q_set(&parent, order))?;
            let inner = cond_entropy_of_identity(spec, &q_set(&g, order))?;
            let term = if inner == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                -(outer - inner)
            };
            Ok((g, term))
        })
        .collect()
}

/// `I_φ(e; C(g) | Q(parent g))` for every `g` of length `level + 1`, read off
/// the contraction of the three-block matrix `[e | Q(parent g) | C(g)]`.
pub fn seward_cmi_word_terms(spec: &PdfSpec, order: &LetterOrder, level: usize) -> Result<Vec<(Word, f64)>> {
    let k = spec.k();
    let words = order.sphere(level + 1);
    words
        .into_par_iter()
        .map(|g| {
            let parent = g.parent().expect("length at least one");
            let given = q_set(&parent, order);
            let cres = crescent(&g, order)?;
            let mut all = vec![Word::identity(spec.rank())];
            all.extend(given.iter().cloned());
            all.extend(cres.iter().cloned());
            let q = spec.gram(&all)?;
            let info = match matent::three_block_extract(&q, k, k * given.len(), k * cres.len()) {
                Ok((_, c)) => -0.5 * c.defect_logdet(),
                Err(Error::Singular { .. }) | Err(Error::NotContraction(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok((g, info))
        })
        .collect()
}

fn seward_level(spec: &PdfSpec, order: &LetterOrder, level: usize) -> Result<f64> {
    // the constant 2H(B_0) vanishes for unital functions
    Ok(seward_word_terms(spec, order, level)?
        .into_iter()
        .fold(0.0, |acc, (_, t)| ext_add(acc, t)))
}

fn seward_cmi_level(spec: &PdfSpec, order: &LetterOrder, level: usize) -> Result<f64> {
    Ok(seward_cmi_word_terms(spec, order, level)?
        .into_iter()
        .fold(0.0, |acc, (_, i)| ext_add(acc, -i)))
}

/// `log det(I − C*C)` for the enlargements by words of length `level + 1`.
fn verblunsky_level(cache: &mut BallCache, level: usize) -> Result<Vec<f64>> {
    let order = cache.order.clone();
    let full = cache.ensure(level + 1)?.clone();
    let en = Enumeration::length_lex_ball(&order, level + 1);
    let first = crate::freegroup::ball_size(order.rank(), level) - 1;
    let mut out = Vec::new();
    for step in en.steps().into_iter().skip(first) {
        let set = en.prefix(step.index + 1);
        let q = full.restrict_to(&set)?;
        match verblunsky::extract_coefficient(&q, &step.new_element) {
            Ok(c) => out.push(c.defect_logdet()),
            Err(Error::Singular { .. }) | Err(Error::NotContraction(_)) => {
                out.push(f64::NEG_INFINITY);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Runs `method` level by level.
pub fn run(spec: &PdfSpec, method: Method, opts: &EntropyOptions) -> Result<EntropyReport> {
    spec.validate()?;
    let (offset, unital) = normalize(spec)?;
    let mut report = EntropyReport::empty(method, offset);
    let Some(phi) = unital else {
        report.levels.push(0);
        report.terms.push(f64::NEG_INFINITY);
        report.partial_sums.push(f64::NEG_INFINITY);
        report.estimate = f64::NEG_INFINITY;
        report.stabilized = true;
        report.last_increment = 0.0;
        report.levels_computed = 1;
        report.first_singular_level = Some(0);
        return Ok(report);
    };
    let order = opts.order.clone().unwrap_or_else(|| LetterOrder::standard(phi.rank()));
    if order.rank() != phi.rank() {
        return Err(Error::RankMismatch(phi.rank(), order.rank()));
    }
    let mut cache = BallCache::new(&phi, order.clone());
    let mut steps: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut small_run = 0;
    for level in 0..=opts.max_level {
        let (term, value) = match method {
            Method::Formula1 => {
                let t = formula1_term(&mut cache, level + 1)?;
                (t, t)
            }
            Method::Formula2 => {
                let t = formula2_term(&mut cache, level)?;
                (t, t)
            }
            Method::Verblunsky => {
                let ts = verblunsky_level(&mut cache, level)?;
                let t = ts.iter().fold(0.0, |a, &b| ext_add(a, b));
                steps.extend(ts);
                (t, ext_add(prev.unwrap_or(0.0), t))
            }
            Method::Seward => {
                let t = seward_level(&phi, &order, level)?;
                (t, ext_add(prev.unwrap_or(0.0), t))
            }
            Method::SewardCmi => {
                let t = seward_cmi_level(&phi, &order, level)?;
                (t, ext_add(prev.unwrap_or(0.0), t))
            }
        };
        let value = ext_add(value, offset);
        report.levels.push(level);
        report.terms.push(term);
        report.partial_sums.push(value);
        report.levels_computed = level + 1;
        if value == f64::NEG_INFINITY {
            report.first_singular_level = Some(level);
            report.estimate = value;
            report.stabilized = true;
            report.last_increment = 0.0;
            break;
        }
        let inc = match prev {
            None => (value - offset).abs(),
            Some(p) => (value - p).abs(),
        };
        report.last_increment = inc;
        report.estimate = value;
        small_run = if inc < opts.tol { small_run + 1 } else { 0 };
        prev = Some(value);
        if small_run >= 2 {
            report.stabilized = true;
            if opts.stop_when_stable {
                break;
            }
        }
    }
    if method == Method::Verblunsky {
        report.step_terms = Some(steps);
    }
    Ok(report)
}

/// Runs `method` and, for block-diagonal functions, compares against the
/// sum of the parts.
pub fn estimate_hann(spec: &PdfSpec, method: Method, opts: &EntropyOptions) -> Result<EntropyReport> {
    let mut report = run(spec, method, opts)?;
    if let PdfSpec::DiagonalJoin { parts } = spec {
        let values = parts
            .iter()
            .map(|p| Ok(run(p, method, opts)?.estimate))
            .collect::<Result<Vec<f64>>>()?;
        let sum = values.iter().fold(0.0, |a, &b| ext_add(a, b));
        let difference = if sum == f64::NEG_INFINITY && report.estimate == f64::NEG_INFINITY {
            0.0
        } else {
            (report.estimate - sum).abs()
        };
        report.additivity = Some(Additivity {
            parts: values,
            sum_of_parts: sum,
            joint: report.estimate,
            difference,
        });
    }
    Ok(report)
}

fn fixed_levels(max_level: usize) -> EntropyOptions {
    EntropyOptions {
        max_level,
        stop_when_stable: false,
        ..EntropyOptions::default()
    }
}

/// Formula-1 terms for `n = 1..=n_max` (levels `0..n_max`).
pub fn formula1_sequence(spec: &PdfSpec, n_max: usize) -> Result<EntropyReport> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("formula 1 starts at n = 1".into()));
    }
    run(spec, Method::Formula1, &fixed_levels(n_max - 1))
}

/// Formula-2 terms for `n = 0..=n_max`.
pub fn formula2_sequence(spec: &PdfSpec, n_max: usize) -> Result<EntropyReport> {
    run(spec, Method::Formula2, &fixed_levels(n_max))
}

/// Seward expansion through level `levels` along `order`.
pub fn seward_terms(spec: &PdfSpec, order: &LetterOrder, levels: usize) -> Result<EntropyReport> {
    run(
        spec,
        Method::Seward,
        &EntropyOptions {
            order: Some(order.clone()),
            ..fixed_levels(levels)
        },
    )
}

/// Conditional mutual information form of the Seward expansion.
pub fn seward_cmi_terms(spec: &PdfSpec, order: &LetterOrder, levels: usize) -> Result<EntropyReport> {
    run(
        spec,
        Method::SewardCmi,
        &EntropyOptions {
            order: Some(order.clone()),
            ..fixed_levels(levels)
        },
    )
}

/// Verblunsky series along the first `steps` enlargements of an arbitrary
/// grounded enumeration; each "level" is one step. A singular prefix ends
/// the series at `−∞`.
pub fn verblunsky_series(spec: &PdfSpec, en: &Enumeration, steps: usize) -> Result<EntropyReport> {
    spec.validate()?;
    let (offset, unital) = normalize(spec)?;
    let mut report = EntropyReport::empty(Method::Verblunsky, offset);
    report.convention = "matrix log-det; level n term = log det(I − C_n*C_n) for the n-th enlargement".into();
    let Some(phi) = unital else {
        report.estimate = f64::NEG_INFINITY;
        report.first_singular_level = Some(0);
        report.stabilized = true;
        return Ok(report);
    };
    if steps >= en.len() {
        return Err(Error::InvalidParameter(format!(
            "enumeration has {} elements, {steps} steps need {}",
            en.len(),
            steps + 1
        )));
    }
    let full = phi.restrict(&en.prefix(steps))?;
    let mut sum = offset;
    for step in en.steps().into_iter().take(steps) {
        let q = full.restrict_to(&en.prefix(step.index + 1))?;
        let term = match verblunsky::extract_coefficient(&q, &step.new_element) {
            Ok(c) => c.defect_logdet(),
            Err(Error::Singular { .. }) | Err(Error::NotContraction(_)) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        sum = ext_add(sum, term);
        report.levels.push(step.index);
        report.terms.push(term);
        report.partial_sums.push(sum);
        report.last_increment = if term.is_finite() { term.abs() } else { 0.0 };
        if sum == f64::NEG_INFINITY {
            report.first_singular_level = Some(step.index);
            break;
        }
    }
    report.levels_computed = report.levels.len();
    report.estimate = sum;
    report.stabilized = sum == f64::NEG_INFINITY;
    report.step_terms = Some(report.terms.clone());
    Ok(report)
}

/// One point of a mollification profile.
#[derive(Clone, Debug, Serialize)]
pub struct ProfilePoint {
    pub t: f64,
    #[serde(serialize_with = "ser_ext")]
    pub h_ann: f64,
    pub stabilized: bool,
}

/// `h_ann(φ_t)` for each `t` in the grid.
pub fn mollified_profile(
    spec: &PdfSpec,
    t_grid: &[f64],
    method: Method,
    opts: &EntropyOptions,
) -> Result<Vec<ProfilePoint>> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t grid".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::InvalidParameter(format!("t = {t} is outside (0, 1]")));
    }
    t_grid
        .iter()
        .map(|&t| {
            let r = run(&PdfSpec::mollified(t, spec.clone()), method, opts)?;
            Ok(ProfilePoint {
                t,
                h_ann: r.estimate,
                stabilized: r.stabilized,
            })
        })
        .collect()
}

/// `(E_n, E'_n)` for `n = 0..=n_max`, in the tuple convention.
pub fn e_sequences(spec: &PdfSpec, n_max: usize) -> Result<Vec<(f64, f64)>> {
    let f1 = formula1_sequence(spec, n_max + 1)?;
    let f2 = formula2_sequence(spec, n_max)?;
    Ok(f1
        .partial_sums
        .iter()
        .zip(&f2.partial_sums)
        .map(|(a, b)| (0.5 * a, 0.5 * b))
        .collect())
}
