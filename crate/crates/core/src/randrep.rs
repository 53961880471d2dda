//! Haar-random unitary representations of free groups and Monte Carlo
//! checks of the laws of their orbit Gram matrices and Verblunsky
//! coefficients.
//!
//! Every test takes a seed and draws on independent counter-based streams,
//! so a report is a function of its arguments alone.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::freegroup::{shift_difference, shift_overlap, Enumeration, GroundedSet, Word};
use crate::matent::{self, CMatrix, Contraction, HermitianMatrix};
use crate::pdf::PartialPdf;
use crate::stats::{self, par_samples};
use crate::verblunsky;

/// Stream offset separating reference draws from primary draws.
const REFERENCE_STREAMS: u64 = 1 << 40;

/// A standard complex Gaussian: real and imaginary parts `N(0, ½)`.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// QR of a Ginibre matrix with the columns of `Q` rotated by the phases of
/// `diag R`, which makes the result Haar distributed.
fn phase_corrected_q(m: CMatrix) -> CMatrix {
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// A Haar-random `n×n` unitary.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    phase_corrected_q(ginibre(n, n, rng))
}

/// A Haar-random orthonormal `k`-frame in `ℂⁿ`, as an `n×k` isometry.
pub fn haar_frame(n: usize, k: usize, rng: &mut impl Rng) -> CMatrix {
    phase_corrected_q(ginibre(n, k, rng))
}

/// `max |U*U − I|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let d = u.ad_mul(u) - CMatrix::identity(u.ncols(), u.ncols());
    d.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Independent Haar unitaries for the generators of a free group.
#[derive(Clone, Debug)]
pub struct RandomRepresentation {
    n: usize,
    generators: Vec<CMatrix>,
}

impl RandomRepresentation {
    pub fn sample(rank: u32, n: usize, rng: &mut impl Rng) -> RandomRepresentation {
        RandomRepresentation {
            n,
            generators: (0..rank).map(|_| haar_unitary(n, rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> u32 {
        self.generators.len() as u32
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// `π(s) v` for a single letter.
    fn apply_letter(&self, s: i32, v: &CMatrix) -> CMatrix {
        let u = &self.generators[s.unsigned_abs() as usize - 1];
        if s > 0 {
            u * v
        } else {
            u.ad_mul(v)
        }
    }

    /// `π(g) v`.
    pub fn apply(&self, g: &Word, v: &CMatrix) -> CMatrix {
        g.letters()
            .iter()
            .rev()
            .fold(v.clone(), |acc, &s| self.apply_letter(s, &acc))
    }

    /// `π(g)` as a matrix.
    pub fn matrix(&self, g: &Word) -> CMatrix {
        self.apply(g, &CMatrix::identity(self.n, self.n))
    }
}

/// The Gram matrix of the vectors `π(g)e_j`, `g ∈ F`, `j < k`: its `(g, h)`
/// block is `V*π(g⁻¹h)V` for `V` the first `k` standard basis vectors.
pub fn orbit_gram(rep: &RandomRepresentation, k: usize, f: &GroundedSet) -> Result<PartialPdf> {
    let n = rep.dim();
    if n < k * f.len() {
        return Err(Error::InvalidParameter(format!(
            "dimension {n} is below k|F| = {}",
            k * f.len()
        )));
    }
    let v = CMatrix::identity(n, k);
    let mut images: HashMap<&Word, CMatrix> = HashMap::with_capacity(f.len());
    let mut w = CMatrix::zeros(n, k * f.len());
    for (i, g) in f.elements().iter().enumerate() {
        let img = match g.parent() {
            None => v.clone(),
            Some(p) => {
                let key = &f.elements()[f.position(&p).expect("grounded sets contain parents")];
                rep.apply_letter(g.first_letter().expect("non-identity"), &images[key])
            }
        };
        w.view_mut((0, k * i), (n, k)).copy_from(&img);
        images.insert(g, img);
    }
    PartialPdf::new_unchecked(f.clone(), k, HermitianMatrix::from_raw(w.ad_mul(&w)))
}

/// Verblunsky coefficients of the orbit Gram matrix along the first `m`
/// steps of `en`.
pub fn random_verblunsky(rep: &RandomRepresentation, k: usize, en: &Enumeration, m: usize) -> Result<Vec<Contraction>> {
    let q = orbit_gram(rep, k, &en.prefix(m))?;
    verblunsky::coefficients_of(&q, en, m)
}

/// A sample of `σ_{n,ℓ,k}`: the first `ℓ` rows of a Haar `k`-frame in `ℂⁿ`.
pub fn sample_sigma(n: usize, l: usize, k: usize, rng: &mut impl Rng) -> CMatrix {
    haar_frame(n, k, rng).rows(0, l).into_owned()
}

/// Density of `σ_{n,ℓ,1}` at `y ∈ ℂ^ℓ`.
pub fn sigma_density_k1(n: usize, y: &[Complex64]) -> f64 {
    let l = y.len();
    assert!(n > l && l >= 1, "density needs n > ℓ ≥ 1");
    let r2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    if r2 > 1.0 {
        return 0.0;
    }
    // (n−1)!/(n−ℓ−1)! = (n−ℓ)(n−ℓ+1)⋯(n−1)
    let ratio: f64 = ((n - l)..n).map(|j| j as f64).product();
    ratio / PI.powi(l as i32) * (1.0 - r2).powi((n - l - 1) as i32)
}

/// `P(|y| ≤ ρ)` under `σ_{n,1,1}`.
pub fn sigma_radial_cdf(n: usize, rho: f64) -> f64 {
    let rho = rho.clamp(0.0, 1.0);
    1.0 - (1.0 - rho * rho).powi(n as i32 - 1)
}

/// `P(|y| ≥ c) = (1−c²)^{n−1}` under `σ_{n,1,1}`.
pub fn sigma_tail(n: usize, c: f64) -> f64 {
    sigma_log_tail(n, c).exp()
}

/// `log P(|y| ≥ c)`, exact even where the tail underflows.
pub fn sigma_log_tail(n: usize, c: f64) -> f64 {
    (n as f64 - 1.0) * (1.0 - c * c).ln()
}

/// `P(|y| ≥ c)` under `σ_{n,1,1}` by composite Gauss–Legendre quadrature of
/// the radial density `2(n−1)ρ(1−ρ²)^{n−2}`.
pub fn sigma_tail_quadrature(n: usize, c: f64) -> f64 {
    let gl = GaussLegendre::new(24).expect("degree is valid");
    let pieces = 128;
    let h = (1.0 - c) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let a = c + i as f64 * h;
            gl.integrate(a, a + h, |rho| {
                2.0 * (n as f64 - 1.0) * rho * (1.0 - rho * rho).max(0.0).powi(n as i32 - 2)
            })
        })
        .sum()
}

/// KS threshold for a one-sample test, `0.015` at 20000 samples.
pub fn ks_threshold_one(samples: usize) -> f64 {
    0.015 * (20000.0 / samples as f64).sqrt()
}

/// KS threshold for a two-sample test of equal sizes, `0.04` at 4000 each.
pub fn ks_threshold_two(samples: usize) -> f64 {
    0.04 * (4000.0 / samples as f64).sqrt()
}

/// Correlation threshold, `0.05` at 5000 samples.
pub fn corr_threshold(samples: usize) -> f64 {
    0.05 * (5000.0 / samples as f64).sqrt()
}

/// The outcome of a statistical test.
#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub test: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub statistics: BTreeMap<String, f64>,
    pub threshold: BTreeMap<String, f64>,
    pub pass: bool,
    /// Raw sample columns for optional dumping.
    #[serde(skip)]
    pub raw: Vec<(String, Vec<f64>)>,
}

impl SampleReport {
    fn new(test: &str, n: usize, samples: usize, seed: u64) -> SampleReport {
        SampleReport {
            test: test.to_string(),
            n,
            samples,
            seed,
            statistics: BTreeMap::new(),
            threshold: BTreeMap::new(),
            pass: true,
            raw: Vec::new(),
        }
    }

    fn stat(&mut self, name: &str, value: f64) {
        self.statistics.insert(name.to_string(), value);
    }

    /// Records `value < bound` as a pass condition.
    fn below(&mut self, name: &str, value: f64, bound: f64) {
        self.stat(name, value);
        self.threshold.insert(name.to_string(), bound);
        self.pass &= value < bound;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Raw columns as CSV, padded with empty cells.
    pub fn dump_csv(&self) -> String {
        let mut out = self.raw.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(",");
        out.push('\n');
        let rows = self.raw.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        for i in 0..rows {
            let row: Vec<String> = self
                .raw
                .iter()
                .map(|(_, v)| v.get(i).map_or(String::new(), |x| format!("{x}")))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Phases of 1×1 Haar unitaries against the uniform law on `[0, 2π)`.
pub fn test_haar_phase(samples: usize, seed: u64) -> SampleReport {
    let mut rep = SampleReport::new("haar-phase", 1, samples, seed);
    let phases = par_samples(seed, 0, samples, |r| {
        let u = haar_unitary(1, r);
        u[(0, 0)].arg().rem_euclid(2.0 * PI)
    });
    let ks = stats::ks_one_sample(&phases, |x| x / (2.0 * PI));
    rep.below("ks", ks, 0.02 * (10000.0 / samples as f64).sqrt());
    rep.raw.push(("phase".into(), phases));
    rep
}

/// `E|tr U|² = 1` for Haar `U` in dimension `n ≥ 1`.
pub fn test_haar_trace_moment(n: usize, samples: usize, seed: u64) -> SampleReport {
    let mut rep = SampleReport::new("haar-trace-moment", n, samples, seed);
    let vals = par_samples(seed, 0, samples, |r| {
        let u = haar_unitary(n, r);
        let res = unitarity_residual(&u);
        (u.trace().norm_sqr(), res)
    });
    let m = stats::mean(&vals.iter().map(|v| v.0).collect::<Vec<_>>());
    rep.below("mean_abs_trace_sq_error", (m - 1.0).abs(), 0.1);
    rep.below(
        "max_unitarity_residual",
        vals.iter().fold(0.0, |a, v| a.max(v.1)),
        1e-10,
    );
    rep
}

/// `q = ‖v‖²` for standard complex Gaussian `v ∈ ℂⁿ` against the `k = 1`
/// Wishart law, which is `Gamma(n, 1)`.
pub fn test_wishart_k1(n: usize, samples: usize, seed: u64) -> SampleReport {
    let mut rep = SampleReport::new("wishart", n, samples, seed);
    let qs = par_samples(seed, 0, samples, |r| {
        (0..n).map(|_| complex_gaussian(r).norm_sqr()).sum::<f64>()
    });
    let law = Gamma::new(n as f64, 1.0).expect("valid Gamma parameters");
    let ks = stats::ks_one_sample(&qs, |x| law.cdf(x));
    rep.below("ks", ks, ks_threshold_one(samples));
    rep.below("mean_error", (stats::mean(&qs) - n as f64).abs(), 0.5);
    rep.raw.push(("q".into(), qs));
    rep
}

/// Haar-frame samples of `σ_{n,1,1}` against the radial CDF `1 − (1−ρ²)^{n−1}`.
pub fn test_sigma_k1(n: usize, samples: usize, seed: u64) -> SampleReport {
    let mut rep = SampleReport::new("sigma", n, samples, seed);
    let radii = par_samples(seed, 0, samples, |r| sample_sigma(n, 1, 1, r)[(0, 0)].norm());
    let ks = stats::ks_one_sample(&radii, |x| sigma_radial_cdf(n, x));
    rep.below("ks", ks, ks_threshold_one(samples));
    if n >= 2 {
        let max = radii.iter().fold(0.0f64, |a, &b| a.max(b));
        rep.below("max_norm", max, 1.0);
    }
    rep.raw.push(("abs_y".into(), radii));
    rep
}

/// Tail probabilities `P(|y| ≥ c)` under `σ_{n,1,1}`, by quadrature and in
/// closed form, against the rate `−log(1−c²)`.
pub fn ldp_rate_check(n_values: &[usize], c: f64) -> SampleReport {
    let n_max = n_values.iter().copied().max().unwrap_or(0);
    let mut rep = SampleReport::new("ldp", n_max, 0, 0);
    let rate = (1.0 - c * c).ln();
    rep.stat("c", c);
    rep.stat("log_one_minus_c_sq", rate);
    let norm = sigma_tail_quadrature(n_max.max(2), 0.0);
    rep.below("density_mass_error", (norm - 1.0).abs(), 1e-6);
    for &n in n_values {
        let quad = sigma_tail_quadrature(n, c);
        let log_exact = sigma_log_tail(n, c);
        let scaled = quad.ln() / n as f64;
        let bound = 5.0 * (n as f64).ln() / n as f64;
        rep.stat(&format!("n{n}_tail_quadrature"), quad);
        rep.stat(&format!("n{n}_log_tail_closed_form"), log_exact);
        rep.below(
            &format!("n{n}_quadrature_log_error"),
            (quad.ln() - log_exact).abs(),
            1e-8,
        );
        rep.below(&format!("n{n}_rate_deviation"), (scaled - rate).abs(), bound);
        let closed_scaled = log_exact / n as f64;
        let predicted = (n as f64 - 1.0) / n as f64 * rate;
        rep.below(
            &format!("n{n}_closed_form_identity_error"),
            (closed_scaled - predicted).abs(),
            1e-12,
        );
    }
    rep
}

/// Configuration of the conditional-law experiment.
#[derive(Clone, Debug)]
pub struct DilDistConfig {
    pub n: usize,
    pub k: usize,
    pub set: GroundedSet,
    pub g: Word,
    pub samples: usize,
    pub seed: u64,
}

impl DilDistConfig {
    /// `F = B_1` of rank 2 enlarged by `aa`.
    pub fn standard(n: usize, samples: usize, seed: u64) -> DilDistConfig {
        let order = crate::freegroup::LetterOrder::standard(2);
        DilDistConfig {
            n,
            k: 1,
            set: crate::freegroup::ball(2, 1, &order).expect("valid ball"),
            g: Word::new(2, &[1, 1]).expect("valid word"),
            samples,
            seed,
        }
    }
}

/// Verblunsky coefficients of random orbit Gram matrices for `F → F ∪ g`
/// against direct draws of `σ_{n−k|F∩tF|, k|F∖tF|, k}`.
pub fn test_dil_dist(cfg: &DilDistConfig) -> Result<SampleReport> {
    let DilDistConfig {
        n,
        k,
        ref set,
        ref g,
        samples,
        seed,
    } = *cfg;
    let t = crate::freegroup::enlargement_direction(set, g)?;
    if n < k * (set.len() + 1) {
        return Err(Error::InvalidParameter(format!(
            "dimension {n} is below k(|F|+1) = {}",
            k * (set.len() + 1)
        )));
    }
    let overlap = shift_overlap(set, t).len();
    let diff = shift_difference(set, t).len();
    let (ref_n, ref_l) = (n - k * overlap, k * diff);
    let (enlarged, _) = set.enlarge(g)?;
    let rank = set.rank();

    let draws = par_samples(seed, 0, samples, |r| {
        let rep = RandomRepresentation::sample(rank, n, r);
        let q = orbit_gram(&rep, k, &enlarged).expect("dimension checked");
        let f_idx: Vec<usize> = (0..k * set.len()).collect();
        let qf = q.matrix().principal(&f_idx);
        match verblunsky::extract_coefficient(&q, g) {
            Ok(c) => Some((
                c.norm(),
                c.matrix()[(0, 0)].re,
                matent::logdet(&qf).unwrap_or(f64::NEG_INFINITY),
            )),
            Err(_) => None,
        }
    });
    let reference = par_samples(seed, REFERENCE_STREAMS, samples, |r| {
        let y = sample_sigma(ref_n, ref_l, k, r);
        (matent::operator_norm(&y), y[(0, 0)].re)
    });

    let singular = draws.iter().filter(|d| d.is_none()).count();
    let ok: Vec<(f64, f64, f64)> = draws.into_iter().flatten().collect();
    let norms: Vec<f64> = ok.iter().map(|d| d.0).collect();
    let entries: Vec<f64> = ok.iter().map(|d| d.1).collect();
    let logdets: Vec<f64> = ok.iter().map(|d| d.2).collect();
    let ref_norms: Vec<f64> = reference.iter().map(|d| d.0).collect();
    let ref_entries: Vec<f64> = reference.iter().map(|d| d.1).collect();

    let mut rep = SampleReport::new("dil-dist", n, samples, seed);
    rep.stat("reference_n", ref_n as f64);
    rep.stat("reference_l", ref_l as f64);
    rep.stat("reference_k", k as f64);
    rep.below("singular_grams", singular as f64, 0.5);
    let thr = ks_threshold_two(samples);
    rep.below("ks_norm", stats::ks_two_sample(&norms, &ref_norms), thr);
    rep.below("ks_re_c00", stats::ks_two_sample(&entries, &ref_entries), thr);
    rep.below(
        "abs_corr_norm_logdet",
        stats::pearson(&norms, &logdets).abs(),
        5.0 / (samples as f64).sqrt(),
    );
    rep.raw = vec![
        ("norm".into(), norms),
        ("re_c00".into(), entries),
        ("logdet_qf".into(), logdets),
        ("reference_norm".into(), ref_norms),
        ("reference_re_c00".into(), ref_entries),
    ];
    Ok(rep)
}

/// Pairwise correlations of `‖C_i‖²` for the first `count` Verblunsky
/// coefficients of random orbit Gram matrices along the length-lex order.
pub fn test_coefficient_independence(
    rank: u32,
    n: usize,
    k: usize,
    count: usize,
    samples: usize,
    seed: u64,
) -> Result<SampleReport> {
    let en = Enumeration::length_lex(&crate::freegroup::LetterOrder::standard(rank), count + 1);
    if n < k * (count + 1) {
        return Err(Error::InvalidParameter(format!(
            "dimension {n} is below k(m+1) = {}",
            k * (count + 1)
        )));
    }
    let draws = par_samples(seed, 0, samples, |r| {
        let rep = RandomRepresentation::sample(rank, n, r);
        random_verblunsky(&rep, k, &en, count)
            .ok()
            .map(|cs| cs.iter().map(|c| c.matrix().norm_squared()).collect::<Vec<f64>>())
    });
    let singular = draws.iter().filter(|d| d.is_none()).count();
    let ok: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    let columns: Vec<Vec<f64>> = (0..count).map(|i| ok.iter().map(|v| v[i]).collect()).collect();
    let mut rep = SampleReport::new("independence", n, samples, seed);
    rep.below("singular_grams", singular as f64, 0.5);
    let thr = corr_threshold(samples);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        for j in i + 1..count {
            let c = stats::pearson(&columns[i], &columns[j]);
            rep.stat(&format!("corr_{i}_{j}"), c);
            worst = worst.max(c.abs());
        }
    }
    rep.below("max_abs_corr", worst, thr);
    rep.raw = columns
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("c{i}_norm_sq"), c))
        .collect();
    Ok(rep)
}

/// Mean of `|tr π(g)|/n` per word and dimension; passes when the mean at the
/// largest dimension is below the one at the smallest and below `cap`.
pub fn trace_convergence(
    rank: u32,
    words: &[Word],
    dims: &[usize],
    samples: usize,
    seed: u64,
    cap: f64,
) -> Result<SampleReport> {
    if words.iter().any(Word::is_identity) {
        return Err(Error::InvalidParameter("the identity has normalized trace 1".into()));
    }
    let (Some(&lo), Some(&hi)) = (dims.iter().min(), dims.iter().max()) else {
        return Err(Error::InvalidParameter("no dimensions given".into()));
    };
    let mut rep = SampleReport::new("trace", hi, samples, seed);
    for (wi, g) in words.iter().enumerate() {
        let mut means = BTreeMap::new();
        for (di, &n) in dims.iter().enumerate() {
            let stream = ((wi * dims.len() + di) as u64) << 32;
            let vals = par_samples(seed, stream, samples, |r| {
                let rep = RandomRepresentation::sample(rank, n, r);
                rep.matrix(g).trace().norm() / n as f64
            });
            let m = stats::mean(&vals);
            rep.stat(&format!("{g}_n{n}"), m);
            means.insert(n, m);
        }
        if lo != hi {
            rep.below(&format!("{g}_ratio_hi_lo"), means[&hi] / means[&lo], 1.0);
        }
        rep.below(&format!("{g}_mean_at_n{hi}"), means[&hi], cap);
    }
    Ok(rep)
}
