//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::time::{Duration, Instant};

use apent_core::entropy::{self, EntropyOptions, Method};
use apent_core::freegroup::{
    ball, ball_size, crescent, reduce, shift_overlap, Enumeration, GroundedSet, LetterOrder, Word,
};
use apent_core::matent::{self, CMatrix, Contraction, HermitianMatrix};
use apent_core::randrep::{self, DilDistConfig};
use apent_core::stats::stream_rng;
use apent_core::verblunsky;
use apent_core::PdfSpec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome {
            ok: true,
            detail: String::new(),
        }
    }

    /// Records a failed check; keeps only the first few messages.
    fn check(&mut self, cond: bool, msg: impl FnOnce() -> String) {
        if !cond {
            if self.ok {
                self.detail = msg();
            }
            self.ok = false;
        }
    }

    fn note(&mut self, s: String) {
        if self.ok {
            self.detail = s;
        }
    }
}

fn run(id: usize, title: &str, budget: Option<Duration>, f: impl FnOnce(&mut Outcome)) -> bool {
    let mut out = Outcome::new();
    let start = Instant::now();
    f(&mut out);
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        out.check(elapsed < b, || format!("runtime {:.2?} exceeds {:.0?}", elapsed, b));
    }
    println!(
        "{} [{id}] {title} ({:.2} s){}{}",
        if out.ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        if out.detail.is_empty() { "" } else { ": " },
        out.detail
    );
    out.ok
}

fn opts(max_level: usize, stop: bool) -> EntropyOptions {
    EntropyOptions {
        max_level,
        stop_when_stable: stop,
        ..EntropyOptions::default()
    }
}

/// `log det` by LU, independent of the eigenvalue route in the library.
fn lu_logdet(m: &CMatrix) -> f64 {
    m.clone().lu().determinant().re.ln()
}

fn criterion_1(out: &mut Outcome) {
    // Toeplitz determinant oracle: det[ρ^{|i−j|}]_{m×m} = (1−ρ²)^{m−1}.
    for i in 1..=9 {
        let rho = i as f64 / 10.0;
        for m in 1..=9usize {
            let t = DMatrix::<f64>::from_fn(m, m, |a, b| rho.powi((a as i32 - b as i32).abs()));
            let det = t.lu().determinant();
            let expected = (1.0 - rho * rho).powi(m as i32 - 1);
            out.check((det - expected).abs() < 1e-12, || {
                format!("Toeplitz oracle ρ={rho} m={m}")
            });
        }
    }
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let rho = i as f64 / 10.0;
        let spec = PdfSpec::haagerup(&[rho]);
        let truth = (1.0 - rho * rho).ln();
        for m in Method::MAIN {
            let r = entropy::run(&spec, m, &opts(3, true)).unwrap();
            let err = (r.estimate - truth).abs();
            worst = worst.max(err);
            out.check(err < 1e-9, || format!("{m} at ρ={rho}: error {err:.2e}"));
            out.check(r.stabilized && r.levels_computed <= 4, || {
                format!("{m} at ρ={rho} not stabilized by level 3")
            });
        }
    }
    out.note(format!("max error {worst:.2e}"));
}

fn criterion_2(out: &mut Outcome) {
    let spec = PdfSpec::haagerup(&[0.3, 0.5]);
    let truth = 0.91f64.ln() + 0.75f64.ln();
    let order = LetterOrder::standard(2);
    let f1 = entropy::formula1_sequence(&spec, 4).unwrap();
    let f2 = entropy::formula2_sequence(&spec, 3).unwrap();
    let vb = entropy::run(&spec, Method::Verblunsky, &opts(3, false)).unwrap();
    let sw = entropy::seward_terms(&spec, &order, 3).unwrap();
    let values = [
        ("formula1", f1.partial_sums[3]),
        ("formula2", f2.partial_sums[3]),
        ("verblunsky", vb.partial_sums[3]),
        ("seward", sw.partial_sums[3]),
    ];
    for (a, x) in values {
        for (b, y) in values {
            out.check((x - y).abs() < 1e-8, || format!("{a} vs {b}: {:.2e}", (x - y).abs()));
        }
        out.check((x - truth).abs() < 1e-8, || {
            format!("{a} vs closed form: {:.2e}", (x - truth).abs())
        });
    }
    let en = Enumeration::length_lex_ball(&order, 4);
    let steps = vb.step_terms.as_ref().unwrap();
    let mut worst_tail: f64 = 0.0;
    for (step, t) in en.steps().iter().zip(steps) {
        if step.new_element.len() >= 2 {
            worst_tail = worst_tail.max(t.abs());
        }
    }
    out.check(worst_tail < 1e-12, || {
        format!("Verblunsky term for |g| ≥ 2 of size {worst_tail:.2e}")
    });
    out.note(format!(
        "estimate {:.12}, max |term| beyond |g|=1 {worst_tail:.1e}",
        values[0].1
    ));
}

fn random_contraction(rows: usize, cols: usize, rng: &mut impl Rng) -> Contraction {
    let m = randrep::ginibre(rows, cols, rng);
    let target = 0.9 * rng.random::<f64>();
    let norm = matent::operator_norm(&m);
    Contraction::new(m * Complex64::new(target / norm, 0.0)).unwrap()
}

fn criterion_3(out: &mut Outcome) {
    let order = LetterOrder::standard(2);
    let en = Enumeration::length_lex(&order, 21);
    let mut rng = stream_rng(2024, 0);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let k = 1 + trial % 2;
        let coeffs: Vec<Contraction> = en
            .steps()
            .iter()
            .map(|s| {
                let (rows, cols) = verblunsky::coefficient_shape(&en.prefix(s.index), &s.new_element, k).unwrap();
                random_contraction(rows, cols, &mut rng)
            })
            .collect();
        let q = verblunsky::reconstruct(k, &coeffs, &en).unwrap();
        let back = verblunsky::coefficients_of(&q, &en, 20).unwrap();
        for (a, b) in coeffs.iter().zip(&back) {
            let err = (a.matrix() - b.matrix()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            worst = worst.max(err);
        }
    }
    out.check(worst < 1e-9, || format!("max roundtrip error {worst:.2e}"));
    out.note(format!("max roundtrip error {worst:.2e}"));
}

fn random_pd(dim: usize, rng: &mut impl Rng) -> HermitianMatrix {
    let g = randrep::ginibre(dim, dim, rng);
    let m = &g * g.adjoint() + CMatrix::identity(dim, dim) * Complex64::new(0.05, 0.0);
    HermitianMatrix::from_raw(m)
}

fn criterion_4(out: &mut Outcome) {
    let mut rng = stream_rng(4, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let dim = rng.random_range(3..=8);
        let q = random_pd(dim, &mut rng);
        let mut idx: Vec<usize> = (0..dim).collect();
        idx.shuffle(&mut rng);
        let a_len = rng.random_range(1..=dim - 2);
        let b_len = rng.random_range(1..=dim - a_len - 1);
        let (alpha, rest) = idx.split_at(a_len);
        let (beta, gamma) = rest.split_at(b_len);
        let ab: Vec<usize> = alpha.iter().chain(beta).copied().collect();
        let bg: Vec<usize> = beta.iter().chain(gamma).copied().collect();

        let h = |s: &[usize]| matent::entropy(&q, s).unwrap();
        let hc = |s: &[usize], t: &[usize]| matent::cond_entropy(&q, s, t).unwrap();

        // chain rule
        let chain = (h(&ab) - h(alpha) - hc(beta, alpha)).abs();
        // symmetry of conditional mutual information
        let i_ab = matent::mutual_info(&q, alpha, beta, gamma).unwrap();
        let i_ba = matent::mutual_info(&q, beta, alpha, gamma).unwrap();
        let sym = (i_ab - i_ba).abs();
        // conditioning reduces entropy, and strong subadditivity
        let mono = (hc(alpha, &bg) - hc(alpha, gamma)).max(0.0);
        let ssa = (-i_ab).max(0.0);
        // Schur determinant identity against an LU oracle
        let qa = q.block(alpha, alpha);
        let s = q.block(beta, beta) - q.block(beta, alpha) * qa.clone().try_inverse().unwrap() * q.block(alpha, beta);
        let joint = q.block(&ab, &ab);
        let schur = (lu_logdet(&joint) - lu_logdet(&qa) - lu_logdet(&s)).abs();
        let lib = (2.0 * h(&ab) - lu_logdet(&joint)).abs();
        let lib_cond = (2.0 * hc(beta, alpha) - lu_logdet(&s)).abs();

        for (name, v) in [
            ("chain rule", chain),
            ("symmetry", sym),
            ("monotonicity", mono),
            ("strong subadditivity", ssa),
            ("Schur determinant", schur),
            ("log-det vs LU", lib),
            ("conditional log-det vs LU", lib_cond),
        ] {
            worst = worst.max(v);
            out.check(v < 1e-9, || format!("{name} violated by {v:.2e} at dim {dim}"));
        }
    }
    out.note(format!("max violation {worst:.2e}"));
}

/// All reduced words of length ≤ n, by reducing every letter sequence.
fn brute_ball(r: u32, n: usize) -> HashSet<Word> {
    let letters: Vec<i32> = (1..=r as i32).flat_map(|i| [i, -i]).collect();
    let mut out = HashSet::new();
    let mut seqs: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..=n {
        let mut next = Vec::new();
        for s in &seqs {
            out.insert(reduce(r, s).unwrap());
            for &l in &letters {
                let mut t = s.clone();
                t.push(l);
                next.push(t);
            }
        }
        seqs = next;
    }
    out.retain(|x| x.len() <= n);
    out
}

fn set_of(v: &[Word]) -> BTreeSet<Vec<i32>> {
    v.iter().map(|x| x.letters().to_vec()).collect()
}

fn orders(r: u32) -> Vec<LetterOrder> {
    let std = LetterOrder::standard(r);
    let mut mixed: Vec<i32> = std.letters().to_vec();
    mixed.rotate_left(1);
    vec![std.clone(), std.reversed(), LetterOrder::new(r, mixed).unwrap()]
}

/// The three-part description of the crescent of `g`, built directly from
/// words with prefix `g⁻¹`.
fn described_crescent(g: &Word, order: &LetterOrder) -> BTreeSet<Vec<i32>> {
    let n = g.len();
    let ginv = g.inverse();
    let (s_n, s_n1) = (g.letters()[0], g.letters().get(1).copied());
    let mut out = BTreeSet::new();
    for m in [2 * n - 2, 2 * n - 1, 2 * n] {
        if m == 2 * n - 2 {
            let Some(s_n1) = s_n1 else { continue };
            if order.cmp_letters(s_n1, -s_n) != std::cmp::Ordering::Less {
                continue;
            }
        }
        for u in order.sphere(m - n) {
            let t = ginv.multiply(&u).unwrap();
            if t.len() != m || !t.has_prefix(&ginv) {
                continue;
            }
            // t_j is the j-th letter from the right
            if m == 2 * n && order.cmp_letters(t.letters()[m - n], s_n) != std::cmp::Ordering::Less {
                continue;
            }
            out.insert(t.letters().to_vec());
        }
    }
    out
}

fn criterion_5(out: &mut Outcome) {
    for r in 1..=3u32 {
        let std = LetterOrder::standard(r);
        for n in 0..=4 {
            let b = ball(r, n, &std).unwrap();
            let brute = brute_ball(r, n);
            out.check(b.len() == brute.len() && b.len() == ball_size(r, n), || {
                format!("|B_{n}| mismatch at r={r}")
            });
            out.check(b.elements().iter().all(|x| brute.contains(x)), || {
                format!("B_{n} content at r={r}")
            });
            let overlaps: usize = (1..=r as i32).map(|s| shift_overlap(&b, s).len()).sum();
            out.check(b.len() - overlaps == 1, || {
                format!("count identity fails at r={r} n={n}")
            });
        }
        for n in 0..=3 {
            let inner = ball(r, n, &std).unwrap();
            let outer = ball(r, n + 1, &std).unwrap();
            for s in std.letters() {
                let mut expected = set_of(inner.elements());
                expected.extend(inner.elements().iter().map(|h| h.left_mul(*s).letters().to_vec()));
                out.check(set_of(&shift_overlap(&outer, *s)) == expected, || {
                    format!("cup-cap fails at r={r} n={n} s={s}")
                });
            }
        }
    }

    // crescents partition B_5 ∖ {e}, and match the three-part description
    for r in 1..=3u32 {
        for order in orders(r) {
            let max_g = if r == 3 { 4 } else { 5 };
            let mut seen: BTreeSet<Vec<i32>> = BTreeSet::new();
            let mut dup = 0;
            for g in order.ball_words(max_g).into_iter().skip(1) {
                let c = crescent(&g, &order).unwrap();
                let lens: Vec<usize> = c.iter().map(Word::len).collect();
                let n = g.len();
                out.check(lens.iter().all(|&l| l + 2 >= 2 * n && l <= 2 * n), || {
                    format!("crescent of {g} leaves S_(2n−2..2n)")
                });
                if n <= 3 {
                    out.check(set_of(&c) == described_crescent(&g, &order), || {
                        format!(
                            "crescent of {g} differs from its case description (order {:?})",
                            order.letters()
                        )
                    });
                }
                for x in c.iter().filter(|x| x.len() <= 5) {
                    if !seen.insert(x.letters().to_vec()) {
                        dup += 1;
                    }
                }
            }
            // crescents of |g| ≥ max_g + 1 lie in S_{≥ 2·max_g}, beyond radius 5
            let all = set_of(&order.ball_words(5)[1..]);
            out.check(dup == 0 && seen == all, || {
                format!(
                    "crescents do not partition B_5∖e at r={r}: {dup} repeats, {} vs {}",
                    seen.len(),
                    all.len()
                )
            });
        }
    }

    // update rules along full length-lex enumerations of B_3
    for r in 1..=3u32 {
        for order in orders(r) {
            let en = Enumeration::length_lex_ball(&order, 3);
            out.check(Enumeration::grounded(&order, en.words().to_vec()).is_ok(), || {
                format!("length-lex enumeration not grounded at r={r}")
            });
            let mut f = GroundedSet::singleton(r);
            for g in &en.words()[1..] {
                let (f2, s) = f.enlarge(g).unwrap();
                for t in order.letters() {
                    let before = set_of(&shift_overlap(&f, *t));
                    let after = set_of(&shift_overlap(&f2, *t));
                    let mut expected = before.clone();
                    if *t == s {
                        expected.insert(g.letters().to_vec());
                    } else if *t == -s {
                        expected.insert(g.left_mul(-s).letters().to_vec());
                    }
                    out.check(after == expected, || format!("update rule fails adding {g}, t={t}"));
                }
                f = f2;
            }
        }
    }
}

fn criterion_6(out: &mut Outcome) {
    let seed = 7;
    let reports = vec![
        randrep::test_wishart_k1(16, 20000, seed),
        randrep::test_sigma_k1(8, 20000, seed),
        randrep::test_dil_dist(&DilDistConfig::standard(24, 4000, seed)).unwrap(),
        randrep::test_coefficient_independence(2, 32, 1, 4, 5000, seed).unwrap(),
    ];
    let mut summary = Vec::new();
    for r in &reports {
        out.check(r.pass, || format!("{} failed: {:?}", r.test, r.statistics));
        let key = match r.test.as_str() {
            "independence" => "max_abs_corr",
            "dil-dist" => "ks_norm",
            _ => "ks",
        };
        summary.push(format!("{} {key}={:.4}", r.test, r.statistics[key]));
    }
    let dd = &reports[2];
    out.check(
        dd.statistics["reference_n"] == 22.0 && dd.statistics["reference_l"] == 3.0,
        || "dil-dist reference shape".into(),
    );
    out.note(summary.join(", "));
}

fn criterion_7(out: &mut Outcome) {
    let r = randrep::ldp_rate_check(&[50, 100, 200], 0.5);
    out.check(r.pass, || format!("{:?}", r.statistics));
    let dev = r.statistics["n200_rate_deviation"];
    out.note(format!(
        "n=200 deviation {dev:.4} (bound {:.4})",
        r.threshold["n200_rate_deviation"]
    ));
}

fn corpus() -> Vec<(String, PdfSpec)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .expect("specs directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let spec = PdfSpec::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, spec)
        })
        .collect()
}

fn criterion_8(out: &mut Outcome) {
    let specs = corpus();
    out.check(specs.len() >= 8, || "corpus is missing".into());
    let mut worst: f64 = 0.0;
    for (name, spec) in &specs {
        let e = entropy::e_sequences(spec, 3).unwrap();
        for n in 0..3 {
            let (en, en1p, enp) = (2.0 * e[n].0, 2.0 * e[n + 1].1, 2.0 * e[n].1);
            out.check(en1p <= en + 1e-10 && en <= enp + 1e-10, || {
                format!("{name}: interlacing fails at n={n}")
            });
        }
        let r = spec.rank() as f64;
        let order = LetterOrder::standard(spec.rank());
        let sw = entropy::seward_terms(spec, &order, 3).unwrap();
        for n in 0..=3 {
            let direct =
                entropy::ball_entropy(spec, n + 1).unwrap() - (2.0 * r - 1.0) * entropy::ball_entropy(spec, n).unwrap();
            let err = (sw.partial_sums[n] - direct).abs();
            worst = worst.max(err);
            out.check(err < 1e-9, || {
                format!("{name}: Seward identity off by {err:.2e} at n={n}")
            });
        }
    }
    out.note(format!("{} specs, max Seward identity error {worst:.2e}", specs.len()));
}

fn criterion_9(out: &mut Outcome) {
    let pairs = [
        ([0.3, 0.5], [0.6, -0.2]),
        ([0.7, 0.1], [0.2, 0.9]),
        ([0.45, -0.45], [0.0, 0.5]),
    ];
    let mut worst: f64 = 0.0;
    for (a, b) in pairs {
        let spec = PdfSpec::diag(vec![PdfSpec::haagerup(&a), PdfSpec::haagerup(&b)]);
        let truth: f64 = a.iter().chain(&b).map(|x: &f64| (1.0 - x * x).ln()).sum();
        for m in Method::MAIN {
            let r = entropy::estimate_hann(&spec, m, &opts(3, true)).unwrap();
            let add = r.additivity.as_ref().unwrap();
            worst = worst.max(add.difference);
            out.check(add.difference < 1e-8, || {
                format!("{m}: additivity gap {:.2e}", add.difference)
            });
            out.check((r.estimate - truth).abs() < 1e-8, || {
                format!("{m}: joint value off the closed form")
            });
        }
    }
    out.note(format!("max additivity gap {worst:.2e}"));
}

fn main() {
    let results = [
        run(
            1,
            "exact Z-case entropy, all four methods",
            Some(Duration::from_secs(1)),
            criterion_1,
        ),
        run(
            2,
            "cross-method agreement, rank 2",
            Some(Duration::from_secs(10)),
            criterion_2,
        ),
        run(3, "Verblunsky bijection", Some(Duration::from_secs(30)), criterion_3),
        run(4, "entropy-calculus fuzz", None, criterion_4),
        run(5, "free-group combinatorics", None, criterion_5),
        run(6, "distributional checks", Some(Duration::from_secs(300)), criterion_6),
        run(7, "LDP rate by quadrature", None, criterion_7),
        run(8, "interlacing and Seward identity on the corpus", None, criterion_8),
        run(9, "additivity under diagonal join", None, criterion_9),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
