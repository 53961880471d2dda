//! Fixtures shared by the benchmarks.

use apent_core::freegroup::{ball, GroundedSet, LetterOrder};
use apent_core::matent::HermitianMatrix;
use apent_core::randrep::{ginibre, RandomRepresentation};
use apent_core::stats::stream_rng;
use apent_core::PdfSpec;

/// Haagerup functions of rank 1 and 2 with nontrivial parameters.
pub fn haagerup_specs() -> Vec<(&'static str, PdfSpec)> {
    vec![
        ("z", PdfSpec::haagerup(&[0.5])),
        ("r2", PdfSpec::haagerup(&[0.3, 0.5])),
        ("r2-mollified", PdfSpec::mollified(0.5, PdfSpec::haagerup(&[0.8, 0.6]))),
    ]
}

/// A well-conditioned random positive definite matrix.
pub fn random_pd(dim: usize, seed: u64) -> HermitianMatrix {
    let g = ginibre(dim, dim, &mut stream_rng(seed, 0));
    HermitianMatrix::from_raw(&g * g.adjoint() + HermitianMatrix::identity(dim).into_matrix())
}

pub fn rank2_ball(radius: usize) -> GroundedSet {
    ball(2, radius, &LetterOrder::standard(2)).expect("valid radius")
}

pub fn representation(n: usize, seed: u64) -> RandomRepresentation {
    RandomRepresentation::sample(2, n, &mut stream_rng(seed, 0))
}
