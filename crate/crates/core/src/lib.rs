//! Annealed almost-periodic entropy of positive definite functions on free
//! groups, Verblunsky coefficients, and Monte Carlo checks against random
//! unitary representations.

pub mod entropy;
pub mod error;
pub mod freegroup;
pub mod groupalg;
pub mod matent;
pub mod pdf;
pub mod randrep;
pub mod stats;
pub mod verblunsky;

pub use entropy::{EntropyOptions, EntropyReport, Method};
pub use error::{Error, Result};
pub use freegroup::{Enumeration, GroundedSet, LetterOrder, Word};
pub use groupalg::GroupAlgebraElement;
pub use matent::{CMatrix, Contraction, HermitianMatrix, PartialThreeBlock};
pub use pdf::{PartialPdf, PdfSpec};
pub use randrep::{RandomRepresentation, SampleReport};
pub use verblunsky::VerblunskySequence;
