//! Information-acquisition games over noisy tests of Boolean variables.
//!
//! An agent is told a formula `φ` over `v1 … vn`, may run `k` noisy tests of
//! individual variables, and then guesses `φ`'s truth value or abstains. This
//! crate computes everything exactly over rationals:
//!
//! - [`formula`]: truth tables, relevance, projection, antisymmetrization.
//! - [`prob`]: posteriors, characteristic fractions, traces.
//! - [`game`]: optimal play by backward induction and simple heuristics.
//! - [`lp`]: an exact simplex solver and region-emptiness tests.
//! - [`ri`]: the conflict-LP sufficient condition for rational inattention and censuses.
//! - [`complexity`]: optimal test-outcome sequences and test complexity.

pub mod complexity;
pub mod error;
pub mod formula;
pub mod game;
pub mod lp;
pub mod prob;
pub mod rational;
pub mod ri;

pub use error::{Error, Result};
pub use formula::{Assignment, TruthTable};
pub use rational::Rational;
