//! Two-qubit mixed states as quantum teleportation channels.
//!
//! Given a density matrix ρ on C² ⊗ C², this crate computes
//!
//! * the maximal average fidelity of the standard teleportation scheme
//!   (Bell-basis measurement by the sender, arbitrary unitary correction by
//!   the receiver) and the correction strategy that attains it,
//! * the maximal Bell-CHSH value,
//! * the partial-transpose separability test,
//!
//! and checks the closed-form fidelity against a direct simulation of the
//! protocol. See the guide in `book/` for the background.
//!
//! ```
//! use qchannel::{criteria, states};
//!
//! let rho = states::werner(0.5)?;
//! let report = criteria::analyze(&rho);
//! assert!(report.useful && !report.bell_violating && !report.separable);
//! assert!((report.f_max - 0.75).abs() < 1e-12);
//! # Ok::<(), qchannel::Error>(())
//! ```

pub mod cli;
pub mod criteria;
mod error;
pub mod linalg;
pub mod sim;
pub mod states;
pub mod strategy;
pub mod tol;

pub use criteria::{analyze, ChannelReport};
pub use error::{Error, Result};
pub use states::{DensityMatrix, HsDecomposition, QubitState};
pub use strategy::{optimal_strategy, Strategy};

// Runs the code blocks of the guide as doctests, one module per chapter.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    pub mod states {}
    #[doc = include_str!("../../../book/src/channels.md")]
    pub mod channels {}
    #[doc = include_str!("../../../book/src/strategy.md")]
    pub mod strategy {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
