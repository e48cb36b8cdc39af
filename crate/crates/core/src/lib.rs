//! Executable reduction chain from two-counter machine halting to
//! semi-unification.

mod closure;
pub mod cm1;
pub mod cssm;
pub mod error;
pub mod hooper;
pub mod mm2;
pub mod pipeline;
pub mod semiu;
pub mod smn;
pub mod term;

pub use cm1::{Cm1Config, Cm1Instruction, Cm1Machine};
pub use error::ParseError;
pub use mm2::{Mm2Config, Mm2Instruction, Mm2Machine};
pub use semiu::{Lu2Instance, Ru2Instance, SimpleConstraint, SolutionTriple, SsuInstance};
pub use smn::{SmnConfig, SmnInstruction, SmnMachine, State};
pub use term::{Names, Substitution, SuInstance, Term, Var};
