//! Dynamic epistemic logic: formulas, Kripke and action models, updates,
//! synthesis of action models from DBI goals, bisimulation and privatization.

pub mod bisim;
pub mod document;
pub mod dot;
pub mod fixtures;
pub mod formula;
pub mod gen;
pub mod model;
pub mod privatization;
pub mod synthesis;
pub mod update;
pub mod verify;

pub use formula::{parse, Agent, Formula};
pub use model::{ActionModel, KripkeModel};
