//! Solver-agnostic MILP layer: model building (deterministic and SAA),
//! schedule encoding, point checking, text export/import and room
//! post-processing.

pub mod build;
pub mod domains;
pub mod encode;
pub mod export;
pub mod model;
pub mod rooms;

pub use build::{build_deterministic_model, build_saa_model, peak_bound};
pub use domains::{activity_domains, ActivityDomain};
pub use encode::{check_assignment, encode_schedule, Assignment, CheckReport, CHECK_TOLERANCE};
pub use export::{export_model, import_solution, ExportFormat};
pub use model::{Constraint, MipModel, Sense, VarEntity, VarKind, Variable};
pub use rooms::assign_rooms;
