//! Schemas, sequences, patterns and their file formats.

pub mod pattern;
pub mod schema;
pub mod sequence;

pub use pattern::{pattern_matches, Constraints, Element, RefinedPattern, Slot, SlotKind, SlotLayout, TypePattern};
pub use schema::{EventTypeDecl, Schema, TypeId};
pub use sequence::{compare_events, db_to_text, parse_sequence_db, Event, Sequence};
