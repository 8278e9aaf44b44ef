//! Dependency-based recurrent networks for relation classification.
//!
//! The pipeline runs from SemEval-style text and dependency parses
//! ([`corpus`]) through shortest-dependency-path extraction and data
//! augmentation ([`sdp`]) into a multichannel deep recurrent model
//! ([`model`]) trained with mini-batch SGD ([`train`]) and scored with the
//! official macro-F1 measure ([`eval`]).

pub mod corpus;
pub mod error;
pub mod eval;
pub mod label;
pub mod model;
pub mod sdp;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, ErrorKind, Result};
pub use label::{Direction, RelationLabel, RelationType, NUM_LABELS, NUM_TYPES};
