//! Website credibility classification and unreliable-domain discovery.
//!
//! Domains, social-media users and dredge words (search phrases for which an
//! unreliable domain ranks highly) are assembled into a typed graph. A
//! two-layer mean-aggregation message-passing network, optionally trained
//! under a staged easy-to-hard curriculum, classifies domains as reliable or
//! unreliable; its confidence over unlabeled domains drives discovery.

pub mod curriculum;
pub mod embed;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod seed;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use graph::{
    DomainRecord, DredgeWordRecord, EdgeType, HeteroGraph, Label, NodeType, Split, UserRecord, ATTRIBUTE_DIM,
};
