//! Superhighway construction for cross-domain collaborative filtering.
//!
//! Two bipartite user-item domains that share part of their item catalog are
//! joined into one training graph. Users from either domain whose
//! interactions fall mostly on shared items become candidates, and every
//! cross-domain candidate pair is connected by a direct user-user edge
//! weighted by the number of items the two users have in common.
//!
//! The crate also carries the pipeline around the construction:
//!
//! * [`data`]: TSV ingestion and a latent-factor synthetic generator.
//! * [`graph`]: domain graphs, the cross-domain system and the
//!   single/highway training structures.
//! * [`construct`]: candidate identification and superhighway edges.
//! * [`embed`]: matrix factorization, DeepWalk-style and HPE-style trainers,
//!   plus pretrain/fine-tune transfer.
//! * [`eval`]: holdout splits, MAP@k with items as queries, grid search.
//! * [`cli`]: the `shx` command-line frontend and its artifact formats.

pub mod artifact;
pub mod cli;
pub mod construct;
pub mod data;
pub mod embed;
pub mod error;
pub mod eval;
pub mod graph;
pub mod seed;

pub use construct::{
    construct_superhighway, identify_candidates, superhighway_weight, CandidateSet,
    ConstructOptions, ConstructionParams, SuperhighwayEdge, SuperhighwayPlan,
};
pub use data::{generate_synthetic, ingest, IngestOptions, SynthConfig, SyntheticData};
pub use embed::{
    train, train_deepwalk, train_hpe, train_mf, train_transfer, Backend, EmbeddingModel,
    TrainConfig,
};
pub use error::{Error, Result};
pub use eval::{
    average_precision_at_k, evaluate, grid_search, run_structure, split, split_side, EvalOptions,
    EvalReport, EvalSplit, GridCell, GridOptions, ParamRange, QueryMode, ResultTable, RunEcho,
    Similarity, TableRow,
};
pub use graph::{
    merge_highway, single_structure, stats, CrossDomainSystem, DomainGraph, DomainTag, Graph,
    GraphBuilder, Namespace, NodeId, Provenance, StatsReport, StructureKind, TrainingStructure,
};
