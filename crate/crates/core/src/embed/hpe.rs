//! HPE-style preference embedding.
//!
//! Each training sample draws an edge with probability proportional to its
//! weight, orients it at random as `(anchor, start)`, and walks
//! `hpe_walk_length` nodes from `start`. Every walk node other than the
//! anchor becomes a positive context for the anchor. Negatives follow
//! weighted degree raised to 3/4.
//!
//! Unlike the DeepWalk backend there is one vector per node, used on both
//! sides of every pair, so nodes a few hops apart are pulled together
//! directly. The returned context table is a copy of the node table.

use rand::Rng;

use super::alias::AliasTable;
use super::deepwalk::TransitionSampler;
use super::sgns::{noise_table, Scratch, SkipGram};
use super::table::ParamTable;
use super::{run_workers, EmbeddingModel, TrainConfig};
use crate::error::Result;
use crate::graph::{Graph, TrainingStructure};
use crate::seed::derive_seed;

/// Draws undirected edges with probability proportional to weight.
pub struct EdgeSampler {
    edges: Vec<(u32, u32)>,
    table: AliasTable,
}

impl EdgeSampler {
    pub fn new(graph: &Graph) -> Option<EdgeSampler> {
        let mut edges = Vec::with_capacity(graph.edge_count());
        let mut weights = Vec::with_capacity(graph.edge_count());
        for (a, b, w) in graph.edges() {
            edges.push((a as u32, b as u32));
            weights.push(w);
        }
        let table = AliasTable::new(&weights)?;
        Some(EdgeSampler { edges, table })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let (a, b) = self.edges[self.table.sample(rng)];
        (a as usize, b as usize)
    }
}

pub(crate) fn fit(
    g: &TrainingStructure,
    cfg: &TrainConfig,
    input: Vec<f64>,
    context: Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let graph = g.graph();
    let Some(edges) = EdgeSampler::new(graph) else {
        return Ok((input, context));
    };
    let transitions = TransitionSampler::new(graph);
    let degrees: Vec<f64> = (0..graph.node_count())
        .map(|v| graph.weighted_degree(v))
        .collect();
    let noise = noise_table(&degrees).expect("graph has edges");

    let _ = context;
    let table = ParamTable::from_values(cfg.dims, input);
    let sg = SkipGram {
        input: &table,
        context: &table,
        noise: &noise,
        negatives: cfg.negatives,
        dims: cfg.dims,
        shared: true,
    };
    let total = cfg.epochs * graph.edge_count();
    run_workers(
        cfg.workers,
        total,
        derive_seed(cfg.seed, "hpe"),
        |range, rng| {
            let mut scratch = Scratch::new(sg.dims);
            let len = range.len();
            for done in 0..len {
                let lr = cfg.rate_at(done, len);
                let (a, b) = edges.sample(rng);
                let (anchor, mut cur) = if rng.random::<bool>() { (a, b) } else { (b, a) };
                for t in 0..cfg.hpe_walk_length {
                    if cur != anchor {
                        sg.step(anchor, cur, lr, rng, &mut scratch);
                    }
                    if t + 1 < cfg.hpe_walk_length {
                        match transitions.step(cur, rng) {
                            Some(next) => cur = next,
                            None => break,
                        }
                    }
                }
            }
        },
    );
    let values = table.into_values();
    Ok((values.clone(), values))
}

/// HPE-style embeddings: weighted edge sampling + short walks + skip-gram.
pub fn train_hpe(g: &TrainingStructure, cfg: &TrainConfig) -> Result<EmbeddingModel> {
    super::train(g, super::Backend::Hpe, cfg)
}
