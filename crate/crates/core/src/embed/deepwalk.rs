use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::alias::AliasTable;
use super::sgns::{noise_table, Scratch, SkipGram};
use super::table::ParamTable;
use super::{run_workers, EmbeddingModel, TrainConfig};
use crate::error::Result;
use crate::graph::{Graph, TrainingStructure};
use crate::seed::derive_seed;

/// Weighted next-hop sampling, one alias table per node.
pub struct TransitionSampler<'g> {
    graph: &'g Graph,
    tables: Vec<Option<AliasTable>>,
}

impl<'g> TransitionSampler<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let tables = (0..graph.node_count())
            .map(|v| AliasTable::new(graph.neighbor_weights(v)))
            .collect();
        TransitionSampler { graph, tables }
    }

    /// Next node after `v`, or `None` for an isolated node.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Option<usize> {
        let table = self.tables[v].as_ref()?;
        Some(self.graph.neighbor_indices(v)[table.sample(rng)] as usize)
    }

    pub fn walk<R: Rng + ?Sized>(
        &self,
        start: usize,
        length: usize,
        rng: &mut R,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        let mut cur = start;
        out.push(cur as u32);
        while out.len() < length {
            match self.step(cur, rng) {
                Some(next) => {
                    cur = next;
                    out.push(cur as u32);
                }
                None => break,
            }
        }
    }
}

/// `walks_per_node` passes; each pass visits every non-isolated node once
/// in shuffled order and emits one walk of `walk_length` nodes from it.
pub fn generate_walks(graph: &Graph, cfg: &TrainConfig) -> Vec<Vec<u32>> {
    let sampler = TransitionSampler::new(graph);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "walks"));
    let mut starts: Vec<usize> = (0..graph.node_count())
        .filter(|&v| graph.degree(v) > 0)
        .collect();
    let mut walks = Vec::with_capacity(starts.len() * cfg.walks_per_node);
    let mut buf = Vec::with_capacity(cfg.walk_length);
    for _ in 0..cfg.walks_per_node {
        starts.shuffle(&mut rng);
        for &s in &starts {
            sampler.walk(s, cfg.walk_length, &mut rng, &mut buf);
            walks.push(buf.clone());
        }
    }
    walks
}

pub(crate) fn fit(
    g: &TrainingStructure,
    cfg: &TrainConfig,
    input: Vec<f64>,
    context: Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let graph = g.graph();
    let walks = generate_walks(graph, cfg);
    let mut freq = vec![0.0; graph.node_count()];
    for walk in &walks {
        for &v in walk {
            freq[v as usize] += 1.0;
        }
    }
    let Some(noise) = noise_table(&freq) else {
        return Ok((input, context));
    };
    let input = ParamTable::from_values(cfg.dims, input);
    let context = ParamTable::from_values(cfg.dims, context);
    let sg = SkipGram {
        input: &input,
        context: &context,
        noise: &noise,
        negatives: cfg.negatives,
        dims: cfg.dims,
        shared: false,
    };

    // Corpus positions across all epochs drive the learning-rate schedule.
    let total = walks.len() * cfg.epochs;
    run_workers(
        cfg.workers,
        total,
        derive_seed(cfg.seed, "deepwalk"),
        |range, rng| {
            let mut scratch = Scratch::new(sg.dims);
            let len = range.len();
            for (done, slot) in range.enumerate() {
                let walk = &walks[slot % walks.len()];
                let lr = cfg.rate_at(done, len);
                for (i, &center) in walk.iter().enumerate() {
                    let lo = i.saturating_sub(cfg.window);
                    let hi = (i + cfg.window + 1).min(walk.len());
                    for &ctx in &walk[lo..hi] {
                        if ctx == center {
                            continue;
                        }
                        sg.step(center as usize, ctx as usize, lr, rng, &mut scratch);
                    }
                }
            }
        },
    );
    Ok((input.into_values(), context.into_values()))
}

/// DeepWalk-style embeddings: weighted random walks + skip-gram.
pub fn train_deepwalk(g: &TrainingStructure, cfg: &TrainConfig) -> Result<EmbeddingModel> {
    super::train(g, super::Backend::DeepWalk, cfg)
}
