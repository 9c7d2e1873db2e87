//! Node embedding trainers.
//!
//! Three interchangeable backends train over a [`TrainingStructure`]:
//!
//! * [`Backend::Mf`] factorizes the unified weighted adjacency, so
//!   user-user edges take part like any other observation.
//! * [`Backend::DeepWalk`] runs weighted truncated random walks and trains
//!   skip-gram with negative sampling on window co-occurrences.
//! * [`Backend::Hpe`] samples edges by weight, extends a short walk from one
//!   endpoint and trains skip-gram on (anchor, walk node) pairs.
//!
//! With `workers == 1` every backend is bit-reproducible under a fixed seed.
//! More workers update the shared tables concurrently without locks.

mod alias;
mod deepwalk;
mod hpe;
mod mf;
mod sgns;
mod table;

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{single_structure, CrossDomainSystem, NodeId, TrainingStructure};
use crate::seed::derive_seed;

pub use alias::AliasTable;
pub use deepwalk::{generate_walks, train_deepwalk, TransitionSampler};
pub use hpe::{train_hpe, EdgeSampler};
pub use mf::{edge_gradient, edge_loss, train_mf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Mf,
    DeepWalk,
    Hpe,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Mf, Backend::DeepWalk, Backend::Hpe];

    pub fn label(self) -> &'static str {
        match self {
            Backend::Mf => "MF",
            Backend::DeepWalk => "DeepWalk",
            Backend::Hpe => "HPE",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Mf => "mf",
            Backend::DeepWalk => "deepwalk",
            Backend::Hpe => "hpe",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(Backend::Mf),
            "deepwalk" => Ok(Backend::DeepWalk),
            "hpe" => Ok(Backend::Hpe),
            _ => Err(Error::InvalidParam(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dims: usize,
    /// Passes over the training signal: edges for MF, the walk corpus for
    /// DeepWalk, `epochs * |E|` edge samples for HPE.
    pub epochs: usize,
    pub learning_rate: f64,
    /// Floor of the linear learning-rate decay.
    pub min_learning_rate: f64,
    pub negatives: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    /// Walk length extended from each sampled edge (HPE).
    pub hpe_walk_length: usize,
    /// L2 penalty for MF. May be zero.
    pub regularization: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dims: 64,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            negatives: 5,
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            hpe_walk_length: 3,
            regularization: 1e-4,
            seed: 42,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dims", self.dims),
            ("epochs", self.epochs),
            ("negatives", self.negatives),
            ("walks_per_node", self.walks_per_node),
            ("walk_length", self.walk_length),
            ("window", self.window),
            ("hpe_walk_length", self.hpe_walk_length),
            ("workers", self.workers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        if self.window > self.walk_length {
            return Err(Error::InvalidParam(format!(
                "window {} exceeds walk_length {}",
                self.window, self.walk_length
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParam("learning_rate must be positive".into()));
        }
        if !(self.min_learning_rate.is_finite()
            && self.min_learning_rate > 0.0
            && self.min_learning_rate <= self.learning_rate)
        {
            return Err(Error::InvalidParam(
                "min_learning_rate must lie in (0, learning_rate]".into(),
            ));
        }
        if !(self.regularization.is_finite() && self.regularization >= 0.0) {
            return Err(Error::InvalidParam("regularization must be >= 0".into()));
        }
        Ok(())
    }

    /// Linearly decayed rate after `done` of `total` steps.
    pub(crate) fn rate_at(&self, done: usize, total: usize) -> f64 {
        let progress = if total == 0 {
            1.0
        } else {
            done as f64 / total as f64
        };
        (self.learning_rate * (1.0 - progress)).max(self.min_learning_rate)
    }
}

/// Trained vectors for every node of a structure.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    dims: usize,
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    vectors: Vec<f64>,
    context: Option<Vec<f64>>,
    pub trainer: Option<Backend>,
    pub seed: u64,
    pub config: Option<TrainConfig>,
}

impl EmbeddingModel {
    /// Wraps raw vectors, e.g. read from a model file or planted by a test.
    pub fn from_vectors(dims: usize, rows: Vec<(NodeId, Vec<f64>)>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidParam("dims must be positive".into()));
        }
        let mut nodes = Vec::with_capacity(rows.len());
        let mut vectors = Vec::with_capacity(rows.len() * dims);
        for (node, v) in rows {
            if v.len() != dims {
                return Err(Error::InvalidParam(format!(
                    "vector for {node} has {} entries, expected {dims}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "vector for {node} is not finite"
                )));
            }
            nodes.push(node);
            vectors.extend(v);
        }
        let index: HashMap<NodeId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        if index.len() != nodes.len() {
            return Err(Error::InvalidParam("duplicate node in model".into()));
        }
        Ok(EmbeddingModel {
            dims,
            nodes,
            index,
            vectors,
            context: None,
            trainer: None,
            seed: 0,
            config: None,
        })
    }

    fn trained(
        nodes: Vec<NodeId>,
        vectors: Vec<f64>,
        context: Vec<f64>,
        backend: Backend,
        cfg: &TrainConfig,
    ) -> Self {
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        EmbeddingModel {
            dims: cfg.dims,
            nodes,
            index,
            vectors,
            context: Some(context),
            trainer: Some(backend),
            seed: cfg.seed,
            config: Some(cfg.clone()),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.index.contains_key(node)
    }

    pub fn vector(&self, node: &NodeId) -> Option<&[f64]> {
        self.index.get(node).map(|&i| self.row(i))
    }

    pub fn context_vector(&self, node: &NodeId) -> Option<&[f64]> {
        let ctx = self.context.as_ref()?;
        self.index
            .get(node)
            .map(|&i| &ctx[i * self.dims..(i + 1) * self.dims])
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.vectors[idx * self.dims..(idx + 1) * self.dims]
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.nodes.len())
            .map(|i| self.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.vectors.iter().all(|x| x.is_finite())
    }
}

/// Initial tables for `g`: input rows uniform in `±0.5 / dims`, context rows
/// zero. Rows for nodes found in `warm` are copied from it. The random draws
/// happen for every node regardless, so nodes without a warm start get the
/// same values they would get in a cold run.
pub(crate) fn initial_tables(
    g: &TrainingStructure,
    cfg: &TrainConfig,
    warm: Option<&EmbeddingModel>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dims = cfg.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "init"));
    let bound = 0.5 / dims as f64;
    let n = g.graph().node_count();
    let mut input: Vec<f64> = (0..n * dims)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let mut context = vec![0.0; n * dims];
    if let Some(warm) = warm {
        if warm.dims() != dims {
            return Err(Error::InvalidParam(format!(
                "warm-start model has {} dims, expected {dims}",
                warm.dims()
            )));
        }
        for (i, node) in g.graph().nodes().iter().enumerate() {
            if let Some(v) = warm.vector(node) {
                input[i * dims..(i + 1) * dims].copy_from_slice(v);
            }
            if let Some(c) = warm.context_vector(node) {
                context[i * dims..(i + 1) * dims].copy_from_slice(c);
            }
        }
    }
    Ok((input, context))
}

/// Splits `0..total` into `workers` contiguous shares and runs `job` on each,
/// with a per-worker RNG. One worker runs inline on the calling thread.
pub(crate) fn run_workers<F>(workers: usize, total: usize, seed: u64, job: F)
where
    F: Fn(Range<usize>, &mut ChaCha8Rng) + Sync,
{
    if workers <= 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        job(0..total, &mut rng);
        return;
    }
    let share = total.div_ceil(workers);
    std::thread::scope(|scope| {
        for w in 0..workers {
            let start = (w * share).min(total);
            let end = ((w + 1) * share).min(total);
            let job = &job;
            scope.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("worker-{w}")));
                job(start..end, &mut rng);
            });
        }
    });
}

/// Trains `backend` on `g`.
pub fn train(g: &TrainingStructure, backend: Backend, cfg: &TrainConfig) -> Result<EmbeddingModel> {
    train_warm(g, backend, cfg, None)
}

pub(crate) fn train_warm(
    g: &TrainingStructure,
    backend: Backend,
    cfg: &TrainConfig,
    warm: Option<&EmbeddingModel>,
) -> Result<EmbeddingModel> {
    cfg.validate()?;
    if g.graph().is_empty() {
        return Err(Error::InvalidParam(
            "cannot train on an empty structure".into(),
        ));
    }
    let (input, context) = initial_tables(g, cfg, warm)?;
    let (input, context) = match backend {
        Backend::Mf => mf::fit(g, cfg, input, context)?,
        Backend::DeepWalk => deepwalk::fit(g, cfg, input, context)?,
        Backend::Hpe => hpe::fit(g, cfg, input, context)?,
    };
    Ok(EmbeddingModel::trained(
        g.graph().nodes().to_vec(),
        input,
        context,
        backend,
        cfg,
    ))
}

/// Pretrains on the source domain, then fine-tunes on the target domain for
/// `finetune_epochs` epochs. Nodes present in both (the shared items) start
/// fine-tuning from their pretrained vectors; everything else starts fresh.
/// Zero fine-tuning epochs returns the warm-started tables untouched.
pub fn train_transfer(
    sys: &CrossDomainSystem,
    backend: Backend,
    cfg: &TrainConfig,
    finetune_epochs: usize,
) -> Result<EmbeddingModel> {
    cfg.validate()?;
    if sys.source().edge_count() == 0 || sys.target().edge_count() == 0 {
        return Err(Error::InvalidParam(
            "transfer needs non-empty source and target domains".into(),
        ));
    }
    let pre_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, "pretrain"),
        ..cfg.clone()
    };
    let source = TrainingStructure::from_domain(sys.source());
    let pretrained = train(&source, backend, &pre_cfg)?;
    let target = single_structure(sys);
    if finetune_epochs == 0 {
        let (input, context) = initial_tables(&target, cfg, Some(&pretrained))?;
        return Ok(EmbeddingModel::trained(
            target.graph().nodes().to_vec(),
            input,
            context,
            backend,
            cfg,
        ));
    }
    let fine_cfg = TrainConfig {
        epochs: finetune_epochs,
        ..cfg.clone()
    };
    train_warm(&target, backend, &fine_cfg, Some(&pretrained))
}

/// Word2vec text layout: `<count> <dims>` then `<node> v1 .. vdims` per line.
pub fn write_model<W: Write>(model: &EmbeddingModel, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", model.len(), model.dims())?;
    for (i, node) in model.nodes().iter().enumerate() {
        write!(out, "{node}")?;
        for x in model.row(i) {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_model<R: BufRead>(reader: R) -> Result<EmbeddingModel> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParam("empty model file".into()))??;
    let mut parts = header.split_whitespace();
    let parse_usize = |s: Option<&str>| -> Result<usize> {
        s.and_then(|x| x.parse().ok())
            .ok_or_else(|| Error::InvalidParam(format!("bad model header `{header}`")))
    };
    let count = parse_usize(parts.next())?;
    let dims = parse_usize(parts.next())?;
    let mut rows = Vec::with_capacity(count);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let node: NodeId = fields.next().unwrap_or_default().parse()?;
        let v = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::InvalidParam(format!("bad value `{f}` for {node}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((node, v));
    }
    if rows.len() != count {
        return Err(Error::InvalidParam(format!(
            "model header announces {count} rows, found {}",
            rows.len()
        )));
    }
    EmbeddingModel::from_vectors(dims, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DomainGraph, DomainTag};

    fn sys(src: &[(&str, &str)], tgt: &[(&str, &str)]) -> CrossDomainSystem {
        CrossDomainSystem::new(
            DomainGraph::from_interactions(
                DomainTag::Source,
                src.iter().map(|&(u, i)| (u, i, 1.0)),
            )
            .unwrap(),
            DomainGraph::from_interactions(
                DomainTag::Target,
                tgt.iter().map(|&(u, i)| (u, i, 1.0)),
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            dims: 8,
            walks_per_node: 2,
            walk_length: 6,
            window: 2,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                dims: 0,
                ..Default::default()
            },
            TrainConfig {
                window: 50,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: -1.0,
                ..Default::default()
            },
            TrainConfig {
                min_learning_rate: 1.0,
                ..Default::default()
            },
            TrainConfig {
                regularization: f64::NAN,
                ..Default::default()
            },
            TrainConfig {
                workers: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn learning_rate_decays_to_floor() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.rate_at(0, 100), 0.025);
        assert!((cfg.rate_at(50, 100) - 0.0125).abs() < 1e-15);
        assert_eq!(cfg.rate_at(100, 100), 1e-4);
    }

    #[test]
    fn zero_finetune_keeps_pretrained_shared_vectors() {
        let s = sys(
            &[("a", "x"), ("a", "y"), ("b", "y")],
            &[("c", "x"), ("c", "y"), ("d", "y")],
        );
        let cfg = small_cfg();
        for backend in Backend::ALL {
            let model = train_transfer(&s, backend, &cfg, 0).unwrap();
            let pre_cfg = TrainConfig {
                seed: derive_seed(cfg.seed, "pretrain"),
                ..cfg.clone()
            };
            let pre = train(
                &TrainingStructure::from_domain(s.source()),
                backend,
                &pre_cfg,
            )
            .unwrap();
            for item in s.shared_items() {
                assert_eq!(model.vector(item), pre.vector(item));
            }
        }
    }

    #[test]
    fn disjoint_items_transfer_nothing() {
        let s = sys(
            &[("a", "p"), ("a", "q")],
            &[("c", "x"), ("c", "y"), ("d", "y")],
        );
        let cfg = small_cfg();
        for backend in Backend::ALL {
            let transfer = train_transfer(&s, backend, &cfg, cfg.epochs).unwrap();
            let alone = train(&single_structure(&s), backend, &cfg).unwrap();
            assert_eq!(transfer.vectors, alone.vectors, "{backend}");
        }
    }

    #[test]
    fn model_text_round_trip() {
        let s = sys(&[("a", "x")], &[("c", "x"), ("c", "y")]);
        let model = train(&single_structure(&s), Backend::Hpe, &small_cfg()).unwrap();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 8\n"));
        assert!(text.contains("\ntu:c "));
        let back = read_model(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.nodes(), model.nodes());
        assert_eq!(back.vectors, model.vectors);
    }

    #[test]
    fn truncated_model_file_is_rejected() {
        let text = "3 2\nit:a 1 2\n";
        assert!(read_model(std::io::Cursor::new(text)).is_err());
        let text = "1 2\nit:a 1\n";
        assert!(read_model(std::io::Cursor::new(text)).is_err());
    }
}
