//! Versioned on-disk artifacts passed between pipeline stages.
//!
//! | artifact  | layout                                                       |
//! |-----------|--------------------------------------------------------------|
//! | system    | JSON envelope `shx-system` v1: both domains plus the split   |
//! | structure | text, `#SHX structure v1` header, provenance, nodes, edges   |
//! | model     | word2vec text plus a `<path>.meta.json` envelope `shx-model` |
//! | report    | JSON envelope `shx-report` / `shx-grid` v1                   |
//!
//! Readers reject a wrong magic or version instead of guessing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embed::{read_model, write_model, Backend, EmbeddingModel, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::EvalSplit;
use crate::graph::{
    CrossDomainSystem, DomainGraph, DomainTag, GraphBuilder, NodeId, Provenance, TrainingStructure,
};

pub const VERSION: u32 = 1;
pub const SYSTEM_FORMAT: &str = "shx-system";
pub const MODEL_FORMAT: &str = "shx-model";
pub const REPORT_FORMAT: &str = "shx-report";
pub const GRID_FORMAT: &str = "shx-grid";
pub const STRUCTURE_HEADER: &str = "#SHX structure v1";

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::Artifact {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| bad(path, e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    body: T,
}

/// Writes `body` inside a `{format, version, body}` envelope, pretty-printed
/// with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, format: &str, body: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(
        &mut out,
        &Envelope {
            format: format.to_string(),
            version: VERSION,
            body,
        },
    )?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let value: serde_json::Value =
        serde_json::from_reader(open(path)?).map_err(|e| bad(path, e.to_string()))?;
    let found = value.get("format").and_then(|f| f.as_str()).unwrap_or("");
    if found != format {
        return Err(bad(
            path,
            format!("expected format `{format}`, found `{found}`"),
        ));
    }
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(u64::from(VERSION)) {
        return Err(bad(
            path,
            format!("unsupported {format} version {version:?}, expected {VERSION}"),
        ));
    }
    let env: Envelope<T> = serde_json::from_value(value).map_err(|e| bad(path, e.to_string()))?;
    Ok(env.body)
}

/// Peeks at the `format` field of a JSON artifact.
pub fn json_format(path: &Path) -> Result<String> {
    let value: serde_json::Value =
        serde_json::from_reader(open(path)?).map_err(|e| bad(path, e.to_string()))?;
    Ok(value
        .get("format")
        .and_then(|f| f.as_str())
        .unwrap_or_default()
        .to_string())
}

#[derive(Serialize, Deserialize)]
struct DomainRecord {
    users: Vec<String>,
    items: Vec<String>,
    /// `(user index, item index, weight)`.
    edges: Vec<(u32, u32, f64)>,
}

impl DomainRecord {
    fn from_domain(d: &DomainGraph) -> Self {
        let g = d.graph();
        let users = d.user_range();
        let items = d.item_range();
        let mut edges = Vec::with_capacity(g.edge_count());
        for u in users.clone() {
            for (&i, &w) in g.neighbor_indices(u).iter().zip(g.neighbor_weights(u)) {
                edges.push((
                    (u - users.start) as u32,
                    (i as usize - items.start) as u32,
                    w,
                ));
            }
        }
        DomainRecord {
            users: d.users().iter().map(|n| n.local_id.clone()).collect(),
            items: d.items().iter().map(|n| n.local_id.clone()).collect(),
            edges,
        }
    }

    fn into_domain(self, tag: DomainTag, path: &Path) -> Result<DomainGraph> {
        let users: Vec<NodeId> = self
            .users
            .into_iter()
            .map(|u| NodeId::user(tag, u))
            .collect();
        let items: Vec<NodeId> = self.items.into_iter().map(NodeId::item).collect();
        let mut b = GraphBuilder::new();
        for n in users.iter().chain(&items) {
            b.add_node(n.clone());
        }
        for (u, i, w) in self.edges {
            let (Some(user), Some(item)) = (users.get(u as usize), items.get(i as usize)) else {
                return Err(bad(path, format!("{tag} edge ({u}, {i}) out of range")));
            };
            b.add_edge(user.clone(), item.clone(), w)?;
        }
        DomainGraph::new(tag, b.build())
    }
}

#[derive(Serialize, Deserialize)]
struct SystemRecord {
    source: DomainRecord,
    target: DomainRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<EvalSplit>,
}

/// A system plus the evaluation split it was cut with, if any.
pub fn write_system(path: &Path, sys: &CrossDomainSystem, split: Option<&EvalSplit>) -> Result<()> {
    write_json(
        path,
        SYSTEM_FORMAT,
        &SystemRecord {
            source: DomainRecord::from_domain(sys.source()),
            target: DomainRecord::from_domain(sys.target()),
            split: split.cloned(),
        },
    )
}

pub fn read_system(path: &Path) -> Result<(CrossDomainSystem, Option<EvalSplit>)> {
    let rec: SystemRecord = read_json(path, SYSTEM_FORMAT)?;
    let source = rec.source.into_domain(DomainTag::Source, path)?;
    let target = rec.target.into_domain(DomainTag::Target, path)?;
    Ok((CrossDomainSystem::new(source, target)?, rec.split))
}

pub fn write_structure(path: &Path, s: &TrainingStructure) -> Result<()> {
    let mut out = create(path)?;
    let g = s.graph();
    writeln!(out, "{STRUCTURE_HEADER}")?;
    writeln!(
        out,
        "#provenance {}",
        serde_json::to_string(s.provenance())?
    )?;
    writeln!(out, "#nodes {}", g.node_count())?;
    for n in g.nodes() {
        writeln!(out, "{n}")?;
    }
    writeln!(out, "#edges {}", g.edge_count())?;
    for (a, b, w) in g.edges() {
        writeln!(out, "{}\t{}\t{w}", g.node(a), g.node(b))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_structure(path: &Path) -> Result<TrainingStructure> {
    let mut lines = open(path)?.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(bad(path, format!("truncated before {what}"))),
        }
    };
    let (_, header) = next("header")?;
    if header != STRUCTURE_HEADER {
        return Err(bad(
            path,
            format!("expected `{STRUCTURE_HEADER}`, found `{header}`"),
        ));
    }
    let (_, prov) = next("provenance")?;
    let provenance: Provenance = prov
        .strip_prefix("#provenance ")
        .ok_or_else(|| bad(path, "missing provenance line"))
        .and_then(|j| serde_json::from_str(j).map_err(|e| bad(path, e.to_string())))?;
    let count = |line: String, tag: &str| -> Result<usize> {
        line.strip_prefix(tag)
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| bad(path, format!("expected `{tag}<count>`, found `{line}`")))
    };
    let (_, l) = next("node count")?;
    let n = count(l, "#nodes ")?;
    let mut b = GraphBuilder::new();
    for _ in 0..n {
        let (lineno, l) = next("node list")?;
        let node: NodeId = l
            .parse()
            .map_err(|e: Error| bad(path, format!("line {lineno}: {e}")))?;
        b.add_node(node);
    }
    let (_, l) = next("edge count")?;
    let m = count(l, "#edges ")?;
    for _ in 0..m {
        let (lineno, l) = next("edge list")?;
        let f: Vec<&str> = l.split('\t').collect();
        let parsed = match f.as_slice() {
            [a, c, w] => a
                .parse::<NodeId>()
                .and_then(|a| Ok((a, c.parse::<NodeId>()?)))
                .and_then(|(a, c)| {
                    w.parse::<f64>()
                        .map(|w| (a, c, w))
                        .map_err(|_| Error::InvalidParam(format!("bad weight `{w}`")))
                }),
            _ => Err(Error::InvalidParam("expected 3 fields".into())),
        };
        let (a, c, w) = parsed.map_err(|e| bad(path, format!("line {lineno}: {e}")))?;
        b.add_edge(a, c, w)
            .map_err(|e| bad(path, format!("line {lineno}: {e}")))?;
    }
    let graph = b.build();
    if graph.node_count() != n || graph.edge_count() != m {
        return Err(bad(path, "duplicate nodes or edges"));
    }
    Ok(TrainingStructure::new(graph, provenance))
}

/// Training metadata kept next to the word2vec-format vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub trainer: Option<Backend>,
    pub seed: u64,
    pub config: Option<TrainConfig>,
    /// Structure the model was trained on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    /// Pretrained on the source domain, fine-tuned on the target.
    #[serde(default)]
    pub pretrained: bool,
}

pub fn meta_path(model_path: &Path) -> PathBuf {
    let mut name = model_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_model_file(path: &Path, model: &EmbeddingModel, meta: &ModelMeta) -> Result<()> {
    write_model(model, create(path)?)?;
    write_json(&meta_path(path), MODEL_FORMAT, meta)
}

pub fn read_model_file(path: &Path) -> Result<(EmbeddingModel, ModelMeta)> {
    let meta: ModelMeta = read_json(&meta_path(path), MODEL_FORMAT)?;
    let mut model = read_model(open(path)?).map_err(|e| bad(path, e.to_string()))?;
    model.trainer = meta.trainer;
    model.seed = meta.seed;
    model.config = meta.config.clone();
    Ok((model, meta))
}
