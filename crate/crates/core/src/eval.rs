//! Query-based evaluation and the alpha/beta grid search.
//!
//! Each eligible user contributes queries drawn from its training items.
//! Every other item of the evaluated domain, minus the user's own training
//! items, is ranked by similarity to the query item's vector; the user's
//! held-out items are the relevant set. Scores are average precision at `k`,
//! averaged into MAP@k.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construct::{
    construct_superhighway, ConstructOptions, ConstructionParams, SuperhighwayPlan,
};
use crate::embed::{train, Backend, EmbeddingModel, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{
    merge_highway, CrossDomainSystem, DomainTag, NodeId, Provenance, StructureKind,
};

/// Per-user train/held-out partition of one domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSplit {
    pub side: DomainTag,
    pub holdout_fraction: f64,
    pub seed: u64,
    /// Held-out items per eligible user, sorted.
    pub held_out: BTreeMap<NodeId, Vec<NodeId>>,
    /// Remaining training items per eligible user, sorted.
    pub train_items: BTreeMap<NodeId, Vec<NodeId>>,
    /// Highest-degree training item per eligible user, ties to the smaller id.
    pub queries: BTreeMap<NodeId, NodeId>,
    /// Every item of the evaluated domain.
    pub pool: Vec<NodeId>,
}

impl EvalSplit {
    pub fn users(&self) -> impl Iterator<Item = &NodeId> {
        self.held_out.keys()
    }

    pub fn held_out_edges(&self) -> usize {
        self.held_out.values().map(Vec::len).sum()
    }
}

/// Splits the target domain. See [`split_side`].
pub fn split(
    sys: &CrossDomainSystem,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(CrossDomainSystem, EvalSplit)> {
    split_side(sys, DomainTag::Target, holdout_fraction, seed)
}

/// Holds out `round(fraction * degree)` items of every user of `side` with
/// at least two interactions, clamped so that at least one item is held out
/// and at least one stays for training. Nodes are kept; only edges go.
pub fn split_side(
    sys: &CrossDomainSystem,
    side: DomainTag,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(CrossDomainSystem, EvalSplit)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "holdout fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }
    let domain = sys.domain(side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held_out = BTreeMap::new();
    let mut removed = BTreeSet::new();
    for user in domain.users() {
        let mut items: Vec<NodeId> = domain.neighbors(user)?.into_iter().map(|x| x.0).collect();
        let n = items.len();
        if n < 2 {
            continue;
        }
        let h = ((holdout_fraction * n as f64).round() as usize).clamp(1, n - 1);
        items.shuffle(&mut rng);
        let mut held: Vec<NodeId> = items.into_iter().take(h).collect();
        held.sort();
        for item in &held {
            removed.insert((user.clone(), item.clone()));
        }
        held_out.insert(user.clone(), held);
    }
    if held_out.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let trained = domain.without_edges(&removed);
    let g = trained.graph();
    let mut train_items = BTreeMap::new();
    let mut queries = BTreeMap::new();
    for user in held_out.keys() {
        let items: Vec<NodeId> = trained.neighbors(user)?.into_iter().map(|x| x.0).collect();
        let query = items
            .iter()
            .max_by(|a, b| {
                let da = g.degree(g.index_of(a).unwrap());
                let db = g.degree(g.index_of(b).unwrap());
                da.cmp(&db).then_with(|| b.cmp(a))
            })
            .cloned()
            .expect("eligible users keep a training item");
        queries.insert(user.clone(), query);
        train_items.insert(user.clone(), items);
    }
    let pool = domain.items().to_vec();
    let new_sys = sys.with_domain(trained)?;
    Ok((
        new_sys,
        EvalSplit {
            side,
            holdout_fraction,
            seed,
            held_out,
            train_items,
            queries,
            pool,
        },
    ))
}

/// AP@k = sum of precision@i over relevant hits in the top `k`, divided by
/// `min(|relevant|, k)`. Zero for an empty relevant set.
pub fn average_precision_at_k(
    ranked: &[NodeId],
    relevant: &BTreeSet<NodeId>,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let mut seen = BTreeSet::new();
    for node in ranked {
        if !seen.insert(node) {
            return Err(Error::InvalidRanking(node.clone()));
        }
    }
    if relevant.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, node) in ranked.iter().take(k).enumerate() {
        if relevant.contains(node) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / relevant.len().min(k) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    #[default]
    Cosine,
    Dot,
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Similarity::Cosine),
            "dot" => Ok(Similarity::Dot),
            _ => Err(Error::InvalidParam(format!("unknown similarity `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// One query per user: the split's highest-degree training item.
    #[default]
    TopDegree,
    /// Every training item of the user is a query.
    AllItems,
}

impl FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" | "top_degree" => Ok(QueryMode::TopDegree),
            "all" | "all_items" => Ok(QueryMode::AllItems),
            _ => Err(Error::InvalidParam(format!("unknown query mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k: usize,
    pub similarity: Similarity,
    pub query_mode: QueryMode,
    /// Largest tolerated fraction of pool items missing from the model.
    pub max_missing: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: 10,
            similarity: Similarity::Cosine,
            query_mode: QueryMode::TopDegree,
            max_missing: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub user: NodeId,
    pub query: NodeId,
    pub average_precision: f64,
}

/// What produced a report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Single structure warm-started from a source-domain model.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pretrained: bool,
}

impl RunEcho {
    pub fn from_provenance(p: &Provenance) -> Self {
        RunEcho {
            structure: Some(p.kind.to_string()),
            alpha: p.alpha,
            beta: p.beta,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map_at_k: f64,
    pub k: usize,
    pub side: DomainTag,
    pub similarity: Similarity,
    pub query_mode: QueryMode,
    pub users: usize,
    pub skipped_queries: usize,
    pub missing_items: usize,
    pub config: RunEcho,
    pub per_query: Vec<QueryResult>,
}

/// Ranks with `model` and scores against `split`.
pub fn evaluate(
    model: &EmbeddingModel,
    split: &EvalSplit,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if opts.k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let dims = model.dims();
    let present: Vec<(usize, &NodeId)> = split
        .pool
        .iter()
        .enumerate()
        .filter(|(_, n)| model.contains(n))
        .collect();
    let missing = split.pool.len() - present.len();
    if split.pool.is_empty() || missing as f64 > opts.max_missing * split.pool.len() as f64 {
        return Err(Error::Coverage {
            missing,
            total: split.pool.len(),
        });
    }

    let normalize = |v: &[f64]| -> Vec<f64> {
        match opts.similarity {
            Similarity::Dot => v.to_vec(),
            Similarity::Cosine => {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter().map(|x| x / norm).collect()
                } else {
                    vec![0.0; v.len()]
                }
            }
        }
    };
    let mut matrix = Vec::with_capacity(present.len() * dims);
    for (_, node) in &present {
        matrix.extend(normalize(model.vector(node).expect("present")));
    }

    let mut per_query = Vec::new();
    let mut skipped = 0usize;
    let mut excluded = vec![false; present.len()];
    let pool_slot =
        |node: &NodeId| -> Option<usize> { present.binary_search_by(|(_, n)| (*n).cmp(node)).ok() };
    for (user, held) in &split.held_out {
        let relevant: BTreeSet<NodeId> = held.iter().cloned().collect();
        let train_items = &split.train_items[user];
        let queries: Vec<&NodeId> = match opts.query_mode {
            QueryMode::TopDegree => vec![&split.queries[user]],
            QueryMode::AllItems => train_items.iter().collect(),
        };
        for slot in train_items.iter().filter_map(&pool_slot) {
            excluded[slot] = true;
        }
        for query in queries {
            let Some(qv) = model.vector(query) else {
                skipped += 1;
                continue;
            };
            let qv = normalize(qv);
            let qslot = pool_slot(query);
            let mut scored: Vec<(f64, usize)> = (0..present.len())
                .filter(|&s| !excluded[s] && Some(s) != qslot)
                .map(|s| {
                    let row = &matrix[s * dims..(s + 1) * dims];
                    (row.iter().zip(&qv).map(|(a, b)| a * b).sum::<f64>(), s)
                })
                .collect();
            let order =
                |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            let top = opts.k.min(scored.len());
            if top < scored.len() {
                scored.select_nth_unstable_by(top, order);
                scored.truncate(top);
            }
            scored.sort_by(order);
            let ranked: Vec<NodeId> = scored.iter().map(|&(_, s)| present[s].1.clone()).collect();
            per_query.push(QueryResult {
                user: user.clone(),
                query: query.clone(),
                average_precision: average_precision_at_k(&ranked, &relevant, opts.k)?,
            });
        }
        for slot in train_items.iter().filter_map(&pool_slot) {
            excluded[slot] = false;
        }
    }
    if per_query.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let map_at_k =
        per_query.iter().map(|q| q.average_precision).sum::<f64>() / per_query.len() as f64;
    Ok(EvalReport {
        map_at_k,
        k: opts.k,
        side: split.side,
        similarity: opts.similarity,
        query_mode: opts.query_mode,
        users: split.held_out.len(),
        skipped_queries: skipped,
        missing_items: missing,
        config: RunEcho {
            model: model.trainer,
            seed: model.config.as_ref().map(|c| c.seed),
            ..Default::default()
        },
        per_query,
    })
}

/// Inclusive arithmetic range `start, start + step, ..., end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl ParamRange {
    pub const DEFAULT_ALPHA: ParamRange = ParamRange {
        start: 0.1,
        end: 1.0,
        step: 0.1,
    };
    pub const DEFAULT_BETA: ParamRange = ParamRange {
        start: 0.5,
        end: 1.5,
        step: 0.1,
    };

    pub fn single(value: f64) -> Self {
        ParamRange {
            start: value,
            end: value,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidParam("range bounds must be finite".into()));
        }
        if self.start > self.end || self.step <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "range {self} needs start <= end and step > 0"
            )));
        }
        Ok(())
    }

    /// Values computed as `start + i * step` and rounded to 10 decimals, so
    /// `0.1 * 3` lands on `0.3` rather than `0.30000000000000004`.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }
}

impl fmt::Display for ParamRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

impl FromStr for ParamRange {
    type Err = Error;

    /// `start:end:step` or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParam(format!("bad range `{s}`")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let range = match parts.as_slice() {
            [v] => ParamRange::single(parse(v)?),
            [a, b, c] => ParamRange {
                start: parse(a)?,
                end: parse(b)?,
                step: parse(c)?,
            },
            _ => return Err(Error::InvalidParam(format!("bad range `{s}`"))),
        };
        range.validate()?;
        Ok(range)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GridCell {
    pub fn map(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.map_at_k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridOptions {
    pub eval: EvalOptions,
    pub construct: ConstructOptions,
    /// Build candidate sets and overlaps once per alpha and rescale per beta.
    pub reuse_plans: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            eval: EvalOptions::default(),
            construct: ConstructOptions::default(),
            reuse_plans: true,
        }
    }
}

/// Construct, train and evaluate every `(alpha, beta)` cell. `sys` must be
/// the training side of `split`. A failing cell is recorded, not fatal.
/// Cells come back sorted by MAP descending, failures last.
pub fn grid_search(
    sys: &CrossDomainSystem,
    split: &EvalSplit,
    backend: Backend,
    cfg: &TrainConfig,
    alphas: &ParamRange,
    betas: &ParamRange,
    opts: &GridOptions,
) -> Result<Vec<GridCell>> {
    alphas.validate()?;
    betas.validate()?;
    cfg.validate()?;
    let highway = merge_highway(sys);
    let mut cells = Vec::new();
    for alpha in alphas.values() {
        let plan = if opts.reuse_plans {
            Some(SuperhighwayPlan::new(sys, alpha, &opts.construct))
        } else {
            None
        };
        for beta in betas.values() {
            let structure = match &plan {
                Some(Ok(plan)) => plan.realize(&highway, beta),
                Some(Err(e)) => Err(Error::InvalidParam(e.to_string())),
                None => ConstructionParams::new(alpha, beta)
                    .and_then(|p| construct_superhighway(sys, &p, &opts.construct)),
            };
            let outcome = structure.and_then(|s| {
                let model = train(&s, backend, cfg)?;
                let mut report = evaluate(&model, split, &opts.eval)?;
                report.config = RunEcho {
                    model: Some(backend),
                    seed: Some(cfg.seed),
                    ..RunEcho::from_provenance(s.provenance())
                };
                Ok(report)
            });
            let (report, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => {
                    log::warn!("grid cell alpha={alpha} beta={beta} failed: {e}");
                    (None, Some(e.to_string()))
                }
            };
            cells.push(GridCell {
                alpha,
                beta,
                report,
                error,
            });
        }
    }
    cells.sort_by(|a, b| match (a.map(), b.map()) {
        (Some(x), Some(y)) => y
            .total_cmp(&x)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.beta.total_cmp(&b.beta)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.alpha.total_cmp(&b.alpha).then(a.beta.total_cmp(&b.beta)),
    });
    Ok(cells)
}

/// Trains and evaluates one structure kind, the building block of every
/// experiment comparison.
pub fn run_structure(
    sys: &CrossDomainSystem,
    split: &EvalSplit,
    kind: StructureKind,
    params: Option<ConstructionParams>,
    backend: Backend,
    cfg: &TrainConfig,
    opts: &GridOptions,
) -> Result<EvalReport> {
    let structure = match kind {
        StructureKind::Single => match split.side {
            DomainTag::Target => crate::graph::single_structure(sys),
            DomainTag::Source => crate::graph::TrainingStructure::from_domain(sys.source()),
        },
        StructureKind::Highway => merge_highway(sys),
        StructureKind::Superhighway => {
            let params = params
                .ok_or_else(|| Error::InvalidParam("superhighway needs alpha and beta".into()))?;
            construct_superhighway(sys, &params, &opts.construct)?
        }
    };
    let model = train(&structure, backend, cfg)?;
    let mut report = evaluate(&model, split, &opts.eval)?;
    report.config = RunEcho {
        model: Some(backend),
        seed: Some(cfg.seed),
        ..RunEcho::from_provenance(structure.provenance())
    };
    Ok(report)
}

/// Row of the comparison table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableRow {
    Single,
    Pretrained,
    Highway,
    Superhighway,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub row: TableRow,
    pub model: Backend,
    pub map_at_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// MAP@k by structure (rows) and model (columns). Pretrained results sit in
/// parentheses next to the single-structure value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub k: usize,
    pub cells: Vec<TableCell>,
}

impl ResultTable {
    pub fn from_reports(reports: &[EvalReport]) -> Result<Self> {
        let Some(first) = reports.first() else {
            return Err(Error::InvalidParam("no reports to tabulate".into()));
        };
        let mut cells: Vec<TableCell> = Vec::with_capacity(reports.len());
        for r in reports {
            if r.k != first.k {
                return Err(Error::InvalidParam(format!(
                    "reports mix MAP@{} and MAP@{}",
                    first.k, r.k
                )));
            }
            let model = r
                .config
                .model
                .ok_or_else(|| Error::InvalidParam("report does not name its model".into()))?;
            let kind: StructureKind = r
                .config
                .structure
                .as_deref()
                .ok_or_else(|| Error::InvalidParam("report does not name its structure".into()))?
                .parse()?;
            let row = match (kind, r.config.pretrained) {
                (StructureKind::Single, true) => TableRow::Pretrained,
                (StructureKind::Single, false) => TableRow::Single,
                (StructureKind::Highway, _) => TableRow::Highway,
                (StructureKind::Superhighway, _) => TableRow::Superhighway,
            };
            if cells.iter().any(|c| c.row == row && c.model == model) {
                return Err(Error::InvalidParam(format!(
                    "two reports for {row:?} / {}",
                    model.label()
                )));
            }
            cells.push(TableCell {
                row,
                model,
                map_at_k: r.map_at_k,
                alpha: r.config.alpha,
                beta: r.config.beta,
            });
        }
        cells.sort_by(|a, b| a.row.cmp(&b.row).then(a.model.cmp(&b.model)));
        Ok(ResultTable { k: first.k, cells })
    }

    pub fn get(&self, row: TableRow, model: Backend) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.row == row && c.model == model)
            .map(|c| c.map_at_k)
    }

    /// Plain-text table, values in percent with two decimals.
    pub fn render(&self) -> String {
        let pct = |v: Option<f64>| v.map(|x| format!("{:.2}", 100.0 * x));
        let mut rows: Vec<(String, Vec<String>)> = Vec::new();
        let has_pretrained = self.cells.iter().any(|c| c.row == TableRow::Pretrained);
        let single_label = if has_pretrained {
            "Single (Pretrained)"
        } else {
            "Single"
        };
        for (label, row) in [
            (single_label, TableRow::Single),
            ("Highway", TableRow::Highway),
            ("Superhighway", TableRow::Superhighway),
        ] {
            let values = Backend::ALL
                .iter()
                .map(|&m| {
                    let main = pct(self.get(row, m));
                    let extra = if row == TableRow::Single {
                        pct(self.get(TableRow::Pretrained, m))
                    } else {
                        None
                    };
                    match (main, extra) {
                        (Some(a), Some(b)) => format!("{a} ({b})"),
                        (Some(a), None) => a,
                        (None, Some(b)) => format!("- ({b})"),
                        (None, None) => "-".to_string(),
                    }
                })
                .collect();
            rows.push((label.to_string(), values));
        }
        let title = format!("MAP@{} (%)", self.k);
        let w0 = rows
            .iter()
            .map(|r| r.0.len())
            .chain([title.len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = Backend::ALL
            .iter()
            .enumerate()
            .map(|(i, m)| {
                rows.iter()
                    .map(|r| r.1[i].len())
                    .chain([m.label().len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = format!("{title:<w0$}");
        for (m, w) in Backend::ALL.iter().zip(&widths) {
            out += &format!("  {:>w$}", m.label());
        }
        out.push('\n');
        for (label, values) in rows {
            out += &format!("{label:<w0$}");
            for (v, w) in values.iter().zip(&widths) {
                out += &format!("  {v:>w$}");
            }
            out.push('\n');
        }
        out
    }
}
