//! Superhighway construction.
//!
//! A user is a candidate when the share of its neighbors that are shared
//! items reaches the smoothness threshold `alpha`. Each source candidate is
//! linked to each target candidate by an edge of weight
//! `beta * |N(source) ∩ N(target)|`; pairs with no common item are counted
//! but not materialized.
//!
//! Because the weight is linear in `beta`, [`SuperhighwayPlan`] holds the
//! candidate sets and raw overlap counts for one `alpha` and can be realized
//! at any `beta` without recounting.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    merge_highway, CrossDomainSystem, DomainTag, NodeId, Provenance, StructureKind,
    TrainingStructure,
};

pub const DEFAULT_PAIR_CAP: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ConstructionParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        validate_beta(beta)?;
        Ok(ConstructionParams { alpha, beta })
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )))
    }
}

fn validate_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "beta must be finite and >= 0, got {beta}"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstructOptions {
    /// Upper bound on `|Û_S| * |Û_T|` before enumeration is refused.
    pub cap: u64,
    pub workers: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            cap: DEFAULT_PAIR_CAP,
            workers: 1,
        }
    }
}

/// Users of one domain that pass the smoothness threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub domain: DomainTag,
    /// Sorted.
    pub users: Vec<NodeId>,
    pub smoothness: BTreeMap<NodeId, f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn contains(&self, user: &NodeId) -> bool {
        self.users.binary_search(user).is_ok()
    }
}

/// Candidates of `domain` at threshold `alpha`. Zero-degree users are never
/// candidates.
pub fn identify_candidates(
    sys: &CrossDomainSystem,
    domain: DomainTag,
    alpha: f64,
) -> Result<CandidateSet> {
    validate_alpha(alpha)?;
    if sys.shared_items().is_empty() {
        return Err(Error::EmptySharedItems);
    }
    let d = sys.domain(domain);
    let g = d.graph();
    let mut users = Vec::new();
    let mut smoothness = BTreeMap::new();
    for u in d.user_range() {
        let degree = g.degree(u);
        if degree == 0 {
            continue;
        }
        let shared = g
            .neighbor_indices(u)
            .iter()
            .filter(|&&i| sys.is_shared(g.node(i as usize)))
            .count();
        let ratio = shared as f64 / degree as f64;
        if ratio >= alpha {
            users.push(g.node(u).clone());
            smoothness.insert(g.node(u).clone(), ratio);
        }
    }
    Ok(CandidateSet {
        domain,
        users,
        smoothness,
    })
}

/// `beta * |N(u_src) ∩ N(u_tgt)|`, a pure set count that ignores edge
/// weights.
pub fn superhighway_weight(
    sys: &CrossDomainSystem,
    u_src: &NodeId,
    u_tgt: &NodeId,
    beta: f64,
) -> Result<f64> {
    validate_beta(beta)?;
    for (node, tag) in [(u_src, DomainTag::Source), (u_tgt, DomainTag::Target)] {
        if node.namespace != tag.user_namespace() {
            return Err(Error::DomainMismatch {
                node: node.clone(),
                expected: tag,
            });
        }
    }
    let a = sys.source().neighbors(u_src)?;
    let b = sys.target().neighbors(u_tgt)?;
    Ok(beta * sorted_overlap(a.iter().map(|x| &x.0), b.iter().map(|x| &x.0)) as f64)
}

fn sorted_overlap<'a>(
    a: impl Iterator<Item = &'a NodeId>,
    b: impl Iterator<Item = &'a NodeId>,
) -> usize {
    let mut a = a.peekable();
    let mut b = b.peekable();
    let mut count = 0;
    while let (Some(x), Some(y)) = (a.peek(), b.peek()) {
        match x.cmp(y) {
            std::cmp::Ordering::Less => {
                a.next();
            }
            std::cmp::Ordering::Greater => {
                b.next();
            }
            std::cmp::Ordering::Equal => {
                count += 1;
                a.next();
                b.next();
            }
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperhighwayEdge {
    pub src_user: NodeId,
    pub tgt_user: NodeId,
    pub weight: f64,
}

/// Candidate sets and neighborhood overlaps for one `alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperhighwayPlan {
    pub alpha: f64,
    pub source: CandidateSet,
    pub target: CandidateSet,
    /// `(source candidate, target candidate, common items)` for every pair
    /// with at least one common item, sorted by the two users.
    pub overlaps: Vec<(NodeId, NodeId, u32)>,
}

impl SuperhighwayPlan {
    pub fn new(sys: &CrossDomainSystem, alpha: f64, opts: &ConstructOptions) -> Result<Self> {
        let source = identify_candidates(sys, DomainTag::Source, alpha)?;
        let target = identify_candidates(sys, DomainTag::Target, alpha)?;
        let pairs = source.len() as u64 * target.len() as u64;
        if pairs > opts.cap {
            return Err(Error::CapExceeded {
                pairs,
                cap: opts.cap,
            });
        }

        // Inverted index: source-graph item index -> source candidates using it.
        let sg = sys.source().graph();
        let mut postings: Vec<Vec<u32>> = vec![Vec::new(); sg.node_count()];
        for (k, user) in source.users.iter().enumerate() {
            let u = sg
                .index_of(user)
                .expect("candidate comes from the source graph");
            for &i in sg.neighbor_indices(u) {
                if sys.is_shared(sg.node(i as usize)) {
                    postings[i as usize].push(k as u32);
                }
            }
        }

        let tg = sys.target().graph();
        let count_block = |block: &[NodeId]| -> Vec<(u32, u32, u32)> {
            let mut counter = vec![0u32; source.len()];
            let mut touched = Vec::new();
            let mut out = Vec::new();
            for (offset, user) in block.iter().enumerate() {
                let t = tg
                    .index_of(user)
                    .expect("candidate comes from the target graph");
                for &i in tg.neighbor_indices(t) {
                    let Some(si) = sg.index_of(tg.node(i as usize)) else {
                        continue;
                    };
                    for &k in &postings[si] {
                        if counter[k as usize] == 0 {
                            touched.push(k);
                        }
                        counter[k as usize] += 1;
                    }
                }
                for &k in &touched {
                    out.push((k, offset as u32, counter[k as usize]));
                    counter[k as usize] = 0;
                }
                touched.clear();
            }
            out
        };

        const BLOCK: usize = 256;
        let blocks: Vec<&[NodeId]> = target.users.chunks(BLOCK).collect();
        let per_block: Vec<Vec<(u32, u32, u32)>> = if opts.workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(opts.workers)
                .build()
                .map_err(|e| Error::InvalidParam(format!("worker pool: {e}")))?;
            pool.install(|| blocks.par_iter().map(|b| count_block(b)).collect())
        } else {
            blocks.iter().map(|b| count_block(b)).collect()
        };

        let mut raw: Vec<(u32, u32, u32)> = per_block
            .into_iter()
            .enumerate()
            .flat_map(|(b, v)| {
                v.into_iter()
                    .map(move |(k, t, c)| (k, (b * BLOCK) as u32 + t, c))
            })
            .collect();
        raw.sort_unstable();
        let overlaps = raw
            .into_iter()
            .map(|(k, t, c)| {
                (
                    source.users[k as usize].clone(),
                    target.users[t as usize].clone(),
                    c,
                )
            })
            .collect();

        Ok(SuperhighwayPlan {
            alpha,
            source,
            target,
            overlaps,
        })
    }

    pub fn candidate_pairs(&self) -> u64 {
        self.source.len() as u64 * self.target.len() as u64
    }

    /// Positive-weight edges at scaling factor `beta`.
    pub fn edges(&self, beta: f64) -> Result<Vec<SuperhighwayEdge>> {
        validate_beta(beta)?;
        if beta == 0.0 {
            return Ok(Vec::new());
        }
        Ok(self
            .overlaps
            .iter()
            .map(|(s, t, c)| SuperhighwayEdge {
                src_user: s.clone(),
                tgt_user: t.clone(),
                weight: beta * *c as f64,
            })
            .collect())
    }

    /// Adds this plan's edges at `beta` to a highway structure built from the
    /// same system.
    pub fn realize(&self, highway: &TrainingStructure, beta: f64) -> Result<TrainingStructure> {
        if highway.kind() != StructureKind::Highway {
            return Err(Error::InvalidParam(
                "superhighways are added to a highway structure".into(),
            ));
        }
        let edges = self.edges(beta)?;
        let g = highway.graph();
        let extra = edges
            .iter()
            .map(|e| {
                let a = g
                    .index_of(&e.src_user)
                    .ok_or_else(|| Error::NotFound(e.src_user.clone()))?;
                let b = g
                    .index_of(&e.tgt_user)
                    .ok_or_else(|| Error::NotFound(e.tgt_user.clone()))?;
                Ok((a, b, e.weight))
            })
            .collect::<Result<Vec<_>>>()?;
        let materialized = extra.len() as u64;
        let provenance = Provenance {
            kind: StructureKind::Superhighway,
            alpha: Some(self.alpha),
            beta: Some(beta),
            source_candidates: Some(self.source.len()),
            target_candidates: Some(self.target.len()),
            candidate_pairs: Some(self.candidate_pairs()),
            materialized_edges: Some(materialized),
            zero_weight_pairs: Some(self.candidate_pairs() - materialized),
        };
        Ok(TrainingStructure::new(
            g.with_extra_edges(&extra),
            provenance,
        ))
    }
}

/// Highway structure plus weighted user-user superhighways.
pub fn construct_superhighway(
    sys: &CrossDomainSystem,
    params: &ConstructionParams,
    opts: &ConstructOptions,
) -> Result<TrainingStructure> {
    validate_alpha(params.alpha)?;
    validate_beta(params.beta)?;
    let plan = SuperhighwayPlan::new(sys, params.alpha, opts)?;
    plan.realize(&merge_highway(sys), params.beta)
}
