//! Brute-force oracles and toy-system generators shared by the integration
//! tests and the acceptance suite. Everything here works on plain string
//! sets so it does not lean on the library's own graph code.

#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superhighway::construct::{
    construct_superhighway, identify_candidates, ConstructOptions, ConstructionParams,
};
use superhighway::{CrossDomainSystem, DomainGraph, DomainTag, Error};

/// user key -> item keys
pub type RawDomain = BTreeMap<String, BTreeSet<String>>;

#[derive(Clone, Debug)]
pub struct RawSystem {
    pub source: RawDomain,
    pub target: RawDomain,
}

impl RawSystem {
    pub fn shared(&self) -> BTreeSet<String> {
        let items = |d: &RawDomain| d.values().flatten().cloned().collect::<BTreeSet<_>>();
        items(&self.source)
            .intersection(&items(&self.target))
            .cloned()
            .collect()
    }

    pub fn build(&self) -> superhighway::Result<CrossDomainSystem> {
        let domain = |tag, d: &RawDomain| {
            let pairs: Vec<(&str, &str, f64)> = d
                .iter()
                .flat_map(|(u, items)| items.iter().map(move |i| (u.as_str(), i.as_str(), 1.0)))
                .collect();
            DomainGraph::from_interactions(tag, pairs)
        };
        CrossDomainSystem::new(
            domain(DomainTag::Source, &self.source)?,
            domain(DomainTag::Target, &self.target)?,
        )
    }
}

/// Random system with at most 30 users and 40 items in total.
pub fn toy_system(seed: u64) -> RawSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_items = rng.random_range(2..=40);
    let items: Vec<String> = (0..n_items).map(|i| format!("i{i}")).collect();
    let catalog = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let keep = rng.random_range(0.2..1.0);
        let c: Vec<String> = items
            .iter()
            .filter(|_| rng.random_bool(keep))
            .cloned()
            .collect();
        if c.is_empty() {
            vec![items[rng.random_range(0..items.len())].clone()]
        } else {
            c
        }
    };
    let s_cat = catalog(&mut rng);
    let t_cat = catalog(&mut rng);
    let n_s = rng.random_range(1..=15);
    let n_t = rng.random_range(1..=15);
    let domain = |rng: &mut ChaCha8Rng, n: usize, cat: &[String]| -> RawDomain {
        (0..n)
            .map(|u| {
                let k = rng.random_range(1..=cat.len().min(12));
                let set = (0..k)
                    .map(|_| cat[rng.random_range(0..cat.len())].clone())
                    .collect();
                (format!("u{u}"), set)
            })
            .collect()
    };
    RawSystem {
        source: domain(&mut rng, n_s, &s_cat),
        target: domain(&mut rng, n_t, &t_cat),
    }
}

/// Users whose share of shared items reaches `alpha_tenths / 10`, decided in
/// exact integer arithmetic.
pub fn oracle_candidates(
    d: &RawDomain,
    shared: &BTreeSet<String>,
    alpha_tenths: u32,
) -> BTreeSet<String> {
    d.iter()
        .filter(|(_, items)| {
            let s = items.iter().filter(|i| shared.contains(*i)).count() as u64;
            !items.is_empty() && 10 * s >= u64::from(alpha_tenths) * items.len() as u64
        })
        .map(|(u, _)| u.clone())
        .collect()
}

/// Expected superhighway edges `(source user, target user) -> weight`.
pub fn oracle_edges(
    raw: &RawSystem,
    alpha_tenths: u32,
    beta: f64,
) -> BTreeMap<(String, String), f64> {
    let shared = raw.shared();
    let cs = oracle_candidates(&raw.source, &shared, alpha_tenths);
    let ct = oracle_candidates(&raw.target, &shared, alpha_tenths);
    let mut out = BTreeMap::new();
    for s in &cs {
        for t in &ct {
            let c = raw.source[s].intersection(&raw.target[t]).count();
            let w = beta * c as f64;
            if w > 0.0 {
                out.insert((s.clone(), t.clone()), w);
            }
        }
    }
    out
}

/// Compares library candidates and superhighway edges with the oracles.
pub fn check_construction(raw: &RawSystem, alpha_tenths: u32, beta: f64) -> Result<(), String> {
    let sys = raw.build().map_err(|e| e.to_string())?;
    let alpha = f64::from(alpha_tenths) / 10.0;
    let shared = raw.shared();
    if shared.is_empty() {
        return match identify_candidates(&sys, DomainTag::Source, alpha) {
            Err(Error::EmptySharedItems) => Ok(()),
            other => Err(format!("expected EmptySharedItems, got {other:?}")),
        };
    }
    for (tag, d) in [
        (DomainTag::Source, &raw.source),
        (DomainTag::Target, &raw.target),
    ] {
        let got: BTreeSet<String> = identify_candidates(&sys, tag, alpha)
            .map_err(|e| e.to_string())?
            .users
            .iter()
            .map(|n| n.local_id.clone())
            .collect();
        let want = oracle_candidates(d, &shared, alpha_tenths);
        if got != want {
            return Err(format!(
                "{tag} candidates at alpha {alpha}: got {got:?}, want {want:?}"
            ));
        }
    }
    let params = ConstructionParams::new(alpha, beta).map_err(|e| e.to_string())?;
    let s = construct_superhighway(&sys, &params, &ConstructOptions::default())
        .map_err(|e| e.to_string())?;
    let g = s.graph();
    let mut got = BTreeMap::new();
    for (a, b, w) in g.edges() {
        let (na, nb) = (g.node(a), g.node(b));
        if na.is_user() && nb.is_user() {
            let (src, tgt) = if na.namespace < nb.namespace {
                (na, nb)
            } else {
                (nb, na)
            };
            got.insert((src.local_id.clone(), tgt.local_id.clone()), w);
        }
    }
    let want = oracle_edges(raw, alpha_tenths, beta);
    if got != want {
        return Err(format!(
            "edges at alpha {alpha}, beta {beta}: got {got:?}, want {want:?}"
        ));
    }
    let interactions: usize = raw
        .source
        .values()
        .chain(raw.target.values())
        .map(BTreeSet::len)
        .sum();
    // Every interaction survives the merge as exactly one edge.
    if g.edge_count() != interactions + want.len() {
        return Err(format!(
            "edge count {} != {} interactions + {} superhighways",
            g.edge_count(),
            interactions,
            want.len()
        ));
    }
    Ok(())
}
