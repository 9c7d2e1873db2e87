//! Numeric and structural checks returning `Err(description)` on failure so
//! both the per-crate tests and the acceptance runner can report them.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use superhighway::construct::{
    construct_superhighway, identify_candidates, ConstructOptions, ConstructionParams,
};
use superhighway::embed::{edge_gradient, edge_loss, TransitionSampler};
use superhighway::{
    average_precision_at_k, evaluate, DomainTag, EmbeddingModel, EvalOptions, EvalSplit,
    GraphBuilder, NodeId, TrainingStructure,
};

use super::RawSystem;

pub const FD_STEP: f64 = 1e-6;
pub const FD_TOLERANCE: f64 = 1e-5;
pub const CHI_SQUARE_MIN_P: f64 = 0.01;
pub const CALIBRATION_SIGMAS: f64 = 3.0;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    diff / scale
}

/// Largest relative error between the analytic MF edge gradient and
/// central differences over `points` random configurations.
pub fn mf_gradient_check(points: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for point in 0..points {
        let dims = rng.random_range(1..=16);
        let x: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = rng.random_range(0.0..3.0);
        let lambda = rng.random_range(0.0..0.1);
        let (gx, gy) = edge_gradient(&x, &y, w, lambda);
        let numeric = |which: usize| -> Vec<f64> {
            (0..dims)
                .map(|d| {
                    let (mut xp, mut xm, mut yp, mut ym) =
                        (x.clone(), x.clone(), y.clone(), y.clone());
                    if which == 0 {
                        xp[d] += FD_STEP;
                        xm[d] -= FD_STEP;
                    } else {
                        yp[d] += FD_STEP;
                        ym[d] -= FD_STEP;
                    }
                    (edge_loss(&xp, &yp, w, lambda) - edge_loss(&xm, &ym, w, lambda))
                        / (2.0 * FD_STEP)
                })
                .collect()
        };
        let err = rel_err(&gx, &numeric(0)).max(rel_err(&gy, &numeric(1)));
        if err > FD_TOLERANCE {
            return Err(format!("point {point}: relative error {err:.3e}"));
        }
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Chi-square p-value of `samples` walk steps out of a weighted hub.
pub fn transition_chi_square(samples: usize, seed: u64) -> Result<f64, String> {
    let mut b = GraphBuilder::new();
    let weights = [1.0, 2.0, 3.5, 0.5, 8.0, 5.0];
    let hub_id = NodeId::user(DomainTag::Target, "hub");
    for (k, w) in weights.iter().enumerate() {
        b.add_edge(hub_id.clone(), NodeId::item(format!("i{k}")), *w)
            .map_err(|e| e.to_string())?;
    }
    let g = b.build();
    let hub = g.index_of(&hub_id).ok_or("hub missing")?;
    let sampler = TransitionSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..samples {
        let next = sampler.step(hub, &mut rng).ok_or("walk stalled at hub")?;
        *counts.entry(next).or_default() += 1;
    }
    let total: f64 = g.neighbor_weights(hub).iter().sum();
    let chi2: f64 = g
        .neighbor_indices(hub)
        .iter()
        .zip(g.neighbor_weights(hub))
        .map(|(&v, &w)| {
            let expected = samples as f64 * w / total;
            let observed = *counts.get(&(v as usize)).unwrap_or(&0) as f64;
            (observed - expected).powi(2) / expected
        })
        .sum();
    let p = 1.0
        - ChiSquared::new((weights.len() - 1) as f64)
            .unwrap()
            .cdf(chi2);
    if p > CHI_SQUARE_MIN_P {
        Ok(p)
    } else {
        Err(format!("chi2 = {chi2:.3}, p = {p:.4}"))
    }
}

/// AP@k straight from the definition, with precision@i recounted from
/// scratch at every relevant position.
pub fn ap_by_definition(ranked: &[NodeId], relevant: &BTreeSet<NodeId>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 1..=k.min(ranked.len()) {
        if relevant.contains(&ranked[i - 1]) {
            let hits = ranked[..i].iter().filter(|n| relevant.contains(*n)).count();
            total += hits as f64 / i as f64;
        }
    }
    total / relevant.len().min(k) as f64
}

/// Compares the library AP@k with [`ap_by_definition`] on random lists,
/// demanding bitwise equality.
pub fn ap_check(lists: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..lists {
        let universe = rng.random_range(1..60);
        let mut items: Vec<NodeId> = (0..universe)
            .map(|i| NodeId::item(format!("x{i}")))
            .collect();
        items.shuffle(&mut rng);
        let ranked: Vec<NodeId> = items[..rng.random_range(0..=universe)].to_vec();
        let relevant: BTreeSet<NodeId> = items
            .iter()
            .filter(|_| rng.random_bool(0.2))
            .cloned()
            .collect();
        let k = rng.random_range(1..=20);
        let got = average_precision_at_k(&ranked, &relevant, k).map_err(|e| e.to_string())?;
        let want = ap_by_definition(&ranked, &relevant, k);
        if got != want || !(0.0..=1.0).contains(&got) {
            return Err(format!("list {case}: got {got}, want {want}"));
        }
    }
    Ok(())
}

pub struct Calibration {
    pub map: f64,
    pub expected: f64,
    pub se: f64,
}

/// MAP@10 of random Gaussian item vectors against the closed-form
/// expectation for a uniformly random ranking with one relevant item.
pub fn random_embedding_calibration(
    items: usize,
    users: usize,
    seed: u64,
) -> Result<Calibration, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<NodeId> = (0..items)
        .map(|i| NodeId::item(format!("i{i:05}")))
        .collect();
    let rows = ids
        .iter()
        .map(|n| {
            (
                n.clone(),
                (0..16).map(|_| rng.sample(StandardNormal)).collect(),
            )
        })
        .collect();
    let model = EmbeddingModel::from_vectors(16, rows).map_err(|e| e.to_string())?;
    let mut split = EvalSplit {
        side: DomainTag::Target,
        holdout_fraction: 0.5,
        seed,
        held_out: BTreeMap::new(),
        train_items: BTreeMap::new(),
        queries: BTreeMap::new(),
        pool: ids.clone(),
    };
    for u in 0..users {
        let user = NodeId::user(DomainTag::Target, format!("u{u}"));
        let pair: Vec<&NodeId> = ids.choose_multiple(&mut rng, 2).collect();
        split
            .train_items
            .insert(user.clone(), vec![pair[0].clone()]);
        split.queries.insert(user.clone(), pair[0].clone());
        split.held_out.insert(user, vec![pair[1].clone()]);
    }
    let report = evaluate(&model, &split, &EvalOptions::default()).map_err(|e| e.to_string())?;
    // The query is excluded, leaving one relevant item among items - 1.
    let candidates = (items - 1) as f64;
    let expected: f64 = (1..=10).map(|i| 1.0 / i as f64).sum::<f64>() / candidates;
    let second: f64 = (1..=10).map(|i| 1.0 / (i * i) as f64).sum::<f64>() / candidates;
    let se = ((second - expected * expected) / users as f64).sqrt();
    let c = Calibration {
        map: report.map_at_k,
        expected,
        se,
    };
    if (c.map - c.expected).abs() <= CALIBRATION_SIGMAS * c.se {
        Ok(c)
    } else {
        Err(format!(
            "MAP {:.5} vs expectation {:.5} (se {:.5})",
            c.map, c.expected, c.se
        ))
    }
}

/// Candidate sets must be nested as alpha walks up the 0.1 grid.
pub fn check_alpha_monotone(raw: &RawSystem) -> Result<(), String> {
    let sys = raw.build().map_err(|e| e.to_string())?;
    for tag in [DomainTag::Source, DomainTag::Target] {
        let mut previous: Option<BTreeSet<NodeId>> = None;
        for a in 1..=10 {
            let users = identify_candidates(&sys, tag, f64::from(a) / 10.0)
                .map_err(|e| e.to_string())?
                .users;
            let users: BTreeSet<NodeId> = users.into_iter().collect();
            if let Some(prev) = &previous {
                if !users.is_subset(prev) {
                    return Err(format!(
                        "{tag} candidates grew at alpha {}",
                        f64::from(a) / 10.0
                    ));
                }
            }
            previous = Some(users);
        }
    }
    Ok(())
}

pub fn user_user_weights(s: &TrainingStructure) -> BTreeMap<(NodeId, NodeId), f64> {
    let g = s.graph();
    g.edges()
        .filter(|&(a, b, _)| g.node(a).is_user() && g.node(b).is_user())
        .map(|(a, b, w)| ((g.node(a).clone(), g.node(b).clone()), w))
        .collect()
}

/// Every superhighway weight at beta must equal beta times its beta = 1
/// weight, with no rounding slack.
pub fn check_beta_linear(raw: &RawSystem, alpha_tenths: u32, betas: &[f64]) -> Result<(), String> {
    let sys = raw.build().map_err(|e| e.to_string())?;
    let alpha = f64::from(alpha_tenths) / 10.0;
    let build = |beta: f64| -> Result<_, String> {
        let params = ConstructionParams::new(alpha, beta).map_err(|e| e.to_string())?;
        let s = construct_superhighway(&sys, &params, &ConstructOptions::default())
            .map_err(|e| e.to_string())?;
        Ok(user_user_weights(&s))
    };
    let unit = build(1.0)?;
    for &beta in betas {
        let scaled = build(beta)?;
        if beta == 0.0 {
            if !scaled.is_empty() {
                return Err("beta 0 materialized edges".into());
            }
            continue;
        }
        if unit.len() != scaled.len() {
            return Err(format!(
                "beta {beta}: {} edges vs {}",
                scaled.len(),
                unit.len()
            ));
        }
        for (k, w) in &unit {
            if scaled[k] != beta * w || w.fract() != 0.0 {
                return Err(format!(
                    "beta {beta}: {k:?} has {} vs {}",
                    scaled[k],
                    beta * w
                ));
            }
        }
    }
    Ok(())
}
