use superhighway::data::{generate_synthetic, SynthConfig};
use superhighway::{
    single_structure, train, train_transfer, Backend, DomainTag, GraphBuilder, NodeId, Provenance,
    StructureKind, TrainConfig, TrainingStructure,
};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn structure(edges: &[(NodeId, NodeId, f64)]) -> TrainingStructure {
    let mut b = GraphBuilder::new();
    for (x, y, w) in edges {
        b.add_edge(x.clone(), y.clone(), *w).unwrap();
    }
    TrainingStructure::new(b.build(), Provenance::plain(StructureKind::Highway))
}

fn user(k: &str) -> NodeId {
    NodeId::user(DomainTag::Target, k)
}

fn item(k: &str) -> NodeId {
    NodeId::item(k)
}

/// Largest singular value by power iteration on `M^T M`.
fn top_singular_value(m: &[Vec<f64>]) -> f64 {
    let cols = m[0].len();
    let mut v: Vec<f64> = (0..cols).map(|j| 1.0 + j as f64 * 0.1).collect();
    let mut sigma = 0.0;
    for _ in 0..500 {
        let mv: Vec<f64> = m
            .iter()
            .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let mtmv: Vec<f64> = (0..cols)
            .map(|j| m.iter().zip(&mv).map(|(row, x)| row[j] * x).sum())
            .collect();
        let norm = mtmv.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = mtmv.iter().map(|x| x / norm).collect();
        sigma = norm.sqrt();
    }
    sigma
}

#[test]
fn mf_beats_the_best_rank_one_reconstruction() {
    let users = ["a", "b", "c", "d"];
    let items = ["p", "q", "r", "s"];
    // Two 2x2 blocks of ones.
    let b: Vec<Vec<f64>> = (0..4)
        .map(|u| {
            (0..4)
                .map(|i| if u / 2 == i / 2 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..4 {
        for i in 0..4 {
            if b[u][i] > 0.0 {
                edges.push((user(users[u]), item(items[i]), 1.0));
            }
        }
    }
    let s = structure(&edges);
    let cfg = TrainConfig {
        dims: 4,
        epochs: 3000,
        learning_rate: 0.02,
        min_learning_rate: 0.001,
        negatives: 2,
        ..Default::default()
    };
    let model = train(&s, Backend::Mf, &cfg).unwrap();
    let mut err = 0.0;
    for u in 0..4 {
        for i in 0..4 {
            let x = model.vector(&user(users[u])).unwrap();
            let y = model.context_vector(&item(items[i])).unwrap();
            let fit: f64 = x.iter().zip(y).map(|(a, c)| a * c).sum();
            err += (b[u][i] - fit).powi(2);
        }
    }
    let frob: f64 = b.iter().flatten().map(|x| x * x).sum();
    let sigma = top_singular_value(&b);
    let rank_one = frob - sigma * sigma;
    assert!((rank_one - 4.0).abs() < 1e-9);
    assert!(err < rank_one, "MF error {err} vs rank-1 {rank_one}");
}

#[test]
fn deepwalk_separates_barbell_cliques() {
    let mut edges = Vec::new();
    for side in ["l", "r"] {
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((
                    item(&format!("{side}{a}")),
                    item(&format!("{side}{b}")),
                    1.0,
                ));
            }
        }
    }
    edges.push((item("l0"), item("r0"), 1.0));
    let s = structure(&edges);
    for seed in 0..10 {
        let cfg = TrainConfig {
            dims: 16,
            seed,
            ..Default::default()
        };
        let m = train(&s, Backend::DeepWalk, &cfg).unwrap();
        let v = |k: String| m.vector(&item(&k)).unwrap().to_vec();
        let (mut within, mut across) = (Vec::new(), Vec::new());
        for a in 0..5 {
            for b in 0..5 {
                across.push(cosine(&v(format!("l{a}")), &v(format!("r{b}"))));
                if a < b {
                    within.push(cosine(&v(format!("l{a}")), &v(format!("l{b}"))));
                    within.push(cosine(&v(format!("r{a}")), &v(format!("r{b}"))));
                }
            }
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean(&within) > mean(&across), "seed {seed}");
    }
}

#[test]
fn hpe_single_edge_endpoints_are_most_similar() {
    let mut b = GraphBuilder::new();
    b.add_edge(user("u"), item("i"), 1.0).unwrap();
    for k in ["x", "y", "z"] {
        b.add_node(item(k));
    }
    let s = TrainingStructure::new(b.build(), Provenance::plain(StructureKind::Single));
    let cfg = TrainConfig {
        dims: 8,
        epochs: 200,
        ..Default::default()
    };
    let m = train(&s, Backend::Hpe, &cfg).unwrap();
    let nodes = m.nodes().to_vec();
    let best = cosine(m.vector(&user("u")).unwrap(), m.vector(&item("i")).unwrap());
    for a in 0..nodes.len() {
        for c in a + 1..nodes.len() {
            let pair = cosine(m.vector(&nodes[a]).unwrap(), m.vector(&nodes[c]).unwrap());
            assert!(
                pair <= best,
                "{} ~ {} = {pair} beats {best}",
                nodes[a],
                nodes[c]
            );
        }
    }
}

#[test]
fn hpe_separates_two_blocks_with_a_bridge() {
    let mut edges = Vec::new();
    for block in ["a", "b"] {
        for u in 0..4 {
            for i in 0..4 {
                edges.push((
                    user(&format!("{block}u{u}")),
                    item(&format!("{block}i{i}")),
                    1.0,
                ));
            }
            edges.push((user(&format!("{block}u{u}")), item("bridge"), 1.0));
        }
    }
    let s = structure(&edges);
    for seed in 0..10 {
        let cfg = TrainConfig {
            dims: 16,
            epochs: 50,
            seed,
            ..Default::default()
        };
        let m = train(&s, Backend::Hpe, &cfg).unwrap();
        let v = |k: String| m.vector(&item(&k)).unwrap().to_vec();
        let (mut within, mut across) = (Vec::new(), Vec::new());
        for x in 0..4 {
            for y in 0..4 {
                across.push(cosine(&v(format!("ai{x}")), &v(format!("bi{y}"))));
                if x < y {
                    within.push(cosine(&v(format!("ai{x}")), &v(format!("ai{y}"))));
                    within.push(cosine(&v(format!("bi{x}")), &v(format!("bi{y}"))));
                }
            }
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean(&within) > mean(&across), "seed {seed}");
    }
}

fn small_synthetic(overlap: f64) -> superhighway::CrossDomainSystem {
    generate_synthetic(&SynthConfig {
        users_s: 150,
        users_t: 60,
        items_s: 120,
        items_t: 80,
        overlap_ratio: overlap,
        latent_dims: 4,
        interactions_per_user_s: 12.0,
        interactions_per_user_t: 4.0,
        noise: 0.1,
        seed: 9,
    })
    .unwrap()
    .system
}

#[test]
fn pretrained_shared_items_move_less_than_fresh_ones() {
    let sys = small_synthetic(0.5);
    // HPE draws `epochs * edges` samples, so it needs more epochs than the
    // walk-based backend to move anything on a graph this small.
    for (backend, epochs) in [(Backend::DeepWalk, 5), (Backend::Hpe, 50)] {
        let cfg = TrainConfig {
            dims: 16,
            epochs,
            ..Default::default()
        };
        let start = train_transfer(&sys, backend, &cfg, 0).unwrap();
        let end = train_transfer(&sys, backend, &cfg, cfg.epochs).unwrap();
        let (mut shared, mut fresh) = (Vec::new(), Vec::new());
        for n in sys.target().items() {
            let d: f64 = start
                .vector(n)
                .unwrap()
                .iter()
                .zip(end.vector(n).unwrap())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if sys.is_shared(n) {
                shared.push(d);
            } else {
                fresh.push(d);
            }
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(
            mean(&shared) < mean(&fresh),
            "{backend}: {} vs {}",
            mean(&shared),
            mean(&fresh)
        );
    }
}

#[test]
fn single_threaded_training_is_reproducible_and_bounded() {
    let sys = small_synthetic(0.4);
    let s = single_structure(&sys);
    for backend in Backend::ALL {
        let cfg = TrainConfig::default();
        let a = train(&s, backend, &cfg).unwrap();
        let b = train(&s, backend, &cfg).unwrap();
        assert_eq!(a, b, "{backend}");
        assert!(a.all_finite());
        assert!(a.max_norm() < 1e3, "{backend}: {}", a.max_norm());
        assert_eq!(a.len(), s.graph().node_count());
        let other = train(&s, backend, &TrainConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }
}

#[test]
fn parallel_training_stays_finite() {
    let sys = small_synthetic(0.4);
    let s = superhighway::merge_highway(&sys);
    for backend in Backend::ALL {
        let cfg = TrainConfig {
            workers: 3,
            ..Default::default()
        };
        let m = train(&s, backend, &cfg).unwrap();
        assert!(m.all_finite() && m.max_norm() < 1e3, "{backend}");
    }
}
