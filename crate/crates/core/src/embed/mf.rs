//! Matrix factorization of the unified adjacency.
//!
//! Every node has an input vector `x` and a context vector `y`. For each
//! observed edge `(i, j, w)`, in both orientations, SGD minimizes
//!
//! ```text
//! (w - x_i · y_j)^2 + λ (|x_i|^2 + |y_j|^2)
//! ```
//!
//! and each observation is followed by `negatives` uniformly drawn
//! unobserved pairs `(i, j')` with target 0. User-user edges are ordinary
//! observations here.

use rand::seq::SliceRandom;
use rand::Rng;

use super::sgns::dot;
use super::table::ParamTable;
use super::{run_workers, EmbeddingModel, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::TrainingStructure;
use crate::seed::derive_seed;

/// Per-observation loss.
pub fn edge_loss(x: &[f64], y: &[f64], w: f64, lambda: f64) -> f64 {
    let e = w - dot(x, y);
    e * e + lambda * (dot(x, x) + dot(y, y))
}

/// Gradient of [`edge_loss`] with respect to `x` and `y`.
pub fn edge_gradient(x: &[f64], y: &[f64], w: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let e = w - dot(x, y);
    let gx = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| -2.0 * e * yi + 2.0 * lambda * xi)
        .collect();
    let gy = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| -2.0 * e * xi + 2.0 * lambda * yi)
        .collect();
    (gx, gy)
}

struct Rows {
    x: Vec<f64>,
    y: Vec<f64>,
}

/// One SGD step in place; returns the loss before the step.
#[inline]
fn sgd_step(rows: &mut Rows, w: f64, lambda: f64, lr: f64) -> f64 {
    let e = w - dot(&rows.x, &rows.y);
    let loss = e * e + lambda * (dot(&rows.x, &rows.x) + dot(&rows.y, &rows.y));
    for (xi, yi) in rows.x.iter_mut().zip(rows.y.iter_mut()) {
        let gx = -2.0 * e * *yi + 2.0 * lambda * *xi;
        let gy = -2.0 * e * *xi + 2.0 * lambda * *yi;
        *xi -= lr * gx;
        *yi -= lr * gy;
    }
    loss
}

pub(crate) fn fit(
    g: &TrainingStructure,
    cfg: &TrainConfig,
    input: Vec<f64>,
    context: Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let graph = g.graph();
    let n = graph.node_count();
    let mut observations: Vec<(u32, u32, f64)> = Vec::with_capacity(2 * graph.edge_count());
    for (a, b, w) in graph.edges() {
        observations.push((a as u32, b as u32, w));
        observations.push((b as u32, a as u32, w));
    }
    if observations.is_empty() {
        return Ok((input, context));
    }
    let x_table = ParamTable::from_values(cfg.dims, input);
    let y_table = ParamTable::from_values(cfg.dims, context);
    let mut order_rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(derive_seed(
        cfg.seed, "mf-order",
    ));
    let per_epoch = observations.len();
    let total = per_epoch * cfg.epochs;

    for epoch in 0..cfg.epochs {
        observations.shuffle(&mut order_rng);
        let epoch_seed = derive_seed(cfg.seed, &format!("mf-epoch-{epoch}"));
        let loss_acc = std::sync::Mutex::new(0.0f64);
        run_workers(cfg.workers, per_epoch, epoch_seed, |range, rng| {
            let mut rows = Rows {
                x: vec![0.0; cfg.dims],
                y: vec![0.0; cfg.dims],
            };
            let mut loss = 0.0;
            for (done, slot) in range.enumerate() {
                // Workers advance through the epoch side by side.
                let global = epoch * per_epoch + done * cfg.workers;
                let lr = cfg.rate_at(global.min(total), total);
                let (i, j, w) = observations[slot];
                let (i, j) = (i as usize, j as usize);
                x_table.read(i, &mut rows.x);
                y_table.read(j, &mut rows.y);
                loss += sgd_step(&mut rows, w, cfg.regularization, lr);
                x_table.write(i, &rows.x);
                y_table.write(j, &rows.y);

                for _ in 0..cfg.negatives {
                    let Some(neg) = draw_unobserved(g, i, n, rng) else {
                        break;
                    };
                    x_table.read(i, &mut rows.x);
                    y_table.read(neg, &mut rows.y);
                    loss += sgd_step(&mut rows, 0.0, cfg.regularization, lr);
                    x_table.write(i, &rows.x);
                    y_table.write(neg, &rows.y);
                }
            }
            *loss_acc.lock().unwrap() += loss;
        });
        let loss = loss_acc.into_inner().unwrap();
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                learning_rate: cfg.learning_rate,
            });
        }
    }
    let x = x_table.into_values();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            epoch: cfg.epochs - 1,
            learning_rate: cfg.learning_rate,
        });
    }
    Ok((x, y_table.into_values()))
}

fn draw_unobserved<R: Rng>(
    g: &TrainingStructure,
    i: usize,
    n: usize,
    rng: &mut R,
) -> Option<usize> {
    if n < 2 {
        return None;
    }
    for _ in 0..16 {
        let j = rng.random_range(0..n);
        if j != i && !g.graph().has_edge(i, j) {
            return Some(j);
        }
    }
    None
}

/// Matrix factorization of the unified weighted adjacency.
pub fn train_mf(g: &TrainingStructure, cfg: &TrainConfig) -> Result<EmbeddingModel> {
    super::train(g, super::Backend::Mf, cfg)
}
