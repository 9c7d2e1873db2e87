//! Skip-gram with negative sampling, shared by the walk-based backends.

use rand::Rng;

use super::alias::AliasTable;
use super::table::ParamTable;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) struct SkipGram<'a> {
    pub input: &'a ParamTable,
    pub context: &'a ParamTable,
    pub noise: &'a AliasTable,
    pub negatives: usize,
    pub dims: usize,
    /// `input` and `context` are the same table; noise draws that hit the
    /// center are skipped since a vector cannot be pushed away from itself.
    pub shared: bool,
}

/// Per-worker buffers.
pub(crate) struct Scratch {
    center: Vec<f64>,
    grad: Vec<f64>,
    other: Vec<f64>,
}

impl Scratch {
    pub fn new(dims: usize) -> Self {
        Scratch {
            center: vec![0.0; dims],
            grad: vec![0.0; dims],
            other: vec![0.0; dims],
        }
    }
}

impl SkipGram<'_> {
    /// One positive pair plus `negatives` noise draws. Noise draws that hit
    /// the positive context are skipped. `center != ctx` is the caller's job.
    pub fn step<R: Rng>(&self, center: usize, ctx: usize, lr: f64, rng: &mut R, s: &mut Scratch) {
        self.input.read(center, &mut s.center);
        s.grad.iter_mut().for_each(|g| *g = 0.0);
        self.update(ctx, 1.0, lr, s);
        for _ in 0..self.negatives {
            let neg = self.noise.sample(rng);
            if neg == ctx || (self.shared && neg == center) {
                continue;
            }
            self.update(neg, 0.0, lr, s);
        }
        for (c, g) in s.center.iter_mut().zip(&s.grad) {
            *c += g;
        }
        self.input.write(center, &s.center);
    }

    #[inline]
    fn update(&self, target: usize, label: f64, lr: f64, s: &mut Scratch) {
        self.context.read(target, &mut s.other);
        let g = (label - sigmoid(dot(&s.center, &s.other))) * lr;
        for ((acc, o), c) in s.grad.iter_mut().zip(s.other.iter_mut()).zip(&s.center) {
            *acc += g * *o;
            *o += g * c;
        }
        self.context.write(target, &s.other);
    }
}

/// Noise distribution proportional to `frequency^0.75`.
pub(crate) fn noise_table(frequencies: &[f64]) -> Option<AliasTable> {
    let w: Vec<f64> = frequencies.iter().map(|f| f.powf(0.75)).collect();
    AliasTable::new(&w)
}
