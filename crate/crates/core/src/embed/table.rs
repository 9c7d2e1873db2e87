use std::sync::atomic::{AtomicU64, Ordering};

/// Row-major parameter matrix shared between training workers.
///
/// Entries are f64 bit patterns behind relaxed atomics, which gives
/// lock-free last-write-wins updates when several workers touch the same
/// row. With one worker it behaves exactly like a plain array.
pub(crate) struct ParamTable {
    dims: usize,
    data: Vec<AtomicU64>,
}

impl ParamTable {
    pub fn from_values(dims: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % dims.max(1), 0);
        ParamTable {
            dims,
            data: values
                .into_iter()
                .map(|v| AtomicU64::new(v.to_bits()))
                .collect(),
        }
    }

    #[inline]
    pub fn read(&self, row: usize, out: &mut [f64]) {
        let base = row * self.dims;
        for (o, a) in out.iter_mut().zip(&self.data[base..base + self.dims]) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    #[inline]
    pub fn write(&self, row: usize, src: &[f64]) {
        let base = row * self.dims;
        for (s, a) in src.iter().zip(&self.data[base..base + self.dims]) {
            a.store(s.to_bits(), Ordering::Relaxed);
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}
