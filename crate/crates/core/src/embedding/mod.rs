//! Skip-gram word vectors with negative sampling.

mod io;
mod sampler;
mod sgns;
mod vocab;

pub use io::{load_vectors, read_vectors, save_vectors, write_vectors};
pub use sampler::NegativeSampler;
pub use sgns::{sgns_pair_objective, train_sgns, train_sgns_with_stats, PairGradients, SgnsConfig, SgnsStats};
pub use vocab::{build_vocab, Vocabulary};

use crate::{Error, Result};

/// Word vectors aligned with a [`Vocabulary`]: row `i` belongs to word `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    input: Vec<f32>,
    /// Output-side vectors; only present on freshly trained tables.
    context: Option<Vec<f32>>,
}

impl WordVectorTable {
    pub fn new(dim: usize, input: Vec<f32>) -> Result<Self> {
        if dim == 0 || !input.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: input.len(),
            });
        }
        Ok(WordVectorTable {
            dim,
            input,
            context: None,
        })
    }

    pub(crate) fn with_context(dim: usize, input: Vec<f32>, context: Vec<f32>) -> Self {
        debug_assert_eq!(input.len(), context.len());
        WordVectorTable {
            dim,
            input,
            context: Some(context),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.input.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_row(&self, i: usize) -> Option<&[f32]> {
        self.context
            .as_ref()
            .map(|c| &c[i * self.dim..(i + 1) * self.dim])
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().all(|v| v.is_finite())
            && self.context.iter().flatten().all(|v| v.is_finite())
    }

    /// Cosine similarity of two input rows; 0 when either row is all zeros.
    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (self.row(a), self.row(b));
        let mut dot = 0.0f64;
        let mut nx = 0.0f64;
        let mut ny = 0.0f64;
        for (&p, &q) in x.iter().zip(y) {
            dot += p as f64 * q as f64;
            nx += p as f64 * p as f64;
            ny += q as f64 * q as f64;
        }
        if nx == 0.0 || ny == 0.0 {
            0.0
        } else {
            dot / (nx.sqrt() * ny.sqrt())
        }
    }
}
