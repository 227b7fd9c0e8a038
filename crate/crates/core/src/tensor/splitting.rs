use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A proper subset `t` of the modes `{0, …, d-1}` (stored 0-based, sorted).
///
/// Displayed 1-based, e.g. `t=1-2` for the first two modes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Splitting {
    modes: Vec<usize>,
    order: usize,
}

impl Splitting {
    /// Builds a splitting from 0-based mode indices.
    pub fn new(order: usize, modes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut modes: Vec<usize> = modes.into_iter().collect();
        modes.sort_unstable();
        if modes.is_empty() {
            return Err(Error::SplittingEmpty);
        }
        for w in modes.windows(2) {
            if w[0] == w[1] {
                return Err(Error::SplittingDuplicate(w[0] + 1));
            }
        }
        if let Some(&last) = modes.last() {
            if last >= order {
                return Err(Error::SplittingOutOfRange {
                    index: last + 1,
                    order,
                });
            }
        }
        if modes.len() == order {
            return Err(Error::SplittingFull(order));
        }
        Ok(Splitting { modes, order })
    }

    /// Builds a splitting from 1-based mode indices, as written in configs.
    pub fn from_one_based(order: usize, modes: &[usize]) -> Result<Self> {
        if let Some(&bad) = modes.iter().find(|&&m| m == 0) {
            return Err(Error::SplittingOutOfRange { index: bad, order });
        }
        Splitting::new(order, modes.iter().map(|m| m - 1))
    }

    /// The tensor-train splitting `{1, …, mu}`.
    pub fn leading(order: usize, mu: usize) -> Result<Self> {
        Splitting::new(order, 0..mu)
    }

    /// All tensor-train splittings `{1}, {1,2}, …, {1,…,d-1}`.
    pub fn tt_family(order: usize) -> Vec<Splitting> {
        (1..order)
            .map(|mu| Splitting::leading(order, mu).expect("0 < mu < order"))
            .collect()
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contains(&self, mode: usize) -> bool {
        self.modes.binary_search(&mode).is_ok()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.order).filter(|m| !self.contains(*m)).collect()
    }

    pub fn check_order(&self, order: usize) -> Result<()> {
        if self.order == order {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: vec![self.order],
                found: vec![order],
            })
        }
    }

    pub fn row_dim(&self, dims: &[usize]) -> usize {
        self.modes.iter().map(|&m| dims[m]).product()
    }

    pub fn col_dim(&self, dims: &[usize]) -> usize {
        self.complement().iter().map(|&m| dims[m]).product()
    }

    /// `D^(t)`: the number of singular values of the unfolding.
    pub fn max_rank(&self, dims: &[usize]) -> usize {
        self.row_dim(dims).min(self.col_dim(dims))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Splitting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.modes.iter().map(|m| (m + 1).to_string()).collect();
        write!(f, "t={}", parts.join("-"))
    }
}
