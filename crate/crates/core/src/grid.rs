//! Parameter grids for sweeps and searches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Parameters to visit, always returned in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamGrid {
    /// `points` evenly spaced parameters including both ends.
    Uniform { points: usize },
    /// `points` uniform draws from a ChaCha8 stream seeded with `seed`.
    Random { points: usize, seed: u64 },
    /// An explicit list.
    List { params: Vec<f64> },
}

impl ParamGrid {
    pub fn len(&self) -> usize {
        match self {
            ParamGrid::Uniform { points } | ParamGrid::Random { points, .. } => *points,
            ParamGrid::List { params } => params.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn params(&self, within: Interval) -> Result<Vec<f64>> {
        let mut out = match self {
            ParamGrid::Uniform { points } => within.grid(*points),
            ParamGrid::Random { points, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*points)
                    .map(|_| within.lo + within.len() * rng.gen::<f64>())
                    .collect()
            }
            ParamGrid::List { params } => {
                if let Some(a) = params.iter().find(|a| !within.contains(**a)) {
                    return Err(Error::ParamOutOfRange {
                        a: *a,
                        lo: within.lo,
                        hi: within.hi,
                    });
                }
                params.clone()
            }
        };
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_grid_is_reproducible_and_sorted() {
        let iv = Interval::new(0.1, 0.9);
        let g = ParamGrid::Random {
            points: 20,
            seed: 7,
        };
        let a = g.params(iv).unwrap();
        assert_eq!(a, g.params(iv).unwrap());
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|&x| iv.contains(x)));
        assert_ne!(
            a,
            ParamGrid::Random {
                points: 20,
                seed: 8
            }
            .params(iv)
            .unwrap()
        );
    }

    #[test]
    fn list_outside_is_rejected() {
        let g = ParamGrid::List {
            params: vec![0.5, 2.0],
        };
        assert!(g.params(Interval::new(0.0, 1.0)).is_err());
        assert_eq!(
            ParamGrid::Uniform { points: 3 }
                .params(Interval::new(0.0, 1.0))
                .unwrap(),
            vec![0.0, 0.5, 1.0]
        );
    }
}
