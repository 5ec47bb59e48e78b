//! Max-pooling over the union of forward and backward token states.

use serde::{Deserialize, Serialize};

use super::lstm::BiStates;
use super::NnError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// The state that supplied one pooled dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Winner {
    pub token: usize,
    pub direction: Direction,
}

/// One winner per pooled dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolProvenance {
    winners: Vec<Winner>,
}

impl PoolProvenance {
    pub fn new(winners: Vec<Winner>) -> Self {
        Self { winners }
    }

    pub fn winners(&self) -> &[Winner] {
        &self.winners
    }

    pub fn dims(&self) -> usize {
        self.winners.len()
    }
}

/// For every dimension `j`, takes the max over the `2n` candidates
/// `fwd[t][j]` and `bwd[t][j]`. Ties go to the lowest token index, and to
/// the forward state within a token.
pub fn max_pool_with_provenance(
    fwd: &Matrix,
    bwd: &Matrix,
) -> Result<(Vec<f64>, PoolProvenance), NnError> {
    let n = fwd.rows();
    if n == 0 {
        return Err(NnError::EmptySequence);
    }
    if bwd.rows() != n || bwd.cols() != fwd.cols() {
        return Err(NnError::Dimension {
            what: "backward states",
            expected: n * fwd.cols(),
            found: bwd.rows() * bwd.cols(),
        });
    }
    let h = fwd.cols();
    let mut pooled = fwd.row(0).to_vec();
    let mut winners = vec![
        Winner {
            token: 0,
            direction: Direction::Forward,
        };
        h
    ];
    for t in 0..n {
        for (dir, m) in [(Direction::Forward, fwd), (Direction::Backward, bwd)] {
            for (j, &v) in m.row(t).iter().enumerate() {
                if v > pooled[j] {
                    pooled[j] = v;
                    winners[j] = Winner {
                        token: t,
                        direction: dir,
                    };
                }
            }
        }
    }
    Ok((pooled, PoolProvenance { winners }))
}

pub fn pool_states(states: &BiStates) -> Result<(Vec<f64>, PoolProvenance), NnError> {
    max_pool_with_provenance(&states.forward, &states.backward)
}

/// Routes the pooled-vector gradient back to the winning states.
pub(crate) fn unpool(d_pooled: &[f64], prov: &PoolProvenance, n: usize) -> BiStates {
    let h = d_pooled.len();
    let mut forward = Matrix::zeros(n, h);
    let mut backward = Matrix::zeros(n, h);
    for (j, w) in prov.winners.iter().enumerate() {
        let m = match w.direction {
            Direction::Forward => &mut forward,
            Direction::Backward => &mut backward,
        };
        m.row_mut(w.token)[j] += d_pooled[j];
    }
    BiStates { forward, backward }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(token: usize, direction: Direction) -> Winner {
        Winner { token, direction }
    }

    #[test]
    fn single_token() {
        let f = Matrix::from_rows(2, &[[1.0, -2.0]]);
        let b = Matrix::from_rows(2, &[[0.0, 3.0]]);
        let (s, prov) = max_pool_with_provenance(&f, &b).unwrap();
        assert_eq!(s, vec![1.0, 3.0]);
        assert_eq!(
            prov.winners(),
            &[w(0, Direction::Forward), w(0, Direction::Backward)]
        );
    }

    #[test]
    fn two_tokens_forward_winners() {
        let f = Matrix::from_rows(2, &[[1.0, 0.0], [0.0, 1.0]]);
        let b = Matrix::zeros(2, 2);
        let (s, prov) = max_pool_with_provenance(&f, &b).unwrap();
        assert_eq!(s, vec![1.0, 1.0]);
        assert_eq!(
            prov.winners(),
            &[w(0, Direction::Forward), w(1, Direction::Forward)]
        );
    }

    #[test]
    fn ties_go_to_first_token_forward() {
        let f = Matrix::from_rows(3, &[[0.5; 3], [0.5; 3]]);
        let b = f.clone();
        let (_, prov) = max_pool_with_provenance(&f, &b).unwrap();
        assert!(prov.winners().iter().all(|&x| x == w(0, Direction::Forward)));
    }

    #[test]
    fn empty_is_error() {
        let m = Matrix::zeros(0, 3);
        assert!(matches!(
            max_pool_with_provenance(&m, &m),
            Err(NnError::EmptySequence)
        ));
    }
}
