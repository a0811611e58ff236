//! Order-fixed pairwise summation.
//!
//! Sums are reduced in input order over a balanced binary tree, which keeps
//! rounding error at O(ε log m) and makes results independent of how the
//! terms were produced (sequentially or in parallel).

use crate::hpd::CMatrix;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Pairwise sum of equally shaped matrices; `None` for an empty slice.
pub fn pairwise_sum_matrices(values: &[CMatrix]) -> Option<CMatrix> {
    match values.len() {
        0 => None,
        1 => Some(values[0].clone()),
        2 => Some(&values[0] + &values[1]),
        n => {
            let (a, b) = values.split_at(n / 2);
            Some(pairwise_sum_matrices(a)? + pairwise_sum_matrices(b)?)
        }
    }
}
