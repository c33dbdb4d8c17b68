//! Fleiss' kappa for agreement among a fixed number of raters.

use serde::{Deserialize, Serialize};

use super::AnnotateError;

/// `counts[i][j]`: how many raters put item `i` in category `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingMatrix {
    counts: Vec<Vec<u32>>,
    raters: u32,
}

impl RatingMatrix {
    pub fn new(counts: Vec<Vec<u32>>) -> Result<Self, AnnotateError> {
        let bad = |m: String| Err(AnnotateError::Ratings(m));
        if counts.len() < 2 {
            return bad(format!("need at least 2 items, got {}", counts.len()));
        }
        let k = counts[0].len();
        if k < 2 {
            return bad(format!("need at least 2 categories, got {k}"));
        }
        let raters: u32 = counts[0].iter().sum();
        if raters < 2 {
            return bad(format!("need at least 2 raters per item, got {raters}"));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return bad(format!("item {i} has {} categories, expected {k}", row.len()));
            }
            let sum: u32 = row.iter().sum();
            if sum != raters {
                return bad(format!("item {i} has {sum} ratings, expected {raters}"));
            }
        }
        Ok(Self { counts, raters })
    }

    /// Builds the count matrix from one label per rater per item.
    pub fn from_labels<L: Ord + Clone>(labels: &[Vec<L>]) -> Result<Self, AnnotateError> {
        let mut cats: Vec<L> = labels.iter().flatten().cloned().collect();
        cats.sort();
        cats.dedup();
        let counts = labels
            .iter()
            .map(|row| {
                let mut c = vec![0u32; cats.len()];
                for l in row {
                    let j = cats.binary_search(l).expect("category collected above");
                    c[j] += 1;
                }
                c
            })
            .collect();
        Self::new(counts)
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }
}

pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64, AnnotateError> {
    let n = f64::from(m.raters);
    let items = m.items() as f64;
    let p_bar = m
        .counts
        .iter()
        .map(|row| {
            let sq: f64 = row.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
            (sq - n) / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;
    let totals: Vec<u64> = (0..m.categories())
        .map(|j| m.counts.iter().map(|r| u64::from(r[j])).sum())
        .collect();
    if totals.iter().filter(|&&t| t > 0).count() == 1 {
        // Every rating fell in one category, so chance agreement is 1.
        return if p_bar == 1.0 {
            Ok(1.0)
        } else {
            Err(AnnotateError::Ratings("degenerate margins".into()))
        };
    }
    let grand = items * n;
    let p_e: f64 = totals
        .iter()
        .map(|&t| {
            let p = t as f64 / grand;
            p * p
        })
        .sum();
    Ok((p_bar - p_e) / (1.0 - p_e))
}
