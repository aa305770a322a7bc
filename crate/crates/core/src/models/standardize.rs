use serde::{Deserialize, Serialize};

use crate::Matrix;

/// Per-dimension zero-mean, unit-variance scaling fit on training rows.
/// Constant dimensions are centered but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &Matrix) -> Self {
        let (n, d) = (rows.rows(), rows.cols());
        let mut mean = vec![0.0; d];
        for row in rows.iter_rows() {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let nf = n.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![0.0; d];
        for row in rows.iter_rows() {
            for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .iter()
            .map(|v| {
                let sd = (v / nf).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn transform(&self, rows: &Matrix) -> Matrix {
        let mut out = rows.clone();
        for i in 0..out.rows() {
            let t = self.transform_row(rows.row(i));
            out.row_mut(i).copy_from_slice(&t);
        }
        out
    }
}
