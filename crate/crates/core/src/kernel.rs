//! Sparsified correlation kernels built from feature vectors.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::classify::kmeans_1d;
use crate::eigen::symmetric_eigen_sorted;
use crate::error::{Error, Result};
use crate::generate::{balanced_labels, bernoulli_pairs, check_labels, check_size};
use crate::graph::WeightedGraph;
use crate::rng::{item_rng, streams};

/// `n` feature vectors of dimension `p`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    n: usize,
    p: usize,
    data: Vec<f64>,
    pub labels: Option<Vec<i8>>,
}

impl FeatureDataset {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidParameter("feature set has no rows".into()));
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::InvalidParameter("feature vectors have dimension 0".into()));
        }
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::Dimension { expected: p, got: r.len() });
            }
            data.extend(r);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite feature value".into()));
        }
        Ok(Self { n, p, data, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<i8>) -> Result<Self> {
        check_labels(&labels, self.n)?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    /// Whitespace-separated rows, one item per line.
    pub fn read(input: impl Read) -> Result<Self> {
        let mut rows = Vec::new();
        for (k, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let row = t
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse { line: k + 1, msg: format!("{e}") }))
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first().map(|r: &Vec<f64>| r.len()) {
                if row.len() != first {
                    return Err(Error::Parse {
                        line: k + 1,
                        msg: format!("expected {first} values, got {}", row.len()),
                    });
                }
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            let row = self.row(i);
            for (k, v) in row.iter().enumerate() {
                let sep = if k + 1 == row.len() { "\n" } else { " " };
                let _ = write!(s, "{v}{sep}");
            }
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Two balanced classes: `z_i = sigma_i * separation * u + g_i` with
/// `u = 1_p / sqrt(p)` and `g_i` standard normal.
pub fn two_cluster_mixture(n: usize, p: usize, separation: f64, seed: u64) -> Result<FeatureDataset> {
    if n < 2 || p == 0 {
        return Err(Error::InvalidParameter(format!("need n >= 2 and p >= 1, got n = {n}, p = {p}")));
    }
    if !separation.is_finite() {
        return Err(Error::InvalidParameter("separation must be finite".into()));
    }
    let labels = balanced_labels(n, seed);
    let shift = separation / (p as f64).sqrt();
    let rows = (0..n)
        .map(|i| {
            let mut rng = item_rng(seed, streams::MIXTURE, i as u64);
            (0..p).map(|_| f64::from(labels[i]) * shift + rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    FeatureDataset::from_rows(rows)?.with_labels(labels)
}

/// Two-level sparsification of `K_ij = z_i . z_j / p`.
///
/// Each feature entry is kept with probability `sqrt(kappa/p)` (item `i` of
/// the feature-mask stream), each pair is evaluated with probability `c/n`
/// (row `i` of the pair-mask stream). Pairs whose masked product is exactly
/// zero are not stored.
pub fn sparsify_kernel(data: &FeatureDataset, kappa: f64, c: f64, seed: u64) -> Result<WeightedGraph> {
    let (n, p) = (data.n, data.p);
    if !(kappa > 0.0) || kappa > p as f64 {
        return Err(Error::InvalidParameter(format!("kappa must be in (0, p = {p}], got {kappa}")));
    }
    let prob = check_size(n, c)?;
    let keep = (kappa / p as f64).sqrt();
    let masked: Vec<f64> = if keep >= 1.0 {
        data.data.clone()
    } else {
        let mut m = data.data.clone();
        for i in 0..n {
            let mut rng = item_rng(seed, streams::FEATURE_MASK, i as u64);
            for v in &mut m[i * p..(i + 1) * p] {
                if rng.random::<f64>() >= keep {
                    *v = 0.0;
                }
            }
        }
        m
    };
    let pairs = bernoulli_pairs(n, prob, seed, streams::PAIR_MASK)?;
    let row = |i: usize| &masked[i * p..(i + 1) * p];
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(i, j)| (i, j, row(i).iter().zip(row(j)).map(|(a, b)| a * b).sum::<f64>() / p as f64))
        .filter(|e| e.2 != 0.0)
        .collect();
    Ok(WeightedGraph::from_sorted_unchecked(n, edges))
}

/// Labels from the leading eigenvector of the full kernel `Z Z^T / p`,
/// obtained through the `p x p` Gram matrix.
pub fn dense_kernel_labels(data: &FeatureDataset) -> Result<Vec<i8>> {
    let z = DMatrix::from_row_slice(data.n, data.p, &data.data);
    let gram = z.transpose() * &z;
    let (_, vecs) = symmetric_eigen_sorted(gram);
    let top = vecs.column(data.p - 1).into_owned();
    let u = &z * top;
    kmeans_1d(u.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::overlap;

    fn identical_pair() -> FeatureDataset {
        let z = vec![0.6, 0.8, 0.0];
        FeatureDataset::from_rows(vec![z.clone(), z]).unwrap()
    }

    #[test]
    fn identical_rows_give_self_correlation() {
        let d = identical_pair();
        // c just below n keeps the single pair with probability ~1
        let seed = (0..100).find(|&s| sparsify_kernel(&d, 3.0, 1.9999, s).unwrap().num_edges() == 1).unwrap();
        let g = sparsify_kernel(&d, 3.0, 1.9999, seed).unwrap();
        assert!((g.weight(0, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_c_is_empty_and_kappa_checked() {
        let d = identical_pair();
        assert!(sparsify_kernel(&d, 3.0, 0.0, 1).unwrap().is_empty());
        assert!(sparsify_kernel(&d, 4.0, 1.0, 1).is_err());
        assert!(sparsify_kernel(&d, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn full_kappa_gives_exact_correlations() {
        let d = two_cluster_mixture(200, 8, 2.0, 3).unwrap();
        let g = sparsify_kernel(&d, 8.0, 10.0, 3).unwrap();
        for &(i, j, w) in g.edges() {
            let exact: f64 = d.row(i).iter().zip(d.row(j)).map(|(a, b)| a * b).sum::<f64>() / 8.0;
            assert_eq!(w, exact);
        }
    }

    #[test]
    fn feature_mask_rate() {
        let d = FeatureDataset::from_rows(vec![vec![1.0; 512]; 400]).unwrap();
        let g = sparsify_kernel(&d, 20.0, 50.0, 5).unwrap();
        // with all-ones features the weight is (#shared kept entries) / p
        let q = (20.0f64 / 512.0).sqrt();
        let mean = g.edges().iter().map(|e| e.2).sum::<f64>() / g.num_edges() as f64;
        assert!((mean - q * q).abs() < 0.1 * q * q, "mean {mean}");
    }

    #[test]
    fn dense_oracle_separates_mixture() {
        let d = two_cluster_mixture(500, 16, 4.0, 9).unwrap();
        let l = dense_kernel_labels(&d).unwrap();
        assert!(overlap(d.labels.as_ref().unwrap(), &l).unwrap() > 0.99);
    }

    #[test]
    fn text_round_trip() {
        let d = two_cluster_mixture(10, 3, 1.0, 2).unwrap();
        let back = FeatureDataset::read(d.to_text().as_bytes()).unwrap();
        assert_eq!(back.data, d.data);
        assert!(FeatureDataset::read("1 2\n3\n".as_bytes()).is_err());
    }
}
