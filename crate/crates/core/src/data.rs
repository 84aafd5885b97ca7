//! Datasets, IDX ingestion, synthetic workloads and client partitioning.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad IDX magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },
    #[error("{path}: truncated IDX file, need {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot split {n} samples into {parts} parts")]
    TooManyParts { n: usize, parts: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Row-major feature matrix with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    features: Vec<S>,
    labels: Vec<usize>,
    dim: usize,
    num_classes: usize,
}

impl<S: Real> Dataset<S> {
    pub fn new(
        features: Vec<S>,
        labels: Vec<usize>,
        dim: usize,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        if labels.is_empty() || dim == 0 || num_classes == 0 {
            return Err(DataError::Invalid("empty dataset".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(DataError::Invalid(format!(
                "{} feature values for {} samples of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::Invalid(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(DataError::Invalid("non-finite feature".into()));
        }
        Ok(Self {
            features,
            labels,
            dim,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> &[S] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Copies the given rows into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DataError> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.sample(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels, self.dim, self.num_classes)
    }

    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }
}

/// One client's share of a parent dataset.
#[derive(Debug, Clone)]
pub struct ClientDataset<S> {
    pub client_id: usize,
    data: Arc<Dataset<S>>,
    indices: Vec<usize>,
}

impl<S: Real> ClientDataset<S> {
    pub fn new(client_id: usize, data: Arc<Dataset<S>>, indices: Vec<usize>) -> Self {
        Self {
            client_id,
            data,
            indices,
        }
    }

    /// Wraps a whole dataset as a single client.
    pub fn whole(client_id: usize, data: Arc<Dataset<S>>) -> Self {
        let indices = (0..data.len()).collect();
        Self::new(client_id, data, indices)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn parent(&self) -> &Dataset<S> {
        &self.data
    }

    pub fn sample(&self, j: usize) -> (&[S], usize) {
        let i = self.indices[j];
        (self.data.sample(i), self.data.label(i))
    }

    pub fn distinct_labels(&self) -> usize {
        let mut seen = vec![false; self.data.num_classes()];
        for &i in &self.indices {
            seen[self.data.label(i)] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn check_len(path: &Path, bytes: &[u8], expected: usize) -> Result<(), DataError> {
    if bytes.len() < expected {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(())
}

fn check_magic(path: &Path, bytes: &[u8], expected: u32) -> Result<(), DataError> {
    check_len(path, bytes, 4)?;
    let found = be_u32(bytes, 0);
    if found != expected {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Loads an IDX image/label pair. Pixels are scaled by 1/255.
pub fn load_mnist_idx<S: Real>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset<S>, DataError> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = read_file(ip)?;
    let labels = read_file(lp)?;

    check_magic(ip, &images, IDX_IMAGES_MAGIC)?;
    check_len(ip, &images, 16)?;
    let n = be_u32(&images, 4) as usize;
    let dim = be_u32(&images, 8) as usize * be_u32(&images, 12) as usize;
    check_len(ip, &images, 16 + n * dim)?;

    check_magic(lp, &labels, IDX_LABELS_MAGIC)?;
    check_len(lp, &labels, 8)?;
    let n_labels = be_u32(&labels, 4) as usize;
    check_len(lp, &labels, 8 + n_labels)?;
    if n != n_labels {
        return Err(DataError::CountMismatch {
            images: n,
            labels: n_labels,
        });
    }

    let scale = S::of(1.0 / 255.0);
    let features = images[16..16 + n * dim]
        .iter()
        .map(|&b| S::of(b as f64) * scale)
        .collect();
    let labels: Vec<usize> = labels[8..8 + n].iter().map(|&b| b as usize).collect();
    let num_classes = labels.iter().max().map_or(1, |&m| m + 1);
    Dataset::new(features, labels, dim, num_classes)
}

/// Encodes images (values in [0,1], rounded to bytes) and labels as IDX.
pub fn encode_idx<S: Real>(ds: &Dataset<S>, rows: usize, cols: usize) -> (Vec<u8>, Vec<u8>) {
    assert_eq!(rows * cols, ds.dim(), "image shape must match dimension");
    let n = ds.len() as u32;
    let mut images = Vec::with_capacity(16 + ds.features.len());
    images.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&n.to_be_bytes());
    images.extend_from_slice(&(rows as u32).to_be_bytes());
    images.extend_from_slice(&(cols as u32).to_be_bytes());
    images.extend(
        ds.features
            .iter()
            .map(|&x| (x.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    let mut labels = Vec::with_capacity(8 + ds.len());
    labels.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&n.to_be_bytes());
    labels.extend(ds.labels.iter().map(|&l| l as u8));
    (images, labels)
}

/// Gaussian class clusters (unit variance) whose means are pairwise
/// `separation` apart.
///
/// With `num_classes <= d` the means are `(separation/√2)·q_k` for random
/// orthonormal `q_k`, so class signal is spread over every coordinate;
/// beyond that they are drawn at random with the same scale. Features are
/// then min–max scaled per coordinate into [0,1].
pub fn synth_classification<S: Real>(
    n: usize,
    d: usize,
    num_classes: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset<S>, DataError> {
    if num_classes == 0 || d == 0 || n < num_classes {
        return Err(DataError::Invalid(format!(
            "need n >= num_classes >= 1 and d >= 1 (n={n}, c={num_classes}, d={d})"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Synth, &[]);
    let radius = separation / std::f64::consts::SQRT_2;
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(num_classes);
    for _ in 0..num_classes {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if num_classes <= d {
            for q in &dirs {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        dirs.push(v.into_iter().map(|a| a / norm).collect());
    }
    let means: Vec<Vec<f64>> = dirs
        .into_iter()
        .map(|q| q.into_iter().map(|a| radius * a).collect())
        .collect();

    let mut raw = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % num_classes;
        labels.push(k);
        for &mu in &means[k] {
            raw.push(mu + rng.sample::<f64, _>(StandardNormal));
        }
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in raw.chunks(d) {
        for j in 0..d {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    let features = raw
        .chunks(d)
        .flat_map(|row| {
            (0..d)
                .map(|j| {
                    let span = hi[j] - lo[j];
                    S::of(if span > 0.0 {
                        (row[j] - lo[j]) / span
                    } else {
                        0.0
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Dataset::new(features, labels, d, num_classes)
}

/// Seeded holdout split; returns `(train, test)`.
pub fn train_test_split<S: Real>(
    ds: &Dataset<S>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<S>, Dataset<S>), DataError> {
    let n = ds.len();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(DataError::Invalid(format!(
            "test fraction {test_fraction} leaves an empty side of {n} samples"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, Stream::Split, &[]));
    let (test, train) = perm.split_at(n_test);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Random permutation cut into `k` parts whose sizes differ by at most one.
pub fn partition_iid<S: Real>(
    ds: &Arc<Dataset<S>>,
    k: usize,
    seed: u64,
) -> Result<Vec<ClientDataset<S>>, DataError> {
    let n = ds.len();
    if k == 0 || k > n {
        return Err(DataError::TooManyParts { n, parts: k });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, Stream::Partition, &[0]));
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for c in 0..k {
        let len = base + usize::from(c < extra);
        let mut idx = perm[start..start + len].to_vec();
        idx.sort_unstable();
        out.push(ClientDataset::new(c, Arc::clone(ds), idx));
        start += len;
    }
    Ok(out)
}

/// Sort-by-label shard partition: `k * shards_per_client` shards dealt at
/// random, `shards_per_client` to each client.
///
/// When there are at least as many shards as labels, every shard holds a
/// single label: classes receive shards in proportion to their size
/// (highest-averages allocation, at least one each) and each class is cut
/// into contiguous runs, leftovers joining its last shard. Otherwise the
/// sorted order is cut into equal runs with leftovers on the final shard.
pub fn partition_noniid_shards<S: Real>(
    ds: &Arc<Dataset<S>>,
    k: usize,
    shards_per_client: usize,
    seed: u64,
) -> Result<Vec<ClientDataset<S>>, DataError> {
    let n = ds.len();
    let num_shards = k * shards_per_client;
    if k == 0 || shards_per_client == 0 || num_shards > n {
        return Err(DataError::TooManyParts {
            n,
            parts: num_shards,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (ds.label(i), i));
    let shards = shard_bounds(&ds.label_histogram(), num_shards);
    let mut deal: Vec<usize> = (0..num_shards).collect();
    deal.shuffle(&mut stream_rng(seed, Stream::Partition, &[1]));
    Ok(deal
        .chunks(shards_per_client)
        .enumerate()
        .map(|(c, picks)| {
            let mut idx: Vec<usize> = picks
                .iter()
                .flat_map(|&s| order[shards[s].0..shards[s].1].iter().copied())
                .collect();
            idx.sort_unstable();
            ClientDataset::new(c, Arc::clone(ds), idx)
        })
        .collect())
}

/// `[start, end)` ranges into the label-sorted order, one per shard.
fn shard_bounds(histogram: &[usize], num_shards: usize) -> Vec<(usize, usize)> {
    let n: usize = histogram.iter().sum();
    let present: Vec<usize> = (0..histogram.len()).filter(|&c| histogram[c] > 0).collect();
    if num_shards < present.len() {
        let len = n / num_shards;
        return (0..num_shards)
            .map(|s| {
                (
                    s * len,
                    if s + 1 == num_shards {
                        n
                    } else {
                        (s + 1) * len
                    },
                )
            })
            .collect();
    }
    let mut alloc = vec![0usize; histogram.len()];
    for &c in &present {
        alloc[c] = 1;
    }
    for _ in present.len()..num_shards {
        // highest average class size per shard, never more shards than samples
        let best = present
            .iter()
            .copied()
            .filter(|&c| alloc[c] < histogram[c])
            .max_by(|&a, &b| {
                (histogram[a] * alloc[b])
                    .cmp(&(histogram[b] * alloc[a]))
                    .then(b.cmp(&a))
            })
            .expect("num_shards <= n leaves room");
        alloc[best] += 1;
    }
    let mut bounds = Vec::with_capacity(num_shards);
    let mut start = 0;
    for (c, &count) in histogram.iter().enumerate() {
        let a = alloc[c];
        for s in 0..a {
            let len = count / a;
            let end = if s + 1 == a {
                start + count - len * s
            } else {
                start + len
            };
            bounds.push((start, end));
            start = end;
        }
    }
    bounds
}
