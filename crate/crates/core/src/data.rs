//! Synthetic experiments, CSV ingestion and estimation/validation splits.

use std::fs::File;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSignal {
    /// ±1 signal that flips sign with probability `switch_prob` at every
    /// step, so hold times are geometric with mean `1 / switch_prob`.
    Prbs {
        switch_prob: f64,
    },
    Gaussian {
        mean: f64,
        sd: f64,
    },
}

/// Gaussian mixture noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl NoiseSpec {
    pub fn standard() -> Self {
        Self {
            weights: vec![1.0],
            means: vec![0.0],
            sds: vec![1.0],
        }
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let n: f64 = rng.sample(StandardNormal);
        self.means[k] + self.sds[k] * n
    }
}

/// An ARX system driven by a synthetic input, started from zero initial
/// conditions. The input and the noise use separate ChaCha20 streams (0 and
/// 1) of the same seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub input: InputSignal,
    pub noise: NoiseSpec,
    /// Multiplies every noise sample; 0 gives noise-free data.
    pub noise_scale: f64,
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetMeta {
    Generated {
        spec: ExperimentSpec,
        t: usize,
        seed: u64,
        rng: String,
    },
    Csv {
        path: String,
    },
    Derived {
        description: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub u: Option<Vec<f64>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(y: Vec<f64>, u: Option<Vec<f64>>, meta: DatasetMeta) -> Result<Self> {
        if let Some(u) = &u {
            if u.len() != y.len() {
                return Err(Error::LengthMismatch {
                    y: y.len(),
                    u: u.len(),
                });
            }
        }
        Ok(Self { y, u, meta })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn u(&self) -> Option<&[f64]> {
        self.u.as_deref()
    }

    fn slice(&self, range: std::ops::Range<usize>, description: String) -> Self {
        Self {
            y: self.y[range.clone()].to_vec(),
            u: self.u.as_ref().map(|u| u[range].to_vec()),
            meta: DatasetMeta::Derived { description },
        }
    }
}

const STREAM_INPUT: u64 = 0;
const STREAM_NOISE: u64 = 1;

fn stream(seed: u64, s: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

impl ExperimentSpec {
    /// Second-order system with a pseudo-random binary input and standard
    /// Gaussian noise.
    pub fn experiment1() -> Self {
        Self {
            name: "experiment1".into(),
            a: vec![-1.5, 0.7],
            b: vec![0.0, 1.0, 0.5],
            input: InputSignal::Prbs { switch_prob: 0.5 },
            noise: NoiseSpec::standard(),
            noise_scale: 1.0,
        }
    }

    /// Gaussian input and bimodal noise `0.4·N(7,1) + 0.6·N(0,1)`.
    pub fn experiment2() -> Self {
        Self {
            name: "experiment2".into(),
            a: vec![0.0, -0.25, 0.2],
            b: vec![0.0, 1.0, 0.5],
            input: InputSignal::Gaussian { mean: 0.0, sd: 1.0 },
            noise: NoiseSpec {
                weights: vec![0.4, 0.6],
                means: vec![7.0, 0.0],
                sds: vec![1.0, 1.0],
            },
            noise_scale: 1.0,
        }
    }

    pub fn without_noise(mut self) -> Self {
        self.noise_scale = 0.0;
        self
    }

    pub fn input(&self, t: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, STREAM_INPUT);
        match self.input {
            InputSignal::Prbs { switch_prob } => {
                let mut level = if rng.random::<bool>() { 1.0 } else { -1.0 };
                (0..t)
                    .map(|i| {
                        if i > 0 && rng.random::<f64>() < switch_prob {
                            level = -level;
                        }
                        level
                    })
                    .collect()
            }
            InputSignal::Gaussian { mean, sd } => (0..t)
                .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        }
    }

    /// The additive noise sequence used by [`simulate`](Self::simulate).
    pub fn noise(&self, t: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, STREAM_NOISE);
        (0..t)
            .map(|_| self.noise_scale * self.noise.sample(&mut rng))
            .collect()
    }

    pub fn simulate(&self, t: usize, seed: u64) -> Result<Dataset> {
        if t < 50 {
            return Err(Error::SeriesTooShort {
                len: t,
                required: 50,
            });
        }
        let u = self.input(t, seed);
        let e = self.noise(t, seed);
        let mut y = vec![0.0; t];
        for i in 0..t {
            let mut v = e[i];
            for (k, a) in self.a.iter().enumerate() {
                if i > k {
                    v -= a * y[i - k - 1];
                }
            }
            for (k, b) in self.b.iter().enumerate() {
                if i > k {
                    v += b * u[i - k - 1];
                }
            }
            y[i] = v;
        }
        Dataset::new(
            y,
            Some(u),
            DatasetMeta::Generated {
                spec: self.clone(),
                t,
                seed,
                rng: "ChaCha20Rng (rand_chacha 0.9): seed_from_u64(seed); stream 0 input, stream 1 noise"
                    .into(),
            },
        )
    }
}

pub fn generate_experiment1(t: usize, seed: u64) -> Result<Dataset> {
    ExperimentSpec::experiment1().simulate(t, seed)
}

pub fn generate_experiment2(t: usize, seed: u64) -> Result<Dataset> {
    ExperimentSpec::experiment2().simulate(t, seed)
}

/// Index at which a series of length `len` is split: `floor(fraction·len)`.
/// Both sides must keep at least `p + 1` points.
pub fn split_index(len: usize, fraction: f64, p: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction {fraction} must lie in (0, 1)"
        )));
    }
    let boundary = (fraction * len as f64 + 1e-9).floor() as usize;
    let min = p + 1;
    if boundary < min || len - boundary < min {
        return Err(Error::DegenerateSplit { boundary, len, min });
    }
    Ok(boundary)
}

/// Contiguous estimation/validation split. Validation predictions should use
/// the full series so that their lags reach back across the boundary.
pub fn split(ds: &Dataset, fraction: f64, p: usize) -> Result<(Dataset, Dataset)> {
    let n = ds.len();
    let b = split_index(n, fraction, p)?;
    Ok((
        ds.slice(0..b, format!("estimation part: rows 0..{b} of {n}")),
        ds.slice(b..n, format!("validation part: rows {b}..{n} of {n}")),
    ))
}

fn parse_cell(raw: &str, path: &Path, row: usize, column: &str) -> Result<f64> {
    let malformed = |message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        message,
    };
    let s = raw.trim();
    if s.is_empty() {
        return Err(malformed(format!("blank `{column}` cell")));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| malformed(format!("non-numeric `{column}` value {s:?}")))?;
    if !v.is_finite() {
        return Err(malformed(format!("non-finite `{column}` value {s:?}")));
    }
    Ok(v)
}

/// Reads a CSV with a header row, a required `y` column and an optional `u`
/// column. Other columns are ignored. Rows are numbered from 1, not counting
/// the header.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(File::open(path)?);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let iy = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: "y".into(),
        })?;
    let iu = headers.iter().position(|h| h == "u");

    let mut y = Vec::new();
    let mut u = iu.map(|_| Vec::new());
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        y.push(parse_cell(record.get(iy).unwrap_or(""), path, row, "y")?);
        if let (Some(iu), Some(u)) = (iu, u.as_mut()) {
            u.push(parse_cell(record.get(iu).unwrap_or(""), path, row, "u")?);
        }
    }
    if y.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Dataset::new(
        y,
        u,
        DatasetMeta::Csv {
            path: path.display().to_string(),
        },
    )
}

/// Writes `y[,u]` with shortest round-trip float formatting.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(ds.len() * 48);
    write_csv(ds, &mut out);
    std::fs::write(path, out)?;
    Ok(())
}

/// CSV text of a dataset, as written by [`save_csv`].
pub fn write_csv(ds: &Dataset, out: &mut String) {
    use std::fmt::Write;
    match &ds.u {
        Some(u) => {
            out.push_str("y,u\n");
            for (y, u) in ds.y.iter().zip(u) {
                let _ = writeln!(out, "{y:?},{u:?}");
            }
        }
        None => {
            out.push_str("y\n");
            for y in &ds.y {
                let _ = writeln!(out, "{y:?}");
            }
        }
    }
}
