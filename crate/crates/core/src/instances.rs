//! Problem-instance types, seeded generators and JSON I/O.
//!
//! Every instance file is a JSON object with a `"task"` discriminator. The
//! clustering schema is
//!
//! ```text
//! {"task":"clustering","n":…,"L":…,"k":…,"R":…,"kappa":…,
//!  "distances":[[[…]]],"target":[[…]]}
//! ```
//!
//! SSL instances carry `labeled` (`[[index,label],…]`), `unlabeled`, `distances`
//! and `eval_labels`; logistic-regression instances carry `X`, `y`, `X_val`, `y_val`.
//! Floats are written in shortest round-trip form, so `load(save(x)) == x` bit for bit.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linkage::Partition;
use crate::numerics::sigmoid;

/// Tolerance for simplex membership checks.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Exclusion zone around zero for scalar linkage exponents.
pub const ALPHA_GUARD: f64 = 1e-6;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of the `index`-th item of a stream rooted at `seed` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Symmetric `n x n` dissimilarity matrix with zero diagonal, stored row-major.
#[derive(Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistanceMatrix")
            .field("n", &self.n)
            .field("rows", &self.to_rows())
            .finish()
    }
}

impl DistanceMatrix {
    /// Builds a matrix from its strict upper triangle, mirrored.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = entry(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DistanceMatrix { n, data }
    }

    /// Validates symmetry, zero diagonal, and the `[0, cap]` range.
    pub fn from_rows(rows: &[Vec<f64>], cap: f64) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(
                    format!("row {i}"),
                    format!("has {} entries, expected {n}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        let m = DistanceMatrix { n, data };
        m.validate(cap)?;
        Ok(m)
    }

    pub fn validate(&self, cap: f64) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::invalid(
                    format!("entry ({i},{i})"),
                    "diagonal must be zero",
                ));
            }
            for j in (i + 1)..n {
                let v = self.get(i, j);
                if v != self.get(j, i) {
                    return Err(Error::invalid(
                        "matrix",
                        format!("symmetry violated at ({i},{j})"),
                    ));
                }
                if !(0.0..=cap).contains(&v) {
                    return Err(Error::invalid(
                        format!("entry ({i},{j})"),
                        format!("value {v} outside [0, {cap}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Strict upper-triangle entries in row order.
    pub fn upper_entries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        DistanceMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// A point on the probability simplex (entries nonnegative, summing to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Simplex(Vec<f64>);

impl Simplex {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("beta", "must have at least one weight"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= -SIMPLEX_TOL)) {
            return Err(Error::invalid("beta", format!("negative weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(
                "beta",
                format!("weights sum to {sum}, expected 1"),
            ));
        }
        Ok(Simplex(weights))
    }

    /// The `i`-th vertex of the `len`-simplex.
    pub fn vertex(len: usize, i: usize) -> Self {
        let mut w = vec![0.0; len];
        w[i] = 1.0;
        Simplex(w)
    }

    pub fn uniform(len: usize) -> Self {
        Simplex(vec![1.0 / len as f64; len])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lattice points with denominator `subdivisions`, in lexicographic order.
    pub fn lattice(len: usize, subdivisions: usize) -> Vec<Simplex> {
        fn rec(len: usize, left: usize, total: usize, cur: &mut Vec<usize>, out: &mut Vec<Simplex>) {
            if cur.len() == len - 1 {
                cur.push(left);
                out.push(Simplex(
                    cur.iter().map(|&c| c as f64 / total as f64).collect(),
                ));
                cur.pop();
                return;
            }
            for c in 0..=left {
                cur.push(c);
                rec(len, left - c, total, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(len, subdivisions, subdivisions, &mut Vec::new(), &mut out);
        out
    }
}

impl TryFrom<Vec<f64>> for Simplex {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Simplex::new(v)
    }
}

impl From<Simplex> for Vec<f64> {
    fn from(s: Simplex) -> Vec<f64> {
        s.0
    }
}

/// Entrywise convex combination `sum_i beta_i * distances[i]`.
pub fn combine_distance(beta: &Simplex, distances: &[DistanceMatrix]) -> Result<DistanceMatrix> {
    if beta.len() != distances.len() {
        return Err(Error::invalid(
            "beta",
            format!(
                "length {} does not match {} distance matrices",
                beta.len(),
                distances.len()
            ),
        ));
    }
    let n = distances[0].n();
    if let Some(bad) = distances.iter().position(|d| d.n() != n) {
        return Err(Error::invalid(
            format!("distances[{bad}]"),
            format!("dimension {} differs from {n}", distances[bad].n()),
        ));
    }
    let w = beta.weights();
    // Vertices reproduce the chosen matrix exactly.
    if let Some(i) = w.iter().position(|&x| x == 1.0) {
        return Ok(distances[i].clone());
    }
    Ok(DistanceMatrix::from_fn(n, |i, j| {
        w.iter()
            .zip(distances)
            .map(|(b, d)| b * d.get(i, j))
            .sum()
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringInstance {
    pub distances: Vec<DistanceMatrix>,
    pub target: Partition,
    pub k: usize,
    /// Upper cap on every distance entry.
    pub r: f64,
    /// Density bound of the entry distribution; `1/R` for the uniform generator.
    pub kappa: f64,
}

impl ClusteringInstance {
    pub fn new(distances: Vec<DistanceMatrix>, target: Partition, r: f64) -> Result<Self> {
        let inst = ClusteringInstance {
            k: target.num_blocks(),
            kappa: 1.0 / r,
            distances,
            target,
            r,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.distances.first().map_or(0, DistanceMatrix::n)
    }

    pub fn num_metrics(&self) -> usize {
        self.distances.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.distances.is_empty() {
            return Err(Error::invalid("distances", "need at least one metric"));
        }
        let n = self.n();
        for (l, d) in self.distances.iter().enumerate() {
            if d.n() != n {
                return Err(Error::invalid(
                    format!("distances[{l}]"),
                    format!("dimension {} differs from {n}", d.n()),
                ));
            }
            d.validate(self.r).map_err(|e| prefix(e, &format!("distances[{l}]")))?;
        }
        if self.target.n() != n {
            return Err(Error::invalid(
                "target",
                format!("covers {} points, expected {n}", self.target.n()),
            ));
        }
        if self.k != self.target.num_blocks() {
            return Err(Error::invalid("k", "does not match target block count"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SslInstance {
    /// `(index, label)` pairs with labels in `{0, 1}`.
    pub labeled: Vec<(usize, u8)>,
    pub unlabeled: Vec<usize>,
    pub distances: Vec<DistanceMatrix>,
    /// Ground truth for `unlabeled`, in the same order. Read only by the loss.
    pub eval_labels: Vec<u8>,
    pub r: f64,
}

impl SslInstance {
    pub fn n(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    pub fn num_metrics(&self) -> usize {
        self.distances.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.labeled.is_empty() {
            return Err(Error::invalid("labeled", "must be nonempty"));
        }
        let mut seen = vec![false; n];
        for &i in self
            .labeled
            .iter()
            .map(|(i, _)| i)
            .chain(self.unlabeled.iter())
        {
            if i >= n || seen[i] {
                return Err(Error::invalid(
                    "labeled/unlabeled",
                    format!("index {i} out of range or repeated; sets must partition 0..{n}"),
                ));
            }
            seen[i] = true;
        }
        if let Some((_, l)) = self.labeled.iter().find(|(_, l)| *l > 1) {
            return Err(Error::invalid("labeled", format!("label {l} not in {{0,1}}")));
        }
        if self.eval_labels.len() != self.unlabeled.len() || self.eval_labels.iter().any(|&l| l > 1) {
            return Err(Error::invalid(
                "eval_labels",
                "must hold one 0/1 label per unlabeled index",
            ));
        }
        if self.distances.is_empty() {
            return Err(Error::invalid("distances", "need at least one metric"));
        }
        for (l, d) in self.distances.iter().enumerate() {
            if d.n() != n {
                return Err(Error::invalid(
                    format!("distances[{l}]"),
                    format!("dimension {} differs from {n}", d.n()),
                ));
            }
            d.validate(self.r).map_err(|e| prefix(e, &format!("distances[{l}]")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegInstance {
    pub x: DMatrix<f64>,
    /// Training labels in `{-1, +1}`.
    pub y: Vec<f64>,
    pub x_val: DMatrix<f64>,
    pub y_val: Vec<f64>,
}

impl LogRegInstance {
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.nrows() == 0 || self.x_val.nrows() == 0 {
            return Err(Error::invalid("X", "training and validation sets need m, m' >= 1"));
        }
        if self.x.ncols() != self.x_val.ncols() {
            return Err(Error::invalid(
                "X_val",
                format!("{} columns, X has {}", self.x_val.ncols(), self.x.ncols()),
            ));
        }
        if self.y.len() != self.x.nrows() {
            return Err(Error::invalid("y", "length differs from rows of X"));
        }
        if self.y_val.len() != self.x_val.nrows() {
            return Err(Error::invalid("y_val", "length differs from rows of X_val"));
        }
        for (name, ys) in [("y", &self.y), ("y_val", &self.y_val)] {
            if ys.iter().any(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::invalid(name, "labels must be +1 or -1"));
            }
        }
        Ok(())
    }
}

/// Which clustering generator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ClusteringGenerator {
    /// Off-diagonal entries i.i.d. Uniform[0, R]; random target.
    UniformSmooth,
    /// k Gaussian blobs in R^L with per-coordinate absolute-difference metrics.
    PlantedBlobs,
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Partition {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let mut blocks = vec![Vec::new(); k];
    for (pos, &i) in ids.iter().enumerate() {
        let b = if pos < k { pos } else { rng.random_range(0..k) };
        blocks[b].push(i);
    }
    Partition::new(blocks, n).expect("every block receives a point")
}

/// Per-coordinate absolute differences, rescaled so each metric's maximum is `cap`.
fn coordinate_metrics(points: &[Vec<f64>], dims: usize, cap: f64) -> Vec<DistanceMatrix> {
    let n = points.len();
    (0..dims)
        .map(|l| {
            let raw = DistanceMatrix::from_fn(n, |i, j| (points[i][l] - points[j][l]).abs());
            let max = raw.upper_entries().into_iter().fold(0.0, f64::max);
            if max > 0.0 {
                DistanceMatrix::from_fn(n, |i, j| (raw.get(i, j) / max * cap).min(cap))
            } else {
                raw
            }
        })
        .collect()
}

pub fn gen_clustering(
    seed: u64,
    n: usize,
    num_metrics: usize,
    k: usize,
    r: f64,
    generator: ClusteringGenerator,
) -> Result<ClusteringInstance> {
    if n < 2 {
        return Err(Error::invalid("n", "need at least 2 points"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("must satisfy 1 <= k <= n = {n}, got {k}")));
    }
    if num_metrics == 0 {
        return Err(Error::invalid("L", "need at least one metric"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("R", "must be positive and finite"));
    }
    let mut rng = rng_from_seed(seed);
    match generator {
        ClusteringGenerator::UniformSmooth => {
            let distances = (0..num_metrics)
                .map(|_| DistanceMatrix::from_fn(n, |_, _| rng.random::<f64>() * r))
                .collect();
            let target = random_partition(&mut rng, n, k);
            ClusteringInstance::new(distances, target, r)
        }
        ClusteringGenerator::PlantedBlobs => {
            let noise = Normal::new(0.0, 1.0).expect("unit normal");
            let perms: Vec<Vec<usize>> = (0..num_metrics)
                .map(|_| {
                    let mut p: Vec<usize> = (0..k).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            let target = random_partition(&mut rng, n, k);
            let mut label = vec![0usize; n];
            for (b, block) in target.blocks().iter().enumerate() {
                for &i in block {
                    label[i] = b;
                }
            }
            let points: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..num_metrics)
                        .map(|l| 8.0 * perms[l][label[i]] as f64 + noise.sample(&mut rng))
                        .collect()
                })
                .collect();
            ClusteringInstance::new(coordinate_metrics(&points, num_metrics, r), target, r)
        }
    }
}

/// Two Gaussian classes in R^L; a random subset of `n_labeled` points keeps its label.
pub fn gen_ssl(
    seed: u64,
    n_labeled: usize,
    n_unlabeled: usize,
    num_metrics: usize,
    r: f64,
) -> Result<SslInstance> {
    if n_labeled == 0 {
        return Err(Error::invalid("n_labeled", "need at least one labeled point"));
    }
    if num_metrics == 0 {
        return Err(Error::invalid("L", "need at least one metric"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("R", "must be positive and finite"));
    }
    let n = n_labeled + n_unlabeled;
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let points: Vec<Vec<f64>> = labels
        .iter()
        .map(|&c| {
            (0..num_metrics)
                .map(|_| 3.0 * c as f64 + noise.sample(&mut rng))
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labeled: Vec<(usize, u8)> = order[..n_labeled].iter().map(|&i| (i, labels[i])).collect();
    labeled.sort_unstable();
    let mut unlabeled: Vec<usize> = order[n_labeled..].to_vec();
    unlabeled.sort_unstable();
    let eval_labels = unlabeled.iter().map(|&i| labels[i]).collect();
    let inst = SslInstance {
        labeled,
        unlabeled,
        distances: coordinate_metrics(&points, num_metrics, r),
        eval_labels,
        r,
    };
    inst.validate()?;
    Ok(inst)
}

/// Gaussian design, ground-truth weights of norm `signal`, labels through the logistic link.
pub fn gen_logreg(seed: u64, m: usize, p: usize, m_val: usize, signal: f64) -> Result<LogRegInstance> {
    if m == 0 || m_val == 0 || p == 0 {
        return Err(Error::invalid("m/p", "m, m' and p must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut w: Vec<f64> = (0..p).map(|_| normal.sample(&mut rng)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    w.iter_mut().for_each(|v| *v *= signal / norm);
    let mut draw = |rows: usize| {
        let x = DMatrix::from_fn(rows, p, |_, _| normal.sample(&mut rng));
        let y = (0..rows)
            .map(|i| {
                let margin: f64 = (0..p).map(|j| x[(i, j)] * w[j]).sum();
                if rng.random::<f64>() < sigmoid(margin) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect::<Vec<f64>>();
        (x, y)
    };
    let (x, y) = draw(m);
    let (x_val, y_val) = draw(m_val);
    Ok(LogRegInstance { x, y, x_val, y_val })
}

fn default_r() -> f64 {
    1.0
}

fn default_signal() -> f64 {
    1.0
}

fn default_generator() -> ClusteringGenerator {
    ClusteringGenerator::UniformSmooth
}

/// Distribution over instances; item `i` of a seeded sample uses `derive_seed(seed, i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Clustering {
        n: usize,
        #[serde(rename = "L")]
        l: usize,
        k: usize,
        #[serde(rename = "R", default = "default_r")]
        r: f64,
        #[serde(default = "default_generator")]
        generator: ClusteringGenerator,
    },
    Ssl {
        n_labeled: usize,
        n_unlabeled: usize,
        #[serde(rename = "L")]
        l: usize,
        #[serde(rename = "R", default = "default_r")]
        r: f64,
    },
    Logreg {
        m: usize,
        p: usize,
        m_val: usize,
        #[serde(default = "default_signal")]
        signal: f64,
    },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<Instance> {
        Ok(match *self {
            GeneratorSpec::Clustering { n, l, k, r, generator } => {
                Instance::Clustering(gen_clustering(seed, n, l, k, r, generator)?)
            }
            GeneratorSpec::Ssl { n_labeled, n_unlabeled, l, r } => {
                Instance::Ssl(gen_ssl(seed, n_labeled, n_unlabeled, l, r)?)
            }
            GeneratorSpec::Logreg { m, p, m_val, signal } => {
                Instance::LogReg(gen_logreg(seed, m, p, m_val, signal)?)
            }
        })
    }

    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Instance>> {
        (0..count as u64).map(|i| self.generate(derive_seed(seed, i))).collect()
    }
}

/// Any instance kind, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Clustering(ClusteringInstance),
    Ssl(SslInstance),
    LogReg(LogRegInstance),
}

impl Instance {
    pub fn task_name(&self) -> &'static str {
        match self {
            Instance::Clustering(_) => "clustering",
            Instance::Ssl(_) => "ssl",
            Instance::LogReg(_) => "logreg",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Instance::Clustering(c) => json!({
                "task": "clustering",
                "n": c.n(),
                "L": c.num_metrics(),
                "k": c.k,
                "R": c.r,
                "kappa": c.kappa,
                "distances": c.distances.iter().map(DistanceMatrix::to_rows).collect::<Vec<_>>(),
                "target": c.target.blocks(),
            }),
            Instance::Ssl(s) => json!({
                "task": "ssl",
                "n": s.n(),
                "L": s.num_metrics(),
                "R": s.r,
                "labeled": s.labeled.iter().map(|&(i, l)| json!([i, l])).collect::<Vec<_>>(),
                "unlabeled": s.unlabeled,
                "eval_labels": s.eval_labels,
                "distances": s.distances.iter().map(DistanceMatrix::to_rows).collect::<Vec<_>>(),
            }),
            Instance::LogReg(l) => json!({
                "task": "logreg",
                "m": l.x.nrows(),
                "p": l.p(),
                "m_val": l.x_val.nrows(),
                "X": matrix_rows(&l.x),
                "y": l.y,
                "X_val": matrix_rows(&l.x_val),
                "y_val": l.y_val,
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::parse("<root>", "expected a JSON object"))?;
        let task = field(obj, "task")?
            .as_str()
            .ok_or_else(|| Error::parse("task", "expected a string"))?;
        match task {
            "clustering" => {
                let r = get_f64(obj, "R")?;
                let distances = get_matrices(obj, "distances", r)?;
                let target_rows: Vec<Vec<usize>> = get_typed(obj, "target")?;
                let n = distances[0].n();
                if let Some(declared) = obj.get("n") {
                    if declared.as_u64() != Some(n as u64) {
                        return Err(Error::parse("n", format!("declared {declared}, matrices are {n}x{n}")));
                    }
                }
                if let Some(declared) = obj.get("L") {
                    if declared.as_u64() != Some(distances.len() as u64) {
                        return Err(Error::parse(
                            "L",
                            format!("declared {declared}, found {} matrices", distances.len()),
                        ));
                    }
                }
                let target = Partition::new(target_rows, n).map_err(|e| as_parse(e, "target"))?;
                let mut inst = ClusteringInstance::new(distances, target, r).map_err(|e| as_parse(e, "instance"))?;
                if let Some(kappa) = obj.get("kappa") {
                    inst.kappa = kappa
                        .as_f64()
                        .ok_or_else(|| Error::parse("kappa", "expected a number"))?;
                }
                if let Some(k) = obj.get("k") {
                    if k.as_u64() != Some(inst.k as u64) {
                        return Err(Error::parse("k", format!("declared {k}, target has {} blocks", inst.k)));
                    }
                }
                Ok(Instance::Clustering(inst))
            }
            "ssl" => {
                let r = get_f64(obj, "R")?;
                let labeled_raw: Vec<(usize, u8)> = get_typed(obj, "labeled")?;
                let inst = SslInstance {
                    labeled: labeled_raw,
                    unlabeled: get_typed(obj, "unlabeled")?,
                    eval_labels: get_typed(obj, "eval_labels")?,
                    distances: get_matrices(obj, "distances", r)?,
                    r,
                };
                inst.validate().map_err(|e| as_parse(e, "instance"))?;
                Ok(Instance::Ssl(inst))
            }
            "logreg" => {
                let x = get_matrix(obj, "X")?;
                let x_val = get_matrix(obj, "X_val")?;
                let inst = LogRegInstance {
                    x,
                    y: get_typed(obj, "y")?,
                    x_val,
                    y_val: get_typed(obj, "y_val")?,
                };
                inst.validate().map_err(|e| as_parse(e, "instance"))?;
                Ok(Instance::LogReg(inst))
            }
            other => Err(Error::parse("task", format!("unknown task {other:?}"))),
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn prefix(e: Error, at: &str) -> Error {
    match e {
        Error::InvalidInput { field, reason } => Error::InvalidInput {
            field: format!("{at} {field}"),
            reason,
        },
        other => other,
    }
}

fn as_parse(e: Error, at: &str) -> Error {
    match e {
        Error::InvalidInput { field, reason } => Error::Parse {
            field: format!("{at}: {field}"),
            message: reason,
        },
        other => other,
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::parse(name, "missing required field"))
}

fn get_f64(obj: &Map<String, Value>, name: &str) -> Result<f64> {
    field(obj, name)?
        .as_f64()
        .ok_or_else(|| Error::parse(name, "expected a number"))
}

fn get_typed<T: serde::de::DeserializeOwned>(obj: &Map<String, Value>, name: &str) -> Result<T> {
    serde_json::from_value(field(obj, name)?.clone()).map_err(|e| Error::parse(name, e.to_string()))
}

fn get_matrices(obj: &Map<String, Value>, name: &str, cap: f64) -> Result<Vec<DistanceMatrix>> {
    let raw: Vec<Vec<Vec<f64>>> = get_typed(obj, name)?;
    if raw.is_empty() {
        return Err(Error::parse(name, "need at least one matrix"));
    }
    raw.iter()
        .enumerate()
        .map(|(l, rows)| {
            DistanceMatrix::from_rows(rows, cap).map_err(|e| match e {
                Error::InvalidInput { field, reason } => Error::Parse {
                    field: format!("{name}[{l}] {field}"),
                    message: reason,
                },
                other => other,
            })
        })
        .collect()
}

fn get_matrix(obj: &Map<String, Value>, name: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = get_typed(obj, name)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::parse(name, format!("row {i} has inconsistent length")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn save_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    let text = serde_json::to_string(&inst.to_json())?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::parse("<file>", e.to_string()))?;
    Instance::from_json(&v)
}
