//! Labelled feature sets with optional hidden ground truth, a seeded
//! synthetic generator for noisy web-like data, the rank-ordered noise
//! windows, and stratified splitting.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, stream};

/// What a training algorithm is allowed to see: features and noisy label.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub x: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoiseKind {
    Clean,
    /// Drawn from another category's cluster but carrying this label.
    Flip,
    /// Drawn from none of the categories.
    Outlier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HiddenTruth {
    pub kind: NoiseKind,
    /// The category the features were drawn from; `None` for outliers.
    pub true_label: Option<usize>,
}

impl HiddenTruth {
    /// `h = 1`: the noisy label is correct. Flipped instances count as noise.
    pub fn is_inlier(&self) -> bool {
        self.kind == NoiseKind::Clean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature {
    pub id: usize,
    pub x: Vec<f64>,
    /// Noisy label.
    pub label: usize,
    pub truth: Option<HiddenTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub classes: usize,
    pub items: Vec<LabeledFeature>,
}

impl Dataset {
    pub fn new(dim: usize, classes: usize, items: Vec<LabeledFeature>) -> Result<Self> {
        for item in &items {
            if item.x.len() != dim {
                return Err(Error::shape("dataset features", dim, item.x.len()));
            }
            if item.label >= classes {
                return Err(Error::Domain(format!(
                    "instance {} has label {} >= {classes}",
                    item.id, item.label
                )));
            }
            if let Some(HiddenTruth {
                true_label: Some(t),
                ..
            }) = item.truth
            {
                if t >= classes {
                    return Err(Error::Domain(format!("instance {} has true label {t}", item.id)));
                }
            }
        }
        Ok(Dataset {
            dim,
            classes,
            items,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Features and noisy labels only; hidden truth never crosses this boundary.
    pub fn training_view(&self) -> Vec<TrainingExample> {
        self.items
            .iter()
            .map(|it| TrainingExample {
                x: it.x.clone(),
                label: it.label,
            })
            .collect()
    }

    pub fn inputs(&self) -> Vec<&[f64]> {
        self.items.iter().map(|it| it.x.as_slice()).collect()
    }

    pub fn has_truth(&self) -> bool {
        self.items.iter().all(|it| it.truth.is_some())
    }

    /// `h` flags; fails when any instance lacks hidden truth.
    pub fn inlier_flags(&self) -> Result<Vec<bool>> {
        self.items
            .iter()
            .map(|it| {
                it.truth
                    .map(|t| t.is_inlier())
                    .ok_or_else(|| Error::State("hidden truth unavailable".into()))
            })
            .collect()
    }

    pub fn true_labels(&self) -> Vec<Option<usize>> {
        self.items
            .iter()
            .map(|it| it.truth.and_then(|t| t.true_label))
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            dim: self.dim,
            classes: self.classes,
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    /// Instances whose true category is known, with that category.
    pub fn with_known_truth(&self) -> (Vec<&[f64]>, Vec<usize>) {
        self.items
            .iter()
            .filter_map(|it| {
                it.truth
                    .and_then(|t| t.true_label)
                    .map(|t| (it.x.as_slice(), t))
            })
            .unzip()
    }

    pub fn count_kind(&self, kind: NoiseKind) -> usize {
        self.items
            .iter()
            .filter(|it| it.truth.map(|t| t.kind) == Some(kind))
            .count()
    }
}

/// Parameters of the synthetic noisy-data generator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dim: usize,
    /// Instances carrying each noisy label.
    pub per_class: usize,
    pub means: Vec<Vec<f64>>,
    /// Per-coordinate standard deviation of each category cluster.
    pub scales: Vec<f64>,
    pub outlier_ratio: f64,
    pub flip_ratio: f64,
    /// Minimum outlier distance from every mean, in cluster radii
    /// (`scale · √d`).
    pub outlier_margin: f64,
    /// Padding of the outlier box around the means, in the largest cluster radius.
    pub box_padding: f64,
    pub proposals_per_instance: usize,
    pub proposal_jitter: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub const DESK_CLASSES: usize = 5;
    pub const DESK_DIM: usize = 16;
    pub const DESK_PER_CLASS: usize = 200;
    pub const DESK_SEPARATION: f64 = 2.0;
    pub const DESK_SCALE: f64 = 0.3;
    pub const DESK_GEOMETRY_SEED: u64 = 0x5EED;

    /// Categories placed on random orthonormal directions so that every pair
    /// of means is exactly `separation` apart.
    pub fn planted(
        classes: usize,
        dim: usize,
        per_class: usize,
        separation: f64,
        scale: f64,
        geometry_seed: u64,
    ) -> Result<Self> {
        if classes == 0 || classes > dim {
            return Err(Error::config("classes", format!("need 1 <= classes <= dim, got {classes}")));
        }
        let mut rng = rng::seeded(geometry_seed, stream::GEOMETRY);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(classes);
        while basis.len() < classes {
            let mut v = rng::normal_vec(&mut rng, dim);
            for b in &basis {
                let proj = math::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= proj * bi);
            }
            let n = math::norm(&v);
            if n > 1e-6 {
                basis.push(v.into_iter().map(|vi| vi / n).collect());
            }
        }
        let radius = separation / math::sqrt(2.0);
        let means = basis
            .into_iter()
            .map(|b| b.into_iter().map(|v| v * radius).collect())
            .collect();
        Ok(SyntheticSpec {
            classes,
            dim,
            per_class,
            means,
            scales: vec![scale; classes],
            outlier_ratio: 0.3,
            flip_ratio: 0.05,
            outlier_margin: 2.0,
            box_padding: 2.5,
            proposals_per_instance: 3,
            proposal_jitter: 0.25 * scale,
            seed: 0,
        })
    }

    /// C = 5, d = 16, 200 per class, 30% outliers, 5% label flips.
    pub fn desk_default() -> Self {
        Self::planted(
            Self::DESK_CLASSES,
            Self::DESK_DIM,
            Self::DESK_PER_CLASS,
            Self::DESK_SEPARATION,
            Self::DESK_SCALE,
            Self::DESK_GEOMETRY_SEED,
        )
        .expect("desk default geometry is valid")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same clusters with no label noise.
    pub fn clean(mut self) -> Self {
        self.outlier_ratio = 0.0;
        self.flip_ratio = 0.0;
        self
    }

    pub fn cluster_radius(&self, class: usize) -> f64 {
        self.scales[class] * math::sqrt(self.dim as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.dim == 0 || self.per_class == 0 {
            return Err(Error::config("classes", "classes, dim and per_class must be >= 1"));
        }
        if self.means.len() != self.classes || self.means.iter().any(|m| m.len() != self.dim) {
            return Err(Error::config("means", "need one mean of length dim per class"));
        }
        if self.scales.len() != self.classes || self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::config("scales", "need one positive scale per class"));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return Err(Error::config("outlier_ratio", format!("{} not in [0, 1)", self.outlier_ratio)));
        }
        if !(0.0..1.0).contains(&self.flip_ratio) {
            return Err(Error::config("flip_ratio", format!("{} not in [0, 1)", self.flip_ratio)));
        }
        if self.outlier_ratio + self.flip_ratio >= 1.0 {
            return Err(Error::config("outlier_ratio", "outlier_ratio + flip_ratio must be < 1"));
        }
        if self.flip_ratio > 0.0 && self.classes < 2 {
            return Err(Error::config("flip_ratio", "label flips need at least two classes"));
        }
        if !(self.outlier_margin >= 0.0) || !(self.box_padding > 0.0) {
            return Err(Error::config("outlier_margin", "margin must be >= 0 and padding > 0"));
        }
        if !(self.proposal_jitter >= 0.0) {
            return Err(Error::config("proposal_jitter", "must be >= 0"));
        }
        Ok(())
    }

    /// `(clean, flip, outlier)` counts for each category.
    pub fn quotas(&self) -> (usize, usize, usize) {
        let n = self.per_class as f64;
        let outliers = math::round(self.outlier_ratio * n) as usize;
        let flips = (math::round(self.flip_ratio * n) as usize).min(self.per_class - outliers);
        (self.per_class - outliers - flips, flips, outliers)
    }
}

const MAX_REJECTIONS: usize = 100_000;

fn cluster_draw<R: Rng + ?Sized>(spec: &SyntheticSpec, class: usize, rng: &mut R) -> Vec<f64> {
    spec.means[class]
        .iter()
        .map(|m| m + spec.scales[class] * rng::standard_normal(rng))
        .collect()
}

fn outlier_draw<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<Vec<f64>> {
    let pad = spec.box_padding
        * (0..spec.classes)
            .map(|c| spec.cluster_radius(c))
            .fold(0.0, f64::max);
    let bounds: Vec<(f64, f64)> = (0..spec.dim)
        .map(|j| {
            let (lo, hi) = spec
                .means
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m[j]), hi.max(m[j])));
            (lo - pad, hi + pad)
        })
        .collect();
    for _ in 0..MAX_REJECTIONS {
        let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let far = (0..spec.classes).all(|c| {
            math::sqrt(math::squared_distance(&x, &spec.means[c]))
                >= spec.outlier_margin * spec.cluster_radius(c)
        });
        if far {
            return Ok(x);
        }
    }
    Err(Error::Generation(format!(
        "no outlier found outside the clusters after {MAX_REJECTIONS} draws"
    )))
}

/// Draws a dataset with exact per-category noise quotas, shuffled, with ids
/// equal to final positions.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed, stream::DATA);
    let (clean, flips, outliers) = spec.quotas();
    let mut items = Vec::with_capacity(spec.classes * spec.per_class);
    for c in 0..spec.classes {
        for _ in 0..clean {
            items.push((cluster_draw(spec, c, &mut rng), c, NoiseKind::Clean, Some(c)));
        }
        for _ in 0..flips {
            let mut source = rng.random_range(0..spec.classes - 1);
            if source >= c {
                source += 1;
            }
            items.push((cluster_draw(spec, source, &mut rng), c, NoiseKind::Flip, Some(source)));
        }
        for _ in 0..outliers {
            items.push((outlier_draw(spec, &mut rng)?, c, NoiseKind::Outlier, None));
        }
    }
    items.shuffle(&mut rng);
    let items = items
        .into_iter()
        .enumerate()
        .map(|(id, (x, label, kind, true_label))| LabeledFeature {
            id,
            x,
            label,
            truth: Some(HiddenTruth { kind, true_label }),
        })
        .collect();
    Dataset::new(spec.dim, spec.classes, items)
}

/// Orders each category's pool like a search-engine ranking (clean, then
/// flips, then outliers, shuffled within tiers) and keeps positions
/// `start ..= start + window − 1` (1-based) of every category.
pub fn rank_order_noise(dataset: &Dataset, start: usize, window: usize, seed: u64) -> Result<Dataset> {
    if start == 0 || window == 0 {
        return Err(Error::Domain("start index is 1-based and window must be >= 1".into()));
    }
    let mut rng = rng::seeded(seed, stream::RANK);
    let mut selected = Vec::new();
    for c in 0..dataset.classes {
        let mut tiers: BTreeMap<NoiseKind, Vec<usize>> = BTreeMap::new();
        for (i, it) in dataset.items.iter().enumerate().filter(|(_, it)| it.label == c) {
            let truth = it
                .truth
                .ok_or_else(|| Error::State("rank ordering needs hidden truth".into()))?;
            tiers.entry(truth.kind).or_default().push(i);
        }
        let mut pool = Vec::new();
        for (_, mut tier) in tiers {
            tier.shuffle(&mut rng);
            pool.extend(tier);
        }
        let end = start - 1 + window;
        if end > pool.len() {
            return Err(Error::Domain(format!(
                "window {start}..{end} exceeds the {} instances of class {c}",
                pool.len()
            )));
        }
        selected.extend_from_slice(&pool[start - 1..end]);
    }
    Ok(dataset.subset(&selected))
}

/// Stratified split by true category when known, else by noisy label.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Domain(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let mut strata: BTreeMap<(bool, usize), Vec<usize>> = BTreeMap::new();
    for (i, it) in dataset.items.iter().enumerate() {
        let key = match it.truth.and_then(|t| t.true_label) {
            Some(t) => (true, t),
            None => (false, it.label),
        };
        strata.entry(key).or_default().push(i);
    }
    let mut rng = rng::seeded(seed, stream::SPLIT);
    let mut is_test = vec![false; dataset.len()];
    for ((_, class), mut members) in strata {
        if members.len() < 2 {
            return Err(Error::Domain(format!("class {class} has fewer than 2 instances")));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let n_test = (math::round(test_fraction * n as f64) as usize).clamp(1, n - 1);
        for &i in &members[..n_test] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| is_test[i]);
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Stand-in region proposals: `count` jittered copies of every feature,
/// grouped by noisy label.
pub fn region_proposals(
    data: &[TrainingExample],
    classes: usize,
    count: usize,
    jitter: f64,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if count == 0 {
        return Err(Error::config("proposals_per_instance", "must be >= 1"));
    }
    let mut rng = rng::seeded(seed, stream::PROPOSALS);
    let mut groups = vec![Vec::new(); classes];
    for ex in data {
        let group = groups
            .get_mut(ex.label)
            .ok_or_else(|| Error::Domain(format!("label {} >= {classes}", ex.label)))?;
        for _ in 0..count {
            group.push(
                ex.x.iter()
                    .map(|v| v + jitter * rng::standard_normal(&mut rng))
                    .collect(),
            );
        }
    }
    Ok(groups)
}
