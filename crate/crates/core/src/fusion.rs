//! Feature sampling and RGB/depth feature fusion.
//!
//! The monocular branch produces an `H × W × C₁` feature map; the depth
//! branch produces `N × C₂` per-point features. Projecting the `N` points into
//! the feature grid and bilinearly sampling the map yields `N × C₁` features
//! aligned with the depth ones, which the fusion operators then combine.
//!
//! Weights for the learned operators are supplied by the caller.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, PointCloud};

pub mod tensor_file;

pub use tensor_file::{Tensor, TensorFile};

/// Row-major `height × width × channels` feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::invalid("feature map dimensions must be at least 1"));
        }
        if values.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "feature map has {} values for {height}x{width}x{channels}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("feature values must be finite"));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    /// Builds a map from a function of `(row, col, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width * channels);
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    values.push(f(v, u, c));
                }
            }
        }
        Self::new(height, width, channels, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Feature vector at grid row `v`, column `u`.
    pub fn at(&self, v: usize, u: usize) -> &[f64] {
        let start = (v * self.width + u) * self.channels;
        &self.values[start..start + self.channels]
    }
}

/// `N × C` per-point features, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatureSet(DMatrix<f64>);

impl PointFeatureSet {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::invalid("point feature set must be at least 1x1"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("point features must be finite"));
        }
        Ok(Self(values))
    }

    pub fn count(&self) -> usize {
        self.0.nrows()
    }

    pub fn channels(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Feature-grid coordinates `(u, v)` of each point, in point order.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelCoords(pub Vec<[f64; 2]>);

/// Projects every point with the identity pose and rescales to the feature
/// grid (`grid_scale` feature cells per image pixel, e.g. 1/8 for stride 8).
pub fn project_cloud_to_pixels(
    cloud: &PointCloud,
    k: &CameraIntrinsics,
    grid_scale: f64,
) -> Result<PixelCoords> {
    if !(grid_scale > 0.0 && grid_scale.is_finite()) {
        return Err(Error::invalid(format!(
            "grid scale must be positive, got {grid_scale}"
        )));
    }
    cloud
        .points
        .iter()
        .map(|p| {
            let (u, v) = k.project(p)?;
            Ok([u * grid_scale, v * grid_scale])
        })
        .collect::<Result<Vec<_>>>()
        .map(PixelCoords)
}

/// Bilinear lookup of the feature map at each coordinate, clamping to the
/// grid's edge outside `[0, W−1] × [0, H−1]`.
pub fn sample_image_features(fmap: &FeatureMap, coords: &PixelCoords) -> Result<PointFeatureSet> {
    if coords.0.is_empty() {
        return Err(Error::invalid("no sample coordinates"));
    }
    let c = fmap.channels;
    let mut out = DMatrix::zeros(coords.0.len(), c);
    for (i, &[u, v]) in coords.0.iter().enumerate() {
        if !(u.is_finite() && v.is_finite()) {
            return Err(Error::invalid(format!("coordinate {i} is not finite")));
        }
        let u = u.clamp(0.0, (fmap.width - 1) as f64);
        let v = v.clamp(0.0, (fmap.height - 1) as f64);
        let (u0, v0) = (u.floor() as usize, v.floor() as usize);
        let (u1, v1) = ((u0 + 1).min(fmap.width - 1), (v0 + 1).min(fmap.height - 1));
        let (fu, fv) = (u - u0 as f64, v - v0 as f64);
        let weights = [
            (1.0 - fu) * (1.0 - fv),
            fu * (1.0 - fv),
            (1.0 - fu) * fv,
            fu * fv,
        ];
        let cells = [
            fmap.at(v0, u0),
            fmap.at(v0, u1),
            fmap.at(v1, u0),
            fmap.at(v1, u1),
        ];
        for ch in 0..c {
            let mut acc = 0.0;
            for (w, cell) in weights.iter().zip(&cells) {
                acc += w * cell[ch];
            }
            out[(i, ch)] = acc;
        }
    }
    PointFeatureSet::new(out)
}

/// Which fusion operator to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionStrategy {
    Concat,
    MlpSkip,
    AttnSkip,
}

impl std::str::FromStr for FusionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(Self::Concat),
            "mlp_skip" => Ok(Self::MlpSkip),
            "attn_skip" => Ok(Self::AttnSkip),
            other => Err(Error::invalid(format!("unknown fusion strategy `{other}`"))),
        }
    }
}

/// One hidden layer of width `C₂` with ReLU, added back onto the depth
/// features.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    /// `(C₁ + C₂) × C₂`
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    /// `C₂ × C₂`
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

/// Single-head cross-attention, depth features as queries, monocular
/// features as keys and values.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnWeights {
    /// `C₂ × D`
    pub wq: DMatrix<f64>,
    /// `C₁ × D`
    pub wk: DMatrix<f64>,
    /// `C₁ × C₂`
    pub wv: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FusionConfig {
    Concat,
    MlpSkip(MlpWeights),
    AttnSkip(AttnWeights),
}

impl FusionConfig {
    pub fn strategy(&self) -> FusionStrategy {
        match self {
            FusionConfig::Concat => FusionStrategy::Concat,
            FusionConfig::MlpSkip(_) => FusionStrategy::MlpSkip,
            FusionConfig::AttnSkip(_) => FusionStrategy::AttnSkip,
        }
    }

    /// Picks the strategy's weights out of a tensor container by name
    /// (`w1, b1, w2, b2` or `wq, wk, wv`).
    pub fn from_tensors(strategy: FusionStrategy, file: &TensorFile) -> Result<Self> {
        Ok(match strategy {
            FusionStrategy::Concat => FusionConfig::Concat,
            FusionStrategy::MlpSkip => FusionConfig::MlpSkip(MlpWeights {
                w1: file.matrix("w1")?,
                b1: file.vector("b1")?,
                w2: file.matrix("w2")?,
                b2: file.vector("b2")?,
            }),
            FusionStrategy::AttnSkip => FusionConfig::AttnSkip(AttnWeights {
                wq: file.matrix("wq")?,
                wk: file.matrix("wk")?,
                wv: file.matrix("wv")?,
            }),
        })
    }

    /// Checks weight shapes against the channel counts of both inputs.
    pub fn validate(&self, c1: usize, c2: usize) -> Result<()> {
        let expect = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )))
            }
        };
        match self {
            FusionConfig::Concat => Ok(()),
            FusionConfig::MlpSkip(w) => {
                expect("w1", w.w1.shape(), (c1 + c2, c2))?;
                expect("b1", w.b1.shape(), (c2, 1))?;
                expect("w2", w.w2.shape(), (c2, c2))?;
                expect("b2", w.b2.shape(), (c2, 1))
            }
            FusionConfig::AttnSkip(w) => {
                let d = w.wq.ncols();
                if d == 0 {
                    return Err(Error::invalid("attention width must be at least 1"));
                }
                expect("wq", w.wq.shape(), (c2, d))?;
                expect("wk", w.wk.shape(), (c1, d))?;
                expect("wv", w.wv.shape(), (c1, c2))
            }
        }
    }
}

/// Combines per-point monocular (`N × C₁`) and depth (`N × C₂`) features.
///
/// - `Concat`: `N × (C₁ + C₂)`, monocular columns first.
/// - `MlpSkip`: `depth + relu([mono | depth]·W₁ + b₁)·W₂ + b₂`.
/// - `AttnSkip`: `depth + softmax((depth·Wq)(mono·Wk)ᵀ / √D)·(mono·Wv)`, the
///   softmax taken per row over the `N` key points.
pub fn fuse(
    mono: &PointFeatureSet,
    depth: &PointFeatureSet,
    cfg: &FusionConfig,
) -> Result<PointFeatureSet> {
    if mono.count() != depth.count() {
        return Err(Error::invalid(format!(
            "monocular features have {} points, depth features {}",
            mono.count(),
            depth.count()
        )));
    }
    cfg.validate(mono.channels(), depth.channels())?;
    let out = match cfg {
        FusionConfig::Concat => concat(mono.matrix(), depth.matrix()),
        FusionConfig::MlpSkip(w) => {
            let x = concat(mono.matrix(), depth.matrix());
            let hidden = add_row(&x * &w.w1, &w.b1).map(|v| v.max(0.0));
            depth.matrix() + add_row(hidden * &w.w2, &w.b2)
        }
        FusionConfig::AttnSkip(w) => {
            let attn = attention_matrix(mono.matrix(), depth.matrix(), w);
            depth.matrix() + attn * (mono.matrix() * &w.wv)
        }
    };
    PointFeatureSet::new(out)
}

/// Row-stochastic `N × N` attention weights used by the `AttnSkip` operator.
pub fn attention_weights(
    mono: &PointFeatureSet,
    depth: &PointFeatureSet,
    w: &AttnWeights,
) -> Result<DMatrix<f64>> {
    if mono.count() != depth.count() {
        return Err(Error::invalid("point counts differ"));
    }
    FusionConfig::AttnSkip(w.clone()).validate(mono.channels(), depth.channels())?;
    Ok(attention_matrix(mono.matrix(), depth.matrix(), w))
}

fn attention_matrix(mono: &DMatrix<f64>, depth: &DMatrix<f64>, w: &AttnWeights) -> DMatrix<f64> {
    let q = depth * &w.wq;
    let k = mono * &w.wk;
    let scale = 1.0 / (w.wq.ncols() as f64).sqrt();
    let mut scores = (q * k.transpose()) * scale;
    for mut row in scores.row_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.apply(|x| *x = (*x - max).exp());
        let sum: f64 = row.iter().sum();
        row /= sum;
    }
    scores
}

fn concat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c1, c2) = (a.nrows(), a.ncols(), b.ncols());
    DMatrix::from_fn(
        n,
        c1 + c2,
        |i, j| if j < c1 { a[(i, j)] } else { b[(i, j - c1)] },
    )
}

fn add_row(mut m: DMatrix<f64>, bias: &DVector<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        row += bias.transpose();
    }
    m
}
