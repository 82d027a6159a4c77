use std::hash::{DefaultHasher, Hash, Hasher};

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::rng::{self, Stream};

/// Layer widths shared by the three parameter groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Node feature dimension `d`.
    pub input: usize,
    /// Width of the first classifier GCN layer.
    pub hidden: usize,
    /// Width of the second classifier GCN layer (the representation `h`).
    pub output: usize,
    /// Width of the estimator's single GCN layer.
    pub estimator_hidden: usize,
}

impl ModelDims {
    pub fn new(input: usize, hidden: usize, output: usize, estimator_hidden: usize) -> Self {
        ModelDims {
            input,
            hidden,
            output,
            estimator_hidden,
        }
    }
}

/// A group of trainable tensors addressed as one flat vector.
///
/// Flattening visits tensors in declaration order, each in row-major order.
pub trait ParamGroup: Clone {
    const NAME: &'static str;

    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    fn set_flat(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.num_params() {
            return Err(NnError::Shape {
                context: Self::NAME,
                expected: self.num_params().to_string(),
                found: flat.len().to_string(),
            });
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.fill(0.0);
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Hash of the exact bit patterns, used to detect stale caches.
    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for t in self.tensors() {
            t.len().hash(&mut h);
            for v in t {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

fn slice1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("parameter vectors are contiguous")
}
fn slice2(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameter matrices are contiguous")
}
fn slice1_mut(a: &mut Array1<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameter vectors are contiguous")
}
fn slice2_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameter matrices are contiguous")
}

fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..=limit))
}

fn glorot_vec(rng: &mut impl Rng, fan_in: usize) -> Array1<f64> {
    let limit = (6.0 / (fan_in + 1) as f64).sqrt();
    Array1::from_shape_simple_fn(fan_in, || rng.random_range(-limit..=limit))
}

/// Two-layer GCN classifier with a bias-free sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub head: Array1<f64>,
}

impl ClassifierParams {
    pub fn zeros(dims: &ModelDims) -> Self {
        ClassifierParams {
            w1: Array2::zeros((dims.input, dims.hidden)),
            b1: Array1::zeros(dims.hidden),
            w2: Array2::zeros((dims.hidden, dims.output)),
            b2: Array1::zeros(dims.output),
            head: Array1::zeros(dims.output),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(dims: &ModelDims, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Stream::Classifier);
        ClassifierParams {
            w1: glorot(&mut rng, dims.input, dims.hidden),
            b1: Array1::zeros(dims.hidden),
            w2: glorot(&mut rng, dims.hidden, dims.output),
            b2: Array1::zeros(dims.output),
            head: glorot_vec(&mut rng, dims.output),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.nrows(), self.w1.ncols(), self.w2.ncols())
    }

    pub fn check_shapes(&self) -> Result<(), NnError> {
        let (d, h1, h2) = self.dims();
        let ok = self.b1.len() == h1
            && self.w2.nrows() == h1
            && self.b2.len() == h2
            && self.head.len() == h2;
        if ok {
            Ok(())
        } else {
            Err(NnError::Shape {
                context: "classifier parameters",
                expected: format!("{d}x{h1}, {h1}, {h1}x{h2}, {h2}, {h2}"),
                found: format!(
                    "{:?}, {}, {:?}, {}, {}",
                    self.w1.dim(),
                    self.b1.len(),
                    self.w2.dim(),
                    self.b2.len(),
                    self.head.len()
                ),
            })
        }
    }
}

impl ParamGroup for ClassifierParams {
    const NAME: &'static str = "classifier";

    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            slice2(&self.w1),
            slice1(&self.b1),
            slice2(&self.w2),
            slice1(&self.b2),
            slice1(&self.head),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            slice2_mut(&mut self.w1),
            slice1_mut(&mut self.b1),
            slice2_mut(&mut self.w2),
            slice1_mut(&mut self.b2),
            slice1_mut(&mut self.head),
        ]
    }
}

/// One-layer GCN estimator of the sensitive attribute with a sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub head: Array1<f64>,
    pub head_bias: f64,
}

impl EstimatorParams {
    pub fn zeros(dims: &ModelDims) -> Self {
        EstimatorParams {
            w: Array2::zeros((dims.input, dims.estimator_hidden)),
            b: Array1::zeros(dims.estimator_hidden),
            head: Array1::zeros(dims.estimator_hidden),
            head_bias: 0.0,
        }
    }

    pub fn init(dims: &ModelDims, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Stream::Estimator);
        EstimatorParams {
            w: glorot(&mut rng, dims.input, dims.estimator_hidden),
            b: Array1::zeros(dims.estimator_hidden),
            head: glorot_vec(&mut rng, dims.estimator_hidden),
            head_bias: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }
}

impl ParamGroup for EstimatorParams {
    const NAME: &'static str = "estimator";

    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            slice2(&self.w),
            slice1(&self.b),
            slice1(&self.head),
            std::slice::from_ref(&self.head_bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            slice2_mut(&mut self.w),
            slice1_mut(&mut self.b),
            slice1_mut(&mut self.head),
            std::slice::from_mut(&mut self.head_bias),
        ]
    }
}

/// Linear sigmoid classifier predicting the sensitive attribute from `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryParams {
    pub weight: Array1<f64>,
    pub bias: f64,
}

impl AdversaryParams {
    pub fn zeros(dims: &ModelDims) -> Self {
        AdversaryParams {
            weight: Array1::zeros(dims.output),
            bias: 0.0,
        }
    }

    pub fn init(dims: &ModelDims, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Stream::Adversary);
        AdversaryParams {
            weight: glorot_vec(&mut rng, dims.output),
            bias: 0.0,
        }
    }
}

impl ParamGroup for AdversaryParams {
    const NAME: &'static str = "adversary";

    fn tensors(&self) -> Vec<&[f64]> {
        vec![slice1(&self.weight), std::slice::from_ref(&self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            slice1_mut(&mut self.weight),
            std::slice::from_mut(&mut self.bias),
        ]
    }
}

/// All trainable state: classifier, estimator and adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub seed: u64,
    pub classifier: ClassifierParams,
    pub estimator: EstimatorParams,
    pub adversary: AdversaryParams,
}

impl ModelParams {
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        ModelParams {
            dims,
            seed,
            classifier: ClassifierParams::init(&dims, seed),
            estimator: EstimatorParams::init(&dims, seed),
            adversary: AdversaryParams::init(&dims, seed),
        }
    }

    pub fn zeros(dims: ModelDims, seed: u64) -> Self {
        ModelParams {
            dims,
            seed,
            classifier: ClassifierParams::zeros(&dims),
            estimator: EstimatorParams::zeros(&dims),
            adversary: AdversaryParams::zeros(&dims),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.classifier.is_finite() && self.estimator.is_finite() && self.adversary.is_finite()
    }
}
