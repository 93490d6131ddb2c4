use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::layers::LayerParams;

/// Learnable tensors of one snapshot branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotParams {
    pub tag: String,
    /// `M_t`, applied as `x_i ↦ M_t x_i`.
    pub proj: Array2<f64>,
    /// Layer filters are empty outside the full wavelet mode.
    pub layers: Vec<LayerParams>,
    /// Present only for trainable-basis polynomial wavelets.
    pub theta: Option<Array1<f64>>,
    pub theta_inv: Option<Array1<f64>>,
}

/// Two-layer perceptron on the concatenated snapshot outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub snapshots: Vec<SnapshotParams>,
    pub head: HeadParams,
}

/// Whether a named tensor is a weight matrix (as opposed to a bias, filter or
/// polynomial coefficient vector).
pub fn is_weight(name: &str) -> bool {
    name.starts_with("proj/") || name.ends_with("/w") || name == "head/0" || name == "head/2"
}

impl Params {
    /// Every tensor with its checkpoint key, in a fixed order.
    pub fn named(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = Vec::new();
        for s in &self.snapshots {
            out.push((format!("proj/{}", s.tag), s.proj.view().into_dyn()));
            for (i, l) in s.layers.iter().enumerate() {
                if !l.filter.is_empty() {
                    out.push((format!("snap/{}/layer{i}/filter", s.tag), l.filter.view().into_dyn()));
                }
                out.push((format!("snap/{}/layer{i}/w", s.tag), l.w.view().into_dyn()));
            }
            if let Some(t) = &s.theta {
                out.push((format!("poly/{}/theta", s.tag), t.view().into_dyn()));
            }
            if let Some(t) = &s.theta_inv {
                out.push((format!("poly/{}/theta_inv", s.tag), t.view().into_dyn()));
            }
        }
        let h = &self.head;
        out.push(("head/0".into(), h.w1.view().into_dyn()));
        out.push(("head/1".into(), h.b1.view().into_dyn()));
        out.push(("head/2".into(), h.w2.view().into_dyn()));
        out.push(("head/3".into(), h.b2.view().into_dyn()));
        out
    }

    /// Mutable counterpart of [`Params::named`], same order.
    pub fn named_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut out = Vec::new();
        for s in &mut self.snapshots {
            out.push((format!("proj/{}", s.tag), s.proj.view_mut().into_dyn()));
            for (i, l) in s.layers.iter_mut().enumerate() {
                if !l.filter.is_empty() {
                    out.push((format!("snap/{}/layer{i}/filter", s.tag), l.filter.view_mut().into_dyn()));
                }
                out.push((format!("snap/{}/layer{i}/w", s.tag), l.w.view_mut().into_dyn()));
            }
            if let Some(t) = &mut s.theta {
                out.push((format!("poly/{}/theta", s.tag), t.view_mut().into_dyn()));
            }
            if let Some(t) = &mut s.theta_inv {
                out.push((format!("poly/{}/theta_inv", s.tag), t.view_mut().into_dyn()));
            }
        }
        let h = &mut self.head;
        out.push(("head/0".into(), h.w1.view_mut().into_dyn()));
        out.push(("head/1".into(), h.b1.view_mut().into_dyn()));
        out.push(("head/2".into(), h.w2.view_mut().into_dyn()));
        out.push(("head/3".into(), h.b2.view_mut().into_dyn()));
        out
    }

    /// Same structure, all zeros.
    pub fn zeros_like(&self) -> Params {
        let mut p = self.clone();
        for (_, mut t) in p.named_mut() {
            t.fill(0.0);
        }
        p
    }

    pub fn num_scalars(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.named().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect()
    }
}

pub(crate) fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-a..a))
}

/// `I + 0.01·N(0, 1)`.
pub(crate) fn near_identity(rng: &mut ChaCha8Rng, c: usize) -> Array2<f64> {
    let mut m = Array2::from_shape_simple_fn((c, c), || {
        let z: f64 = StandardNormal.sample(rng);
        0.01 * z
    });
    m.diag_mut().mapv_inplace(|v| v + 1.0);
    m
}

