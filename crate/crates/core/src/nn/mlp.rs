use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::loss::{one_hot, LossSpec};
use crate::{rng, Error, Result};

/// One fully connected layer, `z = x W + b` with `W` of shape `(in, out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }
}

/// ReLU hidden layers followed by a softmax output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MlpFile", try_from = "MlpFile")]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-parameter gradients, laid out exactly like the [`Mlp`] they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Config(format!("need input and output widths, got {dims:?}")));
    }
    if dims.contains(&0) {
        return Err(Error::Config(format!("zero-width layer in {dims:?}")));
    }
    if *dims.last().unwrap() < 2 {
        return Err(Error::Config("softmax output needs at least two classes".into()));
    }
    Ok(())
}

/// He initialisation: weights `~ N(0, 2 / fan_in)`, biases zero.
pub fn init_params(layer_dims: &[usize], seed: u64) -> Result<Mlp> {
    check_dims(layer_dims)?;
    let mut rng = rng::rng(seed);
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let scale = (2.0 / w[0] as f64).sqrt();
            let weights =
                Array2::from_shape_simple_fn((w[0], w[1]), || scale * rng.sample::<f64, _>(StandardNormal));
            Dense {
                weights,
                bias: Array1::zeros(w[1]),
            }
        })
        .collect();
    Ok(Mlp { layers })
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Activations kept from a training forward pass.
pub(crate) struct Cache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// ReLU derivative times dropout scaling, per hidden layer.
    gates: Vec<Array2<f64>>,
    pub(crate) probs: Array2<f64>,
}

impl Mlp {
    /// All-zero parameters; the output is uniform for every input.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        check_dims(layer_dims)?;
        Ok(Mlp {
            layers: layer_dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.bias.len()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().bias.len()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer, weights (row-major) then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut it = flat.iter().copied();
        for layer in &mut self.layers {
            layer.weights.iter_mut().chain(layer.bias.iter_mut()).for_each(|p| {
                *p = it.next().unwrap();
            });
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} features, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_cached(
        &self,
        x: ArrayView2<f64>,
        dropout: Option<(f64, &mut rng::Rng)>,
    ) -> Result<Cache> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut gates = Vec::with_capacity(last);
        let mut h = x.to_owned();
        let mut dropout = dropout;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weights) + &layer.bias;
            inputs.push(h);
            if l == last {
                softmax_rows(&mut z);
                return Ok(Cache {
                    inputs,
                    gates,
                    probs: z,
                });
            }
            let mut gate = z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
            if let Some((rate, rng)) = dropout.as_mut() {
                if *rate > 0.0 {
                    gate *= &super::train::dropout_mask_with(gate.dim(), *rate, rng);
                }
            }
            z *= &gate;
            gates.push(gate);
            h = z;
        }
        unreachable!("network has at least one layer")
    }

    /// Gradient of the mean loss over the cached batch.
    pub(crate) fn backward_cached(
        &self,
        cache: &Cache,
        targets: ArrayView2<f64>,
        spec: &LossSpec,
    ) -> Result<Gradients> {
        if cache.probs.dim() != targets.dim() {
            return Err(Error::Shape(format!(
                "targets {:?} vs output {:?}",
                targets.dim(),
                cache.probs.dim()
            )));
        }
        let b = cache.probs.nrows() as f64;
        let mut dz = Array2::zeros(cache.probs.dim());
        for ((p, t), mut out) in cache
            .probs
            .rows()
            .into_iter()
            .zip(targets.rows())
            .zip(dz.rows_mut())
        {
            spec.logit_grad(
                p.as_slice().expect("contiguous rows"),
                &t.to_vec(),
                out.as_slice_mut().expect("contiguous rows"),
            );
        }
        dz /= b;

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &cache.inputs[l];
            grads.push(Dense {
                weights: input.t().dot(&dz),
                bias: dz.sum_axis(Axis(0)),
            });
            if l > 0 {
                let mut dh = dz.dot(&self.layers[l].weights.t());
                dh *= &cache.gates[l - 1];
                dz = dh;
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }
}

impl Gradients {
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights *= factor;
            l.bias *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::Shape("gradient depth mismatch".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if a.weights.dim() != b.weights.dim() {
                return Err(Error::Shape("gradient layer mismatch".into()));
            }
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
        Ok(())
    }
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}

/// Row-stochastic class probabilities for each row of `x`.
pub fn forward(params: &Mlp, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    Ok(params.forward_cached(x, None)?.probs)
}

/// Exact gradient of the mean loss over the batch (no dropout).
pub fn backward(params: &Mlp, x: ArrayView2<f64>, labels: &[usize], spec: &LossSpec) -> Result<Gradients> {
    if labels.len() != x.nrows() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x.nrows())));
    }
    let targets = one_hot(labels, params.output_dim())?;
    backward_soft(params, x, targets.view(), spec)
}

pub fn backward_soft(
    params: &Mlp,
    x: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    spec: &LossSpec,
) -> Result<Gradients> {
    let cache = params.forward_cached(x, None)?;
    params.backward_cached(&cache, targets, spec)
}

/// `w <- w - lr * g`.
pub fn sgd_step(params: &mut Mlp, grads: &Gradients, lr: f64) -> Result<()> {
    if params.layers.len() != grads.layers.len() {
        return Err(Error::Shape("gradient depth does not match the network".into()));
    }
    for (p, g) in params.layers.iter_mut().zip(&grads.layers) {
        if p.weights.dim() != g.weights.dim() || p.bias.dim() != g.bias.dim() {
            return Err(Error::Shape("gradient layer shape does not match the network".into()));
        }
        p.weights.scaled_add(-lr, &g.weights);
        p.bias.scaled_add(-lr, &g.bias);
    }
    Ok(())
}

/// On-disk layout of a parameter snapshot.
#[derive(Serialize, Deserialize)]
struct MlpFile {
    layer_dims: Vec<usize>,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    /// `(in, out)` weights, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<Mlp> for MlpFile {
    fn from(m: Mlp) -> Self {
        MlpFile {
            layer_dims: m.layer_dims(),
            layers: m
                .layers
                .into_iter()
                .map(|l| LayerFile {
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MlpFile> for Mlp {
    type Error = Error;

    fn try_from(f: MlpFile) -> Result<Self> {
        check_dims(&f.layer_dims)?;
        if f.layers.len() + 1 != f.layer_dims.len() {
            return Err(Error::Shape(format!(
                "{} layers for dims {:?}",
                f.layers.len(),
                f.layer_dims
            )));
        }
        let layers = f
            .layers
            .into_iter()
            .zip(f.layer_dims.windows(2))
            .map(|(l, w)| {
                let weights = Array2::from_shape_vec((w[0], w[1]), l.weights)
                    .map_err(|e| Error::Shape(e.to_string()))?;
                if l.bias.len() != w[1] {
                    return Err(Error::Shape(format!("bias of {} for width {}", l.bias.len(), w[1])));
                }
                Ok(Dense {
                    weights,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Mlp { layers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a = init_params(&[5, 4, 3], 1).unwrap();
        let b = init_params(&[5, 4, 3], 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_params(&[5, 4, 3], 2).unwrap());
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
        assert_eq!(a.layer_dims(), vec![5, 4, 3]);
    }

    #[test]
    fn init_variance_matches_fan_in() {
        let m = init_params(&[784, 100], 3).unwrap();
        let w = &m.layers()[0].weights;
        let mean = w.mean().unwrap();
        let var = w.mapv(|v| (v - mean).powi(2)).mean().unwrap();
        let target = 2.0 / 784.0;
        assert!((var - target).abs() < 0.2 * target, "{var} vs {target}");
    }

    #[test]
    fn zero_network_is_uniform() {
        let m = Mlp::zeros(&[3, 4, 5]).unwrap();
        let p = forward(&m, array![[0.1, 0.2, 0.3], [1.0, 0.0, 0.5]].view()).unwrap();
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn rows_sum_to_one_and_shift_invariance() {
        let m = init_params(&[3, 6, 4], 7).unwrap();
        let x = array![[0.1, 0.9, 0.3], [5.0, -2.0, 0.5]];
        let p = forward(&m, x.view()).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        let mut shifted = m.clone();
        shifted.layers.last_mut().unwrap().bias += 17.5;
        let q = forward(&shifted, x.view()).unwrap();
        assert!(p.iter().zip(q.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn shape_mismatch() {
        let m = init_params(&[3, 2], 0).unwrap();
        assert!(matches!(forward(&m, Array2::zeros((1, 4)).view()), Err(Error::Shape(_))));
        assert!(matches!(
            backward(&m, Array2::zeros((2, 3)).view(), &[0], &LossSpec::Cce),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn sgd_linearity() {
        let m = init_params(&[4, 3, 2], 5).unwrap();
        let x = array![[0.1, 0.2, 0.3, 0.4], [0.9, 0.1, 0.0, 0.5]];
        let g = backward(&m, x.view(), &[0, 1], &LossSpec::Cce).unwrap();

        let mut zero = m.clone();
        sgd_step(&mut zero, &g, 0.0).unwrap();
        assert_eq!(zero, m);

        let mut once = m.clone();
        sgd_step(&mut once, &g, 0.2).unwrap();
        let mut twice = m.clone();
        sgd_step(&mut twice, &g, 0.1).unwrap();
        sgd_step(&mut twice, &g, 0.1).unwrap();
        for (a, b) in once.to_flat().iter().zip(twice.to_flat()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_round_trip_and_serde() {
        let m = init_params(&[3, 4, 2], 9).unwrap();
        let mut z = Mlp::zeros(&[3, 4, 2]).unwrap();
        z.set_flat(&m.to_flat()).unwrap();
        assert_eq!(z, m);
        let json = serde_json::to_string(&m).unwrap();
        let back: Mlp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Mlp>(r#"{"layer_dims":[3,2],"layers":[]}"#).is_err());
    }
}
