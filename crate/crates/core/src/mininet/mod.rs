//! A deterministic from-scratch MLP used for desk-scale accuracy-impact
//! experiments: training, checkpointing as a model container,
//! neuron-replacement sweeps, and frozen-layer retraining.
//!
//! Layers are fully connected with ReLU on hidden layers and softmax over
//! the output. Weights are stored as f32 in containers (tensor names
//! `fc0.weight`, `fc0.bias`, ...) and widened to f64 for arithmetic, so a
//! load/save cycle is lossless and training is bit-reproducible for a fixed
//! seed.

pub mod data;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::container::ModelContainer;
use crate::embed::{embed_payload, EmbedPlan, Payload, PlanSegment};
use crate::error::{Error, Result};
use crate::floatcodec::EmbedMethod;
use data::{Dataset, Split};

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `[out_dim × in_dim]`; row i is neuron i.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn param_count(&self) -> usize {
        self.out_dim * (self.in_dim + 1)
    }
}

/// A multilayer perceptron with deterministic initialization and training.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniNet {
    layers: Vec<Layer>,
}

/// SGD hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            lr: 0.05,
            momentum: 0.9,
            batch_size: 32,
        }
    }
}

pub const DEFAULT_ARCH: [usize; 4] = [64, 256, 256, 10];
pub const DEFAULT_TRAIN_SEED: u64 = 7;

impl MiniNet {
    /// Glorot-uniform weights (±√(6/(fan_in+fan_out))), zero biases.
    pub fn init(arch: &[usize], seed: u64) -> Result<Self> {
        if arch.len() < 2 {
            return Err(Error::InvalidArchitecture(format!(
                "need input and output dims, got {arch:?}"
            )));
        }
        if arch.contains(&0) {
            return Err(Error::InvalidArchitecture(format!(
                "all layer widths must be >= 1, got {arch:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .windows(2)
            .map(|w| {
                let (in_dim, out_dim) = (w[0], w[1]);
                let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
                let weights = (0..in_dim * out_dim)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                Layer {
                    in_dim,
                    out_dim,
                    weights,
                    biases: vec![0.0; out_dim],
                }
            })
            .collect();
        Ok(MiniNet { layers })
    }

    pub fn arch(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    /// `fc0`, `fc1`, ... in input-to-output order.
    pub fn layer_names(&self) -> Vec<String> {
        (0..self.layers.len()).map(|i| format!("fc{i}")).collect()
    }

    /// Analytic parameter count: Σ out·(in+1).
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn layer_index(&self, name: &str) -> Result<usize> {
        name.strip_prefix("fc")
            .and_then(|i| i.parse::<usize>().ok())
            .filter(|&i| i < self.layers.len())
            .ok_or_else(|| Error::UnknownTensor(name.to_string()))
    }

    /// Pre-activation and post-activation values for every layer.
    fn forward_cached(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut input = x;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.biases.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                *zo += dot(row, input);
            }
            let last = li == self.layers.len() - 1;
            let a: Vec<f64> = if last {
                z.clone()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            pre.push(z);
            post.push(a);
            input = &post[li];
        }
        (pre, post)
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let (_, mut post) = self.forward_cached(x);
        post.pop().unwrap()
    }

    /// Softmax class probabilities.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Output of the last hidden layer (post-activation).
    pub fn penultimate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.layers.len() < 2 {
            return Err(Error::InvalidArchitecture(
                "no hidden layer to read the penultimate output from".into(),
            ));
        }
        let (_, mut post) = self.forward_cached(x);
        post.pop();
        Ok(post.pop().unwrap())
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    pub fn accuracy(&self, split: &Split) -> f64 {
        let correct: usize = (0..split.len())
            .into_par_iter()
            .filter(|&i| {
                let (x, y) = split.sample(i);
                self.predict(x) == y
            })
            .count();
        correct as f64 / split.len() as f64
    }

    /// Mean cross-entropy loss over a batch.
    pub fn batch_loss(&self, batch: &[(&[f64], usize)]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|&(x, y)| {
                let p = self.probabilities(x);
                -(p[y].max(1e-300)).ln()
            })
            .sum();
        total / batch.len() as f64
    }

    /// Mean gradients over a batch, laid out per layer as weights (row-major)
    /// followed by biases.
    pub fn batch_gradients(&self, batch: &[(&[f64], usize)]) -> (f64, Vec<Vec<f64>>) {
        let mut grads: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.param_count()])
            .collect();
        let mut loss = 0.0;
        for &(x, y) in batch {
            let (pre, post) = self.forward_cached(x);
            let probs = softmax(pre.last().unwrap());
            loss += -(probs[y].max(1e-300)).ln();

            // dL/dz for the output layer
            let mut dz: Vec<f64> = probs;
            dz[y] -= 1.0;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input: &[f64] = if li == 0 { x } else { &post[li - 1] };
                let g = &mut grads[li];
                for o in 0..layer.out_dim {
                    let d = dz[o];
                    let row = &mut g[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (gi, &xi) in row.iter_mut().zip(input) {
                        *gi += d * xi;
                    }
                    g[layer.out_dim * layer.in_dim + o] += d;
                }
                if li > 0 {
                    let mut da = vec![0.0; layer.in_dim];
                    for o in 0..layer.out_dim {
                        let d = dz[o];
                        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (ai, &w) in da.iter_mut().zip(row) {
                            *ai += d * w;
                        }
                    }
                    // ReLU mask from the previous layer's pre-activations
                    dz = da
                        .iter()
                        .zip(&pre[li - 1])
                        .map(|(&a, &z)| if z > 0.0 { a } else { 0.0 })
                        .collect();
                }
            }
        }
        let n = batch.len() as f64;
        for g in &mut grads {
            for v in g {
                *v /= n;
            }
        }
        (loss / n, grads)
    }

    /// Flat parameter accessors in the gradient layout, for finite-difference
    /// checks.
    pub fn param(&self, layer: usize, idx: usize) -> f64 {
        let l = &self.layers[layer];
        if idx < l.weights.len() {
            l.weights[idx]
        } else {
            l.biases[idx - l.weights.len()]
        }
    }

    pub fn set_param(&mut self, layer: usize, idx: usize, value: f64) {
        let l = &mut self.layers[layer];
        if idx < l.weights.len() {
            l.weights[idx] = value;
        } else {
            l.biases[idx - l.weights.len()] = value;
        }
    }

    /// Mini-batch SGD with momentum. Layers named in `frozen` receive no
    /// updates (gradients still flow through them). Deterministic given the
    /// seed: shuffles and iteration order are fixed.
    pub fn train_epochs(
        &mut self,
        train: &Split,
        cfg: &TrainConfig,
        frozen: &[String],
        seed: u64,
    ) -> Result<()> {
        let frozen_idx: Vec<usize> = frozen
            .iter()
            .map(|name| self.layer_index(name))
            .collect::<Result<_>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut velocity: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.param_count()])
            .collect();
        let mut indices: Vec<usize> = (0..train.len()).collect();
        for epoch in 0..cfg.epochs {
            shuffle(&mut indices, &mut rng);
            let mut epoch_loss = 0.0;
            let mut batches = 0usize;
            for chunk in indices.chunks(cfg.batch_size) {
                let batch: Vec<(&[f64], usize)> =
                    chunk.iter().map(|&i| train.sample(i)).collect();
                let (loss, grads) = self.batch_gradients(&batch);
                epoch_loss += loss;
                batches += 1;
                for (li, layer) in self.layers.iter_mut().enumerate() {
                    if frozen_idx.contains(&li) {
                        continue;
                    }
                    let v = &mut velocity[li];
                    let g = &grads[li];
                    for (j, w) in layer
                        .weights
                        .iter_mut()
                        .chain(layer.biases.iter_mut())
                        .enumerate()
                    {
                        v[j] = cfg.momentum * v[j] + g[j];
                        *w -= cfg.lr * v[j];
                    }
                }
            }
            if !(epoch_loss / batches.max(1) as f64).is_finite() {
                return Err(Error::Divergence { epoch });
            }
        }
        Ok(())
    }

    /// Checkpoint as a container with `fcN.weight` / `fcN.bias` tensors,
    /// narrowing to f32.
    pub fn to_container(&self) -> ModelContainer {
        let mut tensors: Vec<(String, Vec<usize>, Vec<f32>)> = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            tensors.push((
                format!("fc{i}.weight"),
                vec![l.out_dim, l.in_dim],
                l.weights.iter().map(|&w| w as f32).collect(),
            ));
            tensors.push((
                format!("fc{i}.bias"),
                vec![l.out_dim],
                l.biases.iter().map(|&b| b as f32).collect(),
            ));
        }
        ModelContainer::from_tensors(tensors).expect("checkpoint layout is always valid")
    }

    pub fn from_container(c: &ModelContainer) -> Result<Self> {
        let mut layers = Vec::new();
        for i in 0.. {
            let wname = format!("fc{i}.weight");
            if c.tensor(&wname).is_err() {
                break;
            }
            let wmeta = c.tensor(&wname)?;
            if wmeta.shape.len() != 2 {
                return Err(Error::InvalidArchitecture(format!(
                    "{wname} must be 2-D, got {:?}",
                    wmeta.shape
                )));
            }
            let (out_dim, in_dim) = (wmeta.shape[0], wmeta.shape[1]);
            let bname = format!("fc{i}.bias");
            let bmeta = c.tensor(&bname)?;
            if bmeta.shape != [out_dim] {
                return Err(Error::InvalidArchitecture(format!(
                    "{bname} shape {:?} does not match {out_dim} neurons",
                    bmeta.shape
                )));
            }
            layers.push(Layer {
                in_dim,
                out_dim,
                weights: c.tensor_values(&wname)?.iter().map(|&w| w as f64).collect(),
                biases: c.tensor_values(&bname)?.iter().map(|&b| b as f64).collect(),
            });
        }
        if layers.is_empty() {
            return Err(Error::InvalidArchitecture(
                "container has no fc0.weight tensor".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::InvalidArchitecture(format!(
                    "layer dims do not chain: {} -> {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        Ok(MiniNet { layers })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::MIN, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn argmax(z: &[f64]) -> usize {
    z.iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Fisher-Yates with the given generator.
fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}

/// Train a fresh network; returns the net and its test accuracy (Base).
pub fn train(
    dataset: &Dataset,
    arch: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(MiniNet, f64)> {
    if *arch.first().unwrap_or(&0) != dataset.dim()
        || *arch.last().unwrap_or(&0) < dataset.classes
    {
        return Err(Error::InvalidArchitecture(format!(
            "architecture {arch:?} does not fit dim {} / {} classes",
            dataset.dim(),
            dataset.classes
        )));
    }
    let mut net = MiniNet::init(arch, seed)?;
    net.train_epochs(&dataset.train, cfg, &[], seed)?;
    let acc = net.accuracy(&dataset.test);
    Ok((net, acc))
}

/// Test accuracy of a checkpointed container.
pub fn evaluate_container(c: &ModelContainer, test: &Split) -> Result<f64> {
    Ok(MiniNet::from_container(c)?.accuracy(test))
}

/// The parameters of the `k` lowest-index neurons of a layer: its weight
/// rows followed by its biases, as an embedding plan.
pub fn neuron_plan(
    c: &ModelContainer,
    layer: &str,
    k: usize,
    method: EmbedMethod,
) -> Result<EmbedPlan> {
    let weight = format!("{layer}.weight");
    let bias = format!("{layer}.bias");
    let wmeta = c.tensor(&weight)?;
    let width = wmeta.shape[0];
    if k > width {
        return Err(Error::IndexOutOfRange {
            tensor: weight,
            index: k,
            len: width,
        });
    }
    let in_dim: usize = wmeta.shape[1..].iter().product();
    c.tensor(&bias)?;
    Ok(EmbedPlan {
        method,
        segments: vec![
            PlanSegment {
                tensor: weight,
                start_param: 0,
                param_count: k * in_dim,
            },
            PlanSegment {
                tensor: bias,
                start_param: 0,
                param_count: k,
            },
        ],
    })
}

/// Embed payload bytes over the `k` lowest-index neurons of a layer. The
/// payload is truncated or zero-padded to exactly the neurons' capacity.
pub fn replace_neurons(
    c: &ModelContainer,
    layer: &str,
    k: usize,
    method: EmbedMethod,
    payload_bytes: &[u8],
) -> Result<ModelContainer> {
    if k == 0 {
        return Ok(c.clone());
    }
    let plan = neuron_plan(c, layer, k, method)?;
    let mut bytes = payload_bytes.to_vec();
    bytes.resize(plan.capacity(), 0);
    let payload = Payload::new(bytes)?;
    let (out, _) = embed_payload(c, &payload, &plan)?;
    Ok(out)
}

/// One grid point of a neuron-replacement sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub layer: String,
    pub neurons_replaced: usize,
    pub method: EmbedMethod,
    pub accuracy: f64,
}

/// Replace `k` neurons per grid point and record test accuracy. Points are
/// independent and evaluated in parallel; the result order is the grid
/// order.
pub fn sweep(
    c: &ModelContainer,
    layers: &[String],
    ks: &[usize],
    method: EmbedMethod,
    payload_bytes: &[u8],
    test: &Split,
) -> Result<Vec<SweepPoint>> {
    let grid: Vec<(String, usize)> = layers
        .iter()
        .flat_map(|l| ks.iter().map(move |&k| (l.clone(), k)))
        .collect();
    grid.into_par_iter()
        .map(|(layer, k)| {
            let replaced = replace_neurons(c, &layer, k, method, payload_bytes)?;
            let accuracy = evaluate_container(&replaced, test)?;
            Ok(SweepPoint {
                layer,
                neurons_replaced: k,
                method,
                accuracy,
            })
        })
        .collect()
}

/// Retrain with the named layers excluded from updates; their container
/// bytes are bit-identical afterwards. Returns the retrained checkpoint and
/// its test accuracy.
pub fn freeze_retrain(
    c: &ModelContainer,
    frozen_layers: &[String],
    dataset: &Dataset,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ModelContainer, f64)> {
    let mut net = MiniNet::from_container(c)?;
    net.train_epochs(&dataset.train, cfg, frozen_layers, seed)?;
    let acc = net.accuracy(&dataset.test);
    Ok((net.to_container(), acc))
}
