use rand_distr::{Distribution, Normal};

use super::config::{param_count, ModelConfig};
use super::tensor::Tensor;
use super::ModelError;
use crate::rng::seeded_rng;

/// Standard deviation of the initial weight distribution.
pub const INIT_STD: f64 = 0.02;

/// Index of one parameter tensor inside [`Parameters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParams {
    pub token: ParamId,
    pub position: ParamId,
    pub segment: ParamId,
    pub norm_scale: ParamId,
    pub norm_shift: ParamId,
}

/// One encoder block. Projection weights are stored `(in, out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub query_weight: ParamId,
    pub query_bias: ParamId,
    pub key_weight: ParamId,
    pub key_bias: ParamId,
    pub value_weight: ParamId,
    pub value_bias: ParamId,
    pub output_weight: ParamId,
    pub output_bias: ParamId,
    pub attention_norm_scale: ParamId,
    pub attention_norm_shift: ParamId,
    pub ff_in_weight: ParamId,
    pub ff_in_bias: ParamId,
    pub ff_out_weight: ParamId,
    pub ff_out_bias: ParamId,
    pub output_norm_scale: ParamId,
    pub output_norm_shift: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub embeddings: EmbeddingParams,
    pub layers: Vec<LayerParams>,
    pub classifier_weight: ParamId,
    pub classifier_bias: ParamId,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Init {
    Normal,
    Zeros,
    Ones,
}

/// Parameter specs (name, shape, init) in storage order, plus the layout.
fn specs(config: &ModelConfig) -> (Vec<(String, Vec<usize>, Init)>, Layout) {
    let mut specs = Vec::new();
    let mut add = |name: String, shape: Vec<usize>, init: Init| {
        specs.push((name, shape, init));
        ParamId(specs.len() - 1)
    };
    let h = config.hidden;
    let embeddings = EmbeddingParams {
        token: add("embeddings.token".into(), vec![config.vocab_size, h], Init::Normal),
        position: add("embeddings.position".into(), vec![config.max_len, h], Init::Normal),
        segment: add("embeddings.segment".into(), vec![config.type_vocab, h], Init::Normal),
        norm_scale: add("embeddings.norm.scale".into(), vec![h], Init::Ones),
        norm_shift: add("embeddings.norm.shift".into(), vec![h], Init::Zeros),
    };
    let layers = (0..config.layers)
        .map(|l| {
            let p = |s: &str| format!("layer.{l}.{s}");
            LayerParams {
                query_weight: add(p("attention.query.weight"), vec![h, h], Init::Normal),
                query_bias: add(p("attention.query.bias"), vec![h], Init::Zeros),
                key_weight: add(p("attention.key.weight"), vec![h, h], Init::Normal),
                key_bias: add(p("attention.key.bias"), vec![h], Init::Zeros),
                value_weight: add(p("attention.value.weight"), vec![h, h], Init::Normal),
                value_bias: add(p("attention.value.bias"), vec![h], Init::Zeros),
                output_weight: add(p("attention.output.weight"), vec![h, h], Init::Normal),
                output_bias: add(p("attention.output.bias"), vec![h], Init::Zeros),
                attention_norm_scale: add(p("attention.norm.scale"), vec![h], Init::Ones),
                attention_norm_shift: add(p("attention.norm.shift"), vec![h], Init::Zeros),
                ff_in_weight: add(p("ff.in.weight"), vec![h, config.feed_forward], Init::Normal),
                ff_in_bias: add(p("ff.in.bias"), vec![config.feed_forward], Init::Zeros),
                ff_out_weight: add(p("ff.out.weight"), vec![config.feed_forward, h], Init::Normal),
                ff_out_bias: add(p("ff.out.bias"), vec![h], Init::Zeros),
                output_norm_scale: add(p("output.norm.scale"), vec![h], Init::Ones),
                output_norm_shift: add(p("output.norm.shift"), vec![h], Init::Zeros),
            }
        })
        .collect();
    let classifier_weight = add("classifier.weight".into(), vec![h, config.n_labels], Init::Normal);
    let classifier_bias = add("classifier.bias".into(), vec![config.n_labels], Init::Zeros);
    (
        specs,
        Layout {
            embeddings,
            layers,
            classifier_weight,
            classifier_bias,
        },
    )
}

/// All trainable tensors of the encoder and classifier, plus optional gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    config: ModelConfig,
    layout: Layout,
    names: Vec<String>,
    tensors: Vec<Tensor>,
    grads: Option<Vec<Tensor>>,
}

/// Weights from a normal(0, 0.02) truncated at two standard deviations;
/// biases and norm shifts 0, norm scales 1.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<Parameters, ModelError> {
    config.validate()?;
    let (specs, layout) = specs(config);
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    let mut names = Vec::with_capacity(specs.len());
    let mut tensors = Vec::with_capacity(specs.len());
    for (name, shape, init) in specs {
        let mut t = Tensor::zeros(&shape);
        match init {
            Init::Zeros => {}
            Init::Ones => t.data_mut().fill(1.0),
            Init::Normal => {
                for v in t.data_mut() {
                    *v = loop {
                        let x: f64 = normal.sample(&mut rng);
                        if x.abs() <= 2.0 * INIT_STD {
                            break x;
                        }
                    };
                }
            }
        }
        names.push(name);
        tensors.push(t);
    }
    let params = Parameters {
        config: config.clone(),
        layout,
        names,
        tensors,
        grads: None,
    };
    debug_assert_eq!(params.scalar_count(), param_count(config));
    Ok(params)
}

impl Parameters {
    /// Rebuilds parameters from named tensors, checking names and shapes.
    pub fn from_named(config: &ModelConfig, named: Vec<(String, Tensor)>) -> Result<Self, ModelError> {
        config.validate()?;
        let (specs, layout) = specs(config);
        if specs.len() != named.len() {
            return Err(ModelError::Checkpoint(format!(
                "expected {} tensors, found {}",
                specs.len(),
                named.len()
            )));
        }
        let mut names = Vec::with_capacity(specs.len());
        let mut tensors = Vec::with_capacity(specs.len());
        for ((name, shape, _), (got_name, tensor)) in specs.into_iter().zip(named) {
            if name != got_name || shape != tensor.shape() {
                return Err(ModelError::Checkpoint(format!(
                    "expected {name} {shape:?}, found {got_name} {:?}",
                    tensor.shape()
                )));
            }
            names.push(name);
            tensors.push(tensor);
        }
        Ok(Self {
            config: config.clone(),
            layout,
            names,
            tensors,
            grads: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn named(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn scalar_count(&self) -> u64 {
        self.tensors.iter().map(|t| t.numel() as u64).sum()
    }

    pub fn grad(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.as_ref().map(|g| &g[id.0])
    }

    pub fn has_grads(&self) -> bool {
        self.grads.is_some()
    }

    /// Clears gradients so the next backward pass may populate them.
    pub fn zero_grad(&mut self) {
        self.grads = None;
    }

    pub(crate) fn zero_grads(&self) -> Vec<Tensor> {
        self.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect()
    }

    pub(crate) fn set_grads(&mut self, grads: Vec<Tensor>) {
        self.grads = Some(grads);
    }

    /// Mutable access to every tensor alongside its gradient, for optimizers.
    pub(crate) fn tensors_and_grads(&mut self) -> Option<(&mut [Tensor], &[Tensor])> {
        let grads = self.grads.as_deref()?;
        Some((&mut self.tensors, grads))
    }
}
