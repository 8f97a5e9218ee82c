//! Dense feed-forward network with batched forward/backward passes.
//!
//! Generic over the float type so training can run in `f32` while gradient
//! checks and attribution run in `f64`.

use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub trait Real:
    LinalgScalar + ScalarOperand + Float + NumAssign + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply<F: Real>(self, z: F) -> F {
        match self {
            Activation::Relu => z.max(F::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output<F: Real>(self, a: F) -> F {
        match self {
            Activation::Relu => {
                if a > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Tanh => F::one() - a * a,
            Activation::Identity => F::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub const fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }
}

/// Hidden ReLU layers of the given widths followed by an output layer.
pub fn layer_chain(input: usize, hidden: &[usize], output: usize, out_act: Activation) -> Vec<LayerSpec> {
    let mut dims = vec![input];
    dims.extend_from_slice(hidden);
    dims.push(output);
    let n = dims.len() - 1;
    (0..n)
        .map(|i| {
            let act = if i + 1 == n { out_act } else { Activation::Relu };
            LayerSpec::new(dims[i], dims[i + 1], act)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    /// `out_dim × in_dim`
    pub weight: Array2<F>,
    pub bias: Array1<F>,
    pub activation: Activation,
}

impl<F: Real> Dense<F> {
    pub fn spec(&self) -> LayerSpec {
        LayerSpec::new(self.weight.ncols(), self.weight.nrows(), self.activation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    pub layers: Vec<Dense<F>>,
}

/// Per-layer inputs and outputs of one batched forward pass.
#[derive(Debug, Clone)]
pub struct Tape<F> {
    inputs: Vec<Array2<F>>,
    outputs: Vec<Array2<F>>,
}

impl<F: Real> Tape<F> {
    pub fn output(&self) -> &Array2<F> {
        self.outputs.last().expect("non-empty network")
    }

    /// Input that was fed to layer `l`.
    pub fn layer_input(&self, l: usize) -> &Array2<F> {
        &self.inputs[l]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

/// Parameter-shaped gradients, one entry per layer.
pub type Gradients<F> = Vec<DenseGrad<F>>;

impl<F: Real> Mlp<F> {
    /// Uniform `±1/sqrt(fan_in)` initialization for weights and biases.
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Self {
        for w in specs.windows(2) {
            assert_eq!(w[0].out_dim, w[1].in_dim, "layer dims must chain");
        }
        let layers = specs
            .iter()
            .map(|s| {
                let bound = 1.0 / (s.in_dim as f64).sqrt();
                let weight = Array2::from_shape_fn((s.out_dim, s.in_dim), |_| {
                    F::of(rng.random_range(-bound..bound))
                });
                let bias = Array1::from_shape_fn(s.out_dim, |_| F::of(rng.random_range(-bound..bound)));
                Dense {
                    weight,
                    bias,
                    activation: s.activation,
                }
            })
            .collect();
        Self { layers }
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Dense::spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.nrows()).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    pub fn cast<G: Real>(&self) -> Mlp<G> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.mapv(|x| G::of(x.to_f64().unwrap_or(f64::NAN))),
                    bias: l.bias.mapv(|x| G::of(x.to_f64().unwrap_or(f64::NAN))),
                    activation: l.activation,
                })
                .collect(),
        }
    }

    /// Forward pass over a batch (`rows = samples`), recording what backprop needs.
    pub fn forward_batch(&self, input: ArrayView2<F>) -> Tape<F> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut x = input.to_owned();
        for layer in &self.layers {
            let mut z = x.dot(&layer.weight.t());
            z += &layer.bias;
            let act = layer.activation;
            z.mapv_inplace(|v| act.apply(v));
            inputs.push(x);
            x = z.clone();
            outputs.push(z);
        }
        Tape { inputs, outputs }
    }

    /// Forward pass without a tape.
    pub fn predict(&self, input: ArrayView2<F>) -> Array2<F> {
        let mut x = input.to_owned();
        for layer in &self.layers {
            let mut z = x.dot(&layer.weight.t());
            z += &layer.bias;
            let act = layer.activation;
            z.mapv_inplace(|v| act.apply(v));
            x = z;
        }
        x
    }

    pub fn predict_one(&self, input: ArrayView1<F>) -> Array1<F> {
        let mut x = input.to_owned();
        for layer in &self.layers {
            let mut z = layer.weight.dot(&x);
            z += &layer.bias;
            let act = layer.activation;
            z.mapv_inplace(|v| act.apply(v));
            x = z;
        }
        x
    }

    /// Reverse pass: `grad_output` is ∂loss/∂output for each row of the batch.
    /// Returns parameter gradients summed over the batch and ∂loss/∂input per row.
    pub fn backward(&self, tape: &Tape<F>, grad_output: ArrayView2<F>) -> (Gradients<F>, Array2<F>) {
        self.backward_with_preactivation(tape, grad_output, None)
    }

    /// [`Mlp::backward`] with an extra loss gradient `grad_pre` taken with respect
    /// to the final layer's pre-activation.
    pub fn backward_with_preactivation(
        &self,
        tape: &Tape<F>,
        grad_output: ArrayView2<F>,
        grad_pre: Option<ArrayView2<F>>,
    ) -> (Gradients<F>, Array2<F>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = grad_output.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            Zip::from(&mut upstream)
                .and(&tape.outputs[l])
                .for_each(|g, &a| *g *= act.derivative_from_output(a));
            if let (true, Some(extra)) = (l == last, grad_pre) {
                upstream += &extra;
            }
            let weight = upstream.t().dot(&tape.inputs[l]);
            let bias = upstream.sum_axis(Axis(0));
            let next = upstream.dot(&layer.weight);
            grads.push(DenseGrad { weight, bias });
            upstream = next;
        }
        grads.reverse();
        (grads, upstream)
    }

    /// Like [`Mlp::backward`] but skips parameter gradients.
    pub fn input_gradient_batch(&self, tape: &Tape<F>, grad_output: ArrayView2<F>) -> Array2<F> {
        let mut upstream = grad_output.to_owned();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            Zip::from(&mut upstream)
                .and(&tape.outputs[l])
                .for_each(|g, &a| *g *= act.derivative_from_output(a));
            upstream = upstream.dot(&layer.weight);
        }
        upstream
    }

    /// Gradient of raw output `index` with respect to a single input vector.
    pub fn input_gradient(&self, input: ArrayView1<F>, index: usize) -> Array1<F> {
        let x = input.insert_axis(Axis(0));
        let tape = self.forward_batch(x);
        let mut seed = Array2::zeros((1, self.output_dim()));
        seed[[0, index]] = F::one();
        self.input_gradient_batch(&tape, seed.view()).row(0).to_owned()
    }

    /// Parameter gradients of `loss_seed · output(input)` for one sample.
    pub fn param_gradient(&self, input: ArrayView1<F>, loss_seed: ArrayView1<F>) -> Gradients<F> {
        let tape = self.forward_batch(input.insert_axis(Axis(0)));
        self.backward(&tape, loss_seed.insert_axis(Axis(0))).0
    }

    /// Polyak averaging: `self ← tau·online + (1 − tau)·self`.
    pub fn soft_update(&mut self, online: &Mlp<F>, tau: F) {
        let keep = F::one() - tau;
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weight)
                .and(&o.weight)
                .for_each(|t, &o| *t = tau * o + keep * *t);
            Zip::from(&mut t.bias)
                .and(&o.bias)
                .for_each(|t, &o| *t = tau * o + keep * *t);
        }
    }
}

/// Adam optimizer state for one network.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
    step: i32,
    m: Gradients<F>,
    v: Gradients<F>,
}

fn zeros_like<F: Real>(net: &Mlp<F>) -> Gradients<F> {
    net.layers
        .iter()
        .map(|l| DenseGrad {
            weight: Array2::zeros(l.weight.raw_dim()),
            bias: Array1::zeros(l.bias.raw_dim()),
        })
        .collect()
}

impl<F: Real> Adam<F> {
    pub fn new(net: &Mlp<F>, lr: f64) -> Self {
        Self {
            lr: F::of(lr),
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            eps: F::of(1e-8),
            step: 0,
            m: zeros_like(net),
            v: zeros_like(net),
        }
    }

    /// Descends along `grads` (gradients of a loss to minimize).
    pub fn step(&mut self, net: &mut Mlp<F>, grads: &Gradients<F>) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let one = F::one();
        let lr_t = self.lr * (one - b2.powi(self.step)).sqrt() / (one - b1.powi(self.step));
        let update = |p: &mut F, m: &mut F, v: &mut F, g: F| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p -= lr_t * *m / (v.sqrt() + eps);
        };
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}
