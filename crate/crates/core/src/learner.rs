//! Small trainable classifiers, local SGD and evaluation.
//!
//! Two architectures are supported: multinomial logistic regression and a
//! one-hidden-layer tanh MLP, both trained on softmax cross-entropy.
//! Parameters live in one flat [`ParamVector`] so the same buffer is what
//! gets quantized and sent over the air.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::{ClientDataset, Dataset};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("empty dataset for client {client:?}: partition is misconfigured")]
    EmptyDataset { client: Option<usize> },
    #[error("parameter length {found} does not match architecture ({expected})")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("sample dimension {found} does not match architecture input {expected}")]
    InputMismatch { expected: usize, found: usize },
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("training diverged to a non-finite parameter")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelArch {
    Logistic {
        input_dim: usize,
        num_classes: usize,
    },
    Mlp {
        input_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
    },
}

impl ModelArch {
    pub fn input_dim(&self) -> usize {
        match *self {
            Self::Logistic { input_dim, .. } | Self::Mlp { input_dim, .. } => input_dim,
        }
    }

    pub fn num_classes(&self) -> usize {
        match *self {
            Self::Logistic { num_classes, .. } | Self::Mlp { num_classes, .. } => num_classes,
        }
    }

    pub fn num_params(&self) -> usize {
        match *self {
            Self::Logistic {
                input_dim: d,
                num_classes: c,
            } => d * c + c,
            Self::Mlp {
                input_dim: d,
                hidden_dim: h,
                num_classes: c,
            } => d * h + h + h * c + c,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let ok = match *self {
            Self::Logistic {
                input_dim,
                num_classes,
            } => input_dim >= 1 && num_classes >= 1,
            Self::Mlp {
                input_dim,
                hidden_dim,
                num_classes,
            } => input_dim >= 1 && hidden_dim >= 1 && num_classes >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(LearnError::BadConfig(format!(
                "degenerate architecture {self:?}"
            )))
        }
    }

    /// `(rows, cols)` of each weight matrix followed by its bias, in layout order.
    fn layers(&self) -> Vec<(usize, usize)> {
        match *self {
            Self::Logistic {
                input_dim,
                num_classes,
            } => vec![(num_classes, input_dim)],
            Self::Mlp {
                input_dim,
                hidden_dim,
                num_classes,
            } => vec![(hidden_dim, input_dim), (num_classes, hidden_dim)],
        }
    }
}

/// Flat model parameters, the unit of communication.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<S> {
    pub values: Vec<S>,
}

impl<S: Real> ParamVector<S> {
    pub fn new(values: Vec<S>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![S::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// L2 penalty coefficient; `0` trains on plain cross-entropy.
    pub weight_decay: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::BadConfig("learning_rate must be > 0".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(LearnError::BadConfig("weight_decay must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(LearnError::BadConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Anything that yields labelled samples by position.
pub trait Samples<S> {
    fn num_samples(&self) -> usize;
    fn get(&self, j: usize) -> (&[S], usize);
    fn client(&self) -> Option<usize> {
        None
    }
}

impl<S: Real> Samples<S> for Dataset<S> {
    fn num_samples(&self) -> usize {
        self.len()
    }
    fn get(&self, j: usize) -> (&[S], usize) {
        (self.sample(j), self.label(j))
    }
}

impl<S: Real> Samples<S> for ClientDataset<S> {
    fn num_samples(&self) -> usize {
        self.len()
    }
    fn get(&self, j: usize) -> (&[S], usize) {
        self.sample(j)
    }
    fn client(&self) -> Option<usize> {
        Some(self.client_id)
    }
}

/// Weights ~ N(0, 1/fan_in), biases zero.
pub fn init_model<S: Real>(arch: &ModelArch, seed: u64) -> ParamVector<S> {
    let mut rng = stream_rng(seed, Stream::Init, &[]);
    let mut values = Vec::with_capacity(arch.num_params());
    for (rows, cols) in arch.layers() {
        let scale = 1.0 / (cols as f64).sqrt();
        values
            .extend((0..rows * cols).map(|_| S::of(scale * rng.sample::<f64, _>(StandardNormal))));
        values.extend(std::iter::repeat_n(S::zero(), rows));
    }
    ParamVector::new(values)
}

fn check_shapes<S: Real>(
    arch: &ModelArch,
    params: &[S],
    data: &impl Samples<S>,
) -> Result<(), LearnError> {
    if params.len() != arch.num_params() {
        return Err(LearnError::ShapeMismatch {
            expected: arch.num_params(),
            found: params.len(),
        });
    }
    if data.num_samples() == 0 {
        return Err(LearnError::EmptyDataset {
            client: data.client(),
        });
    }
    let found = data.get(0).0.len();
    if found != arch.input_dim() {
        return Err(LearnError::InputMismatch {
            expected: arch.input_dim(),
            found,
        });
    }
    Ok(())
}

/// `out = W·x + b` where `W` is `rows × x.len()` followed by `b` in `params`.
fn affine<S: Real>(params: &[S], x: &[S], out: &mut [S]) {
    let cols = x.len();
    let (w, b) = params.split_at(out.len() * cols);
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for (wi, xi) in row.iter().zip(x) {
            acc += *wi * *xi;
        }
        *o = acc;
    }
}

/// Turns logits into probabilities in place; returns `-ln p[label]`.
fn softmax_xent<S: Real>(logits: &mut [S], label: usize) -> S {
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let shifted_label = logits[label] - max;
    let mut sum = S::zero();
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
    sum.ln() - shifted_label
}

struct Workspace<S> {
    hidden: Vec<S>,
    logits: Vec<S>,
    dhidden: Vec<S>,
}

impl<S: Real> Workspace<S> {
    fn new(arch: &ModelArch) -> Self {
        let h = match *arch {
            ModelArch::Mlp { hidden_dim, .. } => hidden_dim,
            ModelArch::Logistic { .. } => 0,
        };
        Self {
            hidden: vec![S::zero(); h],
            logits: vec![S::zero(); arch.num_classes()],
            dhidden: vec![S::zero(); h],
        }
    }
}

/// Forward pass; leaves probabilities in `ws.logits`, returns the sample loss.
fn forward<S: Real>(arch: &ModelArch, params: &[S], x: &[S], y: usize, ws: &mut Workspace<S>) -> S {
    match *arch {
        ModelArch::Logistic { .. } => affine(params, x, &mut ws.logits),
        ModelArch::Mlp {
            input_dim,
            hidden_dim,
            ..
        } => {
            let split = hidden_dim * input_dim + hidden_dim;
            affine(&params[..split], x, &mut ws.hidden);
            for h in ws.hidden.iter_mut() {
                *h = h.tanh();
            }
            affine(&params[split..], &ws.hidden, &mut ws.logits);
        }
    }
    softmax_xent(&mut ws.logits, y)
}

/// Accumulates `scale · ∂loss/∂params` for one sample into `grad`.
fn backward<S: Real>(
    arch: &ModelArch,
    params: &[S],
    x: &[S],
    y: usize,
    scale: S,
    ws: &mut Workspace<S>,
    grad: &mut [S],
) {
    let c = arch.num_classes();
    ws.logits[y] -= S::one();
    let accumulate = |g: &mut [S], input: &[S], delta: &[S]| {
        let cols = input.len();
        let (gw, gb) = g.split_at_mut(delta.len() * cols);
        for (r, &d) in delta.iter().enumerate() {
            let d = d * scale;
            if d == S::zero() {
                continue;
            }
            for (gi, xi) in gw[r * cols..(r + 1) * cols].iter_mut().zip(input) {
                *gi += d * *xi;
            }
            gb[r] += d;
        }
    };
    match *arch {
        ModelArch::Logistic { .. } => accumulate(grad, x, &ws.logits),
        ModelArch::Mlp {
            input_dim,
            hidden_dim,
            ..
        } => {
            let split = hidden_dim * input_dim + hidden_dim;
            let (g1, g2) = grad.split_at_mut(split);
            accumulate(g2, &ws.hidden, &ws.logits);
            let w2 = &params[split..split + c * hidden_dim];
            for (j, dh) in ws.dhidden.iter_mut().enumerate() {
                let mut acc = S::zero();
                for k in 0..c {
                    acc += w2[k * hidden_dim + j] * ws.logits[k];
                }
                let h = ws.hidden[j];
                *dh = acc * (S::one() - h * h);
            }
            accumulate(g1, x, &ws.dhidden);
        }
    }
}

/// Mean cross-entropy and its gradient over the listed sample positions.
pub fn loss_and_grad<S: Real>(
    arch: &ModelArch,
    params: &ParamVector<S>,
    data: &impl Samples<S>,
    positions: &[usize],
) -> Result<(S, Vec<S>), LearnError> {
    check_shapes(arch, &params.values, data)?;
    let mut ws = Workspace::new(arch);
    let mut grad = vec![S::zero(); params.len()];
    let scale = S::one() / S::of(positions.len() as f64);
    let mut loss = S::zero();
    for &j in positions {
        let (x, y) = data.get(j);
        loss += forward(arch, &params.values, x, y, &mut ws);
        backward(arch, &params.values, x, y, scale, &mut ws, &mut grad);
    }
    Ok((loss * scale, grad))
}

/// Mini-batch SGD on softmax cross-entropy, reshuffled every epoch from `cfg.seed`.
pub fn local_train<S: Real>(
    arch: &ModelArch,
    model: &ParamVector<S>,
    data: &impl Samples<S>,
    cfg: &TrainConfig,
) -> Result<ParamVector<S>, LearnError> {
    cfg.validate()?;
    check_shapes(arch, &model.values, data)?;
    let mut params = model.values.clone();
    let n = data.num_samples();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(cfg.seed, Stream::LocalTrain, &[]);
    let lr = S::of(cfg.learning_rate);
    let decay = S::one() - lr * S::of(cfg.weight_decay);
    let mut ws = Workspace::new(arch);
    let mut grad = vec![S::zero(); params.len()];
    for _ in 0..cfg.local_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = S::zero());
            let scale = S::one() / S::of(batch.len() as f64);
            for &j in batch {
                let (x, y) = data.get(j);
                forward(arch, &params, x, y, &mut ws);
                backward(arch, &params, x, y, scale, &mut ws, &mut grad);
            }
            if cfg.weight_decay > 0.0 {
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p = decay * *p - lr * *g;
                }
            } else {
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= lr * *g;
                }
            }
        }
    }
    let out = ParamVector::new(params);
    if !out.is_finite() {
        return Err(LearnError::NonFinite);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

pub fn evaluate<S: Real>(
    arch: &ModelArch,
    model: &ParamVector<S>,
    data: &impl Samples<S>,
) -> Result<Evaluation, LearnError> {
    check_shapes(arch, &model.values, data)?;
    let mut ws = Workspace::new(arch);
    let n = data.num_samples();
    let mut loss = 0.0;
    let mut correct = 0usize;
    for j in 0..n {
        let (x, y) = data.get(j);
        loss += forward(arch, &model.values, x, y, &mut ws).as_f64();
        let mut best = 0;
        for k in 1..ws.logits.len() {
            if ws.logits[k] > ws.logits[best] {
                best = k;
            }
        }
        correct += usize::from(best == y);
    }
    Ok(Evaluation {
        loss: loss / n as f64,
        accuracy: correct as f64 / n as f64,
    })
}

/// Fraction of noisy gradients that are still descent directions on
/// `f(w) = ½‖w‖²` at `‖w‖ = distance`, with N(0, sigma²) noise per coordinate.
///
/// Descent is judged against the fixed direction of `w`, so `distance = 0`
/// is the limit from outside the optimum.
pub fn descent_probability(distance: f64, sigma: f64, trials: usize, seed: u64) -> f64 {
    descent_probability_in_dim(1, distance, sigma, trials, seed)
}

pub fn descent_probability_in_dim(
    dim: usize,
    distance: f64,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> f64 {
    assert!(dim >= 1 && trials >= 1, "need dim >= 1 and trials >= 1");
    let mut rng = stream_rng(seed, Stream::Diagnostic, &[dim as u64]);
    let mut dir = vec![0.0; dim];
    let mut hits = 0usize;
    for _ in 0..trials {
        // w = distance·u for a random unit u; the noisy gradient is w + n
        let mut norm = 0.0;
        for d in dir.iter_mut() {
            *d = rng.sample::<f64, _>(StandardNormal);
            norm += *d * *d;
        }
        let norm = norm.sqrt();
        let mut along = 0.0;
        for &d in &dir {
            let u = d / norm;
            along += (distance * u + sigma * rng.sample::<f64, _>(StandardNormal)) * u;
        }
        hits += usize::from(along > 0.0);
    }
    hits as f64 / trials as f64
}
