//! Sentence encoder (embeddings, learned positions, optional self-attention
//! blocks, mean pooling) and the 23-way linear classification head, with
//! hand-written backpropagation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::{dot, Matrix, Real};
use crate::ciu::NUM_CIUS;
use crate::error::NeuralError;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// Encoder shape. The vocabulary size comes from the [`super::Vocab`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderConfig {
    pub dim: usize,
    pub blocks: usize,
    /// Rows of the learned position table; 0 disables positions. Positions
    /// past the end reuse the last row.
    pub max_positions: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig { dim: 32, blocks: 1, max_positions: 32 }
    }
}

/// Post-norm transformer block: `LN(x + Attn(x))` then `LN(h + FFN(h))`
/// with a single attention head and a tanh-approximated GELU.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionBlock<F> {
    pub wq: Matrix<F>,
    pub wk: Matrix<F>,
    pub wv: Matrix<F>,
    pub wo: Matrix<F>,
    pub ln1_gain: Vec<F>,
    pub ln1_bias: Vec<F>,
    pub ff_in: Matrix<F>,
    pub ff_in_bias: Vec<F>,
    pub ff_out: Matrix<F>,
    pub ff_out_bias: Vec<F>,
    pub ln2_gain: Vec<F>,
    pub ln2_bias: Vec<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams<F> {
    pub embedding: Matrix<F>,
    pub positions: Matrix<F>,
    pub blocks: Vec<AttentionBlock<F>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierHead<F> {
    pub weight: Matrix<F>,
    pub bias: Vec<F>,
    /// Dropout probability applied to the pooled vector in training mode.
    pub dropout: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<F> {
    pub encoder: EncoderParams<F>,
    pub head: ClassifierHead<F>,
}

/// Which optimizer parameter group a tensor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    Encoder,
    Head,
}

pub struct TensorView<'a, F> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [F],
    pub group: ParamGroup,
    /// Biases and layer-norm parameters are exempt from weight decay.
    pub decay: bool,
}

pub struct TensorViewMut<'a, F> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [F],
    pub group: ParamGroup,
    pub decay: bool,
}

fn normal_matrix<F: Real, R: Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Matrix<F> {
    let dist = Normal::new(0.0, std).expect("finite std");
    Matrix::from_fn(rows, cols, |_, _| F::of(dist.sample(rng)))
}

impl<F: Real> AttentionBlock<F> {
    fn init<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let s = 1.0 / libm::sqrt(dim as f64);
        let hidden = 4 * dim;
        AttentionBlock {
            wq: normal_matrix(dim, dim, s, rng),
            wk: normal_matrix(dim, dim, s, rng),
            wv: normal_matrix(dim, dim, s, rng),
            wo: normal_matrix(dim, dim, s, rng),
            ln1_gain: vec![F::one(); dim],
            ln1_bias: vec![F::zero(); dim],
            ff_in: normal_matrix(dim, hidden, s, rng),
            ff_in_bias: vec![F::zero(); hidden],
            ff_out: normal_matrix(hidden, dim, 1.0 / libm::sqrt(hidden as f64), rng),
            ff_out_bias: vec![F::zero(); dim],
            ln2_gain: vec![F::one(); dim],
            ln2_bias: vec![F::zero(); dim],
        }
    }

    fn zeros(dim: usize) -> Self {
        AttentionBlock {
            wq: Matrix::zeros(dim, dim),
            wk: Matrix::zeros(dim, dim),
            wv: Matrix::zeros(dim, dim),
            wo: Matrix::zeros(dim, dim),
            ln1_gain: vec![F::zero(); dim],
            ln1_bias: vec![F::zero(); dim],
            ff_in: Matrix::zeros(dim, 4 * dim),
            ff_in_bias: vec![F::zero(); 4 * dim],
            ff_out: Matrix::zeros(4 * dim, dim),
            ff_out_bias: vec![F::zero(); dim],
            ln2_gain: vec![F::zero(); dim],
            ln2_bias: vec![F::zero(); dim],
        }
    }
}

impl<F: Real> Model<F> {
    /// Randomly initialized model for a vocabulary of `vocab_size` entries.
    pub fn init<R: Rng>(vocab_size: usize, cfg: &EncoderConfig, dropout: f64, rng: &mut R) -> Self {
        let d = cfg.dim;
        let s = 1.0 / libm::sqrt(d as f64);
        let embedding = normal_matrix(vocab_size, d, s, rng);
        let positions = normal_matrix(cfg.max_positions, d, 0.1 * s, rng);
        let blocks = (0..cfg.blocks).map(|_| AttentionBlock::init(d, rng)).collect();
        let weight = normal_matrix(NUM_CIUS, d, 0.02, rng);
        Model {
            encoder: EncoderParams { embedding, positions, blocks },
            head: ClassifierHead { weight, bias: vec![F::zero(); NUM_CIUS], dropout },
        }
    }

    /// Zero-valued model of the same shape, used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        let d = self.dim();
        Model {
            encoder: EncoderParams {
                embedding: Matrix::zeros(self.encoder.embedding.rows(), d),
                positions: Matrix::zeros(self.encoder.positions.rows(), d),
                blocks: self.encoder.blocks.iter().map(|_| AttentionBlock::zeros(d)).collect(),
            },
            head: ClassifierHead { weight: Matrix::zeros(NUM_CIUS, d), bias: vec![F::zero(); NUM_CIUS], dropout: self.head.dropout },
        }
    }

    pub fn dim(&self) -> usize {
        self.encoder.embedding.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.encoder.embedding.rows()
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig { dim: self.dim(), blocks: self.encoder.blocks.len(), max_positions: self.encoder.positions.rows() }
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v = F::zero());
        }
    }

    /// Every parameter tensor in a fixed order.
    pub fn tensors(&self) -> Vec<TensorView<'_, F>> {
        let mut out = Vec::new();
        let enc = &self.encoder;
        fn mat<F: Real>(name: String, m: &Matrix<F>, group: ParamGroup, decay: bool) -> TensorView<'_, F> {
            TensorView { name, shape: vec![m.rows(), m.cols()], data: m.data(), group, decay }
        }
        fn vect<F: Real>(name: String, v: &[F], group: ParamGroup) -> TensorView<'_, F> {
            TensorView { name, shape: vec![v.len()], data: v, group, decay: false }
        }
        out.push(mat("encoder.embedding".into(), &enc.embedding, ParamGroup::Encoder, true));
        out.push(mat("encoder.positions".into(), &enc.positions, ParamGroup::Encoder, true));
        for (i, b) in enc.blocks.iter().enumerate() {
            let p = |s: &str| format!("encoder.blocks.{i}.{s}");
            out.push(mat(p("wq"), &b.wq, ParamGroup::Encoder, true));
            out.push(mat(p("wk"), &b.wk, ParamGroup::Encoder, true));
            out.push(mat(p("wv"), &b.wv, ParamGroup::Encoder, true));
            out.push(mat(p("wo"), &b.wo, ParamGroup::Encoder, true));
            out.push(vect(p("ln1_gain"), &b.ln1_gain, ParamGroup::Encoder));
            out.push(vect(p("ln1_bias"), &b.ln1_bias, ParamGroup::Encoder));
            out.push(mat(p("ff_in"), &b.ff_in, ParamGroup::Encoder, true));
            out.push(vect(p("ff_in_bias"), &b.ff_in_bias, ParamGroup::Encoder));
            out.push(mat(p("ff_out"), &b.ff_out, ParamGroup::Encoder, true));
            out.push(vect(p("ff_out_bias"), &b.ff_out_bias, ParamGroup::Encoder));
            out.push(vect(p("ln2_gain"), &b.ln2_gain, ParamGroup::Encoder));
            out.push(vect(p("ln2_bias"), &b.ln2_bias, ParamGroup::Encoder));
        }
        out.push(mat("head.weight".into(), &self.head.weight, ParamGroup::Head, true));
        out.push(vect("head.bias".into(), &self.head.bias, ParamGroup::Head));
        out
    }

    /// Mutable counterpart of [`Model::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_, F>> {
        let mut out = Vec::new();
        fn mat<F: Real>(name: String, m: &mut Matrix<F>, group: ParamGroup) -> TensorViewMut<'_, F> {
            let shape = vec![m.rows(), m.cols()];
            TensorViewMut { name, shape, data: m.data_mut(), group, decay: true }
        }
        fn vect<F: Real>(name: String, v: &mut [F], group: ParamGroup) -> TensorViewMut<'_, F> {
            TensorViewMut { name, shape: vec![v.len()], data: v, group, decay: false }
        }
        let enc = &mut self.encoder;
        out.push(mat("encoder.embedding".into(), &mut enc.embedding, ParamGroup::Encoder));
        out.push(mat("encoder.positions".into(), &mut enc.positions, ParamGroup::Encoder));
        for (i, b) in enc.blocks.iter_mut().enumerate() {
            let p = |s: &str| format!("encoder.blocks.{i}.{s}");
            out.push(mat(p("wq"), &mut b.wq, ParamGroup::Encoder));
            out.push(mat(p("wk"), &mut b.wk, ParamGroup::Encoder));
            out.push(mat(p("wv"), &mut b.wv, ParamGroup::Encoder));
            out.push(mat(p("wo"), &mut b.wo, ParamGroup::Encoder));
            out.push(vect(p("ln1_gain"), &mut b.ln1_gain, ParamGroup::Encoder));
            out.push(vect(p("ln1_bias"), &mut b.ln1_bias, ParamGroup::Encoder));
            out.push(mat(p("ff_in"), &mut b.ff_in, ParamGroup::Encoder));
            out.push(vect(p("ff_in_bias"), &mut b.ff_in_bias, ParamGroup::Encoder));
            out.push(mat(p("ff_out"), &mut b.ff_out, ParamGroup::Encoder));
            out.push(vect(p("ff_out_bias"), &mut b.ff_out_bias, ParamGroup::Encoder));
            out.push(vect(p("ln2_gain"), &mut b.ln2_gain, ParamGroup::Encoder));
            out.push(vect(p("ln2_bias"), &mut b.ln2_bias, ParamGroup::Encoder));
        }
        out.push(mat("head.weight".into(), &mut self.head.weight, ParamGroup::Head));
        out.push(vect("head.bias".into(), &mut self.head.bias, ParamGroup::Head));
        out
    }

    /// Rebuilds a model from named tensors as produced by [`Model::tensors`].
    pub fn from_tensors(tensors: Vec<(String, Vec<usize>, Vec<F>)>, dropout: f64) -> Result<Self, NeuralError> {
        let mut map: alloc::collections::BTreeMap<String, (Vec<usize>, Vec<F>)> = Default::default();
        for (name, shape, data) in tensors {
            if map.insert(name.clone(), (shape, data)).is_some() {
                return Err(NeuralError::Tensor { name, message: "duplicate tensor name".into() });
            }
        }
        let mut take = |name: &str| map.remove(name).ok_or_else(|| NeuralError::Tensor { name: name.into(), message: "missing".into() });
        let mut take_mat = |name: &str| -> Result<Matrix<F>, NeuralError> {
            let (shape, data) = take(name)?;
            if shape.len() != 2 {
                return Err(NeuralError::Tensor { name: name.into(), message: format!("expected 2 dims, found {}", shape.len()) });
            }
            Matrix::from_vec(shape[0], shape[1], data)
                .ok_or_else(|| NeuralError::Tensor { name: name.into(), message: "payload does not match shape".into() })
        };
        let embedding = take_mat("encoder.embedding")?;
        let positions = take_mat("encoder.positions")?;
        let head_weight = take_mat("head.weight")?;
        let mut blocks = Vec::new();
        let mut i = 0;
        while map.contains_key(&format!("encoder.blocks.{i}.wq")) {
            let p = |s: &str| format!("encoder.blocks.{i}.{s}");
            let mut m = |s: &str| -> Result<Matrix<F>, NeuralError> {
                let name = p(s);
                let (shape, data) =
                    map.remove(&name).ok_or_else(|| NeuralError::Tensor { name: name.clone(), message: "missing".into() })?;
                if shape.len() != 2 {
                    return Err(NeuralError::Tensor { name, message: "expected 2 dims".into() });
                }
                Matrix::from_vec(shape[0], shape[1], data)
                    .ok_or_else(|| NeuralError::Tensor { name, message: "payload does not match shape".into() })
            };
            let (wq, wk, wv, wo, ff_in, ff_out) = (m("wq")?, m("wk")?, m("wv")?, m("wo")?, m("ff_in")?, m("ff_out")?);
            let mut v = |s: &str| -> Result<Vec<F>, NeuralError> {
                let name = p(s);
                let (shape, data) =
                    map.remove(&name).ok_or_else(|| NeuralError::Tensor { name: name.clone(), message: "missing".into() })?;
                if shape.len() != 1 || shape[0] != data.len() {
                    return Err(NeuralError::Tensor { name, message: "expected a vector".into() });
                }
                Ok(data)
            };
            blocks.push(AttentionBlock {
                wq,
                wk,
                wv,
                wo,
                ln1_gain: v("ln1_gain")?,
                ln1_bias: v("ln1_bias")?,
                ff_in,
                ff_in_bias: v("ff_in_bias")?,
                ff_out,
                ff_out_bias: v("ff_out_bias")?,
                ln2_gain: v("ln2_gain")?,
                ln2_bias: v("ln2_bias")?,
            });
            i += 1;
        }
        let (bias_shape, bias) =
            map.remove("head.bias").ok_or_else(|| NeuralError::Tensor { name: "head.bias".into(), message: "missing".into() })?;
        if let Some(name) = map.keys().next() {
            return Err(NeuralError::Tensor { name: name.clone(), message: "unexpected tensor".into() });
        }
        if bias_shape != [NUM_CIUS] || bias.len() != NUM_CIUS {
            return Err(NeuralError::Tensor { name: "head.bias".into(), message: format!("expected [{NUM_CIUS}]") });
        }
        let model =
            Model { encoder: EncoderParams { embedding, positions, blocks }, head: ClassifierHead { weight: head_weight, bias, dropout } };
        model.validate()?;
        Ok(model)
    }

    /// Checks that every tensor agrees with the embedding width.
    pub fn validate(&self) -> Result<(), NeuralError> {
        let d = self.dim();
        if d == 0 {
            return Err(NeuralError::InvalidConfig("encoder width must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.head.dropout) {
            return Err(NeuralError::InvalidConfig(format!("dropout {} outside [0, 1)", self.head.dropout)));
        }
        let expect = |name: &str, got: &[usize], want: &[usize]| {
            if got == want {
                Ok(())
            } else {
                Err(NeuralError::Tensor { name: name.into(), message: format!("shape {got:?}, expected {want:?}") })
            }
        };
        let v = self.vocab_size();
        for t in self.tensors() {
            let want: Vec<usize> = match t.name.rsplit('.').next().unwrap_or("") {
                "embedding" => vec![v, d],
                "positions" => vec![self.encoder.positions.rows(), d],
                "wq" | "wk" | "wv" | "wo" => vec![d, d],
                "ff_in" => vec![d, 4 * d],
                "ff_in_bias" => vec![4 * d],
                "ff_out" => vec![4 * d, d],
                "weight" => vec![NUM_CIUS, d],
                "bias" => vec![NUM_CIUS],
                _ => vec![d],
            };
            expect(&t.name, &t.shape, &want)?;
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(NeuralError::Tensor { name: t.name, message: "non-finite value".into() });
            }
        }
        Ok(())
    }

    /// Converts every parameter to another float width.
    pub fn cast<G: Real>(&self) -> Model<G> {
        let conv_m = |m: &Matrix<F>| Matrix::from_vec(m.rows(), m.cols(), m.data().iter().map(|v| G::of(v.as_f64())).collect()).unwrap();
        let conv_v = |v: &[F]| v.iter().map(|x| G::of(x.as_f64())).collect::<Vec<G>>();
        Model {
            encoder: EncoderParams {
                embedding: conv_m(&self.encoder.embedding),
                positions: conv_m(&self.encoder.positions),
                blocks: self
                    .encoder
                    .blocks
                    .iter()
                    .map(|b| AttentionBlock {
                        wq: conv_m(&b.wq),
                        wk: conv_m(&b.wk),
                        wv: conv_m(&b.wv),
                        wo: conv_m(&b.wo),
                        ln1_gain: conv_v(&b.ln1_gain),
                        ln1_bias: conv_v(&b.ln1_bias),
                        ff_in: conv_m(&b.ff_in),
                        ff_in_bias: conv_v(&b.ff_in_bias),
                        ff_out: conv_m(&b.ff_out),
                        ff_out_bias: conv_v(&b.ff_out_bias),
                        ln2_gain: conv_v(&b.ln2_gain),
                        ln2_bias: conv_v(&b.ln2_bias),
                    })
                    .collect(),
            },
            head: ClassifierHead { weight: conv_m(&self.head.weight), bias: conv_v(&self.head.bias), dropout: self.head.dropout },
        }
    }
}

/// Train mode applies dropout with the supplied mask source; eval mode is
/// deterministic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout mask for a pooled vector of width `dim`.
pub fn dropout_mask<F: Real, R: Rng>(dim: usize, rate: f64, rng: &mut R) -> Vec<F> {
    if rate <= 0.0 {
        return vec![F::one(); dim];
    }
    let keep = F::of(1.0 / (1.0 - rate));
    (0..dim).map(|_| if rng.random::<f64>() < rate { F::zero() } else { keep }).collect()
}

struct LayerNormCache<F> {
    normed: Matrix<F>,
    inv_std: Vec<F>,
}

fn layer_norm<F: Real>(x: &Matrix<F>, gain: &[F], bias: &[F]) -> (Matrix<F>, LayerNormCache<F>) {
    let d = x.cols();
    let n = F::of(d as f64);
    let mut normed = Matrix::zeros(x.rows(), d);
    let mut out = Matrix::zeros(x.rows(), d);
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().fold(F::zero(), |a, &v| a + v) / n;
        let var = row.iter().fold(F::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
        let inv = F::one() / (var + F::of(LN_EPS)).sqrt();
        inv_std.push(inv);
        for c in 0..d {
            let h = (row[c] - mean) * inv;
            normed.row_mut(r)[c] = h;
            out.row_mut(r)[c] = gain[c] * h + bias[c];
        }
    }
    (out, LayerNormCache { normed, inv_std })
}

fn layer_norm_backward<F: Real>(dout: &Matrix<F>, cache: &LayerNormCache<F>, gain: &[F], dgain: &mut [F], dbias: &mut [F]) -> Matrix<F> {
    let d = dout.cols();
    let n = F::of(d as f64);
    let mut dx = Matrix::zeros(dout.rows(), d);
    for r in 0..dout.rows() {
        let dy = dout.row(r);
        let xhat = cache.normed.row(r);
        let mut dxhat = vec![F::zero(); d];
        let mut mean_dxhat = F::zero();
        let mut mean_dxhat_xhat = F::zero();
        for c in 0..d {
            dgain[c] += dy[c] * xhat[c];
            dbias[c] += dy[c];
            dxhat[c] = dy[c] * gain[c];
            mean_dxhat += dxhat[c];
            mean_dxhat_xhat += dxhat[c] * xhat[c];
        }
        mean_dxhat /= n;
        mean_dxhat_xhat /= n;
        let inv = cache.inv_std[r];
        for c in 0..d {
            dx.row_mut(r)[c] = inv * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
        }
    }
    dx
}

#[inline]
fn gelu<F: Real>(x: F) -> F {
    let u = F::of(GELU_C) * (x + F::of(GELU_A) * x * x * x);
    F::of(0.5) * x * (F::one() + u.tanh())
}

#[inline]
fn gelu_grad<F: Real>(x: F) -> F {
    let u = F::of(GELU_C) * (x + F::of(GELU_A) * x * x * x);
    let t = u.tanh();
    let du = F::of(GELU_C) * (F::one() + F::of(3.0 * GELU_A) * x * x);
    F::of(0.5) * (F::one() + t) + F::of(0.5) * x * (F::one() - t * t) * du
}

struct BlockCache<F> {
    input: Matrix<F>,
    q: Matrix<F>,
    k: Matrix<F>,
    v: Matrix<F>,
    attn: Matrix<F>,
    ctx: Matrix<F>,
    ln1: LayerNormCache<F>,
    h: Matrix<F>,
    ff_pre: Matrix<F>,
    ff_act: Matrix<F>,
    ln2: LayerNormCache<F>,
}

impl<F: Real> AttentionBlock<F> {
    fn forward(&self, x: Matrix<F>) -> (Matrix<F>, BlockCache<F>) {
        let d = x.cols();
        let scale = F::of(1.0 / libm::sqrt(d as f64));
        let q = x.matmul(&self.wq);
        let k = x.matmul(&self.wk);
        let v = x.matmul(&self.wv);
        let mut attn = q.matmul_t(&k);
        for r in 0..attn.rows() {
            let row = attn.row_mut(r);
            let mut max = F::neg_infinity();
            for s in row.iter_mut() {
                *s *= scale;
                max = max.max(*s);
            }
            let mut total = F::zero();
            for s in row.iter_mut() {
                *s = (*s - max).exp();
                total += *s;
            }
            for s in row.iter_mut() {
                *s /= total;
            }
        }
        let ctx = attn.matmul(&v);
        let mut pre1 = ctx.matmul(&self.wo);
        pre1.add_assign(&x);
        let (h, ln1) = layer_norm(&pre1, &self.ln1_gain, &self.ln1_bias);
        let mut ff_pre = h.matmul(&self.ff_in);
        ff_pre.add_row_vector(&self.ff_in_bias);
        let mut ff_act = ff_pre.clone();
        ff_act.data_mut().iter_mut().for_each(|v| *v = gelu(*v));
        let mut pre2 = ff_act.matmul(&self.ff_out);
        pre2.add_row_vector(&self.ff_out_bias);
        pre2.add_assign(&h);
        let (out, ln2) = layer_norm(&pre2, &self.ln2_gain, &self.ln2_bias);
        (out, BlockCache { input: x, q, k, v, attn, ctx, ln1, h, ff_pre, ff_act, ln2 })
    }

    /// Returns the gradient with respect to the block input.
    fn backward(&self, dout: &Matrix<F>, c: &BlockCache<F>, g: &mut AttentionBlock<F>) -> Matrix<F> {
        let d = dout.cols();
        let scale = F::of(1.0 / libm::sqrt(d as f64));

        let dpre2 = layer_norm_backward(dout, &c.ln2, &self.ln2_gain, &mut g.ln2_gain, &mut g.ln2_bias);
        // pre2 = gelu(ff_pre) · ff_out + b + h
        c.ff_act.t_matmul_acc(&dpre2, &mut g.ff_out);
        dpre2.col_sum_acc(&mut g.ff_out_bias);
        let mut dff = dpre2.matmul_t(&self.ff_out);
        for (dv, &x) in dff.data_mut().iter_mut().zip(c.ff_pre.data()) {
            *dv *= gelu_grad(x);
        }
        c.h.t_matmul_acc(&dff, &mut g.ff_in);
        dff.col_sum_acc(&mut g.ff_in_bias);
        let mut dh = dff.matmul_t(&self.ff_in);
        dh.add_assign(&dpre2);

        let dpre1 = layer_norm_backward(&dh, &c.ln1, &self.ln1_gain, &mut g.ln1_gain, &mut g.ln1_bias);
        // pre1 = attn · v · wo + x
        c.ctx.t_matmul_acc(&dpre1, &mut g.wo);
        let dctx = dpre1.matmul_t(&self.wo);
        let dattn = dctx.matmul_t(&c.v);
        let mut dv = Matrix::zeros(c.v.rows(), c.v.cols());
        c.attn.t_matmul_acc(&dctx, &mut dv);

        let mut dscore = Matrix::zeros(c.attn.rows(), c.attn.cols());
        for r in 0..c.attn.rows() {
            let a = c.attn.row(r);
            let da = dattn.row(r);
            let inner = dot(a, da);
            for (j, out) in dscore.row_mut(r).iter_mut().enumerate() {
                *out = a[j] * (da[j] - inner) * scale;
            }
        }
        let dq = dscore.matmul(&c.k);
        let mut dk = Matrix::zeros(c.k.rows(), c.k.cols());
        dscore.t_matmul_acc(&c.q, &mut dk);

        c.input.t_matmul_acc(&dq, &mut g.wq);
        c.input.t_matmul_acc(&dk, &mut g.wk);
        c.input.t_matmul_acc(&dv, &mut g.wv);
        let mut dx = dpre1;
        dx.add_assign(&dq.matmul_t(&self.wq));
        dx.add_assign(&dk.matmul_t(&self.wk));
        dx.add_assign(&dv.matmul_t(&self.wv));
        dx
    }
}

/// Intermediate values kept for the backward pass.
pub struct ForwardCache<F> {
    indices: Vec<usize>,
    blocks: Vec<BlockCache<F>>,
    mask: Option<Vec<F>>,
    pooled: Vec<F>,
}

impl<F> ForwardCache<F> {
    /// Mean-pooled encoder output (before dropout).
    pub fn pooled(&self) -> &[F] {
        &self.pooled
    }
}

impl<F: Real> EncoderParams<F> {
    fn position_row(&self, t: usize) -> Option<&[F]> {
        let rows = self.positions.rows();
        (rows > 0).then(|| self.positions.row(t.min(rows - 1)))
    }

    fn encode(&self, indices: &[usize]) -> Result<(Vec<F>, Vec<BlockCache<F>>), NeuralError> {
        if indices.is_empty() {
            return Err(NeuralError::EmptyInput);
        }
        let d = self.embedding.cols();
        let vocab = self.embedding.rows();
        let mut x = Matrix::zeros(indices.len(), d);
        for (t, &idx) in indices.iter().enumerate() {
            if idx >= vocab {
                return Err(NeuralError::DimensionMismatch { expected: vocab, found: idx + 1 });
            }
            let row = x.row_mut(t);
            row.copy_from_slice(self.embedding.row(idx));
            if let Some(p) = self.position_row(t) {
                for (o, &v) in row.iter_mut().zip(p) {
                    *o += v;
                }
            }
        }
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (out, cache) = block.forward(x);
            caches.push(cache);
            x = out;
        }
        let n = F::of(indices.len() as f64);
        let mut pooled = vec![F::zero(); d];
        x.col_sum_acc(&mut pooled);
        pooled.iter_mut().for_each(|v| *v /= n);
        Ok((pooled, caches))
    }
}

impl<F: Real> ClassifierHead<F> {
    /// `weight · (pooled ⊙ mask) + bias`
    pub fn logits(&self, pooled: &[F], mask: Option<&[F]>) -> [F; NUM_CIUS] {
        let mut s = [F::zero(); NUM_CIUS];
        for (k, out) in s.iter_mut().enumerate() {
            let w = self.weight.row(k);
            let mut acc = self.bias[k];
            for (j, &p) in pooled.iter().enumerate() {
                let z = match mask {
                    Some(m) => p * m[j],
                    None => p,
                };
                acc += w[j] * z;
            }
            *out = acc;
        }
        s
    }

    /// Accumulates head gradients and returns d(loss)/d(pooled).
    pub fn backward(&self, dlogits: &[F; NUM_CIUS], pooled: &[F], mask: Option<&[F]>, grad: &mut ClassifierHead<F>) -> Vec<F> {
        let d = pooled.len();
        let mut dz = vec![F::zero(); d];
        for (k, &ds) in dlogits.iter().enumerate() {
            grad.bias[k] += ds;
            let w = self.weight.row(k);
            let gw = grad.weight.row_mut(k);
            for j in 0..d {
                let z = match mask {
                    Some(m) => pooled[j] * m[j],
                    None => pooled[j],
                };
                gw[j] += ds * z;
                dz[j] += ds * w[j];
            }
        }
        if let Some(m) = mask {
            for (g, &mv) in dz.iter_mut().zip(m) {
                *g *= mv;
            }
        }
        dz
    }
}

impl<F: Real> Model<F> {
    /// Forward pass for one sentence. `mask` is the dropout mask to apply
    /// (train mode); `None` means eval mode.
    pub fn forward_with_mask(&self, indices: &[usize], mask: Option<Vec<F>>) -> Result<([F; NUM_CIUS], ForwardCache<F>), NeuralError> {
        let (pooled, blocks) = self.encoder.encode(indices)?;
        if let Some(m) = &mask {
            if m.len() != pooled.len() {
                return Err(NeuralError::DimensionMismatch { expected: pooled.len(), found: m.len() });
            }
        }
        let logits = self.head.logits(&pooled, mask.as_deref());
        Ok((logits, ForwardCache { indices: indices.to_vec(), blocks, mask, pooled }))
    }

    pub fn forward<R: Rng>(&self, indices: &[usize], mode: Mode, rng: &mut R) -> Result<([F; NUM_CIUS], ForwardCache<F>), NeuralError> {
        let mask = match mode {
            Mode::Train if self.head.dropout > 0.0 => Some(dropout_mask(self.dim(), self.head.dropout, rng)),
            _ => None,
        };
        self.forward_with_mask(indices, mask)
    }

    /// Eval-mode logits.
    pub fn logits(&self, indices: &[usize]) -> Result<[F; NUM_CIUS], NeuralError> {
        self.forward_with_mask(indices, None).map(|(s, _)| s)
    }

    /// Accumulates parameter gradients into `grad` given d(loss)/d(logits).
    pub fn backward(&self, dlogits: &[F; NUM_CIUS], cache: &ForwardCache<F>, grad: &mut Model<F>) {
        let dpooled = self.head.backward(dlogits, &cache.pooled, cache.mask.as_deref(), &mut grad.head);
        let n = cache.indices.len();
        let inv_n = F::one() / F::of(n as f64);
        let mut dx = Matrix::from_fn(n, dpooled.len(), |_, c| dpooled[c] * inv_n);
        for (block, (bc, bg)) in self.encoder.blocks.iter().zip(cache.blocks.iter().zip(grad.encoder.blocks.iter_mut())).rev() {
            dx = block.backward(&dx, bc, bg);
        }
        let prow = self.encoder.positions.rows();
        for (t, &idx) in cache.indices.iter().enumerate() {
            let g = dx.row(t);
            for (o, &v) in grad.encoder.embedding.row_mut(idx).iter_mut().zip(g) {
                *o += v;
            }
            if prow > 0 {
                for (o, &v) in grad.encoder.positions.row_mut(t.min(prow - 1)).iter_mut().zip(g) {
                    *o += v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    #[test]
    fn zero_params_give_bias() {
        let mut m: Model<f64> = Model::init(5, &EncoderConfig { dim: 4, blocks: 0, max_positions: 0 }, 0.0, &mut rng());
        m.encoder.embedding.fill_zero();
        m.head.weight.fill_zero();
        m.head.bias = (0..NUM_CIUS).map(|k| k as f64 * 0.1 - 1.0).collect();
        let s = m.logits(&[2, 3, 4]).unwrap();
        assert_eq!(&s[..], &m.head.bias[..]);
    }

    #[test]
    fn one_hot_embedding() {
        let d = 5;
        let mut m: Model<f64> = Model::init(6, &EncoderConfig { dim: d, blocks: 0, max_positions: 0 }, 0.0, &mut rng());
        m.encoder.embedding = Matrix::from_fn(6, d, |r, c| if r == c { 1.0 } else { 0.0 });
        m.head.weight = Matrix::from_fn(NUM_CIUS, d, |r, c| if r == 7 && c == 3 { 1.0 } else { 0.0 });
        m.head.bias = vec![0.25; NUM_CIUS];
        let s = m.logits(&[3]).unwrap();
        assert_eq!(s[7], 1.25);
        assert_eq!(s[0], 0.25);
    }

    #[test]
    fn empty_input_rejected() {
        let m: Model<f32> = Model::init(4, &EncoderConfig::default(), 0.2, &mut rng());
        assert!(matches!(m.logits(&[]), Err(NeuralError::EmptyInput)));
        assert!(matches!(m.logits(&[9]), Err(NeuralError::DimensionMismatch { .. })));
    }

    #[test]
    fn eval_mode_is_deterministic_and_train_mode_drops() {
        let m: Model<f64> = Model::init(10, &EncoderConfig { dim: 8, blocks: 1, max_positions: 4 }, 0.5, &mut rng());
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        let a = m.forward(&[2, 3, 4], Mode::Eval, &mut r1).unwrap().0;
        let b = m.forward(&[2, 3, 4], Mode::Eval, &mut r2).unwrap().0;
        assert_eq!(a, b);
        let mut saw_difference = false;
        for _ in 0..5 {
            let t = m.forward(&[2, 3, 4], Mode::Train, &mut r1).unwrap().0;
            saw_difference |= t != a;
        }
        assert!(saw_difference);
    }

    #[test]
    fn tensor_round_trip() {
        let m: Model<f32> = Model::init(7, &EncoderConfig { dim: 4, blocks: 2, max_positions: 3 }, 0.2, &mut rng());
        let tensors = m.tensors().into_iter().map(|t| (t.name, t.shape, t.data.to_vec())).collect();
        assert_eq!(Model::from_tensors(tensors, 0.2).unwrap(), m);
        let mut broken: Vec<_> = m.tensors().into_iter().map(|t| (t.name, t.shape, t.data.to_vec())).collect();
        broken.retain(|t| t.0 != "head.bias");
        assert!(Model::<f32>::from_tensors(broken, 0.2).is_err());
    }
}
