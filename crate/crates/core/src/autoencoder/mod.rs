//! Stacked-RBM pretraining, unfolding into unimodal (DAE) and bimodal
//! (BDAE) deep autoencoders, unsupervised fine-tuning with tied
//! weights, and shared-representation encoding.
//!
//! A BDAE ties every decoder weight to the transpose of its encoder
//! counterpart. A DAE ties only the first/top pair: its encoder takes
//! one modality and its decoder reconstructs both, the missing
//! modality's pathway being fresh untied weights.

mod io;

pub use io::{deserialize_model, floats_line, serialize_model};

use crate::error::{CoreError, Result};
use crate::numeric::{sigmoid, Matrix, RngStream};
use crate::rbm::{self, CdConfig, RbmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Dae,
    Bdae,
}

impl NetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NetKind::Dae => "DAE",
            NetKind::Bdae => "BDAE",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Modality {
    pub name: String,
    pub dim: usize,
    pub hidden: usize,
}

/// Architecture of one DAE or BDAE stack.
///
/// DAE: exactly one input modality plus `dae_output_modality`, the
/// second modality that appears only on the output side. BDAE: exactly
/// two input modalities.
#[derive(Debug, Clone)]
pub struct StackSpec {
    pub kind: NetKind,
    pub modalities: Vec<Modality>,
    pub dae_output_modality: Option<(String, usize)>,
    pub shared: usize,
}

impl StackSpec {
    pub fn bdae(m1: Modality, m2: Modality, shared: usize) -> Self {
        StackSpec {
            kind: NetKind::Bdae,
            modalities: vec![m1, m2],
            dae_output_modality: None,
            shared,
        }
    }

    pub fn dae(input: Modality, output_other: (String, usize), shared: usize) -> Self {
        StackSpec {
            kind: NetKind::Dae,
            modalities: vec![input],
            dae_output_modality: Some(output_other),
            shared,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NetKind::Bdae => {
                if self.modalities.len() != 2 {
                    return Err(CoreError::InvalidArgument(
                        "BDAE requires exactly two modalities".into(),
                    ));
                }
                if self.dae_output_modality.is_some() {
                    return Err(CoreError::InvalidArgument(
                        "BDAE does not take a dae_output_modality".into(),
                    ));
                }
            }
            NetKind::Dae => {
                if self.modalities.len() != 1 {
                    return Err(CoreError::InvalidArgument(
                        "DAE requires exactly one input modality".into(),
                    ));
                }
                if self.dae_output_modality.is_none() {
                    return Err(CoreError::InvalidArgument(
                        "DAE requires the second modality on the output side".into(),
                    ));
                }
            }
        }
        let sizes = self
            .modalities
            .iter()
            .flat_map(|m| [m.dim, m.hidden])
            .chain([self.shared])
            .chain(self.dae_output_modality.iter().map(|(_, d)| *d));
        for s in sizes {
            if s < 1 {
                return Err(CoreError::InvalidArgument(
                    "all layer sizes must be >= 1".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.modalities.iter().map(|m| m.dim).sum()
    }

    pub fn output_dim(&self) -> usize {
        self.input_dim() + self.dae_output_modality.as_ref().map_or(0, |(_, d)| *d)
    }
}

/// One dense sigmoid layer. `mask` (0/1 entries), when present, pins the
/// masked-out weights at zero through every update; the BDAE's bottom
/// layer uses it to keep the two modality pathways disconnected.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub mask: Option<Matrix>,
}

impl Layer {
    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        x.matmul(&self.w)?.add_row_broadcast(&self.b)?.map(sigmoid)
    }
}

/// One tied weight pair: the decoder block must equal the transpose of
/// the encoder block, exactly, after every training step. Ranges are
/// half-open (lo, hi) index pairs into the weight matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieSpec {
    pub enc_layer: usize,
    pub dec_layer: usize,
    pub enc_rows: (usize, usize),
    pub enc_cols: (usize, usize),
    pub dec_rows: (usize, usize),
    pub dec_cols: (usize, usize),
}

/// Column span of one modality in the input or output vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModalitySpan {
    pub name: String,
    pub lo: usize,
    pub hi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepAutoencoder {
    pub kind: NetKind,
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
    pub tie_map: Vec<TieSpec>,
    pub input_layout: Vec<ModalitySpan>,
    pub output_layout: Vec<ModalitySpan>,
}

impl DeepAutoencoder {
    pub fn input_dim(&self) -> usize {
        self.encoder[0].w.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.decoder.last().unwrap().w.cols()
    }

    pub fn shared_dim(&self) -> usize {
        self.encoder.last().unwrap().w.cols()
    }

    /// Maximum |decoder block - encoder block^T| over the tie map.
    /// Zero, exactly, for a well-formed network.
    pub fn max_tie_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for tie in &self.tie_map {
            let enc = &self.encoder[tie.enc_layer].w;
            let dec = &self.decoder[tie.dec_layer].w;
            for (ei, di) in (tie.enc_rows.0..tie.enc_rows.1).zip(tie.dec_cols.0..tie.dec_cols.1) {
                for (ej, dj) in (tie.enc_cols.0..tie.enc_cols.1).zip(tie.dec_rows.0..tie.dec_rows.1)
                {
                    worst = worst.max((enc.get(ei, ej) - dec.get(dj, di)).abs());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    SquaredError,
}

#[derive(Debug, Clone)]
pub struct FineTuneConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub loss: LossKind,
    /// Leaves the decoder untouched during fine-tuning; the encoder is
    /// then trained into whatever coordinate system the decoder fixes.
    /// Only valid for networks without weight ties.
    pub freeze_decoder: bool,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        FineTuneConfig {
            learning_rate: 0.01,
            epochs: 30,
            minibatch_size: 32,
            loss: LossKind::CrossEntropy,
            freeze_decoder: false,
        }
    }
}

impl FineTuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(CoreError::InvalidArgument(
                "fine-tune learning_rate must be > 0".into(),
            ));
        }
        if self.minibatch_size < 1 {
            return Err(CoreError::InvalidArgument(
                "fine-tune minibatch_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Greedy layerwise RBM pretraining.
///
/// BDAE: one RBM per modality, then a joint RBM whose visible layer is
/// the concatenated hidden probabilities. DAE: a first RBM on the input
/// modality, then an upper RBM on its hidden probabilities. Upper-layer
/// inputs are always probabilities, never samples.
pub fn pretrain_stack(
    spec: &StackSpec,
    data: &[&Matrix],
    cfg: &CdConfig,
    rng: &mut RngStream,
) -> Result<Vec<RbmParams>> {
    spec.validate()?;
    if data.len() != self_input_count(spec) {
        return Err(CoreError::InvalidArgument(format!(
            "pretrain_stack: {} data matrices for {} modalities",
            data.len(),
            self_input_count(spec)
        )));
    }
    for (m, d) in spec.modalities.iter().zip(data) {
        if d.cols() != m.dim {
            return Err(CoreError::ShapeMismatch(format!(
                "modality '{}' expects {} columns, data has {}",
                m.name,
                m.dim,
                d.cols()
            )));
        }
    }

    let mut rbms = Vec::new();
    let mut hidden_probs = Vec::new();
    for (m, d) in spec.modalities.iter().zip(data) {
        let init = RbmParams::init(m.dim, m.hidden, rng);
        let (trained, _) = rbm::train(d, &init, cfg, rng)?;
        hidden_probs.push(rbm::hidden_given_visible(d, &trained)?);
        rbms.push(trained);
    }

    let top_input = if hidden_probs.len() == 2 {
        hidden_probs[0].hcat(&hidden_probs[1])?
    } else {
        hidden_probs.pop().unwrap()
    };
    let init = RbmParams::init(top_input.cols(), spec.shared, rng);
    let (top, _) = rbm::train(&top_input, &init, cfg, rng)?;
    rbms.push(top);
    Ok(rbms)
}

fn self_input_count(spec: &StackSpec) -> usize {
    spec.modalities.len()
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let rows = a.rows() + b.rows();
    let cols = a.cols() + b.cols();
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            m.set(r, c, a.get(r, c)).unwrap();
        }
    }
    for r in 0..b.rows() {
        for c in 0..b.cols() {
            m.set(a.rows() + r, a.cols() + c, b.get(r, c)).unwrap();
        }
    }
    m
}

fn ones(rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, vec![1.0; rows * cols]).unwrap()
}

/// Unfolds pretrained RBMs into a deep autoencoder.
///
/// Decoder weights start as encoder transposes; decoder biases are
/// fresh parameters initialized to the RBM visible biases. The DAE's
/// extra output pathway (the modality absent from its input) gets small
/// random weights and zero biases.
pub fn unfold(
    spec: &StackSpec,
    rbms: &[RbmParams],
    rng: &mut RngStream,
) -> Result<DeepAutoencoder> {
    spec.validate()?;
    match spec.kind {
        NetKind::Bdae => unfold_bdae(spec, rbms),
        NetKind::Dae => unfold_dae(spec, rbms, rng),
    }
}

fn unfold_bdae(spec: &StackSpec, rbms: &[RbmParams]) -> Result<DeepAutoencoder> {
    if rbms.len() != 3 {
        return Err(CoreError::InvalidArgument(format!(
            "BDAE unfolding needs 3 RBMs, got {}",
            rbms.len()
        )));
    }
    let (r1, r2, top) = (&rbms[0], &rbms[1], &rbms[2]);
    let (m1, m2) = (&spec.modalities[0], &spec.modalities[1]);
    if r1.n_visible() != m1.dim
        || r1.n_hidden() != m1.hidden
        || r2.n_visible() != m2.dim
        || r2.n_hidden() != m2.hidden
        || top.n_visible() != m1.hidden + m2.hidden
        || top.n_hidden() != spec.shared
    {
        return Err(CoreError::ShapeMismatch(
            "BDAE RBM shapes do not match the stack spec".into(),
        ));
    }

    let bottom_mask = block_diag(&ones(m1.dim, m1.hidden), &ones(m2.dim, m2.hidden));
    let enc0 = Layer {
        w: block_diag(&r1.w, &r2.w),
        b: [r1.hid_bias.clone(), r2.hid_bias.clone()].concat(),
        mask: Some(bottom_mask.clone()),
    };
    let enc1 = Layer {
        w: top.w.clone(),
        b: top.hid_bias.clone(),
        mask: None,
    };
    let dec0 = Layer {
        w: top.w.transpose(),
        b: top.vis_bias.clone(),
        mask: None,
    };
    let dec1 = Layer {
        w: block_diag(&r1.w, &r2.w).transpose(),
        b: [r1.vis_bias.clone(), r2.vis_bias.clone()].concat(),
        mask: Some(bottom_mask.transpose()),
    };

    // three ties: W1 and W2 blocks of the bottom layer, W3 in full
    let tie_map = vec![
        TieSpec {
            enc_layer: 0,
            dec_layer: 1,
            enc_rows: (0, m1.dim),
            enc_cols: (0, m1.hidden),
            dec_rows: (0, m1.hidden),
            dec_cols: (0, m1.dim),
        },
        TieSpec {
            enc_layer: 0,
            dec_layer: 1,
            enc_rows: (m1.dim, m1.dim + m2.dim),
            enc_cols: (m1.hidden, m1.hidden + m2.hidden),
            dec_rows: (m1.hidden, m1.hidden + m2.hidden),
            dec_cols: (m1.dim, m1.dim + m2.dim),
        },
        TieSpec {
            enc_layer: 1,
            dec_layer: 0,
            enc_rows: (0, m1.hidden + m2.hidden),
            enc_cols: (0, spec.shared),
            dec_rows: (0, spec.shared),
            dec_cols: (0, m1.hidden + m2.hidden),
        },
    ];
    let layout = vec![
        ModalitySpan {
            name: m1.name.clone(),
            lo: 0,
            hi: m1.dim,
        },
        ModalitySpan {
            name: m2.name.clone(),
            lo: m1.dim,
            hi: m1.dim + m2.dim,
        },
    ];
    Ok(DeepAutoencoder {
        kind: NetKind::Bdae,
        encoder: vec![enc0, enc1],
        decoder: vec![dec0, dec1],
        tie_map,
        input_layout: layout.clone(),
        output_layout: layout,
    })
}

fn unfold_dae(
    spec: &StackSpec,
    rbms: &[RbmParams],
    rng: &mut RngStream,
) -> Result<DeepAutoencoder> {
    if rbms.len() != 2 {
        return Err(CoreError::InvalidArgument(format!(
            "DAE unfolding needs 2 RBMs, got {}",
            rbms.len()
        )));
    }
    let (r1, top) = (&rbms[0], &rbms[1]);
    let m = &spec.modalities[0];
    let (aux_name, aux_dim) = spec.dae_output_modality.clone().unwrap();
    if r1.n_visible() != m.dim
        || r1.n_hidden() != m.hidden
        || top.n_visible() != m.hidden
        || top.n_hidden() != spec.shared
    {
        return Err(CoreError::ShapeMismatch(
            "DAE RBM shapes do not match the stack spec".into(),
        ));
    }

    let enc0 = Layer {
        w: r1.w.clone(),
        b: r1.hid_bias.clone(),
        mask: None,
    };
    let enc1 = Layer {
        w: top.w.clone(),
        b: top.hid_bias.clone(),
        mask: None,
    };
    // untied decoder half: starts at the transpose but trains freely
    let dec0 = Layer {
        w: top.w.transpose(),
        b: top.vis_bias.clone(),
        mask: None,
    };
    // output layer reconstructs both modalities; only the input
    // modality's block is tied to W1
    let mut w_out = Matrix::zeros(m.hidden, m.dim + aux_dim);
    let w1t = r1.w.transpose();
    for r in 0..m.hidden {
        for c in 0..m.dim {
            w_out.set(r, c, w1t.get(r, c))?;
        }
        for c in 0..aux_dim {
            w_out.set(r, m.dim + c, 0.01 * rng.next_gaussian())?;
        }
    }
    let dec1 = Layer {
        w: w_out,
        b: [r1.vis_bias.clone(), vec![0.0; aux_dim]].concat(),
        mask: None,
    };

    let tie_map = vec![TieSpec {
        enc_layer: 0,
        dec_layer: 1,
        enc_rows: (0, m.dim),
        enc_cols: (0, m.hidden),
        dec_rows: (0, m.hidden),
        dec_cols: (0, m.dim),
    }];
    Ok(DeepAutoencoder {
        kind: NetKind::Dae,
        encoder: vec![enc0, enc1],
        decoder: vec![dec0, dec1],
        tie_map,
        input_layout: vec![ModalitySpan {
            name: m.name.clone(),
            lo: 0,
            hi: m.dim,
        }],
        output_layout: vec![
            ModalitySpan {
                name: m.name.clone(),
                lo: 0,
                hi: m.dim,
            },
            ModalitySpan {
                name: aux_name,
                lo: m.dim,
                hi: m.dim + aux_dim,
            },
        ],
    })
}

fn forward_all(net: &DeepAutoencoder, input: &Matrix) -> Result<Vec<Matrix>> {
    let mut acts = Vec::with_capacity(net.encoder.len() + net.decoder.len());
    let mut x = input.clone();
    for layer in net.encoder.iter().chain(&net.decoder) {
        x = layer.apply(&x)?;
        acts.push(x.clone());
    }
    Ok(acts)
}

/// Middle-layer activations (probabilities, never samples); a pure
/// function of the network and the inputs.
pub fn encode(net: &DeepAutoencoder, rows: &Matrix) -> Result<Matrix> {
    if rows.cols() != net.input_dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "encode: {} columns vs input dim {}",
            rows.cols(),
            net.input_dim()
        )));
    }
    let mut x = rows.clone();
    for layer in &net.encoder {
        x = layer.apply(&x)?;
    }
    Ok(x)
}

/// Full forward pass; output covers every modality in the output
/// layout, all values strictly inside (0,1).
pub fn reconstruct(net: &DeepAutoencoder, rows: &Matrix) -> Result<Matrix> {
    if rows.cols() != net.input_dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "reconstruct: {} columns vs input dim {}",
            rows.cols(),
            net.input_dim()
        )));
    }
    Ok(forward_all(net, rows)?.pop().unwrap())
}

/// Mean per-row reconstruction loss of `net` on (input, target).
pub fn reconstruction_loss(
    net: &DeepAutoencoder,
    input: &Matrix,
    target: &Matrix,
    loss: LossKind,
) -> Result<f64> {
    let y = reconstruct(net, input)?;
    Ok(loss_value(&y, target, loss))
}

fn loss_value(y: &Matrix, t: &Matrix, loss: LossKind) -> f64 {
    let n = y.rows() as f64;
    match loss {
        LossKind::CrossEntropy => {
            let eps = 1e-12;
            y.data()
                .iter()
                .zip(t.data())
                .map(|(&yi, &ti)| {
                    let yi = yi.clamp(eps, 1.0 - eps);
                    -(ti * yi.ln() + (1.0 - ti) * (1.0 - yi).ln())
                })
                .sum::<f64>()
                / n
        }
        LossKind::SquaredError => {
            y.data()
                .iter()
                .zip(t.data())
                .map(|(&yi, &ti)| 0.5 * (yi - ti) * (yi - ti))
                .sum::<f64>()
                / n
        }
    }
}

/// Unsupervised backprop fine-tuning.
///
/// Gradients flow through the whole unfolded network; each tied pair
/// receives the sum of its encoder-position and decoder-position
/// gradients and is re-synchronized after every step, so the tie holds
/// exactly. Returns the tuned network and a per-epoch loss trace.
pub fn fine_tune(
    net: &DeepAutoencoder,
    input: &Matrix,
    target: &Matrix,
    cfg: &FineTuneConfig,
    rng: &mut RngStream,
) -> Result<(DeepAutoencoder, Vec<f64>)> {
    cfg.validate()?;
    if cfg.freeze_decoder && !net.tie_map.is_empty() {
        return Err(CoreError::InvalidArgument(
            "freeze_decoder is incompatible with tied weights".into(),
        ));
    }
    if input.cols() != net.input_dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "fine_tune: input has {} columns, net expects {}",
            input.cols(),
            net.input_dim()
        )));
    }
    if target.cols() != net.output_dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "fine_tune: target has {} columns, net outputs {}",
            target.cols(),
            net.output_dim()
        )));
    }
    if input.rows() != target.rows() {
        return Err(CoreError::ShapeMismatch(
            "fine_tune: input/target row mismatch".into(),
        ));
    }

    let mut net = net.clone();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..input.rows()).collect();

    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for mb in order.chunks(cfg.minibatch_size) {
            let x = input.select_rows(mb);
            let t = target.select_rows(mb);
            step(&mut net, &x, &t, cfg)?;
        }
        trace.push(reconstruction_loss(&net, input, target, cfg.loss)?);
        let violation = net.max_tie_violation();
        if violation != 0.0 {
            return Err(CoreError::Data(format!(
                "tie invariant violated after epoch: max deviation {violation}"
            )));
        }
    }
    Ok((net, trace))
}

fn step(net: &mut DeepAutoencoder, x: &Matrix, t: &Matrix, cfg: &FineTuneConfig) -> Result<()> {
    let acts = forward_all(net, x)?;
    let n_layers = acts.len();
    let n_enc = net.encoder.len();
    let batch = x.rows() as f64;

    let y = &acts[n_layers - 1];
    // output delta: CE pairs with the sigmoid output to give (y - t);
    // squared error keeps the sigmoid derivative
    let mut delta = match cfg.loss {
        LossKind::CrossEntropy => y.sub(t)?,
        LossKind::SquaredError => y.sub(t)?.hadamard(&y.map(|v| v * (1.0 - v))?)?,
    };

    let mut grads: Vec<(Matrix, Vec<f64>)> = Vec::with_capacity(n_layers);
    for li in (0..n_layers).rev() {
        let prev_act = if li == 0 { x } else { &acts[li - 1] };
        let mut gw = prev_act.transpose().matmul(&delta)?.scale(1.0 / batch)?;
        let gb: Vec<f64> = delta.col_mean();
        let layer = layer_at(net, li, n_enc);
        if let Some(mask) = &layer.mask {
            gw = gw.hadamard(mask)?;
        }
        if li > 0 {
            let back = delta.matmul(&layer.w.transpose())?;
            let deriv = acts[li - 1].map(|v| v * (1.0 - v))?;
            delta = back.hadamard(&deriv)?;
        }
        grads.push((gw, gb));
    }
    grads.reverse();

    // fold decoder-position gradients of tied blocks into the encoder
    // block and zero them at the decoder position
    let ties = net.tie_map.clone();
    for tie in &ties {
        let dec_gi = n_enc + tie.dec_layer;
        let enc_gi = tie.enc_layer;
        let mut moved = Vec::new();
        {
            let dec_gw = &mut grads[dec_gi].0;
            for (ei, di) in (tie.enc_rows.0..tie.enc_rows.1).zip(tie.dec_cols.0..tie.dec_cols.1) {
                for (ej, dj) in (tie.enc_cols.0..tie.enc_cols.1).zip(tie.dec_rows.0..tie.dec_rows.1)
                {
                    moved.push((ei, ej, dec_gw.get(dj, di)));
                    dec_gw.set(dj, di, 0.0)?;
                }
            }
        }
        let enc_gw = &mut grads[enc_gi].0;
        for (ei, ej, g) in moved {
            let cur = enc_gw.get(ei, ej);
            enc_gw.set(ei, ej, cur + g)?;
        }
    }

    for (li, (gw, gb)) in grads.iter().enumerate() {
        if cfg.freeze_decoder && li >= n_enc {
            continue;
        }
        let layer = layer_at_mut(net, li, n_enc);
        layer.w = layer.w.sub(&gw.scale(cfg.learning_rate)?)?;
        if let Some(mask) = layer.mask.clone() {
            layer.w = layer.w.hadamard(&mask)?;
        }
        for (b, g) in layer.b.iter_mut().zip(gb) {
            *b -= cfg.learning_rate * g;
        }
    }

    // re-synchronize tied decoder blocks from the updated encoder side
    for tie in &ties {
        let enc_w = net.encoder[tie.enc_layer].w.clone();
        let dec_w = &mut net.decoder[tie.dec_layer].w;
        for (ei, di) in (tie.enc_rows.0..tie.enc_rows.1).zip(tie.dec_cols.0..tie.dec_cols.1) {
            for (ej, dj) in (tie.enc_cols.0..tie.enc_cols.1).zip(tie.dec_rows.0..tie.dec_rows.1) {
                dec_w.set(dj, di, enc_w.get(ei, ej))?;
            }
        }
    }
    Ok(())
}

fn layer_at<'a>(net: &'a DeepAutoencoder, li: usize, n_enc: usize) -> &'a Layer {
    if li < n_enc {
        &net.encoder[li]
    } else {
        &net.decoder[li - n_enc]
    }
}

fn layer_at_mut<'a>(net: &'a mut DeepAutoencoder, li: usize, n_enc: usize) -> &'a mut Layer {
    if li < n_enc {
        &mut net.encoder[li]
    } else {
        &mut net.decoder[li - n_enc]
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// Small trained BDAE used by the serialization tests.
    pub fn trained_bdae(seed: u64) -> DeepAutoencoder {
        let spec = StackSpec::bdae(
            Modality {
                name: "eeg".into(),
                dim: 6,
                hidden: 4,
            },
            Modality {
                name: "eye".into(),
                dim: 4,
                hidden: 3,
            },
            3,
        );
        let mut rng = RngStream::new(seed);
        let d1_data: Vec<f64> = (0..12 * 6).map(|_| rng.next_f64()).collect();
        let d2_data: Vec<f64> = (0..12 * 4).map(|_| rng.next_f64()).collect();
        let d1 = Matrix::from_vec(12, 6, d1_data).unwrap();
        let d2 = Matrix::from_vec(12, 4, d2_data).unwrap();
        let cd = CdConfig {
            epochs: 3,
            minibatch_size: 4,
            ..CdConfig::default()
        };
        let rbms = pretrain_stack(&spec, &[&d1, &d2], &cd, &mut rng).unwrap();
        let net = unfold(&spec, &rbms, &mut rng).unwrap();
        let joint = d1.hcat(&d2).unwrap();
        let ft = FineTuneConfig {
            epochs: 5,
            minibatch_size: 4,
            ..FineTuneConfig::default()
        };
        fine_tune(&net, &joint, &joint, &ft, &mut rng).unwrap().0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth_rows(n: usize, dim: usize, seed: u64) -> Matrix {
        let mut rng = RngStream::new(seed);
        let data = (0..n * dim).map(|_| rng.next_f64()).collect();
        Matrix::from_vec(n, dim, data).unwrap()
    }

    fn quick_cd() -> CdConfig {
        CdConfig {
            epochs: 5,
            minibatch_size: 8,
            ..CdConfig::default()
        }
    }

    fn bdae_fixture(seed: u64) -> (StackSpec, Matrix, Matrix, DeepAutoencoder) {
        let spec = StackSpec::bdae(
            Modality {
                name: "eeg".into(),
                dim: 10,
                hidden: 8,
            },
            Modality {
                name: "eye".into(),
                dim: 6,
                hidden: 4,
            },
            6,
        );
        let mut rng = RngStream::new(seed);
        let d1 = synth_rows(24, 10, seed + 1);
        let d2 = synth_rows(24, 6, seed + 2);
        let rbms = pretrain_stack(&spec, &[&d1, &d2], &quick_cd(), &mut rng).unwrap();
        let net = unfold(&spec, &rbms, &mut rng).unwrap();
        (spec, d1, d2, net)
    }

    fn dae_fixture(seed: u64) -> (Matrix, Matrix, DeepAutoencoder) {
        let spec = StackSpec::dae(
            Modality {
                name: "eeg".into(),
                dim: 8,
                hidden: 6,
            },
            ("eye".into(), 5),
            4,
        );
        let mut rng = RngStream::new(seed);
        let input = synth_rows(20, 8, seed + 1);
        let other = synth_rows(20, 5, seed + 2);
        let rbms = pretrain_stack(&spec, &[&input], &quick_cd(), &mut rng).unwrap();
        let net = unfold(&spec, &rbms, &mut rng).unwrap();
        let target = input.hcat(&other).unwrap();
        (input, target, net)
    }

    #[test]
    fn bdae_pretrain_shapes() {
        let spec = StackSpec::bdae(
            Modality {
                name: "eeg".into(),
                dim: 10,
                hidden: 8,
            },
            Modality {
                name: "eye".into(),
                dim: 6,
                hidden: 4,
            },
            6,
        );
        let mut rng = RngStream::new(1);
        let d1 = synth_rows(16, 10, 2);
        let d2 = synth_rows(16, 6, 3);
        let rbms = pretrain_stack(&spec, &[&d1, &d2], &quick_cd(), &mut rng).unwrap();
        assert_eq!(rbms.len(), 3);
        assert_eq!((rbms[0].n_visible(), rbms[0].n_hidden()), (10, 8));
        assert_eq!((rbms[1].n_visible(), rbms[1].n_hidden()), (6, 4));
        assert_eq!((rbms[2].n_visible(), rbms[2].n_hidden()), (12, 6));
    }

    #[test]
    fn pretraining_reduces_layer_reconstruction_error() {
        let data = synth_rows(40, 10, 9);
        let mut rng = RngStream::new(10);
        let init = RbmParams::init(10, 8, &mut rng);
        let before = rbm::reconstruction_error(&data, &init).unwrap();
        let cfg = CdConfig {
            epochs: 30,
            minibatch_size: 8,
            ..CdConfig::default()
        };
        let (trained, _) = rbm::train(&data, &init, &cfg, &mut rng).unwrap();
        let after = rbm::reconstruction_error(&data, &trained).unwrap();
        assert!(after <= before, "recon error {before} -> {after}");
    }

    #[test]
    fn unfold_ties_hold_immediately() {
        let (_, _, _, net) = bdae_fixture(40);
        assert_eq!(net.max_tie_violation(), 0.0);
        assert_eq!(net.tie_map.len(), 3);
        let (_, _, dae) = dae_fixture(41);
        assert_eq!(dae.max_tie_violation(), 0.0);
        assert_eq!(dae.tie_map.len(), 1);
    }

    #[test]
    fn roundtrip_shapes_and_range() {
        let (_, d1, d2, net) = bdae_fixture(50);
        let joint = d1.hcat(&d2).unwrap();
        let out = reconstruct(&net, &joint).unwrap();
        assert_eq!(out.cols(), 16);
        assert!(out.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn dae_output_covers_both_modalities() {
        let (input, target, net) = dae_fixture(60);
        assert_eq!(net.input_dim(), 8);
        assert_eq!(net.output_dim(), 13);
        let out = reconstruct(&net, &input).unwrap();
        assert_eq!(out.cols(), target.cols());
        assert_eq!(net.output_layout[1].name, "eye");
    }

    #[test]
    fn encode_is_deterministic_and_sized() {
        let (_, d1, d2, net) = bdae_fixture(70);
        let joint = d1.hcat(&d2).unwrap();
        let a = encode(&net, &joint).unwrap();
        let b = encode(&net, &joint).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cols(), 6);
        // identical rows encode identically
        let two = joint.select_rows(&[0, 0]);
        let e = encode(&net, &two).unwrap();
        assert_eq!(e.row(0), e.row(1));
    }

    #[test]
    fn fine_tune_zero_epochs_is_identity() {
        let (input, target, net) = dae_fixture(80);
        let cfg = FineTuneConfig {
            epochs: 0,
            ..FineTuneConfig::default()
        };
        let mut rng = RngStream::new(81);
        let (tuned, trace) = fine_tune(&net, &input, &target, &cfg, &mut rng).unwrap();
        assert_eq!(tuned, net);
        assert!(trace.is_empty());
    }

    #[test]
    fn fine_tune_reduces_loss_and_keeps_ties() {
        let (_, d1, d2, net) = bdae_fixture(90);
        let joint = d1.hcat(&d2).unwrap();
        let cfg = FineTuneConfig {
            epochs: 200,
            learning_rate: 0.05,
            minibatch_size: 8,
            ..FineTuneConfig::default()
        };
        let before = reconstruction_loss(&net, &joint, &joint, cfg.loss).unwrap();
        let mut rng = RngStream::new(91);
        let (tuned, trace) = fine_tune(&net, &joint, &joint, &cfg, &mut rng).unwrap();
        let after = *trace.last().unwrap();
        assert!(after < before, "loss {before} -> {after}");
        assert_eq!(tuned.max_tie_violation(), 0.0);
    }

    #[test]
    fn fine_tune_monotone_at_small_learning_rate() {
        let (input, target, net) = dae_fixture(95);
        let cfg = FineTuneConfig {
            epochs: 50,
            learning_rate: 0.01,
            minibatch_size: 32,
            ..FineTuneConfig::default()
        };
        let mut rng = RngStream::new(96);
        let (_, trace) = fine_tune(&net, &input, &target, &cfg, &mut rng).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] - w[0] < 1e-4, "epoch increase {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn dae_untied_decoder_diverges_from_transpose() {
        let (input, target, net) = dae_fixture(97);
        let cfg = FineTuneConfig {
            epochs: 30,
            learning_rate: 0.05,
            minibatch_size: 8,
            ..FineTuneConfig::default()
        };
        let mut rng = RngStream::new(98);
        let (tuned, _) = fine_tune(&net, &input, &target, &cfg, &mut rng).unwrap();
        assert_eq!(tuned.max_tie_violation(), 0.0);
        // dec0 started as the transpose of enc1 but is untied
        let diff = tuned.decoder[0]
            .w
            .max_abs_diff(&tuned.encoder[1].w.transpose());
        assert!(diff > 0.0, "untied decoder stayed tied");
    }

    /// Central finite differences over every parameter of a small net.
    fn finite_diff_check(mut net: DeepAutoencoder, x: &Matrix, t: &Matrix, loss: LossKind) {
        let cfg = FineTuneConfig {
            learning_rate: 1.0,
            epochs: 1,
            minibatch_size: x.rows(),
            loss,
            freeze_decoder: false,
        };
        // analytic step from the current point with lr=1 gives -gradient
        let before = net.clone();
        step(&mut net, x, t, &cfg).unwrap();

        let eps = 1e-5;
        let n_enc = before.encoder.len();
        let n_layers = n_enc + before.decoder.len();
        for li in 0..n_layers {
            let (rows, cols) = {
                let l = layer_at(&before, li, n_enc);
                (l.w.rows(), l.w.cols())
            };
            for r in 0..rows {
                for c in 0..cols {
                    if let Some(mask) = &layer_at(&before, li, n_enc).mask {
                        if mask.get(r, c) == 0.0 {
                            continue;
                        }
                    }
                    // skip tied decoder positions: their gradient lives at
                    // the encoder position
                    let mut tied_dec = false;
                    for tie in &before.tie_map {
                        if li == n_enc + tie.dec_layer
                            && r >= tie.dec_rows.0
                            && r < tie.dec_rows.1
                            && c >= tie.dec_cols.0
                            && c < tie.dec_cols.1
                        {
                            tied_dec = true;
                        }
                    }
                    if tied_dec {
                        continue;
                    }

                    let analytic = {
                        let w0 = layer_at(&before, li, n_enc).w.get(r, c);
                        let w1 = layer_at(&net, li, n_enc).w.get(r, c);
                        w0 - w1 // lr = 1
                    };
                    let numeric = {
                        let probe = |delta: f64| {
                            let mut p = before.clone();
                            let cur = layer_at(&p, li, n_enc).w.get(r, c);
                            layer_at_mut(&mut p, li, n_enc)
                                .w
                                .set(r, c, cur + delta)
                                .unwrap();
                            // keep ties in sync for encoder-side probes
                            for tie in &p.tie_map.clone() {
                                if li == tie.enc_layer
                                    && r >= tie.enc_rows.0
                                    && r < tie.enc_rows.1
                                    && c >= tie.enc_cols.0
                                    && c < tie.enc_cols.1
                                {
                                    let er = r - tie.enc_rows.0;
                                    let ec = c - tie.enc_cols.0;
                                    let dr = tie.dec_rows.0 + ec;
                                    let dc = tie.dec_cols.0 + er;
                                    let v = layer_at(&p, li, n_enc).w.get(r, c);
                                    p.decoder[tie.dec_layer].w.set(dr, dc, v).unwrap();
                                }
                            }
                            let y = reconstruct(&p, x).unwrap();
                            loss_value(&y, t, loss)
                        };
                        (probe(eps) - probe(-eps)) / (2.0 * eps)
                    };
                    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                    let rel = (analytic - numeric).abs() / denom;
                    assert!(
                        rel < 1e-6 || (analytic - numeric).abs() < 1e-9,
                        "layer {li} ({r},{c}): analytic {analytic} numeric {numeric} rel {rel}"
                    );
                }
            }
        }
    }

    #[test]
    fn backprop_matches_finite_differences_dae() {
        let spec = StackSpec::dae(
            Modality {
                name: "a".into(),
                dim: 3,
                hidden: 2,
            },
            ("b".into(), 2),
            2,
        );
        let mut rng = RngStream::new(5);
        let input = synth_rows(4, 3, 6);
        let other = synth_rows(4, 2, 7);
        let rbms = pretrain_stack(&spec, &[&input], &quick_cd(), &mut rng).unwrap();
        let net = unfold(&spec, &rbms, &mut rng).unwrap();
        let target = input.hcat(&other).unwrap();
        finite_diff_check(net.clone(), &input, &target, LossKind::CrossEntropy);
        finite_diff_check(net, &input, &target, LossKind::SquaredError);
    }

    #[test]
    fn backprop_matches_finite_differences_bdae() {
        let spec = StackSpec::bdae(
            Modality {
                name: "a".into(),
                dim: 3,
                hidden: 2,
            },
            Modality {
                name: "b".into(),
                dim: 2,
                hidden: 2,
            },
            2,
        );
        let mut rng = RngStream::new(15);
        let d1 = synth_rows(4, 3, 16);
        let d2 = synth_rows(4, 2, 17);
        let rbms = pretrain_stack(&spec, &[&d1, &d2], &quick_cd(), &mut rng).unwrap();
        let net = unfold(&spec, &rbms, &mut rng).unwrap();
        let joint = d1.hcat(&d2).unwrap();
        finite_diff_check(net, &joint, &joint, LossKind::CrossEntropy);
    }

    #[test]
    fn spec_validation_rejects_bad_shapes() {
        let bad = StackSpec {
            kind: NetKind::Bdae,
            modalities: vec![Modality {
                name: "a".into(),
                dim: 3,
                hidden: 2,
            }],
            dae_output_modality: None,
            shared: 2,
        };
        assert!(bad.validate().is_err());
        let bad_dae = StackSpec {
            kind: NetKind::Dae,
            modalities: vec![Modality {
                name: "a".into(),
                dim: 3,
                hidden: 2,
            }],
            dae_output_modality: None,
            shared: 2,
        };
        assert!(bad_dae.validate().is_err());
    }
}
