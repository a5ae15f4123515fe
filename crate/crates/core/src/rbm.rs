//! Restricted Boltzmann Machine: energy, conditional distributions,
//! CD-k / Persistent CD training, and exact enumeration for tiny
//! instances (the oracle side of every gradient check).

use crate::error::{CoreError, Result};
use crate::numeric::{bernoulli_sample, sigmoid, Matrix, RngStream};

/// Parameter triple of one RBM: weights (visible x hidden), visible
/// biases, hidden biases.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    pub w: Matrix,
    pub vis_bias: Vec<f64>,
    pub hid_bias: Vec<f64>,
}

impl RbmParams {
    /// Weights N(0, 0.01^2), biases zero.
    pub fn init(n_visible: usize, n_hidden: usize, rng: &mut RngStream) -> Self {
        let data = (0..n_visible * n_hidden)
            .map(|_| 0.01 * rng.next_gaussian())
            .collect();
        RbmParams {
            w: Matrix::from_vec(n_visible, n_hidden, data).expect("finite init"),
            vis_bias: vec![0.0; n_visible],
            hid_bias: vec![0.0; n_hidden],
        }
    }

    pub fn new(w: Matrix, vis_bias: Vec<f64>, hid_bias: Vec<f64>) -> Result<Self> {
        if w.rows() != vis_bias.len() || w.cols() != hid_bias.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "rbm: W is {}x{}, biases {} and {}",
                w.rows(),
                w.cols(),
                vis_bias.len(),
                hid_bias.len()
            )));
        }
        if vis_bias.iter().chain(&hid_bias).any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("rbm bias".into()));
        }
        Ok(RbmParams {
            w,
            vis_bias,
            hid_bias,
        })
    }

    pub fn n_visible(&self) -> usize {
        self.w.rows()
    }

    pub fn n_hidden(&self) -> usize {
        self.w.cols()
    }
}

/// Contrastive-divergence training configuration.
#[derive(Debug, Clone)]
pub struct CdConfig {
    pub k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub persistent: bool,
    pub n_persistent_chains: usize,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            k: 1,
            learning_rate: 0.05,
            epochs: 30,
            minibatch_size: 32,
            momentum: 0.5,
            weight_decay: 1e-4,
            persistent: false,
            n_persistent_chains: 32,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(CoreError::InvalidArgument("cd k must be >= 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(CoreError::InvalidArgument(
                "cd learning_rate must be > 0".into(),
            ));
        }
        if self.minibatch_size < 1 {
            return Err(CoreError::InvalidArgument(
                "cd minibatch_size must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(CoreError::InvalidArgument(
                "cd momentum must be in [0,1)".into(),
            ));
        }
        if self.weight_decay < 0.0 {
            return Err(CoreError::InvalidArgument(
                "cd weight_decay must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Gradient triple matching the parameter shapes.
#[derive(Debug, Clone)]
pub struct RbmGradient {
    pub w: Matrix,
    pub vis: Vec<f64>,
    pub hid: Vec<f64>,
}

/// Energy of one joint configuration:
/// E(v,h) = -sum_ij W_ij v_i h_j - sum_i b_i v_i - sum_j a_j h_j.
pub fn energy(v: &[f64], h: &[f64], params: &RbmParams) -> Result<f64> {
    if v.len() != params.n_visible() || h.len() != params.n_hidden() {
        return Err(CoreError::ShapeMismatch(format!(
            "energy: v len {} h len {} vs {}x{}",
            v.len(),
            h.len(),
            params.n_visible(),
            params.n_hidden()
        )));
    }
    let mut e = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            for (j, &hj) in h.iter().enumerate() {
                e -= params.w.get(i, j) * vi * hj;
            }
        }
        e -= params.vis_bias[i] * vi;
    }
    for (j, &hj) in h.iter().enumerate() {
        e -= params.hid_bias[j] * hj;
    }
    Ok(e)
}

/// p(h_j = 1 | v) for every row of `v`: sigmoid(v W + a).
pub fn hidden_given_visible(v: &Matrix, params: &RbmParams) -> Result<Matrix> {
    if v.cols() != params.n_visible() {
        return Err(CoreError::ShapeMismatch(format!(
            "hidden_given_visible: {} columns vs {} visible units",
            v.cols(),
            params.n_visible()
        )));
    }
    v.matmul(&params.w)?
        .add_row_broadcast(&params.hid_bias)?
        .map(sigmoid)
}

/// p(v_i = 1 | h) for every row of `h`: sigmoid(h W^T + b).
pub fn visible_given_hidden(h: &Matrix, params: &RbmParams) -> Result<Matrix> {
    if h.cols() != params.n_hidden() {
        return Err(CoreError::ShapeMismatch(format!(
            "visible_given_hidden: {} columns vs {} hidden units",
            h.cols(),
            params.n_hidden()
        )));
    }
    h.matmul(&params.w.transpose())?
        .add_row_broadcast(&params.vis_bias)?
        .map(sigmoid)
}

fn check_unit_interval(m: &Matrix, what: &str) -> Result<()> {
    if let Some(v) = m.data().iter().find(|v| **v < 0.0 || **v > 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "{what} entry {v} outside [0,1]"
        )));
    }
    Ok(())
}

/// CD-k / PCD gradient estimate for one minibatch.
///
/// Data term uses hidden probabilities (mean-field); the Gibbs chain
/// samples both layers but the model term is formed from the final
/// visible sample paired with its hidden probabilities. When
/// `persistent_chains` is given the chain starts from (and updates) the
/// fantasy particles instead of the data rows.
pub fn cd_gradient(
    batch: &Matrix,
    params: &RbmParams,
    cfg: &CdConfig,
    rng: &mut RngStream,
    persistent_chains: Option<&mut Matrix>,
) -> Result<RbmGradient> {
    cfg.validate()?;
    if batch.rows() == 0 {
        return Err(CoreError::InvalidArgument(
            "cd_gradient: empty batch".into(),
        ));
    }
    check_unit_interval(batch, "cd_gradient batch")?;

    // positive phase
    let hp_data = hidden_given_visible(batch, params)?;

    // negative phase: k Gibbs steps
    let mut v = match &persistent_chains {
        Some(chains) => (*chains).clone(),
        None => batch.clone(),
    };
    for _ in 0..cfg.k {
        let h_sample = bernoulli_sample(&hidden_given_visible(&v, params)?, rng)?;
        let vp = visible_given_hidden(&h_sample, params)?;
        v = bernoulli_sample(&vp, rng)?;
    }
    let hp_model = hidden_given_visible(&v, params)?;
    if let Some(chains) = persistent_chains {
        *chains = v.clone();
    }

    let n_data = batch.rows() as f64;
    let n_model = v.rows() as f64;
    let pos = batch.transpose().matmul(&hp_data)?.scale(1.0 / n_data)?;
    let neg = v.transpose().matmul(&hp_model)?.scale(1.0 / n_model)?;
    let w = pos.sub(&neg)?;

    let vis: Vec<f64> = batch
        .col_mean()
        .iter()
        .zip(v.col_mean())
        .map(|(&d, m)| d - m)
        .collect();
    let hid: Vec<f64> = hp_data
        .col_mean()
        .iter()
        .zip(hp_model.col_mean())
        .map(|(&d, m)| d - m)
        .collect();
    Ok(RbmGradient { w, vis, hid })
}

/// Trains an RBM with minibatch CD/PCD, momentum and weight decay.
/// Returns the trained parameters and one mean-field reconstruction
/// error per epoch.
pub fn train(
    data: &Matrix,
    params: &RbmParams,
    cfg: &CdConfig,
    rng: &mut RngStream,
) -> Result<(RbmParams, Vec<f64>)> {
    cfg.validate()?;
    if data.cols() != params.n_visible() {
        return Err(CoreError::ShapeMismatch(format!(
            "train: data has {} columns, rbm has {} visible units",
            data.cols(),
            params.n_visible()
        )));
    }
    if data.rows() == 0 {
        return Err(CoreError::InvalidArgument("train: empty data".into()));
    }
    check_unit_interval(data, "rbm training data")?;

    let mut p = params.clone();
    let mut vel_w = Matrix::zeros(p.n_visible(), p.n_hidden());
    let mut vel_vis = vec![0.0; p.n_visible()];
    let mut vel_hid = vec![0.0; p.n_hidden()];
    let mut trace = Vec::with_capacity(cfg.epochs);

    let mut chains = if cfg.persistent {
        let n = cfg.n_persistent_chains.max(1);
        let idx: Vec<usize> = (0..n).map(|i| i % data.rows()).collect();
        Some(bernoulli_sample(&data.select_rows(&idx), rng)?)
    } else {
        None
    };

    let mut order: Vec<usize> = (0..data.rows()).collect();
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for mb in order.chunks(cfg.minibatch_size) {
            let batch = data.select_rows(mb);
            let grad = cd_gradient(&batch, &p, cfg, rng, chains.as_mut())?;

            let step = grad.w.sub(&p.w.scale(cfg.weight_decay)?)?;
            vel_w = vel_w
                .scale(cfg.momentum)?
                .add(&step.scale(cfg.learning_rate)?)?;
            p.w = p.w.add(&vel_w)?;
            for i in 0..p.vis_bias.len() {
                vel_vis[i] = cfg.momentum * vel_vis[i] + cfg.learning_rate * grad.vis[i];
                p.vis_bias[i] += vel_vis[i];
            }
            for j in 0..p.hid_bias.len() {
                vel_hid[j] = cfg.momentum * vel_hid[j] + cfg.learning_rate * grad.hid[j];
                p.hid_bias[j] += vel_hid[j];
            }
        }
        trace.push(reconstruction_error(data, &p)?);
    }
    Ok((p, trace))
}

/// Mean squared error of the deterministic mean-field reconstruction.
pub fn reconstruction_error(data: &Matrix, params: &RbmParams) -> Result<f64> {
    let hp = hidden_given_visible(data, params)?;
    let vp = visible_given_hidden(&hp, params)?;
    let diff = data.sub(&vp)?;
    let n = (data.rows() * data.cols()) as f64;
    Ok(diff.data().iter().map(|d| d * d).sum::<f64>() / n)
}

const ENUMERATION_LIMIT: usize = 20;

fn enumeration_guard(params: &RbmParams) -> Result<()> {
    if params.n_visible() + params.n_hidden() > ENUMERATION_LIMIT {
        return Err(CoreError::TooLarge(format!(
            "enumeration needs M+N <= {ENUMERATION_LIMIT}, got {}",
            params.n_visible() + params.n_hidden()
        )));
    }
    Ok(())
}

fn bits(index: usize, len: usize) -> Vec<f64> {
    (0..len).map(|b| ((index >> b) & 1) as f64).collect()
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log Z by full enumeration of all 2^(M+N) joint states under
/// p(v,h) proportional to exp(-E(v,h)).
pub fn log_partition(params: &RbmParams) -> Result<f64> {
    enumeration_guard(params)?;
    let m = params.n_visible();
    let n = params.n_hidden();
    Ok(log_sum_exp((0..1usize << (m + n)).map(|s| {
        let v = bits(s & ((1 << m) - 1), m);
        let h = bits(s >> m, n);
        -energy(&v, &h, params).expect("shapes fixed")
    })))
}

/// Mean log p(v) over the data rows, with Z computed by enumeration.
/// Rows may be real-valued in [0,1]; they enter the energy as-is.
pub fn exact_log_likelihood(data: &Matrix, params: &RbmParams) -> Result<f64> {
    enumeration_guard(params)?;
    if data.cols() != params.n_visible() {
        return Err(CoreError::ShapeMismatch(format!(
            "exact_log_likelihood: {} columns vs {} visible units",
            data.cols(),
            params.n_visible()
        )));
    }
    let n_hidden = params.n_hidden();
    let log_z = log_partition(params)?;
    let mut total = 0.0;
    for r in 0..data.rows() {
        let v = data.row(r);
        let unnorm = log_sum_exp((0..1usize << n_hidden).map(|s| {
            let h = bits(s, n_hidden);
            -energy(v, &h, params).expect("shapes fixed")
        }));
        total += unnorm - log_z;
    }
    Ok(total / data.rows() as f64)
}

/// Exact marginal p(v) for all 2^M visible states. Probabilities sum to
/// 1 up to floating-point roundoff.
pub fn exact_visible_distribution(params: &RbmParams) -> Result<Vec<(Vec<f64>, f64)>> {
    enumeration_guard(params)?;
    let m = params.n_visible();
    let n = params.n_hidden();
    let log_z = log_partition(params)?;
    let mut out = Vec::with_capacity(1 << m);
    for s in 0..1usize << m {
        let v = bits(s, m);
        let lp = log_sum_exp((0..1usize << n).map(|t| {
            let h = bits(t, n);
            -energy(&v, &h, params).expect("shapes fixed")
        })) - log_z;
        out.push((v, lp.exp()));
    }
    Ok(out)
}

/// Exact log-likelihood gradient for the given data: the data
/// expectation minus the enumerated model expectation of the
/// sufficient statistics.
pub fn exact_gradient(data: &Matrix, params: &RbmParams) -> Result<RbmGradient> {
    enumeration_guard(params)?;
    let hp = hidden_given_visible(data, params)?;
    let n_data = data.rows() as f64;
    let pos = data.transpose().matmul(&hp)?.scale(1.0 / n_data)?;
    let pos_vis = data.col_mean();
    let pos_hid = hp.col_mean();

    let dist = exact_visible_distribution(params)?;
    let m = params.n_visible();
    let n = params.n_hidden();
    let mut neg = Matrix::zeros(m, n);
    let mut neg_vis = vec![0.0; m];
    let mut neg_hid = vec![0.0; n];
    for (v, p) in &dist {
        let vm = Matrix::from_vec(1, m, v.clone())?;
        let hpv = hidden_given_visible(&vm, params)?;
        for i in 0..m {
            neg_vis[i] += p * v[i];
            for j in 0..n {
                let cur = neg.get(i, j);
                neg.set(i, j, cur + p * v[i] * hpv.get(0, j))?;
            }
        }
        for j in 0..n {
            neg_hid[j] += p * hpv.get(0, j);
        }
    }
    Ok(RbmGradient {
        w: pos.sub(&neg)?,
        vis: pos_vis.iter().zip(&neg_vis).map(|(a, b)| a - b).collect(),
        hid: pos_hid.iter().zip(&neg_hid).map(|(a, b)| a - b).collect(),
    })
}

/// Draws i.i.d. visible states from the exact model distribution by
/// CDF inversion over the enumerated marginal.
pub fn sample_exact_visible(
    params: &RbmParams,
    n_rows: usize,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let dist = exact_visible_distribution(params)?;
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let u = rng.next_f64();
        let mut acc = 0.0;
        let mut chosen = dist.len() - 1;
        for (i, (_, p)) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = i;
                break;
            }
        }
        rows.push(dist[chosen].0.clone());
    }
    Matrix::from_rows(&rows)
}
