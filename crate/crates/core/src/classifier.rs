//! Linear max-margin classifier: one-vs-rest hinge loss trained with
//! deterministic epoch-shuffled subgradient descent and averaged
//! iterates.

use crate::error::{CoreError, Result};
use crate::features::FeatureMatrix;
use crate::numeric::{Matrix, RngStream};
use std::fmt::Write as _;

/// One hyperplane per class, argmax decision with ties broken by class
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub classes: Vec<i64>,
    /// one weight vector per class, feature-dimension long
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 100,
        }
    }
}

/// Regularized hinge objective for one binary problem:
/// 0.5*||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b)).
fn objective(w: &[f64], b: f64, x: &Matrix, y: &[f64], c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let mut hinge = 0.0;
    for r in 0..x.rows() {
        let margin = y[r] * (dot(w, x.row(r)) + b);
        hinge += (1.0 - margin).max(0.0);
    }
    reg + c * hinge
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pegasos-style SGD for one binary problem. Keeps a running average of
/// the iterates and returns the best averaged iterate seen (by training
/// objective), which makes the per-epoch objective trace non-increasing.
fn train_binary(
    x: &Matrix,
    y: &[f64],
    cfg: &SvmConfig,
    rng: &mut RngStream,
) -> (Vec<f64>, f64, Vec<f64>) {
    let dim = x.cols();
    let n = x.rows();
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut t: u64 = 0;

    let mut best_w = vec![0.0; dim];
    let mut best_b = 0.0;
    let mut best_obj = objective(&best_w, best_b, x, y, cfg.c);
    let mut trace = Vec::with_capacity(cfg.epochs);

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let xi = x.row(i);
            let margin = y[i] * (dot(&w, xi) + b);
            for (wj, &xij) in w.iter_mut().zip(xi) {
                *wj *= 1.0 - eta * lambda;
                if margin < 1.0 {
                    *wj += eta * y[i] * xij / n as f64 / cfg.c / lambda;
                }
            }
            if margin < 1.0 {
                b += eta * y[i] / n as f64 / cfg.c / lambda;
            }
            // projection onto the ball the optimum is known to lie in;
            // without it the early steps (eta ~ 1/lambda) can fling the
            // iterate far enough that averaging never recovers
            let norm = (w.iter().map(|v| v * v).sum::<f64>() + b * b).sqrt();
            let radius = 1.0 / lambda.sqrt();
            if norm > radius {
                let shrink = radius / norm;
                w.iter_mut().for_each(|v| *v *= shrink);
                b *= shrink;
            }
            let k = t as f64;
            for (aj, wj) in avg_w.iter_mut().zip(&w) {
                *aj += (wj - *aj) / k;
            }
            avg_b += (b - avg_b) / k;
        }
        let obj = objective(&avg_w, avg_b, x, y, cfg.c);
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from_slice(&avg_w);
            best_b = avg_b;
        }
        trace.push(best_obj);
    }
    (best_w, best_b, trace)
}

/// Trains a one-vs-rest linear SVM on labeled features.
pub fn train_svm(
    fm: &FeatureMatrix,
    cfg: &SvmConfig,
    rng: &mut RngStream,
) -> Result<LinearClassifier> {
    if cfg.c <= 0.0 {
        return Err(CoreError::InvalidArgument("svm C must be > 0".into()));
    }
    let classes = fm.classes();
    if classes.len() < 2 {
        return Err(CoreError::InvalidArgument(format!(
            "training needs >= 2 classes, found {}",
            classes.len()
        )));
    }
    let labels = fm.class_labels();
    let seed_marker = rng.next_u64();
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for &cls in &classes {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == cls { 1.0 } else { -1.0 })
            .collect();
        let mut sub = rng.fork(cls as u64);
        let (w, b, trace) = train_binary(&fm.values, &y, cfg, &mut sub);
        debug_assert!(trace.windows(2).all(|p| p[1] <= p[0] + 1e-6));
        weights.push(w);
        biases.push(b);
    }
    Ok(LinearClassifier {
        classes,
        weights,
        biases,
        c: cfg.c,
        epochs: cfg.epochs,
        seed: seed_marker,
    })
}

/// Per-epoch objective trace for one binary subproblem; exposed for the
/// monotonicity checks.
pub fn binary_objective_trace(
    x: &Matrix,
    y: &[f64],
    cfg: &SvmConfig,
    rng: &mut RngStream,
) -> Vec<f64> {
    train_binary(x, y, cfg, rng).2
}

/// Argmax prediction with per-class scores; equal scores go to the
/// first class in class order.
pub fn predict(clf: &LinearClassifier, values: &Matrix) -> Result<(Vec<i64>, Matrix)> {
    if values.cols() != clf.weights[0].len() {
        return Err(CoreError::ShapeMismatch(format!(
            "predict: {} features vs classifier dimension {}",
            values.cols(),
            clf.weights[0].len()
        )));
    }
    let mut scores = Matrix::zeros(values.rows(), clf.classes.len());
    let mut labels = Vec::with_capacity(values.rows());
    for r in 0..values.rows() {
        let row = values.row(r);
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (ci, (w, b)) in clf.weights.iter().zip(&clf.biases).enumerate() {
            let s = dot(w, row) + b;
            scores.set(r, ci, s)?;
            if s > best_score {
                best_score = s;
                best = ci;
            }
        }
        labels.push(clf.classes[best]);
    }
    Ok((labels, scores))
}

const MAGIC: &str = "affect-classifier v1";

pub fn serialize_classifier(clf: &LinearClassifier) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(
        s,
        "classes {}",
        clf.classes
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(s, "c {:?}", clf.c);
    let _ = writeln!(s, "epochs {}", clf.epochs);
    let _ = writeln!(s, "seed {}", clf.seed);
    for (w, b) in clf.weights.iter().zip(&clf.biases) {
        let _ = writeln!(s, "w {}", crate::autoencoder::floats_line(w));
        let _ = writeln!(s, "b {b:?}");
    }
    s.push_str("end\n");
    s
}

pub fn deserialize_classifier(text: &str) -> Result<LinearClassifier> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(CoreError::Parse("unsupported classifier header".into()));
    }
    let parse_tag = |line: Option<&str>, tag: &str| -> Result<String> {
        let l = line.ok_or_else(|| CoreError::Parse("classifier file truncated".into()))?;
        l.strip_prefix(tag)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| CoreError::Parse(format!("expected '{tag}' line")))
    };
    let classes: Vec<i64> = parse_tag(lines.next(), "classes")?
        .split(' ')
        .map(|s| {
            s.parse()
                .map_err(|_| CoreError::Parse(format!("bad class '{s}'")))
        })
        .collect::<Result<_>>()?;
    let c: f64 = parse_tag(lines.next(), "c")?
        .parse()
        .map_err(|_| CoreError::Parse("bad C".into()))?;
    let epochs: usize = parse_tag(lines.next(), "epochs")?
        .parse()
        .map_err(|_| CoreError::Parse("bad epochs".into()))?;
    let seed: u64 = parse_tag(lines.next(), "seed")?
        .parse()
        .map_err(|_| CoreError::Parse("bad seed".into()))?;
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for _ in 0..classes.len() {
        let w_line = parse_tag(lines.next(), "w")?;
        let w: Vec<f64> = w_line
            .split(' ')
            .map(|s| {
                s.parse()
                    .map_err(|_| CoreError::Parse(format!("bad weight '{s}'")))
            })
            .collect::<Result<_>>()?;
        let b: f64 = parse_tag(lines.next(), "b")?
            .parse()
            .map_err(|_| CoreError::Parse("bad bias".into()))?;
        weights.push(w);
        biases.push(b);
    }
    if lines.next() != Some("end") {
        return Err(CoreError::Parse(
            "classifier file missing end marker".into(),
        ));
    }
    Ok(LinearClassifier {
        classes,
        weights,
        biases,
        c,
        epochs,
        seed,
    })
}
