use rand::Rng;

use super::encoder::{init_encoder, Encoder, ForwardCache};
use super::spec::{EncoderSpec, Layer, Op};
use super::NnError;
use crate::rng::{derive_seed, rng_from_seed};

/// Minimum distance of any relu input or max-pool runner-up from a kink.
const KINK_MARGIN: f64 = 1e-3;
const GRAD_CHECK_BATCH: usize = 2;
const MAX_INPUT_DRAWS: u64 = 1000;

/// Outcome of a finite-difference check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Worst relative error per layer (0 for layers without parameters).
    pub per_layer: Vec<f64>,
    pub param_count: usize,
    /// Smallest distance to a relu/max-pool kink among the checked activations.
    pub kink_margin: f64,
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Worst relative discrepancy between backpropagated and central-difference
/// gradients, in 64-bit arithmetic.
pub fn grad_check(spec: &EncoderSpec, seed: u64, eps: f64) -> Result<f64, NnError> {
    Ok(grad_check_report(spec, seed, eps)?.max_rel_error)
}

pub fn grad_check_report(spec: &EncoderSpec, seed: u64, eps: f64) -> Result<GradCheckReport, NnError> {
    let mut enc = init_encoder::<f64>(spec, seed)?;
    // Small random biases keep relu inputs off exact zero.
    let mut brng = rng_from_seed(derive_seed(seed, u64::MAX));
    for layer in enc.weights.layers.iter_mut() {
        for b in layer.bias.iter_mut() {
            *b = brng.random::<f64>() * 0.2 - 0.1;
        }
    }

    let input_size = enc.input_size();
    let out_dim = enc.output_dim();
    let mut chosen = None;
    let mut best_margin = -1.0;
    for attempt in 0..MAX_INPUT_DRAWS {
        let mut rng = rng_from_seed(derive_seed(seed, attempt));
        let x: Vec<f64> = (0..GRAD_CHECK_BATCH * input_size).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let (_, cache) = enc.forward(&x, GRAD_CHECK_BATCH)?;
        let margin = kink_margin(&enc, &cache);
        if margin > best_margin {
            best_margin = margin;
            chosen = Some(x);
        }
        if margin >= KINK_MARGIN {
            break;
        }
    }
    let x = chosen.expect("at least one draw");

    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX - 1));
    let r: Vec<f64> = (0..GRAD_CHECK_BATCH * out_dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let loss = |e: &Encoder<f64>| -> Result<f64, NnError> {
        Ok(e.embed(&x, GRAD_CHECK_BATCH)?.iter().zip(&r).map(|(o, w)| o * w).sum())
    };

    let (_, cache) = enc.forward(&x, GRAD_CHECK_BATCH)?;
    let analytic = enc.backward(&cache, &r)?;

    let mut per_layer = vec![0.0f64; enc.weights.layers.len()];
    for li in 0..enc.weights.layers.len() {
        let n_w = enc.weights.layers[li].weights.len();
        let n_b = enc.weights.layers[li].bias.len();
        for k in 0..n_w + n_b {
            let original = param(&enc, li, k);
            set_param(&mut enc, li, k, original + eps);
            let plus = loss(&enc)?;
            set_param(&mut enc, li, k, original - eps);
            let minus = loss(&enc)?;
            set_param(&mut enc, li, k, original);
            let numeric = (plus - minus) / (2.0 * eps);
            let a = if k < n_w { analytic.layers[li].weights[k] } else { analytic.layers[li].bias[k - n_w] };
            per_layer[li] = per_layer[li].max(relative_error(a, numeric));
        }
    }
    Ok(GradCheckReport {
        max_rel_error: per_layer.iter().copied().fold(0.0, f64::max),
        per_layer,
        param_count: enc.weights.param_count(),
        kink_margin: best_margin,
    })
}

fn param(enc: &Encoder<f64>, layer: usize, k: usize) -> f64 {
    let l = &enc.weights.layers[layer];
    if k < l.weights.len() {
        l.weights[k]
    } else {
        l.bias[k - l.weights.len()]
    }
}

fn set_param(enc: &mut Encoder<f64>, layer: usize, k: usize, value: f64) {
    let l = &mut enc.weights.layers[layer];
    let n_w = l.weights.len();
    if k < n_w {
        l.weights[k] = value;
    } else {
        l.bias[k - n_w] = value;
    }
}

fn kink_margin(enc: &Encoder<f64>, cache: &ForwardCache<f64>) -> f64 {
    let mut margin = f64::INFINITY;
    for (i, op) in enc.ops().iter().enumerate() {
        let x = cache.layer_input(i);
        // Ties among relu-clamped zeros stay clamped under perturbation.
        let after_relu = i > 0 && matches!(enc.ops()[i - 1], Op::Relu);
        let top_gap = |vals: &mut dyn Iterator<Item = f64>| top_gap(vals, after_relu);
        match *op {
            Op::Relu => {
                margin = x.iter().fold(margin, |m, v| m.min(v.abs()));
            }
            Op::MaxPool1d { len, channels, window, out_len } => {
                for s in x.chunks_exact(len * channels) {
                    for t in 0..out_len {
                        for c in 0..channels {
                            let mut vals = (0..window).map(|q| s[(t * window + q) * channels + c]);
                            margin = margin.min(top_gap(&mut vals));
                        }
                    }
                }
            }
            Op::MaxPool2d { height, width, channels, window, out_h, out_w } => {
                for s in x.chunks_exact(height * width * channels) {
                    for oi in 0..out_h {
                        for oj in 0..out_w {
                            for c in 0..channels {
                                let mut vals = (0..window * window).map(|q| {
                                    let (di, dj) = (q / window, q % window);
                                    s[((oi * window + di) * width + oj * window + dj) * channels + c]
                                });
                                margin = margin.min(top_gap(&mut vals));
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    margin
}

fn top_gap(vals: &mut dyn Iterator<Item = f64>, after_relu: bool) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vals {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    if after_relu && first == 0.0 {
        return f64::INFINITY;
    }
    first - second
}

/// Small networks exercising each layer family, used by the `gradcheck` command.
pub fn gradcheck_suite() -> Vec<(&'static str, EncoderSpec)> {
    vec![
        ("linear", EncoderSpec::new(vec![5], vec![Layer::dense(4), Layer::linear(), Layer::dense(3)], 3)),
        (
            "dense",
            EncoderSpec::new(
                vec![9],
                vec![Layer::dense(16), Layer::relu(), Layer::dense(8), Layer::relu(), Layer::dense(4)],
                4,
            ),
        ),
        (
            "conv1d",
            EncoderSpec::new(
                vec![24, 3],
                vec![
                    Layer::conv1d(4, 5),
                    Layer::relu(),
                    Layer::Conv1d { filters: 4, kernel: 3, stride: 2 },
                    Layer::relu(),
                    Layer::Maxpool { window: 2 },
                    Layer::GlobalAvgPool,
                    Layer::dense(6),
                    Layer::relu(),
                    Layer::dense(3),
                ],
                3,
            ),
        ),
        (
            "conv2d",
            EncoderSpec::new(
                vec![10, 10, 2],
                vec![
                    Layer::conv2d(3, 3),
                    Layer::relu(),
                    Layer::Maxpool { window: 2 },
                    Layer::Conv2d { filters: 4, kernel: 2, stride: 1 },
                    Layer::relu(),
                    Layer::Flatten,
                    Layer::dense(5),
                    Layer::relu(),
                    Layer::dense(3),
                ],
                3,
            ),
        ),
    ]
}
