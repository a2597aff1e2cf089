use serde::{Deserialize, Serialize};

use super::NnError;

/// Activation applied element-wise by an [`Layer::Activation`] layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

/// One layer of an encoder.
///
/// Tensors are channels-last: a vector is `[features]`, a time series is
/// `[timepoints, channels]` and a grid is `[height, width, channels]`.
/// Convolutions use valid padding. Max pooling uses stride equal to the window
/// and drops any remainder.
///
/// Dense weights are stored `[inputs][units]` and applied as `y = x W + b`, so
/// `W = [[1, 2], [3, 4]]` maps `x = [1, 1]` to `[4, 6]`. Convolution kernels are
/// stored `[k][c][f]` (1-D) and `[kh][kw][c][f]` (2-D).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense {
        units: usize,
        /// Declared input width, checked against the incoming shape.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inputs: Option<usize>,
    },
    Conv1d {
        filters: usize,
        kernel: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        stride: usize,
    },
    Conv2d {
        filters: usize,
        kernel: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        stride: usize,
    },
    Maxpool {
        window: usize,
    },
    /// Mean over all positions, one value per channel.
    GlobalAvgPool,
    Flatten,
    Activation {
        function: Activation,
    },
}

impl Layer {
    pub fn dense(units: usize) -> Self {
        Layer::Dense { units, inputs: None }
    }

    pub fn conv1d(filters: usize, kernel: usize) -> Self {
        Layer::Conv1d { filters, kernel, stride: 1 }
    }

    pub fn conv2d(filters: usize, kernel: usize) -> Self {
        Layer::Conv2d { filters, kernel, stride: 1 }
    }

    pub fn relu() -> Self {
        Layer::Activation { function: Activation::Relu }
    }

    pub fn linear() -> Self {
        Layer::Activation { function: Activation::Linear }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, Layer::Dense { .. } | Layer::Conv1d { .. } | Layer::Conv2d { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv1d { .. } => "conv1d",
            Layer::Conv2d { .. } => "conv2d",
            Layer::Maxpool { .. } => "maxpool",
            Layer::GlobalAvgPool => "global_avg_pool",
            Layer::Flatten => "flatten",
            Layer::Activation { .. } => "activation",
        }
    }
}

/// Architecture of one projection network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<Layer>,
    #[serde(default = "default_output_dim")]
    pub output_dim: usize,
}

fn default_output_dim() -> usize {
    16
}

/// A layer with all of its dimensions resolved.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Op {
    Dense { inputs: usize, units: usize },
    Conv1d { len: usize, channels: usize, filters: usize, kernel: usize, stride: usize, out_len: usize },
    Conv2d {
        height: usize,
        width: usize,
        channels: usize,
        filters: usize,
        kernel: usize,
        stride: usize,
        out_h: usize,
        out_w: usize,
    },
    MaxPool1d { len: usize, channels: usize, window: usize, out_len: usize },
    MaxPool2d { height: usize, width: usize, channels: usize, window: usize, out_h: usize, out_w: usize },
    GlobalAvgPool { positions: usize, channels: usize },
    Identity,
    Relu,
}

impl Op {
    /// `(weight count, bias count, fan_in, fan_out)` for parametric ops.
    pub(crate) fn param_shape(&self) -> Option<(usize, usize, usize, usize)> {
        match *self {
            Op::Dense { inputs, units } => Some((inputs * units, units, inputs, units)),
            Op::Conv1d { channels, filters, kernel, .. } => {
                Some((kernel * channels * filters, filters, kernel * channels, kernel * filters))
            }
            Op::Conv2d { channels, filters, kernel, .. } => Some((
                kernel * kernel * channels * filters,
                filters,
                kernel * kernel * channels,
                kernel * kernel * filters,
            )),
            _ => None,
        }
    }
}

/// Shapes and resolved ops of a validated spec.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Plan {
    pub ops: Vec<Op>,
    /// `shapes[0]` is the input shape, `shapes[i + 1]` the output of layer `i`.
    pub shapes: Vec<Vec<usize>>,
}

impl Plan {
    pub fn size(&self, i: usize) -> usize {
        self.shapes[i].iter().product()
    }

    pub fn input_size(&self) -> usize {
        self.size(0)
    }

    pub fn output_size(&self) -> usize {
        self.size(self.shapes.len() - 1)
    }
}

fn shape_err(layer: usize, message: impl Into<String>) -> NnError {
    NnError::Shape { layer, message: message.into() }
}

impl EncoderSpec {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>, output_dim: usize) -> Self {
        Self { input_shape, layers, output_dim }
    }

    pub fn input_size(&self) -> usize {
        self.input_shape.iter().product()
    }

    /// Output shape after every layer, starting with the input shape.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        Ok(self.plan()?.shapes)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        self.plan().map(|_| ())
    }

    pub fn param_count(&self) -> Result<usize, NnError> {
        Ok(self
            .plan()?
            .ops
            .iter()
            .filter_map(Op::param_shape)
            .map(|(w, b, _, _)| w + b)
            .sum())
    }

    pub(crate) fn plan(&self) -> Result<Plan, NnError> {
        if self.input_shape.is_empty() || self.input_shape.iter().any(|&d| d == 0) {
            return Err(NnError::InvalidSpec(format!(
                "input shape {:?} must be non-empty with positive dimensions",
                self.input_shape
            )));
        }
        if self.output_dim == 0 {
            return Err(NnError::InvalidSpec("output_dim must be positive".into()));
        }
        let mut shapes = vec![self.input_shape.clone()];
        let mut ops = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = shapes.last().unwrap().clone();
            let (op, next) = match *layer {
                Layer::Dense { units, inputs } => {
                    if cur.len() != 1 {
                        return Err(shape_err(i, format!("dense expects a flat input, got {cur:?}")));
                    }
                    if let Some(declared) = inputs {
                        if declared != cur[0] {
                            return Err(shape_err(
                                i,
                                format!("dense declares {declared} inputs but receives {}", cur[0]),
                            ));
                        }
                    }
                    if units == 0 {
                        return Err(shape_err(i, "dense units must be positive"));
                    }
                    (Op::Dense { inputs: cur[0], units }, vec![units])
                }
                Layer::Conv1d { filters, kernel, stride } => {
                    if cur.len() != 2 {
                        return Err(shape_err(i, format!("conv1d expects [len, channels], got {cur:?}")));
                    }
                    if filters == 0 || kernel == 0 || stride == 0 {
                        return Err(shape_err(i, "conv1d filters, kernel and stride must be positive"));
                    }
                    if kernel > cur[0] {
                        return Err(shape_err(i, format!("kernel {kernel} exceeds length {}", cur[0])));
                    }
                    let out_len = (cur[0] - kernel) / stride + 1;
                    (
                        Op::Conv1d { len: cur[0], channels: cur[1], filters, kernel, stride, out_len },
                        vec![out_len, filters],
                    )
                }
                Layer::Conv2d { filters, kernel, stride } => {
                    if cur.len() != 3 {
                        return Err(shape_err(
                            i,
                            format!("conv2d expects [height, width, channels], got {cur:?}"),
                        ));
                    }
                    if filters == 0 || kernel == 0 || stride == 0 {
                        return Err(shape_err(i, "conv2d filters, kernel and stride must be positive"));
                    }
                    if kernel > cur[0] || kernel > cur[1] {
                        return Err(shape_err(i, format!("kernel {kernel} exceeds grid {cur:?}")));
                    }
                    let out_h = (cur[0] - kernel) / stride + 1;
                    let out_w = (cur[1] - kernel) / stride + 1;
                    (
                        Op::Conv2d {
                            height: cur[0],
                            width: cur[1],
                            channels: cur[2],
                            filters,
                            kernel,
                            stride,
                            out_h,
                            out_w,
                        },
                        vec![out_h, out_w, filters],
                    )
                }
                Layer::Maxpool { window } => {
                    if window == 0 {
                        return Err(shape_err(i, "maxpool window must be positive"));
                    }
                    match cur.len() {
                        2 => {
                            let out_len = cur[0] / window;
                            if out_len == 0 {
                                return Err(shape_err(i, format!("window {window} exceeds length {}", cur[0])));
                            }
                            (
                                Op::MaxPool1d { len: cur[0], channels: cur[1], window, out_len },
                                vec![out_len, cur[1]],
                            )
                        }
                        3 => {
                            let (out_h, out_w) = (cur[0] / window, cur[1] / window);
                            if out_h == 0 || out_w == 0 {
                                return Err(shape_err(i, format!("window {window} exceeds grid {cur:?}")));
                            }
                            (
                                Op::MaxPool2d {
                                    height: cur[0],
                                    width: cur[1],
                                    channels: cur[2],
                                    window,
                                    out_h,
                                    out_w,
                                },
                                vec![out_h, out_w, cur[2]],
                            )
                        }
                        _ => return Err(shape_err(i, format!("maxpool needs a spatial input, got {cur:?}"))),
                    }
                }
                Layer::GlobalAvgPool => {
                    if cur.len() < 2 {
                        return Err(shape_err(i, format!("global_avg_pool needs a spatial input, got {cur:?}")));
                    }
                    let channels = *cur.last().unwrap();
                    let positions = cur[..cur.len() - 1].iter().product();
                    (Op::GlobalAvgPool { positions, channels }, vec![channels])
                }
                Layer::Flatten => (Op::Identity, vec![cur.iter().product()]),
                Layer::Activation { function: Activation::Relu } => (Op::Relu, cur.clone()),
                Layer::Activation { function: Activation::Linear } => (Op::Identity, cur.clone()),
            };
            ops.push(op);
            shapes.push(next);
        }

        let last = shapes.last().unwrap();
        if last.as_slice() != [self.output_dim] {
            return Err(NnError::InvalidSpec(format!(
                "network ends with shape {last:?}, expected [{}]",
                self.output_dim
            )));
        }
        let final_layer = self
            .layers
            .iter()
            .rev()
            .find(|l| !matches!(l, Layer::Activation { function: Activation::Linear }));
        if !matches!(final_layer, Some(Layer::Dense { .. })) {
            return Err(NnError::InvalidSpec(
                "the final non-linear-activation layer must be dense so the output is linear".into(),
            ));
        }
        Ok(Plan { ops, shapes })
    }
}

/// Default architectures per output format.
impl EncoderSpec {
    /// Dense 256-relu, 64-relu, linear output.
    pub fn default_vector(features: usize, output_dim: usize) -> Self {
        Self::new(
            vec![features],
            vec![Layer::dense(256), Layer::relu(), Layer::dense(64), Layer::relu(), Layer::dense(output_dim)],
            output_dim,
        )
    }

    /// conv1d(32, k7)-relu, conv1d(32, k5)-relu, global average pool, dense 64-relu, linear output.
    pub fn default_timeseries(timepoints: usize, channels: usize, output_dim: usize) -> Self {
        Self::new(
            vec![timepoints, channels],
            vec![
                Layer::conv1d(32, 7),
                Layer::relu(),
                Layer::conv1d(32, 5),
                Layer::relu(),
                Layer::GlobalAvgPool,
                Layer::dense(64),
                Layer::relu(),
                Layer::dense(output_dim),
            ],
            output_dim,
        )
    }

    /// conv2d(16, k5)-relu, maxpool 2, conv2d(32, k3)-relu, maxpool 2, flatten,
    /// dense 64-relu, linear output.
    pub fn default_grid(height: usize, width: usize, channels: usize, output_dim: usize) -> Self {
        Self::new(
            vec![height, width, channels],
            vec![
                Layer::conv2d(16, 5),
                Layer::relu(),
                Layer::Maxpool { window: 2 },
                Layer::conv2d(32, 3),
                Layer::relu(),
                Layer::Maxpool { window: 2 },
                Layer::Flatten,
                Layer::dense(64),
                Layer::relu(),
                Layer::dense(output_dim),
            ],
            output_dim,
        )
    }
}
