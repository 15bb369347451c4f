//! The residual correction network: a bilinear-upsampled baseline fed
//! through an attention U-Net whose output is added back onto the
//! baseline. With the final projection zero-initialized the whole model
//! starts out exactly equal to bilinear interpolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::layers::{
    concat_channels, conv_backward, conv_forward, maxpool2_backward, maxpool2_forward,
    relu_backward, relu_forward, sigmoid, split_channels, upsample_backward, upsample_forward,
};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::image::Image;

/// Channels the network consumes and produces.
pub const IMAGE_CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Upscale factor, 4 or 8.
    pub scale: usize,
    /// Encoder levels before the bottleneck.
    pub depth: usize,
    /// Feature count at the first level; doubles per level.
    pub base_channels: usize,
    /// Gate skip connections with additive attention.
    pub attention_enabled: bool,
    /// Zero the final projection so the untrained model reproduces the
    /// bilinear baseline.
    pub zero_init_final: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            scale: 4,
            depth: 4,
            base_channels: 32,
            attention_enabled: true,
            zero_init_final: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale != 4 && self.scale != 8 {
            return Err(Error::Config(format!(
                "scale must be 4 or 8, got {}",
                self.scale
            )));
        }
        if self.depth < 1 {
            return Err(Error::Config("depth must be >= 1".into()));
        }
        if self.base_channels < 1 {
            return Err(Error::Config("base_channels must be >= 1".into()));
        }
        Ok(())
    }

    /// Smallest multiple the low-res input dims must honor so the
    /// upsampled grid divides by 2^depth.
    pub fn input_multiple(&self) -> usize {
        let pow = 1usize << self.depth;
        pow / gcd(pow, self.scale)
    }

    fn check_input(&self, img: &Image) -> Result<()> {
        if img.channels() != IMAGE_CHANNELS {
            return Err(Error::Config(format!(
                "model expects {IMAGE_CHANNELS}-channel input, got {}",
                img.channels()
            )));
        }
        let m = self.input_multiple();
        if !img.height().is_multiple_of(m) {
            return Err(Error::NotDivisible {
                axis: "input height",
                len: img.height(),
                divisor: m,
            });
        }
        if !img.width().is_multiple_of(m) {
            return Err(Error::NotDivisible {
                axis: "input width",
                len: img.width(),
                divisor: m,
            });
        }
        Ok(())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// One named weight array. Shapes are a pure function of the config.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ParamEntry {
    fn numel(shape: &[usize]) -> usize {
        shape.iter().product()
    }
}

/// The model's trainable state: named arrays in a fixed plan order.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub entries: Vec<ParamEntry>,
}

impl Parameters {
    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|e| e.data.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    fn index_of(&self, name: &str) -> usize {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    /// All-zero clone used as a gradient accumulator.
    pub fn zeros_like(&self) -> Parameters {
        Parameters {
            entries: self
                .entries
                .iter()
                .map(|e| ParamEntry {
                    name: e.name.clone(),
                    shape: e.shape.clone(),
                    data: vec![0.0; e.data.len()],
                })
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.data.iter().all(|v| v.is_finite()))
    }
}

/// Ordered (name, shape) list of every trainable array.
pub fn parameter_plan(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let base = config.base_channels;
    let mut plan = Vec::new();
    let conv = |name: String, out_ch: usize, in_ch: usize, k: usize, plan: &mut Vec<_>| {
        plan.push((format!("{name}.weight"), vec![out_ch, in_ch, k, k]));
        plan.push((format!("{name}.bias"), vec![out_ch]));
    };
    let mut in_ch = IMAGE_CHANNELS;
    for i in 0..config.depth {
        let ch = base << i;
        conv(format!("enc{i}.conv1"), ch, in_ch, 3, &mut plan);
        conv(format!("enc{i}.conv2"), ch, ch, 3, &mut plan);
        in_ch = ch;
    }
    let bottleneck_ch = base << config.depth;
    conv("bottleneck.conv1".into(), bottleneck_ch, in_ch, 3, &mut plan);
    conv(
        "bottleneck.conv2".into(),
        bottleneck_ch,
        bottleneck_ch,
        3,
        &mut plan,
    );
    for i in (0..config.depth).rev() {
        let skip_ch = base << i;
        let deeper_ch = base << (i + 1);
        if config.attention_enabled {
            let inter = (skip_ch / 2).max(1);
            conv(format!("dec{i}.att.skip_proj"), inter, skip_ch, 1, &mut plan);
            conv(format!("dec{i}.att.gate_proj"), inter, deeper_ch, 1, &mut plan);
            conv(format!("dec{i}.att.score"), 1, inter, 1, &mut plan);
        }
        conv(
            format!("dec{i}.conv1"),
            skip_ch,
            skip_ch + deeper_ch,
            3,
            &mut plan,
        );
        conv(format!("dec{i}.conv2"), skip_ch, skip_ch, 3, &mut plan);
    }
    conv("final.proj".into(), IMAGE_CHANNELS, base, 1, &mut plan);
    plan
}

/// Total trainable scalar count for a config.
pub fn parameter_count(config: &ModelConfig) -> usize {
    parameter_plan(config)
        .iter()
        .map(|(_, s)| ParamEntry::numel(s))
        .sum()
}

/// Deterministic fan-in-scaled initialization. Weights are uniform in
/// +-sqrt(6 / fan_in); biases start at zero. With `zero_init_final` the
/// final projection is exactly zero.
pub fn init_parameters(config: &ModelConfig, seed: u64) -> Result<Parameters> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (name, shape) in parameter_plan(config) {
        let n = ParamEntry::numel(&shape);
        let is_final = name.starts_with("final.");
        let is_bias = shape.len() == 1;
        let data = if is_bias || (is_final && config.zero_init_final) {
            vec![0.0; n]
        } else {
            let fan_in: usize = shape[1..].iter().product();
            let bound = (6.0 / fan_in as f64).sqrt();
            (0..n).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound).collect()
        };
        entries.push(ParamEntry { name, shape, data });
    }
    Ok(Parameters { entries })
}

/// Checks that a parameter set matches the plan for `config`.
pub fn validate_parameters(config: &ModelConfig, params: &Parameters) -> Result<()> {
    let plan = parameter_plan(config);
    if plan.len() != params.entries.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} parameter arrays, found {}",
            plan.len(),
            params.entries.len()
        )));
    }
    for ((name, shape), entry) in plan.iter().zip(&params.entries) {
        if name != &entry.name || shape != &entry.shape {
            return Err(Error::Checkpoint(format!(
                "parameter {} with shape {:?} does not match plan entry {} {:?}",
                entry.name, entry.shape, name, shape
            )));
        }
        if entry.data.len() != ParamEntry::numel(shape) {
            return Err(Error::Checkpoint(format!(
                "parameter {} has {} values for shape {:?}",
                entry.name,
                entry.data.len(),
                shape
            )));
        }
    }
    Ok(())
}

struct ConvRef {
    w: usize,
    b: usize,
    out_ch: usize,
    k: usize,
}

impl ConvRef {
    fn resolve(params: &Parameters, name: &str) -> ConvRef {
        let w = params.index_of(&format!("{name}.weight"));
        let b = params.index_of(&format!("{name}.bias"));
        let shape = &params.entries[w].shape;
        ConvRef {
            w,
            b,
            out_ch: shape[0],
            k: shape[2],
        }
    }

    fn forward(&self, params: &Parameters, input: &Tensor) -> Tensor {
        conv_forward(
            input,
            &params.entries[self.w].data,
            &params.entries[self.b].data,
            self.out_ch,
            self.k,
        )
    }

    fn backward(
        &self,
        params: &Parameters,
        grads: &mut Parameters,
        input: &Tensor,
        grad_out: &Tensor,
    ) -> Tensor {
        let g = conv_backward(
            input,
            &params.entries[self.w].data,
            self.out_ch,
            self.k,
            grad_out,
        );
        for (a, b) in grads.entries[self.w].data.iter_mut().zip(&g.weight) {
            *a += b;
        }
        for (a, b) in grads.entries[self.b].data.iter_mut().zip(&g.bias) {
            *a += b;
        }
        g.input
    }
}

struct BlockRef {
    conv1: ConvRef,
    conv2: ConvRef,
}

impl BlockRef {
    fn resolve(params: &Parameters, name: &str) -> BlockRef {
        BlockRef {
            conv1: ConvRef::resolve(params, &format!("{name}.conv1")),
            conv2: ConvRef::resolve(params, &format!("{name}.conv2")),
        }
    }
}

struct GateRef {
    skip_proj: ConvRef,
    gate_proj: ConvRef,
    score: ConvRef,
}

struct Layout {
    enc: Vec<BlockRef>,
    bottleneck: BlockRef,
    dec: Vec<(Option<GateRef>, BlockRef)>,
    final_proj: ConvRef,
}

impl Layout {
    fn resolve(config: &ModelConfig, params: &Parameters) -> Layout {
        let enc = (0..config.depth)
            .map(|i| BlockRef::resolve(params, &format!("enc{i}")))
            .collect();
        let bottleneck = BlockRef::resolve(params, "bottleneck");
        let dec = (0..config.depth)
            .rev()
            .map(|i| {
                let gate = config.attention_enabled.then(|| GateRef {
                    skip_proj: ConvRef::resolve(params, &format!("dec{i}.att.skip_proj")),
                    gate_proj: ConvRef::resolve(params, &format!("dec{i}.att.gate_proj")),
                    score: ConvRef::resolve(params, &format!("dec{i}.att.score")),
                });
                (gate, BlockRef::resolve(params, &format!("dec{i}")))
            })
            .collect();
        let final_proj = ConvRef::resolve(params, "final.proj");
        Layout {
            enc,
            bottleneck,
            dec,
            final_proj,
        }
    }
}

struct BlockTape {
    input: Tensor,
    act1: Tensor,
    act2: Tensor,
}

fn block_forward(refs: &BlockRef, params: &Parameters, input: Tensor) -> (Tensor, BlockTape) {
    let act1 = relu_forward(&refs.conv1.forward(params, &input));
    let act2 = relu_forward(&refs.conv2.forward(params, &act1));
    (
        act2.clone(),
        BlockTape {
            input,
            act1,
            act2,
        },
    )
}

fn block_backward(
    refs: &BlockRef,
    params: &Parameters,
    grads: &mut Parameters,
    tape: &BlockTape,
    grad_out: &Tensor,
) -> Tensor {
    let d_pre2 = relu_backward(&tape.act2, grad_out);
    let d_act1 = refs.conv2.backward(params, grads, &tape.act1, &d_pre2);
    let d_pre1 = relu_backward(&tape.act1, &d_act1);
    refs.conv1.backward(params, grads, &tape.input, &d_pre1)
}

struct GateTape {
    relu_out: Tensor,
    coeff: Tensor,
}

/// coeff = sigmoid(score(relu(skip_proj(skip) + gate_proj(up(gating))))),
/// one coefficient per location, broadcast over skip channels.
fn gate_forward(
    refs: &GateRef,
    params: &Parameters,
    skip: &Tensor,
    gating_up: &Tensor,
) -> (Tensor, GateTape) {
    let mut summed = refs.skip_proj.forward(params, skip);
    let from_gate = refs.gate_proj.forward(params, gating_up);
    summed.add_assign(&from_gate);
    let relu_out = relu_forward(&summed);
    let mut coeff = refs.score.forward(params, &relu_out);
    for v in &mut coeff.data {
        *v = sigmoid(*v);
    }
    let mut gated = skip.clone();
    let plane = skip.plane_len();
    for c in 0..skip.channels {
        let p = gated.plane_mut(c);
        for (v, k) in p.iter_mut().zip(&coeff.data[..plane]) {
            *v *= k;
        }
    }
    (gated, GateTape { relu_out, coeff })
}

/// Returns (grad wrt skip, grad wrt upsampled gating).
fn gate_backward(
    refs: &GateRef,
    params: &Parameters,
    grads: &mut Parameters,
    tape: &GateTape,
    skip: &Tensor,
    gating_up: &Tensor,
    grad_gated: &Tensor,
) -> (Tensor, Tensor) {
    let plane = skip.plane_len();
    // product rule: gated = skip (x) coeff
    let mut d_skip = grad_gated.clone();
    let mut d_coeff = Tensor::zeros(1, skip.height, skip.width);
    for c in 0..skip.channels {
        let g = grad_gated.plane(c);
        let s = skip.plane(c);
        let ds = d_skip.plane_mut(c);
        for i in 0..plane {
            ds[i] = g[i] * tape.coeff.data[i];
            d_coeff.data[i] += g[i] * s[i];
        }
    }
    // through the sigmoid
    let mut d_score = d_coeff;
    for (d, k) in d_score.data.iter_mut().zip(&tape.coeff.data) {
        *d *= k * (1.0 - k);
    }
    let d_relu = refs
        .score
        .backward(params, grads, &tape.relu_out, &d_score);
    let d_sum = relu_backward(&tape.relu_out, &d_relu);
    let d_skip_proj = refs.skip_proj.backward(params, grads, skip, &d_sum);
    let d_gating_up = refs.gate_proj.backward(params, grads, gating_up, &d_sum);
    d_skip.add_assign(&d_skip_proj);
    (d_skip, d_gating_up)
}

/// Standalone additive attention gate, as used on every skip connection.
/// `gating` sits at half the spatial resolution of `skip` and is
/// upsampled internally. Weights follow the same layout as the plan
/// entries (`skip_proj`, `gate_proj`, `score`).
pub struct GateParams {
    pub inter_channels: usize,
    pub skip_proj_weight: Vec<f64>,
    pub skip_proj_bias: Vec<f64>,
    pub gate_proj_weight: Vec<f64>,
    pub gate_proj_bias: Vec<f64>,
    pub score_weight: Vec<f64>,
    pub score_bias: Vec<f64>,
}

impl GateParams {
    pub fn zeros(skip_channels: usize, gating_channels: usize, inter_channels: usize) -> Self {
        Self {
            inter_channels,
            skip_proj_weight: vec![0.0; inter_channels * skip_channels],
            skip_proj_bias: vec![0.0; inter_channels],
            gate_proj_weight: vec![0.0; inter_channels * gating_channels],
            gate_proj_bias: vec![0.0; inter_channels],
            score_weight: vec![0.0; inter_channels],
            score_bias: vec![0.0; 1],
        }
    }
}

pub fn attention_gate(skip: &Tensor, gating: &Tensor, gate: &GateParams) -> Result<Tensor> {
    if gating.height * 2 != skip.height || gating.width * 2 != skip.width {
        return Err(Error::ShapeMismatch {
            context: "attention_gate".to_string(),
            left: format!("skip {}x{}", skip.height, skip.width),
            right: format!("gating {}x{} (must be half resolution)", gating.height, gating.width),
        });
    }
    let gating_up = upsample_forward(gating, 2);
    let mut summed = conv_forward(
        skip,
        &gate.skip_proj_weight,
        &gate.skip_proj_bias,
        gate.inter_channels,
        1,
    );
    let from_gate = conv_forward(
        &gating_up,
        &gate.gate_proj_weight,
        &gate.gate_proj_bias,
        gate.inter_channels,
        1,
    );
    summed.add_assign(&from_gate);
    let relu_out = relu_forward(&summed);
    let mut coeff = conv_forward(&relu_out, &gate.score_weight, &gate.score_bias, 1, 1);
    for v in &mut coeff.data {
        *v = sigmoid(*v);
    }
    let mut gated = skip.clone();
    let plane = skip.plane_len();
    for c in 0..skip.channels {
        let p = gated.plane_mut(c);
        for (v, k) in p.iter_mut().zip(&coeff.data[..plane]) {
            *v *= k;
        }
    }
    Ok(gated)
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardPass {
    /// Raw (unclamped) model output: baseline + correction.
    pub output: Tensor,
    /// The bilinear-upsampled input the correction was added to.
    pub baseline: Tensor,
    enc: Vec<EncTape>,
    bottleneck: BlockTape,
    dec: Vec<DecTape>,
    lr_dims: (usize, usize),
}

struct EncTape {
    block: BlockTape,
    pool_idx: Vec<u32>,
    pre_pool_dims: (usize, usize, usize),
}

struct DecTape {
    level: usize,
    upsampled: Tensor,
    gate: Option<GateTape>,
    block: BlockTape,
}

/// Runs the full model on one low-res patch. The output is NOT clamped;
/// use [`Tensor::to_image_clamped`] to export.
pub fn forward_pass(config: &ModelConfig, params: &Parameters, lr: &Image) -> Result<ForwardPass> {
    config.validate()?;
    config.check_input(lr)?;
    validate_parameters(config, params)?;
    let layout = Layout::resolve(config, params);
    let lr_t = Tensor::from_image(lr);
    let baseline = upsample_forward(&lr_t, config.scale);

    let mut enc = Vec::with_capacity(config.depth);
    let mut x = baseline.clone();
    for refs in &layout.enc {
        let (out, block) = block_forward(refs, params, x);
        let (pooled, pool_idx) = maxpool2_forward(&out);
        enc.push(EncTape {
            pre_pool_dims: (out.channels, out.height, out.width),
            block,
            pool_idx,
        });
        x = pooled;
    }
    let (mut y, bottleneck) = block_forward(&layout.bottleneck, params, x);

    let mut dec = Vec::with_capacity(config.depth);
    for (k, (gate_refs, block_refs)) in layout.dec.iter().enumerate() {
        let level = config.depth - 1 - k;
        let skip = &enc[level].block.act2;
        let upsampled = upsample_forward(&y, 2);
        let (gated, gate_tape) = match gate_refs {
            Some(refs) => {
                let (g, t) = gate_forward(refs, params, skip, &upsampled);
                (g, Some(t))
            }
            None => (skip.clone(), None),
        };
        let cat = concat_channels(&gated, &upsampled);
        let (out, block) = block_forward(block_refs, params, cat);
        dec.push(DecTape {
            level,
            upsampled,
            gate: gate_tape,
            block,
        });
        y = out;
    }

    let correction = layout.final_proj.forward(params, &y);
    let mut output = baseline.clone();
    output.add_assign(&correction);
    Ok(ForwardPass {
        output,
        baseline,
        enc,
        bottleneck,
        dec,
        lr_dims: (lr.height(), lr.width()),
    })
}

/// Exact gradients of a scalar loss with respect to every parameter and
/// the low-res input, given the loss gradient at the model output.
pub fn backward_pass(
    config: &ModelConfig,
    params: &Parameters,
    pass: &ForwardPass,
    grad_output: &Tensor,
) -> (Parameters, Tensor) {
    let layout = Layout::resolve(config, params);
    let mut grads = params.zeros_like();

    // residual add: gradient reaches both the correction and the baseline
    let final_input = &pass.dec.last().expect("depth >= 1").block.act2;
    let mut d_y = layout
        .final_proj
        .backward(params, &mut grads, final_input, grad_output);

    let mut skip_grads: Vec<Option<Tensor>> = (0..config.depth).map(|_| None).collect();
    for (k, tape) in pass.dec.iter().enumerate().rev() {
        let (gate_refs, block_refs) = &layout.dec[k];
        let d_cat = block_backward(block_refs, params, &mut grads, &tape.block, &d_y);
        let skip_ch = tape.block.input.channels - tape.upsampled.channels;
        let (d_gated, d_up_cat) = split_channels(&d_cat, skip_ch);
        let skip = &pass.enc[tape.level].block.act2;
        let (d_skip, d_up) = match (gate_refs, &tape.gate) {
            (Some(refs), Some(gate_tape)) => {
                let (d_skip, d_up_gate) = gate_backward(
                    refs,
                    params,
                    &mut grads,
                    gate_tape,
                    skip,
                    &tape.upsampled,
                    &d_gated,
                );
                let mut d_up = d_up_cat;
                d_up.add_assign(&d_up_gate);
                (d_skip, d_up)
            }
            _ => (d_gated, d_up_cat),
        };
        skip_grads[tape.level] = Some(d_skip);
        let src_h = tape.upsampled.height / 2;
        let src_w = tape.upsampled.width / 2;
        d_y = upsample_backward(&d_up, src_h, src_w, 2);
    }

    let mut d_pooled = block_backward(
        &layout.bottleneck,
        params,
        &mut grads,
        &pass.bottleneck,
        &d_y,
    );
    for (level, refs) in layout.enc.iter().enumerate().rev() {
        let tape = &pass.enc[level];
        let mut d_block_out = maxpool2_backward(&tape.pool_idx, tape.pre_pool_dims, &d_pooled);
        if let Some(d_skip) = &skip_grads[level] {
            d_block_out.add_assign(d_skip);
        }
        d_pooled = block_backward(refs, params, &mut grads, &tape.block, &d_block_out);
    }

    // d_pooled now holds the gradient at the U-Net input (the baseline);
    // the residual connection adds the output gradient directly.
    let mut d_baseline = d_pooled;
    d_baseline.add_assign(grad_output);
    let (lr_h, lr_w) = pass.lr_dims;
    let grad_lr = upsample_backward(&d_baseline, lr_h, lr_w, config.scale);
    (grads, grad_lr)
}

/// Convenience wrapper: forward only, returning the raw output grid.
pub fn model_forward(config: &ModelConfig, params: &Parameters, lr: &Image) -> Result<Tensor> {
    Ok(forward_pass(config, params, lr)?.output)
}
