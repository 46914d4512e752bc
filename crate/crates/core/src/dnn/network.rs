use crate::error::{Error, Result};
use crate::numerics::SimRng;

/// Dense layer `r = tanh(W·r_prev + b)` with `W` stored row-major
/// (`outputs × inputs`).
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.inputs + inp]
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.outputs).map(|o| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.bias[o];
            z.tanh()
        }));
    }
}

/// Five-layer perceptron: input, three tanh hidden layers, tanh output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Gradient of the loss, shaped like the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// All-zero parameters for `dims = [d_in, h1, h2, h3, d_out]`.
    pub fn zeros(dims: [usize; 5]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::domain(format!(
                "layer widths must be positive, got {dims:?}"
            )));
        }
        Ok(Self {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    /// Uniform `±√(6/(fan_in + fan_out))` weights, zero biases.
    pub fn init(dims: [usize; 5], rng: &mut SimRng) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        for layer in &mut mlp.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.uniform(-limit, limit);
            }
        }
        Ok(mlp)
    }

    /// Build from explicit layers; the chain must describe exactly five layers.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() != 4 {
            return Err(Error::domain(format!(
                "expected 4 parameterized layers (3 hidden + output), got {}",
                layers.len()
            )));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs == 0 || l.outputs == 0 {
                return Err(Error::domain("layer widths must be positive"));
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::dim(
                    l.inputs * l.outputs,
                    l.weights.len(),
                    "layer parameter count",
                ));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::dim(layers[i - 1].outputs, l.inputs, "layer chain"));
            }
            if l.weights.iter().chain(&l.bias).any(|p| !p.is_finite()) {
                return Err(Error::domain("parameters must be finite"));
            }
        }
        Ok(Self { layers })
    }

    pub fn dims(&self) -> [usize; 5] {
        let l = &self.layers;
        [
            l[0].inputs,
            l[0].outputs,
            l[1].outputs,
            l[2].outputs,
            l[3].outputs,
        ]
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[3].outputs
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::dim(self.input_dim(), input.len(), "network input"));
        }
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Activations of every layer, input included.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward_into(acts.last().expect("non-empty"), &mut out);
            acts.push(out);
        }
        acts
    }
}

/// One training pair: scaled input coordinates and the encoded target.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

fn check_batch(mlp: &Mlp, batch: &[Sample]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::domain("loss needs a non-empty batch"));
    }
    for s in batch {
        if s.input.len() != mlp.input_dim() {
            return Err(Error::dim(mlp.input_dim(), s.input.len(), "sample input"));
        }
        if s.target.len() != mlp.output_dim() {
            return Err(Error::dim(
                mlp.output_dim(),
                s.target.len(),
                "sample target",
            ));
        }
    }
    Ok(())
}

/// Sum over the batch of `‖target − forward(input)‖²`.
pub fn loss(mlp: &Mlp, batch: &[Sample]) -> Result<f64> {
    check_batch(mlp, batch)?;
    let mut total = 0.0;
    for s in batch {
        let out = mlp.forward(&s.input)?;
        total += out
            .iter()
            .zip(&s.target)
            .map(|(o, t)| (t - o) * (t - o))
            .sum::<f64>();
    }
    Ok(total)
}

/// Exact gradient of [`loss`] by backpropagation.
pub fn backprop_gradients(mlp: &Mlp, batch: &[Sample]) -> Result<Gradients> {
    check_batch(mlp, batch)?;
    let mut grads = mlp.zero_gradients();
    let mut delta = Vec::new();
    let mut prev_delta = Vec::new();
    for s in batch {
        let acts = mlp.activations(&s.input);
        // dL/dr at the output
        delta.clear();
        delta.extend(
            acts.last()
                .expect("output")
                .iter()
                .zip(&s.target)
                .map(|(o, t)| 2.0 * (o - t)),
        );
        for (li, layer) in mlp.layers.iter().enumerate().rev() {
            let out = &acts[li + 1];
            let inp = &acts[li];
            // through tanh: dL/dz = dL/dr · (1 − r²)
            for (d, r) in delta.iter_mut().zip(out) {
                *d *= 1.0 - r * r;
            }
            let g = &mut grads.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, x) in row.iter_mut().zip(inp) {
                    *gw += d * x;
                }
            }
            if li > 0 {
                prev_delta.clear();
                prev_delta.extend((0..layer.inputs).map(|i| {
                    (0..layer.outputs)
                        .map(|o| layer.weight(o, i) * delta[o])
                        .sum::<f64>()
                }));
                std::mem::swap(&mut delta, &mut prev_delta);
            }
        }
    }
    Ok(grads)
}
