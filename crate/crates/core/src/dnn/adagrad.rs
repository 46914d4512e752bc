use super::network::{Gradients, Mlp};
use crate::error::{Error, Result};

/// Accumulated squared gradients, one entry per network parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdagradState {
    pub(crate) accum: Gradients,
}

impl AdagradState {
    pub fn new(mlp: &Mlp) -> Self {
        Self {
            accum: mlp.zero_gradients(),
        }
    }

    pub fn accumulated(&self) -> &Gradients {
        &self.accum
    }
}

/// `G ← G + g²;  θ ← θ − η·g / (√G + ε)` for every parameter.
pub fn adagrad_step(
    mlp: &mut Mlp,
    state: &mut AdagradState,
    grads: &Gradients,
    learning_rate: f64,
    epsilon: f64,
) -> Result<()> {
    if !(learning_rate > 0.0) || !(epsilon > 0.0) {
        return Err(Error::domain("learning rate and epsilon must be positive"));
    }
    let shapes_match = mlp.layers().len() == grads.layers.len()
        && mlp
            .layers()
            .iter()
            .zip(&grads.layers)
            .zip(&state.accum.layers)
            .all(|((p, g), a)| {
                p.weights.len() == g.weights.len()
                    && p.bias.len() == g.bias.len()
                    && a.weights.len() == g.weights.len()
                    && a.bias.len() == g.bias.len()
            });
    if !shapes_match {
        return Err(Error::domain("gradient, state and network shapes differ"));
    }

    let update = |theta: &mut [f64], acc: &mut [f64], g: &[f64]| {
        for ((t, a), &gi) in theta.iter_mut().zip(acc.iter_mut()).zip(g) {
            *a += gi * gi;
            *t -= learning_rate * gi / (a.sqrt() + epsilon);
        }
    };
    for ((layer, acc), g) in mlp
        .layers_mut()
        .iter_mut()
        .zip(state.accum.layers.iter_mut())
        .zip(&grads.layers)
    {
        update(&mut layer.weights, &mut acc.weights, &g.weights);
        update(&mut layer.bias, &mut acc.bias, &g.bias);
    }
    Ok(())
}
