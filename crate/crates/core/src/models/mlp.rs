use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_classes, gradient_descent, one_hot, Classifier, Result, TrainConfig,
};
use crate::preprocess::FeatureMatrix;
use crate::spectra::Label;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One hidden layer, logistic activations on both layers:
/// `h_k = g(Σ_i v_ki x_i + b_k)`, `o_j = f(Σ_k w_jk h_k + c_j)`.
///
/// The biases are the weights of a constant unit; they start at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    /// `hidden × inputs`, row-major.
    input_to_hidden: Vec<f64>,
    hidden_bias: Vec<f64>,
    /// `outputs × hidden`, row-major.
    hidden_to_output: Vec<f64>,
    output_bias: Vec<f64>,
}

struct Pass {
    hidden: Vec<f64>,
    out: Vec<f64>,
}

impl MlpNetwork {
    /// Network with explicit weights and zero biases.
    pub fn from_weights(
        inputs: usize,
        hidden: usize,
        outputs: usize,
        input_to_hidden: Vec<f64>,
        hidden_to_output: Vec<f64>,
    ) -> Self {
        assert_eq!(input_to_hidden.len(), inputs * hidden);
        assert_eq!(hidden_to_output.len(), hidden * outputs);
        Self {
            inputs,
            hidden,
            outputs,
            input_to_hidden,
            hidden_bias: vec![0.0; hidden],
            hidden_to_output,
            output_bias: vec![0.0; outputs],
        }
    }

    /// Uniform weights in ±1/√fan_in.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = 1.0 / (inputs.max(1) as f64).sqrt();
        let r2 = 1.0 / (hidden.max(1) as f64).sqrt();
        let v = (0..inputs * hidden).map(|_| rng.random_range(-r1..=r1)).collect();
        let w = (0..hidden * outputs).map(|_| rng.random_range(-r2..=r2)).collect();
        Self::from_weights(inputs, hidden, outputs, v, w)
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden
    }

    pub fn output_count(&self) -> usize {
        self.outputs
    }

    pub fn input_to_hidden(&self) -> &[f64] {
        &self.input_to_hidden
    }

    pub fn hidden_to_output(&self) -> &[f64] {
        &self.hidden_to_output
    }

    fn pass(&self, x: &[f64]) -> Pass {
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|k| {
                let v = &self.input_to_hidden[k * self.inputs..(k + 1) * self.inputs];
                sigmoid(v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.hidden_bias[k])
            })
            .collect();
        let out = (0..self.outputs)
            .map(|j| {
                let w = &self.hidden_to_output[j * self.hidden..(j + 1) * self.hidden];
                sigmoid(w.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>() + self.output_bias[j])
            })
            .collect();
        Pass { hidden, out }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.inputs, "input dimension");
        self.pass(x).out
    }

    /// Parameter vector: input-to-hidden weights, hidden biases,
    /// hidden-to-output weights, output biases.
    pub fn params(&self) -> Vec<f64> {
        [
            &self.input_to_hidden[..],
            &self.hidden_bias,
            &self.hidden_to_output,
            &self.output_bias,
        ]
        .concat()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let (a, rest) = p.split_at(self.input_to_hidden.len());
        let (b, rest) = rest.split_at(self.hidden);
        let (c, d) = rest.split_at(self.hidden_to_output.len());
        self.input_to_hidden.copy_from_slice(a);
        self.hidden_bias.copy_from_slice(b);
        self.hidden_to_output.copy_from_slice(c);
        self.output_bias.copy_from_slice(d);
    }

    /// Cost-weighted squared error `1/(2n) Σ c_y ‖o − t‖²` and its gradient
    /// with respect to [`Self::params`].
    pub fn loss_and_gradient(
        &self,
        x: &FeatureMatrix,
        targets: &[Label],
        cost: &super::CostPolicy,
    ) -> (f64, Vec<f64>) {
        let n = x.rows() as f64;
        let (ni, nh, no) = (self.inputs, self.hidden, self.outputs);
        let mut g_v = vec![0.0; nh * ni];
        let mut g_b1 = vec![0.0; nh];
        let mut g_w = vec![0.0; no * nh];
        let mut g_b2 = vec![0.0; no];
        let mut loss = 0.0;
        for (row, &label) in x.row_iter().zip(targets) {
            let c = cost.weight(label);
            let t = one_hot(label);
            let Pass { hidden, out } = self.pass(row);
            let mut delta_h = vec![0.0; nh];
            for j in 0..no {
                let err = out[j] - t.get(j).copied().unwrap_or(0.0);
                loss += c * err * err;
                let d = c * err * out[j] * (1.0 - out[j]) / n;
                g_b2[j] += d;
                for k in 0..nh {
                    g_w[j * nh + k] += d * hidden[k];
                    delta_h[k] += d * self.hidden_to_output[j * nh + k];
                }
            }
            for k in 0..nh {
                let d = delta_h[k] * hidden[k] * (1.0 - hidden[k]);
                g_b1[k] += d;
                for i in 0..ni {
                    g_v[k * ni + i] += d * row[i];
                }
            }
        }
        (loss / (2.0 * n), [g_v, g_b1, g_w, g_b2].concat())
    }
}

impl Classifier for MlpNetwork {
    fn input_dim(&self) -> usize {
        self.inputs
    }

    fn scores(&self, x: &[f64]) -> [f64; 2] {
        let out = self.forward(x);
        [out[0], out[1]]
    }
}

/// Backpropagation by full-batch gradient descent on the cost-weighted MSE.
pub fn train_mlp(
    cfg: &TrainConfig,
    hidden: usize,
    features: &FeatureMatrix,
    targets: &[Label],
) -> Result<MlpNetwork> {
    cfg.validate()?;
    check_classes(targets)?;
    if hidden == 0 {
        return Err(super::ModelError::InvalidConfig("hidden units must be positive".into()));
    }
    let mut net = MlpNetwork::random(features.cols(), hidden, 2, cfg.seed);
    let template = net.clone();
    let (params, _) = gradient_descent(
        net.params(),
        |p| {
            let mut m = template.clone();
            m.set_params(p);
            m.loss_and_gradient(features, targets, &cfg.cost)
        },
        |_| {},
        cfg,
    )?;
    net.set_params(&params);
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CostPolicy;
    use crate::spectra::Histology;

    #[test]
    fn zero_weights_give_half() {
        let net = MlpNetwork::from_weights(3, 4, 2, vec![0.0; 12], vec![0.0; 8]);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn one_one_one_network() {
        let net = MlpNetwork::from_weights(1, 1, 1, vec![1.0], vec![1.0]);
        let o = net.forward(&[0.0])[0];
        assert!((o - 1.0 / (1.0 + (-0.5f64).exp())).abs() < 1e-15);
        assert!((o - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn equal_costs_scale_plain_mse() {
        let fm = FeatureMatrix::from_rows(
            &[vec![0.1, 0.2], vec![0.9, 0.4], vec![0.3, 0.8]],
            &[Histology::NormalSquamous, Histology::HighGradeSil, Histology::LowGradeSil],
        )
        .unwrap();
        let y = fm.targets();
        let net = MlpNetwork::random(2, 3, 2, 4);
        let (one, _) = net.loss_and_gradient(&fm, &y, &CostPolicy::default());
        let (three, _) = net.loss_and_gradient(&fm, &y, &CostPolicy::new(3.0, 3.0, 0.5).unwrap());
        assert!((three - 3.0 * one).abs() < 1e-15);
    }
}
