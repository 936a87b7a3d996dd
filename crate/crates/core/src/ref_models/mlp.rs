use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponential linear unit with unit scale.
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => elu(x),
            Activation::Relu => relu(x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Elu => "elu",
            Activation::Relu => "relu",
        }
    }
}

/// A fully connected layer computing `W x + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
    pub hidden_activation: Activation,
}

impl MlpParams {
    pub fn new(layers: Vec<DenseLayer>, hidden_activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("MLP layer list"));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::dims("MLP bias length", layer.out_dim(), layer.bias.len()));
            }
            if k > 0 && layers[k - 1].out_dim() != layer.in_dim() {
                return Err(Error::dims("MLP layer chain", layers[k - 1].out_dim(), layer.in_dim()));
            }
        }
        Ok(Self {
            layers,
            hidden_activation,
        })
    }

    pub fn zeros(dims: &[usize], hidden_activation: Activation) -> Result<Self> {
        let layers = dims
            .windows(2)
            .map(|w| DenseLayer {
                weights: Array2::zeros((w[1], w[0])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Self::new(layers, hidden_activation)
    }

    /// He-normal weights (`std = sqrt(2 / fan_in)`) and biases from
    /// `U[-0.1, 0.1]`, deterministic in `seed`.
    pub fn random_he(dims: &[usize], hidden_activation: Activation, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len().saturating_sub(1));
        for w in dims.windows(2) {
            let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt())
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let weights = Array2::from_shape_simple_fn((w[1], w[0]), || normal.sample(&mut rng));
            let bias = Array1::from_shape_simple_fn(w[1], || rng.random_range(-0.1..=0.1));
            layers.push(DenseLayer { weights, bias });
        }
        Self::new(layers, hidden_activation)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// `(in, out)` per layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.in_dim(), l.out_dim())).collect()
    }

    pub fn with_activation(&self, hidden_activation: Activation) -> Self {
        Self {
            layers: self.layers.clone(),
            hidden_activation,
        }
    }
}

/// Affine layers with the hidden activation between them; the last layer is linear.
pub fn mlp_forward(p: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.input_dim() {
        return Err(Error::dims("MLP input length", p.input_dim(), x.len()));
    }
    let mut h = Array1::from(x.to_vec());
    let last = p.layers.len() - 1;
    for (k, layer) in p.layers.iter().enumerate() {
        h = layer.weights.dot(&h) + &layer.bias;
        if k < last {
            h.mapv_inplace(|v| p.hidden_activation.apply(v));
        }
    }
    Ok(h.to_vec())
}

/// Batched forward pass over the rows of `x` (shape `(batch, in)`).
pub fn mlp_forward_batch(p: &MlpParams, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != p.input_dim() {
        return Err(Error::dims("MLP input length", p.input_dim(), x.ncols()));
    }
    let last = p.layers.len() - 1;
    let mut h = x.to_owned();
    for (k, layer) in p.layers.iter().enumerate() {
        h = h.dot(&layer.weights.t());
        add_row_bias(&mut h, layer.bias.view());
        if k < last {
            h.mapv_inplace(|v| p.hidden_activation.apply(v));
        }
    }
    Ok(h)
}

fn add_row_bias(h: &mut Array2<f64>, bias: ArrayView1<f64>) {
    for mut row in h.axis_iter_mut(Axis(0)) {
        row += &bias;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn activations_at_zero_and_positive() {
        assert_eq!(elu(0.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        for x in [0.5, 1.0, 3.25, 100.0] {
            assert_eq!(elu(x), x);
            assert_eq!(relu(x), x);
        }
        assert!((elu(-1.0) - (std::f64::consts::E.recip() - 1.0)).abs() < 1e-15);
        assert!((elu(-1.0) + 0.63212).abs() < 1e-5);
        assert_eq!(relu(-3.0), 0.0);
    }

    #[test]
    fn zero_network_outputs_zero_vector() {
        let p = MlpParams::zeros(&[57, 16, 5], Activation::Elu).unwrap();
        let y = mlp_forward(&p, &vec![1.5; 57]).unwrap();
        assert_eq!(y, vec![0.0; 5]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let p = MlpParams::new(
            vec![DenseLayer {
                weights: Array2::eye(3),
                bias: Array1::zeros(3),
            }],
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(mlp_forward(&p, &[-1.0, 2.0, 0.5]).unwrap(), vec![-1.0, 2.0, 0.5]);
    }

    #[test]
    fn two_layer_matches_hand_rolled_arithmetic() {
        let p = MlpParams::random_he(&[6, 9, 4], Activation::Elu, 5).unwrap();
        let x = [0.3, -1.2, 2.0, 0.0, 5.5, -0.7];
        let mut h = [0.0; 9];
        for (i, hi) in h.iter_mut().enumerate() {
            let mut a = p.layers[0].bias[i];
            for (k, xk) in x.iter().enumerate() {
                a += p.layers[0].weights[[i, k]] * xk;
            }
            *hi = if a > 0.0 { a } else { a.exp() - 1.0 };
        }
        let y = mlp_forward(&p, &x).unwrap();
        for (o, yo) in y.iter().enumerate() {
            let mut a = p.layers[1].bias[o];
            for (i, hi) in h.iter().enumerate() {
                a += p.layers[1].weights[[o, i]] * hi;
            }
            assert!((a - yo).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn batch_forward_matches_single() {
        let p = MlpParams::random_he(&[5, 8, 8, 3], Activation::Elu, 9).unwrap();
        let x = array![[0.1, 0.2, -0.3, 4.0, 1.0], [-2.0, 0.0, 0.5, 0.5, 0.25]];
        let batch = mlp_forward_batch(&p, x.view()).unwrap();
        for r in 0..2 {
            let single = mlp_forward(&p, x.row(r).as_slice().unwrap()).unwrap();
            for (a, b) in single.iter().zip(batch.row(r)) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn broken_chain_is_rejected() {
        let layers = vec![
            DenseLayer {
                weights: Array2::zeros((4, 3)),
                bias: Array1::zeros(4),
            },
            DenseLayer {
                weights: Array2::zeros((2, 5)),
                bias: Array1::zeros(2),
            },
        ];
        assert!(MlpParams::new(layers, Activation::Elu).is_err());
        let p = MlpParams::zeros(&[3, 2], Activation::Elu).unwrap();
        assert!(mlp_forward(&p, &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn elu_equals_relu_on_nonnegative_preactivations(
            x in proptest::collection::vec(0.0f64..3.0, 4),
            seed in 0u64..500,
        ) {
            let mut p = MlpParams::random_he(&[4, 6, 6, 2], Activation::Elu, seed).unwrap();
            for layer in &mut p.layers {
                layer.weights.mapv_inplace(f64::abs);
                layer.bias.mapv_inplace(f64::abs);
            }
            let a = mlp_forward(&p, &x).unwrap();
            let b = mlp_forward(&p.with_activation(Activation::Relu), &x).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
