use rand::Rng;
use serde::{Deserialize, Serialize};

/// Row-major weight matrix with explicit shape, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn is_consistent(&self) -> bool {
        self.data.len() == self.rows * self.cols
    }
}

/// Two-layer perceptron `W₂ relu(W₁ u + b₁) + b₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            w1: Matrix::zeros(hidden, input),
            b1: vec![0.0; hidden],
            w2: Matrix::zeros(output, hidden),
            b2: vec![0.0; output],
        }
    }

    /// Uniform fan-in scaling: `±√(6/fan_in)` for the ReLU layer and
    /// `±√(3/fan_in)` for the linear output layer. Biases start at zero.
    pub fn init(input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(input, hidden, output);
        let b1 = (6.0 / input as f64).sqrt();
        for w in &mut m.w1.data {
            *w = rng.random_range(-b1..b1);
        }
        let b2 = (3.0 / hidden as f64).sqrt();
        for w in &mut m.w2.data {
            *w = rng.random_range(-b2..b2);
        }
        m
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows
    }

    pub fn output_dim(&self) -> usize {
        self.w2.rows
    }

    pub fn has_shape(&self, input: usize, hidden: usize, output: usize) -> bool {
        self.w1.rows == hidden
            && self.w1.cols == input
            && self.b1.len() == hidden
            && self.w2.rows == output
            && self.w2.cols == hidden
            && self.b2.len() == output
            && self.w1.is_consistent()
            && self.w2.is_consistent()
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.data.len() + self.b1.len() + self.w2.data.len() + self.b2.len()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1
            .data
            .iter()
            .chain(&self.b1)
            .chain(&self.w2.data)
            .chain(&self.b2)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .data
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2.data)
            .chain(&mut self.b2)
    }

    /// Evaluates the network, writing post-activation hidden units and outputs.
    pub fn forward(&self, input: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        for (k, h) in hidden.iter_mut().enumerate() {
            let pre = self.b1[k] + self.w1.row(k).iter().zip(input).map(|(w, u)| w * u).sum::<f64>();
            *h = pre.max(0.0);
        }
        for (o, y) in out.iter_mut().enumerate() {
            *y = self.b2[o] + self.w2.row(o).iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>();
        }
    }

    /// Accumulates parameter gradients into `grad` and writes `∂/∂input`.
    pub fn backward(
        &self,
        input: &[f64],
        hidden: &[f64],
        dout: &[f64],
        grad: &mut Mlp,
        dinput: &mut [f64],
    ) {
        let nh = self.hidden_dim();
        let mut dpre = [0.0f64; 64];
        let dpre = &mut dpre[..nh];
        for (o, &d) in dout.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad.b2[o] += d;
            for ((g, &h), (dp, &w)) in grad
                .w2
                .row_mut(o)
                .iter_mut()
                .zip(hidden)
                .zip(dpre.iter_mut().zip(self.w2.row(o)))
            {
                *g += d * h;
                *dp += d * w;
            }
        }
        dinput.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..nh {
            if hidden[k] <= 0.0 {
                continue;
            }
            let d = dpre[k];
            grad.b1[k] += d;
            for ((g, &u), (di, &w)) in grad
                .w1
                .row_mut(k)
                .iter_mut()
                .zip(input)
                .zip(dinput.iter_mut().zip(self.w1.row(k)))
            {
                *g += d * u;
                *di += d * w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = Mlp::init(5, 16, 3, &mut rng);
        let input: Vec<f64> = (0..5).map(|i| 0.3 * i as f64 - 0.5).collect();
        let dout = [0.7, -1.1, 0.4];
        let f = |m: &Mlp, u: &[f64]| {
            let mut h = vec![0.0; 16];
            let mut y = vec![0.0; 3];
            m.forward(u, &mut h, &mut y);
            y.iter().zip(&dout).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut h = vec![0.0; 16];
        let mut y = vec![0.0; 3];
        mlp.forward(&input, &mut h, &mut y);
        let mut grad = Mlp::zeros(5, 16, 3);
        let mut din = vec![0.0; 5];
        mlp.backward(&input, &h, &dout, &mut grad, &mut din);

        let eps = 1e-6;
        for i in 0..5 {
            let mut up = input.clone();
            up[i] += eps;
            let mut dn = input.clone();
            dn[i] -= eps;
            let fd = (f(&mlp, &up) - f(&mlp, &dn)) / (2.0 * eps);
            assert!((fd - din[i]).abs() < 1e-7, "input {i}: {fd} vs {}", din[i]);
        }
        let grads: Vec<f64> = grad.params().copied().collect();
        for idx in [0, 7, 40, 80, 90, 100, 130] {
            let mut up = mlp.clone();
            *up.params_mut().nth(idx).unwrap() += eps;
            let mut dn = mlp.clone();
            *dn.params_mut().nth(idx).unwrap() -= eps;
            let fd = (f(&up, &input) - f(&dn, &input)) / (2.0 * eps);
            assert!((fd - grads[idx]).abs() < 1e-7, "param {idx}: {fd} vs {}", grads[idx]);
        }
    }
}
