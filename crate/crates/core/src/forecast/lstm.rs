//! Single-input LSTM cell with backpropagation through time.
//!
//! Gate rows are stacked `[input, forget, candidate, output]`, each `hidden`
//! long; the recurrent matrix is row-major `4·hidden × hidden`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub(crate) hidden: usize,
    pub(crate) w_in: Vec<f64>,
    pub(crate) w_rec: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

/// Per-step values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    x: f64,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates, stacked like the weights.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Trace {
    steps: Vec<StepCache>,
    pub(crate) hidden: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LstmCell {
    pub fn zeros(hidden: usize) -> Self {
        LstmCell {
            hidden,
            w_in: vec![0.0; 4 * hidden],
            w_rec: vec![0.0; 4 * hidden * hidden],
            bias: vec![0.0; 4 * hidden],
        }
    }

    /// Uniform `±1/√hidden` weights, forget-gate bias 1.
    pub fn random(hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut cell = LstmCell::zeros(hidden);
        for w in cell.w_in.iter_mut().chain(cell.w_rec.iter_mut()) {
            *w = rng.random_range(-bound..bound);
        }
        for b in &mut cell.bias[hidden..2 * hidden] {
            *b = 1.0;
        }
        cell
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Final hidden state after feeding `sequence` from a zero state.
    pub fn forward(&self, sequence: &[f64]) -> Vec<f64> {
        self.forward_trace(sequence).hidden
    }

    pub(crate) fn forward_trace(&self, sequence: &[f64]) -> Trace {
        let n = self.hidden;
        let mut h = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut steps = Vec::with_capacity(sequence.len());
        for &x in sequence {
            let mut gates = vec![0.0; 4 * n];
            for (r, g) in gates.iter_mut().enumerate() {
                let row = &self.w_rec[r * n..(r + 1) * n];
                let z = self.w_in[r] * x + self.bias[r] + row.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>();
                *g = if (2 * n..3 * n).contains(&r) { z.tanh() } else { sigmoid(z) };
            }
            let mut c_next = vec![0.0; n];
            let mut tanh_c = vec![0.0; n];
            let mut h_next = vec![0.0; n];
            for j in 0..n {
                let (i, f, g, o) = (gates[j], gates[n + j], gates[2 * n + j], gates[3 * n + j]);
                c_next[j] = f * c[j] + i * g;
                tanh_c[j] = c_next[j].tanh();
                h_next[j] = o * tanh_c[j];
            }
            steps.push(StepCache {
                x,
                h_prev: std::mem::replace(&mut h, h_next),
                c_prev: std::mem::replace(&mut c, c_next),
                gates,
                tanh_c,
            });
        }
        Trace { steps, hidden: h }
    }

    /// Accumulates into `grad` the parameter gradients given `d_hidden`, the
    /// loss gradient with respect to the final hidden state.
    pub(crate) fn backward(&self, trace: &Trace, d_hidden: &[f64], grad: &mut LstmCell) {
        let n = self.hidden;
        let mut dh = d_hidden.to_vec();
        let mut dc = vec![0.0; n];
        let mut da = vec![0.0; 4 * n];
        for step in trace.steps.iter().rev() {
            let g = &step.gates;
            for j in 0..n {
                let (i, f, cand, o) = (g[j], g[n + j], g[2 * n + j], g[3 * n + j]);
                let tc = step.tanh_c[j];
                let d_o = dh[j] * tc;
                dc[j] += dh[j] * o * (1.0 - tc * tc);
                da[j] = dc[j] * cand * i * (1.0 - i);
                da[n + j] = dc[j] * step.c_prev[j] * f * (1.0 - f);
                da[2 * n + j] = dc[j] * i * (1.0 - cand * cand);
                da[3 * n + j] = d_o * o * (1.0 - o);
                dc[j] *= f;
            }
            dh.iter_mut().for_each(|v| *v = 0.0);
            for (r, &d) in da.iter().enumerate() {
                grad.w_in[r] += d * step.x;
                grad.bias[r] += d;
                let row = r * n..(r + 1) * n;
                for ((gw, w), (hp, dhp)) in grad.w_rec[row.clone()]
                    .iter_mut()
                    .zip(&self.w_rec[row])
                    .zip(step.h_prev.iter().zip(dh.iter_mut()))
                {
                    *gw += d * hp;
                    *dhp += d * w;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_weights_give_zero_hidden() {
        let cell = LstmCell::zeros(32);
        assert!(cell.forward(&[1.0, -2.0, 3.5, 0.2]).iter().all(|&h| h == 0.0));
    }

    #[test]
    fn single_step_matches_hand_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cell = LstmCell::random(3, &mut rng);
        let x = 0.7;
        let h = cell.forward(&[x]);
        for j in 0..3 {
            // From a zero state the recurrent term and the forget path vanish.
            let z = |r: usize| cell.w_in[r] * x + cell.bias[r];
            let i = 1.0 / (1.0 + (-z(j)).exp());
            let g = z(6 + j).tanh();
            let o = 1.0 / (1.0 + (-z(9 + j)).exp());
            let expect = o * (i * g).tanh();
            assert!((h[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn order_matters() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cell = LstmCell::random(32, &mut rng);
        let a = cell.forward(&[0.1, 0.9, 0.4, 0.0]);
        let b = cell.forward(&[0.9, 0.1, 0.0, 0.4]);
        assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-6));
    }
}
