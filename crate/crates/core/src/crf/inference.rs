//! Exact inference for a first-order linear chain over three labels.
//!
//! A labelling `y` of `n` positions scores
//! `sum_i emit[i][y_i] + sum_{i>=1} trans[y_{i-1}][y_i]`.

use super::NUM_LABELS;

pub type Emissions = [[f64; NUM_LABELS]];
pub type Transitions = [[f64; NUM_LABELS]; NUM_LABELS];

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn sequence_score(emit: &Emissions, trans: &Transitions, labels: &[usize]) -> f64 {
    let mut s = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        s += emit[i][y];
        if i > 0 {
            s += trans[labels[i - 1]][y];
        }
    }
    s
}

/// Highest-scoring labelling. Among equal scores the lexicographically
/// smallest sequence under label order B < I < O wins.
///
/// Best suffix scores are computed right to left, then labels are chosen
/// left to right taking the smallest label that attains the optimum.
pub fn viterbi(emit: &Emissions, trans: &Transitions) -> Vec<usize> {
    let n = emit.len();
    if n == 0 {
        return Vec::new();
    }
    let mut suffix = vec![[0.0; NUM_LABELS]; n];
    suffix[n - 1] = emit[n - 1];
    for i in (0..n - 1).rev() {
        for y in 0..NUM_LABELS {
            let best = (0..NUM_LABELS)
                .map(|z| trans[y][z] + suffix[i + 1][z])
                .fold(f64::NEG_INFINITY, f64::max);
            suffix[i][y] = emit[i][y] + best;
        }
    }
    let mut path = Vec::with_capacity(n);
    path.push(argmax_first(&suffix[0]));
    for i in 1..n {
        let prev = path[i - 1];
        let options: [f64; NUM_LABELS] = std::array::from_fn(|z| trans[prev][z] + suffix[i][z]);
        path.push(argmax_first(&options));
    }
    path
}

fn argmax_first(xs: &[f64; NUM_LABELS]) -> usize {
    let mut best = 0;
    for i in 1..NUM_LABELS {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

/// Forward and backward log-space tables of one sequence.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub alpha: Vec<[f64; NUM_LABELS]>,
    pub beta: Vec<[f64; NUM_LABELS]>,
    pub log_z: f64,
}

impl Lattice {
    pub fn compute(emit: &Emissions, trans: &Transitions) -> Lattice {
        let n = emit.len();
        let mut alpha = vec![[0.0; NUM_LABELS]; n];
        let mut beta = vec![[0.0; NUM_LABELS]; n];
        if n == 0 {
            return Lattice { alpha, beta, log_z: 0.0 };
        }
        alpha[0] = emit[0];
        for i in 1..n {
            for y in 0..NUM_LABELS {
                let terms: [f64; NUM_LABELS] = std::array::from_fn(|p| alpha[i - 1][p] + trans[p][y]);
                alpha[i][y] = emit[i][y] + log_sum_exp(&terms);
            }
        }
        for i in (0..n - 1).rev() {
            for y in 0..NUM_LABELS {
                let terms: [f64; NUM_LABELS] = std::array::from_fn(|z| trans[y][z] + emit[i + 1][z] + beta[i + 1][z]);
                beta[i][y] = log_sum_exp(&terms);
            }
        }
        let log_z = log_sum_exp(&alpha[n - 1]);
        Lattice { alpha, beta, log_z }
    }

    /// Log-partition recomputed from the backward table.
    pub fn log_z_backward(&self, emit: &Emissions) -> f64 {
        if emit.is_empty() {
            return 0.0;
        }
        let terms: [f64; NUM_LABELS] = std::array::from_fn(|y| emit[0][y] + self.beta[0][y]);
        log_sum_exp(&terms)
    }

    pub fn marginals(&self) -> Vec<[f64; NUM_LABELS]> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| std::array::from_fn(|y| (a[y] + b[y] - self.log_z).exp()))
            .collect()
    }

    /// Pairwise marginal `P(y_{i-1} = a, y_i = b)` for `i >= 1`.
    pub fn pair_marginal(&self, emit: &Emissions, trans: &Transitions, i: usize, a: usize, b: usize) -> f64 {
        (self.alpha[i - 1][a] + trans[a][b] + emit[i][b] + self.beta[i][b] - self.log_z).exp()
    }
}
