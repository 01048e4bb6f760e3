//! Reference computations that share no code path with `qcond`'s numerics.
//!
//! Matrices here are built straight from bit operations and exponentiated by
//! scaling and squaring, so agreement with the eigensolver-based engine and
//! with the path sampler is an independent check.

use std::time::Instant;

/// Row-major square matrix.
pub type Dense = Vec<Vec<f64>>;

/// `H = -Γ Σ σ^x_i + V` on the listed configurations, ordered as given.
pub fn hamiltonian_block(
    n_qubits: u32,
    gamma: f64,
    v: impl Fn(u64) -> f64,
    members: &[u64],
) -> Dense {
    let d = members.len();
    let mut h = vec![vec![0.0; d]; d];
    for (r, &a) in members.iter().enumerate() {
        h[r][r] = v(a);
        for (c, &b) in members.iter().enumerate() {
            if (a ^ b).count_ones() == 1 && (a ^ b) < (1u64 << n_qubits) {
                h[r][c] = -gamma;
            }
        }
    }
    h
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// `e^{-t H}` by scaling and squaring of a Taylor polynomial.
pub fn expm_neg(h: &Dense, t: f64) -> Dense {
    let n = h.len();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| (t * h[i][j]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = -t / f64::from(2u32.pow(squarings));
    let a: Dense = h
        .iter()
        .map(|row| row.iter().map(|x| x * scale).collect())
        .collect();

    let mut result: Dense = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..=24 {
        term = matmul(&term, &a);
        let inv = 1.0 / f64::from(k);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x *= inv;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Cut count by walking neighbouring pairs one at a time.
pub fn cut_count_slow(bits: u64, n_qubits: u32) -> u32 {
    (0..n_qubits.saturating_sub(1))
        .filter(|&i| (bits >> i) & 1 != (bits >> (i + 1)) & 1)
        .count() as u32
}

/// Number of hypercube edges with exactly one end in `cond`.
pub fn cross_links_slow(n_qubits: u32, in_cond: &[bool]) -> u64 {
    let mut links = 0;
    for a in 0..(1u64 << n_qubits) {
        for i in 0..n_qubits {
            let b = a ^ (1 << i);
            if a < b && in_cond[a as usize] != in_cond[b as usize] {
                links += 1;
            }
        }
    }
    links
}

/// Per-node count of neighbours on the other side.
pub fn out_degree_slow(n_qubits: u32, in_cond: &[bool], a: u64) -> u32 {
    (0..n_qubits)
        .filter(|&i| in_cond[(a ^ (1 << i)) as usize] != in_cond[a as usize])
        .count() as u32
}

/// `C(n, k)` by Pascal's rule.
pub fn binomial_slow(n: u64, k: u64) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![1u64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row.get(k as usize).copied().unwrap_or(0)
}

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Runs `f`, timing it. `budget` seconds is part of the criterion.
pub fn judge(
    id: u32,
    title: &'static str,
    budget: Option<f64>,
    f: impl FnOnce() -> (bool, String),
) -> Verdict {
    let start = Instant::now();
    let (mut pass, mut detail) = f();
    let seconds = start.elapsed().as_secs_f64();
    if let Some(b) = budget {
        if seconds > b {
            pass = false;
            detail.push_str(&format!("; over the {b} s budget"));
        }
    }
    Verdict {
        id,
        title,
        pass,
        detail,
        seconds,
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {:>2} {}: {} ({:.2} s) {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}
