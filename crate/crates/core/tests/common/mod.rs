//! Independent reference implementations used by the integration tests.
//! Everything here enumerates states directly and shares no code path with
//! the library beyond its public types.

#![allow(dead_code)]

/// `σ_α` of configuration `i`, `α` zero-based.
pub fn spin(i: usize, alpha: usize) -> f64 {
    if i >> alpha & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `Π_{α ∈ k} σ_α(i)`.
pub fn product(i: usize, k: usize, n: usize) -> f64 {
    (0..n)
        .filter(|a| k >> a & 1 == 1)
        .map(|a| spin(i, a))
        .product()
}

/// `E_i = -Σ_k J_k Π σ`, quadratic in table size.
pub fn naive_energies(j: &[f64], n: usize) -> Vec<f64> {
    (0..1 << n)
        .map(|i| -(0..1 << n).map(|k| j[k] * product(i, k, n)).sum::<f64>())
        .collect()
}

/// `J_k = -2^{-N} Σ_i Π σ E_i`.
pub fn naive_couplings(e: &[f64], n: usize) -> Vec<f64> {
    let size = (1usize << n) as f64;
    (0..1 << n)
        .map(|k| -(0..1 << n).map(|i| e[i] * product(i, k, n)).sum::<f64>() / size)
        .collect()
}

pub fn ln_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Brute-force replica model over all `2^{2N_r}` states: returns
/// `(ln Z, ⟨a⟩/N_r, ⟨b⟩/N_r)`.
pub fn replica_brute(j: f64, t: f64, nr: usize, h1: f64, h2: f64) -> (f64, f64, f64) {
    let mut logs = Vec::with_capacity(1 << (2 * nr));
    let mut sums = Vec::with_capacity(1 << (2 * nr));
    for s in 0usize..1 << (2 * nr) {
        let a: f64 = (0..nr).map(|k| spin(s, k)).sum();
        let b: f64 = (nr..2 * nr).map(|k| spin(s, k)).sum();
        let e = j * a * b / nr as f64 - h1 * a - h2 * b;
        logs.push(-e / t);
        sums.push((a, b));
    }
    let lnz = ln_sum_exp(&logs);
    let (mut ma, mut mb) = (0.0, 0.0);
    for (l, (a, b)) in logs.iter().zip(&sums) {
        let p = (l - lnz).exp();
        ma += p * a;
        mb += p * b;
    }
    (lnz, ma / nr as f64, mb / nr as f64)
}

/// Exact two-spin model `E = J σ₁σ₂ - h₁σ₁ - h₂σ₂`: `(G, m₁, m₂)`.
pub fn two_spin_exact(j: f64, t: f64, h1: f64, h2: f64) -> (f64, f64, f64) {
    let mut z = 0.0;
    let (mut m1, mut m2) = (0.0, 0.0);
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0f64, 1.0] {
            let w = (-(j * s1 * s2 - h1 * s1 - h2 * s2) / t).exp();
            z += w;
            m1 += w * s1;
            m2 += w * s2;
        }
    }
    (-t * z.ln(), m1 / z, m2 / z)
}

/// Fixed point of `m = tanh(k m)` by plain iteration from 1.
pub fn tanh_fixed_point(k: f64) -> f64 {
    let mut m = 1.0f64;
    for _ in 0..100_000 {
        let next = (k * m).tanh();
        if (next - m).abs() < 1e-16 {
            return next;
        }
        m = next;
    }
    m
}

/// Binary mixing term `p ln p + q ln q` with `p = (1+m)/2`.
pub fn mixing(m: f64) -> f64 {
    let p = 0.5 * (1.0 + m);
    let q = 0.5 * (1.0 - m);
    let f = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    f(p) + f(q)
}

/// Central second finite difference of `f` along coordinate pairs.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let eval = |di: f64, dj: f64| {
                let mut y = x.to_vec();
                y[i] += di;
                y[j] += dj;
                f(&y)
            };
            h[i][j] = (eval(step, step) - eval(step, -step) - eval(-step, step)
                + eval(-step, -step))
                / (4.0 * step * step);
        }
    }
    h
}

/// `Π_{α ∈ k} σ_α(i)` as the parity of the down spins inside `k`.
pub fn parity_product(i: usize, k: usize) -> f64 {
    if (k & !i).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Quadratic-cost energies using [`parity_product`]; fast enough for `N = 12`.
pub fn naive_energies_parity(j: &[f64]) -> Vec<f64> {
    let size = j.len();
    (0..size)
        .map(|i| -(0..size).map(|k| j[k] * parity_product(i, k)).sum::<f64>())
        .collect()
}
