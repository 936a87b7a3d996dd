//! Exact diagonalization of the spin-1/2 Heisenberg model in a fixed
//! magnetization sector: sparse Hamiltonian, Lanczos with full
//! reorthogonalization and Sturm-bisection on the tridiagonal matrix.
//!
//! Deliberately shares nothing with the library besides the test harness.

use std::collections::HashMap;

pub struct SectorHamiltonian {
    pub states: Vec<u64>,
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
}

fn square_bonds(lx: usize, ly: usize) -> Vec<(usize, usize)> {
    let mut bonds = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            let i = y * lx + x;
            let right = y * lx + (x + 1) % lx;
            let down = ((y + 1) % ly) * lx + x;
            for j in [right, down] {
                let b = (i.min(j), i.max(j));
                if !bonds.contains(&b) {
                    bonds.push(b);
                }
            }
        }
    }
    bonds
}

impl SectorHamiltonian {
    /// Periodic `lx × ly` lattice, `up` spins up. With `marshall` set the
    /// basis is sublattice-rotated, which flips the sign of every hopping term.
    pub fn periodic(lx: usize, ly: usize, up: u32, j: f64, marshall: bool) -> Self {
        let n = lx * ly;
        let bonds = square_bonds(lx, ly);
        let states: Vec<u64> = (0u64..(1 << n)).filter(|m| m.count_ones() == up).collect();
        let index: HashMap<u64, usize> = states.iter().enumerate().map(|(k, &m)| (m, k)).collect();
        let hop = if marshall { -0.5 * j } else { 0.5 * j };
        let mut diag = Vec::with_capacity(states.len());
        let mut off = Vec::with_capacity(states.len());
        for &m in &states {
            let mut d = 0.0;
            let mut row = Vec::new();
            for &(a, b) in &bonds {
                let sa = m >> a & 1;
                let sb = m >> b & 1;
                if sa == sb {
                    d += 0.25 * j;
                } else {
                    d -= 0.25 * j;
                    let t = m ^ (1 << a) ^ (1 << b);
                    row.push((index[&t], hop));
                }
            }
            diag.push(d);
            off.push(row);
        }
        Self { states, diag, off }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|r| {
                let mut acc = self.diag[r] * v[r];
                for &(c, h) in &self.off[r] {
                    acc += h * v[c];
                }
                acc
            })
            .collect()
    }

    /// Rayleigh quotient `<v|H|v> / <v|v>`.
    pub fn expectation(&self, v: &[f64]) -> f64 {
        let hv = self.apply(v);
        let num: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|a| a * a).sum();
        num / den
    }

    pub fn ground_energy(&self, iterations: usize) -> f64 {
        let dim = self.dim();
        let m = iterations.min(dim);
        // deterministic, non-symmetric start vector
        let mut q: Vec<f64> = (0..dim).map(|i| 1.0 + ((i * 7919) % 1013) as f64 / 1013.0).collect();
        normalize(&mut q);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        for k in 0..m {
            let mut w = self.apply(&q);
            let a = dot(&w, &q);
            alpha.push(a);
            for (wi, qi) in w.iter_mut().zip(&q) {
                *wi -= a * qi;
            }
            if k > 0 {
                let prev = &basis[k - 1];
                for (wi, pi) in w.iter_mut().zip(prev) {
                    *wi -= beta[k - 1] * pi;
                }
            }
            basis.push(q.clone());
            // full reorthogonalization, twice
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let nb = dot(&w, &w).sqrt();
            if nb < 1e-12 {
                break;
            }
            beta.push(nb);
            q = w.into_iter().map(|x| x / nb).collect();
        }
        let k = alpha.len();
        lowest_tridiagonal_eigenvalue(&alpha, &beta[..k - 1])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

pub fn lowest_tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..alpha.len() {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + beta.get(i).map_or(0.0, |b| b.abs());
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(alpha, beta, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

