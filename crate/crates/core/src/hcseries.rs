//! Harish-Chandra series `Φ_λ(m; exp H) = e^{(λ−ρ)(H)} Σ_{μ∈Λ} Γ_μ e^{−μ(H)}`.
//!
//! The recursion only links `μ` to `μ − 2kα`, so `Γ_μ = 0` unless `μ ∈ 2Λ`.
//! Tables therefore store `μ = 2ν` and the truncation order `N` bounds the
//! height of `ν`.

use num_complex::Complex;
use serde::Serialize;

use crate::coeffs::{rho, MultiplicityFunction};
use crate::error::{Error, Result};
use crate::rootsys::{lattice_count, lattice_enumerate_rank, LatticeVector, RootSystem};
use crate::scalar::{cdot, dot, Real};

/// Largest accepted truncation order.
pub const MAX_ORDER: usize = 4096;
/// Largest accepted dense index space `(N+1)^rank`.
pub const MAX_DENSE: u128 = 50_000_000;
/// Genericity tolerance on `|⟨μ, μ−2λ⟩|`.
pub const GENERIC_TOL: f64 = 1e-10;
/// Safety factor applied to the empirical tail estimate.
pub const TAIL_SAFETY: f64 = 10.0;

/// Harish-Chandra coefficients `Γ_{2ν}(m;λ)` for `ht ν ≤ N`.
#[derive(Debug, Clone, Serialize)]
pub struct GammaTable<T: Real> {
    pub order: usize,
    pub lam: Vec<Complex<T>>,
    pub mult: MultiplicityFunction<T>,
    rank: usize,
    stride: usize,
    /// `ν` in height order.
    nus: Vec<LatticeVector>,
    coeffs: Vec<Complex<T>>,
    #[serde(skip)]
    dense: Vec<u32>,
    /// `λ − ρ` in orthonormal coordinates.
    shift: Vec<Complex<T>>,
}

/// Truncated series value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue<T: Real> {
    pub value: Complex<T>,
    pub tail_bound: T,
    pub terms_used: usize,
}

const EMPTY: u32 = u32::MAX;

fn dense_index(nu: &[i64], stride: usize) -> usize {
    nu.iter()
        .rev()
        .fold(0usize, |acc, &x| acc * stride + x as usize)
}

/// Fills the coefficient table by the recursion, in height order.
pub fn gamma_coeffs<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    lam: &[Complex<T>],
    n: usize,
) -> Result<GammaTable<T>> {
    rs.check_dim("hcseries", lam.len())?;
    let r = rs.rank;
    if n > MAX_ORDER {
        return Err(Error::OrderCap {
            order: n,
            cap: MAX_ORDER,
        });
    }
    let stride = n + 1;
    if (stride as u128).pow(r as u32) > MAX_DENSE {
        return Err(Error::LatticeCapExceeded {
            count: lattice_count(r, n).min(usize::MAX as u128) as usize,
            cap: MAX_DENSE as usize,
        });
    }
    let nus = lattice_enumerate_rank(r, n, crate::rootsys::DEFAULT_LATTICE_CAP)?;
    let mut dense = vec![EMPTY; stride.pow(r as u32)];
    for (p, nu) in nus.iter().enumerate() {
        dense[dense_index(nu, stride)] = p as u32;
    }

    let npos = rs.num_positive();
    let rho_v = rho(rs, m);
    // ⟨α_j, α⟩, ⟨ρ,α⟩, ⟨α,α⟩, ⟨λ,α⟩, ⟨α_j,λ⟩
    let sa: Vec<Vec<T>> = (0..r)
        .map(|j| (0..npos).map(|i| dot(rs.simple_root(j), rs.root(i))).collect())
        .collect();
    let rho_a: Vec<T> = (0..npos).map(|i| dot(&rho_v, rs.root(i))).collect();
    let aa: Vec<T> = (0..npos).map(|i| rs.root_norm2(i)).collect();
    let lam_a: Vec<Complex<T>> = (0..npos).map(|i| cdot(lam, rs.root(i))).collect();
    let lam_s: Vec<Complex<T>> = (0..r).map(|j| cdot(lam, rs.simple_root(j))).collect();
    let ma: Vec<T> = (0..npos).map(|i| m.of(rs, i)).collect();
    let roots = rs.positive_roots();
    let two = T::lit(2.0);
    let four = T::lit(4.0);

    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); nus.len()];
    coeffs[0] = Complex::new(T::one(), T::zero());
    let mut shifted = vec![0i64; r];
    for p in 1..nus.len() {
        let nu = &nus[p].coeffs;
        let mut nn = T::zero();
        for j in 0..r {
            for k in 0..r {
                nn += T::from_i(nu[j] * nu[k]) * rs.gram[j][k];
            }
        }
        let nl = (0..r).fold(Complex::new(T::zero(), T::zero()), |acc, j| {
            acc + lam_s[j] * T::from_i(nu[j])
        });
        // ⟨μ, μ − 2λ⟩ with μ = 2ν
        let lhs = (Complex::new(nn, T::zero()) - nl) * four;
        if lhs.norm() < T::lit(GENERIC_TOL) {
            return Err(Error::NonGeneric {
                mu: nu.iter().map(|x| 2 * x).collect(),
            });
        }
        let mut rhs = Complex::new(T::zero(), T::zero());
        for i in 0..npos {
            if ma[i] == T::zero() {
                continue;
            }
            let a = &roots[i];
            let nu_a = (0..r).fold(T::zero(), |acc, j| acc + T::from_i(nu[j]) * sa[j][i]);
            let mut inner = Complex::new(T::zero(), T::zero());
            let mut k = 1i64;
            loop {
                let mut ok = true;
                for j in 0..r {
                    shifted[j] = nu[j] - k * a[j];
                    ok &= shifted[j] >= 0;
                }
                if !ok {
                    break;
                }
                let q = dense[dense_index(&shifted, stride)] as usize;
                let g = coeffs[q];
                if g.norm_sqr() != T::zero() {
                    // ⟨μ + ρ − 2kα − λ, α⟩
                    let w = two * nu_a + rho_a[i] - two * T::from_i(k) * aa[i];
                    inner += g * (Complex::new(w, T::zero()) - lam_a[i]);
                }
                k += 1;
            }
            rhs += inner * ma[i];
        }
        coeffs[p] = rhs * two / lhs;
    }
    let shift = lam
        .iter()
        .zip(&rho_v)
        .map(|(l, r)| *l - *r)
        .collect();
    Ok(GammaTable {
        order: n,
        lam: lam.to_vec(),
        mult: m.clone(),
        rank: r,
        stride,
        nus,
        coeffs,
        dense,
        shift,
    })
}

impl<T: Real> GammaTable<T> {
    /// `Γ_μ` for `μ ∈ Λ` (zero off `2Λ`); `None` beyond the table.
    pub fn get(&self, mu: &[i64]) -> Option<Complex<T>> {
        if mu.len() != self.rank || mu.iter().any(|&x| x < 0) {
            return None;
        }
        if mu.iter().any(|&x| x % 2 != 0) {
            return Some(Complex::new(T::zero(), T::zero()));
        }
        let nu: Vec<i64> = mu.iter().map(|x| x / 2).collect();
        if nu.iter().sum::<i64>() as usize > self.order {
            return None;
        }
        let q = self.dense[dense_index(&nu, self.stride)];
        Some(self.coeffs[q as usize])
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `(ν, Γ_{2ν})` pairs in height order.
    pub fn entries(&self) -> impl Iterator<Item = (&LatticeVector, &Complex<T>)> {
        self.nus.iter().zip(&self.coeffs)
    }

    /// `λ − ρ(m)` in orthonormal coordinates.
    pub fn leading_exponent(&self) -> &[Complex<T>] {
        &self.shift
    }

    /// Exponential-sum form: coefficient `Γ_{2ν}` with exponent `λ − ρ − 2ν`.
    pub fn exp_terms(&self, rs: &RootSystem<T>) -> Vec<(Complex<T>, Vec<Complex<T>>)> {
        self.entries()
            .filter(|(_, g)| g.norm_sqr() != T::zero())
            .map(|(nu, g)| {
                let o = rs.lattice_ortho(nu);
                let e = self
                    .shift
                    .iter()
                    .zip(&o)
                    .map(|(s, x)| *s - *x * T::lit(2.0))
                    .collect();
                (*g, e)
            })
            .collect()
    }

    /// Evaluates the truncated series at a strictly dominant `H`.
    pub fn eval(&self, rs: &RootSystem<T>, h: &[T]) -> Result<SeriesValue<T>> {
        rs.check_dim("hcseries", h.len())?;
        if rs.min_alpha(h) <= T::zero() {
            return Err(Error::NotDominant { module: "hcseries" });
        }
        let aj: Vec<T> = (0..self.rank).map(|j| dot(rs.simple_root(j), h)).collect();
        let mut slabs = vec![T::zero(); self.order + 1];
        let mut sum = Complex::new(T::zero(), T::zero());
        for (nu, g) in self.entries() {
            let mu_h = nu
                .coeffs
                .iter()
                .zip(&aj)
                .fold(T::zero(), |acc, (&x, &a)| acc + T::from_i(2 * x) * a);
            let term = *g * (-mu_h).exp();
            slabs[nu.height() as usize] += term.norm();
            sum += term;
        }
        let lead = cdot(&self.shift, h).exp();
        let q = (-T::lit(2.0) * aj.iter().fold(T::infinity(), |a, &b| a.min(b))).exp();
        let tail = tail_estimate(&slabs, q) * lead.norm();
        Ok(SeriesValue {
            value: sum * lead,
            tail_bound: tail,
            terms_used: self.coeffs.len(),
        })
    }
}

fn tail_estimate<T: Real>(slabs: &[T], q: T) -> T {
    let n = slabs.len() - 1;
    let last = slabs[n];
    if last == T::zero() {
        return T::zero();
    }
    let mut r = q;
    for k in n.saturating_sub(2)..n {
        if k >= 1 && slabs[k] > T::zero() {
            r = r.max(slabs[k + 1] / slabs[k]);
        }
    }
    if r >= T::one() {
        return T::infinity();
    }
    T::lit(TAIL_SAFETY) * last * r / (T::one() - r)
}

/// `Φ_λ(m; exp H)` truncated at order `N`.
pub fn phi_hc<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
) -> Result<SeriesValue<T>> {
    rs.check_dim("hcseries", h.len())?;
    if rs.min_alpha(h) <= T::zero() {
        return Err(Error::NotDominant { module: "hcseries" });
    }
    gamma_coeffs(rs, m, lam, n)?.eval(rs, h)
}
