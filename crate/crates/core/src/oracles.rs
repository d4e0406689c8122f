//! Closed-form evaluators: complex Gamma and Beta, Gauss ₂F₁, the rank-one
//! spherical functions (first kind, second kind, noncompactly causal) and the
//! complex-case formulas.
//!
//! These are written without reference to the series machinery in
//! [`crate::hcseries`] so that the two can be checked against each other.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussJacobi;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::rootsys::{parabolic_subgroup, weyl_group, RootSystem, ThetaSet, WeylElement};
use crate::scalar::{cdot, dot, Real};

/// Distance to a nonpositive integer below which a Gamma argument is a pole.
pub const POLE_TOL: f64 = 1e-9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn c<T: Real>(re: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::zero())
}

/// If `z` is within [`POLE_TOL`] of a nonpositive integer `-n`, returns `n`.
pub fn pole_index<T: Real>(z: Complex<T>) -> Option<u64> {
    let tol = T::lit(POLE_TOL);
    if z.im.abs() > tol || z.re > tol {
        return None;
    }
    let r = z.re.round();
    if (z.re - r).abs() <= tol {
        Some((-r).as_f64().max(0.0) as u64)
    } else {
        None
    }
}

/// `ln sin(πz)`, stable for large `|Im z|`.
fn ln_sin_pi<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    let i = Complex::new(T::zero(), T::one());
    let two_i = Complex::new(T::zero(), T::lit(2.0));
    if z.im.abs() < T::lit(20.0) {
        (z * pi).sin().ln()
    } else if z.im > T::zero() {
        let e = (i * z * pi * T::lit(2.0)).exp();
        -i * z * pi + ((e - T::one()) / two_i).ln()
    } else {
        let e = (-i * z * pi * T::lit(2.0)).exp();
        i * z * pi + ((-e + T::one()) / two_i).ln()
    }
}

/// Principal-sheet-agnostic complex log-Gamma (Lanczos, g = 7, with reflection).
///
/// The imaginary part is only defined modulo 2π; `exp(ln_gamma(z)) = Γ(z)`.
pub fn ln_gamma<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    if z.re < half {
        let pi = T::PI();
        return Complex::new(pi.ln(), T::zero()) - ln_sin_pi(z) - ln_gamma(Complex::new(T::one(), T::zero()) - z);
    }
    let z = z - T::one();
    let mut x = c::<T>(LANCZOS[0]);
    for (k, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += Complex::new(T::lit(p), T::zero()) / (z + T::from_i(k as i64));
    }
    let t = z + T::lit(LANCZOS_G + 0.5);
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    (t.ln() * (z + half)) - t + x.ln() + half_ln_2pi
}

/// Γ(z); infinite at poles.
pub fn gamma<T: Real>(z: Complex<T>) -> Complex<T> {
    if pole_index(z).is_some() {
        return Complex::new(T::infinity(), T::zero());
    }
    if z.im == T::zero() && z.re > T::zero() && z.re < T::lit(170.0) && z.re == z.re.round() {
        let n = z.re.as_f64() as u64;
        let f: f64 = (1..n).map(|k| k as f64).product();
        return c(f);
    }
    ln_gamma(z).exp()
}

/// 1/Γ(z), an entire function (zero at the poles of Γ).
pub fn rgamma<T: Real>(z: Complex<T>) -> Complex<T> {
    if pole_index(z).is_some() {
        return Complex::new(T::zero(), T::zero());
    }
    (-ln_gamma(z)).exp()
}

/// `ln n!` for small integers.
fn ln_factorial<T: Real>(n: u64) -> T {
    (1..=n).fold(T::zero(), |a, k| a + T::lit(k as f64).ln())
}

/// Result of a product of Gamma factors: regular value, or the leading
/// Laurent coefficient at a pole.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GammaValue<T: Real> {
    pub value: Complex<T>,
    pub pole_order: i32,
}

/// Accumulates `Π Γ(numerators) / Π Γ(denominators) · Π scalars` in log form.
///
/// Each Gamma argument is an affine function of a spectral coordinate with
/// the given slope; at a pole the factor is replaced by the leading Laurent
/// coefficient in that coordinate, and the pole order is tracked.
#[derive(Debug, Clone)]
pub struct GammaProduct<T: Real> {
    log: Complex<T>,
    zero: bool,
    order: i32,
}

impl<T: Real> Default for GammaProduct<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> GammaProduct<T> {
    pub fn new() -> Self {
        GammaProduct {
            log: Complex::new(T::zero(), T::zero()),
            zero: false,
            order: 0,
        }
    }

    fn residue_log(n: u64, slope: T) -> Complex<T> {
        // residue of Γ at −n is (−1)ⁿ/n!
        let sign = if n % 2 == 0 { T::one() } else { -T::one() };
        Complex::new(sign / slope, T::zero()).ln() - ln_factorial::<T>(n)
    }

    pub fn num(&mut self, arg: Complex<T>, slope: T) -> &mut Self {
        match pole_index(arg) {
            Some(n) => {
                self.log += Self::residue_log(n, slope);
                self.order += 1;
            }
            None => self.log += ln_gamma(arg),
        }
        self
    }

    pub fn den(&mut self, arg: Complex<T>, slope: T) -> &mut Self {
        match pole_index(arg) {
            Some(n) => {
                self.log -= Self::residue_log(n, slope);
                self.order -= 1;
            }
            None => self.log -= ln_gamma(arg),
        }
        self
    }

    pub fn mul(&mut self, s: Complex<T>) -> &mut Self {
        if s == Complex::new(T::zero(), T::zero()) {
            self.zero = true;
        } else {
            self.log += s.ln();
        }
        self
    }

    pub fn finish(&self) -> GammaValue<T> {
        let zero = Complex::new(T::zero(), T::zero());
        let value = if self.zero || self.order < 0 {
            zero
        } else {
            self.log.exp()
        };
        GammaValue {
            value,
            pole_order: self.order,
        }
    }
}

/// Euler Beta function `B(a,b) = Γ(a)Γ(b)/Γ(a+b)`; errors at a pole.
pub fn beta<T: Real>(a: Complex<T>, b: Complex<T>) -> Result<Complex<T>> {
    let mut p = GammaProduct::new();
    p.num(a, T::one()).num(b, T::one()).den(a + b, T::one());
    let v = p.finish();
    if v.pole_order > 0 {
        return Err(Error::Pole {
            module: "oracles",
            what: "Beta function",
        });
    }
    Ok(v.value)
}

/// Parameters of a Gauss hypergeometric evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper2F1Params<T: Real> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub z: Complex<T>,
}

const SERIES_RADIUS: f64 = 0.8;
const MAX_SHORT_TERMS: usize = 20_000;
const MAX_LONG_TERMS: usize = 2_000_000;

fn series_2f1<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    cc: Complex<T>,
    z: Complex<T>,
    max_terms: usize,
) -> Result<Complex<T>> {
    let eps = T::epsilon() * T::lit(0.5);
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    let mut small = 0;
    for n in 0..max_terms {
        let nn = T::from_i(n as i64);
        term = term * (a + nn) * (b + nn) / ((cc + nn) * (nn + T::one())) * z;
        sum += term;
        if term.norm() <= eps * sum.norm() {
            small += 1;
            if small >= 3 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        if term.norm() == T::zero() {
            return Ok(sum);
        }
    }
    Err(Error::HyperConvergence)
}

fn near_integer<T: Real>(x: Complex<T>, tol: T) -> bool {
    x.im.abs() < tol && (x.re - x.re.round()).abs() < tol
}

/// `₂F₁` on `0.8 < w < 1` (real), via the `1 − w` connection formula when
/// `c − a − b` is not an integer and a long direct series otherwise.
fn near_one_2f1<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    cc: Complex<T>,
    w: T,
) -> Result<Complex<T>> {
    let one = Complex::new(T::one(), T::zero());
    let s = cc - a - b;
    let wc = Complex::new(w, T::zero());
    if near_integer(s, T::lit(1e-6)) {
        return series_2f1(a, b, cc, wc, MAX_LONG_TERMS);
    }
    let u = Complex::new(T::one() - w, T::zero());
    let f1 = series_2f1(a, b, a + b - cc + one, u, MAX_SHORT_TERMS)?;
    let f2 = series_2f1(cc - a, cc - b, s + one, u, MAX_SHORT_TERMS)?;
    let g1 = gamma(cc) * gamma(s) * rgamma(cc - a) * rgamma(cc - b);
    let g2 = gamma(cc) * gamma(-s) * rgamma(a) * rgamma(b);
    Ok(g1 * f1 + u.powc(s) * g2 * f2)
}

/// Gauss hypergeometric function `₂F₁(a,b;c;z)`.
///
/// Supported: `|z| ≤ 0.8` (direct series), real `z < 0` (Pfaff transform to
/// `z/(z−1) ∈ (0,1)`), real `z ∈ (0.8, 1]`.
pub fn gauss_2f1<T: Real>(p: Hyper2F1Params<T>) -> Result<Complex<T>> {
    let Hyper2F1Params { a, b, c: cc, z } = p;
    if pole_index(cc).is_some() {
        return Err(Error::HyperC);
    }
    if z.norm() <= T::lit(SERIES_RADIUS) {
        return series_2f1(a, b, cc, z, MAX_SHORT_TERMS);
    }
    let real = z.im.abs() <= T::lit(1e-14) * (T::one() + z.re.abs());
    if !real {
        return Err(Error::HyperDomain(format!("complex z = {z} with |z| > 0.8")));
    }
    let x = z.re;
    if x < T::zero() {
        let w = x / (x - T::one());
        let pre = Complex::new(T::one() - x, T::zero()).powc(-a);
        let wc = Complex::new(w, T::zero());
        let f = if w <= T::lit(SERIES_RADIUS) {
            series_2f1(a, cc - b, cc, wc, MAX_SHORT_TERMS)?
        } else {
            near_one_2f1(a, cc - b, cc, w)?
        };
        return Ok(pre * f);
    }
    if x < T::one() {
        return near_one_2f1(a, b, cc, x);
    }
    if x == T::one() && (cc - a - b).re > T::zero() {
        return Ok(gamma(cc) * gamma(cc - a - b) * rgamma(cc - a) * rgamma(cc - b));
    }
    Err(Error::HyperDomain(format!("real z = {x} ≥ 1")))
}

/// Convenience wrapper for [`gauss_2f1`].
pub fn hyp2f1<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    cc: Complex<T>,
    z: Complex<T>,
) -> Result<Complex<T>> {
    gauss_2f1(Hyper2F1Params { a, b, c: cc, z })
}

/// Rank-one spherical function of the first kind (Jacobi function), with
/// `⟨α,α⟩ = 1` and `ρ = m/2`.
pub fn rankone_phi_riemannian<T: Real>(m: T, lam: Complex<T>, t: T) -> Result<Complex<T>> {
    if t == T::zero() {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    if m > T::zero() && lam.norm() * t.abs() > T::lit(3.0) && t.abs() <= T::lit(2.0) {
        return rankone_phi_laplace(m, lam, t);
    }
    let four = T::lit(4.0);
    let a = (lam * T::lit(2.0) + m) / four;
    let b = (-lam * T::lit(2.0) + m) / four;
    let cc = Complex::new((m + T::one()) / T::lit(2.0), T::zero());
    let sh = t.sinh();
    hyp2f1(a, b, cc, Complex::new(-sh * sh, T::zero()))
}

fn jacobi_rule(deg: usize, m: f64) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (deg, m.to_bits());
    if let Some(r) = cache.lock().map(|c| c.get(&key).cloned()).ok().flatten() {
        return r;
    }
    let e = (m - 2.0) / 2.0;
    let a = e.try_into().expect("exponent above -1");
    let b = e.try_into().expect("exponent above -1");
    let n = NonZeroUsize::new(deg).expect("positive degree");
    let rule = Arc::new(GaussJacobi::new(n, a, b).as_node_weight_pairs().to_vec());
    if let Ok(mut c) = cache.lock() {
        c.insert(key, rule.clone());
    }
    rule
}

/// Integral form of the rank-one spherical function,
/// `∫_{-1}^{1} (cosh t + x sinh t)^{λ−ρ} (1−x²)^{(m−2)/2} dx`, normalized to 1 at
/// `t = 0`. Stable for large `|λ|` where the ₂F₁ series cancels; requires `m > 0`.
pub fn rankone_phi_laplace<T: Real>(m: T, lam: Complex<T>, t: T) -> Result<Complex<T>> {
    if !(m > T::zero()) {
        return Err(Error::OutsideDomain {
            module: "oracles",
            detail: "integral form needs m > 0".into(),
        });
    }
    let t = t.abs();
    let e = lam - Complex::new(m / T::lit(2.0), T::zero());
    let range = (e.im.abs() * T::lit(2.0) * t + e.re.abs() * T::lit(8.0) * t).as_f64();
    let deg = ((40.0 + range) / 32.0).ceil() as usize * 32;
    if deg > 8192 {
        return Err(Error::OutsideDomain {
            module: "oracles",
            detail: "|λ|·t too large for the integral form".into(),
        });
    }
    let rule = jacobi_rule(deg, m.as_f64());
    let (ch, sh) = (t.cosh(), t.sinh());
    let mut num = Complex::new(T::zero(), T::zero());
    let mut den = T::zero();
    for &(x, w) in rule.iter() {
        let w = T::lit(w);
        num += (e * (ch + T::lit(x) * sh).ln()).exp() * w;
        den += w;
    }
    Ok(num / den)
}

/// Rank-one Harish-Chandra series in closed form (Jacobi function of the
/// second kind), normalized so that it behaves like `e^{(λ−ρ)t}` at infinity.
pub fn rankone_phi_second_kind<T: Real>(m: T, lam: Complex<T>, t: T) -> Result<Complex<T>> {
    if t <= T::zero() {
        return Err(Error::OutsideDomain {
            module: "oracles",
            detail: "t must be positive".into(),
        });
    }
    if lam.norm() > T::lit(20.0) && t > T::lit(0.02) {
        return rankone_phi_expansion(m, lam, t);
    }
    let two = T::lit(2.0);
    let rho = m / two;
    let sh = t.sinh();
    let a = (-lam + rho) / two;
    let b = (-lam + (T::one() - m / two)) / two;
    let cc = -lam + T::one();
    let f = hyp2f1(a, b, cc, Complex::new(-T::one() / (sh * sh), T::zero()))?;
    let pre = ((lam - rho) * (two * sh).ln()).exp();
    Ok(pre * f)
}

/// Rank-one Harish-Chandra expansion `e^{(λ−ρ)t} Σ_k Γ_k e^{−2kt}` with
/// `Γ_k = −m/(2k(k−λ)) Σ_{j<k} Γ_j (λ−ρ−2j)`; well conditioned for large `|λ|`.
pub fn rankone_phi_expansion<T: Real>(m: T, lam: Complex<T>, t: T) -> Result<Complex<T>> {
    if t <= T::zero() {
        return Err(Error::OutsideDomain {
            module: "oracles",
            detail: "t must be positive".into(),
        });
    }
    let two = T::lit(2.0);
    let rho = m / two;
    let x = (-two * t).exp();
    let mut g = Complex::new(T::one(), T::zero());
    let mut run = Complex::new(T::zero(), T::zero());
    let mut sum = g;
    let mut xp = T::one();
    let mut small = 0;
    for k in 1..200_000usize {
        let kk = T::from_i(k as i64);
        run += g * (lam - rho - two * (kk - T::one()));
        let den = (Complex::new(kk, T::zero()) - lam) * (two * kk);
        if den.norm() < T::lit(POLE_TOL) {
            return Err(Error::Pole {
                module: "oracles",
                what: "Harish-Chandra expansion at λ ∈ ℤ₊",
            });
        }
        g = -run * m / den;
        xp *= x;
        let term = g * xp;
        sum += term;
        if term.norm() <= T::epsilon() * T::lit(0.1) * sum.norm() {
            small += 1;
            if small >= 8 {
                return Ok(sum * ((lam - rho) * t).exp());
            }
        } else {
            small = 0;
        }
    }
    Err(Error::OutsideDomain {
        module: "oracles",
        detail: "Harish-Chandra expansion did not converge (t too small)".into(),
    })
}

/// `c⁻(λ) = Γ(ρ)Γ(−λ−ρ+1)/Γ(−λ+1)` for the rank-one noncompactly causal case.
pub fn rankone_ncc_cminus<T: Real>(m: T, lam: Complex<T>) -> Result<Complex<T>> {
    let rho = m / T::lit(2.0);
    beta(
        Complex::new(rho, T::zero()),
        -lam - rho + T::one(),
    )
}

/// Rank-one noncompactly causal spherical function on `A₀`.
pub fn rankone_phi_ncc<T: Real>(m: T, lam: Complex<T>, t: T) -> Result<Complex<T>> {
    let two = T::lit(2.0);
    let rho = m / two;
    let cm = rankone_ncc_cminus(m, lam)?;
    let ch = t.cosh();
    let a = (-lam + rho) / two;
    let b = (-lam + rho + T::one()) / two;
    let cc = -lam + T::one();
    let f = hyp2f1(a, b, cc, Complex::new(T::one() / (ch * ch), T::zero()))?;
    let pre = ((lam - rho) * (two * ch).ln()).exp();
    Ok(cm * pre * f)
}

fn alternating_sum<T: Real>(w: &[WeylElement<T>], lam: &[Complex<T>], h: &[T]) -> Complex<T> {
    w.iter()
        .map(|el| {
            let wl = el.apply_c(lam);
            let e = cdot(&wl, h).exp();
            if el.det > 0 {
                e
            } else {
                -e
            }
        })
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
}

/// Complex-case (`m ≡ 2`) spherical function
/// `(π(ρ)/π(λ)) Σ_w det(w) e^{wλ(H)} / Δ(exp H)`.
pub fn complex_case_phi<T: Real>(
    rs: &RootSystem<T>,
    lam: &[Complex<T>],
    h: &[T],
) -> Result<Complex<T>> {
    let w = weyl_group(rs)?;
    complex_case_phi_with(rs, &w, lam, h)
}

/// As [`complex_case_phi`] with a precomputed Weyl group.
pub fn complex_case_phi_with<T: Real>(
    rs: &RootSystem<T>,
    w: &[WeylElement<T>],
    lam: &[Complex<T>],
    h: &[T],
) -> Result<Complex<T>> {
    rs.check_dim("oracles", lam.len())?;
    rs.check_dim("oracles", h.len())?;
    let rho: Vec<T> = (0..rs.rank)
        .map(|k| (0..rs.num_positive()).fold(T::zero(), |a, i| a + rs.root(i)[k]))
        .collect();
    let mut pi_rho = T::one();
    let mut pi_lam = Complex::new(T::one(), T::zero());
    let mut delta = T::one();
    for i in 0..rs.num_positive() {
        let a = rs.root(i);
        let n2 = dot(a, a);
        pi_rho *= dot(&rho, a) / n2;
        pi_lam *= cdot(lam, a) / n2;
        let x = dot(a, h);
        delta *= x.exp() - (-x).exp();
    }
    if pi_lam.norm() < T::lit(1e-12) {
        return Err(Error::Pole {
            module: "oracles",
            what: "π(λ)⁻¹",
        });
    }
    if delta.abs() < T::lit(1e-300).max(T::min_positive_value()) || delta == T::zero() {
        return Err(Error::Singular {
            module: "oracles",
            detail: "Δ(exp H) = 0 (H on a wall)".into(),
        });
    }
    Ok(alternating_sum(w, lam, h) * pi_rho / (pi_lam * delta))
}

/// Complex-case noncompactly causal spherical function (constants set to 1):
/// `c⁻(λ) Σ_{W_Θ} det(w) e^{wλ(H)} / (Π_{⟨Θ⟩⁺} λ_α Π_{Σ⁺} sinh α(H))` with
/// `c⁻(λ) = Π_{Σ⁺∖⟨Θ⟩⁺} λ_α⁻¹`.
pub fn complex_case_ncc_phi<T: Real>(
    rs: &RootSystem<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    h: &[T],
) -> Result<Complex<T>> {
    rs.check_dim("oracles", lam.len())?;
    rs.check_dim("oracles", h.len())?;
    let wth = parabolic_subgroup(rs, th)?;
    let mut denom = Complex::new(T::one(), T::zero());
    // c⁻ supplies λ_α⁻¹ off Θ, the denominator supplies it on Θ
    for i in 0..rs.num_positive() {
        let a = rs.root(i);
        let la = cdot(lam, a) / dot(a, a);
        denom *= la * dot(a, h).sinh();
    }
    if denom.norm() < T::lit(1e-300).max(T::min_positive_value()) {
        return Err(Error::Singular {
            module: "oracles",
            detail: "vanishing λ_α or H on a wall".into(),
        });
    }
    Ok(alternating_sum(&wth, lam, h) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::build_root_system;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn cx(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn gamma_values() {
        assert!(rel(gamma(cx(5.0, 0.0)), cx(24.0, 0.0)) < 1e-14);
        let sp = std::f64::consts::PI.sqrt();
        assert!(rel(gamma(cx(0.5, 0.0)), cx(sp, 0.0)) < 1e-13);
        assert!(rel(gamma(cx(-0.5, 0.0)), cx(-2.0 * sp, 0.0)) < 1e-13);
        let pi = std::f64::consts::PI;
        let g = gamma(cx(1.0, 1.0));
        assert!((g.norm_sqr() - pi / pi.sinh()).abs() < 1e-13);
        assert_eq!(rgamma(cx(-3.0, 0.0)), cx(0.0, 0.0));
        assert_eq!(pole_index(cx(-3.0 + 1e-12, 0.0)), Some(3));
        assert_eq!(pole_index(cx(0.5, 0.0)), None);
    }

    #[test]
    fn gamma_large_imaginary() {
        // |Γ(1/2 + iy)|² = π / cosh(πy)
        let y = 300.0;
        let lg = ln_gamma(cx(0.5, y));
        let pi = std::f64::consts::PI;
        let expect = 0.5 * (pi.ln() - (pi * y - 2f64.ln()));
        assert!((lg.re - expect).abs() < 1e-9);
    }

    #[test]
    fn gamma_product_poles() {
        // Γ(λ)/Γ(λ+1) = 1/λ: at λ = −1 the poles cancel
        let mut p = GammaProduct::<f64>::new();
        p.num(cx(-1.0, 0.0), 1.0).den(cx(0.0, 0.0), 1.0);
        let v = p.finish();
        assert_eq!(v.pole_order, 0);
        assert!(rel(v.value, cx(-1.0, 0.0)) < 1e-13);
        // Γ(λ) at λ = 0: leading coefficient 1
        let mut p = GammaProduct::<f64>::new();
        p.num(cx(0.0, 0.0), 1.0);
        assert_eq!(p.finish().pole_order, 1);
        assert!(rel(p.finish().value, cx(1.0, 0.0)) < 1e-14);
    }

    #[test]
    fn beta_values() {
        assert!(rel(beta(cx(1.0, 0.0), cx(2.0, 0.0)).unwrap(), cx(0.5, 0.0)) < 1e-14);
        assert!(rel(beta(cx(1.0, 0.0), cx(0.3, 0.2)).unwrap(), cx(1.0, 0.0) / cx(0.3, 0.2)) < 1e-13);
        assert!(rel(beta(cx(1.0, 0.0), cx(-2.0, 0.0)).unwrap(), cx(-0.5, 0.0)) < 1e-13);
        assert!(beta(cx(-2.0, 0.0), cx(0.5, 0.0)).is_err());
    }

    #[test]
    fn hyp_examples() {
        let one = cx(1.0, 0.0);
        assert_eq!(hyp2f1(one, one, cx(2.0, 0.0), cx(0.0, 0.0)).unwrap(), one);
        let v = hyp2f1(one, one, cx(2.0, 0.0), cx(0.5, 0.0)).unwrap();
        assert!(rel(v, cx(-(0.5f64).ln() / 0.5, 0.0)) < 1e-13);
        let v = hyp2f1(one, cx(0.7, 0.0), cx(0.7, 0.0), cx(0.25, 0.0)).unwrap();
        assert!(rel(v, cx(4.0 / 3.0, 0.0)) < 1e-13);
        assert!(matches!(
            hyp2f1(one, one, cx(-2.0, 0.0), cx(0.1, 0.0)),
            Err(Error::HyperC)
        ));
        assert!(hyp2f1(one, one, cx(2.0, 0.0), cx(0.0, 0.9)).is_err());
    }

    #[test]
    fn hyp_transformations() {
        // Pfaff branch: ln(1−z)/(−z) at z = −3
        let one = cx(1.0, 0.0);
        let v = hyp2f1(one, one, cx(2.0, 0.0), cx(-3.0, 0.0)).unwrap();
        assert!(rel(v, cx(4f64.ln() / 3.0, 0.0)) < 1e-12);
        // connection branch: (1−z)^{−a}
        let v = hyp2f1(cx(0.3, 0.0), cx(0.7, 0.0), cx(0.7, 0.0), cx(0.95, 0.0)).unwrap();
        assert!(rel(v, cx(0.05f64.powf(-0.3), 0.0)) < 1e-11);
        // arcsin(x)/x with x² = 0.9
        let x = 0.9f64.sqrt();
        let v = hyp2f1(cx(0.5, 0.0), cx(0.5, 0.0), cx(1.5, 0.0), cx(0.9, 0.0)).unwrap();
        assert!(rel(v, cx(x.asin() / x, 0.0)) < 1e-11);
        // integer c − a − b: long series, −ln(1−z)/z at z = 0.95
        let v = hyp2f1(one, one, cx(2.0, 0.0), cx(0.95, 0.0)).unwrap();
        assert!(rel(v, cx(-(0.05f64).ln() / 0.95, 0.0)) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hyp_contiguous_relation(
            a in -2.0f64..2.0, b in -2.0f64..2.0, cc in 0.3f64..3.0,
            ai in -1.0f64..1.0, z in -0.75f64..0.75,
        ) {
            let a = cx(a, ai);
            let b = cx(b, 0.0);
            let cc = cx(cc, 0.0);
            let zc = cx(z, 0.0);
            let f = |aa: C| hyp2f1(aa, b, cc, zc).unwrap();
            let r = (cc - a) * f(a - 1.0) + (a * 2.0 - cc + (b - a) * z) * f(a) + a * (z - 1.0) * f(a + 1.0);
            let scale = (cc - a).norm() * f(a - 1.0).norm() + f(a).norm() * 4.0 + a.norm() * f(a + 1.0).norm();
            prop_assert!(r.norm() <= 1e-10 * scale.max(1.0));
        }

        #[test]
        fn riemannian_jacobi_ode(m in prop::sample::select(vec![1.0f64, 2.0, 3.0, 4.0, 6.0]),
                                 lr in -2.0f64..2.0, li in -2.0f64..2.0, t in 0.4f64..2.5) {
            let lam = cx(lr, li);
            let h = 1e-3;
            let f = |s: f64| rankone_phi_riemannian(m, lam, s).unwrap();
            let (fm, f0, fp) = (f(t - h), f(t), f(t + h));
            let lap = (fp - f0 * 2.0 + fm) / (h * h) + (fp - fm) / (2.0 * h) * (m / t.tanh());
            let rho = m / 2.0;
            let ev = lam * lam - rho * rho;
            prop_assert!((lap - ev * f0).norm() <= 1e-4 * (ev * f0).norm().max(1.0));
        }
    }

    #[test]
    fn riemannian_examples() {
        assert_eq!(rankone_phi_riemannian(2.0, cx(0.3, 0.1), 0.0).unwrap(), cx(1.0, 0.0));
        let v = rankone_phi_riemannian(2.0, cx(2.0, 0.0), 1.0).unwrap();
        assert!(rel(v, cx(1f64.cosh(), 0.0)) < 1e-12);
        let lam = cx(0.4, 1.3);
        for t in [0.3, 1.0, 4.0] {
            let a = rankone_phi_riemannian(4.0, lam, t).unwrap();
            let b = rankone_phi_riemannian(4.0, -lam, t).unwrap();
            assert!(rel(a, b) < 1e-10);
        }
    }

    #[test]
    fn second_kind_examples() {
        let lam = cx(0.5, 1.0);
        let t = 20.0;
        for m in [2.0, 4.0, 6.0] {
            let v = rankone_phi_second_kind(m, lam, t).unwrap();
            let asym = ((lam - m / 2.0) * t).exp();
            assert!(rel(v, asym) < 1e-6);
        }
        let v = rankone_phi_second_kind(0.0, lam, 1.3).unwrap();
        assert!(rel(v, (lam * 1.3).exp()) < 1e-12);
        for t in [0.2, 0.5, 1.0, 3.0] {
            let v = rankone_phi_second_kind(2.0, lam, t).unwrap();
            let exact = ((lam - 1.0) * t).exp() / (1.0 - (-2.0 * t).exp());
            assert!(rel(v, exact) < 1e-11, "t={t}");
        }
    }

    #[test]
    fn ncc_examples() {
        // c⁻ at λ = ρ + 1 with ρ = 1: Γ(1)Γ(−1)/Γ(−1) has cancelling poles
        let v = rankone_ncc_cminus(2.0, cx(2.0, 0.0)).unwrap();
        assert!(rel(v, cx(-0.5, 0.0)) < 1e-12);
        let lam = cx(0.3, 0.8);
        let cm = rankone_ncc_cminus(2.0, lam).unwrap();
        let t = 15.0;
        let v = rankone_phi_ncc(2.0, lam, t).unwrap();
        assert!(rel(v / (cm * ((lam - 1.0) * t).exp()), cx(1.0, 0.0)) < 1e-10);
        // m = 2: proportional to e^{λt}/sinh t
        let r0 = rankone_phi_ncc(2.0, lam, 0.5).unwrap() * 0.5f64.sinh() / (lam * 0.5).exp();
        for t in [0.1, 0.9, 2.0, 3.5] {
            let r = rankone_phi_ncc(2.0, lam, t).unwrap() * t.sinh() / (lam * t).exp();
            assert!(rel(r, r0) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn complex_case_examples() {
        let a1 = build_root_system::<f64>("A", 1).unwrap();
        let v = complex_case_phi(&a1, &[cx(2.0, 0.0)], &[2.0]).unwrap();
        assert!(rel(v, cx(2f64.cosh(), 0.0)) < 1e-13);
        let v1 = complex_case_phi(&a1, &[cx(0.7, 0.2)], &[1.1]).unwrap();
        let v2 = complex_case_phi(&a1, &[cx(-0.7, -0.2)], &[1.1]).unwrap();
        assert!(rel(v1, v2) < 1e-13);
        let near = complex_case_phi(&a1, &[cx(1.0, 0.0)], &[1e-4]).unwrap();
        assert!((near - 1.0).norm() < 1e-6);
        assert!(complex_case_phi(&a1, &[cx(1.0, 0.0)], &[0.0]).is_err());
        // Θ = ∅ against the rank-one noncompactly causal formula
        let lam = cx(0.4, 0.9);
        let th = ThetaSet::empty();
        let ratio = |t: f64| {
            complex_case_ncc_phi(&a1, &th, &[lam], &[t]).unwrap() / rankone_phi_ncc(2.0, lam, t).unwrap()
        };
        let r0 = ratio(0.7);
        for t in [0.2, 1.4, 2.9] {
            assert!(rel(ratio(t), r0) < 1e-10);
        }
    }

    #[test]
    fn ncc_full_theta_matches_complex_case() {
        let a2 = build_root_system::<f64>("A", 2).unwrap();
        let lam = [cx(0.3, 1.1), cx(-0.2, 0.7)];
        let th = ThetaSet::full(2);
        let ratio = |h: [f64; 2]| {
            complex_case_ncc_phi(&a2, &th, &lam, &h).unwrap() / complex_case_phi(&a2, &lam, &h).unwrap()
        };
        let r0 = ratio([0.9, 0.2]);
        for h in [[1.3, 0.5], [0.2, 0.05], [2.0, -0.3]] {
            assert!(rel(ratio(h), r0) < 1e-10);
        }
    }

    #[test]
    fn f32_gamma() {
        let g: Complex<f32> = gamma(Complex::new(4.0f32, 0.0));
        assert!((g.re - 6.0).abs() < 1e-4);
    }

    #[test]
    fn laplace_form_matches_series() {
        for m in [1.0, 1.5, 2.0, 3.0, 6.0] {
            for (lam, t) in [(cx(0.0, 2.0), 0.7), (cx(0.4, 1.1), 1.3), (cx(0.0, 0.5), 2.0)] {
                let a = rankone_phi_laplace(m, lam, t).unwrap();
                let o = Complex::new(-(t as f64).sinh().powi(2), 0.0);
                let b = hyp2f1((lam * 2.0 + m) / 4.0, (-lam * 2.0 + m) / 4.0, cx((m + 1.0) / 2.0, 0.0), o)
                    .unwrap();
                assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()), "m={m} {a} {b}");
            }
        }
        // m = 2: sin(yt)/(y sinh t)
        let (y, t) = (150.0, 0.9);
        let v = rankone_phi_riemannian(2.0, cx(0.0, y), t).unwrap();
        let w = (y * t).sin() / (y * (t as f64).sinh());
        assert!((v.re - w).abs() < 1e-13 && v.im.abs() < 1e-13);
    }

    #[test]
    fn expansion_matches_closed_forms() {
        for m in [1.0, 2.0, 3.5] {
            for (lam, t) in [(cx(0.3, 1.2), 0.6), (cx(0.0, 4.0), 1.4)] {
                let a = rankone_phi_expansion(m, lam, t).unwrap();
                let b = rankone_phi_second_kind(m, lam, t).unwrap();
                assert!((a - b).norm() < 1e-12 * b.norm(), "m={m} {a} {b}");
            }
        }
        for (y, t) in [(250.0, 0.4), (150.0, 0.2), (60.0, 0.05)] {
            let l = cx(0.0, y);
            let exact = ((l - 1.0) * t).exp() / (1.0 - (-2.0 * t as f64).exp());
            let v = rankone_phi_second_kind(2.0, l, t).unwrap();
            assert!((v - exact).norm() < 1e-12 * exact.norm());
        }
    }
}
