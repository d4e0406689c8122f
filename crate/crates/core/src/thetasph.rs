//! Θ-spherical functions, the Heckman–Opdam hypergeometric function, `E_Θ`,
//! regularized variants and the radial Laplacian check.

use num_complex::Complex;
use serde::Serialize;

use crate::coeffs::{
    c_hc, c_theta_minus, c_theta_plus, d_theta_sign, rho, weyl_denominator_re,
    MultiplicityFunction,
};
use crate::error::{Error, Result};
use crate::expcalc::complex_theta_closed_form;
use crate::hcseries::{gamma_coeffs, phi_hc, GammaTable};
use crate::oracles::{rankone_phi_riemannian, rankone_phi_second_kind, rgamma};
use crate::rootsys::{
    a_theta_contains, parabolic_subgroup, theta_root_split, RootSystem, ThetaSet, WeylElement,
};
use crate::scalar::{cdot, dot, Real};

/// Default Harish-Chandra series order.
pub const DEFAULT_ORDER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    ClosedFormComplex,
    ClosedFormRankone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    None,
    EMinus,
    NMinus,
}

/// Evaluation path request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Closed form when one exists, otherwise the series.
    #[default]
    Auto,
    Series,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaSphericalValue<T: Real> {
    pub value: Complex<T>,
    pub method: Method,
    pub regularization: Regularization,
    pub est_error: T,
}

fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

fn is_m2<T: Real>(m: &MultiplicityFunction<T>) -> bool {
    m.is_constant(T::lit(2.0))
}

/// W_Θ-representative of `H` with `α(H) ≥ 0` on Θ; errors outside 𝔞_Θ.
fn theta_rep<T: Real>(rs: &RootSystem<T>, th: &ThetaSet, h: &[T]) -> Result<Vec<T>> {
    rs.check_dim("thetasph", h.len())?;
    th.check(rs.rank)?;
    if !a_theta_contains(rs, th, h) {
        return Err(Error::OutsideDomain {
            module: "thetasph",
            detail: "H ∉ 𝔞_Θ (α(H) ≤ 0 for some α ∈ Σ⁺∖⟨Θ⟩⁺)".into(),
        });
    }
    Ok(rs.dominant_rep_in(h, th.indices()))
}

fn strictly_dominant<T: Real>(rs: &RootSystem<T>, h: &[T]) -> bool {
    rs.min_alpha(h) > T::lit(1e-12)
}

// Σ_{w∈W_Θ} coef(wλ) Φ_{wλ}(H) with propagated tail bounds
fn series_sum<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    wth: &[WeylElement<T>],
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
    coef: impl Fn(&[Complex<T>]) -> Result<Complex<T>>,
) -> Result<(Complex<T>, T)> {
    if !strictly_dominant(rs, h) {
        return Err(Error::NotDominant { module: "thetasph" });
    }
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut err = T::zero();
    for w in wth {
        let wl = w.apply_c(lam);
        let c = coef(&wl)?;
        let s = phi_hc(rs, m, &wl, h, n)?;
        sum += c * s.value;
        err += c.norm() * s.tail_bound;
    }
    Ok((sum, err))
}

fn exp_sum<T: Real>(wth: &[WeylElement<T>], lam: &[Complex<T>], h: &[T]) -> Complex<T> {
    wth.iter()
        .fold(Complex::new(T::zero(), T::zero()), |a, w| a + cdot(&w.apply_c(lam), h).exp())
}

fn alt_sum<T: Real>(wth: &[WeylElement<T>], lam: &[Complex<T>], h: &[T]) -> Complex<T> {
    wth.iter().fold(Complex::new(T::zero(), T::zero()), |a, w| {
        let e = cdot(&w.apply_c(lam), h).exp();
        if w.det > 0 {
            a + e
        } else {
            a - e
        }
    })
}

fn c_minus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<Complex<T>> {
    c_theta_minus(rs, m, th, lam).finite("thetasph", "c_Θ⁻")
}

fn c_plus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<Complex<T>> {
    c_theta_plus(rs, m, th, lam).finite("thetasph", "c_Θ⁺")
}

fn no_closed_form() -> Error {
    Error::OutsideDomain {
        module: "thetasph",
        detail: "no closed form for this (Σ, m, Θ, H); use the series on 𝔞⁺".into(),
    }
}

// closed form of φ_Θ at a W_Θ-representative, if one applies
fn closed_form<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    rep: &[T],
) -> Option<Result<(Complex<T>, Method)>> {
    let on_wall = !strictly_dominant(rs, rep);
    if rs.rank == 1 {
        let t = rep[0];
        let l = rs.lambda_alpha_idx(lam, 0);
        let ma = m.values()[0];
        if th.is_full(1) {
            let r = crate::coeffs::rho_c(rs, m);
            let v = c_plus(rs, m, th, &r)
                .and_then(|c| Ok(c * rankone_phi_riemannian(ma, l, t.abs())?));
            return Some(v.map(|v| (v, Method::ClosedFormRankone)));
        }
        if on_wall {
            return None;
        }
        let v = c_minus(rs, m, th, lam)
            .and_then(|c| Ok(c * rankone_phi_second_kind(ma, l, t)?));
        return Some(v.map(|v| (v, Method::ClosedFormRankone)));
    }
    if is_m2(m) && !on_wall {
        return Some(
            complex_theta_closed_form(rs, th, lam, rep).map(|v| (v, Method::ClosedFormComplex)),
        );
    }
    None
}

/// `φ_Θ(m;λ, exp H) = c_Θ⁻(λ) Σ_{w∈W_Θ} c_Θ⁺(wλ) Φ_{wλ}(exp H)`, with the
/// default path choice.
pub fn theta_spherical<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
) -> Result<ThetaSphericalValue<T>> {
    theta_spherical_with(rs, m, th, lam, h, n, MethodChoice::Auto)
}

/// As [`theta_spherical`] with an explicit path. Points of 𝔞_Θ outside the
/// positive chamber are mapped to their W_Θ-representative first.
pub fn theta_spherical_with<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
    choice: MethodChoice,
) -> Result<ThetaSphericalValue<T>> {
    rs.check_dim("thetasph", lam.len())?;
    let rep = theta_rep(rs, th, h)?;
    let wth = parabolic_subgroup(rs, th)?;
    if m.is_zero() {
        return Ok(ThetaSphericalValue {
            value: exp_sum(&wth, lam, &rep),
            method: Method::Series,
            regularization: Regularization::None,
            est_error: T::zero(),
        });
    }
    if choice != MethodChoice::Series {
        match closed_form(rs, m, th, lam, &rep) {
            Some(r) => {
                let (value, method) = r?;
                return Ok(ThetaSphericalValue {
                    value,
                    method,
                    regularization: Regularization::None,
                    est_error: T::epsilon() * T::lit(64.0) * value.norm(),
                });
            }
            None if choice == MethodChoice::ClosedForm => return Err(no_closed_form()),
            None => {}
        }
    }
    let cm = c_minus(rs, m, th, lam)?;
    let (s, err) = series_sum(rs, m, &wth, lam, &rep, n, |wl| c_plus(rs, m, th, wl))?;
    Ok(ThetaSphericalValue {
        value: cm * s,
        method: Method::Series,
        regularization: Regularization::None,
        est_error: cm.norm() * err,
    })
}

/// Heckman–Opdam hypergeometric function `φ_λ = Σ_{w∈W} c(wλ) Φ_{wλ}`, with
/// `c(ρ) = 1`; evaluated by the series at the dominant representative of `H`.
pub fn hypergeometric_ho<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
) -> Result<ThetaSphericalValue<T>> {
    rs.check_dim("thetasph", lam.len())?;
    rs.check_dim("thetasph", h.len())?;
    let rep = rs.dominant_rep(h);
    let w = crate::rootsys::weyl_group(rs)?;
    if m.is_zero() {
        return Ok(ThetaSphericalValue {
            value: exp_sum(&w, lam, &rep),
            method: Method::Series,
            regularization: Regularization::None,
            est_error: T::zero(),
        });
    }
    if rs.rank == 1 {
        let v = rankone_phi_riemannian(m.values()[0], rs.lambda_alpha_idx(lam, 0), rep[0].abs())?;
        return Ok(ThetaSphericalValue {
            value: v,
            method: Method::ClosedFormRankone,
            regularization: Regularization::None,
            est_error: T::epsilon() * T::lit(64.0),
        });
    }
    let (value, est_error) = series_sum(rs, m, &w, lam, &rep, n, |wl| {
        c_hc(rs, m, wl).finite("thetasph", "c(wλ)")
    })?;
    Ok(ThetaSphericalValue {
        value,
        method: Method::Series,
        regularization: Regularization::None,
        est_error,
    })
}

/// `c_Θ⁻(λ) c_Θ⁺(λ) / c_Π⁺(λ)`; equals `(−1)^{d(Θ,m)}` for even `m`.
pub fn e_theta_prefactor<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<Complex<T>> {
    th.check(rs.rank)?;
    if m.is_zero() {
        return Ok(one());
    }
    if m.is_even() {
        return Ok(Complex::new(d_theta_sign(rs, m, th)?, T::zero()));
    }
    let full = ThetaSet::full(rs.rank);
    let num = c_minus(rs, m, th, lam)? * c_plus(rs, m, th, lam)?;
    let den = c_plus(rs, m, &full, lam)?;
    if den.norm() <= T::min_positive_value() {
        return Err(Error::Pole {
            module: "thetasph",
            what: "E_Θ prefactor (zero of c_Π⁺)",
        });
    }
    Ok(num / den)
}

/// `E_Θ(m;λ, exp H) = (c_Θ⁻ c_Θ⁺ / c_Π⁺)(λ) φ_Π(m;λ, exp H)`, W_Θ-invariant on 𝔞_Θ.
pub fn e_theta<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    h: &[T],
) -> Result<Complex<T>> {
    e_theta_with(rs, m, th, lam, h, DEFAULT_ORDER, MethodChoice::Auto)
}

pub fn e_theta_with<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
    choice: MethodChoice,
) -> Result<Complex<T>> {
    let rep = theta_rep(rs, th, h)?;
    let pre = e_theta_prefactor(rs, m, th, lam)?;
    let full = ThetaSet::full(rs.rank);
    let phi = theta_spherical_with(rs, m, &full, lam, &rep, n, choice)?;
    Ok(pre * phi.value)
}

/// Entire prefactor multiplying `Σ_{W_Θ} c_Θ⁺(wλ)Φ_{wλ}`: `e_Θ⁻ c_Θ⁻` for even
/// `m` (a polynomial), `c_Θ⁻/n_Θ⁻ = Π 1/Γ(1 − λ_α)` otherwise.
fn regularized_prefactor<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<(Complex<T>, Regularization)> {
    let (_, outside) = theta_root_split(rs, th);
    if m.is_even() {
        let sign = d_theta_sign(rs, m, th)?;
        let p = outside.iter().fold(Complex::new(sign, T::zero()), |p, &i| {
            let la = rs.lambda_alpha_idx(lam, i);
            (1..m.half_int(rs, i)).fold(p, |q, k| q * (la - T::from_i(k)))
        });
        return Ok((p, Regularization::EMinus));
    }
    let p = outside.iter().fold(one(), |p, &i| {
        p * rgamma(one::<T>() - rs.lambda_alpha_idx(lam, i))
    });
    Ok((p, Regularization::NMinus))
}

/// `e_Θ⁻ φ_Θ` (even `m`) or `φ_Θ / n_Θ⁻` (general `m`), evaluated with the
/// entire prefactor applied before summation so that former poles in λ are
/// harmless.
pub fn regularized_theta<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
) -> Result<ThetaSphericalValue<T>> {
    regularized_theta_with(rs, m, th, lam, h, n, MethodChoice::Auto)
}

pub fn regularized_theta_with<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
    h: &[T],
    n: usize,
    choice: MethodChoice,
) -> Result<ThetaSphericalValue<T>> {
    rs.check_dim("thetasph", lam.len())?;
    let rep = theta_rep(rs, th, h)?;
    let wth = parabolic_subgroup(rs, th)?;
    let (pre, reg) = regularized_prefactor(rs, m, th, lam)?;
    if m.is_zero() {
        return Ok(ThetaSphericalValue {
            value: pre * exp_sum(&wth, lam, &rep),
            method: Method::Series,
            regularization: reg,
            est_error: T::zero(),
        });
    }
    if choice != MethodChoice::Series && strictly_dominant(rs, &rep) {
        let (inside, _) = theta_root_split(rs, th);
        let closed = if rs.rank == 1 && th.is_empty() {
            let t = rep[0];
            let l = rs.lambda_alpha_idx(lam, 0);
            Some((
                pre * rankone_phi_second_kind(m.values()[0], l, t)?,
                Method::ClosedFormRankone,
            ))
        } else if is_m2(m) {
            // e_Θ⁻ φ_Θ = (−1)^d Σ_{W_Θ} det(w) e^{wλ} / (Π_{⟨Θ⟩⁺} λ_α · Δ)
            let pin = inside
                .iter()
                .fold(one::<T>(), |p, &i| p * rs.lambda_alpha_idx(lam, i));
            if pin.norm() < T::lit(1e-12) {
                None
            } else {
                let d = weyl_denominator_re(rs, &rep);
                Some((pre * alt_sum(&wth, lam, &rep) / (pin * d), Method::ClosedFormComplex))
            }
        } else {
            None
        };
        if let Some((value, method)) = closed {
            return Ok(ThetaSphericalValue {
                value,
                method,
                regularization: reg,
                est_error: T::epsilon() * T::lit(64.0) * value.norm(),
            });
        }
        if choice == MethodChoice::ClosedForm {
            return Err(no_closed_form());
        }
    }
    let (s, err) = series_sum(rs, m, &wth, lam, &rep, n, |wl| c_plus(rs, m, th, wl))?;
    Ok(ThetaSphericalValue {
        value: pre * s,
        method: Method::Series,
        regularization: reg,
        est_error: pre.norm() * err,
    })
}

/// `|L(m)f − (⟨λ,λ⟩ − ⟨ρ,ρ⟩)f| / (1 + |f|)` at `H` by central differences
/// (stencil points at distance up to `2h`),
/// `L = Σ ∂(H_i)² + Σ_{α∈Σ⁺} m_α coth α(H) ∂(A_α)`.
pub fn radial_laplacian_residual<T: Real, F>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    lam: &[Complex<T>],
    f: F,
    h: &[T],
    step: T,
) -> Result<T>
where
    F: Fn(&[T]) -> Result<Complex<T>>,
{
    rs.check_dim("thetasph", lam.len())?;
    rs.check_dim("thetasph", h.len())?;
    let margin = (0..rs.num_positive())
        .map(|i| rs.alpha_at(i, h) / rs.root_norm2(i).sqrt())
        .fold(T::infinity(), |a, b| a.min(b));
    if !(margin >= T::lit(3.0) * step) || step <= T::zero() {
        return Err(Error::StepTooLarge {
            h: step.as_f64(),
            margin: margin.as_f64(),
        });
    }
    let r = rs.rank;
    let f0 = f(h)?;
    let mut lap = Complex::new(T::zero(), T::zero());
    let mut grad = vec![Complex::new(T::zero(), T::zero()); r];
    // fourth-order central stencils on ±h, ±2h
    for i in 0..r {
        let at = |k: i64| {
            let mut p = h.to_vec();
            p[i] += step * T::from_i(k);
            f(&p)
        };
        let (p1, m1, p2, m2) = (at(1)?, at(-1)?, at(2)?, at(-2)?);
        let d2 = (-(p2 + m2) + (p1 + m1) * T::lit(16.0) - f0 * T::lit(30.0))
            / (T::lit(12.0) * step * step);
        let d1 = (-(p2 - m2) + (p1 - m1) * T::lit(8.0)) / (T::lit(12.0) * step);
        lap += d2;
        grad[i] = d1;
    }
    for i in 0..rs.num_positive() {
        let a = rs.root(i);
        let x = rs.alpha_at(i, h);
        let coth = T::one() / x.tanh();
        lap += cdot(&grad, a) * (m.of(rs, i) * coth);
    }
    let rh = rho(rs, m);
    let ev = lam.iter().fold(Complex::new(T::zero(), T::zero()), |s, x| s + *x * *x)
        - Complex::new(dot(&rh, &rh), T::zero());
    Ok((lap - ev * f0).norm() / (T::one() + f0.norm()))
}

enum LambdaKind<T: Real> {
    Euclid(Vec<Vec<Complex<T>>>),
    Complex {
        terms: Vec<(bool, Vec<Complex<T>>)>,
        scale: Complex<T>,
    },
    RankOnePi {
        scale: Complex<T>,
        m: T,
        l: Complex<T>,
    },
    RankOneEmpty {
        scale: Complex<T>,
        m: T,
        l: Complex<T>,
    },
    Series {
        scale: Complex<T>,
        tables: Vec<(Complex<T>, GammaTable<T>)>,
    },
}

/// Batch evaluator of `φ_Θ(m;λ,·)` for fixed `(Σ, m, Θ)`: per-λ data
/// (Harish-Chandra tables or closed-form constants) is built once and reused
/// across many points `H`.
pub struct ThetaEvaluator<'a, T: Real> {
    rs: &'a RootSystem<T>,
    m: MultiplicityFunction<T>,
    th: ThetaSet,
    wth: Vec<WeylElement<T>>,
    n: usize,
    choice: MethodChoice,
}

/// `φ_Θ(m;λ,·)` at one fixed λ.
pub struct LambdaEvaluator<'e, 'a, T: Real> {
    ev: &'e ThetaEvaluator<'a, T>,
    kind: LambdaKind<T>,
}

impl<'a, T: Real> ThetaEvaluator<'a, T> {
    pub fn new(
        rs: &'a RootSystem<T>,
        m: &MultiplicityFunction<T>,
        th: &ThetaSet,
        n: usize,
        choice: MethodChoice,
    ) -> Result<Self> {
        th.check(rs.rank)?;
        Ok(Self {
            rs,
            m: m.clone(),
            th: th.clone(),
            wth: parabolic_subgroup(rs, th)?,
            n,
            choice,
        })
    }

    pub fn theta(&self) -> &ThetaSet {
        &self.th
    }

    pub fn at(&self, lam: &[Complex<T>]) -> Result<LambdaEvaluator<'_, 'a, T>> {
        let rs = self.rs;
        let m = &self.m;
        let th = &self.th;
        rs.check_dim("thetasph", lam.len())?;
        if m.is_zero() {
            let wl = self.wth.iter().map(|w| w.apply_c(lam)).collect();
            return Ok(LambdaEvaluator {
                ev: self,
                kind: LambdaKind::Euclid(wl),
            });
        }
        if self.choice != MethodChoice::Series {
            if rs.rank == 1 {
                let l = rs.lambda_alpha_idx(lam, 0);
                let ma = m.values()[0];
                let kind = if th.is_full(1) {
                    let r = crate::coeffs::rho_c(rs, m);
                    LambdaKind::RankOnePi {
                        scale: c_plus(rs, m, th, &r)?,
                        m: ma,
                        l,
                    }
                } else {
                    LambdaKind::RankOneEmpty {
                        scale: c_minus(rs, m, th, lam)?,
                        m: ma,
                        l,
                    }
                };
                return Ok(LambdaEvaluator { ev: self, kind });
            }
            if is_m2(m) {
                let pi = crate::coeffs::pi_poly(rs, lam);
                if pi.norm() < T::lit(1e-12) {
                    return Err(Error::Pole {
                        module: "thetasph",
                        what: "π(λ)⁻¹ in the complex-case closed form",
                    });
                }
                let sign = d_theta_sign(rs, m, th)?;
                let terms = self.wth.iter().map(|w| (w.det > 0, w.apply_c(lam))).collect();
                return Ok(LambdaEvaluator {
                    ev: self,
                    kind: LambdaKind::Complex {
                        terms,
                        scale: Complex::new(sign, T::zero()) / pi,
                    },
                });
            }
            if self.choice == MethodChoice::ClosedForm {
                return Err(no_closed_form());
            }
        }
        let scale = c_minus(rs, m, th, lam)?;
        let mut tables = Vec::with_capacity(self.wth.len());
        for w in &self.wth {
            let wl = w.apply_c(lam);
            let c = c_plus(rs, m, th, &wl)?;
            tables.push((c, gamma_coeffs(rs, m, &wl, self.n)?));
        }
        Ok(LambdaEvaluator {
            ev: self,
            kind: LambdaKind::Series { scale, tables },
        })
    }
}

impl<T: Real> LambdaEvaluator<'_, '_, T> {
    pub fn eval(&self, h: &[T]) -> Result<ThetaSphericalValue<T>> {
        let ev = self.ev;
        let rs = ev.rs;
        let rep = theta_rep(rs, &ev.th, h)?;
        let closed = |value: Complex<T>, method| ThetaSphericalValue {
            value,
            method,
            regularization: Regularization::None,
            est_error: T::epsilon() * T::lit(64.0) * value.norm(),
        };
        match &self.kind {
            LambdaKind::Euclid(wl) => {
                let value = wl
                    .iter()
                    .fold(Complex::new(T::zero(), T::zero()), |a, l| a + cdot(l, &rep).exp());
                Ok(ThetaSphericalValue {
                    value,
                    method: Method::Series,
                    regularization: Regularization::None,
                    est_error: T::zero(),
                })
            }
            LambdaKind::Complex { terms, scale } => {
                let d = weyl_denominator_re(rs, &rep);
                if d == T::zero() || !strictly_dominant(rs, &rep) {
                    return Err(Error::Singular {
                        module: "thetasph",
                        detail: "Δ(exp H) = 0 (H on a wall)".into(),
                    });
                }
                let s = terms.iter().fold(Complex::new(T::zero(), T::zero()), |a, (pos, l)| {
                    let e = cdot(l, &rep).exp();
                    if *pos {
                        a + e
                    } else {
                        a - e
                    }
                });
                Ok(closed(s * *scale / d, Method::ClosedFormComplex))
            }
            LambdaKind::RankOnePi { scale, m, l } => Ok(closed(
                *scale * rankone_phi_riemannian(*m, *l, rep[0].abs())?,
                Method::ClosedFormRankone,
            )),
            LambdaKind::RankOneEmpty { scale, m, l } => Ok(closed(
                *scale * rankone_phi_second_kind(*m, *l, rep[0])?,
                Method::ClosedFormRankone,
            )),
            LambdaKind::Series { scale, tables } => {
                if !strictly_dominant(rs, &rep) {
                    return Err(Error::NotDominant { module: "thetasph" });
                }
                let mut sum = Complex::new(T::zero(), T::zero());
                let mut err = T::zero();
                for (c, t) in tables {
                    let s = t.eval(rs, &rep)?;
                    sum += *c * s.value;
                    err += c.norm() * s.tail_bound;
                }
                Ok(ThetaSphericalValue {
                    value: *scale * sum,
                    method: Method::Series,
                    regularization: Regularization::None,
                    est_error: scale.norm() * err,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{complex_case_phi, rankone_phi_ncc};
    use crate::rootsys::{build_root_system, parabolic, weyl_group};
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn rsys(f: &str, r: usize) -> RootSystem<f64> {
        build_root_system(f, r).unwrap()
    }

    fn mult(rs: &RootSystem<f64>, m: f64) -> MultiplicityFunction<f64> {
        MultiplicityFunction::uniform(rs, m).unwrap()
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn euclidean_case() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 0.0);
        let lam = vec![c(0.3, 1.1), c(-0.4, 0.2)];
        let h = [0.7, 0.2];
        let v = theta_spherical(&rs, &m, &ThetaSet::full(2), &lam, &h, 10).unwrap();
        let w = weyl_group(&rs).unwrap();
        let want: C = w.iter().map(|e| cdot(&e.apply_c(&lam), &h).exp()).sum();
        assert!(rel(v.value, want) < 1e-13);
    }

    #[test]
    fn riemannian_ratio_a1() {
        let rs = rsys("A", 1);
        for &mm in &[2.0, 3.0] {
            let m = mult(&rs, mm);
            let r = crate::coeffs::rho_c(&rs, &m);
            let cr = c_theta_plus(&rs, &m, &ThetaSet::full(1), &r).value;
            let lam = vec![c(0.4, 1.3)];
            for &t in &[0.6, 1.5, 2.5] {
                let v = theta_spherical_with(&rs, &m, &ThetaSet::full(1), &lam, &[t], 60, MethodChoice::Series)
                    .unwrap();
                let o = rankone_phi_riemannian(mm, lam[0], t).unwrap();
                assert!(rel(v.value / cr, o) < 1e-9, "m={mm} t={t}");
                assert_eq!(v.method, Method::Series);
            }
        }
    }

    #[test]
    fn empty_theta_matches_ncc_up_to_scalar() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let lam = vec![c(0.35, 0.8)];
        let ts = [0.6, 1.1, 2.0, 2.9];
        let v: Vec<C> = ts
            .iter()
            .map(|&t| {
                theta_spherical_with(&rs, &m, &ThetaSet::empty(), &lam, &[t], 60, MethodChoice::Series)
                    .unwrap()
                    .value
            })
            .collect();
        let o: Vec<C> = ts.iter().map(|&t| rankone_phi_ncc(2.0, lam[0], t).unwrap()).collect();
        let k = v[0] / o[0];
        for (a, b) in v.iter().zip(&o) {
            assert!(rel(*a, k * b) < 1e-10);
        }
    }

    #[test]
    fn series_and_closed_forms_agree() {
        let cases: Vec<(RootSystem<f64>, Vec<usize>)> = vec![
            (rsys("A", 1), vec![]),
            (rsys("A", 1), vec![0]),
            (rsys("A", 2), vec![0, 1]),
            (rsys("A", 2), vec![0]),
            (rsys("A", 2), vec![]),
            (rsys("B", 2), vec![1]),
        ];
        for (rs, idx) in cases {
            let th = ThetaSet::from_indices(rs.rank, &idx).unwrap();
            let m = mult(&rs, 2.0);
            let lam: Vec<C> = (0..rs.rank).map(|k| c(0.21 + 0.3 * k as f64, 0.9 - 0.4 * k as f64)).collect();
            let h: Vec<f64> = rs.dominant_rep(&(0..rs.rank).map(|k| 1.3 - 0.4 * k as f64).collect::<Vec<_>>());
            let s = theta_spherical_with(&rs, &m, &th, &lam, &h, 60, MethodChoice::Series).unwrap();
            let cf = theta_spherical_with(&rs, &m, &th, &lam, &h, 60, MethodChoice::ClosedForm).unwrap();
            assert!(
                (s.value - cf.value).norm() <= s.est_error + cf.est_error + 1e-10 * s.value.norm(),
                "{} Θ={idx:?}: {} vs {}",
                rs.family,
                s.value,
                cf.value
            );
        }
    }

    #[test]
    fn ho_matches_complex_case_and_is_w_invariant() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 2.0);
        let lam = vec![c(0.3, 1.2), c(0.1, -0.7)];
        let h = rs.dominant_rep(&[1.1, 0.4]);
        let v = hypergeometric_ho(&rs, &m, &lam, &h, 40).unwrap();
        let o = complex_case_phi(&rs, &lam, &h).unwrap();
        assert!(rel(v.value, o) < 1e-8);
        for w in weyl_group(&rs).unwrap() {
            let u = hypergeometric_ho(&rs, &m, &w.apply_c(&lam), &h, 40).unwrap();
            assert!(rel(u.value, v.value) < 1e-8);
        }
    }

    #[test]
    fn ho_tends_to_one_at_origin() {
        for (rs, m) in [(rsys("A", 1), 2.0), (rsys("A", 1), 1.0), (rsys("A", 2), 2.0)] {
            let mf = mult(&rs, m);
            let lam: Vec<C> = (0..rs.rank).map(|k| c(0.0, 0.8 + 0.5 * k as f64)).collect();
            let dir = rho(&rs, &mf);
            let nrm = dot(&dir, &dir).sqrt();
            let at = |s: f64| {
                let h: Vec<f64> = dir.iter().map(|x| x * s / nrm).collect();
                hypergeometric_ho(&rs, &mf, &lam, &h, 300).unwrap().value
            };
            // φ(s) = 1 + a s² + O(s⁴): Richardson on s and s/2
            let (s1, s2) = (0.2, 0.1);
            let est = (4.0 * at(s2) - at(s1)) / 3.0;
            assert!((est - c(1.0, 0.0)).norm() < 1e-3, "{}: {est}", rs.family);
        }
    }

    #[test]
    fn e_theta_properties() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 2.0);
        let lam = vec![c(0.2, 0.9), c(-0.3, 0.4)];
        let h = rs.dominant_rep(&[0.9, 0.3]);
        let full = ThetaSet::full(2);
        let phi = theta_spherical(&rs, &m, &full, &lam, &h, 40).unwrap().value;
        assert!(rel(e_theta(&rs, &m, &full, &lam, &h).unwrap(), phi) < 1e-14);
        for idx in [vec![], vec![0], vec![1]] {
            let th = ThetaSet::from_indices(2, &idx).unwrap();
            let e = e_theta(&rs, &m, &th, &lam, &h).unwrap();
            assert!((e.norm() - phi.norm()).abs() < 1e-12 * phi.norm());
        }
        let a1 = rsys("A", 1);
        let m1 = mult(&a1, 2.0);
        let l = vec![c(0.37, 0.0)];
        let gen = e_theta_prefactor(&a1, &mult(&a1, 2.0), &ThetaSet::empty(), &l).unwrap();
        assert_eq!(gen, c(-1.0, 0.0));
        // same sign from the c-function quotient itself
        let q = c_theta_minus(&a1, &m1, &ThetaSet::empty(), &l).value
            * c_theta_plus(&a1, &m1, &ThetaSet::empty(), &l).value
            / c_theta_plus(&a1, &m1, &ThetaSet::full(1), &l).value;
        assert!((q - gen).norm() < 1e-14);
    }

    #[test]
    fn odd_m_prefactor_is_quotient() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 1.0);
        let th = ThetaSet::from_indices(2, &[1]).unwrap();
        let lam = vec![c(0.2, 0.9), c(-0.3, 0.4)];
        let p = e_theta_prefactor(&rs, &m, &th, &lam).unwrap();
        assert!(p.norm() > 0.0 && p.norm().is_finite());
    }

    #[test]
    fn regularized_at_former_pole() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::empty();
        let t = [1.2];
        let at = |l: f64, ch| regularized_theta_with(&rs, &m, &th, &[c(l, 0.0)], &t, 60, ch).unwrap().value;
        for ch in [MethodChoice::Series, MethodChoice::Auto] {
            // one-sided limits extrapolated from ε and 2ε
            let e = 1e-4;
            let a = at(e, ch) * 2.0 - at(2.0 * e, ch);
            let b = at(-e, ch) * 2.0 - at(-2.0 * e, ch);
            let z = at(0.0, ch);
            assert!((a - b).norm() <= 1e-4 * z.norm());
            assert!(z.norm().is_finite() && z.norm() > 0.0);
        }
        // Θ = Π: regularization is the identity
        let full = ThetaSet::full(1);
        let lam = [c(0.3, 0.5)];
        let r = regularized_theta(&rs, &m, &full, &lam, &t, 60).unwrap();
        let p = theta_spherical(&rs, &m, &full, &lam, &t, 60).unwrap();
        assert!(rel(r.value, p.value) < 1e-14);
        // general m: n_Θ⁻ regularization
        let m3 = mult(&rs, 3.0);
        let g = |l: f64| regularized_theta(&rs, &m3, &th, &[c(l, 0.0)], &t, 60).unwrap();
        let v = g(0.5);
        assert_eq!(v.regularization, Regularization::NMinus);
        assert!((g(0.5 + 1e-5).value - g(0.5 - 1e-5).value).norm() < 1e-4 * v.value.norm());
    }

    #[test]
    fn regularized_bounded_on_disc() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::empty();
        let t = [0.9];
        let mut mx: f64 = 0.0;
        for k in 0..32 {
            let th_ = 2.0 * std::f64::consts::PI * k as f64 / 32.0;
            let l = c(0.05 * th_.cos(), 0.05 * th_.sin());
            let v = regularized_theta(&rs, &m, &th, &[l], &t, 60).unwrap().value;
            mx = mx.max(v.norm());
        }
        assert!(mx.is_finite() && mx < 10.0);
    }

    #[test]
    fn laplacian_residuals() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let lam = vec![c(0.3, 1.4)];
        let h = [1.1];
        let ho = |x: &[f64]| hypergeometric_ho(&rs, &m, &lam, x, 60).map(|v| v.value);
        assert!(radial_laplacian_residual(&rs, &m, &lam, ho, &h, 1e-3).unwrap() < 1e-4);
        let e = ThetaSet::empty();
        let phi0 = |x: &[f64]| {
            theta_spherical_with(&rs, &m, &e, &lam, x, 60, MethodChoice::Series).map(|v| v.value)
        };
        assert!(radial_laplacian_residual(&rs, &m, &lam, phi0, &h, 1e-3).unwrap() < 1e-4);
        let z = mult(&rs, 0.0);
        let ex = |x: &[f64]| Ok(cdot(&lam, x).exp());
        assert!(radial_laplacian_residual(&rs, &z, &lam, ex, &h, 1e-3).unwrap() < 1e-8);
        assert!(matches!(
            radial_laplacian_residual(&rs, &m, &lam, ex, &[0.002], 1e-3),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn decomposition_identity() {
        for (rs, idx) in [(rsys("A", 1), vec![]), (rsys("A", 2), vec![0]), (rsys("A", 2), vec![])] {
            let m = mult(&rs, 2.0);
            let th = ThetaSet::from_indices(rs.rank, &idx).unwrap();
            let par = parabolic(&rs, &th).unwrap();
            let full = ThetaSet::full(rs.rank);
            let lam: Vec<C> = (0..rs.rank).map(|k| c(0.17 + 0.2 * k as f64, 0.6 + 0.5 * k as f64)).collect();
            let h = rs.dominant_rep(&(0..rs.rank).map(|k| 1.0 - 0.35 * k as f64).collect::<Vec<_>>());
            let lhs = theta_spherical_with(&rs, &m, &full, &lam, &h, 50, MethodChoice::Series).unwrap().value;
            let sign = d_theta_sign(&rs, &m, &th).unwrap();
            let rhs: C = par
                .coset_reps
                .iter()
                .map(|w| {
                    theta_spherical_with(&rs, &m, &th, &w.apply_c(&lam), &h, 50, MethodChoice::Series)
                        .unwrap()
                        .value
                })
                .sum::<C>()
                * sign;
            assert!(rel(rhs, lhs) < 1e-8);
        }
    }

    #[test]
    fn off_chamber_uses_theta_representative() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::from_indices(2, &[0]).unwrap();
        let lam = vec![c(0.3, 0.7), c(0.2, -0.5)];
        let h = rs.dominant_rep(&[1.0, 0.4]);
        let sh = rs.reflect(rs.simple_index(0), &h);
        let a = theta_spherical(&rs, &m, &th, &lam, &h, 40).unwrap().value;
        let b = theta_spherical(&rs, &m, &th, &lam, &sh, 40).unwrap().value;
        assert!(rel(b, a) < 1e-12);
        // outside 𝔞_Θ
        let out = rs.reflect(rs.simple_index(1), &h);
        assert!(theta_spherical(&rs, &m, &th, &lam, &out, 40).is_err());
    }

    #[test]
    fn batch_evaluator_matches_pointwise() {
        for (rs, mm, idx) in [
            (rsys("A", 2), 2.0, vec![0]),
            (rsys("A", 2), 2.0, vec![0, 1]),
            (rsys("A", 1), 2.0, vec![]),
            (rsys("A", 1), 3.0, vec![0]),
            (rsys("B", 2), 1.0, vec![1]),
            (rsys("A", 2), 0.0, vec![]),
        ] {
            let m = mult(&rs, mm);
            let th = ThetaSet::from_indices(rs.rank, &idx).unwrap();
            let lam: Vec<C> = (0..rs.rank).map(|k| c(0.1 + 0.2 * k as f64, 0.7 - 0.3 * k as f64)).collect();
            for choice in [MethodChoice::Auto, MethodChoice::Series] {
                let ev = ThetaEvaluator::new(&rs, &m, &th, 40, choice).unwrap();
                let at = ev.at(&lam).unwrap();
                for k in 0..4 {
                    let h = rs.dominant_rep(&(0..rs.rank).map(|j| 0.6 + 0.3 * k as f64 - 0.2 * j as f64).collect::<Vec<_>>());
                    let a = at.eval(&h).unwrap();
                    let b = theta_spherical_with(&rs, &m, &th, &lam, &h, 40, choice).unwrap();
                    assert_eq!(a.method, b.method);
                    assert!(rel(a.value, b.value) < 1e-12, "{} m={mm} Θ={idx:?}", rs.family);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn w_theta_invariance_in_lambda(a in -1.0f64..1.0, b in -1.0f64..1.0, y in 0.2f64..2.0) {
            let rs = rsys("A", 2);
            let m = mult(&rs, 2.0);
            let th = ThetaSet::from_indices(2, &[1]).unwrap();
            let lam = vec![c(a, y), c(b, -0.5 * y)];
            let s = rs.simple_index(1);
            let al = rs.root(s);
            let k = cdot(&lam, al) * (2.0 / dot(al, al));
            let sl: Vec<C> = lam.iter().zip(al).map(|(x, z)| *x - k * *z).collect();
            let h = rs.dominant_rep(&[1.2, 0.5]);
            let u = theta_spherical(&rs, &m, &th, &lam, &h, 40).unwrap().value;
            let v = theta_spherical(&rs, &m, &th, &sl, &h, 40).unwrap().value;
            prop_assert!(rel(v, u) < 1e-10);
        }
    }
}
