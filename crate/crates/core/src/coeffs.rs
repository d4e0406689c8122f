//! Scalar coefficient functions: ρ, δ, Δ, π, the Harish-Chandra c-function,
//! c_Θ^±, n_Θ⁻, e_Θ^±, d(Θ,m) and the Beta-product c_{Π₀}⁻.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{GammaProduct, GammaValue};
use crate::rootsys::{theta_root_split, RootSystem, ThetaSet};
use crate::scalar::{cdot, Real};

/// W-invariant multiplicity function, stored per W-orbit of roots
/// (orbit 0 = long roots, orbit 1 = short roots).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityFunction<T: Real> {
    values: Vec<T>,
}

impl<T: Real> MultiplicityFunction<T> {
    /// Constant multiplicity `m` on every root.
    pub fn uniform(rs: &RootSystem<T>, m: T) -> Result<Self> {
        Self::new(rs, &[m])
    }

    /// One value per orbit (long first); a single value is broadcast.
    pub fn new(rs: &RootSystem<T>, values: &[T]) -> Result<Self> {
        let n = rs.num_orbits();
        let values = match values.len() {
            1 => vec![values[0]; n],
            k if k == n => values.to_vec(),
            k => {
                return Err(Error::InvalidMultiplicity(format!(
                    "{k} values given, root system has {n} orbit(s)"
                )))
            }
        };
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidMultiplicity(format!("{v} is not a nonnegative real")));
        }
        Ok(MultiplicityFunction { values })
    }

    pub fn zero(rs: &RootSystem<T>) -> Self {
        MultiplicityFunction {
            values: vec![T::zero(); rs.num_orbits()],
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `m_α` of the `i`-th positive root.
    pub fn of(&self, rs: &RootSystem<T>, i: usize) -> T {
        self.values[rs.orbit_of(i)]
    }

    /// True iff every value lies in 2ℕ₀.
    pub fn is_even(&self) -> bool {
        self.values.iter().all(|&v| {
            let h = v / T::lit(2.0);
            (h - h.round()).abs() < T::lit(1e-12)
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    /// True iff every value equals `m`.
    pub fn is_constant(&self, m: T) -> bool {
        self.values.iter().all(|&v| (v - m).abs() < T::lit(1e-12))
    }

    /// `m_α/2` as an integer (even multiplicities only).
    pub fn half_int(&self, rs: &RootSystem<T>, i: usize) -> i64 {
        (self.of(rs, i) / T::lit(2.0)).round().as_f64() as i64
    }

    pub(crate) fn cache_key(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.as_f64().to_bits()).collect()
    }

    fn require_even(&self, what: &'static str) -> Result<()> {
        if self.is_even() {
            Ok(())
        } else {
            Err(Error::NotEven(what))
        }
    }
}

/// Value of a c-type function, with pole bookkeeping.
///
/// At a pole `value` holds the leading Laurent coefficient in the spectral
/// coordinate of the offending factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CFunctionValue<T: Real> {
    pub value: Complex<T>,
    pub is_pole: bool,
    pub pole_order: i32,
}

impl<T: Real> CFunctionValue<T> {
    pub fn regular(value: Complex<T>) -> Self {
        CFunctionValue {
            value,
            is_pole: false,
            pole_order: 0,
        }
    }

    pub fn one() -> Self {
        Self::regular(Complex::new(T::one(), T::zero()))
    }

    /// The value, or a pole error naming `module` and `what`.
    pub fn finite(&self, module: &'static str, what: &'static str) -> Result<Complex<T>> {
        if self.is_pole {
            Err(Error::Pole { module, what })
        } else {
            Ok(self.value)
        }
    }
}

impl<T: Real> From<GammaValue<T>> for CFunctionValue<T> {
    fn from(g: GammaValue<T>) -> Self {
        CFunctionValue {
            value: g.value,
            is_pole: g.pole_order > 0,
            pole_order: g.pole_order,
        }
    }
}

/// `ρ(m) = ½ Σ_{α∈Σ⁺} m_α α` in orthonormal coordinates.
pub fn rho<T: Real>(rs: &RootSystem<T>, m: &MultiplicityFunction<T>) -> Vec<T> {
    let mut r = vec![T::zero(); rs.rank];
    for i in 0..rs.num_positive() {
        let w = m.of(rs, i) / T::lit(2.0);
        for (x, a) in r.iter_mut().zip(rs.root(i)) {
            *x += w * *a;
        }
    }
    r
}

/// `ρ(m)` as a complex spectral parameter.
pub fn rho_c<T: Real>(rs: &RootSystem<T>, m: &MultiplicityFunction<T>) -> Vec<Complex<T>> {
    rho(rs, m).into_iter().map(|x| Complex::new(x, T::zero())).collect()
}

/// `δ(m; exp H) = Π_{α∈Σ⁺} |e^{α(H)} − e^{−α(H)}|^{m_α}`.
pub fn delta_density<T: Real>(rs: &RootSystem<T>, m: &MultiplicityFunction<T>, h: &[T]) -> T {
    let mut d = T::one();
    for i in 0..rs.num_positive() {
        let ma = m.of(rs, i);
        if ma == T::zero() {
            continue;
        }
        let x = rs.alpha_at(i, h);
        d *= (x.exp() - (-x).exp()).abs().powf(ma);
    }
    d
}

/// Weyl denominator `Δ(exp H) = Π_{α∈Σ⁺} (e^{α(H)} − e^{−α(H)})` at complex `H`.
pub fn weyl_denominator<T: Real>(rs: &RootSystem<T>, h: &[Complex<T>]) -> Complex<T> {
    let mut d = Complex::new(T::one(), T::zero());
    for i in 0..rs.num_positive() {
        let x = cdot(h, rs.root(i));
        d *= x.exp() - (-x).exp();
    }
    d
}

/// Weyl denominator at a real point.
pub fn weyl_denominator_re<T: Real>(rs: &RootSystem<T>, h: &[T]) -> T {
    (0..rs.num_positive()).fold(T::one(), |d, i| {
        let x = rs.alpha_at(i, h);
        d * (x.exp() - (-x).exp())
    })
}

/// `π(λ) = Π_{α∈Σ⁺} λ_α`.
pub fn pi_poly<T: Real>(rs: &RootSystem<T>, lam: &[Complex<T>]) -> Complex<T> {
    (0..rs.num_positive()).fold(Complex::new(T::one(), T::zero()), |p, i| {
        p * rs.lambda_alpha_idx(lam, i)
    })
}

fn hc_unnormalized<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    lam: &[Complex<T>],
) -> GammaProduct<T> {
    let half = T::lit(0.5);
    let ln2 = T::LN_2();
    let mut p = GammaProduct::new();
    for i in 0..rs.num_positive() {
        let ma = m.of(rs, i);
        if ma == T::zero() {
            continue;
        }
        let la = rs.lambda_alpha_idx(lam, i);
        p.mul((-la * ln2).exp());
        p.num(la, T::one());
        p.den((la + ma * half + T::one()) * half, half);
        p.den((la + ma * half) * half, half);
    }
    p
}

type NormCache = Mutex<HashMap<(String, usize, Vec<u64>, usize), f64>>;

fn norm_cache() -> &'static NormCache {
    static CACHE: OnceLock<NormCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `ln κ₀`, with κ₀ chosen so that `c(ρ) = 1`; cached per (root system, m).
pub fn hc_log_kappa0<T: Real>(rs: &RootSystem<T>, m: &MultiplicityFunction<T>) -> T {
    let key = (
        rs.family.to_string(),
        rs.rank,
        m.cache_key(),
        std::mem::size_of::<T>(),
    );
    if let Some(&v) = norm_cache().lock().expect("cache lock").get(&key) {
        return T::lit(v);
    }
    let r = rho_c(rs, m);
    let at_rho = hc_unnormalized(rs, m, &r).finish().value;
    let v = -at_rho.re.ln();
    norm_cache()
        .lock()
        .expect("cache lock")
        .insert(key, v.as_f64());
    v
}

/// Harish-Chandra c-function (Gindikin–Karpelevič product), `c(ρ) = 1`.
///
/// Roots with `m_α = 0` contribute the constant 1.
pub fn c_hc<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    let mut p = hc_unnormalized(rs, m, lam);
    p.mul(Complex::new(hc_log_kappa0(rs, m).exp(), T::zero()));
    p.finish().into()
}

fn poly_recip<T: Real>(factors: impl Iterator<Item = Complex<T>>, sign: bool) -> CFunctionValue<T> {
    let tol = T::lit(crate::oracles::POLE_TOL);
    let mut v = Complex::new(if sign { -T::one() } else { T::one() }, T::zero());
    let mut order = 0;
    for f in factors {
        if f.norm() <= tol {
            order += 1;
        } else {
            v = v / f;
        }
    }
    CFunctionValue {
        value: v,
        is_pole: order > 0,
        pole_order: order,
    }
}

/// `c_Θ⁺` in Gamma form: `Π_{⟨Θ⟩⁺} Γ(λ_α)/Γ(λ_α + m_α/2)`.
pub fn c_theta_plus_gamma<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    let (inside, _) = theta_root_split(rs, th);
    let mut p = GammaProduct::new();
    for i in inside {
        let ma = m.of(rs, i);
        if ma == T::zero() {
            continue;
        }
        let la = rs.lambda_alpha_idx(lam, i);
        p.num(la, T::one());
        p.den(la + ma / T::lit(2.0), T::one());
    }
    p.finish().into()
}

/// `c_Θ⁻` in Gamma form: `Π_{Σ⁺∖⟨Θ⟩⁺} Γ(−λ_α − m_α/2 + 1)/Γ(−λ_α + 1)`.
pub fn c_theta_minus_gamma<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    let (_, outside) = theta_root_split(rs, th);
    let mut p = GammaProduct::new();
    for i in outside {
        let ma = m.of(rs, i);
        if ma == T::zero() {
            continue;
        }
        let la = rs.lambda_alpha_idx(lam, i);
        p.num(-la - ma / T::lit(2.0) + T::one(), -T::one());
        p.den(-la + T::one(), -T::one());
    }
    p.finish().into()
}

/// `c_Θ⁺` for even `m`: `Π_{⟨Θ⟩⁺} Π_{h=0}^{m_α/2−1} (λ_α + h)⁻¹`.
pub fn c_theta_plus_even<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<CFunctionValue<T>> {
    m.require_even("finite-product c_Θ⁺")?;
    let (inside, _) = theta_root_split(rs, th);
    let factors = inside.into_iter().flat_map(|i| {
        let la = rs.lambda_alpha_idx(lam, i);
        (0..m.half_int(rs, i)).map(move |h| la + T::from_i(h))
    });
    Ok(poly_recip(factors, false))
}

/// `c_Θ⁻` for even `m`: `(−1)^{d(Θ,m)} Π_{Σ⁺∖⟨Θ⟩⁺} Π_{h=0}^{m_α/2−1} (λ_α + h)⁻¹`.
pub fn c_theta_minus_even<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<CFunctionValue<T>> {
    m.require_even("finite-product c_Θ⁻")?;
    let (_, outside) = theta_root_split(rs, th);
    let d: i64 = outside.iter().map(|&i| m.half_int(rs, i)).sum();
    let factors = outside.into_iter().flat_map(|i| {
        let la = rs.lambda_alpha_idx(lam, i);
        (0..m.half_int(rs, i)).map(move |h| la + T::from_i(h))
    });
    Ok(poly_recip(factors, d % 2 != 0))
}

/// `c_Θ⁺(m;λ)`; uses the finite-product form when `m` is even.
pub fn c_theta_plus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    c_theta_plus_even(rs, m, th, lam).unwrap_or_else(|_| c_theta_plus_gamma(rs, m, th, lam))
}

/// `c_Θ⁻(m;λ)`; uses the finite-product form when `m` is even.
pub fn c_theta_minus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    c_theta_minus_even(rs, m, th, lam).unwrap_or_else(|_| c_theta_minus_gamma(rs, m, th, lam))
}

/// `c_Θ := c_Θ⁺ c_Θ⁻`.
pub fn c_theta<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    let p = c_theta_plus(rs, m, th, lam);
    let q = c_theta_minus(rs, m, th, lam);
    let order = p.pole_order + q.pole_order;
    CFunctionValue {
        value: p.value * q.value,
        is_pole: order > 0,
        pole_order: order,
    }
}

/// `n_Θ⁻(m;λ) = Π_{Σ⁺∖⟨Θ⟩⁺} Γ(−λ_α − m_α/2 + 1)`.
pub fn n_theta_minus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    let (_, outside) = theta_root_split(rs, th);
    let mut p = GammaProduct::new();
    for i in outside {
        let la = rs.lambda_alpha_idx(lam, i);
        p.num(-la - m.of(rs, i) / T::lit(2.0) + T::one(), -T::one());
    }
    p.finish().into()
}

fn e_factor<T: Real>(la: Complex<T>, half: i64) -> Complex<T> {
    ((-half + 1)..=(half - 1)).fold(Complex::new(T::one(), T::zero()), |p, k| {
        p * (la - T::from_i(k))
    })
}

/// `e_Θ⁻(m;λ) = Π_{Σ⁺∖⟨Θ⟩⁺} Π_{k=−m_α/2+1}^{m_α/2−1} (λ_α − k)` (even `m`).
pub fn e_theta_minus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<Complex<T>> {
    m.require_even("e_Θ⁻")?;
    let (_, outside) = theta_root_split(rs, th);
    Ok(outside.into_iter().fold(Complex::new(T::one(), T::zero()), |p, i| {
        p * e_factor(rs.lambda_alpha_idx(lam, i), m.half_int(rs, i))
    }))
}

/// `e_Θ⁺(m;λ) = (−1)^{Σ_{⟨Θ⟩⁺} m_α/2} Π_{⟨Θ⟩⁺} Π_{k=−m_α/2+1}^{m_α/2−1} (λ_α − k)`
/// (even `m`), so that `π(λ) e_Θ⁺ e_Θ⁻ [Π_{Σ⁺}Π_{k=0}^{m_α/2−1}(k² − λ_α²)]⁻¹ = (−1)^{d(Θ,m)}`.
pub fn e_theta_plus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<Complex<T>> {
    m.require_even("e_Θ⁺")?;
    let (inside, _) = theta_root_split(rs, th);
    let s: i64 = inside.iter().map(|&i| m.half_int(rs, i)).sum();
    let p = inside.into_iter().fold(Complex::new(T::one(), T::zero()), |p, i| {
        p * e_factor(rs.lambda_alpha_idx(lam, i), m.half_int(rs, i))
    });
    Ok(if s % 2 == 0 { p } else { -p })
}

/// `d(Θ,m) = ½ Σ_{Σ⁺∖⟨Θ⟩⁺} m_α`.
pub fn d_theta<T: Real>(rs: &RootSystem<T>, m: &MultiplicityFunction<T>, th: &ThetaSet) -> T {
    let (_, outside) = theta_root_split(rs, th);
    outside
        .into_iter()
        .fold(T::zero(), |s, i| s + m.of(rs, i) / T::lit(2.0))
}

/// `(−1)^{d(Θ,m)}` for even `m`.
pub fn d_theta_sign<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
) -> Result<T> {
    m.require_even("(−1)^d(Θ,m)")?;
    let d = d_theta(rs, m, th).round().as_f64() as i64;
    Ok(if d % 2 == 0 { T::one() } else { -T::one() })
}

/// `c_{Π₀}⁻(λ) = Π_{Σ⁺∖⟨Θ⟩⁺} B(m_α/2, −λ_α − m_α/2 + 1)` (constant κ = 1;
/// roots with `m_α = 0` are omitted).
pub fn c_pi0_minus<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> CFunctionValue<T> {
    let (_, outside) = theta_root_split(rs, th);
    let mut p = GammaProduct::new();
    for i in outside {
        let ma = m.of(rs, i);
        if ma == T::zero() {
            continue;
        }
        let h = ma / T::lit(2.0);
        let la = rs.lambda_alpha_idx(lam, i);
        p.num(Complex::new(h, T::zero()), T::one());
        p.num(-la - h + T::one(), -T::one());
        p.den(-la + T::one(), -T::one());
    }
    p.finish().into()
}

/// `|c_Θ⁺(m;λ) c_Θ⁻(m;λ)|⁻²`, with the convention `c ≡ 1` at `m = 0`.
pub fn plancherel_weight<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<T> {
    if m.is_zero() {
        return Ok(T::one());
    }
    let c = c_theta(rs, m, th, lam);
    if c.is_pole {
        return Err(Error::Pole {
            module: "coeffs",
            what: "c_Θ on the spectral grid",
        });
    }
    let n = c.value.norm_sqr();
    if n == T::zero() {
        return Err(Error::Singular {
            module: "coeffs",
            detail: "c_Θ vanishes at a spectral node".into(),
        });
    }
    Ok(T::one() / n)
}
