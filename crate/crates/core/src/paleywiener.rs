//! Paley–Wiener diagnostics for spectral functions: support functions of
//! convex bodies, exponential-type and decay estimates along rays, the
//! average `P^av` over `W_Θ\W`, and a removability test on the singular
//! hyperplanes of `e_Θ⁻`.
//!
//! Every verdict here is a finite-sample heuristic; reports carry the raw
//! samples and margins.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{e_theta_minus, MultiplicityFunction};
use crate::error::{Error, Result};
use crate::rootsys::{parabolic, parabolic_subgroup, theta_root_split, RootSystem, ThetaSet, WeylElement};
use crate::scalar::{dot, Real};

/// Approach distances to a hyperplane.
pub const LADDER: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
pub const PAV_TOL: f64 = 1e-6;
pub const TYPE_TOL: f64 = 0.1;
pub const MAX_DECAY_ORDER: u32 = 6;

fn pwerr(msg: impl Into<String>) -> Error {
    Error::PaleyWiener(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConvexBody<T: Real> {
    Ball { radius: T },
    Hull { points: Vec<Vec<T>> },
}

impl<T: Real> ConvexBody<T> {
    pub fn ball(radius: T) -> Result<Self> {
        if !(radius >= T::zero()) || !radius.is_finite() {
            return Err(pwerr("ball radius must be finite and nonnegative"));
        }
        Ok(Self::Ball { radius })
    }

    pub fn hull(points: Vec<Vec<T>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(pwerr("hull of an empty point set"));
        };
        let r = first.len();
        if points.iter().any(|p| p.len() != r || p.iter().any(|x| !x.is_finite())) {
            return Err(pwerr("hull points must be finite and of equal dimension"));
        }
        Ok(Self::Hull { points })
    }

    /// Convex hull of the `W_Θ`-orbit of `h`.
    pub fn orbit_hull(rs: &RootSystem<T>, th: &ThetaSet, h: &[T]) -> Result<Self> {
        rs.check_dim("paleywiener", h.len())?;
        let pts = parabolic_subgroup(rs, th)?.iter().map(|w| w.apply(h)).collect();
        Self::hull(pts)
    }

    /// Whether the generating set is `W_Θ`-stable (balls always are).
    pub fn is_stable(&self, rs: &RootSystem<T>, th: &ThetaSet) -> Result<bool> {
        let Self::Hull { points } = self else {
            return Ok(true);
        };
        let close = |a: &[T], b: &[T]| a.iter().zip(b).all(|(x, y)| (*x - *y).abs() <= T::lit(1e-10));
        for w in parabolic_subgroup(rs, th)? {
            for p in points {
                let q = w.apply(p);
                if !points.iter().any(|x| close(x, &q)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `q_C(ξ) = sup_{H∈C} ξ(H)`.
    pub fn support_function(&self, xi: &[T]) -> T {
        match self {
            Self::Ball { radius } => *radius * dot(xi, xi).sqrt(),
            Self::Hull { points } => points
                .iter()
                .map(|p| dot(p, xi))
                .fold(T::neg_infinity(), |a, b| a.max(b)),
        }
    }
}

pub fn support_function<T: Real>(c: &ConvexBody<T>, xi: &[T]) -> T {
    c.support_function(xi)
}

// least squares by Householder QR
fn lstsq<T: Real>(rows: &[Vec<T>], rhs: &[T]) -> Option<Vec<T>> {
    let p = rows.first()?.len();
    let n = rows.len();
    if n < p {
        return None;
    }
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let mut y = rhs.to_vec();
    for c in 0..p {
        let norm = (c..n).fold(T::zero(), |s, r| s + a[r][c] * a[r][c]).sqrt();
        if norm <= T::min_positive_value() {
            return None;
        }
        let alpha = if a[c][c] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (c..n).map(|r| a[r][c]).collect();
        v[0] -= alpha;
        let vn = v.iter().fold(T::zero(), |s, x| s + *x * *x);
        if vn > T::zero() {
            for k in c..p {
                let d = (c..n).fold(T::zero(), |s, r| s + v[r - c] * a[r][k]) * T::lit(2.0) / vn;
                for r in c..n {
                    a[r][k] -= d * v[r - c];
                }
            }
            let d = (c..n).fold(T::zero(), |s, r| s + v[r - c] * y[r]) * T::lit(2.0) / vn;
            for r in c..n {
                y[r] -= d * v[r - c];
            }
        }
    }
    let mut x = vec![T::zero(); p];
    for i in (0..p).rev() {
        let s = (i + 1..p).fold(y[i], |s, k| s - a[i][k] * x[k]);
        if a[i][i].abs() <= T::min_positive_value() {
            return None;
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

fn scale_rows<T: Real>(rows: &mut [Vec<T>]) -> Vec<T> {
    let p = rows[0].len();
    let norms: Vec<T> = (0..p)
        .map(|j| rows.iter().fold(T::zero(), |a, r| a + r[j] * r[j]).sqrt().max(T::min_positive_value()))
        .collect();
    for r in rows.iter_mut() {
        for j in 0..p {
            r[j] /= norms[j];
        }
    }
    norms
}

fn fit<T: Real>(mut rows: Vec<Vec<T>>, rhs: &[T]) -> Option<Vec<T>> {
    let norms = scale_rows(&mut rows);
    lstsq(&rows, rhs).map(|c| c.iter().zip(&norms).map(|(x, n)| *x / *n).collect())
}

fn unit<T: Real>(v: &[T]) -> Result<Vec<T>> {
    let n = dot(v, v).sqrt();
    if !(n > T::zero()) {
        return Err(pwerr("zero direction"));
    }
    Ok(v.iter().map(|x| *x / n).collect())
}

/// Fit of `ln|g(sσ)| ≈ q s + β√s + γ ln s + c` along one real ray.
#[derive(Debug, Clone, Serialize)]
pub struct TypeEstimate<T: Real> {
    /// Unit direction σ.
    pub direction: Vec<T>,
    /// Fitted exponential type `q`.
    pub slope: T,
    pub sqrt_coeff: T,
    pub log_coeff: T,
    pub constant: T,
    /// `(s, ln|g(sσ)|)`.
    pub samples: Vec<(T, T)>,
}

/// Exponential type of `g` along the real rays `λ = sσ`, evaluated in the log
/// domain. Needs at least four positive radii.
pub fn exponential_type_estimate<T: Real>(
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    directions: &[Vec<T>],
    radii: &[T],
) -> Result<Vec<TypeEstimate<T>>> {
    if radii.len() < 4 || radii.iter().any(|s| !(*s > T::zero())) {
        return Err(pwerr("exponential-type fit needs at least four positive radii"));
    }
    directions
        .iter()
        .map(|d| {
            let sigma = unit(d)?;
            let samples = radii
                .par_iter()
                .map(|&s| {
                    let lam: Vec<Complex<T>> = sigma.iter().map(|x| Complex::new(*x * s, T::zero())).collect();
                    let v = g(&lam)?;
                    let l = v.norm().ln();
                    if !l.is_finite() {
                        return Err(pwerr(format!("ln|g| not finite at radius {}", s.as_f64())));
                    }
                    Ok((s, l))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = samples
                .iter()
                .map(|(s, _)| vec![*s, s.sqrt(), s.ln(), T::one()])
                .collect();
            let rhs: Vec<T> = samples.iter().map(|x| x.1).collect();
            let c = fit(rows, &rhs).ok_or_else(|| pwerr("singular exponential-type fit"))?;
            Ok(TypeEstimate {
                direction: sigma,
                slope: c[0],
                sqrt_coeff: c[1],
                log_coeff: c[2],
                constant: c[3],
                samples,
            })
        })
        .collect()
}

/// Decay along the imaginary ray `λ = isσ`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayScore<T: Real> {
    pub direction: Vec<T>,
    /// Log-log slope of the tail envelope of `|g|`, i.e. the largest `N`
    /// with `|g| ≲ (1+|λ|)^{−N}` on the sampled tail.
    pub fitted_order: T,
    /// `(s, |g(isσ)|)`.
    pub samples: Vec<(T, T)>,
}

/// Polynomial decay order of `g` along imaginary rays, from the running
/// maximum envelope over the outer half of the radii.
pub fn decay_orders<T: Real>(
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    directions: &[Vec<T>],
    radii: &[T],
) -> Result<Vec<DecayScore<T>>> {
    if radii.len() < 4 {
        return Err(pwerr("decay fit needs at least four radii"));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    directions
        .iter()
        .map(|d| {
            let sigma = unit(d)?;
            let samples = radii
                .par_iter()
                .map(|&s| {
                    let lam: Vec<Complex<T>> = sigma.iter().map(|x| Complex::new(T::zero(), *x * s)).collect();
                    Ok((s, g(&lam)?.norm()))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut env = vec![T::zero(); samples.len()];
            let mut run = T::zero();
            for k in (0..samples.len()).rev() {
                run = run.max(samples[k].1);
                env[k] = run;
            }
            let start = samples.len() / 2;
            let tail: Vec<(T, T)> = (start..samples.len())
                .filter(|&k| env[k] > T::zero())
                .map(|k| ((T::one() + samples[k].0).ln(), env[k].ln()))
                .collect();
            let fitted_order = if tail.len() < 2 {
                // identically zero tail
                T::infinity()
            } else {
                let rows = tail.iter().map(|(x, _)| vec![*x, T::one()]).collect();
                let rhs: Vec<T> = tail.iter().map(|t| t.1).collect();
                -fit(rows, &rhs).ok_or_else(|| pwerr("singular decay fit"))?[0]
            };
            Ok(DecayScore {
                direction: sigma,
                fitted_order,
                samples,
            })
        })
        .collect()
}

/// `Σ_{w} g(wλ)` over the given coset representatives.
pub fn p_average_with<T: Real>(
    reps: &[WeylElement<T>],
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>>,
    lam: &[Complex<T>],
) -> Result<Complex<T>> {
    reps.iter()
        .try_fold(Complex::new(T::zero(), T::zero()), |a, w| Ok(a + g(&w.apply_c(lam))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PAverage<T: Real> {
    pub value: Complex<T>,
    /// Set when `g` had a pole at a node and λ was nudged off it.
    pub perturbed: bool,
}

/// `P^av g(λ) = Σ_{w∈W_Θ\W} g(wλ)` with minimal-length coset representatives.
pub fn p_average<T: Real>(
    rs: &RootSystem<T>,
    th: &ThetaSet,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>>,
    lam: &[Complex<T>],
) -> Result<PAverage<T>> {
    rs.check_dim("paleywiener", lam.len())?;
    let reps = parabolic(rs, th)?.coset_reps;
    match p_average_with(&reps, &g, lam) {
        Err(Error::Pole { .. }) => {
            let nudged: Vec<Complex<T>> = lam
                .iter()
                .enumerate()
                .map(|(k, x)| *x + Complex::new(T::lit(1e-7 * (1.0 + 0.31 * k as f64)), T::zero()))
                .collect();
            Ok(PAverage {
                value: p_average_with(&reps, &g, &nudged)?,
                perturbed: true,
            })
        }
        r => Ok(PAverage {
            value: r?,
            perturbed: false,
        }),
    }
}

/// Hyperplanes `λ_α = k` (α ∈ Σ⁺∖⟨Θ⟩⁺, `|k| ≤ m_α/2 − 1`) where `e_Θ⁻` vanishes.
pub fn singular_hyperplanes<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
) -> Result<Vec<(usize, i64)>> {
    if !m.is_even() {
        return Err(pwerr("singular hyperplanes need an even multiplicity"));
    }
    th.check(rs.rank)?;
    let (_, outside) = theta_root_split(rs, th);
    Ok(outside
        .into_iter()
        .flat_map(|i| {
            let h = m.half_int(rs, i);
            ((-h + 1)..=(h - 1)).map(move |k| (i, k))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperplaneResidual<T: Real> {
    /// Positive-root index and level of the hyperplane `λ_α = k`.
    pub root: usize,
    pub level: i64,
    /// Foot point on the hyperplane.
    pub base: Vec<Complex<T>>,
    /// `|L₊ − L₋|/scale` for the one-sided Richardson limits.
    pub mismatch: T,
    /// Fitted `1/distance` coefficient relative to the value at distance 10⁻¹.
    pub growth: T,
    pub residual: T,
    /// `(signed distance, P^av g)`.
    pub samples: Vec<(T, Complex<T>)>,
}

/// Approaches every singular hyperplane of `e_Θ⁻` from both sides at each
/// base point and measures how far `P^av g` is from being regular there.
pub fn pav_entirety_test<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    base_points: &[Vec<Complex<T>>],
) -> Result<Vec<HyperplaneResidual<T>>> {
    let planes = singular_hyperplanes(rs, m, th)?;
    let reps = parabolic(rs, th)?.coset_reps;
    let jobs: Vec<(usize, i64, &Vec<Complex<T>>)> = planes
        .iter()
        .flat_map(|&(i, k)| base_points.iter().map(move |b| (i, k, b)))
        .collect();
    jobs.par_iter()
        .map(|&(i, k, b)| {
            rs.check_dim("paleywiener", b.len())?;
            let nu = rs.root(i).to_vec();
            let off = rs.lambda_alpha_idx(b, i) - T::from_i(k);
            let base: Vec<Complex<T>> = b.iter().zip(&nu).map(|(x, a)| *x - off * *a).collect();
            let at = |e: T| {
                let l: Vec<Complex<T>> = base.iter().zip(&nu).map(|(x, a)| *x + *a * e).collect();
                p_average_with(&reps, &g, &l)
            };
            let mut samples = Vec::with_capacity(2 * LADDER.len());
            for sign in [1.0, -1.0] {
                for e in LADDER {
                    let d = T::lit(sign * e);
                    samples.push((d, at(d)?));
                }
            }
            let n = LADDER.len();
            let rich = |s: &[(T, Complex<T>)]| (s[n - 1].1 * T::lit(10.0) - s[n - 2].1) / T::lit(9.0);
            let (lp, lm) = (rich(&samples[..n]), rich(&samples[n..]));
            let scale = samples[0].1.norm().max(samples[n].1.norm()).max(T::min_positive_value());
            let mismatch = (lp - lm).norm() / scale;
            let rows: Vec<Vec<T>> = samples
                .iter()
                .map(|(d, _)| vec![T::one(), *d, *d * *d, *d * *d * *d, T::one() / *d])
                .collect();
            let re: Vec<T> = samples.iter().map(|s| s.1.re).collect();
            let im: Vec<T> = samples.iter().map(|s| s.1.im).collect();
            let cr = fit(rows.clone(), &re).ok_or_else(|| pwerr("singular removability fit"))?;
            let ci = fit(rows, &im).ok_or_else(|| pwerr("singular removability fit"))?;
            let growth = Complex::new(cr[4], ci[4]).norm() / (scale * T::lit(LADDER[0]));
            Ok(HyperplaneResidual {
                root: i,
                level: k,
                base,
                mismatch,
                growth,
                residual: mismatch + growth,
                samples,
            })
        })
        .collect()
}

/// Sampling plan for [`pw_check`].
#[derive(Debug, Clone, Serialize)]
pub struct PWConfig<T: Real> {
    pub directions: Vec<Vec<T>>,
    pub type_radii: Vec<T>,
    pub decay_radii: Vec<T>,
    pub base_points: Vec<Vec<Complex<T>>>,
    pub type_tol: T,
    pub pav_tol: T,
    pub max_order: u32,
}

impl<T: Real> PWConfig<T> {
    /// Simple roots plus a generic direction; non-integer radii in 4..41 for the type fit,
    /// 2..60 for decay; three generic base points.
    pub fn standard(rs: &RootSystem<T>) -> Self {
        let r = rs.rank;
        let mut directions: Vec<Vec<T>> = (0..r).map(|j| rs.simple_root(j).to_vec()).collect();
        if r > 1 {
            directions.push((0..r).map(|k| T::lit(1.0 + 0.43 * k as f64)).collect());
        }
        let type_radii = (0..19).map(|k| T::lit(10.3 + 5.03 * k as f64)).collect();
        let decay_radii = (0..30).map(|k| T::lit(2.0 + 2.0 * k as f64)).collect();
        let base_points = (0..3)
            .map(|p| {
                (0..r)
                    .map(|k| Complex::new(T::lit(0.13 + 0.21 * p as f64), T::lit(0.37 + 0.29 * k as f64 + 0.5 * p as f64)))
                    .collect()
            })
            .collect();
        Self {
            directions,
            type_radii,
            decay_radii,
            base_points,
            type_tol: T::lit(TYPE_TOL),
            pav_tol: T::lit(PAV_TOL),
            max_order: MAX_DECAY_ORDER,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict<T: Real> {
    pub pass: bool,
    /// Worst `|q − q_C(σ)|/q_C(σ)` over directions.
    pub type_rel_error: T,
    pub min_decay_order: T,
    pub max_pav_residual: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct PWReport<T: Real> {
    pub exp_type_estimates: Vec<TypeEstimate<T>>,
    /// `q_C(σ)` for each direction.
    pub expected_types: Vec<T>,
    pub decay_orders: Vec<DecayScore<T>>,
    pub pav_residuals: Vec<HyperplaneResidual<T>>,
    pub verdict: Verdict<T>,
    /// Always true: finitely many rays and orders cannot certify membership.
    pub heuristic: bool,
}

impl<T: Real> PWReport<T> {
    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).map_err(|e| pwerr(format!("json: {e}")))
    }
}

/// Runs all three diagnostics on `g` against the body `C`. For even `m` the
/// type and decay fits use `e_Θ⁻ g`; the removability test uses `g` itself.
pub fn pw_check<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    body: &ConvexBody<T>,
    cfg: &PWConfig<T>,
) -> Result<PWReport<T>> {
    th.check(rs.rank)?;
    let even = m.is_even();
    let eg = |l: &[Complex<T>]| -> Result<Complex<T>> {
        let v = g(l)?;
        if even && !m.is_zero() {
            Ok(v * e_theta_minus(rs, m, th, l)?)
        } else {
            Ok(v)
        }
    };
    let types = exponential_type_estimate(eg, &cfg.directions, &cfg.type_radii)?;
    let expected: Vec<T> = types.iter().map(|t| body.support_function(&t.direction)).collect();
    let type_rel_error = types
        .iter()
        .zip(&expected)
        .map(|(t, q)| (t.slope - *q).abs() / q.max(T::lit(1e-300)))
        .fold(T::zero(), |a, b| a.max(b));
    let decay = decay_orders(eg, &cfg.directions, &cfg.decay_radii)?;
    let min_decay_order = decay.iter().fold(T::infinity(), |a, d| a.min(d.fitted_order));
    let pav = if even && !m.is_zero() {
        pav_entirety_test(rs, m, th, &g, &cfg.base_points)?
    } else {
        Vec::new()
    };
    let max_pav_residual = pav.iter().fold(T::zero(), |a, r| a.max(r.residual));
    let pass = type_rel_error <= cfg.type_tol
        && min_decay_order >= T::from_i(cfg.max_order as i64)
        && max_pav_residual <= cfg.pav_tol;
    Ok(PWReport {
        exp_type_estimates: types,
        expected_types: expected,
        decay_orders: decay,
        pav_residuals: pav,
        verdict: Verdict {
            pass,
            type_rel_error,
            min_decay_order,
            max_pav_residual,
        },
        heuristic: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::d_theta_sign;
    use crate::rootsys::{build_root_system, weyl_group};
    use crate::transform::{CompactFunction, RadialGrid, Transformer};
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn rsys(f: &str, r: usize) -> RootSystem<f64> {
        build_root_system(f, r).unwrap()
    }

    fn mult(rs: &RootSystem<f64>, m: f64) -> MultiplicityFunction<f64> {
        MultiplicityFunction::uniform(rs, m).unwrap()
    }

    #[test]
    fn support_function_examples() {
        let b = ConvexBody::ball(2.5).unwrap();
        assert_eq!(b.support_function(&[0.6, 0.8]), 2.5);
        let h = ConvexBody::hull(vec![vec![1.0, 2.0], vec![-1.0, -2.0]]).unwrap();
        assert_eq!(h.support_function(&[0.3, -0.7]), (0.3f64 - 1.4).abs());
        assert!(ConvexBody::<f64>::hull(vec![]).is_err());
        assert!(ConvexBody::ball(-1.0).is_err());
        let rs = rsys("A", 2);
        let th = ThetaSet::from_indices(2, &[0]).unwrap();
        let o = ConvexBody::orbit_hull(&rs, &th, &[0.7, 0.2]).unwrap();
        assert!(o.is_stable(&rs, &th).unwrap());
        assert!(!o.is_stable(&rs, &ThetaSet::full(2)).unwrap());
    }

    proptest! {
        #[test]
        fn support_function_sublinear(a in prop::array::uniform2(-3.0..3.0f64),
                                      b in prop::array::uniform2(-3.0..3.0f64),
                                      t in 0.1..10.0f64) {
            let rs = rsys("A", 2);
            let c = ConvexBody::orbit_hull(&rs, &ThetaSet::full(2), &[0.9, 0.4]).unwrap();
            let s: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert!(c.support_function(&s) <= c.support_function(&a) + c.support_function(&b) + 1e-12);
            let ta: Vec<f64> = a.iter().map(|x| t * x).collect();
            prop_assert!((c.support_function(&ta) - t * c.support_function(&a)).abs() <= 1e-12 * (1.0 + t));
            let ball = ConvexBody::ball(1.7).unwrap();
            prop_assert!((ball.support_function(&ta) - t * ball.support_function(&a)).abs() <= 1e-12 * (1.0 + t));
        }
    }

    #[test]
    fn polynomial_has_type_zero() {
        let radii: Vec<f64> = (1..20).map(|k| 10.0 * k as f64).collect();
        let est = exponential_type_estimate(|l: &[C]| Ok(l[0] * l[0] * 3.0 + 1.0), &[vec![1.0]], &radii).unwrap();
        assert!(est[0].slope.abs() <= 1e-3);
    }

    #[test]
    fn euclidean_bump_type() {
        // m = 0: F(λ) = ∫ f(x) e^{λx} dx for a bump on [−R, R]
        let rs = rsys("A", 1);
        let m = mult(&rs, 0.0);
        let th = ThetaSet::full(1);
        let f = CompactFunction::bump(vec![0.0], 1.3, 1.0);
        let grid = RadialGrid::for_function(&rs, &f, 400).unwrap();
        let tr = Transformer::new(&rs, &m, &th, &f, &grid).unwrap();
        let radii: Vec<f64> = (0..19).map(|k| 4.0 + 2.0 * k as f64).collect();
        let est = exponential_type_estimate(|l| tr.eval(l), &[vec![1.0]], &radii).unwrap();
        assert!((est[0].slope - 1.3).abs() <= 0.13, "{}", est[0].slope);
    }

    #[test]
    fn p_average_examples() {
        let rs = rsys("A", 2);
        let g = |l: &[C]| Ok(l[0] * 2.0 + l[1] * l[1]);
        let lam = [C::new(0.3, 0.1), C::new(-0.2, 0.7)];
        let id = p_average(&rs, &ThetaSet::full(2), g, &lam).unwrap();
        assert_eq!(id.value, g(&lam).unwrap());
        let all = p_average(&rs, &ThetaSet::empty(), g, &lam).unwrap();
        let want: C = weyl_group(&rs).unwrap().iter().map(|w| g(&w.apply_c(&lam)).unwrap()).sum();
        assert!((all.value - want).norm() < 1e-13);
        let pole = |l: &[C]| {
            if l[0].norm() < 1e-12 {
                Err(Error::Pole { module: "test", what: "g" })
            } else {
                Ok(C::new(1.0, 0.0))
            }
        };
        let r = p_average(&rsys("A", 1), &ThetaSet::empty(), pole, &[C::new(0.0, 0.0)]).unwrap();
        assert!(r.perturbed);
    }

    #[test]
    fn p_average_representative_independence() {
        let rs = rsys("A", 2);
        let th = ThetaSet::from_indices(2, &[1]).unwrap();
        let par = parabolic(&rs, &th).unwrap();
        // W_Θ-invariant g
        let s = rs.simple_root(1).to_vec();
        let g = move |l: &[C]| {
            let a = crate::scalar::cdot(l, &s);
            Ok((a * a).exp() * (l[0] + l[1] * 0.5).cos() + 0.0 * a)
        };
        let inv = |l: &[C]| {
            let u = par.subgroup[1].apply_c(l);
            Ok((g(l)? + g(&u)?) * 0.5)
        };
        let lam = [C::new(0.4, 0.9), C::new(-0.3, 0.2)];
        let a = p_average_with(&par.coset_reps, inv, &lam).unwrap();
        let alt: Vec<_> = par
            .coset_reps
            .iter()
            .map(|w| {
                let mut e = w.clone();
                let u = &par.subgroup[1];
                let r = rs.rank;
                e.ortho = (0..r * r)
                    .map(|ij| (0..r).map(|k| u.ortho[(ij / r) * r + k] * w.ortho[k * r + ij % r]).sum())
                    .collect();
                e
            })
            .collect();
        let b = p_average_with(&alt, inv, &lam).unwrap();
        assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn entire_function_passes_removability() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 4.0);
        let th = ThetaSet::full(2);
        assert!(singular_hyperplanes(&rs, &m, &th).unwrap().is_empty());
        let th = ThetaSet::from_indices(2, &[0]).unwrap();
        let g = |l: &[C]| Ok((l[0] * 0.7).exp() * (l[1] + 2.0));
        let base = PWConfig::standard(&rs).base_points;
        let res = pav_entirety_test(&rs, &m, &th, g, &base).unwrap();
        assert_eq!(res.len(), 2 * 3 * base.len());
        assert!(res.iter().all(|r| r.residual < 1e-9), "{:?}", res.iter().map(|r| r.residual).collect::<Vec<_>>());
    }

    #[test]
    fn adversarial_pole_fails() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::from_indices(2, &[0]).unwrap();
        let i = rs.simple_index(1);
        let g = |l: &[C]| Ok(C::new(1.0, 0.0) / rs.lambda_alpha_idx(l, i));
        let res = pav_entirety_test(&rs, &m, &th, g, &PWConfig::standard(&rs).base_points).unwrap();
        let worst = res.iter().fold(0.0f64, |a, r| a.max(r.residual));
        assert!(worst >= 1e2 * PAV_TOL, "{worst}");
    }

    #[test]
    fn rank_one_transform_report() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let cfg = PWConfig::standard(&rs);
        for (th, c) in [(ThetaSet::full(1), 0.0), (ThetaSet::empty(), 1.5)] {
            let f = CompactFunction::symmetrized_bump(&rs, &th, &[c], 1.0, 4.0).unwrap();
            let grid = RadialGrid::for_function(&rs, &f, 300).unwrap();
            let tr = Transformer::new(&rs, &m, &th, &f, &grid).unwrap();
            let body = ConvexBody::orbit_hull(&rs, &ThetaSet::full(1), &[c + 1.0]).unwrap();
            let rep = pw_check(&rs, &m, &th, |l| tr.eval(l), &body, &cfg).unwrap();
            assert!(rep.verdict.pass, "{:?}", rep.verdict);
            assert!(rep.heuristic);
            assert!(rep.to_json().unwrap().contains("pav_residuals"));
        }
    }

    #[test]
    fn pav_of_theta_transform_is_full_transform() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::from_indices(2, &[0]).unwrap();
        let full = ThetaSet::full(2);
        let f = CompactFunction::symmetrized_bump(&rs, &full, &[0.9, 0.5], 0.4, 1.0).unwrap();
        let grid = RadialGrid::for_function(&rs, &f, 40).unwrap();
        let t_th = Transformer::new(&rs, &m, &th, &f, &grid).unwrap();
        let t_pi = Transformer::new(&rs, &m, &full, &f, &grid).unwrap();
        let sign = d_theta_sign(&rs, &m, &th).unwrap();
        for lam in [[C::new(0.2, 1.1), C::new(-0.4, 0.3)], [C::new(0.0, 2.0), C::new(0.0, -0.7)]] {
            let p = p_average(&rs, &th, |l| t_th.eval(l), &lam).unwrap().value * sign;
            let q = t_pi.eval(&lam).unwrap();
            assert!((p - q).norm() <= 1e-8 * q.norm(), "{p} {q}");
        }
    }
}
