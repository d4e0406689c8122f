//! Θ-spherical transform, its inversion, Plancherel density, wave packets
//! and the calibration of the inversion constant κ.

use std::fmt;
use std::io::Read;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{c_hc, c_theta, c_theta_plus, delta_density, MultiplicityFunction};
use crate::error::{Error, Result};
use crate::rootsys::{a_theta_contains, parabolic_subgroup, weyl_group, RootSystem, ThetaSet};
use crate::scalar::{dot, pairwise_sum, Real};
use crate::thetasph::{
    e_theta_prefactor, hypergeometric_ho, MethodChoice, ThetaEvaluator, DEFAULT_ORDER,
};

/// Spectral integrand tolerance relative to its peak used to pick the cutoff.
pub const SPECTRAL_CUTOFF_TOL: f64 = 1e-8;

/// Upper bound on radial nodes used by adaptive grid refinement.
pub const MAX_RADIAL_NODES: usize = 250_000;

fn terr(msg: impl Into<String>) -> Error {
    Error::Transform(msg.into())
}

// inverse of a small dense matrix (row-major), partial pivoting
fn mat_inverse<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut m: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut row = a[i * n..(i + 1) * n].to_vec();
            row.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| {
                m[x][col]
                    .abs()
                    .partial_cmp(&m[y][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if m[p][col].abs() <= T::epsilon() {
            return Err(terr("singular basis matrix"));
        }
        m.swap(col, p);
        let piv = m[col][col];
        for k in 0..2 * n {
            m[col][k] /= piv;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                for k in 0..2 * n {
                    let v = m[col][k];
                    m[r][k] -= f * v;
                }
            }
        }
    }
    Ok(m.into_iter().flat_map(|row| row[n..].to_vec()).collect())
}

/// Fundamental coweights `ω_j` (`α_i(ω_j) = δ_ij`) in orthonormal coordinates,
/// and `|det|` of the simple-root matrix.
fn coweights<T: Real>(rs: &RootSystem<T>) -> Result<(Vec<Vec<T>>, T)> {
    let r = rs.rank;
    let a: Vec<T> = (0..r).flat_map(|j| rs.simple_root(j).to_vec()).collect();
    let inv = mat_inverse(&a, r)?;
    let om = (0..r).map(|j| (0..r).map(|k| inv[k * r + j]).collect()).collect();
    let det = T::one() / det_abs(&inv, r);
    Ok((om, det))
}

fn det_abs<T: Real>(a: &[T], n: usize) -> T {
    let mut m = a.to_vec();
    let mut d = T::one();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| {
                m[x * n + col]
                    .abs()
                    .partial_cmp(&m[y * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if p != col {
            for k in 0..n {
                m.swap(col * n + k, p * n + k);
            }
        }
        let piv = m[col * n + col];
        if piv == T::zero() {
            return T::zero();
        }
        d *= piv;
        for r in col + 1..n {
            let f = m[r * n + col] / piv;
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] -= f * v;
            }
        }
    }
    d.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Smooth,
    Ck(u32),
    Sampled,
}

/// Real test function on 𝔞 with a declared support box.
#[derive(Clone)]
pub struct CompactFunction<T: Real> {
    f: Arc<dyn Fn(&[T]) -> T + Send + Sync>,
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    pub smoothness: Smoothness,
}

impl<T: Real> fmt::Debug for CompactFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompactFunction")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

fn bump_profile<T: Real>(r2: T, sharp: T) -> T {
    if r2 >= T::one() {
        T::zero()
    } else {
        (sharp - sharp / (T::one() - r2)).exp()
    }
}

impl<T: Real> CompactFunction<T> {
    pub fn new(
        lo: Vec<T>,
        hi: Vec<T>,
        smoothness: Smoothness,
        f: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            lo,
            hi,
            smoothness,
        }
    }

    pub fn zero(rank: usize) -> Self {
        Self::new(vec![T::zero(); rank], vec![T::zero(); rank], Smoothness::Smooth, |_| T::zero())
    }

    pub fn rank(&self) -> usize {
        self.lo.len()
    }

    pub fn in_box(&self, h: &[T]) -> bool {
        h.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    /// Value, forced to 0 outside the declared box.
    pub fn eval(&self, h: &[T]) -> T {
        if self.in_box(h) {
            (self.f)(h)
        } else {
            T::zero()
        }
    }

    /// `exp(a − a/(1 − |H − c|²/R²))` on the ball `|H − c| < R` (value 1 at `c`).
    pub fn bump(center: Vec<T>, radius: T, sharpness: T) -> Self {
        let lo = center.iter().map(|x| *x - radius).collect();
        let hi = center.iter().map(|x| *x + radius).collect();
        let c = center.clone();
        Self::new(lo, hi, Smoothness::Smooth, move |h| {
            let r2 = h
                .iter()
                .zip(&c)
                .fold(T::zero(), |a, (x, y)| a + (*x - *y) * (*x - *y))
                / (radius * radius);
            bump_profile(r2, sharpness)
        })
    }

    /// `Σ_{w∈W_Θ} bump(H − w·c)`, a W_Θ-invariant test function.
    pub fn symmetrized_bump(
        rs: &RootSystem<T>,
        th: &ThetaSet,
        center: &[T],
        radius: T,
        sharpness: T,
    ) -> Result<Self> {
        rs.check_dim("transform", center.len())?;
        let wth = parabolic_subgroup(rs, th)?;
        let mut centers: Vec<Vec<T>> = Vec::new();
        for w in &wth {
            let c = w.apply(center);
            if !centers
                .iter()
                .any(|d| d.iter().zip(&c).all(|(x, y)| (*x - *y).abs() < T::lit(1e-12)))
            {
                centers.push(c);
            }
        }
        let r = rs.rank;
        let lo = (0..r)
            .map(|k| centers.iter().fold(T::infinity(), |a, c| a.min(c[k])) - radius)
            .collect();
        let hi = (0..r)
            .map(|k| centers.iter().fold(T::neg_infinity(), |a, c| a.max(c[k])) + radius)
            .collect();
        Ok(Self::new(lo, hi, Smoothness::Smooth, move |h| {
            centers.iter().fold(T::zero(), |acc, c| {
                let r2 = h
                    .iter()
                    .zip(c)
                    .fold(T::zero(), |a, (x, y)| a + (*x - *y) * (*x - *y))
                    / (radius * radius);
                acc + bump_profile(r2, sharpness)
            })
        }))
    }

    /// Multilinear interpolant of samples on a tensor grid, read from CSV rows
    /// `x_1, …, x_r, value` (header optional).
    pub fn from_csv(reader: impl Read, rank: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| terr(format!("csv: {e}")))?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == rank + 1 => rows.push(v),
                Ok(v) => {
                    return Err(terr(format!(
                        "csv: expected {} columns, got {}",
                        rank + 1,
                        v.len()
                    )))
                }
                Err(_) if rows.is_empty() => continue,
                Err(e) => return Err(terr(format!("csv: {e}"))),
            }
        }
        let axes: Vec<Vec<f64>> = (0..rank)
            .map(|k| {
                let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                v.dedup();
                v
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        if total != rows.len() || axes.iter().any(|a| a.len() < 2) {
            return Err(terr("csv: samples do not form a full tensor grid"));
        }
        let mut vals = vec![0.0; total];
        for r in &rows {
            let mut idx = 0;
            for k in (0..rank).rev() {
                let i = axes[k]
                    .binary_search_by(|x| x.partial_cmp(&r[k]).unwrap_or(std::cmp::Ordering::Equal))
                    .map_err(|_| terr("csv: grid lookup"))?;
                idx = idx * axes[k].len() + i;
            }
            vals[idx] = r[rank];
        }
        let lo = axes.iter().map(|a| T::lit(a[0])).collect();
        let hi = axes.iter().map(|a| T::lit(*a.last().unwrap_or(&0.0))).collect();
        Ok(Self::new(lo, hi, Smoothness::Sampled, move |h| {
            T::lit(multilinear(&axes, &vals, h))
        }))
    }

    /// Spot-checks that the evaluator vanishes just outside the declared box.
    pub fn check_support(&self) -> Result<()> {
        let r = self.rank();
        for k in 0..r {
            for side in [-1.0, 1.0] {
                let mut p: Vec<T> = self
                    .lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(a, b)| (*a + *b) / T::lit(2.0))
                    .collect();
                let w = self.hi[k] - self.lo[k];
                p[k] = if side < 0.0 {
                    self.lo[k] - T::lit(0.01) * w - T::lit(1e-9)
                } else {
                    self.hi[k] + T::lit(0.01) * w + T::lit(1e-9)
                };
                if (self.f)(&p) != T::zero() {
                    return Err(terr("test function does not vanish outside its declared box"));
                }
            }
        }
        Ok(())
    }

    /// Checks `f(sH) = f(H)` for the simple reflections `s` of `W_Θ` at the
    /// given points.
    pub fn check_invariance(&self, rs: &RootSystem<T>, th: &ThetaSet, pts: &[Vec<T>]) -> Result<()> {
        for p in pts {
            let v = self.eval(p);
            for &j in th.indices() {
                let q = rs.reflect(rs.simple_index(j), p);
                let u = self.eval(&q);
                if (u - v).abs() > T::lit(1e-10) * (T::one() + v.abs()) {
                    return Err(terr("test function is not W_Θ-invariant"));
                }
            }
        }
        Ok(())
    }
}

fn multilinear(axes: &[Vec<f64>], vals: &[f64], h: &[impl Real]) -> f64 {
    let r = axes.len();
    let mut base = Vec::with_capacity(r);
    let mut frac = Vec::with_capacity(r);
    for k in 0..r {
        let x = h[k].as_f64();
        let a = &axes[k];
        if x < a[0] || x > a[a.len() - 1] {
            return 0.0;
        }
        let i = match a.binary_search_by(|y| y.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Equal)) {
            Ok(i) => i.min(a.len() - 2),
            Err(i) => i.saturating_sub(1).min(a.len() - 2),
        };
        base.push(i);
        frac.push((x - a[i]) / (a[i + 1] - a[i]));
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << r) {
        let mut w = 1.0;
        let mut idx = 0;
        for k in (0..r).rev() {
            let bit = (corner >> k) & 1;
            w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            idx = idx * axes[k].len() + base[k] + bit;
        }
        acc += w * vals[idx];
    }
    acc
}

/// Tensor Gauss–Legendre rule on `A⁺`, in chamber coordinates
/// `s_j = α_j(H) ∈ (0, S_j)`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialGrid<T: Real> {
    pub nodes: Vec<Vec<T>>,
    pub weights: Vec<T>,
    /// Support box in orthonormal coordinates the grid was built for.
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    /// Chamber-coordinate extents `S_j`.
    pub extent: Vec<T>,
    pub per_dim: usize,
}

impl<T: Real> RadialGrid<T> {
    /// Covers `A⁺ ∩ box` with `n` Gauss–Legendre nodes per chamber coordinate.
    pub fn chamber(rs: &RootSystem<T>, lo: &[T], hi: &[T], n: usize) -> Result<Self> {
        rs.check_dim("transform", lo.len())?;
        rs.check_dim("transform", hi.len())?;
        let n = NonZeroUsize::new(n).ok_or_else(|| terr("grid needs at least one node"))?;
        let r = rs.rank;
        let (om, det_a) = coweights(rs)?;
        // S_j = max of α_j over the box corners
        let extent: Vec<T> = (0..r)
            .map(|j| {
                let a = rs.simple_root(j);
                (0..r).fold(T::zero(), |s, k| s + (a[k] * lo[k]).max(a[k] * hi[k]))
            })
            .collect();
        if extent.iter().any(|s| *s <= T::zero()) {
            return Err(terr("support box does not meet the positive chamber"));
        }
        let gl = GaussLegendre::new(n);
        let rule: Vec<(T, T)> = gl
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (T::lit((x + 1.0) / 2.0), T::lit(w / 2.0)))
            .collect();
        let jac = T::one() / det_a;
        let count = rule.len().pow(r as u32);
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            let mut h = vec![T::zero(); r];
            let mut w = jac;
            for j in 0..r {
                let (x, wx) = rule[rem % rule.len()];
                rem /= rule.len();
                let s = x * extent[j];
                w *= wx * extent[j];
                for k in 0..r {
                    h[k] += s * om[j][k];
                }
            }
            nodes.push(h);
            weights.push(w);
        }
        Ok(Self {
            nodes,
            weights,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            extent,
            per_dim: n.get(),
        })
    }

    /// Grid for the declared support of `f`.
    pub fn for_function(rs: &RootSystem<T>, f: &CompactFunction<T>, n: usize) -> Result<Self> {
        Self::chamber(rs, &f.lo, &f.hi, n)
    }

    /// Same domain with about half the nodes per dimension.
    pub fn coarsened(&self, rs: &RootSystem<T>) -> Result<Self> {
        Self::chamber(rs, &self.lo, &self.hi, self.per_dim.div_ceil(2).max(1))
    }

    /// Same nodes, weights multiplied by `k`.
    pub fn scaled(&self, k: T) -> Self {
        let mut g = self.clone();
        g.weights.iter_mut().for_each(|w| *w *= k);
        g
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Chamber-coordinate volume `Π S_j · |det Ω|` covered by the rule.
    pub fn volume(&self, rs: &RootSystem<T>) -> Result<T> {
        let (_, det_a) = coweights(rs)?;
        Ok(self.extent.iter().fold(T::one() / det_a, |a, s| a * *s))
    }

    fn covers(&self, rs: &RootSystem<T>, f: &CompactFunction<T>) -> bool {
        (0..rs.rank).all(|j| {
            let a = rs.simple_root(j);
            let need = (0..rs.rank).fold(T::zero(), |s, k| s + (a[k] * f.lo[k]).max(a[k] * f.hi[k]));
            need <= self.extent[j] * (T::one() + T::lit(1e-12))
        })
    }
}

/// Spectral nodes `λ = iy` with `y = h Σ n_j α_j` in the ball `|y| ≤ L`
/// (trapezoid rule on the scaled root lattice, hence W-stable).
#[derive(Debug, Clone, Serialize)]
pub struct SpectralGrid<T: Real> {
    pub nodes: Vec<Vec<T>>,
    pub weights: Vec<T>,
    pub spacing: T,
    pub radius: T,
}

impl<T: Real> SpectralGrid<T> {
    pub fn lattice(rs: &RootSystem<T>, spacing: T, radius: T) -> Result<Self> {
        if !(spacing > T::zero()) || !(radius >= T::zero()) {
            return Err(terr("spectral grid needs spacing > 0 and radius ≥ 0"));
        }
        let r = rs.rank;
        let (om, det_a) = coweights(rs)?;
        let bounds: Vec<i64> = om
            .iter()
            .map(|w| (radius * dot(w, w).sqrt() / spacing).floor().as_f64() as i64)
            .collect();
        let total: u128 = bounds.iter().map(|b| (2 * *b + 1) as u128).product();
        if total > 50_000_000 {
            return Err(terr(format!("spectral lattice box of {total} points too large")));
        }
        let w = spacing.powi(r as i32) * det_a;
        let mut nodes = Vec::new();
        let mut idx: Vec<i64> = bounds.iter().map(|b| -b).collect();
        loop {
            let y: Vec<T> = (0..r)
                .map(|k| {
                    (0..r).fold(T::zero(), |s, j| {
                        s + T::from_i(idx[j]) * spacing * rs.simple_root(j)[k]
                    })
                })
                .collect();
            if dot(&y, &y) <= radius * radius * (T::one() + T::lit(1e-12)) {
                nodes.push(y);
            }
            let mut k = 0;
            loop {
                if k == r {
                    let weights = vec![w; nodes.len()];
                    return Ok(Self {
                        nodes,
                        weights,
                        spacing,
                        radius,
                    });
                }
                idx[k] += 1;
                if idx[k] <= bounds[k] {
                    break;
                }
                idx[k] = -bounds[k];
                k += 1;
            }
        }
    }

    /// Lattice spacing that keeps the periodized images of a function
    /// supported in `|H| ≤ support_radius` apart, with a factor 2 margin.
    pub fn spacing_for_support(rs: &RootSystem<T>, support_radius: T) -> Result<T> {
        let (om, _) = coweights(rs)?;
        let nu = om.iter().fold(T::infinity(), |a, w| a.min(dot(w, w).sqrt()));
        Ok(T::lit(0.5) * T::PI() * nu / support_radius)
    }

    pub fn lambda(&self, k: usize) -> Vec<Complex<T>> {
        self.nodes[k].iter().map(|y| Complex::new(T::zero(), *y)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Smallest radius beyond which `mag(y)` stays below
/// [`SPECTRAL_CUTOFF_TOL`] times its peak, sampled along fixed rays.
pub fn choose_spectral_radius<T: Real>(
    rs: &RootSystem<T>,
    step: T,
    max_radius: T,
    mag: impl Fn(&[T]) -> T + Sync,
) -> Result<T> {
    let r = rs.rank;
    let mut dirs: Vec<Vec<T>> = (0..r).map(|j| rs.simple_root(j).to_vec()).collect();
    dirs.extend((0..rs.num_positive()).map(|i| rs.root(i).to_vec()));
    // a generic direction
    dirs.push((0..r).map(|k| T::lit(1.0 + 0.37 * k as f64)).collect());
    for d in dirs.iter_mut() {
        let n = dot(d, d).sqrt();
        d.iter_mut().for_each(|x| *x /= n);
    }
    let steps = (max_radius / step).ceil().as_f64() as usize;
    let prof: Vec<T> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let t = step * T::from_i(k as i64);
            dirs.iter()
                .map(|d| {
                    let y: Vec<T> = d.iter().map(|x| *x * t).collect();
                    mag(&y)
                })
                .fold(T::zero(), |a, b| a.max(b))
        })
        .collect();
    let peak = prof.iter().fold(T::zero(), |a, b| a.max(*b));
    if peak == T::zero() {
        return Ok(step);
    }
    let tol = T::lit(SPECTRAL_CUTOFF_TOL) * peak;
    // first radius after which the profile stays below tol for a few steps
    const RUN: usize = 4;
    let mut below = 0;
    for (k, v) in prof.iter().enumerate() {
        if *v < tol {
            below += 1;
            if below == RUN {
                return Ok(step * T::from_i((k + 1 - RUN).max(1) as i64));
            }
        } else {
            below = 0;
        }
    }
    Err(terr(format!(
        "spectral integrand above {SPECTRAL_CUTOFF_TOL:e}·peak at the maximal radius {}",
        max_radius.as_f64()
    )))
}

/// `|c_Θ(m;λ)|⁻²` with `c_Θ = c_Θ⁺c_Θ⁻`; 0 at poles of `c_Θ`, and `c ≡ 1` at `m = 0`.
pub fn plancherel_density<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    lam: &[Complex<T>],
) -> Result<T> {
    rs.check_dim("transform", lam.len())?;
    th.check(rs.rank)?;
    if m.is_zero() {
        return Ok(T::one());
    }
    let c = c_theta(rs, m, th, lam);
    if c.is_pole {
        return Ok(T::zero());
    }
    let n = c.value.norm_sqr();
    if !(n > T::zero()) || !n.is_finite() {
        return Err(Error::Pole {
            module: "transform",
            what: "Plancherel density (zero of c_Θ)",
        });
    }
    Ok(T::one() / n)
}

/// `|c_Π⁺(m;λ)|⁻²`, the wave-packet density.
fn packet_density<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    lam: &[Complex<T>],
) -> Result<T> {
    if m.is_zero() {
        return Ok(T::one());
    }
    let c = c_theta_plus(rs, m, &ThetaSet::full(rs.rank), lam);
    if c.is_pole {
        return Ok(T::zero());
    }
    let n = c.value.norm_sqr();
    if !(n > T::zero()) || !n.is_finite() {
        return Err(Error::Pole {
            module: "transform",
            what: "wave-packet density (zero of c_Π⁺)",
        });
    }
    Ok(T::one() / n)
}

/// Precomputed radial data `w_k f(H_k) δ(H_k)` for repeated transforms of `f`.
pub struct Transformer<'a, T: Real> {
    rs: &'a RootSystem<T>,
    ev: ThetaEvaluator<'a, T>,
    samples: Vec<(Vec<T>, T)>,
}

impl<'a, T: Real> Transformer<'a, T> {
    pub fn new(
        rs: &'a RootSystem<T>,
        m: &MultiplicityFunction<T>,
        th: &ThetaSet,
        f: &CompactFunction<T>,
        grid: &RadialGrid<T>,
    ) -> Result<Self> {
        Self::with_order(rs, m, th, f, grid, DEFAULT_ORDER)
    }

    pub fn with_order(
        rs: &'a RootSystem<T>,
        m: &MultiplicityFunction<T>,
        th: &ThetaSet,
        f: &CompactFunction<T>,
        grid: &RadialGrid<T>,
        order: usize,
    ) -> Result<Self> {
        rs.check_dim("transform", f.rank())?;
        f.check_support()?;
        if !grid.covers(rs, f) {
            return Err(terr("support of f escapes the radial grid"));
        }
        let probe: Vec<Vec<T>> = grid.nodes.iter().step_by(grid.len() / 16 + 1).cloned().collect();
        f.check_invariance(rs, th, &probe)?;
        let samples = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .filter_map(|(h, w)| {
                let v = f.eval(h);
                if v == T::zero() {
                    None
                } else {
                    Some((h.clone(), *w * v * delta_density(rs, m, h)))
                }
            })
            .collect();
        Ok(Self {
            rs,
            ev: ThetaEvaluator::new(rs, m, th, order, MethodChoice::Auto)?,
            samples,
        })
    }

    /// `F_Θf(m;λ) = ∫_{A⁺} f φ_Θ(m;λ,·) δ(m)`.
    pub fn eval(&self, lam: &[Complex<T>]) -> Result<Complex<T>> {
        self.rs.check_dim("transform", lam.len())?;
        if self.samples.is_empty() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        let at = self.ev.at(lam)?;
        let terms: Result<Vec<Complex<T>>> = self
            .samples
            .iter()
            .map(|(h, w)| at.eval(h).map(|v| v.value * *w))
            .collect();
        Ok(pairwise_sum(&terms?))
    }

    pub fn eval_many(&self, lams: &[Vec<Complex<T>>]) -> Vec<Result<Complex<T>>> {
        lams.par_iter().map(|l| self.eval(l)).collect()
    }
}

/// Single-λ Θ-spherical transform by quadrature on `grid`.
pub fn theta_transform<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    f: &CompactFunction<T>,
    grid: &RadialGrid<T>,
    lam: &[Complex<T>],
) -> Result<Complex<T>> {
    Transformer::new(rs, m, th, f, grid)?.eval(lam)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformValue<T: Real> {
    pub value: Complex<T>,
    /// `|I_n − I_{n/2}|` from the coarsened grid.
    pub est_error: T,
}

/// Transform with a grid-refinement error estimate.
pub fn theta_transform_estimate<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    f: &CompactFunction<T>,
    grid: &RadialGrid<T>,
    lam: &[Complex<T>],
) -> Result<TransformValue<T>> {
    let fine = theta_transform(rs, m, th, f, grid, lam)?;
    let coarse = theta_transform(rs, m, th, f, &grid.coarsened(rs)?, lam)?;
    Ok(TransformValue {
        value: fine,
        est_error: (fine - coarse).norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionValue<T: Real> {
    pub values: Vec<Complex<T>>,
    /// Spectral nodes dropped because the density or `E_Θ` was singular there.
    pub skipped_nodes: usize,
}

/// Spectral data `g(iy_k)` on the nodes where the density is nonzero.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralData<T: Real> {
    /// `(node index, density, g value)`.
    pub entries: Vec<(usize, T, Complex<T>)>,
    pub skipped_nodes: usize,
}

/// Evaluates `g` and the Plancherel density on the grid, skipping nodes where
/// either is singular.
pub fn spectral_data<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    sgrid: &SpectralGrid<T>,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
) -> SpectralData<T> {
    let raw: Vec<Option<(usize, T, Complex<T>)>> = (0..sgrid.len())
        .into_par_iter()
        .map(|k| {
            let lam = sgrid.lambda(k);
            let d = plancherel_density(rs, m, th, &lam).ok()?;
            if d == T::zero() {
                return Some((k, d, Complex::new(T::zero(), T::zero())));
            }
            g(&lam).ok().map(|v| (k, d, v))
        })
        .collect();
    let skipped = raw.iter().filter(|x| x.is_none()).count();
    SpectralData {
        entries: raw
            .into_iter()
            .flatten()
            .filter(|(_, d, _)| *d > T::zero())
            .collect(),
        skipped_nodes: skipped,
    }
}

/// Spectral data of a transform: `F_Θ f` is evaluated once per W_Θ-orbit of
/// grid nodes and reused across the orbit.
pub fn transform_data<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    sgrid: &SpectralGrid<T>,
    tr: &Transformer<'_, T>,
) -> SpectralData<T> {
    let key = |y: &[T]| -> Vec<i64> {
        rs.dominant_rep_in(y, th.indices())
            .iter()
            .map(|x| (*x * T::lit(1e8)).round().as_f64() as i64)
            .collect()
    };
    let mut reps: std::collections::BTreeMap<Vec<i64>, usize> = Default::default();
    let owner: Vec<usize> = (0..sgrid.len())
        .map(|k| *reps.entry(key(&sgrid.nodes[k])).or_insert(k))
        .collect();
    let firsts: Vec<usize> = reps.values().copied().collect();
    let vals: std::collections::HashMap<usize, Option<Complex<T>>> = firsts
        .par_iter()
        .map(|&k| {
            let lam = sgrid.lambda(k);
            let d = plancherel_density(rs, m, th, &lam).unwrap_or(T::zero());
            let v = if d == T::zero() { Some(Complex::new(T::zero(), T::zero())) } else { tr.eval(&lam).ok() };
            (k, v)
        })
        .collect();
    let raw: Vec<Option<(usize, T, Complex<T>)>> = (0..sgrid.len())
        .into_par_iter()
        .map(|k| {
            let d = plancherel_density(rs, m, th, &sgrid.lambda(k)).ok()?;
            vals[&owner[k]].map(|v| (k, d, v))
        })
        .collect();
    let skipped = raw.iter().filter(|x| x.is_none()).count();
    SpectralData {
        entries: raw
            .into_iter()
            .flatten()
            .filter(|(_, d, _)| *d > T::zero())
            .collect(),
        skipped_nodes: skipped,
    }
}

/// `κ (|W|/|W_Θ|) Σ_k w_k g(λ_k) E_Θ(m;−λ_k, H) |c_Θ(λ_k)|⁻²` at each `H`.
pub fn invert_data<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    data: &SpectralData<T>,
    sgrid: &SpectralGrid<T>,
    hs: &[Vec<T>],
    kappa: T,
) -> Result<InversionValue<T>> {
    for h in hs {
        rs.check_dim("transform", h.len())?;
        if !a_theta_contains(rs, th, h) {
            return Err(Error::OutsideDomain {
                module: "transform",
                detail: "inversion point outside 𝔞_Θ".into(),
            });
        }
    }
    let full = ThetaSet::full(rs.rank);
    let ev = ThetaEvaluator::new(rs, m, &full, DEFAULT_ORDER, MethodChoice::Auto)?;
    let w_order = weyl_group(rs)?.len();
    let wth = parabolic_subgroup(rs, th)?.len();
    let factor = kappa * T::from_i(w_order as i64) / T::from_i(wth as i64);
    let rows: Vec<Option<Vec<Complex<T>>>> = data
        .entries
        .par_iter()
        .map(|&(k, d, g)| {
            let neg: Vec<Complex<T>> = sgrid.lambda(k).iter().map(|x| -*x).collect();
            let pre = e_theta_prefactor(rs, m, th, &neg).ok()?;
            let at = ev.at(&neg).ok()?;
            let s = g * pre * (sgrid.weights[k] * d);
            hs.iter()
                .map(|h| at.eval(h).ok().map(|v| v.value * s))
                .collect::<Option<Vec<_>>>()
        })
        .collect();
    let skipped = data.skipped_nodes + rows.iter().filter(|r| r.is_none()).count();
    let good: Vec<Vec<Complex<T>>> = rows.into_iter().flatten().collect();
    let values = (0..hs.len())
        .map(|j| {
            let col: Vec<Complex<T>> = good.iter().map(|r| r[j]).collect();
            pairwise_sum(&col) * factor
        })
        .collect();
    Ok(InversionValue {
        values,
        skipped_nodes: skipped,
    })
}

/// Inversion of spectral data `g` at one point `H ∈ 𝔞_Θ`.
pub fn invert<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    sgrid: &SpectralGrid<T>,
    h: &[T],
    kappa: T,
) -> Result<Complex<T>> {
    let data = spectral_data(rs, m, th, sgrid, g);
    Ok(invert_data(rs, m, th, &data, sgrid, &[h.to_vec()], kappa)?.values[0])
}

/// Opdam inversion `κ|W| Σ_k w_k g(λ_k) F(m;−λ_k, H) |c(m;λ_k)|⁻²` with the
/// hypergeometric function `F` normalized by `F(λ, 0) = 1`.
pub fn invert_opdam<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    sgrid: &SpectralGrid<T>,
    h: &[T],
    kappa: T,
) -> Result<Complex<T>> {
    rs.check_dim("transform", h.len())?;
    let w_order = T::from_i(weyl_group(rs)?.len() as i64);
    let terms: Vec<Complex<T>> = (0..sgrid.len())
        .into_par_iter()
        .filter_map(|k| {
            let lam = sgrid.lambda(k);
            let d = if m.is_zero() {
                T::one()
            } else {
                let c = c_hc(rs, m, &lam);
                if c.is_pole {
                    return None;
                }
                T::one() / c.value.norm_sqr()
            };
            let neg: Vec<Complex<T>> = lam.iter().map(|x| -*x).collect();
            let phi = hypergeometric_ho(rs, m, &neg, h, DEFAULT_ORDER).ok()?;
            Some(g(&lam).ok()? * phi.value * (sgrid.weights[k] * d))
        })
        .collect();
    Ok(pairwise_sum(&terms) * kappa * w_order)
}

/// `∫ g(λ) φ_Π(m;−λ, exp H) |c_Π⁺(m;λ)|⁻² dλ` over the spectral grid; `g`
/// must be negligible (< 10⁻⁶ of its peak) on the outer shell.
pub fn wave_packet<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    sgrid: &SpectralGrid<T>,
    hs: &[Vec<T>],
) -> Result<Vec<Complex<T>>> {
    let full = ThetaSet::full(rs.rank);
    let ev = ThetaEvaluator::new(rs, m, &full, DEFAULT_ORDER, MethodChoice::Auto)?;
    let shell = sgrid.radius - sgrid.spacing * T::lit(2.0);
    let rows: Vec<Result<Option<(T, bool, Vec<Complex<T>>)>>> = (0..sgrid.len())
        .into_par_iter()
        .map(|k| {
            let lam = sgrid.lambda(k);
            let d = packet_density(rs, m, &lam)?;
            if d == T::zero() {
                return Ok(None);
            }
            let gv = g(&lam)?;
            let neg: Vec<Complex<T>> = lam.iter().map(|x| -*x).collect();
            let at = ev.at(&neg)?;
            let s = gv * (sgrid.weights[k] * d);
            let vals = hs
                .iter()
                .map(|h| at.eval(h).map(|v| v.value * s))
                .collect::<Result<Vec<_>>>()?;
            let y = &sgrid.nodes[k];
            Ok(Some((gv.norm(), dot(y, y).sqrt() > shell, vals)))
        })
        .collect();
    let rows: Vec<(T, bool, Vec<Complex<T>>)> =
        rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    let peak = rows.iter().fold(T::zero(), |a, r| a.max(r.0));
    let edge = rows.iter().filter(|r| r.1).fold(T::zero(), |a, r| a.max(r.0));
    if peak > T::zero() && edge > T::lit(1e-6) * peak {
        return Err(terr("spectral function does not decay on the grid boundary"));
    }
    Ok((0..hs.len())
        .map(|j| {
            let col: Vec<Complex<T>> = rows.iter().map(|r| r.2[j]).collect();
            pairwise_sum(&col)
        })
        .collect())
}

/// Θ-wave packet: the wave packet restricted to 𝔞_Θ.
pub fn wave_packet_theta<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    g: impl Fn(&[Complex<T>]) -> Result<Complex<T>> + Sync,
    sgrid: &SpectralGrid<T>,
    hs: &[Vec<T>],
) -> Result<Vec<Complex<T>>> {
    if hs.iter().any(|h| !a_theta_contains(rs, th, h)) {
        return Err(Error::OutsideDomain {
            module: "transform",
            detail: "Θ-wave packet evaluated outside 𝔞_Θ".into(),
        });
    }
    wave_packet(rs, m, g, sgrid, hs)
}

/// κ for `m = 0`: `1/(|W|(2π)^r)` for Lebesgue measures in orthonormal coordinates.
pub fn euclidean_kappa<T: Real>(rs: &RootSystem<T>) -> Result<T> {
    let w = weyl_group(rs)?.len();
    Ok(T::one() / (T::from_i(w as i64) * (T::lit(2.0) * T::PI()).powi(rs.rank as i32)))
}

/// Everything needed for a transform/inversion round trip.
#[derive(Debug, Clone)]
pub struct Grids<T: Real> {
    pub radial: RadialGrid<T>,
    pub spectral: SpectralGrid<T>,
}

impl<T: Real> Grids<T> {
    /// Radial grid for `f`'s box and a spectral lattice adapted to its support,
    /// with the cutoff radius chosen from `f`'s transform.
    pub fn adaptive(
        rs: &RootSystem<T>,
        m: &MultiplicityFunction<T>,
        th: &ThetaSet,
        f: &CompactFunction<T>,
        per_dim: usize,
        max_radius: T,
    ) -> Result<Self> {
        let reach = f
            .lo
            .iter()
            .zip(&f.hi)
            .fold(T::zero(), |a, (l, h)| a + l.abs().max(h.abs()).powi(2))
            .sqrt();
        let spacing = SpectralGrid::spacing_for_support(rs, reach)?;
        let mut n = per_dim.max(17);
        loop {
            let radial = RadialGrid::for_function(rs, f, n)?;
            // frequencies the radial rule still resolves
            let resolved = T::from_i(n as i64 - 16) / (T::lit(0.4) * reach);
            let limit = resolved.min(max_radius);
            let tr = Transformer::new(rs, m, th, f, &radial)?;
            let found = choose_spectral_radius(rs, spacing, limit, |y| {
                let lam: Vec<Complex<T>> = y.iter().map(|x| Complex::new(T::zero(), *x)).collect();
                let d = plancherel_density(rs, m, th, &lam).unwrap_or(T::zero());
                if d == T::zero() {
                    return T::zero();
                }
                tr.eval(&lam).map(|v| v.norm() * d).unwrap_or(T::zero())
            });
            match found {
                Ok(radius) => {
                    let spectral = SpectralGrid::lattice(rs, spacing, radius)?;
                    return Ok(Self { radial, spectral });
                }
                Err(e) if limit >= max_radius || (2 * n).pow(rs.rank as u32) > MAX_RADIAL_NODES => {
                    return Err(e)
                }
                Err(_) => n *= 2,
            }
        }
    }
}

/// Interior points of `A⁺` where `|f| ≥ 5%` of its maximum over a tensor sample.
pub fn sample_points<T: Real>(
    rs: &RootSystem<T>,
    f: &CompactFunction<T>,
    per_dim: usize,
) -> Vec<Vec<T>> {
    let r = rs.rank;
    let total = per_dim.pow(r as u32);
    let pts: Vec<Vec<T>> = (0..total)
        .map(|flat| {
            let mut rem = flat;
            (0..r)
                .map(|k| {
                    let i = rem % per_dim;
                    rem /= per_dim;
                    let t = T::from_i(i as i64 + 1) / T::from_i(per_dim as i64 + 1);
                    f.lo[k] + (f.hi[k] - f.lo[k]) * t
                })
                .collect()
        })
        .filter(|h: &Vec<T>| rs.min_alpha(h) > T::lit(1e-3))
        .collect();
    let peak = pts.iter().fold(T::zero(), |a, h| a.max(f.eval(h).abs()));
    pts.into_iter()
        .filter(|h| f.eval(h).abs() >= T::lit(0.05) * peak)
        .collect()
}

fn sample_density<T: Real>(rs: &RootSystem<T>) -> usize {
    match rs.rank {
        1 => 41,
        2 => 15,
        _ => 7,
    }
}

/// κ = 1 inversion of `F_Θ f` at the points `hs`.
pub fn reconstruct<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    grids: &Grids<T>,
    f: &CompactFunction<T>,
    hs: &[Vec<T>],
) -> Result<InversionValue<T>> {
    let tr = Transformer::new(rs, m, th, f, &grids.radial)?;
    let data = transform_data(rs, m, th, &grids.spectral, &tr);
    invert_data(rs, m, th, &data, &grids.spectral, hs, T::one())
}

/// Least-squares κ with `κ · invert(F_Θ f) ≈ f` on interior samples of `f`.
pub fn calibrate_kappa<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    grids: &Grids<T>,
    reference: &CompactFunction<T>,
) -> Result<T> {
    let hs = sample_points(rs, reference, sample_density(rs));
    calibrate_kappa_at(rs, m, th, grids, reference, &hs)
}

pub fn calibrate_kappa_at<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    grids: &Grids<T>,
    reference: &CompactFunction<T>,
    hs: &[Vec<T>],
) -> Result<T> {
    let u = reconstruct(rs, m, th, grids, reference, hs)?.values;
    let mut num = T::zero();
    let mut den = T::zero();
    let mut fmag = T::zero();
    for (h, v) in hs.iter().zip(&u) {
        let f = reference.eval(h);
        num += f * v.re;
        den += v.norm_sqr();
        fmag += f * f;
    }
    if fmag <= T::lit(1e-20) || den <= T::zero() {
        return Err(terr("κ fit ill-conditioned: reference too small on the samples"));
    }
    let k = num / den;
    if !(k > T::zero()) {
        return Err(terr("κ fit produced a nonpositive constant"));
    }
    Ok(k)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport<T: Real> {
    pub kappa: T,
    pub linf_rel_error: T,
    pub samples: usize,
    pub radial_nodes: usize,
    pub spectral_nodes: usize,
    pub spectral_radius: T,
    pub skipped_nodes: usize,
}

/// Calibrates κ on `f1`, reconstructs `f2` and reports the L∞ relative error
/// over interior samples of `f2`.
pub fn roundtrip<T: Real>(
    rs: &RootSystem<T>,
    m: &MultiplicityFunction<T>,
    th: &ThetaSet,
    grids1: &Grids<T>,
    f1: &CompactFunction<T>,
    grids2: &Grids<T>,
    f2: &CompactFunction<T>,
) -> Result<RoundTripReport<T>> {
    let kappa = calibrate_kappa(rs, m, th, grids1, f1)?;
    let hs = sample_points(rs, f2, sample_density(rs));
    if hs.is_empty() {
        return Err(terr("no interior samples of the test function in A⁺"));
    }
    let inv = reconstruct(rs, m, th, grids2, f2, &hs)?;
    let mut err = T::zero();
    let mut peak = T::zero();
    for (h, v) in hs.iter().zip(&inv.values) {
        let f = f2.eval(h);
        peak = peak.max(f.abs());
        err = err.max((*v * kappa - Complex::new(f, T::zero())).norm());
    }
    Ok(RoundTripReport {
        kappa,
        linf_rel_error: err / peak,
        samples: hs.len(),
        radial_nodes: grids2.radial.len(),
        spectral_nodes: grids2.spectral.len(),
        spectral_radius: grids2.spectral.radius,
        skipped_nodes: inv.skipped_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::build_root_system;

    type C = Complex<f64>;

    fn rsys(f: &str, r: usize) -> RootSystem<f64> {
        build_root_system(f, r).unwrap()
    }

    fn mult(rs: &RootSystem<f64>, m: f64) -> MultiplicityFunction<f64> {
        MultiplicityFunction::uniform(rs, m).unwrap()
    }

    #[test]
    fn zero_function_and_zero_data() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f = CompactFunction::zero(1);
        let g = RadialGrid::chamber(&rs, &[-1.0], &[1.0], 8).unwrap();
        assert_eq!(theta_transform(&rs, &m, &th, &f, &g, &[C::new(0.0, 1.0)]).unwrap(), C::new(0.0, 0.0));
        let s = SpectralGrid::lattice(&rs, 0.5, 5.0).unwrap();
        let v = invert(&rs, &m, &th, |_| Ok(C::new(0.0, 0.0)), &s, &[0.5], 1.0).unwrap();
        assert_eq!(v, C::new(0.0, 0.0));
        let w = wave_packet(&rs, &m, |_| Ok(C::new(0.0, 0.0)), &s, &[vec![0.3]]).unwrap();
        assert_eq!(w[0], C::new(0.0, 0.0));
    }

    #[test]
    fn radial_grid_volume_and_weights() {
        let rs = rsys("A", 2);
        let g = RadialGrid::chamber(&rs, &[-1.0, -1.0], &[1.0, 1.0], 12).unwrap();
        assert!(g.weights.iter().all(|w| *w > 0.0));
        assert!(g.nodes.iter().all(|h| rs.min_alpha(h) > 0.0));
        let s: f64 = g.weights.iter().sum();
        assert!((s - g.volume(&rs).unwrap()).abs() < 1e-12);
        // area of a chamber sector of a disc: πR²/6, via the indicator
        let area: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .filter(|(h, _)| dot(h, h) <= 1.0)
            .map(|(_, w)| *w)
            .sum();
        assert!((area - std::f64::consts::PI / 6.0).abs() < 0.05);
    }

    #[test]
    fn spectral_grid_symmetry() {
        for rs in [rsys("A", 1), rsys("A", 2), rsys("B", 2)] {
            let s = SpectralGrid::lattice(&rs, 0.4, 3.0).unwrap();
            let w = weyl_group(&rs).unwrap();
            let has = |y: &[f64]| {
                s.nodes
                    .iter()
                    .any(|z| z.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-9))
            };
            for y in &s.nodes {
                let neg: Vec<f64> = y.iter().map(|x| -x).collect();
                assert!(has(&neg));
                for e in &w {
                    assert!(has(&e.apply(y)));
                }
            }
        }
    }

    #[test]
    fn plancherel_density_examples() {
        let rs = rsys("A", 1);
        let th = ThetaSet::full(1);
        let d = plancherel_density(&rs, &mult(&rs, 2.0), &th, &[C::new(0.0, 1.7)]).unwrap();
        assert!((d - 1.7f64 * 1.7).abs() < 1e-12);
        let z = plancherel_density(&rs, &mult(&rs, 0.0), &th, &[C::new(0.0, 1.7)]).unwrap();
        assert_eq!(z, 1.0);
        let m3 = mult(&rs, 3.0);
        let a = plancherel_density(&rs, &m3, &th, &[C::new(0.0, 0.9)]).unwrap();
        let b = plancherel_density(&rs, &m3, &th, &[C::new(0.0, -0.9)]).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert_eq!(plancherel_density(&rs, &mult(&rs, 2.0), &th, &[C::new(0.0, 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_transform_matches_direct_quadrature() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 0.0);
        let th = ThetaSet::full(2);
        let f = CompactFunction::symmetrized_bump(&rs, &th, &[0.0, 0.0], 1.2, 2.0).unwrap();
        let grid = RadialGrid::for_function(&rs, &f, 60).unwrap();
        let gl = GaussLegendre::new(NonZeroUsize::new(80).unwrap());
        let rule = gl.as_node_weight_pairs();
        for lam in [[C::new(0.0, 0.7), C::new(0.0, -0.3)], [C::new(0.4, 0.2), C::new(-0.1, 1.0)]] {
            let got = theta_transform(&rs, &m, &th, &f, &grid, &lam).unwrap();
            // ∫_𝔞 f e^{λ(H)} dH on the full box
            let mut want = C::new(0.0, 0.0);
            for &(x, wx) in rule {
                for &(y, wy) in rule {
                    let h = [1.2 * x, 1.2 * y];
                    let e = (lam[0] * h[0] + lam[1] * h[1]).exp();
                    want += e * f.eval(&h) * wx * wy * 1.44;
                }
            }
            assert!((got - want).norm() <= 1e-8 * want.norm(), "{got} vs {want}");
        }
    }

    #[test]
    fn w_theta_invariance_in_lambda() {
        let rs = rsys("A", 2);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::from_indices(2, &[0]).unwrap();
        let f = CompactFunction::symmetrized_bump(&rs, &th, &[0.9, 0.6], 0.5, 1.0).unwrap();
        let grid = RadialGrid::for_function(&rs, &f, 30).unwrap();
        let tr = Transformer::new(&rs, &m, &th, &f, &grid).unwrap();
        let lam = vec![C::new(0.2, 0.8), C::new(-0.1, 0.3)];
        let a = rs.simple_root(0);
        let k = crate::scalar::cdot(&lam, a) * (2.0 / dot(a, a));
        let sl: Vec<C> = lam.iter().zip(a).map(|(x, y)| *x - k * *y).collect();
        let u = tr.eval(&lam).unwrap();
        let v = tr.eval(&sl).unwrap();
        assert!((u - v).norm() <= 1e-8 * u.norm());
    }

    #[test]
    fn linearity_and_scaling() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f = CompactFunction::bump(vec![0.0], 1.0, 1.0);
        let f3 = {
            let g = f.clone();
            CompactFunction::new(f.lo.clone(), f.hi.clone(), Smoothness::Smooth, move |h| 3.0 * g.eval(h))
        };
        let grid = RadialGrid::for_function(&rs, &f, 40).unwrap();
        let lam = [C::new(0.0, 1.3)];
        let a = theta_transform(&rs, &m, &th, &f, &grid, &lam).unwrap();
        let b = theta_transform(&rs, &m, &th, &f3, &grid, &lam).unwrap();
        assert!((b - a * 3.0).norm() <= 4.0 * f64::EPSILON * b.norm());
        let est = theta_transform_estimate(&rs, &m, &th, &f, &grid, &lam).unwrap();
        assert!(est.est_error < 1e-6 * est.value.norm());
    }

    #[test]
    fn invariance_and_support_checks() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f = CompactFunction::bump(vec![0.5], 0.3, 1.0);
        let grid = RadialGrid::for_function(&rs, &f, 20).unwrap();
        assert!(Transformer::new(&rs, &m, &th, &f, &grid).is_err());
        let leaky = CompactFunction::new(vec![-1.0], vec![1.0], Smoothness::Smooth, |_| 1.0);
        assert!(leaky.check_support().is_err());
        let small = RadialGrid::chamber(&rs, &[-0.5], &[0.5], 10).unwrap();
        let g = CompactFunction::bump(vec![0.0], 1.0, 1.0);
        assert!(Transformer::new(&rs, &m, &th, &g, &small).is_err());
    }

    #[test]
    fn kappa_scales_with_weights() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f = CompactFunction::bump(vec![0.0], 1.5, 4.0);
        let grids = Grids::adaptive(&rs, &m, &th, &f, 48, 200.0).unwrap();
        let k1 = calibrate_kappa(&rs, &m, &th, &grids, &f).unwrap();
        let doubled = Grids {
            radial: grids.radial.scaled(2.0),
            spectral: grids.spectral.clone(),
        };
        let k2 = calibrate_kappa(&rs, &m, &th, &doubled, &f).unwrap();
        assert!((k2 / k1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn euclidean_kappa_matches_fit() {
        for rs in [rsys("A", 1), rsys("A", 2)] {
            let m = mult(&rs, 0.0);
            let th = ThetaSet::full(rs.rank);
            let f = CompactFunction::symmetrized_bump(&rs, &th, &vec![0.0; rs.rank], 1.5, 4.0).unwrap();
            let grids = Grids::adaptive(&rs, &m, &th, &f, 40, 200.0).unwrap();
            let k = calibrate_kappa(&rs, &m, &th, &grids, &f).unwrap();
            let e = euclidean_kappa(&rs).unwrap();
            assert!((k / e - 1.0).abs() < 0.01, "{}: {k} vs {e}", rs.family);
        }
    }

    #[test]
    fn kappa_stable_across_references() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f1 = CompactFunction::bump(vec![0.0], 1.5, 4.0);
        let f2 = CompactFunction::symmetrized_bump(&rs, &th, &[0.6], 1.4, 3.0).unwrap();
        let g1 = Grids::adaptive(&rs, &m, &th, &f1, 48, 200.0).unwrap();
        let g2 = Grids::adaptive(&rs, &m, &th, &f2, 48, 200.0).unwrap();
        let k1 = calibrate_kappa(&rs, &m, &th, &g1, &f1).unwrap();
        let k2 = calibrate_kappa(&rs, &m, &th, &g2, &f2).unwrap();
        assert!((k1 / k2 - 1.0).abs() < 0.02);
        // both agree with the value implied by the sine transform, 1/(4π)
        assert!((k1 * 4.0 * std::f64::consts::PI - 1.0).abs() < 1e-3);
    }

    #[test]
    fn wave_packet_localizes() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f = CompactFunction::bump(vec![0.0], 1.0, 4.0);
        let grids = Grids::adaptive(&rs, &m, &th, &f, 48, 200.0).unwrap();
        let tr = Transformer::new(&rs, &m, &th, &f, &grids.radial).unwrap();
        let hs: Vec<Vec<f64>> = (1..60).map(|k| vec![0.05 * k as f64]).collect();
        let vals = wave_packet(&rs, &m, |l| tr.eval(l), &grids.spectral, &hs).unwrap();
        let (mut inside, mut outside) = (0.0, 0.0);
        for (h, v) in hs.iter().zip(&vals) {
            if h[0] < 1.0 {
                inside += v.norm();
            } else {
                outside += v.norm();
            }
        }
        assert!(outside <= 1e-2 * (inside + outside));
        let e = ThetaSet::empty();
        assert!(wave_packet_theta(&rs, &m, &e, |l| tr.eval(l), &grids.spectral, &[vec![-0.5]]).is_err());
    }

    #[test]
    fn csv_import_interpolates() {
        let mut s = String::from("x,value\n");
        for k in 0..=20 {
            let x = -1.0 + 0.1 * k as f64;
            s.push_str(&format!("{x},{}\n", 1.0 - x * x));
        }
        let f = CompactFunction::<f64>::from_csv(s.as_bytes(), 1).unwrap();
        assert!((f.eval(&[0.05]) - (1.0 - 0.0025 - 0.0025)).abs() < 1e-2);
        assert_eq!(f.eval(&[1.5]), 0.0);
        assert_eq!(f.smoothness, Smoothness::Sampled);
    }

    #[test]
    fn full_theta_inversion_is_opdam_inversion() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f = CompactFunction::bump(vec![0.0], 1.0, 4.0);
        let grids = Grids::adaptive(&rs, &m, &th, &f, 48, 400.0).unwrap();
        let tr = Transformer::new(&rs, &m, &th, &f, &grids.radial).unwrap();
        let rho = crate::coeffs::rho_c(&rs, &m);
        let cr = c_theta_plus(&rs, &m, &th, &rho).value;
        let mut ratios = Vec::new();
        for h in [0.2, 0.5, 0.8] {
            let a = invert(&rs, &m, &th, |l| tr.eval(l), &grids.spectral, &[h], 1.0).unwrap();
            let b = invert_opdam(&rs, &m, |l| tr.eval(l).map(|v| v / cr), &grids.spectral, &[h], 1.0)
                .unwrap();
            ratios.push(a / b);
        }
        for r in &ratios {
            assert!((*r - ratios[0]).norm() < 1e-10 * ratios[0].norm(), "{ratios:?}");
        }
    }

    #[test]
    fn euclidean_wave_packet_is_inverse_fourier() {
        // g(iy) = e^{-y²/2}: the symmetrized inverse transform is a Gaussian
        let rs = rsys("A", 1);
        let m = mult(&rs, 0.0);
        let s = SpectralGrid::lattice(&rs, 0.05, 12.0).unwrap();
        let hs: Vec<Vec<f64>> = vec![vec![0.0], vec![0.7], vec![1.9]];
        let v = wave_packet(&rs, &m, |l| Ok((l[0] * l[0] / 2.0).exp()), &s, &hs).unwrap();
        for (h, x) in hs.iter().zip(&v) {
            let want = 2.0 * (2.0 * std::f64::consts::PI).sqrt() * (-h[0] * h[0] / 2.0).exp();
            assert!((x.re - want).abs() < 1e-10 && x.im.abs() < 1e-10, "{x} vs {want}");
        }
    }

    #[test]
    fn refinement_reduces_roundtrip_error() {
        let rs = rsys("A", 1);
        let m = mult(&rs, 2.0);
        let th = ThetaSet::full(1);
        let f1 = CompactFunction::bump(vec![0.0], 1.0, 4.0);
        let f2 = CompactFunction::symmetrized_bump(&rs, &th, &[0.5], 0.9, 4.0).unwrap();
        let g1 = Grids::adaptive(&rs, &m, &th, &f1, 48, 400.0).unwrap();
        let fine = Grids::adaptive(&rs, &m, &th, &f2, 48, 400.0).unwrap();
        let mut errs = Vec::new();
        for k in [4.0, 2.0, 1.0] {
            let spectral = SpectralGrid::lattice(&rs, fine.spectral.spacing * k, fine.spectral.radius).unwrap();
            let g2 = Grids { radial: fine.radial.clone(), spectral };
            errs.push(roundtrip(&rs, &m, &th, &g1, &f1, &g2, &f2).unwrap().linf_rel_error);
        }
        assert!(errs[1] * 2.0 <= errs[0] || errs[0] < 1e-9, "{errs:?}");
        assert!(errs[2] * 2.0 <= errs[1] || errs[1] < 1e-9, "{errs:?}");
    }
}
