//! Reduced root systems, Weyl groups, parabolic subgroups and the positive
//! lattice spanned by the simple roots.
//!
//! Roots are generated exactly in simple-root coordinates (integer vectors)
//! from a set of simple roots given in a standard ambient realization.  All
//! analytic work happens in a fixed orthonormal basis of 𝔞 obtained from the
//! Cholesky factor of the Gram matrix of the simple roots, so a spectral
//! parameter λ ∈ 𝔞*_ℂ and a torus point H ∈ 𝔞 are both plain coordinate
//! vectors of length `rank`.
//!
//! Simple roots follow the Bourbaki numbering.  Every type uses the inner
//! product of its standard realization, except A1 which is rescaled so that
//! ⟨α,α⟩ = 1.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cdot, dot, Real};

/// Version tag of the embedded exceptional root tables.
pub const ROOT_TABLE_VERSION: &str = "bourbaki-simple-roots/1";

/// Default cap on the order of an enumerated Weyl group.
pub const DEFAULT_WEYL_CAP: usize = 1_000_000;

/// Default cap on the number of enumerated lattice points.
pub const DEFAULT_LATTICE_CAP: usize = 10_000_000;

/// Tolerance for floating comparisons of root data.
pub const ROOT_TOL: f64 = 1e-12;

// Simple roots in ambient coordinates, doubled so that every entry is an
// integer (E8 and F4 contain half-integers).
const E8_SIMPLE_DOUBLED: [[i64; 8]; 8] = [
    [1, -1, -1, -1, -1, -1, -1, 1],
    [2, 2, 0, 0, 0, 0, 0, 0],
    [-2, 2, 0, 0, 0, 0, 0, 0],
    [0, -2, 2, 0, 0, 0, 0, 0],
    [0, 0, -2, 2, 0, 0, 0, 0],
    [0, 0, 0, -2, 2, 0, 0, 0],
    [0, 0, 0, 0, -2, 2, 0, 0],
    [0, 0, 0, 0, 0, -2, 2, 0],
];

const F4_SIMPLE_DOUBLED: [[i64; 4]; 4] = [
    [0, 2, -2, 0],
    [0, 0, 2, -2],
    [0, 0, 0, 2],
    [1, -1, -1, -1],
];

const G2_SIMPLE_DOUBLED: [[i64; 3]; 2] = [[2, -2, 0], [-4, 2, 2]];

/// Cartan type label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Family {
    A,
    B,
    C,
    D,
    E6,
    E7,
    E8,
    F4,
    G2,
}

impl Family {
    /// Family label together with the rank it forces, if any.
    pub fn fixed_rank(self) -> Option<usize> {
        match self {
            Family::E6 => Some(6),
            Family::E7 => Some(7),
            Family::E8 => Some(8),
            Family::F4 => Some(4),
            Family::G2 => Some(2),
            _ => None,
        }
    }

    /// Parses a label such as `"A"`, `"E6"`, `"E"`, `"G2"`; `rank` resolves
    /// bare `"E"`, `"F"`, `"G"`.
    pub fn parse_with_rank(label: &str, rank: usize) -> Result<Family> {
        let l = label.trim().to_ascii_uppercase();
        let unsupported = || Error::Unsupported {
            family: label.to_string(),
            rank,
        };
        let fam = match l.as_str() {
            "A" => Family::A,
            "B" => Family::B,
            "C" => Family::C,
            "D" => Family::D,
            "E" => match rank {
                6 => Family::E6,
                7 => Family::E7,
                8 => Family::E8,
                _ => return Err(unsupported()),
            },
            "E6" => Family::E6,
            "E7" => Family::E7,
            "E8" => Family::E8,
            "F" | "F4" => Family::F4,
            "G" | "G2" => Family::G2,
            "BC" => return Err(Error::NonReduced(format!("BC{rank}"))),
            _ => return Err(unsupported()),
        };
        if let Some(r) = fam.fixed_rank() {
            if r != rank {
                return Err(unsupported());
            }
        }
        let min_rank = match fam {
            Family::A => 1,
            Family::B | Family::C => 2,
            Family::D => 4,
            _ => 0,
        };
        if rank < min_rank.max(1) {
            return Err(unsupported());
        }
        Ok(fam)
    }

    /// Order of the Weyl group of the irreducible system of this type.
    pub fn weyl_order(self, rank: usize) -> u128 {
        let fact = |n: usize| (1..=n as u128).product::<u128>();
        match self {
            Family::A => fact(rank + 1),
            Family::B | Family::C => (1u128 << rank) * fact(rank),
            Family::D => (1u128 << (rank - 1)) * fact(rank),
            Family::E6 => 51_840,
            Family::E7 => 2_903_040,
            Family::E8 => 696_729_600,
            Family::F4 => 1_152,
            Family::G2 => 12,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::E6 => "E6",
            Family::E7 => "E7",
            Family::E8 => "E8",
            Family::F4 => "F4",
            Family::G2 => "G2",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Family> {
        let rank = match s.trim().to_ascii_uppercase().as_str() {
            "E6" => 6,
            "E7" => 7,
            "E8" => 8,
            "F4" => 4,
            "G2" => 2,
            _ => 2,
        };
        Family::parse_with_rank(s, rank)
    }
}

/// A reduced irreducible root system in a fixed orthonormal basis of 𝔞.
#[derive(Debug, Clone, Serialize)]
pub struct RootSystem<T: Real> {
    pub family: Family,
    pub rank: usize,
    /// Scale applied to the ambient Euclidean form (1/2 for A1, else 1).
    pub normalization: T,
    /// Simple roots in (doubled) ambient coordinates.
    simple_ambient2: Vec<Vec<i64>>,
    /// `pairing[i][j] = 2⟨α_j, α_i⟩ / ⟨α_i, α_i⟩`.
    pairing: Vec<Vec<i64>>,
    /// Positive roots in simple-root coordinates, ordered by height then lex.
    positive: Vec<Vec<i64>>,
    /// Gram matrix of the simple roots.
    pub gram: Vec<Vec<T>>,
    /// Upper-triangular `Lᵀ` with `gram = L Lᵀ`; orthonormal coordinates of
    /// a vector with simple coordinates `c` are `Lᵀ c`.
    chol_t: Vec<Vec<T>>,
    pos_ortho: Vec<Vec<T>>,
    pos_norm2: Vec<T>,
    /// W-orbit label of each positive root (0 = long, 1 = short).
    orbit: Vec<usize>,
    /// Index into `positive` of each simple root.
    simple_idx: Vec<usize>,
}

/// Builds the root system of type `(family, rank)`.
pub fn build_root_system<T: Real>(family: &str, rank: usize) -> Result<RootSystem<T>> {
    let fam = Family::parse_with_rank(family, rank)?;
    RootSystem::new(fam, rank)
}

fn standard_simple_doubled(fam: Family, rank: usize) -> Vec<Vec<i64>> {
    let unit = |dim: usize, i: usize, v: i64| {
        let mut e = vec![0; dim];
        e[i] = v;
        e
    };
    let diff = |dim: usize, i: usize| {
        let mut e = vec![0; dim];
        e[i] = 2;
        e[i + 1] = -2;
        e
    };
    match fam {
        Family::A => (0..rank).map(|i| diff(rank + 1, i)).collect(),
        Family::B => {
            let mut s: Vec<_> = (0..rank - 1).map(|i| diff(rank, i)).collect();
            s.push(unit(rank, rank - 1, 2));
            s
        }
        Family::C => {
            let mut s: Vec<_> = (0..rank - 1).map(|i| diff(rank, i)).collect();
            s.push(unit(rank, rank - 1, 4));
            s
        }
        Family::D => {
            let mut s: Vec<_> = (0..rank - 1).map(|i| diff(rank, i)).collect();
            let mut last = vec![0; rank];
            last[rank - 2] = 2;
            last[rank - 1] = 2;
            s.push(last);
            s
        }
        Family::E6 | Family::E7 | Family::E8 => E8_SIMPLE_DOUBLED[..rank]
            .iter()
            .map(|r| r.to_vec())
            .collect(),
        Family::F4 => F4_SIMPLE_DOUBLED.iter().map(|r| r.to_vec()).collect(),
        Family::G2 => G2_SIMPLE_DOUBLED.iter().map(|r| r.to_vec()).collect(),
    }
}

fn ip_i(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<T: Real> RootSystem<T> {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        // re-validate (also covers direct callers)
        Family::parse_with_rank(&family.to_string(), rank)?;
        let simple = standard_simple_doubled(family, rank);
        let normalization = if family == Family::A && rank == 1 {
            T::lit(0.5)
        } else {
            T::one()
        };
        Self::from_simple_doubled(family, simple, normalization)
    }

    fn from_simple_doubled(
        family: Family,
        simple: Vec<Vec<i64>>,
        normalization: T,
    ) -> Result<Self> {
        let r = simple.len();
        let mut pairing = vec![vec![0i64; r]; r];
        for i in 0..r {
            let nii = ip_i(&simple[i], &simple[i]);
            for j in 0..r {
                let num = 2 * ip_i(&simple[j], &simple[i]);
                if num % nii != 0 {
                    return Err(Error::Unsupported {
                        family: family.to_string(),
                        rank: r,
                    });
                }
                pairing[i][j] = num / nii;
            }
        }

        // closure of the simple roots under the simple reflections
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut queue = VecDeque::new();
        for i in 0..r {
            let mut e = vec![0; r];
            e[i] = 1;
            seen.insert(e.clone());
            queue.push_back(e);
        }
        while let Some(c) = queue.pop_front() {
            for i in 0..r {
                let s = reflect_simple(&pairing, i, &c);
                if seen.insert(s.clone()) {
                    queue.push_back(s);
                }
            }
        }
        let mut positive: Vec<Vec<i64>> = Vec::new();
        for c in &seen {
            let nonneg = c.iter().all(|&x| x >= 0);
            let nonpos = c.iter().all(|&x| x <= 0);
            if nonneg {
                positive.push(c.clone());
            } else if !nonpos {
                return Err(Error::Unsupported {
                    family: family.to_string(),
                    rank: r,
                });
            }
        }
        positive.sort_by(|a, b| {
            let ha: i64 = a.iter().sum();
            let hb: i64 = b.iter().sum();
            ha.cmp(&hb).then_with(|| b.cmp(a))
        });
        // reducedness: no root is twice another
        let posset: HashSet<&Vec<i64>> = positive.iter().collect();
        for p in &positive {
            let d: Vec<i64> = p.iter().map(|x| 2 * x).collect();
            if posset.contains(&d) {
                return Err(Error::NonReduced(family.to_string()));
            }
        }

        let gram: Vec<Vec<T>> = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| normalization * T::from_i(ip_i(&simple[i], &simple[j])) / T::lit(4.0))
                    .collect()
            })
            .collect();
        let chol_t = cholesky_upper(&gram);
        let simple_idx = (0..r)
            .map(|i| {
                positive
                    .iter()
                    .position(|p| p.iter().enumerate().all(|(k, &x)| x == (k == i) as i64))
                    .expect("simple root present")
            })
            .collect();

        let mut rs = RootSystem {
            family,
            rank: r,
            normalization,
            simple_ambient2: simple,
            pairing,
            positive,
            gram,
            chol_t,
            pos_ortho: Vec::new(),
            pos_norm2: Vec::new(),
            orbit: Vec::new(),
            simple_idx,
        };
        rs.pos_ortho = rs.positive.iter().map(|c| rs.to_ortho_int(c)).collect();
        rs.pos_norm2 = rs.pos_ortho.iter().map(|v| dot(v, v)).collect();
        let max_norm = rs
            .pos_norm2
            .iter()
            .fold(T::zero(), |a, &b| if b > a { b } else { a });
        rs.orbit = rs
            .pos_norm2
            .iter()
            .map(|&n| usize::from((n - max_norm).abs() > T::lit(1e-9) * max_norm))
            .collect();
        Ok(rs)
    }

    pub fn num_positive(&self) -> usize {
        self.positive.len()
    }

    /// Total number of roots `|Σ|`.
    pub fn num_roots(&self) -> usize {
        2 * self.positive.len()
    }

    /// Positive roots in simple-root coordinates.
    pub fn positive_roots(&self) -> &[Vec<i64>] {
        &self.positive
    }

    /// All roots (positive then negative) in simple-root coordinates.
    pub fn all_roots(&self) -> Vec<Vec<i64>> {
        let mut v = self.positive.clone();
        v.extend(self.positive.iter().map(|p| p.iter().map(|x| -x).collect()));
        v
    }

    /// Orthonormal coordinates of the `i`-th positive root.
    pub fn root(&self, i: usize) -> &[T] {
        &self.pos_ortho[i]
    }

    /// `⟨α,α⟩` of the `i`-th positive root.
    pub fn root_norm2(&self, i: usize) -> T {
        self.pos_norm2[i]
    }

    /// Orbit label (0 long, 1 short) of the `i`-th positive root.
    pub fn orbit_of(&self, i: usize) -> usize {
        self.orbit[i]
    }

    /// Number of W-orbits of roots (1 or 2 for irreducible systems).
    pub fn num_orbits(&self) -> usize {
        self.orbit.iter().copied().max().unwrap_or(0) + 1
    }

    /// Index into the positive roots of the `j`-th simple root.
    pub fn simple_index(&self, j: usize) -> usize {
        self.simple_idx[j]
    }

    /// Orthonormal coordinates of the `j`-th simple root.
    pub fn simple_root(&self, j: usize) -> &[T] {
        &self.pos_ortho[self.simple_idx[j]]
    }

    pub fn height(&self, i: usize) -> i64 {
        self.positive[i].iter().sum()
    }

    /// Simple roots in ambient coordinates (standard realization).
    pub fn simple_roots_ambient(&self) -> Vec<Vec<f64>> {
        self.simple_ambient2
            .iter()
            .map(|v| v.iter().map(|&x| x as f64 / 2.0).collect())
            .collect()
    }

    /// Positive roots in ambient coordinates.
    pub fn positive_roots_ambient(&self) -> Vec<Vec<f64>> {
        let simple = self.simple_roots_ambient();
        let dim = simple[0].len();
        self.positive
            .iter()
            .map(|c| {
                let mut v = vec![0.0; dim];
                for (k, &ck) in c.iter().enumerate() {
                    for d in 0..dim {
                        v[d] += ck as f64 * simple[k][d];
                    }
                }
                v
            })
            .collect()
    }

    /// `2⟨α_j, α_i⟩/⟨α_i, α_i⟩` for simple roots.
    pub fn cartan_pairing(&self) -> &[Vec<i64>] {
        &self.pairing
    }

    fn to_ortho_int(&self, c: &[i64]) -> Vec<T> {
        (0..self.rank)
            .map(|i| {
                (i..self.rank).fold(T::zero(), |acc, j| acc + self.chol_t[i][j] * T::from_i(c[j]))
            })
            .collect()
    }

    /// Orthonormal coordinates of a real combination of simple roots.
    pub fn from_simple_coords(&self, c: &[T]) -> Vec<T> {
        (0..self.rank)
            .map(|i| (i..self.rank).fold(T::zero(), |acc, j| acc + self.chol_t[i][j] * c[j]))
            .collect()
    }

    /// Orthonormal coordinates of a complex combination of simple roots.
    pub fn from_simple_coords_c(&self, c: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.rank)
            .map(|i| {
                (i..self.rank).fold(Complex::new(T::zero(), T::zero()), |acc, j| {
                    acc + c[j] * self.chol_t[i][j]
                })
            })
            .collect()
    }

    /// Orthonormal coordinates of a lattice vector.
    pub fn lattice_ortho(&self, mu: &LatticeVector) -> Vec<T> {
        self.to_ortho_int(&mu.coeffs)
    }

    /// `α(H)` for the `i`-th positive root.
    pub fn alpha_at(&self, i: usize, h: &[T]) -> T {
        dot(&self.pos_ortho[i], h)
    }

    /// `λ_α = ⟨λ,α⟩/⟨α,α⟩` for the `i`-th positive root (bilinear extension).
    pub fn lambda_alpha_idx(&self, lam: &[Complex<T>], i: usize) -> Complex<T> {
        cdot(lam, &self.pos_ortho[i]) / self.pos_norm2[i]
    }

    /// Strict dominance: `α(H) > 0` for every simple root.
    pub fn is_dominant(&self, h: &[T]) -> bool {
        (0..self.rank).all(|j| dot(self.simple_root(j), h) > T::zero())
    }

    /// Smallest `α(H)` over the positive roots.
    pub fn min_alpha(&self, h: &[T]) -> T {
        (0..self.num_positive())
            .map(|i| self.alpha_at(i, h))
            .fold(T::infinity(), |a, b| if b < a { b } else { a })
    }

    pub fn check_dim(&self, module: &'static str, got: usize) -> Result<()> {
        if got != self.rank {
            return Err(Error::Dimension {
                module,
                expected: self.rank,
                got,
            });
        }
        Ok(())
    }

    /// Reflection of a real vector in the hyperplane of the `i`-th positive root.
    pub fn reflect(&self, i: usize, v: &[T]) -> Vec<T> {
        let a = &self.pos_ortho[i];
        let k = T::lit(2.0) * dot(v, a) / self.pos_norm2[i];
        v.iter().zip(a).map(|(x, y)| *x - k * *y).collect()
    }

    /// `W`-orbit representative of `H` in the closed positive chamber and
    /// an element `w` (as a reflection word in positive-root indices) with
    /// `w·H` dominant.
    pub fn dominant_rep(&self, h: &[T]) -> Vec<T> {
        self.dominant_rep_in(h, &(0..self.rank).collect::<Vec<_>>())
    }

    /// Representative of `H` under the parabolic subgroup generated by the
    /// given simple reflections with `α_j(H) ≥ 0` for those `j`.
    pub fn dominant_rep_in(&self, h: &[T], simple: &[usize]) -> Vec<T> {
        let mut v = h.to_vec();
        // bounded by the length of the longest element
        for _ in 0..(4 * self.num_positive() + 8) {
            let mut changed = false;
            for &j in simple {
                let idx = self.simple_idx[j];
                if self.alpha_at(idx, &v) < T::zero() {
                    v = self.reflect(idx, &v);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        v
    }
}

fn reflect_simple(pairing: &[Vec<i64>], i: usize, c: &[i64]) -> Vec<i64> {
    let k: i64 = c.iter().zip(&pairing[i]).map(|(x, p)| x * p).sum();
    let mut out = c.to_vec();
    out[i] -= k;
    out
}

fn cholesky_upper<T: Real>(g: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = g.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // transpose
    (0..n).map(|i| (0..n).map(|j| l[j][i]).collect()).collect()
}

fn invert_upper<T: Real>(u: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = u.len();
    let mut inv = vec![vec![T::zero(); n]; n];
    for col in 0..n {
        for i in (0..n).rev() {
            let mut s = if i == col { T::one() } else { T::zero() };
            for k in i + 1..n {
                s -= u[i][k] * inv[k][col];
            }
            inv[i][col] = s / u[i][i];
        }
    }
    inv
}

/// Subset Θ of the simple roots (0-based indices, sorted, deduplicated).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaSet {
    indices: Vec<usize>,
}

impl ThetaSet {
    pub fn full(rank: usize) -> Self {
        ThetaSet {
            indices: (0..rank).collect(),
        }
    }

    pub fn empty() -> Self {
        ThetaSet { indices: vec![] }
    }

    /// Builds Θ from 0-based indices.
    pub fn from_indices(rank: usize, idx: &[usize]) -> Result<Self> {
        let mut v = idx.to_vec();
        for &i in &v {
            if i >= rank {
                return Err(Error::InvalidTheta { index: i, rank });
            }
        }
        v.sort_unstable();
        v.dedup();
        Ok(ThetaSet { indices: v })
    }

    /// Complement `Π ∖ {β}` of a single simple root.
    pub fn all_but(rank: usize, beta: usize) -> Result<Self> {
        if beta >= rank {
            return Err(Error::InvalidTheta { index: beta, rank });
        }
        Ok(ThetaSet {
            indices: (0..rank).filter(|&i| i != beta).collect(),
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn is_full(&self, rank: usize) -> bool {
        self.indices.len() == rank
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn check(&self, rank: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= rank) {
            Some(&i) => Err(Error::InvalidTheta { index: i, rank }),
            None => Ok(()),
        }
    }
}

/// Weyl group element.
#[derive(Debug, Clone, Serialize)]
pub struct WeylElement<T: Real> {
    /// Integer matrix (row-major) acting on simple-root coordinates.
    pub matrix: Vec<i64>,
    /// The same element acting on orthonormal coordinates (row-major).
    pub ortho: Vec<T>,
    pub det: i8,
    /// Reduced word in the simple reflections (0-based).
    pub word: Vec<usize>,
}

impl<T: Real> WeylElement<T> {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let r = v.len();
        (0..r)
            .map(|i| (0..r).fold(T::zero(), |a, j| a + self.ortho[i * r + j] * v[j]))
            .collect()
    }

    pub fn apply_c(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let r = v.len();
        (0..r)
            .map(|i| {
                (0..r).fold(Complex::new(T::zero(), T::zero()), |a, j| {
                    a + v[j] * self.ortho[i * r + j]
                })
            })
            .collect()
    }

    /// Action on simple-root coordinates.
    pub fn apply_int(&self, c: &[i64]) -> Vec<i64> {
        let r = c.len();
        (0..r)
            .map(|i| (0..r).map(|j| self.matrix[i * r + j] * c[j]).sum())
            .collect()
    }

    /// `w⁻¹` applied to simple-root coordinates.
    pub fn apply_inv_int(&self, pairing: &[Vec<i64>], c: &[i64]) -> Vec<i64> {
        self.word
            .iter()
            .fold(c.to_vec(), |acc, &i| reflect_simple(pairing, i, &acc))
    }
}

fn mat_mul_i(a: &[i64], b: &[i64], r: usize) -> Vec<i64> {
    let mut out = vec![0; r * r];
    for i in 0..r {
        for k in 0..r {
            let aik = a[i * r + k];
            if aik == 0 {
                continue;
            }
            for j in 0..r {
                out[i * r + j] += aik * b[k * r + j];
            }
        }
    }
    out
}

impl<T: Real> RootSystem<T> {
    fn simple_reflection_matrix(&self, i: usize) -> Vec<i64> {
        let r = self.rank;
        let mut m = vec![0; r * r];
        for k in 0..r {
            m[k * r + k] = 1;
        }
        for j in 0..r {
            m[i * r + j] -= self.pairing[i][j];
        }
        m
    }

    fn ortho_of_matrix(&self, m: &[i64]) -> Vec<T> {
        // Lᵀ M (Lᵀ)⁻¹
        let r = self.rank;
        let inv = invert_upper(&self.chol_t);
        let mut lm = vec![T::zero(); r * r];
        for i in 0..r {
            for j in 0..r {
                lm[i * r + j] =
                    (0..r).fold(T::zero(), |a, k| a + self.chol_t[i][k] * T::from_i(m[k * r + j]));
            }
        }
        let mut out = vec![T::zero(); r * r];
        for i in 0..r {
            for j in 0..r {
                out[i * r + j] = (0..r).fold(T::zero(), |a, k| a + lm[i * r + k] * inv[k][j]);
            }
        }
        out
    }

    fn closure(&self, gens: &[usize], cap: usize) -> Result<Vec<WeylElement<T>>> {
        let r = self.rank;
        let mut id = vec![0; r * r];
        for k in 0..r {
            id[k * r + k] = 1;
        }
        let refl: HashMap<usize, Vec<i64>> = gens
            .iter()
            .map(|&i| (i, self.simple_reflection_matrix(i)))
            .collect();
        let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut out: Vec<(Vec<i64>, i8, Vec<usize>)> = vec![(id.clone(), 1, vec![])];
        seen.insert(id, 0);
        let mut head = 0;
        while head < out.len() {
            let (m, det, word) = out[head].clone();
            head += 1;
            for &i in gens {
                let next = mat_mul_i(&m, &refl[&i], r);
                if !seen.contains_key(&next) {
                    if out.len() >= cap {
                        return Err(Error::WeylCapExceeded {
                            order: out.len() + 1,
                            cap,
                        });
                    }
                    let mut w = word.clone();
                    w.push(i);
                    seen.insert(next.clone(), out.len());
                    out.push((next, -det, w));
                }
            }
        }
        Ok(out
            .into_iter()
            .map(|(matrix, det, word)| WeylElement {
                ortho: self.ortho_of_matrix(&matrix),
                matrix,
                det,
                word,
            })
            .collect())
    }
}

/// Enumerates `W` (identity first) with the default cap.
pub fn weyl_group<T: Real>(rs: &RootSystem<T>) -> Result<Vec<WeylElement<T>>> {
    weyl_group_with_cap(rs, DEFAULT_WEYL_CAP)
}

/// Enumerates `W` by breadth-first closure over products of simple reflections.
pub fn weyl_group_with_cap<T: Real>(
    rs: &RootSystem<T>,
    cap: usize,
) -> Result<Vec<WeylElement<T>>> {
    let order = rs.family.weyl_order(rs.rank);
    if order > cap as u128 {
        return Err(Error::WeylCapExceeded {
            order: order.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    rs.closure(&(0..rs.rank).collect::<Vec<_>>(), cap)
}

/// Parabolic data attached to Θ.
#[derive(Debug, Clone)]
pub struct Parabolic<T: Real> {
    pub theta: ThetaSet,
    /// `W_Θ`, identity first.
    pub subgroup: Vec<WeylElement<T>>,
    /// Minimal-length representatives of the right cosets `W_Θ\W`.
    pub coset_reps: Vec<WeylElement<T>>,
    /// Indices (into the positive roots) of `⟨Θ⟩⁺`.
    pub theta_roots: Vec<usize>,
    /// Indices of `Σ⁺ ∖ ⟨Θ⟩⁺`.
    pub complement_roots: Vec<usize>,
    pub weyl_order: usize,
}

/// Indices of positive roots lying in `ℤΘ` and of the remaining ones.
pub fn theta_root_split<T: Real>(rs: &RootSystem<T>, th: &ThetaSet) -> (Vec<usize>, Vec<usize>) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (i, c) in rs.positive_roots().iter().enumerate() {
        let in_span = c
            .iter()
            .enumerate()
            .all(|(j, &x)| x == 0 || th.contains(j));
        if in_span {
            inside.push(i);
        } else {
            outside.push(i);
        }
    }
    (inside, outside)
}

/// `W_Θ` only, without enumerating `W`.
pub fn parabolic_subgroup<T: Real>(
    rs: &RootSystem<T>,
    th: &ThetaSet,
) -> Result<Vec<WeylElement<T>>> {
    th.check(rs.rank)?;
    rs.closure(th.indices(), DEFAULT_WEYL_CAP)
}

pub fn parabolic<T: Real>(rs: &RootSystem<T>, th: &ThetaSet) -> Result<Parabolic<T>> {
    th.check(rs.rank)?;
    let w = weyl_group(rs)?;
    let subgroup = rs.closure(th.indices(), DEFAULT_WEYL_CAP)?;
    let coset_reps: Vec<_> = w
        .iter()
        .filter(|el| {
            th.indices().iter().all(|&i| {
                let mut e = vec![0; rs.rank];
                e[i] = 1;
                el.apply_inv_int(&rs.pairing, &e).iter().all(|&x| x >= 0)
            })
        })
        .cloned()
        .collect();
    let (theta_roots, complement_roots) = theta_root_split(rs, th);
    debug_assert_eq!(subgroup.len() * coset_reps.len(), w.len());
    Ok(Parabolic {
        theta: th.clone(),
        subgroup,
        coset_reps,
        theta_roots,
        complement_roots,
        weyl_order: w.len(),
    })
}

/// `λ_α = ⟨λ,α⟩/⟨α,α⟩` for an arbitrary root given in orthonormal coordinates.
pub fn lambda_alpha<T: Real>(lam: &[Complex<T>], alpha: &[T]) -> Complex<T> {
    cdot(lam, alpha) / dot(alpha, alpha)
}

/// Element `μ = Σ nⱼαⱼ` of the positive lattice Λ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVector {
    pub coeffs: Vec<i64>,
}

impl LatticeVector {
    pub fn new(coeffs: Vec<i64>) -> Self {
        debug_assert!(coeffs.iter().all(|&x| x >= 0));
        LatticeVector { coeffs }
    }

    pub fn zero(rank: usize) -> Self {
        LatticeVector {
            coeffs: vec![0; rank],
        }
    }

    pub fn height(&self) -> i64 {
        self.coeffs.iter().sum()
    }
}

impl Deref for LatticeVector {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.coeffs
    }
}

/// Number of lattice points of height at most `n` in rank `r`: `C(n + r, r)`.
pub fn lattice_count(rank: usize, max_height: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 1..=rank as u128 {
        c = c * (max_height as u128 + k) / k;
    }
    c
}

/// All `μ ∈ Λ` with height `≤ max_height`, sorted by height then lexicographically.
pub fn lattice_enumerate<T: Real>(
    rs: &RootSystem<T>,
    max_height: usize,
) -> Result<Vec<LatticeVector>> {
    lattice_enumerate_rank(rs.rank, max_height, DEFAULT_LATTICE_CAP)
}

pub fn lattice_enumerate_rank(
    rank: usize,
    max_height: usize,
    cap: usize,
) -> Result<Vec<LatticeVector>> {
    let count = lattice_count(rank, max_height);
    if count > cap as u128 {
        return Err(Error::LatticeCapExceeded {
            count: count.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    for h in 0..=max_height as i64 {
        let mut slab = Vec::new();
        compositions(rank, h, &mut vec![0; rank], 0, &mut slab);
        slab.sort();
        out.extend(slab.into_iter().map(LatticeVector::new));
    }
    Ok(out)
}

fn compositions(rank: usize, remaining: i64, cur: &mut Vec<i64>, pos: usize, out: &mut Vec<Vec<i64>>) {
    if pos + 1 == rank {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    if rank == 0 {
        if remaining == 0 {
            out.push(vec![]);
        }
        return;
    }
    for v in 0..=remaining {
        cur[pos] = v;
        compositions(rank, remaining - v, cur, pos + 1, out);
    }
}

/// Membership in 𝔞_Θ via `α(H) > 0` for all `α ∈ Σ⁺ ∖ ⟨Θ⟩⁺`.
pub fn a_theta_contains<T: Real>(rs: &RootSystem<T>, th: &ThetaSet, h: &[T]) -> bool {
    let (_, outside) = theta_root_split(rs, th);
    outside.iter().all(|&i| rs.alpha_at(i, h) > T::zero())
}

/// Spectral parameter λ ∈ 𝔞*_ℂ in orthonormal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter<T: Real>(pub Vec<Complex<T>>);

impl<T: Real> Deref for SpectralParameter<T> {
    type Target = [Complex<T>];
    fn deref(&self) -> &[Complex<T>] {
        &self.0
    }
}

impl<T: Real> SpectralParameter<T> {
    pub fn real(v: &[T]) -> Self {
        SpectralParameter(v.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn neg(&self) -> Self {
        SpectralParameter(self.0.iter().map(|z| -*z).collect())
    }
}

/// Torus point `H = log a ∈ 𝔞` in orthonormal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint<T: Real>(pub Vec<T>);

impl<T: Real> Deref for TorusPoint<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}
