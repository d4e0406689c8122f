//! Classification data for symmetric pairs with even multiplicities.
//!
//! The tables are stored as parameterized families (in `n` and sometimes `j`)
//! and expanded on demand by [`SymmetricPairRecord::concretize`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const ATLAS_JSON: &[u8] = include_bytes!("../data/atlas.json");
const ATLAS_SHA256: &str = "51eeb261df90c32af199c4c55c06d898d85668babc8901dd368fbf66ba0fdf46";

pub const RIEMANNIAN_COUNT: usize = 12;
pub const NCC_COUNT: usize = 10;
pub const KEPS_II_COUNT: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Klass {
    Riemannian,
    Ncc,
    KepsIi,
}

impl Klass {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "riemannian" | "r" => Some(Klass::Riemannian),
            "ncc" => Some(Klass::Ncc),
            "keps_ii" | "kepsii" | "kepsilon_ii" | "k_eps_ii" => Some(Klass::KepsIi),
            _ => None,
        }
    }

    pub fn table(self) -> u8 {
        match self {
            Klass::Riemannian => 1,
            Klass::Ncc => 2,
            Klass::KepsIi => 3,
        }
    }
}

/// `a*n + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinExpr {
    pub n: i64,
    pub c: i64,
}

impl LinExpr {
    pub fn is_constant(&self) -> bool {
        self.n == 0
    }

    pub fn eval(&self, n: i64) -> i64 {
        self.n * n + self.c
    }

    pub fn constant(&self) -> Option<i64> {
        self.is_constant().then_some(self.c)
    }
}

impl std::fmt::Display for LinExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.n, self.c) {
            (0, c) => write!(f, "{c}"),
            (a, 0) => write!(f, "{}n", if a == 1 { String::new() } else { a.to_string() }),
            (a, c) => {
                let lead = if a == 1 { String::new() } else { a.to_string() };
                if c < 0 {
                    write!(f, "{lead}n-{}", -c)
                } else {
                    write!(f, "{lead}n+{c}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JMax {
    N,
    HalfN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JRange {
    pub min: i64,
    pub max: JMax,
}

impl JRange {
    pub fn upper(&self, n: i64) -> i64 {
        match self.max {
            JMax::N => n,
            JMax::HalfN => n / 2,
        }
    }
}

/// One table row, possibly a family in `n` (and `j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPairRecord {
    pub table: u8,
    pub klass: Klass,
    /// Label template; `{expr}` placeholders are linear in `n` and `j`.
    pub g: String,
    pub h: String,
    /// Fixed-point algebra; empty for Riemannian rows.
    pub fixed: String,
    pub sigma_family: String,
    pub rank: LinExpr,
    pub multiplicity: LinExpr,
    pub n_min: Option<i64>,
    pub j_range: Option<JRange>,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsomorphismRecord {
    pub klass: Klass,
    pub left_pair: [String; 2],
    pub right_pair: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atlas {
    pub schema: u32,
    pub records: Vec<SymmetricPairRecord>,
    pub isomorphisms: Vec<IsomorphismRecord>,
}

/// A record expanded at concrete parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcretePair {
    pub klass: Klass,
    pub g: String,
    pub h: String,
    pub fixed: String,
    pub sigma_family: String,
    pub rank: usize,
    pub multiplicity: u32,
    pub n: Option<i64>,
    pub j: Option<i64>,
}

impl ConcretePair {
    /// Root-system label as accepted by `build_root_system` with `self.rank`.
    pub fn sigma_type(&self) -> String {
        if self.sigma_family.len() == 1 {
            format!("{}{}", self.sigma_family, self.rank)
        } else {
            self.sigma_family.clone()
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parses an embedded atlas document after verifying its checksum.
pub fn parse_atlas(bytes: &[u8], expected_sha256: &str) -> Result<Atlas> {
    let digest = sha256_hex(bytes);
    if digest != expected_sha256 {
        return Err(Error::Atlas(format!(
            "embedded data checksum mismatch: {digest} != {expected_sha256}"
        )));
    }
    let atlas: Atlas = serde_json::from_slice(bytes)
        .map_err(|e| Error::Atlas(format!("malformed embedded data: {e}")))?;
    let count = |k| atlas.records.iter().filter(|r| r.klass == k).count();
    for (k, want) in [
        (Klass::Riemannian, RIEMANNIAN_COUNT),
        (Klass::Ncc, NCC_COUNT),
        (Klass::KepsIi, KEPS_II_COUNT),
    ] {
        if count(k) != want {
            return Err(Error::Atlas(format!(
                "{k:?}: expected {want} records, found {}",
                count(k)
            )));
        }
    }
    for r in &atlas.records {
        if r.table != r.klass.table() {
            return Err(Error::Atlas(format!("{}/{}: table/class mismatch", r.g, r.h)));
        }
        if r.multiplicity.n % 2 != 0 || r.multiplicity.c % 2 != 0 {
            return Err(Error::Atlas(format!("{}/{}: odd multiplicity", r.g, r.h)));
        }
    }
    Ok(atlas)
}

pub fn load_atlas() -> Result<Atlas> {
    parse_atlas(ATLAS_JSON, ATLAS_SHA256)
}

/// Shared, lazily loaded copy of the embedded atlas.
pub fn atlas() -> &'static Atlas {
    static CELL: OnceLock<Atlas> = OnceLock::new();
    CELL.get_or_init(|| load_atlas().expect("embedded atlas is valid"))
}

// Tiny evaluator for label placeholders: integers, n, j, + - and implicit
// multiplication ("2n", "2(n-j)").
struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
    n: Option<i64>,
    j: Option<i64>,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<i64> {
        let mut acc = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if op == b'+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<i64> {
        let mut acc = self.atom()?;
        while matches!(self.peek(), Some(b'(' | b'n' | b'j' | b'0'..=b'9')) {
            acc *= self.atom()?;
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<i64> {
        let missing = |v: char| Error::Atlas(format!("label needs parameter {v}"));
        match self.peek() {
            Some(b'n') => {
                self.pos += 1;
                self.n.ok_or_else(|| missing('n'))
            }
            Some(b'j') => {
                self.pos += 1;
                self.j.ok_or_else(|| missing('j'))
            }
            Some(b'(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Atlas("unbalanced parenthesis in label".into()));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b'0'..=b'9') => {
                let start = self.pos;
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                Ok(digits.parse().unwrap())
            }
            _ => Err(Error::Atlas(format!(
                "bad label expression {:?}",
                String::from_utf8_lossy(self.s)
            ))),
        }
    }
}

fn eval_expr(expr: &str, n: Option<i64>, j: Option<i64>) -> Result<i64> {
    let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = ExprParser {
        s: compact.as_bytes(),
        pos: 0,
        n,
        j,
    };
    let v = p.sum()?;
    if p.pos != compact.len() {
        return Err(Error::Atlas(format!("trailing input in label expression {expr:?}")));
    }
    Ok(v)
}

/// Substitutes every `{expr}` in a label template.
pub fn render_label(template: &str, n: Option<i64>, j: Option<i64>) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| Error::Atlas(format!("unterminated placeholder in {template:?}")))?;
        out.push_str(&eval_expr(&rest[open + 1..open + close], n, j)?.to_string());
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl SymmetricPairRecord {
    /// True when the row is a family in `n`.
    pub fn is_family(&self) -> bool {
        self.n_min.is_some()
    }

    pub fn has_j(&self) -> bool {
        self.j_range.is_some()
    }

    pub fn parameter_constraints(&self) -> String {
        let mut parts = Vec::new();
        if let Some(m) = self.n_min {
            parts.push(format!("n>={m}"));
        }
        if let Some(jr) = self.j_range {
            let hi = match jr.max {
                JMax::N => "n",
                JMax::HalfN => "[n/2]",
            };
            parts.push(format!("{}<=j<={hi}", jr.min));
        }
        parts.join(", ")
    }

    /// Sigma label with symbolic rank, e.g. `A_{n-1}` or `E6`.
    pub fn sigma_label(&self) -> String {
        if self.sigma_family.len() > 1 {
            self.sigma_family.clone()
        } else if self.rank.is_constant() {
            format!("{}{}", self.sigma_family, self.rank.c)
        } else {
            format!("{}_{{{}}}", self.sigma_family, self.rank)
        }
    }

    pub fn rank_at(&self, n: Option<i64>) -> Option<i64> {
        self.rank.constant().or_else(|| n.map(|n| self.rank.eval(n)))
    }

    pub fn multiplicity_at(&self, n: Option<i64>) -> Option<i64> {
        self.multiplicity
            .constant()
            .or_else(|| n.map(|n| self.multiplicity.eval(n)))
    }

    /// Whether `n` lies in the family's parameter range (always true for
    /// isolated rows).
    pub fn admits_n(&self, n: i64) -> bool {
        self.n_min.is_none_or(|m| n >= m)
    }

    pub fn concretize(&self, n: Option<i64>, j: Option<i64>) -> Result<ConcretePair> {
        let n = match (self.n_min, n) {
            (None, _) => None,
            (Some(m), Some(n)) if n >= m => Some(n),
            (Some(m), Some(n)) => {
                return Err(Error::Atlas(format!(
                    "{}/{}: n={n} violates n>={m}",
                    self.g, self.h
                )))
            }
            (Some(_), None) => {
                return Err(Error::Atlas(format!("{}/{}: n is required", self.g, self.h)))
            }
        };
        let j = match (self.j_range, j) {
            (None, _) => None,
            (Some(jr), Some(j)) => {
                let hi = jr.upper(n.unwrap_or(0));
                if j < jr.min || j > hi {
                    return Err(Error::Atlas(format!(
                        "{}/{}: j={j} outside {}..={hi}",
                        self.g, self.h, jr.min
                    )));
                }
                Some(j)
            }
            (Some(_), None) => {
                return Err(Error::Atlas(format!("{}/{}: j is required", self.g, self.h)))
            }
        };
        let rank = self.rank_at(n).expect("rank determined");
        let mult = self.multiplicity_at(n).expect("multiplicity determined");
        Ok(ConcretePair {
            klass: self.klass,
            g: render_label(&self.g, n, j)?,
            h: render_label(&self.h, n, j)?,
            fixed: render_label(&self.fixed, n, j)?,
            sigma_family: self.sigma_family.clone(),
            rank: rank as usize,
            multiplicity: mult as u32,
            n,
            j,
        })
    }

    /// A valid `(n, j)` for this row, the smallest allowed.
    pub fn representative_params(&self) -> (Option<i64>, Option<i64>) {
        let n = self.n_min;
        let j = self.j_range.map(|jr| jr.min);
        (n, j)
    }
}

fn split_sigma(s: &str) -> (String, Option<i64>) {
    let s = s.trim();
    let upper = s.to_ascii_uppercase();
    match upper.as_str() {
        "E6" | "E7" | "E8" | "F4" | "G2" => (upper, None),
        _ => {
            let letters: String = upper.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
            let digits = &upper[letters.len()..];
            (letters, digits.parse().ok())
        }
    }
}

/// Query filters; `None` means unconstrained.
///
/// Symbolic multiplicities (`2n`) only match when `n` is supplied. Symbolic
/// ranks match when some admissible `n` realizes the requested rank.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub klass: Option<Klass>,
    /// Family (`"A"`) or family with rank (`"A2"`, `"G2"`).
    pub sigma_type: Option<String>,
    pub multiplicity: Option<i64>,
    pub rank: Option<i64>,
    pub n: Option<i64>,
}

impl Query {
    fn rank_matches(&self, r: &SymmetricPairRecord, want: i64) -> bool {
        if let Some(n) = self.n.filter(|_| r.is_family()) {
            return r.rank_at(Some(n)) == Some(want);
        }
        if let Some(c) = r.rank.constant() {
            return c == want;
        }
        let (a, b) = (r.rank.n, r.rank.c);
        (want - b) % a == 0 && r.admits_n((want - b) / a)
    }

    pub fn matches(&self, r: &SymmetricPairRecord) -> bool {
        if self.klass.is_some_and(|k| k != r.klass) {
            return false;
        }
        if let Some(n) = self.n {
            if r.is_family() && !r.admits_n(n) {
                return false;
            }
        }
        if let Some(s) = &self.sigma_type {
            let (fam, rank) = split_sigma(s);
            if let Some(rk) = rank.filter(|_| r.sigma_family.len() == 1) {
                if fam != r.sigma_family || !self.rank_matches(r, rk) {
                    return false;
                }
            } else if fam != r.sigma_family {
                return false;
            }
        }
        if let Some(m) = self.multiplicity {
            let n = self.n.filter(|_| r.is_family());
            if r.multiplicity_at(n) != Some(m) {
                return false;
            }
        }
        if let Some(rk) = self.rank {
            if !self.rank_matches(r, rk) {
                return false;
            }
        }
        true
    }
}

impl Atlas {
    /// Matching records in table order.
    pub fn query(&self, q: &Query) -> Vec<&SymmetricPairRecord> {
        self.records.iter().filter(|r| q.matches(r)).collect()
    }

    pub fn isomorphisms_for(&self, klass: Klass) -> impl Iterator<Item = &IsomorphismRecord> {
        self.isomorphisms.iter().filter(move |i| i.klass == klass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("atlas serializes")
    }
}

pub fn query(q: &Query) -> Vec<&'static SymmetricPairRecord> {
    atlas().query(q)
}

/// Suggested Θ sets (indices into the simple roots) for a concrete pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaHint {
    pub candidates: Vec<Vec<usize>>,
    /// False when the omitted simple root is not determined by the tables.
    pub pinned: bool,
    pub note: String,
}

pub fn theta_hint(pair: &ConcretePair) -> ThetaHint {
    let r = pair.rank;
    match pair.klass {
        Klass::Riemannian => ThetaHint {
            candidates: vec![(0..r).collect()],
            pinned: true,
            note: "Riemannian: Theta is the full set of simple roots".into(),
        },
        Klass::Ncc => ThetaHint {
            candidates: (0..r)
                .map(|b| (0..r).filter(|&i| i != b).collect())
                .collect(),
            pinned: false,
            note: "NCC: Theta omits exactly one simple root; which one is not determined here"
                .into(),
        },
        Klass::KepsIi => ThetaHint {
            candidates: Vec::new(),
            pinned: false,
            note: "no hint: Theta depends on the signature, which is not modelled".into(),
        },
    }
}
