//! Job specification: command-line flags and the equivalent JSON config.

use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Problem with the job itself (exit code 1).
#[derive(Debug)]
pub struct SpecError(pub String);

impl<E: std::fmt::Display> From<E> for SpecError {
    fn from(e: E) -> Self {
        SpecError(e.to_string())
    }
}

pub fn bad<T>(msg: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError(msg.into()))
}

/// Every flag is optional so that a `--config` file can supply it instead.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct JobArgs {
    /// JSON file with the same fields as these flags; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Root system family (A, B, C, D, E6, E7, E8, F4, G2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Multiplicity: one value, or one per Weyl orbit of roots ("1,2").
    /// For `atlas`, the multiplicity filter.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    /// `full`, `empty`, or simple-root indices such as `0,2`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,

    /// Spectral parameters: vectors separated by `;`, components by `,`,
    /// complex numbers as `a+bi`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    /// Imaginary-axis tensor grid `start:stop:count`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<String>,
    /// Torus points, same list syntax as `--lambda` (real).
    #[arg(long = "H", allow_hyphen_values = true)]
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    /// Tensor grid `start:stop:count` in each coordinate.
    #[arg(long = "H-grid", allow_hyphen_values = true)]
    #[serde(rename = "H_grid", skip_serializing_if = "Option::is_none")]
    pub h_grid: Option<String>,
    /// Series truncation order.
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// `eval` quantity: phi, ho, e-theta, Phi, c, c-plus, c-minus, delta, Delta.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantity: Option<String>,

    /// Bump test function: center, radius, sharpness.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<f64>,
    /// Average the bump over W_Θ (default true).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetrize: Option<bool>,
    /// Sampled test function: CSV rows `x_1,...,x_r,value`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function_csv: Option<PathBuf>,
    /// Reference bump used for κ calibration.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_center: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_radius: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_sharpness: Option<f64>,

    /// Radial quadrature nodes per dimension for `transform` and `pw-check`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Radial nodes per dimension for adaptive inversion grids.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_dim: Option<usize>,
    /// Largest spectral cutoff radius tried.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_radius: Option<f64>,
    /// Inversion constant; calibrated (and cached) when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Radius of the ball used as the Paley–Wiener body.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body_radius: Option<f64>,

    /// Atlas filters.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<i64>,
    /// Dump the whole atlas.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export: Option<bool>,

    #[arg(short, long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// `json` (default) or `csv`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl JobArgs {
    /// Loads `--config` (if any) and lays the command-line flags over it.
    pub fn resolve(self) -> Result<JobArgs, SpecError> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError(format!("config {}: {e}", path.display())))?;
        let mut base: JobArgs = serde_json::from_str(&text)
            .map_err(|e| SpecError(format!("config {}: {e}", path.display())))?;
        let top = &self;
        overlay!(base, top; family, rank, m, theta, lambda, lambda_grid, h, h_grid, order, quantity,
            center, radius, sharpness, symmetrize, function_csv, ref_center, ref_radius, ref_sharpness,
            nodes, per_dim, max_radius, kappa, body_radius, class, sigma, n, j, export, output, format);
        Ok(base)
    }

    pub fn family(&self) -> &str {
        self.family.as_deref().unwrap_or("A")
    }

    pub fn rank(&self) -> usize {
        self.rank.unwrap_or(1)
    }

    pub fn order(&self) -> usize {
        self.order.unwrap_or(40)
    }

    pub fn csv_output(&self) -> Result<bool, SpecError> {
        match self.format.as_deref().unwrap_or("json") {
            "json" => Ok(false),
            "csv" => Ok(true),
            other => bad(format!("unknown format {other:?} (json or csv)")),
        }
    }
}

pub fn parse_real(s: &str) -> Result<f64, SpecError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| SpecError(format!("not a number: {s:?}")))
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<Complex64, SpecError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || SpecError(format!("not a complex number: {s:?}"));
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(t.parse().map_err(|_| err())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    Ok(Complex64::new(
        re.parse().map_err(|_| err())?,
        im.parse().map_err(|_| err())?,
    ))
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(';').map(str::trim).filter(|v| !v.is_empty())
}

fn parse_vectors<V>(
    s: &str,
    rank: usize,
    what: &str,
    item: impl Fn(&str) -> Result<V, SpecError>,
) -> Result<Vec<Vec<V>>, SpecError> {
    let out = split_list(s)
        .map(|v| v.split(',').map(&item).collect::<Result<Vec<V>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return bad(format!("empty {what} list"));
    }
    if let Some(v) = out.iter().find(|v| v.len() != rank) {
        return bad(format!("{what} has {} components, rank is {rank}", v.len()));
    }
    Ok(out)
}

/// `start:stop:count` as `count` evenly spaced values.
pub fn parse_range(s: &str) -> Result<Vec<f64>, SpecError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return bad(format!("grid {s:?} is not start:stop:count"));
    };
    let (a, b) = (parse_real(a)?, parse_real(b)?);
    let n: usize = n.trim().parse().map_err(|_| SpecError(format!("bad count in {s:?}")))?;
    match n {
        0 => bad(format!("grid {s:?} has no points")),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
    }
}

fn tensor(axis: &[f64], rank: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..rank {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(*x);
                    q
                })
            })
            .collect();
    }
    out
}

impl JobArgs {
    pub fn lambdas(&self) -> Result<Vec<Vec<Complex64>>, SpecError> {
        let r = self.rank();
        match (&self.lambda, &self.lambda_grid) {
            (Some(_), Some(_)) => bad("give either --lambda or --lambda-grid"),
            (Some(s), None) => parse_vectors(s, r, "lambda", parse_complex),
            (None, Some(g)) => Ok(tensor(&parse_range(g)?, r)
                .into_iter()
                .map(|v| v.into_iter().map(|y| Complex64::new(0.0, y)).collect())
                .collect()),
            (None, None) => bad("missing --lambda or --lambda-grid"),
        }
    }

    pub fn points(&self) -> Result<Vec<Vec<f64>>, SpecError> {
        let r = self.rank();
        match (&self.h, &self.h_grid) {
            (Some(_), Some(_)) => bad("give either --H or --H-grid"),
            (Some(s), None) => parse_vectors(s, r, "H", parse_real),
            (None, Some(g)) => Ok(tensor(&parse_range(g)?, r)),
            (None, None) => bad("missing --H or --H-grid"),
        }
    }

    pub fn real_vector(s: &str, rank: usize, what: &str) -> Result<Vec<f64>, SpecError> {
        let v = s.split(',').map(parse_real).collect::<Result<Vec<_>, _>>()?;
        if v.len() != rank {
            return bad(format!("{what} has {} components, rank is {rank}", v.len()));
        }
        Ok(v)
    }
}
