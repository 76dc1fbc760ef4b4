//! Sampled SCGF and rate curves, their Legendre transforms and file output.
//!
//! CSV columns are stable:
//! * SCGF: `lambda,value,stderr,low_ess,method,N,tau`
//! * rate: `j,value,method,N,tau`
//!
//! JSON sidecars wrap a curve with [`Provenance`] and validate against
//! [`CURVE_SCHEMA`].

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::golden_section_min;

pub const CURVE_SCHEMA: &str = include_str!("../schema/curve.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMethod {
    Gaussian,
    Riccati,
    Empirical,
    Limit,
    Legendre,
}

impl CurveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMethod::Gaussian => "gaussian",
            CurveMethod::Riccati => "riccati",
            CurveMethod::Empirical => "empirical",
            CurveMethod::Limit => "limit",
            CurveMethod::Legendre => "legendre",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScgfPoint {
    pub lambda: f64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// Exponential average carried by fewer than ten replicas.
    #[serde(default)]
    pub low_ess: bool,
}

impl ScgfPoint {
    pub fn exact(lambda: f64, value: f64) -> Self {
        ScgfPoint { lambda, value, stderr: None, low_ess: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScgfCurve {
    pub method: CurveMethod,
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: f64,
    pub points: Vec<ScgfPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub j: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub method: CurveMethod,
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: f64,
    pub points: Vec<RatePoint>,
    /// Input points dropped by the lower convex hull.
    #[serde(default)]
    pub convexified: usize,
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

impl ScgfCurve {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "value", "stderr", "low_ess", "method", "N", "tau"])?;
        for p in &self.points {
            w.write_record([
                fmt_f64(p.lambda),
                fmt_f64(p.value),
                p.stderr.map(fmt_f64).unwrap_or_default(),
                p.low_ess.to_string(),
                self.method.as_str().to_string(),
                self.n.to_string(),
                fmt_f64(self.tau),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl RateCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "value", "method", "N", "tau"])?;
        for p in &self.points {
            w.write_record([
                fmt_f64(p.j),
                fmt_f64(p.value),
                self.method.as_str().to_string(),
                self.n.to_string(),
                fmt_f64(self.tau),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Inputs of a computation plus a SHA-256 digest of their canonical JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub inputs: serde_json::Value,
    pub content_hash: String,
}

impl Provenance {
    pub fn new(inputs: &impl Serialize) -> Result<Self> {
        // serde_json::Value keeps object keys sorted, so the encoding is canonical
        let inputs = serde_json::to_value(inputs)?;
        let digest = Sha256::digest(serde_json::to_vec(&inputs)?);
        Ok(Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            inputs,
            content_hash: format!("sha256:{}", hex::encode(digest)),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveData {
    Scgf(ScgfCurve),
    Rate(RateCurve),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveDocument {
    pub provenance: Provenance,
    pub curve: CurveData,
}

impl CurveDocument {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

/// Where a rate function comes from.
#[derive(Clone, Debug)]
pub enum RateSource {
    /// Discrete transform of a sampled SCGF.
    Sampled(ScgfCurve),
    /// Large-`N` quadratic `(j - kappa tau')^2 / (4 N kappa T^2)`.
    Limit { n: usize, kappa: f64, tau_prime: f64, temperature: f64 },
}

/// Indices of the lower convex hull of points sorted by `x`.
fn lower_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// `I(j) = sup_lambda (lambda j - F(lambda))` where `j = N x` for the time
/// averaged current `x` and `F` is the SCGF of `N lambda int J`.
pub fn rate_function(source: &RateSource, j_grid: &[f64]) -> Result<RateCurve> {
    if j_grid.is_empty() || j_grid.iter().any(|j| !j.is_finite()) {
        return Err(Error::Config("j grid must be non-empty and finite".into()));
    }
    match source {
        RateSource::Limit { n, kappa, tau_prime, temperature } => {
            if *n == 0 || !(*kappa > 0.0) || !(*temperature > 0.0) {
                return Err(Error::Config("limit rate needs N >= 1, kappa > 0, T > 0".into()));
            }
            let denom = 4.0 * *n as f64 * kappa * temperature * temperature;
            let points = j_grid
                .iter()
                .map(|&j| RatePoint { j, value: (j - kappa * tau_prime).powi(2) / denom })
                .collect();
            Ok(RateCurve { method: CurveMethod::Limit, n: *n, tau: tau_prime / *n as f64, points, convexified: 0 })
        }
        RateSource::Sampled(curve) => {
            let mut pts: Vec<(f64, f64)> = curve
                .points
                .iter()
                .filter(|p| p.lambda.is_finite() && p.value.is_finite())
                .map(|p| (p.lambda, p.value))
                .collect();
            if pts.len() < 2 {
                return Err(Error::Config("SCGF curve needs at least two finite points".into()));
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let hull = lower_hull(&xs, &ys);
            let points = j_grid
                .iter()
                .map(|&j| {
                    let value = hull.iter().map(|&i| xs[i] * j - ys[i]).fold(f64::NEG_INFINITY, f64::max);
                    RatePoint { j, value }
                })
                .collect();
            Ok(RateCurve { method: CurveMethod::Legendre, n: curve.n, tau: curve.tau, points, convexified: xs.len() - hull.len() })
        }
    }
}

/// Legendre transform of an SCGF given as a function, maximized by golden
/// section on `[lo, hi]`. Evaluation errors count as `F = +inf`.
pub fn legendre_of_fn(scgf: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, j: f64) -> f64 {
    let (_, neg) = golden_section_min(
        |l| match scgf(l) {
            Ok(f) if f.is_finite() => f - l * j,
            _ => f64::INFINITY,
        },
        lo,
        hi,
        1e-12,
    );
    -neg
}
