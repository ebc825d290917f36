//! Descriptive statistics, normality tests, IQR fences and Pearson correlation.

use crate::ingest::FeatureFrame;
use crate::linalg::Matrix;
use crate::math::{exp, floor, ln, mean, normal_cdf, normal_sf, sample_variance, sqrt};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate distribution: zero variance")]
    Degenerate,
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
}

/// Anderson-Darling critical values for a normal with estimated parameters,
/// as (significance %, critical value).
pub const AD_CRITICAL_VALUES: [(f64, f64); 5] = [(15.0, 0.576), (10.0, 0.656), (5.0, 0.787), (2.5, 0.918), (1.0, 1.092)];

const KS_SERIES_TERMS: usize = 100;
const KS_SERIES_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Quantile of sorted data by linear interpolation between closest ranks:
/// position `h = (n − 1)·p`, value `x[⌊h⌋] + (h − ⌊h⌋)(x[⌊h⌋+1] − x[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn sorted_finite(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Summary over the finite entries of `values`.
pub fn summarize(values: &[f64]) -> Result<SummaryStats, StatsError> {
    let v = sorted_finite(values);
    if v.is_empty() {
        return Err(StatsError::InsufficientData { needed: 1, got: 0 });
    }
    Ok(SummaryStats {
        count: v.len(),
        mean: mean(&v),
        std: sqrt(sample_variance(&v)),
        min: v[0],
        max: v[v.len() - 1],
        q25: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q75: quantile_sorted(&v, 0.75),
    })
}

/// `mask[i]` is true when `values[i]` lies outside `[q25 − k·IQR, q75 + k·IQR]`.
pub fn iqr_outliers(values: &[f64], k: f64) -> Result<Vec<bool>, StatsError> {
    if values.len() < 4 {
        return Err(StatsError::InsufficientData { needed: 4, got: values.len() });
    }
    let v = sorted_finite(values);
    let (q1, q3) = (quantile_sorted(&v, 0.25), quantile_sorted(&v, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - k * iqr, q3 + k * iqr);
    Ok(values.iter().map(|&x| x < lo || x > hi).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub statistic: f64,
    pub p_value: Option<f64>,
    /// (significance %, critical value); empty for the KS test.
    pub critical_values: Vec<(f64, f64)>,
    /// "Appears normal at 5%".
    pub verdict: bool,
    /// Which reference distribution the statistic was computed against.
    pub reference: String,
}

/// KS test results against both candidate reference normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    /// Against `N(sample mean, sample std²)`.
    pub fitted: NormalityResult,
    /// Against `N(0, 1)` on the raw, unstandardized values.
    pub standard: NormalityResult,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let p = if x < 1.18 {
        // Jacobi-theta form converges fast for small x.
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=KS_SERIES_TERMS {
            let j = (2 * k - 1) as f64;
            let term = exp(-j * j * pi2 / (8.0 * x * x));
            cdf += term;
            if term < KS_SERIES_TOL {
                break;
            }
        }
        1.0 - sqrt(2.0 * core::f64::consts::PI) / x * cdf
    } else {
        let mut sf = 0.0;
        for k in 1..=KS_SERIES_TERMS {
            let kf = k as f64;
            let term = exp(-2.0 * kf * kf * x * x);
            sf += if k % 2 == 1 { term } else { -term };
            if term < KS_SERIES_TOL {
                break;
            }
        }
        2.0 * sf
    };
    p.clamp(0.0, 1.0)
}

/// Two-sided one-sample KS statistic `sup |F_n − F|` over sorted data.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d.clamp(0.0, 1.0)
}

fn ks_result(sorted: &[f64], cdf: impl Fn(f64) -> f64, reference: &str) -> NormalityResult {
    let statistic = ks_statistic(sorted, cdf);
    let p = kolmogorov_sf(sqrt(sorted.len() as f64) * statistic);
    NormalityResult {
        statistic,
        p_value: Some(p),
        critical_values: Vec::new(),
        verdict: p > 0.05,
        reference: reference.to_string(),
    }
}

fn normality_input(values: &[f64]) -> Result<(Vec<f64>, f64, f64), StatsError> {
    let v = sorted_finite(values);
    if v.len() < 8 {
        return Err(StatsError::InsufficientData { needed: 8, got: v.len() });
    }
    let m = mean(&v);
    let s = sqrt(sample_variance(&v));
    if !(s > 0.0) {
        return Err(StatsError::Degenerate);
    }
    Ok((v, m, s))
}

/// One-sample KS against the fitted normal and against the standard normal.
/// p-values come from the asymptotic Kolmogorov distribution of `√n·D`.
pub fn ks_normality(values: &[f64]) -> Result<KsReport, StatsError> {
    let (v, m, s) = normality_input(values)?;
    Ok(KsReport {
        fitted: ks_result(&v, |x| normal_cdf((x - m) / s), "normal(sample mean, sample std)"),
        standard: ks_result(&v, normal_cdf, "standard normal, unstandardized data"),
    })
}

/// Anderson-Darling test for normality with estimated mean and variance.
///
/// The reported statistic carries the small-sample correction
/// `A*² = A²(1 + 0.75/n + 2.25/n²)` and is compared against the fixed
/// [`AD_CRITICAL_VALUES`]; the verdict uses the 5% value.
pub fn anderson_darling(values: &[f64]) -> Result<NormalityResult, StatsError> {
    let (v, m, s) = normality_input(values)?;
    let n = v.len();
    let nf = n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let lo = normal_cdf((v[i] - m) / s).max(f64::MIN_POSITIVE);
        let hi = normal_sf((v[n - 1 - i] - m) / s).max(f64::MIN_POSITIVE);
        sum += (2 * i + 1) as f64 * (ln(lo) + ln(hi));
    }
    let a2 = (-nf - sum / nf).max(0.0);
    let statistic = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(NormalityResult {
        statistic,
        p_value: None,
        critical_values: AD_CRITICAL_VALUES.to_vec(),
        verdict: statistic < AD_CRITICAL_VALUES[2].1,
        reference: "normal(sample mean, sample std)".to_string(),
    })
}

/// Pearson correlation of equally long columns. Diagonal is exactly 1.
pub fn correlation_of(names: &[&str], columns: &[Vec<f64>]) -> Result<Matrix, StatsError> {
    let p = columns.len();
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(StatsError::InsufficientData { needed: 2, got: n });
    }
    let mut centered = Vec::with_capacity(p);
    let mut norms = vec![0.0; p];
    for (j, col) in columns.iter().enumerate() {
        let m = mean(col);
        let c: Vec<f64> = col.iter().map(|x| x - m).collect();
        norms[j] = sqrt(c.iter().map(|x| x * x).sum());
        if !(norms[j] > 0.0) {
            return Err(StatsError::ZeroVariance(names.get(j).copied().unwrap_or("?").to_string()));
        }
        centered.push(c);
    }
    let mut out = Matrix::identity(p);
    for a in 0..p {
        for b in 0..a {
            let dot: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
            let r = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            out[(a, b)] = r;
            out[(b, a)] = r;
        }
    }
    Ok(out)
}

/// Correlation matrix over named [`FeatureFrame`] columns.
pub fn correlation_matrix(frame: &FeatureFrame, columns: &[&str]) -> Result<Matrix, StatsError> {
    let data = columns
        .iter()
        .map(|c| frame.column(c).ok_or_else(|| StatsError::UnknownColumn(c.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    correlation_of(columns, &data)
}
