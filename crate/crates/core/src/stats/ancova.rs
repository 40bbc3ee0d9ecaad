//! One-factor ANCOVA as a partial F-test of the group term between nested
//! least-squares fits.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::StatsError;
use crate::graph::Feature;

use super::special::f_upper_p;

/// Relative pivot size below which a column counts as collinear.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Covariate {
    pub name: String,
    pub values: Vec<f64>,
}

impl Covariate {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Covariate { name: name.into(), values }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AncovaResult {
    pub feature: String,
    pub f_value: f64,
    pub p_value: f64,
    /// Rows used in the fit.
    pub n: usize,
    pub dropped: usize,
    pub covariates: Vec<String>,
}

/// Full-model design: intercept, group indicator, then covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct AncovaDesign {
    pub columns: Vec<String>,
    /// Row-major, `rows × columns.len()`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dropped: usize,
}

impl AncovaDesign {
    pub const GROUP_COLUMN: usize = 1;

    pub fn rows(&self) -> usize {
        self.y.len()
    }

    /// Builds the design, dropping rows whose dependent value is missing or
    /// any covariate is non-finite.
    pub fn new(feature: &[Option<f64>], group: &[bool], covariates: &[Covariate]) -> Result<Self, StatsError> {
        let n = feature.len();
        if group.len() != n {
            return Err(StatsError::LengthMismatch { left: n, right: group.len() });
        }
        if let Some(c) = covariates.iter().find(|c| c.values.len() != n) {
            return Err(StatsError::LengthMismatch { left: n, right: c.values.len() });
        }
        let mut columns = vec![String::from("intercept"), String::from("group")];
        columns.extend(covariates.iter().map(|c| c.name.clone()));
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for i in 0..n {
            let Some(v) = feature[i].filter(|v| v.is_finite()) else { continue };
            if covariates.iter().any(|c| !c.values[i].is_finite()) {
                continue;
            }
            y.push(v);
            x.push(1.0);
            x.push(if group[i] { 1.0 } else { 0.0 });
            x.extend(covariates.iter().map(|c| c.values[i]));
        }
        let dropped = n - y.len();
        Ok(AncovaDesign { columns, x, y, dropped })
    }

    /// The same design with the group column removed.
    pub fn reduced(&self) -> (Vec<String>, Vec<f64>) {
        let p = self.columns.len();
        let keep = |j: &usize| *j != Self::GROUP_COLUMN;
        let columns = (0..p).filter(keep).map(|j| self.columns[j].clone()).collect();
        let x = self.x.chunks(p).flat_map(|row| (0..p).filter(keep).map(move |j| row[j])).collect();
        (columns, x)
    }
}

/// Residual sum of squares and coefficients of a least-squares fit.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

/// Least squares by Householder QR. `x` is row-major `y.len() × columns.len()`.
pub fn ols(x: &[f64], y: &[f64], columns: &[String]) -> Result<OlsFit, StatsError> {
    let (n, p) = (y.len(), columns.len());
    if n <= p {
        return Err(StatsError::TooFewRows { rows: n, params: p });
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    let at = |i: usize, j: usize| i * p + j;
    let mut diag = vec![0.0; p];
    for j in 0..p {
        let col_norm = libm::sqrt((0..n).map(|i| x[at(i, j)] * x[at(i, j)]).sum());
        let tail_norm = libm::sqrt((j..n).map(|i| a[at(i, j)] * a[at(i, j)]).sum());
        if col_norm == 0.0 || tail_norm <= RANK_TOL * col_norm {
            return Err(StatsError::RankDeficient { column: columns[j].clone() });
        }
        let alpha = if a[at(j, j)] > 0.0 { -tail_norm } else { tail_norm };
        // v = x - alpha e1, stored in place below the diagonal.
        a[at(j, j)] -= alpha;
        let vnorm2: f64 = (j..n).map(|i| a[at(i, j)] * a[at(i, j)]).sum();
        for k in j + 1..p {
            let s = 2.0 * (j..n).map(|i| a[at(i, j)] * a[at(i, k)]).sum::<f64>() / vnorm2;
            for i in j..n {
                a[at(i, k)] -= s * a[at(i, j)];
            }
        }
        let s = 2.0 * (j..n).map(|i| a[at(i, j)] * b[i]).sum::<f64>() / vnorm2;
        for i in j..n {
            b[i] -= s * a[at(i, j)];
        }
        diag[j] = alpha;
    }
    let mut coefficients = vec![0.0; p];
    for j in (0..p).rev() {
        let s: f64 = (j + 1..p).map(|k| a[at(j, k)] * coefficients[k]).sum();
        coefficients[j] = (b[j] - s) / diag[j];
    }
    let rss = b[p..].iter().map(|r| r * r).sum();
    Ok(OlsFit { coefficients, rss })
}

/// Partial F-test of the group term: `((RSS_r - RSS_f) / 1) / (RSS_f / (n - p_f))`.
pub fn ancova_f(feature: &[Option<f64>], group: &[bool], covariates: &[Covariate]) -> Result<AncovaResult, StatsError> {
    ancova_design(&AncovaDesign::new(feature, group, covariates)?, "")
}

pub fn ancova_design(design: &AncovaDesign, feature_name: &str) -> Result<AncovaResult, StatsError> {
    let n = design.rows();
    let p_full = design.columns.len();
    let full = ols(&design.x, &design.y, &design.columns)?;
    let (reduced_cols, reduced_x) = design.reduced();
    let reduced = ols(&reduced_x, &design.y, &reduced_cols)?;
    let df2 = (n - p_full) as f64;
    let gain = (reduced.rss - full.rss).max(0.0);
    let f_value = if full.rss > 0.0 {
        gain / (full.rss / df2)
    } else if gain > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(AncovaResult {
        feature: feature_name.to_string(),
        f_value,
        p_value: f_upper_p(f_value, 1.0, df2),
        n,
        dropped: design.dropped,
        covariates: design.columns[2..].to_vec(),
    })
}

/// Covariates used when `dependent` is the response: all of them, except
/// that unique nodes never adjusts for itself.
pub fn covariates_for(dependent: Feature, covariates: &[Covariate]) -> Vec<Covariate> {
    covariates.iter().filter(|c| !(dependent == Feature::UniqueNodes && c.name == Feature::UniqueNodes.name())).cloned().collect()
}

/// Design for one spatio-semantic feature with the unique-nodes exclusion applied.
pub fn feature_design(
    dependent: Feature,
    values: &[Option<f64>],
    group: &[bool],
    covariates: &[Covariate],
) -> Result<AncovaDesign, StatsError> {
    AncovaDesign::new(values, group, &covariates_for(dependent, covariates))
}

pub fn feature_ancova(
    dependent: Feature,
    values: &[Option<f64>],
    group: &[bool],
    covariates: &[Covariate],
) -> Result<AncovaResult, StatsError> {
    ancova_design(&feature_design(dependent, values, group, covariates)?, dependent.name())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..5).flat_map(|i| [1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 3.0 - 2.0 * i as f64).collect();
        let fit = ols(&x, &y, &[String::from("a"), String::from("b")]).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn perfect_separation_gives_huge_f() {
        let group: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let y: Vec<Option<f64>> = group.iter().map(|&g| Some(if g { 1.0 } else { 0.0 })).collect();
        let r = ancova_f(&y, &group, &[Covariate::new("noise", noise(20, 1))]).unwrap();
        assert!(r.f_value > 1e6, "F = {}", r.f_value);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn collinear_column_is_named() {
        let group: Vec<bool> = (0..10).map(|i| i < 5).collect();
        let y: Vec<Option<f64>> = noise(10, 2).into_iter().map(Some).collect();
        let age = noise(10, 3);
        let twice: Vec<f64> = age.iter().map(|a| 2.0 * a + 1.0).collect();
        let err = ancova_f(&y, &group, &[Covariate::new("age", age), Covariate::new("age2", twice)]).unwrap_err();
        assert_eq!(err, StatsError::RankDeficient { column: String::from("age2") });
        let constant = ancova_f(&y, &group, &[Covariate::new("flat", vec![4.0; 10])]).unwrap_err();
        assert_eq!(constant, StatsError::RankDeficient { column: String::from("flat") });
    }

    #[test]
    fn too_few_rows() {
        let y = [Some(1.0), Some(2.0), None, Some(3.0)];
        let err = ancova_f(&y, &[true, false, true, false], &[Covariate::new("c", vec![0.1, 0.5, 0.2, 0.9])]).unwrap_err();
        assert_eq!(err, StatsError::TooFewRows { rows: 3, params: 3 });
    }

    #[test]
    fn unique_nodes_never_covaries_with_itself() {
        let covs = [Covariate::new("age", vec![0.0; 3]), Covariate::new(Feature::UniqueNodes.name(), vec![0.0; 3])];
        assert_eq!(covariates_for(Feature::UniqueNodes, &covs).len(), 1);
        assert_eq!(covariates_for(Feature::Cycles, &covs).len(), 2);
    }

    proptest::proptest! {
        #[test]
        fn f_invariant_to_affine_changes(seed: u64, scale in 0.01f64..100.0, shift in -50.0f64..50.0, col in 0usize..2) {
            let n = 30;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let group: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            proptest::prop_assume!(group.iter().filter(|g| **g).count() >= 3 && group.iter().filter(|g| !**g).count() >= 3);
            let covs = vec![Covariate::new("a", noise(n, seed ^ 1)), Covariate::new("b", noise(n, seed ^ 2))];
            let y: Vec<Option<f64>> = (0..n).map(|i| Some(covs[0].values[i] + f64::from(u8::from(group[i])) * 0.3 + rng.random_range(-1.0..1.0))).collect();
            let base = ancova_f(&y, &group, &covs).unwrap();
            let mut scaled = covs.clone();
            scaled[col].values.iter_mut().for_each(|v| *v = *v * scale + shift);
            let shifted_y: Vec<Option<f64>> = y.iter().map(|v| v.map(|v| v + shift)).collect();
            let a = ancova_f(&y, &group, &scaled).unwrap();
            let b = ancova_f(&shifted_y, &group, &covs).unwrap();
            proptest::prop_assert!((a.f_value - base.f_value).abs() <= 1e-8 * base.f_value.max(1.0));
            proptest::prop_assert!((b.f_value - base.f_value).abs() <= 1e-8 * base.f_value.max(1.0));
            proptest::prop_assert!(base.f_value >= 0.0 && (0.0..=1.0).contains(&base.p_value));
        }
    }
}
