use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::basis::{difference_matrix, SplineBasis};
use super::table::{is_constant, ColumnScaling, DesignTable};
use super::{ModelSpec, TermKind};
use crate::error::GamError;

/// Diagonal added when the penalized normal matrix is numerically singular.
pub const RIDGE_JITTER: f64 = 1e-8;
/// Eigenvalue ratio below which a normal matrix is treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;
/// Eigenvalue ratio below which an unpenalized design is rank-deficient.
const RANK_RATIO: f64 = 1e-10;

/// One fitted term. Linear terms hold one coefficient on the z-scored
/// feature; spline terms hold one coefficient per basis function.
#[derive(Debug, Clone, Serialize)]
pub struct TermFit {
    pub feature: String,
    pub kind: TermKind,
    pub scaling: ColumnScaling,
    /// Observed range in original units.
    pub x_min: f64,
    pub x_max: f64,
    pub coefficients: Vec<f64>,
    /// Slope per original unit (linear terms).
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    /// Basis over the z-scored feature (spline terms).
    pub basis: Option<SplineBasis>,
    pub lambda: Option<f64>,
    /// Training mean of the uncentered contribution, subtracted from every evaluation.
    pub center: f64,
    /// Maps constrained working coefficients to basis coefficients.
    #[serde(skip)]
    constraint: Option<DMatrix<f64>>,
    #[serde(skip)]
    working: Vec<f64>,
}

impl TermFit {
    fn raw_contribution(&self, x: f64) -> f64 {
        let z = self.scaling.standardize(x);
        match &self.basis {
            None => self.coefficients[0] * z,
            Some(b) => b.eval(z).iter().zip(&self.coefficients).map(|(b, c)| b * c).sum(),
        }
    }

    /// Centered contribution of this term at `x` (original units).
    pub fn contribution(&self, x: f64) -> f64 {
        self.raw_contribution(x) - self.center
    }

    fn working_columns(&self, x: &[f64]) -> DMatrix<f64> {
        let z: Vec<f64> = x.iter().map(|&v| self.scaling.standardize(v)).collect();
        match (&self.basis, &self.constraint) {
            (Some(b), Some(c)) => b.matrix(&z) * c,
            _ => DMatrix::from_column_slice(z.len(), 1, &z),
        }
    }
}

/// GCV evaluation of one smoothing parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GcvCandidate {
    pub lambda: f64,
    pub edf: f64,
    pub rss: f64,
    /// `n * rss / (n - edf)^2`; absent when `edf >= n`.
    pub score: Option<f64>,
}

/// Smoothing parameter with the lowest GCV score; ties go to the larger
/// value. Candidates without a score are skipped.
pub fn select_lambda(candidates: &[GcvCandidate]) -> Option<f64> {
    let mut sorted: Vec<&GcvCandidate> = candidates.iter().filter(|c| c.score.is_some()).collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut best: Option<(f64, f64)> = None;
    for c in sorted {
        let s = c.score.unwrap();
        if best.is_none_or(|(_, bs)| s <= bs) {
            best = Some((c.lambda, s));
        }
    }
    best.map(|(l, _)| l)
}

#[derive(Debug, Clone, Serialize)]
pub struct GamModel {
    pub spec: ModelSpec,
    /// Mean response; predictions are this plus the centered term contributions.
    pub intercept: f64,
    /// Intercept in original units for all-linear models.
    pub original_intercept: Option<f64>,
    pub terms: Vec<TermFit>,
    /// Shared smoothing parameter of the spline terms.
    pub lambda: Option<f64>,
    pub edf: f64,
    pub rss: f64,
    pub gcv_score: f64,
    pub n_rows: usize,
    /// `rss / (n - p)` with `p` working coefficients.
    pub sigma2: Option<f64>,
    /// Covariance of `[intercept, slopes]` on the z-scale (all-linear models only).
    pub covariance: Option<Vec<Vec<f64>>>,
    /// The ridge jitter was needed to solve the normal equations.
    pub jittered: bool,
    /// The unpenalized design matrix is not of full column rank.
    pub rank_deficient: bool,
    pub lambda_search: Vec<GcvCandidate>,
    #[serde(skip)]
    working_intercept: f64,
}

impl GamModel {
    pub fn term(&self, feature: &str) -> Option<&TermFit> {
        self.terms.iter().find(|t| t.feature == feature)
    }

    pub fn is_all_linear(&self) -> bool {
        self.terms.iter().all(|t| t.kind == TermKind::Linear)
    }

    pub fn n_coefficients(&self) -> usize {
        1 + self.terms.iter().map(|t| t.working.len()).sum::<usize>()
    }

    /// Predictions for every row of `table`, which must contain the model's features.
    pub fn predict(&self, table: &DesignTable) -> Result<Vec<f64>, GamError> {
        let cols = self
            .terms
            .iter()
            .map(|t| table.column(&t.feature).ok_or_else(|| GamError::UnknownFeature(t.feature.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..table.n_rows())
            .map(|i| {
                self.intercept
                    + self
                        .terms
                        .iter()
                        .zip(&cols)
                        .map(|(t, c)| t.contribution(c[i]))
                        .sum::<f64>()
            })
            .collect())
    }

    /// Working design matrix, unscaled penalty matrix and working
    /// coefficients for `table`. The fitted coefficients minimize
    /// `‖y − Xβ‖² + λ βᵀSβ`.
    pub fn working_system(&self, table: &DesignTable) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>), GamError> {
        let mut blocks = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let x = table
                .column(&t.feature)
                .ok_or_else(|| GamError::UnknownFeature(t.feature.clone()))?;
            let pen = match (&t.basis, &t.constraint) {
                (Some(b), Some(c)) => {
                    let d = difference_matrix(b.size, self.spec.penalty_order);
                    c.transpose() * d.transpose() * d * c
                }
                _ => DMatrix::zeros(1, 1),
            };
            blocks.push((t.working_columns(x), pen));
        }
        let (x, s) = assemble(table.n_rows(), &blocks);
        let mut beta = vec![self.working_intercept];
        for t in &self.terms {
            beta.extend_from_slice(&t.working);
        }
        Ok((x, s, DVector::from_vec(beta)))
    }
}

struct Block {
    cols: DMatrix<f64>,
    penalty: DMatrix<f64>,
    basis: Option<SplineBasis>,
    constraint: Option<DMatrix<f64>>,
}

/// Orthonormal basis of the complement of `c`: columns 2..k of the
/// Householder reflection that maps `c` onto the first axis.
fn null_space_of(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    let norm = c.norm();
    let mut v = c.clone();
    v[0] += if c[0] >= 0.0 { norm } else { -norm };
    let vv = v.dot(&v);
    let h = DMatrix::<f64>::identity(k, k) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, k - 1).into_owned()
}

fn build_block(table: &DesignTable, feature: &str, kind: TermKind, spec: &ModelSpec) -> Result<Block, GamError> {
    let x = table
        .column(feature)
        .ok_or_else(|| GamError::UnknownFeature(feature.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(GamError::NonFinite(feature.to_string()));
    }
    let scaling = table.scaling_of(feature).expect("column exists");
    if is_constant(x) {
        return Err(match kind {
            TermKind::Spline => GamError::ZeroWidthDomain,
            TermKind::Linear => GamError::InvalidSpec(format!("feature {feature:?} is constant")),
        });
    }
    let z: Vec<f64> = x.iter().map(|&v| scaling.standardize(v)).collect();
    match kind {
        TermKind::Linear => Ok(Block {
            cols: DMatrix::from_column_slice(z.len(), 1, &z),
            penalty: DMatrix::zeros(1, 1),
            basis: None,
            constraint: None,
        }),
        TermKind::Spline => {
            let basis = SplineBasis::for_data(&z, spec.spline_basis_size)?;
            let b = basis.matrix(&z);
            let n = b.nrows() as f64;
            let means = DVector::from_iterator(b.ncols(), b.column_iter().map(|c| c.sum() / n));
            let constraint = null_space_of(&means);
            let d = difference_matrix(basis.size, spec.penalty_order);
            let penalty = constraint.transpose() * d.transpose() * d * &constraint;
            Ok(Block {
                cols: b * &constraint,
                penalty,
                basis: Some(basis),
                constraint: Some(constraint),
            })
        }
    }
}

fn assemble(n: usize, blocks: &[(DMatrix<f64>, DMatrix<f64>)]) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = 1 + blocks.iter().map(|(c, _)| c.ncols()).sum::<usize>();
    let mut x = DMatrix::zeros(n, p);
    let mut s = DMatrix::zeros(p, p);
    x.column_mut(0).fill(1.0);
    let mut at = 1;
    for (cols, pen) in blocks {
        let w = cols.ncols();
        x.view_mut((0, at), (n, w)).copy_from(cols);
        s.view_mut((at, at), (w, w)).copy_from(pen);
        at += w;
    }
    (x, s)
}

fn eigen_ratio(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        0.0
    } else {
        min / max
    }
}

struct Solution {
    beta: DVector<f64>,
    edf: f64,
    rss: f64,
    jittered: bool,
}

fn solve(xtx: &DMatrix<f64>, xty: &DVector<f64>, s: &DMatrix<f64>, x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<Solution, GamError> {
    let mut a = xtx + s * lambda;
    let mut jittered = false;
    let mut chol = if eigen_ratio(&a) < SINGULAR_RATIO {
        None
    } else {
        Cholesky::new(a.clone())
    };
    if chol.is_none() {
        for i in 0..a.nrows() {
            a[(i, i)] += RIDGE_JITTER;
        }
        jittered = true;
        chol = Cholesky::new(a.clone());
    }
    let chol: Cholesky<f64, Dyn> = chol.ok_or(GamError::RankDeficient)?;
    let beta = chol.solve(xty);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(GamError::RankDeficient);
    }
    let edf = chol.solve(xtx).trace();
    let resid = y - x * &beta;
    Ok(Solution {
        rss: resid.norm_squared(),
        beta,
        edf,
        jittered,
    })
}

fn gcv_score(n: usize, rss: f64, edf: f64) -> Option<f64> {
    let n = n as f64;
    (edf < n).then(|| n * rss / (n - edf).powi(2))
}

/// Fits the additive model in `spec` to `table`.
///
/// Minimizes `‖y − β₀ − Σ Bⱼθⱼ‖² + λ Σ ‖Dθⱼ‖²` over spline terms (plus
/// unpenalized linear terms), with each spline constrained to sum to zero
/// over the training rows. One λ is shared by all spline terms and chosen
/// from `spec.lambda_grid` by GCV.
pub fn fit(table: &DesignTable, spec: &ModelSpec) -> Result<GamModel, GamError> {
    spec.validate()?;
    if table.target.iter().any(|v| !v.is_finite()) {
        return Err(GamError::NonFinite(table.target_name.clone()));
    }
    if is_constant(&table.target) {
        return Err(GamError::DegenerateTarget(table.target_name.clone()));
    }
    let n = table.n_rows();
    let blocks = spec
        .terms
        .iter()
        .map(|t| build_block(table, &t.feature, t.kind, spec))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(DMatrix<f64>, DMatrix<f64>)> = blocks.iter().map(|b| (b.cols.clone(), b.penalty.clone())).collect();
    let (x, s) = assemble(n, &pairs);
    let p = x.ncols();
    if n < p + 1 {
        return Err(GamError::TooFewRows { rows: n, params: p });
    }
    let y = DVector::from_column_slice(&table.target);
    let xt = x.transpose();
    let xtx = &xt * &x;
    let xty = &xt * &y;

    let has_spline = spec.terms.iter().any(|t| t.kind == TermKind::Spline);
    let mut grid: Vec<f64> = if has_spline { spec.lambda_grid.clone() } else { vec![0.0] };
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let results: Vec<Result<Solution, GamError>> = grid.par_iter().map(|&l| solve(&xtx, &xty, &s, &x, &y, l)).collect();
    let lambda_search: Vec<GcvCandidate> = grid
        .iter()
        .zip(&results)
        .filter_map(|(&lambda, r)| {
            r.as_ref().ok().map(|sol| GcvCandidate {
                lambda,
                edf: sol.edf,
                rss: sol.rss,
                score: gcv_score(n, sol.rss, sol.edf),
            })
        })
        .collect();
    if lambda_search.is_empty() {
        return Err(results.into_iter().find_map(Result::err).unwrap_or(GamError::RankDeficient));
    }
    let chosen = if grid.len() == 1 {
        lambda_search[0].lambda
    } else {
        select_lambda(&lambda_search).ok_or(GamError::NoAdmissibleLambda)?
    };
    let idx = grid.iter().position(|&l| l == chosen).expect("chosen from grid");
    let sol = results.into_iter().nth(idx).expect("index in range")?;

    let all_linear = !has_spline;
    let rank_deficient = all_linear && eigen_ratio(&xtx) < RANK_RATIO;
    let sigma2 = (n > p).then(|| sol.rss / (n - p) as f64);
    let covariance = match (all_linear && !rank_deficient && !sol.jittered, sigma2) {
        (true, Some(s2)) => xtx.clone().try_inverse().map(|inv| inv * s2),
        _ => None,
    };

    let mut terms = Vec::with_capacity(blocks.len());
    let mut at = 1;
    let mut intercept = sol.beta[0];
    for (t, block) in spec.terms.iter().zip(blocks) {
        let w = block.cols.ncols();
        let working: Vec<f64> = sol.beta.rows(at, w).iter().copied().collect();
        let contrib = &block.cols * DVector::from_column_slice(&working);
        let center = contrib.sum() / n as f64;
        intercept += center;
        let x = table.column(&t.feature).expect("checked above");
        let scaling = table.scaling_of(&t.feature).expect("checked above");
        let (coefficients, slope, slope_se) = match &block.constraint {
            Some(c) => ((c * DVector::from_column_slice(&working)).iter().copied().collect(), None, None),
            None => {
                let se = covariance.as_ref().map(|cov| cov[(at, at)].sqrt() / scaling.sd);
                (working.clone(), Some(working[0] / scaling.sd), se)
            }
        };
        terms.push(TermFit {
            feature: t.feature.clone(),
            kind: t.kind,
            scaling,
            x_min: x.iter().copied().fold(f64::INFINITY, f64::min),
            x_max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            coefficients,
            slope,
            slope_se,
            basis: block.basis,
            lambda: block.basis.map(|_| chosen),
            center,
            constraint: block.constraint,
            working,
        });
        at += w;
    }
    let original_intercept = all_linear.then(|| {
        sol.beta[0]
            - terms
                .iter()
                .map(|t| t.slope.unwrap_or(0.0) * t.scaling.mean)
                .sum::<f64>()
    });

    Ok(GamModel {
        spec: spec.clone(),
        intercept,
        original_intercept,
        terms,
        lambda: has_spline.then_some(chosen),
        edf: sol.edf,
        rss: sol.rss,
        gcv_score: gcv_score(n, sol.rss, sol.edf).unwrap_or(f64::INFINITY),
        n_rows: n,
        sigma2,
        covariance: covariance.map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect()),
        jittered: sol.jittered,
        rank_deficient,
        lambda_search,
        working_intercept: sol.beta[0],
    })
}
