//! Multinomial logit of conversational role on gender with show fixed
//! effects, speaker as the reference outcome.
//!
//! Each non-reference outcome `j` gets a linear predictor
//! `eta_j = b0 + b_female * female + sum_s g_s * show_s` with drop-first
//! show dummies. Observations are pooled into (female, show) cells, which
//! leaves the likelihood unchanged.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::roles::{Role, RoleObservation};
use crate::error::{Error, Result};

pub const GRADIENT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;

/// Cell-aggregated design. Parameters are laid out outcome-major: block `j`
/// holds the `n_columns()` coefficients of `outcomes[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogitDesign {
    pub outcomes: Vec<Role>,
    pub columns: Vec<String>,
    pub reference_show: String,
    /// Covariate row per cell.
    rows: Vec<Vec<f64>>,
    /// Counts per cell: index 0 is the reference, then `outcomes` in order.
    counts: Vec<Vec<f64>>,
    n_observations: usize,
}

impl LogitDesign {
    pub fn new(observations: &[RoleObservation]) -> Result<Self> {
        let mut present: Vec<Role> = observations.iter().map(|o| o.role).collect();
        present.sort();
        present.dedup();
        if present.len() < 2 {
            return Err(Error::invalid(
                "regression needs at least two observed roles",
            ));
        }
        if present[0] != Role::Speaker {
            return Err(Error::invalid("reference role speaker is never observed"));
        }
        let outcomes: Vec<Role> = present[1..].to_vec();
        let mut shows: Vec<&str> = observations.iter().map(|o| o.show_id.as_str()).collect();
        shows.sort_unstable();
        shows.dedup();
        let mut columns = vec!["intercept".to_string(), "female".to_string()];
        columns.extend(shows[1..].iter().map(|s| format!("show:{s}")));

        let mut cells: BTreeMap<(bool, &str), Vec<f64>> = BTreeMap::new();
        for o in observations {
            let slot = match o.role {
                Role::Speaker => 0,
                r => 1 + outcomes.iter().position(|&x| x == r).expect("observed"),
            };
            cells
                .entry((o.female, o.show_id.as_str()))
                .or_insert_with(|| vec![0.0; outcomes.len() + 1])[slot] += 1.0;
        }
        let (rows, counts) = cells
            .into_iter()
            .map(|((female, show), c)| {
                let mut x = vec![0.0; columns.len()];
                x[0] = 1.0;
                x[1] = if female { 1.0 } else { 0.0 };
                if let Some(k) = shows[1..].iter().position(|s| *s == show) {
                    x[2 + k] = 1.0;
                }
                (x, c)
            })
            .unzip();
        let design = LogitDesign {
            outcomes,
            columns,
            reference_show: shows[0].to_string(),
            rows,
            counts,
            n_observations: observations.len(),
        };
        design.check_rank()?;
        design.check_separation()?;
        Ok(design)
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_params(&self) -> usize {
        self.columns.len() * self.outcomes.len()
    }

    pub fn n_observations(&self) -> usize {
        self.n_observations
    }

    fn check_rank(&self) -> Result<()> {
        let p = self.n_columns();
        let mut rank = 0;
        for c in 0..p {
            let m = DMatrix::from_fn(self.rows.len(), c + 1, |i, j| self.rows[i][j]);
            let sv = m.svd(false, false).singular_values;
            let max = sv.max();
            let r = sv.iter().filter(|&&s| s > 1e-10 * max.max(1.0)).count();
            if r == rank {
                let reason = if c == 1 {
                    "gender does not vary".to_string()
                } else {
                    "column is collinear with earlier columns".to_string()
                };
                return Err(Error::Design {
                    column: self.columns[c].clone(),
                    reason,
                });
            }
            rank = r;
        }
        Ok(())
    }

    /// An outcome that never occurs on one side of an indicator column
    /// drives that coefficient to infinity.
    fn check_separation(&self) -> Result<()> {
        let k = self.outcomes.len() + 1;
        for c in 1..self.n_columns() {
            for level in [0.0, 1.0] {
                let mut totals = vec![0.0; k];
                let mut any = false;
                for (x, n) in self.rows.iter().zip(&self.counts) {
                    if x[c] == level {
                        any = true;
                        for (t, v) in totals.iter_mut().zip(n) {
                            *t += v;
                        }
                    }
                }
                if !any {
                    continue;
                }
                if let Some(j) = totals.iter().position(|&t| t == 0.0) {
                    let role = if j == 0 {
                        Role::Speaker
                    } else {
                        self.outcomes[j - 1]
                    };
                    return Err(Error::Design {
                        column: self.columns[c].clone(),
                        reason: format!(
                            "role {} never occurs where {} = {level}",
                            role.as_str(),
                            self.columns[c]
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    fn probabilities(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let p = self.n_columns();
        let etas: Vec<f64> = (0..self.outcomes.len())
            .map(|j| {
                x.iter()
                    .zip(&theta[j * p..(j + 1) * p])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let m = etas.iter().copied().fold(0.0f64, f64::max);
        let mut e: Vec<f64> = std::iter::once((-m).exp())
            .chain(etas.iter().map(|v| (v - m).exp()))
            .collect();
        let z: f64 = e.iter().sum();
        e.iter_mut().for_each(|v| *v /= z);
        e
    }
}

/// Multinomial log-likelihood at `theta`.
pub fn log_likelihood(design: &LogitDesign, theta: &[f64]) -> f64 {
    design
        .rows
        .iter()
        .zip(&design.counts)
        .map(|(x, n)| {
            let pi = design.probabilities(x, theta);
            n.iter()
                .zip(&pi)
                .filter(|(c, _)| **c > 0.0)
                .map(|(c, p)| c * p.ln())
                .sum::<f64>()
        })
        .sum()
}

/// Analytic gradient of [`log_likelihood`].
pub fn gradient(design: &LogitDesign, theta: &[f64]) -> Vec<f64> {
    let p = design.n_columns();
    let mut g = vec![0.0; design.n_params()];
    for (x, n) in design.rows.iter().zip(&design.counts) {
        let pi = design.probabilities(x, theta);
        let total: f64 = n.iter().sum();
        for j in 0..design.outcomes.len() {
            let r = n[j + 1] - total * pi[j + 1];
            for (a, xa) in x.iter().enumerate() {
                g[j * p + a] += r * xa;
            }
        }
    }
    g
}

/// Observed information (negative Hessian).
fn information(design: &LogitDesign, theta: &[f64]) -> DMatrix<f64> {
    let p = design.n_columns();
    let q = design.n_params();
    let mut info = DMatrix::zeros(q, q);
    for (x, n) in design.rows.iter().zip(&design.counts) {
        let pi = design.probabilities(x, theta);
        let total: f64 = n.iter().sum();
        for j in 0..design.outcomes.len() {
            for k in 0..design.outcomes.len() {
                let w = total * pi[j + 1] * (if j == k { 1.0 } else { 0.0 } - pi[k + 1]);
                for a in 0..p {
                    for b in 0..p {
                        info[(j * p + a, k * p + b)] += w * x[a] * x[b];
                    }
                }
            }
        }
    }
    info
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeFit {
    pub role: Role,
    pub intercept: Coefficient,
    pub female: Coefficient,
    pub odds_ratio: f64,
    pub show_effects: Vec<(String, Coefficient)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogitResult {
    pub reference: Role,
    pub reference_show: String,
    pub outcomes: Vec<OutcomeFit>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub n_observations: usize,
}

pub fn fit(design: &LogitDesign) -> Result<LogitResult> {
    let q = design.n_params();
    let mut theta = vec![0.0; q];
    let mut ll = log_likelihood(design, &theta);
    let mut iterations = 0;
    loop {
        let g = gradient(design, &theta);
        let gnorm = max_abs(&g);
        if gnorm < GRADIENT_TOL {
            break;
        }
        if iterations == MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;
        let chol = information(design, &theta)
            .cholesky()
            .ok_or_else(|| Error::Design {
                column: "?".into(),
                reason: "information matrix is singular".into(),
            })?;
        let step = chol.solve(&DVector::from_vec(g));
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a + t * s)
                .collect();
            let cll = log_likelihood(design, &cand);
            if cll >= ll || t < 1e-12 {
                theta = cand;
                ll = cll;
                break;
            }
            t /= 2.0;
        }
    }
    let info = information(design, &theta);
    let cov = info
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Design {
            column: "?".into(),
            reason: "information matrix is singular at the optimum".into(),
        })?;
    let normal = Normal::standard();
    let p = design.n_columns();
    let coef = |i: usize| {
        let se = cov[(i, i)].max(0.0).sqrt();
        let z = theta[i] / se;
        Coefficient {
            estimate: theta[i],
            std_error: se,
            z,
            p: 2.0 * (1.0 - normal.cdf(z.abs())),
        }
    };
    let outcomes = design
        .outcomes
        .iter()
        .enumerate()
        .map(|(j, &role)| OutcomeFit {
            role,
            intercept: coef(j * p),
            female: coef(j * p + 1),
            odds_ratio: theta[j * p + 1].exp(),
            show_effects: (2..p)
                .map(|a| (design.columns[a][5..].to_string(), coef(j * p + a)))
                .collect(),
        })
        .collect();
    Ok(LogitResult {
        reference: Role::Speaker,
        reference_show: design.reference_show.clone(),
        outcomes,
        log_likelihood: ll,
        iterations,
        n_observations: design.n_observations,
    })
}

pub fn multinomial_logit(observations: &[RoleObservation]) -> Result<LogitResult> {
    fit(&LogitDesign::new(observations)?)
}
