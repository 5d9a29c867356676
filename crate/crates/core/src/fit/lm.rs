//! Bounded Levenberg-Marquardt least squares.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A model f(x; p) with analytic parameter gradient.
pub trait Model {
    type X: Copy;

    fn names(&self) -> &[&'static str];

    fn value(&self, x: Self::X, p: &[f64]) -> f64;

    /// Writes ∂f/∂pⱼ into `grad`.
    fn gradient(&self, x: Self::X, p: &[f64], grad: &mut [f64]);
}

/// One data point; `sigma: None` means unweighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<X> {
    pub x: X,
    pub y: f64,
    pub sigma: Option<f64>,
}

impl<X> Observation<X> {
    pub fn new(x: X, y: f64) -> Self {
        Self { x, y, sigma: None }
    }

    pub fn weighted(x: X, y: f64, sigma: f64) -> Self {
        Self {
            x,
            y,
            sigma: Some(sigma),
        }
    }
}

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub const FREE: Bound = Bound {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn at_least(lo: f64) -> Self {
        Self { lo, hi: f64::INFINITY }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// Stopping and damping settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmSettings {
    /// Largest |cosine| between the residual vector and any free Jacobian
    /// column accepted as stationary.
    pub gradient_tol: f64,
    /// Looser cosine accepted when no step can lower the cost any further,
    /// i.e. the optimum is resolved to machine precision.
    pub stall_tol: f64,
    pub max_iter: usize,
    pub initial_damping: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            gradient_tol: 1e-10,
            stall_tol: 1e-6,
            max_iter: 500,
            initial_damping: 1e-6,
        }
    }
}

fn serialize_sigmas<S: Serializer>(sigmas: &BTreeMap<String, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let finite: BTreeMap<&String, Option<f64>> = sigmas.iter().map(|(k, v)| (k, v.is_finite().then_some(*v))).collect();
    finite.serialize(s)
}

/// Outcome of a fit. Non-finite uncertainties (unidentifiable parameters)
/// serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    #[serde(serialize_with = "serialize_sigmas")]
    pub sigmas: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub derived: BTreeMap<String, f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub n_iter: usize,
    #[serde(skip)]
    pub names: Vec<String>,
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    #[serde(skip)]
    pub message: String,
}

impl FitResult {
    /// Fitted value of parameter `name`; panics on unknown names.
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.sigmas[name]
    }
}

struct Evaluation {
    residuals: DVector<f64>,
    jacobian: DMatrix<f64>,
}

fn evaluate<M: Model>(model: &M, data: &[Observation<M::X>], p: &[f64], with_jacobian: bool) -> Evaluation {
    let n = data.len();
    let k = p.len();
    let mut residuals = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(if with_jacobian { n } else { 0 }, k);
    let mut grad = vec![0.0; k];
    for (i, obs) in data.iter().enumerate() {
        let w = obs.sigma.map_or(1.0, |s| 1.0 / s);
        residuals[i] = (obs.y - model.value(obs.x, p)) * w;
        if with_jacobian {
            model.gradient(obs.x, p, &mut grad);
            for (j, g) in grad.iter().enumerate() {
                jacobian[(i, j)] = g * w;
            }
        }
    }
    Evaluation { residuals, jacobian }
}

/// Ratio of extreme singular values of the column-normalized Jacobian.
fn condition_number(j: &DMatrix<f64>) -> f64 {
    let mut scaled = j.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        col /= norm;
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

const MAX_CONDITION: f64 = 1e12;

/// Whether a descent direction for a parameter at `value` leaves `bound`.
fn is_blocked(g: f64, value: f64, bound: Bound) -> bool {
    // Increasing the parameter lowers the cost when g > 0.
    (g > 0.0 && value >= bound.hi) || (g < 0.0 && value <= bound.lo)
}

/// Largest |cos| between the residual and a Jacobian column, ignoring
/// columns pinned at a bound with the gradient pushing outward.
fn gradient_cosine(ev: &Evaluation, p: &[f64], bounds: &[Bound]) -> f64 {
    let r_norm = ev.residuals.norm();
    if r_norm == 0.0 {
        return 0.0;
    }
    let g = ev.jacobian.transpose() * &ev.residuals;
    let mut worst: f64 = 0.0;
    for (j, col) in ev.jacobian.column_iter().enumerate() {
        let blocked = is_blocked(g[j], p[j], bounds[j]);
        let c_norm = col.norm();
        if blocked || c_norm == 0.0 {
            continue;
        }
        worst = worst.max(g[j].abs() / (c_norm * r_norm));
    }
    worst
}

/// Minimizes Σ ((yᵢ − f(xᵢ; p))/σᵢ)² from `init` within `bounds`.
pub fn least_squares<M: Model>(
    model: &M,
    data: &[Observation<M::X>],
    init: &[f64],
    bounds: &[Bound],
) -> Result<FitResult> {
    least_squares_with(model, data, init, bounds, LmSettings::default())
}

pub fn least_squares_with<M: Model>(
    model: &M,
    data: &[Observation<M::X>],
    init: &[f64],
    bounds: &[Bound],
    settings: LmSettings,
) -> Result<FitResult> {
    let k = model.names().len();
    if init.len() != k || bounds.len() != k {
        return Err(Error::domain(format!(
            "model has {k} parameters but {} initial values and {} bounds were given",
            init.len(),
            bounds.len()
        )));
    }
    if data.len() < k {
        return Err(Error::UnderDetermined(format!(
            "{} observations for {k} parameters",
            data.len()
        )));
    }
    for (j, (v, b)) in init.iter().zip(bounds).enumerate() {
        if !v.is_finite() || !b.contains(*v) {
            return Err(Error::domain(format!(
                "initial value {v} of `{}` lies outside [{}, {}]",
                model.names()[j],
                b.lo,
                b.hi
            )));
        }
    }
    for obs in data {
        if !obs.y.is_finite() || obs.sigma.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::domain(
                "observations need finite values and positive uncertainties",
            ));
        }
    }

    // Residuals at this level are rounding noise: the data are fitted exactly.
    let exact_level = 1e-12
        * data
            .iter()
            .map(|o| (o.y / o.sigma.unwrap_or(1.0)).powi(2))
            .sum::<f64>()
            .sqrt();

    let mut p = init.to_vec();
    let mut ev = evaluate(model, data, &p, true);
    let condition = condition_number(&ev.jacobian);
    if condition > MAX_CONDITION {
        return Err(Error::RankDeficient { condition });
    }
    let mut cost = ev.residuals.norm_squared();
    let mut lambda = settings.initial_damping;
    let mut n_iter = 0;
    let mut converged = false;
    let mut message = String::from("iteration limit reached");

    while n_iter < settings.max_iter {
        if cost.sqrt() <= exact_level || gradient_cosine(&ev, &p, bounds) <= settings.gradient_tol {
            converged = true;
            message = "gradient below tolerance".into();
            break;
        }
        n_iter += 1;
        let jt = ev.jacobian.transpose();
        let mut jtj = &jt * &ev.jacobian;
        let mut g = &jt * &ev.residuals;
        // Parameters pinned at a bound with the gradient pushing outward are
        // frozen for this step so the others get a proper reduced step.
        for j in 0..k {
            if is_blocked(g[j], p[j], bounds[j]) {
                g[j] = 0.0;
                jtj.row_mut(j).fill(0.0);
                jtj.column_mut(j).fill(0.0);
                jtj[(j, j)] = 1.0;
            }
        }
        let diag: Vec<f64> = (0..k).map(|j| jtj[(j, j)].max(f64::MIN_POSITIVE)).collect();

        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for (j, d) in diag.iter().enumerate() {
                a[(j, j)] += lambda * d;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&g);
            let trial: Vec<f64> = p
                .iter()
                .zip(step.iter())
                .zip(bounds)
                .map(|((v, s), b)| b.clamp(v + s))
                .collect();
            if trial == p {
                break;
            }
            let trial_ev = evaluate(model, data, &trial, false);
            let trial_cost = trial_ev.residuals.norm_squared();
            if trial_cost.is_finite() && trial_cost < cost {
                p = trial;
                cost = trial_cost;
                ev = evaluate(model, data, &p, true);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            let cos = gradient_cosine(&ev, &p, bounds);
            if cos <= settings.stall_tol {
                converged = true;
                message = format!("cost at machine precision (gradient cosine {cos:.2e})");
            } else {
                message = format!("no further decrease possible (gradient cosine {cos:.2e})");
            }
            break;
        }
    }
    if !converged {
        log::warn!("least squares did not converge: {message}");
    }

    let covariance = covariance(&ev.jacobian, cost, data);
    let names: Vec<String> = model.names().iter().map(|s| s.to_string()).collect();
    let params = names.iter().cloned().zip(p.iter().copied()).collect();
    let sigmas = names
        .iter()
        .cloned()
        .enumerate()
        .map(|(j, n)| (n, covariance[(j, j)].sqrt()))
        .collect();
    Ok(FitResult {
        params,
        sigmas,
        derived: BTreeMap::new(),
        residual_norm: cost.sqrt(),
        converged,
        n_iter,
        names,
        values: p,
        covariance,
        message,
    })
}

/// (JᵀJ)⁻¹ via the SVD, scaled by the reduced χ² for unweighted data.
/// Parameters touching a null direction get infinite variance.
fn covariance<X>(j: &DMatrix<f64>, cost: f64, data: &[Observation<X>]) -> DMatrix<f64> {
    let k = j.ncols();
    let svd = j.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let s_max = svd.singular_values.max();
    let mut cov = DMatrix::zeros(k, k);
    let mut unidentified = vec![false; k];
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        let row = v_t.row(idx);
        if s <= 1e-12 * s_max || s == 0.0 {
            for (p, v) in row.iter().enumerate() {
                if v.abs() > 1e-8 {
                    unidentified[p] = true;
                }
            }
            continue;
        }
        cov += row.transpose() * row / (s * s);
    }
    let weighted = data.iter().all(|o| o.sigma.is_some());
    let dof = data.len().saturating_sub(k);
    if !weighted && dof > 0 {
        cov *= cost / dof as f64;
    }
    for (p, bad) in unidentified.iter().enumerate() {
        if *bad {
            cov[(p, p)] = f64::INFINITY;
        }
    }
    cov
}

/// Central-difference Jacobian with a relative step; used to check the
/// analytic gradients of models.
pub fn finite_difference_gradient<M: Model>(model: &M, x: M::X, p: &[f64], rel_step: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|j| {
            let h = rel_step * p[j].abs().max(1.0);
            q[j] = p[j] + h;
            let up = model.value(x, &q);
            q[j] = p[j] - h;
            let down = model.value(x, &q);
            q[j] = p[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}
