//! Weighted anisotropic ROF regularization by dual fixed-point projection.
//!
//! Solves `min_w TV(w) + |w - w0|^2 / (2 lambda)` where `TV` is
//! [`tv_weighted_aniso`]. The solution is `w0` minus the projection of `w0`
//! onto `lambda K`, with `K` the set of `1/2 (div(g xi) + div_rot(g eta))` over
//! dual fields whose components all lie in `[-1, 1]`. The projection is found
//! with a semi-implicit gradient iteration on the dual fields.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::error::{Result, ShapeError};
use crate::energy::tv_weighted_aniso;
use crate::field::{ensure_same_dims, ScalarField, VectorField, WeightField};
use crate::grid_ops::{div_into, div_rot_into, grad_into, grad_rot_into};

/// Largest admissible time step once the weights are normalized to `max g = 1`.
pub const TAU_BOUND: f64 = 0.125;

/// How the per-iteration residue is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidueNorm {
    /// Plain l2 norm over all entries of a dual field. Depends on grid size.
    #[default]
    Plain,
    /// l2 norm divided by `sqrt(pixel count)`.
    PerPixel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RofParams {
    lambda: f64,
    tau: f64,
    tol: f64,
    max_iter: usize,
    residue_norm: ResidueNorm,
}

impl Default for RofParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tau: 0.1,
            tol: 0.002,
            max_iter: 2000,
            residue_norm: ResidueNorm::Plain,
        }
    }
}

impl RofParams {
    pub fn new(lambda: f64, tau: f64, tol: f64, max_iter: usize) -> Result<Self> {
        Self::default()
            .with_lambda(lambda)?
            .with_tau(tau)?
            .with_tol(tol)?
            .with_max_iter(max_iter)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ShapeError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(self)
    }

    /// The step applies to normalized weights, so it must not exceed 1/8.
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0 && tau <= TAU_BOUND) {
            return Err(ShapeError::InvalidParameter(format!(
                "tau must lie in (0, {TAU_BOUND}], got {tau}"
            )));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(ShapeError::InvalidParameter(format!(
                "tol must be positive, got {tol}"
            )));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Result<Self> {
        if max_iter == 0 {
            return Err(ShapeError::InvalidParameter("max_iter must be at least 1".into()));
        }
        self.max_iter = max_iter;
        Ok(self)
    }

    pub fn with_residue_norm(mut self, norm: ResidueNorm) -> Self {
        self.residue_norm = norm;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn residue_norm(&self) -> ResidueNorm {
        self.residue_norm
    }
}

/// The two dual fields; every component stays in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFieldPair {
    pub xi: VectorField,
    pub eta: VectorField,
}

impl DualFieldPair {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Ok(Self {
            xi: VectorField::zeros(height, width)?,
            eta: VectorField::zeros(height, width)?,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.xi.dims()
    }

    /// Largest absolute component over both fields.
    pub fn max_abs(&self) -> f64 {
        self.xi
            .comp_x()
            .iter()
            .chain(self.xi.comp_y())
            .chain(self.eta.comp_x())
            .chain(self.eta.comp_y())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_feasible(&self) -> bool {
        self.max_abs() <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residues: Vec<f64>,
    pub final_residue: f64,
    pub converged: bool,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct RofSolution {
    pub u: ScalarField,
    pub duals: DualFieldPair,
    pub report: SolveReport,
}

/// Rescales the weights to unit maximum and folds the scale into `lambda`.
///
/// `TV_g(w) + |w - w0|^2 / (2 lambda)` is `max g` times
/// `TV_g~(w) + |w - w0|^2 / (2 lambda max g)`, so both problems share their minimizer.
pub fn normalize_weights(g: &WeightField, lambda: f64) -> (WeightField, f64) {
    let m = g.max();
    let values = g.values().iter().map(|v| v / m).collect();
    let field = ScalarField::new(g.dims().0, g.dims().1, values)
        .expect("scaled weights stay finite");
    // the maximum entry divides to exactly 1
    let tilde = WeightField::new(field).expect("scaled weights stay positive");
    (tilde, lambda * m)
}

/// Primal ROF energy `TV_g(u) + |u - w0|^2 / (2 lambda)`.
pub fn primal_energy(u: &ScalarField, w0: &ScalarField, g: &WeightField, lambda: f64) -> Result<f64> {
    ensure_same_dims(w0.dims(), u.dims())?;
    let fidelity: f64 = u
        .values()
        .iter()
        .zip(w0.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(tv_weighted_aniso(u, g)? + fidelity / (2.0 * lambda))
}

/// `v = lambda/2 (div(g xi) + div_rot(g eta))`, the element of `lambda K`
/// carried by the dual fields.
pub fn dual_image(duals: &DualFieldPair, g: &WeightField, lambda: f64) -> Result<ScalarField> {
    ensure_same_dims(g.dims(), duals.xi.dims())?;
    ensure_same_dims(g.dims(), duals.eta.dims())?;
    let (h, w) = g.dims();
    let n = h * w;
    let gv = g.values();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let scale = |c: &[f64]| c.iter().zip(gv).map(|(x, y)| x * y).collect::<Vec<_>>();
    div_into(h, w, &scale(duals.xi.comp_x()), &scale(duals.xi.comp_y()), &mut a);
    div_rot_into(h, w, &scale(duals.eta.comp_x()), &scale(duals.eta.comp_y()), &mut b);
    ScalarField::new(
        h,
        w,
        a.iter().zip(&b).map(|(x, y)| 0.5 * lambda * (x + y)).collect(),
    )
}

/// Primal energy of `w0 - v` and the dual objective
/// `(|w0|^2 - |w0 - v|^2) / (2 lambda)` for the dual image `v`. When the
/// duals are feasible the first is never below the second, and they agree at
/// the optimum.
pub fn duality_bounds(
    w0: &ScalarField,
    g: &WeightField,
    lambda: f64,
    duals: &DualFieldPair,
) -> Result<(f64, f64)> {
    let v = dual_image(duals, g, lambda)?;
    let u = w0.zip_with(&v, |a, b| a - b)?;
    let primal = primal_energy(&u, w0, g, lambda)?;
    let w0_sq: f64 = w0.values().iter().map(|x| x * x).sum();
    let u_sq: f64 = u.values().iter().map(|x| x * x).sum();
    Ok((primal, (w0_sq - u_sq) / (2.0 * lambda)))
}

/// The four Lagrange multiplier fields of the box constraints, evaluated at
/// the residual field `w_res = lambda/2 (div(g xi) + div_rot(g eta)) - w0`:
/// `lambda/2 * g * |grad_x w_res|` and likewise for `grad_y`, `grad_xy`, `grad_yx`.
pub fn kkt_multipliers(
    duals: &DualFieldPair,
    w_res: &ScalarField,
    g: &WeightField,
    lambda: f64,
) -> Result<[ScalarField; 4]> {
    ensure_same_dims(g.dims(), w_res.dims())?;
    ensure_same_dims(g.dims(), duals.dims())?;
    let (h, w) = g.dims();
    let n = h * w;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut gxy = vec![0.0; n];
    let mut gyx = vec![0.0; n];
    grad_into(h, w, w_res.values(), &mut gx, &mut gy);
    grad_rot_into(h, w, w_res.values(), &mut gxy, &mut gyx);
    let gv = g.values();
    let mult = |d: &[f64]| {
        ScalarField::new(
            h,
            w,
            d.iter().zip(gv).map(|(x, gk)| 0.5 * lambda * gk * x.abs()).collect(),
        )
    };
    Ok([mult(&gx)?, mult(&gy)?, mult(&gxy)?, mult(&gyx)?])
}

/// Residual field `lambda/2 (div(g xi) + div_rot(g eta)) - w0`; the ROF
/// solution is its negation.
pub fn residual_field(
    w0: &ScalarField,
    g: &WeightField,
    lambda: f64,
    duals: &DualFieldPair,
) -> Result<ScalarField> {
    dual_image(duals, g, lambda)?.zip_with(w0, |v, w| v - w)
}

pub fn rof_solve(w0: &ScalarField, g: &WeightField, params: &RofParams) -> Result<RofSolution> {
    solve(w0, g, params, None)
}

/// Like [`rof_solve`], writing one `iter,residue,primal_energy` line per iteration to `trace`.
pub fn rof_solve_traced(
    w0: &ScalarField,
    g: &WeightField,
    params: &RofParams,
    trace: &mut dyn Write,
) -> Result<RofSolution> {
    solve(w0, g, params, Some(trace))
}

struct Workspace {
    gxi_x: Vec<f64>,
    gxi_y: Vec<f64>,
    geta_x: Vec<f64>,
    geta_y: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    w: Vec<f64>,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
    grad_xy: Vec<f64>,
    grad_yx: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || vec![0.0; n];
        Self {
            gxi_x: z(),
            gxi_y: z(),
            geta_x: z(),
            geta_y: z(),
            d1: z(),
            d2: z(),
            w: z(),
            grad_x: z(),
            grad_y: z(),
            grad_xy: z(),
            grad_yx: z(),
        }
    }

    /// `w = lambda/2 (div(g xi) + div_rot(g eta)) - w0`
    #[allow(clippy::too_many_arguments)]
    fn residual(
        &mut self,
        h: usize,
        width: usize,
        g: &[f64],
        lambda: f64,
        w0: &[f64],
        xi: (&[f64], &[f64]),
        eta: (&[f64], &[f64]),
    ) {
        #[allow(clippy::needless_range_loop)]
        for k in 0..g.len() {
            self.gxi_x[k] = g[k] * xi.0[k];
            self.gxi_y[k] = g[k] * xi.1[k];
            self.geta_x[k] = g[k] * eta.0[k];
            self.geta_y[k] = g[k] * eta.1[k];
        }
        div_into(h, width, &self.gxi_x, &self.gxi_y, &mut self.d1);
        div_rot_into(h, width, &self.geta_x, &self.geta_y, &mut self.d2);
        #[allow(clippy::needless_range_loop)]
        for k in 0..g.len() {
            self.w[k] = 0.5 * lambda * (self.d1[k] + self.d2[k]) - w0[k];
        }
    }
}

/// `(p + c d) / (1 + c |d|)` in place, returning the squared change.
#[inline]
fn project_step(p: &mut [f64], d: &[f64], g: &[f64], step: f64) -> f64 {
    let mut change = 0.0;
    for k in 0..p.len() {
        let c = g[k] * step;
        let next = (p[k] + c * d[k]) / (1.0 + c * d[k].abs());
        let delta = next - p[k];
        change += delta * delta;
        p[k] = next;
    }
    change
}

fn solve(
    w0: &ScalarField,
    g: &WeightField,
    params: &RofParams,
    mut trace: Option<&mut dyn Write>,
) -> Result<RofSolution> {
    ensure_same_dims(w0.dims(), g.dims())?;
    let start = Instant::now();
    let (h, width) = w0.dims();
    let n = h * width;
    let (g_tilde, lambda) = normalize_weights(g, params.lambda);
    let gt = g_tilde.values();
    let step = params.tau / lambda;
    let norm_scale = match params.residue_norm {
        ResidueNorm::Plain => 1.0,
        ResidueNorm::PerPixel => 1.0 / (n as f64).sqrt(),
    };

    let mut xi_x = vec![0.0; n];
    let mut xi_y = vec![0.0; n];
    let mut eta_x = vec![0.0; n];
    let mut eta_y = vec![0.0; n];
    let mut ws = Workspace::new(n);
    let mut residues = Vec::new();
    let mut converged = false;

    for iter in 1..=params.max_iter {
        ws.residual(h, width, gt, lambda, w0.values(), (&xi_x, &xi_y), (&eta_x, &eta_y));
        grad_into(h, width, &ws.w, &mut ws.grad_x, &mut ws.grad_y);
        grad_rot_into(h, width, &ws.w, &mut ws.grad_xy, &mut ws.grad_yx);

        let dxi = project_step(&mut xi_x, &ws.grad_x, gt, step)
            + project_step(&mut xi_y, &ws.grad_y, gt, step);
        let deta = project_step(&mut eta_x, &ws.grad_xy, gt, step)
            + project_step(&mut eta_y, &ws.grad_yx, gt, step);
        debug_assert!(xi_x
            .iter()
            .chain(&xi_y)
            .chain(&eta_x)
            .chain(&eta_y)
            .all(|v| v.abs() <= 1.0));

        let r = dxi.sqrt().max(deta.sqrt()) * norm_scale;
        residues.push(r);

        if let Some(sink) = trace.as_deref_mut() {
            ws.residual(h, width, gt, lambda, w0.values(), (&xi_x, &xi_y), (&eta_x, &eta_y));
            let u = ScalarField::new(h, width, ws.w.iter().map(|v| -v).collect())?;
            let e = primal_energy(&u, w0, g, params.lambda)?;
            writeln!(sink, "{iter},{r:e},{e:e}")?;
        }

        if r < params.tol {
            converged = true;
            break;
        }
    }

    ws.residual(h, width, gt, lambda, w0.values(), (&xi_x, &xi_y), (&eta_x, &eta_y));
    let u = ScalarField::new(h, width, ws.w.iter().map(|v| -v).collect())?;
    let duals = DualFieldPair {
        xi: VectorField::new(h, width, xi_x, xi_y)?,
        eta: VectorField::new(h, width, eta_x, eta_y)?,
    };
    let final_residue = residues.last().copied().unwrap_or(0.0);
    Ok(RofSolution {
        u,
        duals,
        report: SolveReport {
            iterations: residues.len(),
            residues,
            final_residue,
            converged,
            wall_time: start.elapsed(),
        },
    })
}
