//! BFGS minimization and the orbital-rotation 1-norm optimizers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragments::{make_rotation, n_generators, rotate_tensors};
use crate::grouping::{lambda_ac, sorted_insertion};
use crate::pauli::{jordan_wigner, lambda_pauli_closed_form};
use crate::tensors::{one_body_adjust, SpatialTensors};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradMode {
    Analytic,
    CentralDifference { step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub grad_mode: GradMode,
    pub tol_grad: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Huber width for the absolute values in 1-norm costs; `None` keeps them exact.
    pub huber: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grad_mode: GradMode::Analytic,
            tol_grad: 1e-8,
            max_iters: 5000,
            restarts: 3,
            seed: 0,
            huber: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_grad > 0.0) {
            return Err(Error::Contract("tol_grad must be positive".into()));
        }
        if let GradMode::CentralDifference { step } = self.grad_mode {
            if !(step > 0.0) {
                return Err(Error::Contract("finite-difference step must be positive".into()));
            }
        }
        Ok(())
    }
}

pub trait CostFunction: Sync {
    fn dim(&self) -> usize;

    fn cost(&self, x: &[f64]) -> f64;

    /// Writes the gradient into `g` and returns the cost. The default is a
    /// central difference with step `1e-6`.
    fn cost_and_gradient(&self, x: &[f64], g: &mut [f64]) -> f64 {
        central_difference(self, x, 1e-6, g);
        self.cost(x)
    }
}

pub fn central_difference<F: CostFunction + ?Sized>(f: &F, x: &[f64], step: f64, g: &mut [f64]) {
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let fp = f.cost(&xp);
        xp[i] = x[i] - step;
        let fm = f.cost(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Evaluator<'a, F: CostFunction + ?Sized> {
    f: &'a F,
    mode: GradMode,
}

impl<F: CostFunction + ?Sized> Evaluator<'_, F> {
    fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
        match self.mode {
            GradMode::Analytic => self.f.cost_and_gradient(x, g),
            GradMode::CentralDifference { step } => {
                central_difference(self.f, x, step, g);
                self.f.cost(x)
            }
        }
    }
}

struct Trial {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Strong-Wolfe line search (bracketing then zoom). Falls back to the best
/// sufficient-decrease point when the curvature condition cannot be met.
fn line_search<F: CostFunction + ?Sized>(
    ev: &Evaluator<F>,
    x: &[f64],
    fx: f64,
    gx: &[f64],
    p: &[f64],
    alpha0: f64,
    iteration: usize,
) -> Result<Option<Trial>> {
    let d0 = dot(gx, p);
    let k = x.len();
    let mut xt = vec![0.0; k];
    let mut gt = vec![0.0; k];
    let mut eval = |a: f64, gt: &mut Vec<f64>| -> Result<f64> {
        for i in 0..k {
            xt[i] = x[i] + a * p[i];
        }
        let v = ev.eval(&xt, gt);
        if !v.is_finite() || gt.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { iteration, last: x.to_vec() });
        }
        Ok(v)
    };

    let (mut a_prev, mut f_prev, mut d_prev, mut g_prev) = (0.0, fx, d0, gx.to_vec());
    let mut a = alpha0;
    let mut bracket = None;
    for i in 0..20 {
        let fa = eval(a, &mut gt)?;
        let da = dot(&gt, p);
        if fa > fx + C1 * a * d0 || (i > 0 && fa >= f_prev) {
            bracket = Some(((a_prev, f_prev, d_prev, g_prev.clone()), (a, fa, da, gt.clone())));
            break;
        }
        if da.abs() <= -C2 * d0 {
            return Ok(Some(Trial { alpha: a, value: fa, grad: gt }));
        }
        if da >= 0.0 {
            bracket = Some(((a, fa, da, gt.clone()), (a_prev, f_prev, d_prev, g_prev.clone())));
            break;
        }
        a_prev = a;
        f_prev = fa;
        d_prev = da;
        g_prev = gt.clone();
        a *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok((f_prev < fx).then_some(Trial { alpha: a_prev, value: f_prev, grad: g_prev }));
    };

    for _ in 0..20 {
        let (alo, flo, dlo, _) = &lo;
        let (ahi, fhi, dhi, _) = &hi;
        let width = (ahi - alo).abs();
        if width <= 1e-14 * alo.abs().max(ahi.abs()).max(1e-300) {
            break;
        }
        // Safeguarded cubic interpolation, bisection as fallback.
        let d1 = dlo + dhi - 3.0 * (flo - fhi) / (alo - ahi);
        let disc = d1 * d1 - dlo * dhi;
        let mut at = f64::NAN;
        if disc >= 0.0 {
            let d2 = disc.sqrt().copysign(ahi - alo);
            at = ahi - (ahi - alo) * (dhi + d2 - d1) / (dhi - dlo + 2.0 * d2);
        }
        let (lo_b, hi_b) = (alo.min(*ahi), alo.max(*ahi));
        if !at.is_finite() || at < lo_b + 0.1 * width || at > hi_b - 0.1 * width {
            at = 0.5 * (alo + ahi);
        }
        let ft = eval(at, &mut gt)?;
        let dt = dot(&gt, p);
        if ft > fx + C1 * at * d0 || ft >= *flo {
            hi = (at, ft, dt, gt.clone());
        } else {
            if dt.abs() <= -C2 * d0 {
                return Ok(Some(Trial { alpha: at, value: ft, grad: gt }));
            }
            if dt * (ahi - alo) >= 0.0 {
                hi = lo.clone();
            }
            lo = (at, ft, dt, gt.clone());
        }
    }
    let (alo, flo, _, glo) = lo;
    Ok((alo > 0.0 && flo < fx).then_some(Trial { alpha: alo, value: flo, grad: glo }))
}

/// Quasi-Newton minimization with the inverse-Hessian BFGS update.
/// Stops at `|grad|_inf <= tol_grad`, after `max_iters`, or when no step
/// decreases the cost any more.
pub fn minimize<F: CostFunction + ?Sized>(f: &F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum> {
    cfg.validate()?;
    let k = f.dim();
    if x0.len() != k {
        return Err(Error::Dimension(format!("start point has {} entries, cost expects {k}", x0.len())));
    }
    let ev = Evaluator { f, mode: cfg.grad_mode };
    let mut x = x0.to_vec();
    let mut g = vec![0.0; k];
    let mut fx = ev.eval(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iteration: 0, last: x });
    }
    if k == 0 {
        return Ok(Minimum { x, value: fx, iterations: 0, grad_norm: 0.0 });
    }
    let mut h = vec![0.0; k * k];
    let reset = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..k {
            h[i * k + i] = 1.0;
        }
    };
    reset(&mut h);
    let mut fresh = true;
    let mut p = vec![0.0; k];
    let mut hy = vec![0.0; k];
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < cfg.max_iters {
        if inf_norm(&g) <= cfg.tol_grad {
            break;
        }
        for i in 0..k {
            p[i] = -dot(&h[i * k..(i + 1) * k], &g);
        }
        if dot(&p, &g) >= 0.0 {
            reset(&mut h);
            fresh = true;
            p.iter_mut().zip(&g).for_each(|(pi, gi)| *pi = -gi);
        }
        let alpha0 = if fresh { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let trial = match line_search(&ev, &x, fx, &g, &p, alpha0, iterations)? {
            Some(t) => t,
            None if !fresh => {
                reset(&mut h);
                fresh = true;
                continue;
            }
            None => break,
        };
        iterations += 1;
        let s: Vec<f64> = p.iter().map(|v| v * trial.alpha).collect();
        let y: Vec<f64> = trial.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        for i in 0..k {
            x[i] += s[i];
        }
        let improvement = fx - trial.value;
        fx = trial.value;
        g = trial.grad;
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            let rho = 1.0 / sy;
            for i in 0..k {
                hy[i] = dot(&h[i * k..(i + 1) * k], &y);
            }
            let yhy = dot(&y, &hy);
            let a = rho * (1.0 + rho * yhy);
            for i in 0..k {
                for j in 0..k {
                    h[i * k + j] += a * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        // Non-smooth costs never reach the gradient tolerance; give up once
        // steps stop paying off.
        if improvement <= 1e-10 * fx.abs().max(1e-300) {
            stalled += 1;
            if stalled >= 5 {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    let grad_norm = inf_norm(&g);
    Ok(Minimum { x, value: fx, iterations, grad_norm })
}

/// Runs `x0` and `restarts` perturbed copies (uniform in `[-scale, scale]`
/// added to `x0`) in parallel and keeps the lowest cost; ties go to the
/// earliest start.
pub fn minimize_with_restarts<F: CostFunction + ?Sized>(
    f: &F,
    x0: &[f64],
    cfg: &OptimizerConfig,
    scale: f64,
) -> Result<Minimum> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![x0.to_vec()];
    for _ in 0..cfg.restarts {
        starts.push(x0.iter().map(|v| v + rng.gen_range(-scale..=scale)).collect());
    }
    let results: Vec<Result<Minimum>> = starts.par_iter().map(|s| minimize(f, s, cfg)).collect();
    let mut best: Option<Minimum> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.value < b.value) {
                    best = Some(m);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one start"))
}

fn smooth_abs(v: f64, huber: Option<f64>) -> f64 {
    match huber {
        Some(d) if v.abs() < d => 0.5 * v * v / d + 0.5 * d,
        _ => v.abs(),
    }
}

/// Closed-form Pauli 1-norm of the rotated Hamiltonian as a function of the
/// rotation generator.
pub struct RotatedPauliCost<'a> {
    t: &'a SpatialTensors,
    huber: Option<f64>,
}

impl<'a> RotatedPauliCost<'a> {
    pub fn new(t: &'a SpatialTensors, huber: Option<f64>) -> Self {
        Self { t, huber }
    }
}

impl CostFunction for RotatedPauliCost<'_> {
    fn dim(&self) -> usize {
        n_generators(self.t.n_orb())
    }

    fn cost(&self, x: &[f64]) -> f64 {
        let r = match make_rotation(self.t.n_orb(), x) {
            Ok(r) => r,
            Err(_) => return f64::NAN,
        };
        let rt = rotate_tensors(&r, self.t);
        match self.huber {
            None => lambda_pauli_closed_form(&rt),
            Some(_) => huber_pauli_norm(&rt, self.huber),
        }
    }
}

fn huber_pauli_norm(t: &SpatialTensors, huber: Option<f64>) -> f64 {
    let n = t.n_orb();
    let g = t.tbt();
    let mut total: f64 = one_body_adjust(t).iter().map(|v| smooth_abs(*v, huber)).sum();
    for i in 0..n {
        for k in 0..i {
            for j in 0..n {
                for l in 0..j {
                    total += smooth_abs(g[(i, j, k, l)] - g[(i, l, k, j)], huber);
                }
            }
        }
    }
    total + 0.5 * g.as_slice().iter().map(|v| smooth_abs(*v, huber)).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalOptimum {
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub rotated: SpatialTensors,
}

/// Minimize the closed-form Pauli 1-norm over orbital rotations. Starts at
/// `theta = 0` plus `cfg.restarts` perturbations of scale 0.05.
pub fn oo_pauli(t: &SpatialTensors, cfg: &OptimizerConfig) -> Result<OrbitalOptimum> {
    let cost = RotatedPauliCost::new(t, cfg.huber);
    let mut cfg = cfg.clone();
    if cfg.grad_mode == GradMode::Analytic {
        // The cost is piecewise smooth; differences are its gradient here.
        cfg.grad_mode = GradMode::CentralDifference { step: 1e-6 };
    }
    let k = cost.dim();
    let start = lambda_pauli_closed_form(t);
    let best = minimize_with_restarts(&cost, &vec![0.0; k], &cfg, 0.05)?;
    let rotation = make_rotation(t.n_orb(), &best.x)?;
    let rotated = rotate_tensors(&rotation, t);
    let lambda = lambda_pauli_closed_form(&rotated);
    if lambda > start {
        return Ok(OrbitalOptimum { theta: vec![0.0; k], lambda: start, rotated: t.clone() });
    }
    Ok(OrbitalOptimum { theta: best.x, lambda, rotated })
}

/// Grouped 1-norm of the Hamiltonian rotated by the Pauli-optimal orbitals.
pub fn oo_ac(t: &SpatialTensors, cfg: &OptimizerConfig) -> Result<(OrbitalOptimum, f64)> {
    let opt = oo_pauli(t, cfg)?;
    let ac = lambda_ac(&sorted_insertion(&jordan_wigner(&opt.rotated)));
    Ok((opt, ac))
}
