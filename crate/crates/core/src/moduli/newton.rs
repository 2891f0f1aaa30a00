//! Predictor-corrector tracing of the special Lagrangian moduli space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{im_omega_values, omega_values, qualities_in, Immersion};
use crate::complex::Cochain;
use crate::cy;
use crate::error::{Error, Result};
use crate::geometry::{factorial, simplex_volume, Embedding};
use crate::hodge::{harmonic_fields_dirichlet, HodgeConfig};
use crate::metric::DualScheme;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub direction: usize,
    pub step: f64,
    pub steps: usize,
    /// Bound on the SL defect (residual per unit simplex volume).
    pub tol_sl: f64,
    pub max_iterations: usize,
    /// Fraction of the starting minimal quality below which a step is rejected.
    pub quality_floor: f64,
    pub hodge: HodgeConfig,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            direction: 0,
            step: 1e-2,
            steps: 10,
            tol_sl: 1e-10,
            max_iterations: 25,
            quality_floor: 0.1,
            hodge: HodgeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub positions: Vec<Vec<f64>>,
    /// SL defect of the corrected immersion.
    pub sl_residual: f64,
    /// Star norm of the connecting 1-cochain in the previous pullback metric.
    pub theta_norm: f64,
    pub min_quality: f64,
    pub corrector_iterations: usize,
    /// Largest distance of a constrained boundary vertex to its Lagrangian.
    pub boundary_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorReport {
    pub iterations: usize,
    /// SL defect after each iteration, starting with the input.
    pub history: Vec<f64>,
}

fn residual_vector(imm: &Immersion, emb: &Embedding) -> DVector<f64> {
    let mut v = omega_values(imm.complex(), emb);
    v.extend(im_omega_values(imm.complex(), emb));
    DVector::from_vec(v)
}

/// Largest residual entry relative to its simplex volume, as in [`super::sl_defect`].
fn defect(imm: &Immersion, emb: &Embedding, r: &DVector<f64>) -> f64 {
    let cx = imm.complex();
    let n = cx.dim();
    let n2 = if n >= 2 { cx.count(2) } else { 0 };
    r.iter()
        .enumerate()
        .map(|(i, v)| {
            let (k, j) = if i < n2 { (2, i) } else { (n, i - n2) };
            v.abs() / simplex_volume(&emb.local_points(cx.simplex(k, j)))
        })
        .fold(0.0, f64::max)
}

/// Singular values below this fraction of the largest are treated as zero.
const PINV_CUTOFF: f64 = 1e-9;

/// Displacement directions per vertex: all of `R^{2n}` away from the
/// constrained boundary, the direction space of `Lambda_i` on `C_i`.
///
/// Restricting interior vertices to their fibers `E_v` leaves the discrete
/// system overdetermined on curved meshes (one residual pair per simplex
/// against `n` unknowns per vertex), so the tangential directions stay in and
/// the minimal-norm update keeps their drift small.
fn vertex_directions(imm: &Immersion) -> Vec<Vec<Vec<f64>>> {
    let m = 2 * imm.n();
    let full: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect();
    imm.frames()
        .iter()
        .map(|f| match f.component {
            Some(c) => imm.lambdas()[c].basis.clone(),
            None => full.clone(),
        })
        .collect()
}

/// Jacobian of the residual with respect to the direction coefficients.
///
/// Both residual parts are multilinear in the edge vectors from the first
/// vertex, so moving a vertex by `u` differentiates to the form evaluated
/// with that edge replaced by `u` (minus the sum over edges for the base vertex).
fn jacobian(imm: &Immersion, emb: &Embedding, dirs: &[Vec<Vec<f64>>]) -> DMatrix<f64> {
    let cx = imm.complex();
    let n = cx.dim();
    let mut offsets = Vec::with_capacity(dirs.len() + 1);
    let mut total = 0;
    for d in dirs {
        offsets.push(total);
        total += d.len();
    }
    let n2 = if n >= 2 { cx.count(2) } else { 0 };
    let rows = n2 + cx.count(n);
    let mut jac = DMatrix::zeros(rows, total);

    for i in 0..n2 {
        let s = cx.simplex(2, i);
        let sign = cx.orientation(2, i) as f64 * 0.5;
        let e1 = emb.delta(s[0], s[1]);
        let e2 = emb.delta(s[0], s[2]);
        for (slot, &v) in s.iter().enumerate() {
            for (k, u) in dirs[v].iter().enumerate() {
                let val = match slot {
                    0 => -cy::omega(u, &e2) - cy::omega(&e1, u),
                    1 => cy::omega(u, &e2),
                    _ => cy::omega(&e1, u),
                };
                jac[(i, offsets[v] + k)] = sign * val;
            }
        }
    }
    let nf = factorial(n);
    for i in 0..cx.count(n) {
        let t = cx.oriented_top(i);
        let edges: Vec<Vec<f64>> = t[1..].iter().map(|&v| emb.delta(t[0], v)).collect();
        for (k, u) in dirs[t[0]].iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                let mut e = edges.clone();
                e[j] = u.clone();
                acc += cy::omega_top(&e).im;
            }
            jac[(n2 + i, offsets[t[0]] + k)] = -acc / nf;
        }
        for (j, &v) in t[1..].iter().enumerate() {
            for (k, u) in dirs[v].iter().enumerate() {
                let mut e = edges.clone();
                e[j] = u.clone();
                jac[(n2 + i, offsets[v] + k)] = cy::omega_top(&e).im / nf;
            }
        }
    }
    jac
}

/// Gauss-Newton with minimal-norm updates, projecting `imm` onto the
/// discrete special Lagrangian condition until the SL defect is at most
/// `tol`. Frames stay fixed during the loop. `quality_floor` is an absolute
/// lower bound on the minimal simplex quality.
pub fn project_to_sl(
    imm: &Immersion,
    tol: f64,
    max_iterations: usize,
    quality_floor: f64,
) -> Result<(Immersion, CorrectorReport)> {
    let dirs = vertex_directions(imm);
    let mut emb = imm.embedding().clone();
    let mut r = residual_vector(imm, &emb);
    let mut history = vec![defect(imm, &emb, &r)];
    let mut iterations = 0;
    while defect(imm, &emb, &r) > tol {
        if iterations == max_iterations {
            return Err(Error::CorrectorDiverged(format!(
                "defect {:e} after {iterations} iterations",
                defect(imm, &emb, &r)
            )));
        }
        iterations += 1;
        let jac = jacobian(imm, &emb, &dirs);
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let delta = svd
            .pseudo_inverse(PINV_CUTOFF * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::SolverFailure(e.to_string()))?
            * &r;
        // backtrack until the residual decreases
        let current = defect(imm, &emb, &r);
        let mut scale = 1.0;
        let accepted = loop {
            let mut next = emb.clone();
            let mut col = 0;
            for (v, d) in dirs.iter().enumerate() {
                for u in d {
                    crate::geometry::axpy(&mut next.positions[v], -scale * delta[col], u);
                    col += 1;
                }
            }
            let quality = qualities_in(imm.complex(), &next).into_iter().fold(f64::INFINITY, f64::min);
            let rn = residual_vector(imm, &next);
            if quality >= quality_floor && defect(imm, &next, &rn) < current {
                break Some((next, rn));
            }
            scale *= 0.5;
            if scale < 1e-3 {
                break None;
            }
        };
        let Some((next, rn)) = accepted else {
            return Err(Error::CorrectorDiverged(format!(
                "no decrease from defect {current:e} (quality guard {quality_floor:e})"
            )));
        };
        emb = next;
        r = rn;
        history.push(defect(imm, &emb, &r));
    }
    let out = imm.with_positions(emb.positions)?;
    Ok((out, CorrectorReport { iterations, history }))
}

fn boundary_residual(imm: &Immersion) -> f64 {
    let mut r: f64 = 0.0;
    for (v, f) in imm.frames().iter().enumerate() {
        if let Some(c) = f.component {
            r = r.max(imm.lambdas()[c].distance(&imm.positions()[v], imm.space().periods()));
        }
    }
    r
}

/// Traces the moduli space from `imm` along the chosen harmonic Dirichlet
/// direction. Every step recomputes the harmonic basis of the current
/// pullback metric, deforms by `step` times the selected field (sign kept
/// continuous along the trace) and corrects back onto the SL condition.
/// The returned list starts with the input immersion as step 0.
pub fn newton_trace(imm: &Immersion, opts: &TraceOptions) -> Result<Vec<(TraceStep, Immersion)>> {
    if imm.complex().has_boundary() && !imm.is_constrained() {
        return Err(Error::InvalidImmersion(
            "tracing needs a Lagrangian for every boundary component".into(),
        ));
    }
    let start_quality = imm.min_quality();
    let floor = opts.quality_floor * start_quality;
    let r0 = super::sl_defect(imm);
    if r0 > opts.tol_sl {
        return Err(Error::NotSpecialLagrangian(r0));
    }
    let mut out = vec![(
        TraceStep {
            step: 0,
            positions: imm.positions().to_vec(),
            sl_residual: r0,
            theta_norm: 0.0,
            min_quality: start_quality,
            corrector_iterations: 0,
            boundary_residual: boundary_residual(imm),
        },
        imm.clone(),
    )];
    let mut current = imm.clone();
    let mut previous: Option<Cochain> = None;
    for s in 1..=opts.steps {
        let metric = current.pullback_metric(DualScheme::Barycentric)?;
        let basis = harmonic_fields_dirichlet(&metric, 1, &opts.hodge)?;
        if opts.direction >= basis.dim() {
            return Err(Error::DirectionIndexOutOfRange {
                index: opts.direction,
                dimension: basis.dim(),
            });
        }
        let mut h = basis.fields[opts.direction].clone();
        if let Some(p) = &previous {
            if h.values.dot(&p.values) < 0.0 {
                h.values = -h.values;
            }
        }
        let mut theta = h.clone();
        theta.values *= opts.step;
        let theta_norm = metric.norm(&theta)?;
        let predicted = super::deform(&current, &theta)?;
        let (corrected, report) = project_to_sl(&predicted, opts.tol_sl, opts.max_iterations, floor)?;
        log::debug!(
            "trace step {s}: theta norm {theta_norm:.3e}, corrector {} iterations",
            report.iterations
        );
        out.push((
            TraceStep {
                step: s,
                positions: corrected.positions().to_vec(),
                sl_residual: super::sl_defect(&corrected),
                theta_norm,
                min_quality: corrected.min_quality(),
                corrector_iterations: report.iterations,
                boundary_residual: boundary_residual(&corrected),
            },
            corrected.clone(),
        ));
        previous = Some(h);
        current = corrected;
    }
    Ok(out)
}
