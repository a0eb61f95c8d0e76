//! Reduced-order large-deflection bending model of the cantilevered
//! screw.
//!
//! The flexible region plus the rounded tip is discretized into planar
//! two-node corotational beam elements (axial + bending). The rigid
//! region acts as a perfect clamp. Displacement control prescribes the
//! transverse tip degree of freedom and Newton-Raphson iterates the
//! free degrees of freedom to equilibrium; the reported force is the
//! reaction at the controlled degree of freedom.
//!
//! Units: mm, N, N/mm^2 internally (moduli enter in GPa and are
//! converted on discretization).

use crate::geometry::{section_properties, Region, ScrewSpec};
use crate::material::{bending_modulus, MaterialModel};
use crate::validation::FDCurve;
use nalgebra::{DMatrix, DVector};

/// GPa -> N/mm^2.
const GPA_TO_NMM2: f64 = 1.0e3;

/// One beam element of the discretized cantilever.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamElement {
    /// Reference length, mm.
    pub length: f64,
    /// Axial stiffness EA, N (knock-down already applied).
    pub ea: f64,
    /// Bending stiffness EI, N mm^2 (knock-down already applied).
    pub ei: f64,
    /// Shear flexibility 1 / (G A_s) in 1/N; zero recovers the
    /// Euler-Bernoulli element. Kept per element so a shear-deformable
    /// variant needs no interface change.
    pub shear_flex: f64,
    pub region: Region,
}

/// Discretized cantilever: clamped at the rigid/flexible junction,
/// tip at the far end.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamModel {
    pub elements: Vec<BeamElement>,
    /// Cantilever length (flexible region + tip segment), mm.
    pub span: f64,
    /// Flexure stiffness knock-down applied to the flexible elements.
    pub kappa_f: f64,
}

/// One accepted displacement increment of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementRecord {
    pub displacement: f64,
    pub force: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Per-increment convergence history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub increments: Vec<IncrementRecord>,
}

/// Newton-Raphson and increment-control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Residual norm tolerance, N.
    pub tol: f64,
    /// Newton iterations per increment before halving.
    pub max_iterations: usize,
    /// Nominal displacement increment, mm.
    pub increment: f64,
    /// Smallest allowed increment as a fraction of the nominal one.
    pub min_increment_factor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-6,
            max_iterations: 25,
            increment: 0.5,
            min_increment_factor: 1.0 / 64.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid spec: {0}")]
    InvalidSpec(#[from] crate::geometry::GeometryError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "Newton iteration did not converge at displacement {at_displacement} mm \
         after increment halving was exhausted"
    )]
    NonConvergence {
        at_displacement: f64,
        trace: SolveTrace,
    },
    #[error("calibration target {target} N unreachable; force at kappa_f = 1 is {at_unity} N")]
    Calibration { target: f64, at_unity: f64 },
    #[error("solver failed for material {label}: {source}")]
    Material {
        label: String,
        #[source]
        source: Box<SolverError>,
    },
}

/// Builds the beam model for a valid spec: uniform elements over
/// `len_flexible + tip_radius`, with EI and EA of flexible-region
/// elements multiplied by `kappa_f`. Thread material contributes no
/// stiffness; the section is the core annulus.
pub fn discretize(
    spec: &ScrewSpec,
    m: &MaterialModel,
    kappa_f: f64,
    n_elements: usize,
) -> Result<BeamModel, SolverError> {
    spec.validate()
        .map_err(crate::geometry::GeometryError::InvalidSpec)?;
    if !(kappa_f > 0.0 && kappa_f <= 1.0) {
        return Err(SolverError::Domain(format!(
            "kappa_f = {kappa_f} outside (0, 1]"
        )));
    }
    if n_elements < 8 {
        return Err(SolverError::Domain(format!(
            "n_elements = {n_elements}, minimum is 8"
        )));
    }
    let (area, second_moment) = section_properties(spec.core_d, spec.cannula_d)?;
    let e = bending_modulus(m) * GPA_TO_NMM2;
    let span = spec.len_flexible + spec.tip_radius;
    let length = span / n_elements as f64;
    let elements = (0..n_elements)
        .map(|i| {
            let mid = (i as f64 + 0.5) * length;
            let (region, knock) = if mid <= spec.len_flexible {
                (Region::Flexible, kappa_f)
            } else {
                (Region::Tip, 1.0)
            };
            BeamElement {
                length,
                ea: knock * e * area,
                ei: knock * e * second_moment,
                shear_flex: 0.0,
                region,
            }
        })
        .collect();
    Ok(BeamModel {
        elements,
        span,
        kappa_f,
    })
}

/// Deformed configuration: 3 DOF per node (u, w, theta), node 0 at
/// the clamp.
#[derive(Debug, Clone)]
pub struct BeamState {
    pub dofs: Vec<f64>,
    /// Tip transverse displacement currently imposed.
    pub imposed: f64,
}

impl BeamModel {
    pub fn n_nodes(&self) -> usize {
        self.elements.len() + 1
    }

    /// Reference axial node coordinates, clamp at 0.
    fn node_x(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_nodes());
        let mut acc = 0.0;
        x.push(0.0);
        for e in &self.elements {
            acc += e.length;
            x.push(acc);
        }
        x
    }

    pub fn initial_state(&self) -> BeamState {
        BeamState {
            dofs: vec![0.0; 3 * self.n_nodes()],
            imposed: 0.0,
        }
    }

    /// Index of the controlled DOF (transverse displacement of the
    /// tip node).
    fn controlled_dof(&self) -> usize {
        3 * (self.n_nodes() - 1) + 1
    }

    /// Internal force vector and consistent tangent for the current
    /// DOF vector (3 per node: u, w, theta).
    pub fn assemble(&self, dofs: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let ndof = dofs.len();
        let x = self.node_x();
        let mut f = DVector::zeros(ndof);
        let mut k = DMatrix::zeros(ndof, ndof);
        for (i, el) in self.elements.iter().enumerate() {
            let map = [3 * i, 3 * i + 1, 3 * i + 2, 3 * i + 3, 3 * i + 4, 3 * i + 5];
            let local: [f64; 6] = std::array::from_fn(|j| dofs[map[j]]);
            let (fe, ke) = element_force_tangent(el, x[i], x[i + 1], &local);
            for a in 0..6 {
                f[map[a]] += fe[a];
                for b in 0..6 {
                    k[(map[a], map[b])] += ke[a][b];
                }
            }
        }
        (f, k)
    }

    /// Stored elastic energy of a configuration, N mm.
    pub fn strain_energy(&self, state: &BeamState) -> f64 {
        let x = self.node_x();
        let mut energy = 0.0;
        for (i, el) in self.elements.iter().enumerate() {
            let local: [f64; 6] = std::array::from_fn(|j| state.dofs[3 * i + j]);
            let kin = local_kinematics(el, x[i], x[i + 1], &local);
            let (kb11, kb12) = local_bending_stiffness(el);
            energy += 0.5 * el.ea / el.length * kin.stretch * kin.stretch;
            energy += 0.5
                * (kb11 * (kin.theta1 * kin.theta1 + kin.theta2 * kin.theta2)
                    + 2.0 * kb12 * kin.theta1 * kin.theta2);
        }
        energy
    }

    /// Advances `state` to tip displacement `delta`, appending
    /// accepted increments to `trace`. Returns the tip reaction force.
    pub fn solve_to(
        &self,
        state: &mut BeamState,
        delta: f64,
        settings: &SolverSettings,
        trace: &mut SolveTrace,
    ) -> Result<f64, SolverError> {
        if delta < state.imposed {
            return Err(SolverError::Domain(format!(
                "target displacement {delta} below current state {}",
                state.imposed
            )));
        }
        let controlled = self.controlled_dof();
        let fixed = [0usize, 1, 2];
        let free: Vec<usize> = (0..state.dofs.len())
            .filter(|d| !fixed.contains(d) && *d != controlled)
            .collect();

        let min_inc = settings.increment * settings.min_increment_factor;
        let mut inc = settings.increment.min((delta - state.imposed).max(0.0));
        let mut force = self.reaction(&state.dofs, controlled);
        while state.imposed < delta - 1e-12 {
            let target = (state.imposed + inc).min(delta);
            let mut trial = state.dofs.clone();
            self.predict(&mut trial, &free, controlled, target - state.imposed);
            trial[controlled] = target;
            match self.newton(&mut trial, &free, controlled, settings) {
                Some((f, iters, res)) => {
                    state.dofs = trial;
                    state.imposed = target;
                    force = f;
                    trace.increments.push(IncrementRecord {
                        displacement: target,
                        force: f,
                        iterations: iters,
                        residual: res,
                    });
                    // Recover toward the nominal increment after a cutback.
                    inc = (inc * 2.0).min(settings.increment);
                }
                None => {
                    inc /= 2.0;
                    if inc < min_inc * (1.0 - 1e-12) {
                        return Err(SolverError::NonConvergence {
                            at_displacement: target,
                            trace: std::mem::take(trace),
                        });
                    }
                }
            }
        }
        Ok(force)
    }

    /// First-order predictor for an increment of the controlled DOF:
    /// moves the free DOFs along the tangent response
    /// `du_f = -K_ff^-1 K_fc d_delta` so Newton starts near the new
    /// equilibrium instead of with a kink at the tip element.
    fn predict(&self, dofs: &mut [f64], free: &[usize], controlled: usize, d_delta: f64) {
        let (_, k) = self.assemble(dofs);
        let n = free.len();
        let mut kff = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for (a, &da) in free.iter().enumerate() {
            rhs[a] = -k[(da, controlled)] * d_delta;
            for (b, &db) in free.iter().enumerate() {
                kff[(a, b)] = k[(da, db)];
            }
        }
        if let Some(du) = kff.lu().solve(&rhs) {
            if du.iter().all(|v| v.is_finite()) {
                for (a, &da) in free.iter().enumerate() {
                    dofs[da] += du[a];
                }
            }
        }
    }

    fn newton(
        &self,
        dofs: &mut [f64],
        free: &[usize],
        controlled: usize,
        settings: &SolverSettings,
    ) -> Option<(f64, usize, f64)> {
        for it in 1..=settings.max_iterations {
            let (f, k) = self.assemble(dofs);
            let res_norm = free
                .iter()
                .map(|&d| f[d].abs())
                .fold(0.0f64, f64::max);
            // Absolute tolerance with a roundoff floor: internal force
            // entries of magnitude f_scale cannot cancel below about
            // 1e-10 of themselves in double precision.
            let f_scale = f.amax();
            let tol = settings.tol.max(1e-10 * f_scale);
            if res_norm < tol {
                return Some((f[controlled], it, res_norm));
            }
            let n = free.len();
            let mut kff = DMatrix::zeros(n, n);
            let mut rf = DVector::zeros(n);
            for (a, &da) in free.iter().enumerate() {
                rf[a] = -f[da];
                for (b, &db) in free.iter().enumerate() {
                    kff[(a, b)] = k[(da, db)];
                }
            }
            let du = kff.lu().solve(&rf)?;
            if !du.iter().all(|v| v.is_finite()) {
                return None;
            }
            // Stagnation: when the correction is negligible against
            // the configuration, the residual is pinned at assembly
            // roundoff and further iterations only churn noise.
            let dof_scale = dofs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if du.amax() < 1e-11 * (1.0 + dof_scale) {
                return Some((f[controlled], it, res_norm));
            }
            // Backtracking line search on the residual norm: the full
            // step can overshoot badly when an increment starts with a
            // kink at the controlled node.
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..8 {
                let mut candidate = dofs.to_vec();
                for (a, &da) in free.iter().enumerate() {
                    candidate[da] += alpha * du[a];
                }
                let (fc, _) = self.assemble(&candidate);
                let res_c = free.iter().map(|&d| fc[d].abs()).fold(0.0f64, f64::max);
                if res_c < res_norm || res_c < tol {
                    dofs.copy_from_slice(&candidate);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return None;
            }
        }
        None
    }

    fn reaction(&self, dofs: &[f64], controlled: usize) -> f64 {
        let (f, _) = self.assemble(dofs);
        f[controlled]
    }
}

struct LocalKinematics {
    stretch: f64,
    theta1: f64,
    theta2: f64,
    cos: f64,
    sin: f64,
    current_len: f64,
}

fn local_kinematics(el: &BeamElement, x1: f64, x2: f64, u: &[f64; 6]) -> LocalKinematics {
    let dx = (x2 + u[3]) - (x1 + u[0]);
    let dy = u[4] - u[1];
    let ln = (dx * dx + dy * dy).sqrt();
    let c = dx / ln;
    let s = dy / ln;
    // Reference axis is +x, so the rigid rotation is the chord angle.
    let beta = s.atan2(c);
    LocalKinematics {
        stretch: ln - el.length,
        theta1: wrap_angle(u[2] - beta),
        theta2: wrap_angle(u[5] - beta),
        cos: c,
        sin: s,
        current_len: ln,
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * std::f64::consts::PI);
    if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    } else if a < -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    }
    a
}

/// Local bending stiffness (diagonal, off-diagonal) including the
/// optional shear flexibility term.
fn local_bending_stiffness(el: &BeamElement) -> (f64, f64) {
    let l = el.length;
    let phi = 12.0 * el.ei * el.shear_flex / (l * l);
    let kb = el.ei / (l * (1.0 + phi));
    ((4.0 + phi) * kb, (2.0 - phi) * kb)
}

/// Corotational internal force and consistent tangent of one element.
fn element_force_tangent(
    el: &BeamElement,
    x1: f64,
    x2: f64,
    u: &[f64; 6],
) -> ([f64; 6], [[f64; 6]; 6]) {
    let kin = local_kinematics(el, x1, x2, u);
    let (c, s, ln) = (kin.cos, kin.sin, kin.current_len);
    let n_force = el.ea * kin.stretch / el.length;
    let (kb11, kb12) = local_bending_stiffness(el);
    let m1 = kb11 * kin.theta1 + kb12 * kin.theta2;
    let m2 = kb12 * kin.theta1 + kb11 * kin.theta2;

    let r = [-c, -s, 0.0, c, s, 0.0];
    let z = [s, -c, 0.0, -s, c, 0.0];
    let b2 = [-s / ln, c / ln, 1.0, s / ln, -c / ln, 0.0];
    let b3 = [-s / ln, c / ln, 0.0, s / ln, -c / ln, 1.0];

    let mut f = [0.0; 6];
    for a in 0..6 {
        f[a] = n_force * r[a] + m1 * b2[a] + m2 * b3[a];
    }

    let mut k = [[0.0; 6]; 6];
    let ea_l = el.ea / el.length;
    let geo_n = n_force / ln;
    let geo_m = (m1 + m2) / (ln * ln);
    for a in 0..6 {
        for b in 0..6 {
            k[a][b] = ea_l * r[a] * r[b]
                + kb11 * (b2[a] * b2[b] + b3[a] * b3[b])
                + kb12 * (b2[a] * b3[b] + b3[a] * b2[b])
                + geo_n * z[a] * z[b]
                + geo_m * (r[a] * z[b] + z[a] * r[b]);
        }
    }
    (f, k)
}

/// Equilibrium tip reaction at prescribed transverse tip displacement
/// `delta`, starting from the undeformed state.
pub fn solve_tip_displacement(
    model: &BeamModel,
    delta: f64,
    tol: f64,
) -> Result<(f64, SolveTrace), SolverError> {
    if delta < 0.0 {
        return Err(SolverError::Domain(format!(
            "delta = {delta} must be non-negative"
        )));
    }
    if !(tol > 0.0) {
        return Err(SolverError::Domain(format!("tol = {tol} must be positive")));
    }
    let settings = SolverSettings {
        tol,
        ..SolverSettings::default()
    };
    let mut state = model.initial_state();
    let mut trace = SolveTrace::default();
    let force = model.solve_to(&mut state, delta, &settings, &mut trace)?;
    Ok((force, trace))
}

/// Displacement grid of the bench protocol: 0.0, 0.5, ..., 6.0 mm.
pub fn protocol_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.5).collect()
}

/// Runs the displacement protocol: 13 samples at 0.5 mm increments up
/// to 6 mm, force 0 at displacement 0.
pub fn run_protocol(model: &BeamModel, settings: &SolverSettings) -> Result<FDCurve, SolverError> {
    let mut state = model.initial_state();
    let mut trace = SolveTrace::default();
    let mut samples = vec![(0.0, 0.0)];
    for &d in protocol_grid().iter().skip(1) {
        let force = model.solve_to(&mut state, d, settings, &mut trace)?;
        samples.push((d, force));
    }
    Ok(FDCurve {
        samples,
        label: String::new(),
    })
}

/// Calibrates the flexure knock-down factor so the tip reaction at
/// `target_delta` equals `target_force`, by a bracketing regula-falsi
/// / bisection hybrid on the monotone map kappa_f -> force.
///
/// Terminates when |F - target| < 1e-3 N.
pub fn calibrate_kappa(
    spec: &ScrewSpec,
    m: &MaterialModel,
    target_delta: f64,
    target_force: f64,
) -> Result<f64, SolverError> {
    const FORCE_TOL: f64 = 1e-3;
    if !(target_force > 0.0) {
        return Err(SolverError::Domain(format!(
            "target_force = {target_force} must be positive"
        )));
    }
    let settings = SolverSettings::default();
    let eval = |kappa: f64| -> Result<f64, SolverError> {
        let model = discretize(spec, m, kappa, 64)?;
        let mut state = model.initial_state();
        let mut trace = SolveTrace::default();
        model.solve_to(&mut state, target_delta, &settings, &mut trace)
    };

    let f_hi = eval(1.0)?;
    if (f_hi - target_force).abs() < FORCE_TOL {
        return Ok(1.0);
    }
    if f_hi < target_force {
        return Err(SolverError::Calibration {
            target: target_force,
            at_unity: f_hi,
        });
    }
    let mut lo = 1e-9;
    let mut hi = 1.0;
    let mut g_lo = eval(lo)? - target_force;
    let mut g_hi = f_hi - target_force;
    if g_lo > 0.0 {
        return Err(SolverError::Domain(format!(
            "target_force = {target_force} below force at kappa_f = {lo}"
        )));
    }
    for _ in 0..200 {
        // Regula falsi with a bisection fallback when the secant step
        // degenerates.
        let mut mid = lo - g_lo * (hi - lo) / (g_hi - g_lo);
        if !mid.is_finite() || mid <= lo || mid >= hi {
            mid = 0.5 * (lo + hi);
        }
        let g_mid = eval(mid)? - target_force;
        if g_mid.abs() < FORCE_TOL {
            return Ok(mid);
        }
        if g_mid < 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
        if hi - lo < f64::EPSILON * hi {
            break;
        }
    }
    Err(SolverError::Domain(
        "calibration failed to converge to the force tolerance".to_string(),
    ))
}

/// One force-displacement curve per material at a shared kappa_f,
/// labels from [`MaterialModel::label`], input order preserved.
pub fn sweep(
    spec: &ScrewSpec,
    materials: &[MaterialModel],
    kappa_f: f64,
    n_elements: usize,
    settings: &SolverSettings,
) -> Result<Vec<(MaterialModel, FDCurve)>, SolverError> {
    materials
        .iter()
        .map(|m| {
            let run = || -> Result<FDCurve, SolverError> {
                let model = discretize(spec, m, kappa_f, n_elements)?;
                let mut curve = run_protocol(&model, settings)?;
                curve.label = m.label();
                Ok(curve)
            };
            run()
                .map(|c| (*m, c))
                .map_err(|source| SolverError::Material {
                    label: m.label(),
                    source: Box::new(source),
                })
        })
        .collect()
}
