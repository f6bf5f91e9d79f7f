//! Quasi-static planar cable: an inextensible elastic rod whose static shape
//! minimizes bending energy under end position and orientation constraints.
//!
//! The rod is discretized by tangent angles `theta_0 .. theta_N` at `N + 1`
//! equally spaced arc-length stations. Segment `j` points along the midpoint angle
//! `phi_j = (theta_j + theta_{j+1}) / 2`, so every segment has length exactly
//! `L / N` and the arc length is preserved by construction.
//!
//! * energy: `k * sum_j (theta_{j+1} - theta_j)^2 / ds`
//! * end angles: `theta_0`, `theta_N` fixed by the boundary poses (eliminated)
//! * closure: `ds * sum_j (cos phi_j, sin phi_j) = right - left`
//!
//! The interior angles are found with a Newton-KKT iteration. The Hessian of the
//! Lagrangian is tridiagonal, so each step costs `O(N)`: three tridiagonal solves and
//! a 2x2 Schur complement for the closure multipliers. An inertia check on the KKT
//! matrix (tridiagonal pivots plus the Schur complement) guards against saddle
//! points; a diagonal shift is added until the reduced Hessian is positive definite.
//! Steps are globalized with an l1 merit line search and a second-order correction.

use nalgebra::{Point2, Vector2};

use crate::contour::{resample_uniform, Contour, ResampleParams};
use crate::error::{Error, Result};
use crate::pose::Pose2D;
use crate::scalar::Real;

/// Default number of rod segments.
pub const DEFAULT_SEGMENTS: usize = 100;

/// Depth limit when splitting a tip move the solver cannot follow in one step.
pub const MAX_BISECTIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableModel<T: Real> {
    length: T,
    segments: usize,
    bending_stiffness: T,
}

impl<T: Real> CableModel<T> {
    pub fn new(length: T, segments: usize, bending_stiffness: T) -> Result<Self> {
        if !(length > T::zero() && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("cable length must be positive, got {length}")));
        }
        if segments < 10 {
            return Err(Error::InvalidParameter(format!("cable needs >= 10 segments, got {segments}")));
        }
        if !(bending_stiffness > T::zero() && bending_stiffness.is_finite()) {
            return Err(Error::InvalidParameter("bending stiffness must be positive".into()));
        }
        Ok(Self { length, segments, bending_stiffness })
    }

    /// Cable of the given length with default discretization and unit stiffness.
    pub fn with_length(length: T) -> Result<Self> {
        Self::new(length, DEFAULT_SEGMENTS, T::one())
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn bending_stiffness(&self) -> T {
        self.bending_stiffness
    }

    pub fn segment_length(&self) -> T {
        self.length / T::from_usize(self.segments).expect("segment count fits scalar")
    }

    /// Largest end separation accepted by the solver.
    pub fn usable_length(&self) -> T {
        self.length * (T::one() - T::lit(1e-9))
    }
}

/// End poses: position plus tangent angle (direction of increasing arc length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableBoundary<T: Real> {
    pub left: Pose2D<T>,
    pub right: Pose2D<T>,
}

impl<T: Real> CableBoundary<T> {
    pub fn new(left: Pose2D<T>, right: Pose2D<T>) -> Self {
        Self { left, right }
    }

    pub fn separation(&self) -> T {
        (self.right.translation() - self.left.translation()).norm()
    }

    /// Both poses mapped through the same rigid transform.
    pub fn transformed(&self, frame: &Pose2D<T>) -> Self {
        Self { left: frame.compose(&self.left), right: frame.compose(&self.right) }
    }
}

/// A solved static shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CableState<T: Real> {
    model: CableModel<T>,
    boundary: CableBoundary<T>,
    theta: Vec<T>,
    multipliers: Vector2<T>,
}

impl<T: Real> CableState<T> {
    pub fn model(&self) -> &CableModel<T> {
        &self.model
    }

    pub fn boundary(&self) -> &CableBoundary<T> {
        &self.boundary
    }

    /// Tangent angles at the `N + 1` stations.
    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    /// Closure multipliers: the internal force transmitted through the rod.
    pub fn multipliers(&self) -> Vector2<T> {
        self.multipliers
    }

    pub fn energy(&self) -> T {
        bending_energy(&self.model, &self.theta)
    }

    /// Node positions at the `N + 1` stations, integrated from the left end.
    pub fn nodes(&self) -> Vec<Point2<T>> {
        integrate_nodes(&self.model, self.boundary.left.position(), &self.theta)
    }

    /// Closure residual `|p_N - right|` (Euclidean).
    pub fn constraint_residual(&self) -> T {
        closure_residual(&self.model, &self.boundary, &self.theta).norm()
    }
}

/// Discrete bending energy of an angle profile.
pub fn bending_energy<T: Real>(model: &CableModel<T>, theta: &[T]) -> T {
    let ds = model.segment_length();
    theta.windows(2).fold(T::zero(), |acc, w| acc + (w[1] - w[0]).powi(2)) * model.bending_stiffness / ds
}

/// Closure residual `ds * sum(cos phi, sin phi) - (right - left)`.
pub fn closure_residual<T: Real>(model: &CableModel<T>, boundary: &CableBoundary<T>, theta: &[T]) -> Vector2<T> {
    let ds = model.segment_length();
    let half = T::lit(0.5);
    let (mut sx, mut sy) = (T::zero(), T::zero());
    for w in theta.windows(2) {
        let phi = (w[0] + w[1]) * half;
        sx += phi.cos();
        sy += phi.sin();
    }
    let target = boundary.right.translation() - boundary.left.translation();
    Vector2::new(sx * ds - target.x, sy * ds - target.y)
}

fn integrate_nodes<T: Real>(model: &CableModel<T>, start: Point2<T>, theta: &[T]) -> Vec<Point2<T>> {
    let ds = model.segment_length();
    let half = T::lit(0.5);
    let mut nodes = Vec::with_capacity(theta.len());
    let mut p = start;
    nodes.push(p);
    for w in theta.windows(2) {
        let phi = (w[0] + w[1]) * half;
        p += Vector2::new(phi.cos(), phi.sin()) * ds;
        nodes.push(p);
    }
    nodes
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T: Real> {
    pub max_iterations: usize,
    /// Closure tolerance relative to the cable length.
    pub closure_tolerance: T,
    /// Newton step tolerance on the angles (radians).
    pub step_tolerance: T,
    /// Largest end-position move per continuation stage on a cold start, relative to the length.
    pub continuation_step: T,
    /// Amplitude (radians) of the full-sine bow used to seed cold starts; its sign picks the buckling side.
    pub cold_start_bow: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        let floor = T::eps() * T::lit(1e3);
        Self {
            max_iterations: 200,
            closure_tolerance: T::lit(1e-10).max(floor),
            step_tolerance: T::lit(1e-10).max(floor),
            continuation_step: T::lit(0.05),
            cold_start_bow: T::lit(0.3),
        }
    }
}

/// Static-shape solver. Holds scratch buffers so repeated solves do not allocate.
#[derive(Debug, Clone)]
pub struct CableSolver<T: Real> {
    options: SolverOptions<T>,
    scratch: Scratch<T>,
}

#[derive(Debug, Clone)]
struct Scratch<T> {
    diag: Vec<T>,
    off: Vec<T>,
    pivots: Vec<T>,
    grad: Vec<T>,
    jx: Vec<T>,
    jy: Vec<T>,
    hg: Vec<T>,
    hjx: Vec<T>,
    hjy: Vec<T>,
    step: Vec<T>,
    trial: Vec<T>,
}

struct Derivatives<T> {
    energy: T,
    residual: Vector2<T>,
}

impl<T: Real> Default for CableSolver<T> {
    fn default() -> Self {
        Self::new(SolverOptions::default())
    }
}

impl<T: Real> CableSolver<T> {
    pub fn new(options: SolverOptions<T>) -> Self {
        Self { options, scratch: Scratch::empty() }
    }

    pub fn options(&self) -> &SolverOptions<T> {
        &self.options
    }

    /// Minimizes bending energy for the given boundary.
    ///
    /// With a warm start the previous interior profile seeds the Newton iteration
    /// directly. Without one, a bowed profile matching the end angles is built and
    /// its end position is walked toward the requested one in short stages.
    pub fn solve_static_shape(
        &mut self,
        model: &CableModel<T>,
        boundary: &CableBoundary<T>,
        warm_start: Option<&CableState<T>>,
    ) -> Result<CableState<T>> {
        let separation = boundary.separation();
        let length = model.length();
        if separation > model.usable_length() {
            if let Some(state) = straight_state(model, boundary) {
                return Ok(state);
            }
            return Err(Error::UnreachableEndPose {
                separation: separation.to_f64_lossy(),
                usable: model.usable_length().to_f64_lossy(),
            });
        }

        if let Some(warm) = warm_start.filter(|w| w.theta.len() == model.segments + 1) {
            let mut theta = warm.theta.clone();
            theta[0] = boundary.left.theta;
            theta[model.segments] = boundary.right.theta;
            let multipliers = warm.multipliers * (model.bending_stiffness / warm.model.bending_stiffness);
            return self.settle(model, boundary, theta, multipliers);
        }

        // Cold start: bowed profile, then continuation on the right end position.
        let n = model.segments;
        let (a0, an) = (boundary.left.theta, boundary.right.theta);
        let nt = T::from_usize(n).expect("segment count fits scalar");
        let mut theta: Vec<T> = (0..=n)
            .map(|j| {
                let t = T::from_usize(j).expect("index fits scalar") / nt;
                a0 + (an - a0) * t + self.options.cold_start_bow * (T::two_pi() * t).sin()
            })
            .collect();
        theta[0] = a0;
        theta[n] = an;
        let seed_end = integrate_nodes(model, boundary.left.position(), &theta)[n];
        let goal = boundary.right.position();
        let gap = (goal - seed_end).norm();
        let stage_len = self.options.continuation_step * length;
        let stages = (gap / stage_len).ceil().to_usize().unwrap_or(1).max(1);
        let mut state = CableState {
            model: *model,
            boundary: CableBoundary::new(boundary.left, Pose2D::new(seed_end.x, seed_end.y, an)),
            theta,
            multipliers: Vector2::zeros(),
        };
        for stage in 1..=stages {
            let t = T::from_usize(stage).unwrap() / T::from_usize(stages).unwrap();
            let p = seed_end + (goal - seed_end) * t;
            let stage_boundary = CableBoundary::new(boundary.left, Pose2D::new(p.x, p.y, an));
            state = self.settle(model, &stage_boundary, state.theta, state.multipliers)?;
        }
        state.boundary = *boundary;
        Ok(state)
    }

    /// Re-solves statics after moving the right end by `delta` (world translation,
    /// rotation of the end tangent), warm-started from `state`.
    ///
    /// A move the warm-started solve cannot follow is split in halves, up to
    /// [`MAX_BISECTIONS`] levels deep.
    pub fn apply_tip_motion(&mut self, state: &CableState<T>, delta: &Pose2D<T>) -> Result<CableState<T>> {
        self.follow(state, state.boundary.right.offset(delta), 0)
    }

    fn follow(&mut self, state: &CableState<T>, right: Pose2D<T>, depth: usize) -> Result<CableState<T>> {
        let boundary = CableBoundary::new(state.boundary.left, right);
        match self.solve_static_shape(&state.model, &boundary, Some(state)) {
            Err(Error::SolverNotConverged { .. }) if depth < MAX_BISECTIONS => {
                let from = state.boundary.right;
                let half = T::lit(0.5);
                let mid = Pose2D::new(
                    (from.x + right.x) * half,
                    (from.y + right.y) * half,
                    (from.theta + right.theta) * half,
                );
                let halfway = self.follow(state, mid, depth + 1)?;
                self.follow(&halfway, right, depth + 1)
            }
            other => other,
        }
    }

    /// Newton solve that does not stop on a constrained saddle: when the stationary
    /// point found has an indefinite reduced Hessian, low-order sine modes are tried
    /// as escape directions and the first minimum reached is returned.
    fn settle(
        &mut self,
        model: &CableModel<T>,
        boundary: &CableBoundary<T>,
        theta: Vec<T>,
        multipliers: Vector2<T>,
    ) -> Result<CableState<T>> {
        let (state, saddle) = self.newton(model, boundary, theta, multipliers)?;
        if !saddle {
            return Ok(state);
        }
        let n = model.segments;
        let nt = T::from_usize(n).expect("segment count fits scalar");
        let amplitude = T::lit(0.05);
        for mode in 1..=4 {
            for sign in [T::one(), -T::one()] {
                let mut theta = state.theta.clone();
                for (j, v) in theta.iter_mut().enumerate().take(n).skip(1) {
                    let t = T::from_usize(j * mode).expect("index fits scalar") / nt;
                    *v += sign * amplitude * (T::pi() * t).sin();
                }
                if let Ok((escaped, false)) = self.newton(model, boundary, theta, state.multipliers) {
                    return Ok(escaped);
                }
            }
        }
        Ok(state)
    }

    /// Returns the stationary point and whether it is a constrained saddle.
    fn newton(
        &mut self,
        model: &CableModel<T>,
        boundary: &CableBoundary<T>,
        mut theta: Vec<T>,
        mut multipliers: Vector2<T>,
    ) -> Result<(CableState<T>, bool)> {
        let n = model.segments;
        let m = n - 1;
        let length = model.length();
        let ds = model.segment_length();
        let stiff = model.bending_stiffness;
        let close_tol = self.options.closure_tolerance * length;
        let bending_scale = stiff / ds;
        self.scratch.resize(m);

        let mut penalty = T::zero();
        let mut shift = T::zero();
        let mut last_residual = T::zero();
        let mut best_step = T::max_value().expect("real type has a maximum");
        let mut stalled = 0;
        for _ in 0..self.options.max_iterations {
            let d = self.derivatives(model, boundary, &theta, &multipliers);
            last_residual = d.residual.norm();

            // Inertia-corrected Newton-KKT step.
            let mut used;
            let lambda = loop {
                used = shift;
                match self.kkt_step(shift, &d.residual) {
                    Some(lambda) => break lambda,
                    None => {
                        shift = if shift == T::zero() { bending_scale * T::lit(1e-4) } else { shift * T::lit(10.0) };
                        if shift > bending_scale * T::lit(1e8) {
                            return Err(Error::SolverNotConverged {
                                iterations: self.options.max_iterations,
                                residual: last_residual.to_f64_lossy(),
                            });
                        }
                    }
                }
            };
            let step_norm = self.scratch.step.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
            if step_norm <= self.options.step_tolerance && last_residual <= close_tol {
                let saddle = used > T::zero() && self.kkt_step(T::zero(), &d.residual).is_none();
                return Ok((CableState { model: *model, boundary: *boundary, theta, multipliers: lambda }, saddle));
            }
            // Feasible and no longer shrinking the step: rounding has taken over.
            if step_norm < best_step * T::lit(0.5) {
                best_step = step_norm;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if stalled >= 5 && step_norm <= self.options.step_tolerance.sqrt() && last_residual <= close_tol {
                let saddle = self.kkt_step(T::zero(), &d.residual).is_none();
                return Ok((CableState { model: *model, boundary: *boundary, theta, multipliers: lambda }, saddle));
            }
            // A shifted iteration stalling at a feasible point is sitting on a saddle.
            if used > T::zero()
                && step_norm <= self.options.step_tolerance.sqrt()
                && last_residual <= close_tol
                && self.kkt_step(T::zero(), &d.residual).is_none()
            {
                return Ok((CableState { model: *model, boundary: *boundary, theta, multipliers: lambda }, true));
            }

            // l1 merit line search.
            penalty = penalty.max(lambda.amax() * T::lit(1.5) + bending_scale * T::lit(1e-8));
            let l1 = |r: &Vector2<T>| r.x.abs() + r.y.abs();
            let merit0 = d.energy + penalty * l1(&d.residual);
            let slope = self.scratch.grad.iter().zip(&self.scratch.step).fold(T::zero(), |acc, (g, s)| acc + *g * *s)
                - penalty * l1(&d.residual);
            let mut t = T::one();
            let mut accepted = false;
            for attempt in 0..40 {
                self.fill_trial(&theta, t);
                let (e, r) = self.evaluate(model, boundary);
                let merit = e + penalty * l1(&r);
                if merit <= merit0 + T::lit(1e-4) * t * slope.min(T::zero()) {
                    accepted = true;
                    break;
                }
                if attempt == 0 {
                    // Second-order correction: pull the full step back onto the closure manifold.
                    if self.second_order_correction(&r) {
                        let (e2, r2) = self.evaluate(model, boundary);
                        if e2 + penalty * l1(&r2) <= merit0 + T::lit(1e-4) * slope.min(T::zero()) {
                            accepted = true;
                            break;
                        }
                    }
                }
                t *= T::lit(0.5);
            }
            if !accepted {
                // Tiny steps that the merit cannot resolve: take them if they are already converged.
                if step_norm <= self.options.step_tolerance * T::lit(1e3) && last_residual <= close_tol {
                    return Ok((CableState { model: *model, boundary: *boundary, theta, multipliers: lambda }, used > T::zero()));
                }
                self.fill_trial(&theta, t);
            }
            // Levenberg-Marquardt style damping: relax after full steps, stiffen after heavy backtracking.
            shift = if accepted && t == T::one() {
                let relaxed = used * T::lit(0.1);
                if relaxed < bending_scale * T::lit(1e-12) {
                    T::zero()
                } else {
                    relaxed
                }
            } else if t < T::lit(0.25) {
                (used * T::lit(4.0)).max(bending_scale * T::lit(1e-4))
            } else {
                used
            };
            theta[1..n].copy_from_slice(&self.scratch.trial);
            multipliers = lambda;
        }
        Err(Error::SolverNotConverged {
            iterations: self.options.max_iterations,
            residual: last_residual.to_f64_lossy(),
        })
    }

    /// Fills gradient, closure Jacobian and tridiagonal Lagrangian Hessian.
    fn derivatives(
        &mut self,
        model: &CableModel<T>,
        boundary: &CableBoundary<T>,
        theta: &[T],
        multipliers: &Vector2<T>,
    ) -> Derivatives<T> {
        let n = model.segments;
        let ds = model.segment_length();
        let stiff = model.bending_stiffness;
        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        let two = T::lit(2.0);
        let s = &mut self.scratch;
        let (lx, ly) = (multipliers.x, multipliers.y);
        for i in 1..n {
            let prev = (theta[i - 1] + theta[i]) * half;
            let next = (theta[i] + theta[i + 1]) * half;
            let (sp, cp) = prev.sin_cos();
            let (sn, cn) = next.sin_cos();
            s.grad[i - 1] = two * stiff / ds * (two * theta[i] - theta[i - 1] - theta[i + 1]);
            s.jx[i - 1] = -ds * half * (sp + sn);
            s.jy[i - 1] = ds * half * (cp + cn);
            s.diag[i - 1] = T::lit(4.0) * stiff / ds - ds * quarter * (lx * (cp + cn) + ly * (sp + sn));
            if i < n - 1 {
                s.off[i - 1] = -two * stiff / ds - ds * quarter * (lx * cn + ly * sn);
            }
        }
        Derivatives {
            energy: bending_energy(model, theta),
            residual: closure_residual(model, boundary, theta),
        }
    }

    /// Solves the KKT system with `H + shift I`; `None` when the inertia is wrong.
    fn kkt_step(&mut self, shift: T, residual: &Vector2<T>) -> Option<Vector2<T>> {
        let s = &mut self.scratch;
        let m = s.diag.len();
        // LDL^T of the tridiagonal block.
        let mut negatives = 0;
        let tiny = T::eps() * T::lit(1e2);
        for i in 0..m {
            let mut d = s.diag[i] + shift;
            if i > 0 {
                d -= s.off[i - 1] * s.off[i - 1] / s.pivots[i - 1];
            }
            if d.abs() <= tiny * (s.diag[i].abs() + shift) {
                return None;
            }
            if d < T::zero() {
                negatives += 1;
            }
            s.pivots[i] = d;
        }
        if negatives > 2 {
            return None;
        }
        tridiag_solve(&s.off, &s.pivots, &s.grad, &mut s.hg);
        tridiag_solve(&s.off, &s.pivots, &s.jx, &mut s.hjx);
        tridiag_solve(&s.off, &s.pivots, &s.jy, &mut s.hjy);
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y);
        let s11 = dot(&s.jx, &s.hjx);
        let s12 = dot(&s.jx, &s.hjy);
        let s22 = dot(&s.jy, &s.hjy);
        // eigenvalue signs of the 2x2 Schur complement
        let det = s11 * s22 - s12 * s12;
        let trace = s11 + s22;
        let scale = s11.abs().max(s22.abs());
        if det.abs() <= T::eps() * T::lit(1e3) * scale * scale || scale == T::zero() {
            return None;
        }
        let positives = if det < T::zero() { 1 } else if trace > T::zero() { 2 } else { 0 };
        if negatives + positives != 2 {
            return None;
        }
        let wx = dot(&s.jx, &s.hg);
        let wy = dot(&s.jy, &s.hg);
        let rx = residual.x - wx;
        let ry = residual.y - wy;
        let lx = (s22 * rx - s12 * ry) / det;
        let ly = (s11 * ry - s12 * rx) / det;
        for i in 0..m {
            s.step[i] = -(s.hg[i] + lx * s.hjx[i] + ly * s.hjy[i]);
        }
        Some(Vector2::new(lx, ly))
    }

    fn fill_trial(&mut self, theta: &[T], t: T) {
        let s = &mut self.scratch;
        for (i, v) in s.trial.iter_mut().enumerate() {
            *v = theta[i + 1] + t * s.step[i];
        }
    }

    /// Minimum-norm correction `-J^T (J J^T)^{-1} r` applied to the trial point.
    fn second_order_correction(&mut self, r: &Vector2<T>) -> bool {
        let s = &mut self.scratch;
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y);
        let a11 = dot(&s.jx, &s.jx);
        let a12 = dot(&s.jx, &s.jy);
        let a22 = dot(&s.jy, &s.jy);
        let det = a11 * a22 - a12 * a12;
        if det.abs() <= T::eps() * (a11 * a22).abs() {
            return false;
        }
        let cx = (a22 * r.x - a12 * r.y) / det;
        let cy = (a11 * r.y - a12 * r.x) / det;
        for i in 0..s.trial.len() {
            s.trial[i] -= s.jx[i] * cx + s.jy[i] * cy;
        }
        true
    }

    /// Energy and closure residual at the trial interior profile.
    fn evaluate(&self, model: &CableModel<T>, boundary: &CableBoundary<T>) -> (T, Vector2<T>) {
        let mut full = Vec::with_capacity(self.scratch.trial.len() + 2);
        full.push(boundary.left.theta);
        full.extend_from_slice(&self.scratch.trial);
        full.push(boundary.right.theta);
        (bending_energy(model, &full), closure_residual(model, boundary, &full))
    }
}

impl<T: Real> Scratch<T> {
    fn empty() -> Self {
        Self {
            diag: Vec::new(),
            off: Vec::new(),
            pivots: Vec::new(),
            grad: Vec::new(),
            jx: Vec::new(),
            jy: Vec::new(),
            hg: Vec::new(),
            hjx: Vec::new(),
            hjy: Vec::new(),
            step: Vec::new(),
            trial: Vec::new(),
        }
    }

    fn resize(&mut self, m: usize) {
        for v in [
            &mut self.diag,
            &mut self.pivots,
            &mut self.grad,
            &mut self.jx,
            &mut self.jy,
            &mut self.hg,
            &mut self.hjx,
            &mut self.hjy,
            &mut self.step,
            &mut self.trial,
        ] {
            v.clear();
            v.resize(m, T::zero());
        }
        self.off.clear();
        self.off.resize(m.saturating_sub(1), T::zero());
    }
}

/// Solves `L D L^T x = rhs` for a factored symmetric tridiagonal matrix.
fn tridiag_solve<T: Real>(off: &[T], pivots: &[T], rhs: &[T], out: &mut [T]) {
    let m = pivots.len();
    out.copy_from_slice(rhs);
    for i in 1..m {
        let l = off[i - 1] / pivots[i - 1];
        out[i] -= l * out[i - 1];
    }
    for i in 0..m {
        out[i] /= pivots[i];
    }
    for i in (0..m - 1).rev() {
        let l = off[i] / pivots[i];
        out[i] -= l * out[i + 1];
    }
}

/// The straight state when the ends are exactly one length apart and both tangents
/// point along the chord.
fn straight_state<T: Real>(model: &CableModel<T>, boundary: &CableBoundary<T>) -> Option<CableState<T>> {
    let length = model.length();
    let chord = boundary.right.translation() - boundary.left.translation();
    let tol = T::lit(1e-9) * length;
    if (chord.norm() - length).abs() > tol {
        return None;
    }
    let heading = chord.y.atan2(chord.x);
    let angle_tol = T::lit(1e-9);
    let aligned = |a: T| crate::pose::wrap_angle(a - heading).abs() <= angle_tol;
    if !aligned(boundary.left.theta) || !aligned(boundary.right.theta) {
        return None;
    }
    let mut theta = vec![boundary.left.theta; model.segments + 1];
    theta[model.segments] = boundary.right.theta;
    Some(CableState { model: *model, boundary: *boundary, theta, multipliers: Vector2::zeros() })
}

/// Samples `k` arc-length-uniform contour points along a solved cable.
pub fn sample_contour<T: Real>(state: &CableState<T>, k: usize) -> Result<Contour<T>> {
    Ok(resample_uniform(&state.nodes(), ResampleParams::new(k))?.contour)
}
