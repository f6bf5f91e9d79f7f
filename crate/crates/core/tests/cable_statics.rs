use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeservo::{CableBoundary, CableModel, CableSolver, CableState, Pose2D};

fn unit_cable(segments: usize) -> CableModel<f64> {
    CableModel::new(1.0, segments, 1.0).unwrap()
}

fn solve(model: &CableModel<f64>, right: Pose2D<f64>) -> CableState<f64> {
    let b = CableBoundary::new(Pose2D::identity(), right);
    CableSolver::default().solve_static_shape(model, &b, None).unwrap()
}

/// The discrete problem written out from scratch: energy, its gradient, closure and
/// closure Jacobian over the full angle vector (ends included).
struct Problem {
    n: usize,
    ds: f64,
    k: f64,
    target: (f64, f64),
}

impl Problem {
    fn new(model: &CableModel<f64>, right: Pose2D<f64>) -> Self {
        let n = model.segments();
        Self { n, ds: model.length() / n as f64, k: model.bending_stiffness(), target: (right.x, right.y) }
    }

    fn energy(&self, th: &[f64]) -> f64 {
        (0..self.n).map(|j| (th[j + 1] - th[j]).powi(2)).sum::<f64>() * self.k / self.ds
    }

    fn closure(&self, th: &[f64]) -> [f64; 2] {
        let (mut x, mut y) = (0.0, 0.0);
        for j in 0..self.n {
            let phi = 0.5 * (th[j] + th[j + 1]);
            x += self.ds * phi.cos();
            y += self.ds * phi.sin();
        }
        [x - self.target.0, y - self.target.1]
    }

    /// Gradient of energy plus `lambda . closure` with respect to the interior angles.
    fn lagrangian_grad(&self, th: &[f64], lambda: [f64; 2]) -> DVector<f64> {
        let c = 2.0 * self.k / self.ds;
        DVector::from_fn(self.n - 1, |r, _| {
            let i = r + 1;
            let phi_a = 0.5 * (th[i - 1] + th[i]);
            let phi_b = 0.5 * (th[i] + th[i + 1]);
            let de = c * ((th[i] - th[i - 1]) - (th[i + 1] - th[i]));
            let dx = -0.5 * self.ds * (phi_a.sin() + phi_b.sin());
            let dy = 0.5 * self.ds * (phi_a.cos() + phi_b.cos());
            de + lambda[0] * dx + lambda[1] * dy
        })
    }

    fn jacobian(&self, th: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(2, self.n - 1);
        for r in 0..self.n - 1 {
            let i = r + 1;
            let phi_a = 0.5 * (th[i - 1] + th[i]);
            let phi_b = 0.5 * (th[i] + th[i + 1]);
            j[(0, r)] = -0.5 * self.ds * (phi_a.sin() + phi_b.sin());
            j[(1, r)] = 0.5 * self.ds * (phi_a.cos() + phi_b.cos());
        }
        j
    }

    /// Dense Newton-KKT with a finite-difference Hessian, started from `th`.
    fn dense_solve(&self, mut th: Vec<f64>) -> (Vec<f64>, [f64; 2]) {
        let m = self.n - 1;
        let mut lambda = [0.0, 0.0];
        for _ in 0..60 {
            let g = self.lagrangian_grad(&th, lambda);
            let h = 1e-6;
            let mut hess = DMatrix::zeros(m, m);
            for c in 0..m {
                let mut p = th.clone();
                let mut q = th.clone();
                p[c + 1] += h;
                q[c + 1] -= h;
                let col = (self.lagrangian_grad(&p, lambda) - self.lagrangian_grad(&q, lambda)) / (2.0 * h);
                hess.set_column(c, &col);
            }
            hess = (&hess + hess.transpose()) * 0.5;
            let jac = self.jacobian(&th);
            let mut kkt = DMatrix::zeros(m + 2, m + 2);
            kkt.view_mut((0, 0), (m, m)).copy_from(&hess);
            kkt.view_mut((0, m), (m, 2)).copy_from(&jac.transpose());
            kkt.view_mut((m, 0), (2, m)).copy_from(&jac);
            let c = self.closure(&th);
            let mut rhs = DVector::zeros(m + 2);
            rhs.rows_mut(0, m).copy_from(&(-&g));
            rhs[m] = -c[0];
            rhs[m + 1] = -c[1];
            let sol = kkt.lu().solve(&rhs).expect("nonsingular KKT");
            for r in 0..m {
                th[r + 1] += sol[r];
            }
            lambda[0] += sol[m];
            lambda[1] += sol[m + 1];
            if sol.amax() < 1e-13 {
                break;
            }
        }
        (th, lambda)
    }
}

#[test]
fn energy_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for right in [Pose2D::new(0.7, 0.0, 0.0), Pose2D::new(0.5, 0.3, 0.8), Pose2D::new(0.6, -0.2, -0.5)] {
        let model = unit_cable(40);
        let state = solve(&model, right);
        let problem = Problem::new(&model, right);
        let mut start = state.theta().to_vec();
        for v in start[1..problem.n].iter_mut() {
            *v += rng.random_range(-0.01..0.01);
        }
        let (th, _) = problem.dense_solve(start);
        let c = problem.closure(&th);
        assert!(c[0].abs() < 1e-11 && c[1].abs() < 1e-11);
        let e_oracle = problem.energy(&th);
        let e = state.energy();
        assert!((e - e_oracle).abs() <= 1e-9 * e_oracle, "{e} vs {e_oracle}");
        let diff = th.iter().zip(state.theta()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "angle profiles differ by {diff}");
    }
}

#[test]
fn stationarity_and_multipliers_agree_with_oracle_gradient() {
    let model = unit_cable(100);
    let right = Pose2D::new(0.55, 0.25, 0.6);
    let state = solve(&model, right);
    let problem = Problem::new(&model, right);
    let lambda = state.multipliers();
    let g = problem.lagrangian_grad(state.theta(), [lambda.x, lambda.y]);
    assert!(g.amax() < 1e-7, "KKT gradient {}", g.amax());
}

#[test]
fn symmetric_buckle_has_antisymmetric_angles() {
    let model = unit_cable(100);
    let state = solve(&model, Pose2D::new(0.7, 0.0, 0.0));
    let th = state.theta();
    let n = th.len() - 1;
    for j in 0..=n {
        assert!((th[j] + th[n - j]).abs() < 1e-8, "station {j}: {} vs {}", th[j], th[n - j]);
    }
    // a real buckle, not the straight line
    assert!(th.iter().any(|t| t.abs() > 0.3));
}

#[test]
fn projected_perturbations_do_not_lower_energy() {
    let model = unit_cable(60);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for right in [Pose2D::new(0.7, 0.0, 0.0), Pose2D::new(0.4, 0.4, 1.5)] {
        let state = solve(&model, right);
        let problem = Problem::new(&model, right);
        let e0 = state.energy();
        for _ in 0..50 {
            let mut th = state.theta().to_vec();
            for v in th[1..problem.n].iter_mut() {
                *v += rng.random_range(-1e-3..1e-3);
            }
            // back onto the closure manifold by minimal-norm Gauss-Newton corrections
            for _ in 0..20 {
                let c = problem.closure(&th);
                let j = problem.jacobian(&th);
                let jjt = &j * j.transpose();
                let y = jjt.try_inverse().unwrap() * DVector::from_column_slice(&c);
                let dx = j.transpose() * y;
                for r in 0..problem.n - 1 {
                    th[r + 1] -= dx[r];
                }
            }
            let c = problem.closure(&th);
            assert!(c[0].abs() < 1e-13 && c[1].abs() < 1e-13);
            assert!(problem.energy(&th) >= e0 - 1e-12 * e0.max(1.0));
        }
    }
}

#[test]
fn solution_is_frame_equivariant() {
    let model = unit_cable(100);
    let boundary = CableBoundary::new(Pose2D::identity(), Pose2D::new(0.6, 0.2, 0.7));
    let frame = Pose2D::new(-1.3, 2.1, 0.9);
    let mut solver = CableSolver::default();
    let a = solver.solve_static_shape(&model, &boundary, None).unwrap();
    let b = solver.solve_static_shape(&model, &boundary.transformed(&frame), None).unwrap();
    for (p, q) in a.nodes().iter().zip(b.nodes()) {
        assert!((frame.transform_point(p) - q).norm() < 1e-8);
    }
    assert!((a.energy() - b.energy()).abs() < 1e-8 * a.energy());
}

#[test]
fn stiffness_scales_energy_not_shape() {
    let right = Pose2D::new(0.5, 0.3, -0.4);
    let soft = solve(&CableModel::new(1.0, 100, 1.0).unwrap(), right);
    let stiff = solve(&CableModel::new(1.0, 100, 7.5).unwrap(), right);
    for (a, b) in soft.theta().iter().zip(stiff.theta()) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!((stiff.energy() - 7.5 * soft.energy()).abs() < 1e-9 * stiff.energy());
    assert!((stiff.multipliers() - soft.multipliers() * 7.5).norm() < 1e-6 * stiff.multipliers().norm());
}

#[test]
fn segments_keep_their_length() {
    let model: CableModel<f64> = CableModel::new(2.5, 80, 1.0).unwrap();
    let b = CableBoundary::new(Pose2D::new(0.1, 0.2, 0.3), Pose2D::new(1.5, 1.2, -0.8));
    let state = CableSolver::default().solve_static_shape(&model, &b, None).unwrap();
    let nodes = state.nodes();
    let ds = model.segment_length();
    for w in nodes.windows(2) {
        let len: f64 = (w[1] - w[0]).norm();
        assert!((len - ds).abs() < 1e-12);
    }
    assert!((nodes.last().unwrap() - b.right.position()).norm() < 1e-9);
    assert!(state.constraint_residual() < 1e-9);
}

#[test]
fn reversed_motions_restore_the_shape() {
    let model = unit_cable(100);
    let start = solve(&model, Pose2D::new(0.7, 0.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let moves: Vec<_> = (0..20)
        .map(|_| Pose2D::new(rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.03), rng.random_range(-0.08..0.08)))
        .collect();
    let mut solver = CableSolver::default();
    let mut s = start.clone();
    for d in &moves {
        s = solver.apply_tip_motion(&s, d).unwrap();
    }
    for d in moves.iter().rev() {
        s = solver.apply_tip_motion(&s, &(-*d)).unwrap();
    }
    let diff = s.theta().iter().zip(start.theta()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-7, "returned shape differs by {diff}");
}
