use super::*;
use crate::autodiff::{record, Dual};
use crate::model::{fixture, parse_model, RobotModel, FIXTURE_NAMES};
use crate::sampling::StateSampler;
use nalgebra::DMatrix;

const PENDULUM_I: f64 = 0.0833;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn zero_gravity(model: &RobotModel) -> RobotModel {
    let mut m = model.clone();
    m.gravity = [0.0; 3];
    m
}

#[test]
fn pendulum_gravity_hold() {
    let m = fixture("pendulum").unwrap();
    let p = m.params::<f64>();
    let tau = rnea(&p, &[0.0], &[0.0], &[0.0], None).unwrap();
    assert!((tau[0] - 1.0 * 9.81 * 0.5).abs() < 1e-14, "{tau:?}");
    let q = 0.7f64;
    let tau = rnea(&p, &[q], &[0.0], &[0.0], None).unwrap();
    assert!((tau[0] - 9.81 * 0.5 * q.cos()).abs() < 1e-14);
}

#[test]
fn pendulum_free_swing() {
    let m = fixture("pendulum").unwrap();
    let p = m.params::<f64>();
    let qdd = aba(&p, &[0.0], &[0.0], &[0.0], None).unwrap();
    let expected = -9.81 * 0.5 / (0.25 + PENDULUM_I);
    assert!((qdd[0] - expected).abs() < 1e-13, "{qdd:?} vs {expected}");
    let mass = crba(&p, &[0.3]).unwrap();
    assert!((mass.get(0, 0) - (0.25 + PENDULUM_I)).abs() < 1e-15);
}

#[test]
fn zero_gravity_equilibrium() {
    let mut s = StateSampler::new(1);
    for name in FIXTURE_NAMES {
        let m = zero_gravity(&fixture(name).unwrap());
        let p = m.params::<f64>();
        let q = s.position(&m);
        let z = vec![0.0; m.n_dof()];
        let tau = rnea(&p, &q, &z, &z, None).unwrap();
        assert!(tau.iter().all(|t| *t == 0.0), "{name}: {tau:?}");
        let (c, g) = nonlinear_terms(&p, &q, &s.velocity(&m)).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        if m.n_dof() > 1 {
            assert!(c.iter().any(|v| *v != 0.0), "{name}");
        }
    }
}

#[test]
fn coriolis_vanishes_at_rest() {
    let m = fixture("arm6").unwrap();
    let p = m.params::<f64>();
    let q = StateSampler::new(3).position(&m);
    let (c, _) = nonlinear_terms(&p, &q, &[0.0; 6]).unwrap();
    assert!(c.iter().all(|v| *v == 0.0));
}

#[test]
fn mass_matrix_columns_from_unit_accelerations() {
    let mut s = StateSampler::new(5);
    for name in FIXTURE_NAMES {
        let m = fixture(name).unwrap();
        let p = m.params::<f64>();
        let n = m.n_dof();
        let q = s.position(&m);
        let z = vec![0.0; n];
        let g = rnea(&p, &q, &z, &z, None).unwrap();
        let mm = crba(&p, &q).unwrap();
        for j in 0..n {
            let mut e = z.clone();
            e[j] = 1.0;
            let col = rnea(&p, &q, &z, &e, None).unwrap();
            for i in 0..n {
                assert!(
                    (col[i] - g[i] - mm.get(i, j)).abs() < 1e-10,
                    "{name} ({i},{j})"
                );
            }
        }
    }
}

#[test]
fn quadruped_mass_matrix_is_symmetric_positive_definite() {
    let m = fixture("quad18").unwrap();
    let p = m.params::<f64>();
    let mut s = StateSampler::new(9);
    for _ in 0..20 {
        let mm = crba(&p, &s.position(&m)).unwrap().to_dmatrix();
        assert!((&mm - mm.transpose()).amax() < 1e-10);
        let eig = mm.symmetric_eigen().eigenvalues;
        assert!(eig.min() > 0.0);
    }
}

#[test]
fn inverse_dynamics_assembles_from_mass_and_bias() {
    let mut s = StateSampler::new(11);
    for name in FIXTURE_NAMES {
        let m = fixture(name).unwrap();
        let p = m.params::<f64>();
        for _ in 0..50 {
            let (q, qd, qdd) = (s.position(&m), s.velocity(&m), s.acceleration(&m));
            let tau = rnea(&p, &q, &qd, &qdd, None).unwrap();
            let mm = crba(&p, &q).unwrap();
            let (c, g) = nonlinear_terms(&p, &q, &qd).unwrap();
            let mq = mm.mul_vec(&qdd);
            let assembled: Vec<f64> = (0..qd.len()).map(|i| mq[i] + c[i] + g[i]).collect();
            assert!(max_abs_diff(&tau, &assembled) < 1e-10, "{name}");
        }
    }
}

#[test]
fn forward_inverse_round_trip() {
    let mut s = StateSampler::new(13);
    for name in FIXTURE_NAMES {
        let m = fixture(name).unwrap();
        let p = m.params::<f64>();
        for _ in 0..200 {
            let (q, qd, qdd) = (s.position(&m), s.velocity(&m), s.acceleration(&m));
            let tau = rnea(&p, &q, &qd, &qdd, None).unwrap();
            let back = aba(&p, &q, &qd, &tau, None).unwrap();
            assert!(max_abs_diff(&back, &qdd) < 1e-9, "{name}");
        }
    }
}

#[test]
fn round_trip_with_external_forces() {
    let m = fixture("quad18").unwrap();
    let p = m.params::<f64>();
    let mut s = StateSampler::new(17);
    let (q, qd, qdd) = (s.position(&m), s.velocity(&m), s.acceleration(&m));
    let ext: Vec<_> = (0..m.n_links())
        .map(|_| {
            crate::spatial::ForceVector::from_array(s.uniform(6, -20.0, 20.0).try_into().unwrap())
        })
        .collect();
    let tau = rnea(&p, &q, &qd, &qdd, Some(&ext)).unwrap();
    let plain = rnea(&p, &q, &qd, &qdd, None).unwrap();
    assert!(max_abs_diff(&tau, &plain) > 1e-3);
    let back = aba(&p, &q, &qd, &tau, Some(&ext)).unwrap();
    assert!(max_abs_diff(&back, &qdd) < 1e-9);
}

#[test]
fn floating_base_free_fall() {
    let m = fixture("quad18").unwrap();
    let p = m.params::<f64>();
    let mut s = StateSampler::new(19);
    let q = s.position(&m);
    let qdd = aba(&p, &q, &[0.0; 18], &[0.0; 18], None).unwrap();
    let r = crate::spatial::Mat3::from_euler_xyz(q[0], q[1], q[2]);
    let g_body = r.tmul_vec(&crate::spatial::Vec3(m.gravity));
    assert!(max_abs_diff(&qdd[0..3], &[0.0; 3]) < 1e-12);
    assert!(max_abs_diff(&qdd[3..6], &g_body.0) < 1e-12);
    assert!(max_abs_diff(&qdd[6..], &[0.0; 12]) < 1e-12);
}

#[test]
fn ltl_small_cases() {
    let m = fixture("pendulum").unwrap();
    let mut mm = JointSpaceInertia::zeros(1);
    mm.set(0, 0, 4.0);
    let f = ltl_factorize(&mm, &m).unwrap();
    assert_eq!(f.l()[(0, 0)], 2.0);
    assert_eq!(f.solve(&[0.0]).unwrap(), vec![0.0]);
    mm.set(0, 0, 1.0);
    assert_eq!(
        ltl_factorize(&mm, &m).unwrap().solve(&[3.5]).unwrap(),
        vec![3.5]
    );
    mm.set(0, 0, 1e-13);
    assert!(matches!(
        ltl_factorize(&mm, &m),
        Err(crate::Error::Numerical(_))
    ));
}

#[test]
fn ltl_of_decoupled_joints_is_elementwise_sqrt() {
    // Three links hanging directly off the world: M is diagonal.
    let text = "\
link a parent world joint prismatic axis 1 0 0 xyz 0 0 0 rpy 0 0 0
link b parent world joint prismatic axis 0 1 0 xyz 0 0 0 rpy 0 0 0
link c parent world joint prismatic axis 0 0 1 xyz 0 0 0 rpy 0 0 0
inertia a mass 4 com 0 0 0 ixx 1 iyy 1 izz 1 ixy 0 ixz 0 iyz 0
inertia b mass 9 com 0 0 0 ixx 1 iyy 1 izz 1 ixy 0 ixz 0 iyz 0
inertia c mass 2 com 0 0 0 ixx 1 iyy 1 izz 1 ixy 0 ixz 0 iyz 0
";
    let m = parse_model(text).unwrap();
    let mm = crba(&m.params::<f64>(), &[0.1, 0.2, 0.3]).unwrap();
    let f = ltl_factorize(&mm, &m).unwrap();
    let expected =
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0, 2f64.sqrt()]));
    assert_eq!(f.l(), &expected);
}

#[test]
fn ltl_matches_dense_solve_on_quadruped() {
    let m = fixture("quad18").unwrap();
    let p = m.params::<f64>();
    let mut s = StateSampler::new(23);
    let parents = m.dof_parents();
    for _ in 0..10 {
        let mm = crba(&p, &s.position(&m)).unwrap();
        let f = ltl_factorize(&mm, &m).unwrap();
        let dense = mm.to_dmatrix();
        assert!((f.l().transpose() * f.l() - &dense).amax() < 1e-10);
        for k in 0..18 {
            for i in 0..k {
                let ancestor = {
                    let mut j = parents[k];
                    let mut hit = false;
                    while let Some(jj) = j {
                        hit |= jj == i;
                        j = parents[jj];
                    }
                    hit
                };
                if !ancestor {
                    assert_eq!(f.l()[(k, i)], 0.0);
                }
            }
        }
        let lu = dense.clone().lu();
        for _ in 0..10 {
            let b = s.uniform(18, -1.0, 1.0);
            let x = f.solve(&b).unwrap();
            let y = lu.solve(&nalgebra::DVector::from_vec(b)).unwrap();
            assert!(max_abs_diff(&x, y.as_slice()) < 1e-9);
        }
    }
}

#[test]
fn energy_balance_along_rk4_rollout() {
    let dt = 1e-3;
    for name in ["pendulum", "double_pendulum", "arm6"] {
        let m = fixture(name).unwrap();
        let p = m.params::<f64>();
        let mut s = StateSampler::new(29);
        let n = m.n_dof();
        let (mut q, mut qd) = (s.position(&m), s.velocity(&m));
        let tau = s.torque(&m);
        let energy = |q: &[f64], qd: &[f64]| {
            let mm = crba(&p, q).unwrap();
            let kinetic = 0.5
                * qd.iter()
                    .zip(mm.mul_vec(qd))
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            kinetic + potential(&m, q)
        };
        let f = |q: &[f64], qd: &[f64]| aba(&p, q, qd, &tau, None).unwrap();
        for _ in 0..50 {
            let e0 = energy(&q, &qd);
            let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> {
                x.iter().zip(y).map(|(x, y)| x + a * y).collect()
            };
            let k1q = qd.clone();
            let k1v = f(&q, &qd);
            let k2q = axpy(&qd, dt / 2.0, &k1v);
            let k2v = f(&axpy(&q, dt / 2.0, &k1q), &k2q);
            let k3q = axpy(&qd, dt / 2.0, &k2v);
            let k3v = f(&axpy(&q, dt / 2.0, &k2q), &k3q);
            let k4q = axpy(&qd, dt, &k3v);
            let k4v = f(&axpy(&q, dt, &k3q), &k4q);
            let q1: Vec<f64> = (0..n)
                .map(|i| q[i] + dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]))
                .collect();
            let v1: Vec<f64> = (0..n)
                .map(|i| qd[i] + dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]))
                .collect();
            // Constant torque: the work done over the step is tau . dq.
            let work: f64 = (0..n).map(|i| tau[i] * (q1[i] - q[i])).sum();
            let residual = (energy(&q1, &v1) - e0 - work) / dt;
            assert!(residual.abs() < 1e-6, "{name}: {residual}");
            q = q1;
            qd = v1;
        }
    }
}

/// Gravitational potential from link centres of mass.
fn potential(m: &RobotModel, q: &[f64]) -> f64 {
    let p = m.params::<f64>();
    let mut world: Vec<crate::spatial::SpatialTransform<f64>> = Vec::new();
    let mut v = 0.0;
    for i in 0..m.n_links() {
        let x = link_transform(&p, i, &q[dofs(&p, i)]);
        let x = match m.links[i].parent {
            Some(pi) => x.compose(&world[pi]),
            None => x,
        };
        let com = crate::spatial::Vec3(m.links[i].inertia.com);
        let c_world = x.rotation.tmul_vec(&com) + x.translation;
        v -= m.links[i].inertia.mass * c_world.dot(&crate::spatial::Vec3(m.gravity));
        world.push(x);
    }
    v
}

fn serial_chain(n: usize) -> RobotModel {
    let mut text = String::new();
    for i in 0..n {
        let parent = if i == 0 {
            "world".to_string()
        } else {
            format!("l{}", i - 1)
        };
        let axis = ["0 0 1", "0 1 0", "1 0 0"][i % 3];
        text += &format!(
            "link l{i} parent {parent} joint revolute axis {axis} xyz 0.3 0 0 rpy 0 0 0\n"
        );
        text += &format!(
            "inertia l{i} mass 1 com 0.15 0 0 ixx 0.01 iyy 0.02 izz 0.02 ixy 0 ixz 0 iyz 0\n"
        );
    }
    parse_model(&text).unwrap()
}

#[test]
fn aba_runtime_is_linear_in_chain_length() {
    let sizes = [4usize, 8, 16, 32];
    let median_ns = |n: usize| {
        let m = serial_chain(n);
        let p = m.params::<f64>();
        let mut s = StateSampler::new(31);
        let (q, qd, tau) = (s.position(&m), s.velocity(&m), s.torque(&m));
        let reps = 4000 / n;
        let mut samples = Vec::new();
        for _ in 0..31 {
            let t = std::time::Instant::now();
            for _ in 0..reps {
                std::hint::black_box(aba(&p, std::hint::black_box(&q), &qd, &tau, None).unwrap());
            }
            samples.push(t.elapsed().as_nanos() as f64 / reps as f64);
        }
        samples.sort_by(f64::total_cmp);
        samples[samples.len() / 2]
    };
    // Repeat the whole measurement to ride out scheduler noise.
    let mut worst = f64::INFINITY;
    for _ in 0..3 {
        let t: Vec<f64> = sizes.iter().map(|&n| median_ns(n)).collect();
        let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        let (mx, mt) = (x.iter().sum::<f64>() / 4.0, t.iter().sum::<f64>() / 4.0);
        let slope = x
            .iter()
            .zip(&t)
            .map(|(a, b)| (a - mx) * (b - mt))
            .sum::<f64>()
            / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        let icpt = mt - slope * mx;
        let resid = x
            .iter()
            .zip(&t)
            .map(|(a, b)| ((b - (icpt + slope * a)) / b).abs())
            .fold(0.0, f64::max);
        worst = worst.min(resid);
        if resid < 0.25 {
            break;
        }
    }
    assert!(worst < 0.25, "relative residual {worst}");
}

#[test]
fn backends_agree_on_dynamics() {
    let mut s = StateSampler::new(37);
    for name in FIXTURE_NAMES {
        let m = fixture(name).unwrap();
        let p = m.params::<f64>();
        let pd = m.params::<Dual<f64, 3>>();
        let (q, qd, tau) = (s.position(&m), s.velocity(&m), s.acceleration(&m));
        let plain = aba(&p, &q, &qd, &tau, None).unwrap();
        let lift = |v: &[f64]| {
            v.iter()
                .map(|&x| Dual::<f64, 3>::constant(x))
                .collect::<Vec<_>>()
        };
        let dual = aba(&pd, &lift(&q), &lift(&qd), &lift(&tau), None).unwrap();
        assert_eq!(
            plain,
            dual.iter().map(|d| d.re).collect::<Vec<_>>(),
            "{name}"
        );

        let nv = m.n_dof();
        let mut x = q.clone();
        x.extend(&qd);
        x.extend(&tau);
        let tape = record(&x, |v| {
            let pv = m.params();
            aba(&pv, &v[..nv], &v[nv..2 * nv], &v[2 * nv..], None)
        })
        .unwrap();
        assert_eq!(tape.eval(&x).unwrap(), plain, "{name}");
        assert_eq!(tape.branch_comparisons(), 0);
        // Replaying the same tape at other states reproduces direct evaluation.
        for _ in 0..20 {
            let (q, qd, tau) = (s.position(&m), s.velocity(&m), s.acceleration(&m));
            let mut y = q.clone();
            y.extend(&qd);
            y.extend(&tau);
            let direct = aba(&p, &q, &qd, &tau, None).unwrap();
            let replay = tape.eval(&y).unwrap();
            for (a, b) in direct.iter().zip(&replay) {
                assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "{name}");
            }
        }
    }
}
