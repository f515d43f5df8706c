use std::sync::{Arc, OnceLock};

use super::*;
use crate::dynamics::crba;
use crate::kinematics::{end_effector_jacobian, jacobian_matrix};
use crate::model::fixture;
use crate::sampling::StateSampler;

fn model(name: &str) -> Arc<RobotModel> {
    Arc::new(fixture(name).unwrap())
}

fn quad() -> &'static RobotDerivatives {
    static QUAD: OnceLock<RobotDerivatives> = OnceLock::new();
    QUAD.get_or_init(|| {
        RobotDerivatives::new(model("quad18"), &OptimizationConfig::default(), 7).unwrap()
    })
}

fn arm() -> &'static RobotDerivatives {
    static ARM: OnceLock<RobotDerivatives> = OnceLock::new();
    ARM.get_or_init(|| {
        RobotDerivatives::new(model("arm6"), &OptimizationConfig::default(), 7).unwrap()
    })
}

struct State {
    q: Vec<f64>,
    qd: Vec<f64>,
    u: Vec<f64>,
    qdd: Vec<f64>,
}

fn state(m: &RobotModel, s: &mut StateSampler) -> State {
    State {
        q: s.position(m),
        qd: s.velocity(m),
        u: s.torque(m),
        qdd: s.acceleration(m),
    }
}

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

/// Max entry difference relative to the larger matrix's magnitude.
fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1.0)
}

const AD: [DerivativeProvider; 3] = [
    DerivativeProvider::ForwardAD,
    DerivativeProvider::ReverseAD,
    DerivativeProvider::CompiledAD,
];

#[test]
fn quad18_dimensions() {
    let d = quad();
    assert_eq!(
        (
            d.forward_dynamics().n_inputs(),
            d.forward_dynamics().n_outputs()
        ),
        (48, 18)
    );
    assert_eq!(
        (
            d.inverse_dynamics().n_inputs(),
            d.inverse_dynamics().n_outputs()
        ),
        (54, 18)
    );
    let k = d.kinematics().unwrap();
    assert_eq!((k.n_inputs(), k.n_outputs()), (36, 24));
    let fb = d.floating_base_inverse_dynamics().unwrap();
    assert_eq!((fb.n_inputs(), fb.n_outputs()), (48, 12));
}

#[test]
fn pendulum_torque_jacobian_closed_form() {
    let d = RobotDerivatives::new(model("pendulum"), &OptimizationConfig::default(), 1).unwrap();
    let expected = 1.0 / (1.0 * 0.5 * 0.5 + 0.0833);
    for provider in DerivativeProvider::ALL {
        let b = d
            .fd_torque_jacobian(&[0.4], &[-1.1], &[0.3], provider)
            .unwrap();
        let tol = if provider == DerivativeProvider::NumDiff {
            1e-6
        } else {
            1e-10
        };
        assert!(
            (b[(0, 0)] - expected).abs() < tol,
            "{provider}: {}",
            b[(0, 0)]
        );
    }
}

#[test]
fn quad18_torque_jacobian_matches_analytic_paths() {
    let d = quad();
    let m = d.model();
    let mut s = StateSampler::new(11);
    for _ in 0..5 {
        let st = state(m, &mut s);
        let b = d
            .fd_torque_jacobian(&st.q, &st.qd, &st.u, DerivativeProvider::CompiledAD)
            .unwrap();
        let dense = analytic_torque_jacobian(m, &st.q, AnalyticMethod::DenseInverse).unwrap();
        let ltl = analytic_torque_jacobian(m, &st.q, AnalyticMethod::LtL).unwrap();
        assert_eq!(b.shape(), (18, 12));
        assert!(frob(&b, &dense) < 1e-12, "dense {:e}", frob(&b, &dense));
        assert!(frob(&b, &ltl) < 1e-10, "ltl {:e}", frob(&b, &ltl));
        // The actuated 12 x 12 corner on its own.
        let corner = |x: &DMatrix<f64>| x.rows(6, 12).into_owned();
        assert!(frob(&corner(&b), &corner(&dense)) < 1e-12);
    }
}

#[test]
fn numdiff_deviation_is_of_order_sqrt_eps() {
    let d = quad();
    let mut s = StateSampler::new(12);
    let st = state(d.model(), &mut s);
    let ad = d
        .fd_derivatives(&st.q, &st.qd, &st.u, DerivativeProvider::CompiledAD)
        .unwrap();
    let nd = d
        .fd_derivatives(&st.q, &st.qd, &st.u, DerivativeProvider::NumDiff)
        .unwrap();
    let dev = frob(&ad.b, &nd.b);
    assert!(dev > 1e-10 && dev < 1e-4, "{dev:e}");
}

fn assert_agree(name: &str, mats: &[(DerivativeProvider, DMatrix<f64>)], numdiff: &DMatrix<f64>) {
    for (i, (pa, a)) in mats.iter().enumerate() {
        for (pb, b) in &mats[i + 1..] {
            let r = rel_diff(a, b);
            assert!(r < 1e-12, "{name}: {pa} vs {pb} differ by {r:e}");
        }
        let r = rel_diff(a, numdiff);
        assert!(r < 1e-4, "{name}: {pa} vs numdiff differ by {r:e}");
    }
}

#[test]
fn providers_agree_on_every_derivative() {
    for d in [quad(), arm()] {
        let m = d.model();
        let mut s = StateSampler::new(13);
        for _ in 0..3 {
            let st = state(m, &mut s);
            let fd = |p| {
                let l = d.fd_derivatives(&st.q, &st.qd, &st.u, p).unwrap();
                DMatrix::from_fn(l.b.nrows(), m.n_dof() * 2 + l.b.ncols(), |r, c| {
                    let n = m.n_dof();
                    if c < n {
                        l.a_q[(r, c)]
                    } else if c < 2 * n {
                        l.a_qd[(r, c - n)]
                    } else {
                        l.b[(r, c - 2 * n)]
                    }
                })
            };
            let mats: Vec<_> = AD.iter().map(|&p| (p, fd(p))).collect();
            assert_agree("fd", &mats, &fd(DerivativeProvider::NumDiff));

            let id = |p| {
                let l = d.id_derivatives(&st.q, &st.qd, &st.qdd, p).unwrap();
                let mut j = l.d_q.clone().resize_horizontally(3 * m.n_dof(), 0.0);
                j.columns_mut(m.n_dof(), m.n_dof()).copy_from(&l.d_qd);
                j.columns_mut(2 * m.n_dof(), m.n_dof()).copy_from(&l.d_qdd);
                j
            };
            let mats: Vec<_> = AD.iter().map(|&p| (p, id(p))).collect();
            assert_agree("id", &mats, &id(DerivativeProvider::NumDiff));

            let kin = |p| d.kinematics_derivatives(&st.q, &st.qd, p).unwrap();
            let mats: Vec<_> = AD.iter().map(|&p| (p, kin(p))).collect();
            assert_agree("kinematics", &mats, &kin(DerivativeProvider::NumDiff));
        }
    }
}

#[test]
fn both_compiled_modes_agree_with_tape() {
    let d = quad();
    let mut s = StateSampler::new(14);
    let st = state(d.model(), &mut s);
    let x = [st.q.clone(), st.qd.clone(), st.u.clone()].concat();
    let engine = d.forward_dynamics();
    let (y0, reference) = engine.tape().reverse_jacobian(&x).unwrap();
    for mode in [JacobianMode::Forward, JacobianMode::Reverse] {
        let (y, j) = engine.compiled_jacobian(&x, mode).unwrap();
        assert_eq!(y, y0);
        assert!(rel_diff(&j, &reference) < 1e-12, "{mode:?}");
    }
}

#[test]
fn inverse_dynamics_acceleration_block_is_mass_matrix() {
    for name in ["double_pendulum", "arm6", "quad18"] {
        let m = model(name);
        let d = RobotDerivatives::new(m.clone(), &OptimizationConfig::default(), 3).unwrap();
        let mut s = StateSampler::new(15);
        for _ in 0..3 {
            let st = state(&m, &mut s);
            let mass = crba(&m.params::<f64>(), &st.q).unwrap().to_dmatrix();
            for p in AD {
                let dd = d.id_derivatives(&st.q, &st.qd, &st.qdd, p).unwrap();
                assert!(frob(&dd.d_qdd, &mass) < 1e-9, "{name} {p}");
                assert!(frob(&dd.d_qdd, &dd.d_qdd.transpose()) < 1e-9);
            }
        }
    }
}

#[test]
fn velocity_block_at_rest_matches_central_differences() {
    let d = arm();
    let m = d.model();
    let mut s = StateSampler::new(16);
    let st = state(m, &mut s);
    let zero = vec![0.0; m.n_dof()];
    let dd = d
        .id_derivatives(&st.q, &zero, &st.qdd, DerivativeProvider::CompiledAD)
        .unwrap();
    let x = [st.q.clone(), zero.clone(), st.qdd.clone()].concat();
    let nd = d.inverse_dynamics().central_jacobian(&x).unwrap();
    let nd_qd = nd.columns(m.n_dof(), m.n_dof()).into_owned();
    assert!((dd.d_qd - nd_qd).amax() < 1e-5);
}

#[test]
fn position_block_vanishes_without_gravity_at_rest() {
    for name in ["double_pendulum", "arm6"] {
        let mut raw = fixture(name).unwrap();
        raw.gravity = [0.0; 3];
        let m = Arc::new(raw);
        let d = RobotDerivatives::new(m.clone(), &OptimizationConfig::default(), 3).unwrap();
        let mut s = StateSampler::new(17);
        let q = s.position(&m);
        let zero = vec![0.0; m.n_dof()];
        for p in AD {
            let dd = d.id_derivatives(&q, &zero, &zero, p).unwrap();
            assert_eq!(dd.d_q.amax(), 0.0, "{name} {p}");
        }
    }
}

#[test]
fn floating_base_id_requires_floating_base() {
    assert!(matches!(
        arm().floating_base_inverse_dynamics(),
        Err(Error::NotFloatingBase)
    ));
    assert!(matches!(
        FloatingBaseInverseDynamics::new(model("arm6")),
        Err(Error::NotFloatingBase)
    ));
    let z = vec![0.0; 6];
    assert!(matches!(
        arm().floating_base_id_derivatives(&z, &z, &z, DerivativeProvider::CompiledAD),
        Err(Error::NotFloatingBase)
    ));
}

#[test]
fn welded_floating_base_id_reduces_to_id() {
    for name in ["arm6", "quad18"] {
        let m = model(name);
        let welded = FloatingBaseInverseDynamics::welded(m.clone());
        let id = InverseDynamics::new(m.clone());
        let mut s = StateSampler::new(18);
        for _ in 0..3 {
            let st = state(&m, &mut s);
            let x = [st.q, st.qd, st.qdd].concat();
            let a = welded.eval_f64(&x).unwrap();
            let b = id.eval_f64(&x).unwrap();
            let scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-10 * scale, "{name}: {u} vs {v}");
            }
            let (_, ja) = forward_jacobian(&welded, &x, None).unwrap();
            let (_, jb) = forward_jacobian(&id, &x, None).unwrap();
            assert!(rel_diff(&ja, &jb) < 1e-10);
        }
    }
}

#[test]
fn floating_base_acceleration_block_is_operational_inertia() {
    let d = quad();
    let m = d.model();
    let sel = m.selection_matrix();
    let mut s = StateSampler::new(19);
    for _ in 0..3 {
        let st = state(m, &mut s);
        let qdd_a = s.uniform(12, -5.0, 5.0);
        let mass = crba(&m.params::<f64>(), &st.q).unwrap().to_dmatrix();
        let lambda = (&sel * mass.try_inverse().unwrap() * sel.transpose())
            .try_inverse()
            .unwrap();
        for p in AD {
            let dd = d
                .floating_base_id_derivatives(&st.q, &st.qd, &qdd_a, p)
                .unwrap();
            assert!(
                frob(&dd.d_qdd, &lambda) < 1e-9 * lambda.norm().max(1.0),
                "{p} {:e}",
                frob(&dd.d_qdd, &lambda)
            );
        }
        let x = [st.q.clone(), st.qd.clone(), qdd_a.clone()].concat();
        let nd = d
            .floating_base_inverse_dynamics()
            .unwrap()
            .central_jacobian(&x)
            .unwrap();
        let dd = d
            .floating_base_id_derivatives(&st.q, &st.qd, &qdd_a, DerivativeProvider::CompiledAD)
            .unwrap();
        let blocks = [(&dd.d_q, 0), (&dd.d_qd, 18), (&dd.d_qdd, 36)];
        for (b, off) in blocks {
            let n = nd.columns(off, b.ncols()).into_owned();
            assert!(rel_diff(b, &n) < 1e-4, "{:e}", rel_diff(b, &n));
        }
    }
}

#[test]
fn floating_base_id_inverts_forward_dynamics() {
    // With zero base torque, fd(q, qd, tau_a(q, qd, qdd_a)) reproduces qdd_a
    // on the actuated coordinates.
    let d = quad();
    let m = d.model();
    let mut s = StateSampler::new(20);
    let st = state(m, &mut s);
    let qdd_a = s.uniform(12, -5.0, 5.0);
    let fb = d.floating_base_inverse_dynamics().unwrap();
    let tau = fb
        .value(&[st.q.clone(), st.qd.clone(), qdd_a.clone()].concat())
        .unwrap();
    let qdd = d
        .forward_dynamics()
        .value(&[st.q, st.qd, tau].concat())
        .unwrap();
    for (a, b) in qdd[6..].iter().zip(&qdd_a) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn kinematics_blocks() {
    let d = quad();
    let m = d.model();
    let n = m.n_dof();
    let k = m.end_effectors.len();
    let mut s = StateSampler::new(21);
    for _ in 0..3 {
        let st = state(m, &mut s);
        let j = d
            .kinematics_derivatives(&st.q, &st.qd, DerivativeProvider::CompiledAD)
            .unwrap();
        assert_eq!(j.view((0, n), (3 * k, n)).amax(), 0.0);
        for e in 0..k {
            let geo =
                jacobian_matrix(&end_effector_jacobian(&m.params::<f64>(), &st.q, e).unwrap());
            let lin = geo.rows(3, 3).into_owned();
            let block = j.view((3 * k + 3 * e, n), (3, n)).into_owned();
            assert!((block - lin).amax() < 1e-10);
        }
        let nd = d
            .kinematics_derivatives(&st.q, &st.qd, DerivativeProvider::NumDiff)
            .unwrap();
        assert!((j - nd).amax() < 1e-5);
    }
}

#[test]
fn fd_numdiff_matches_ad_on_fixed_base_fixtures() {
    for name in ["pendulum", "double_pendulum", "arm6"] {
        let d = RobotDerivatives::new(model(name), &OptimizationConfig::default(), 4).unwrap();
        let mut s = StateSampler::new(22);
        let st = state(d.model(), &mut s);
        let a = d
            .fd_derivatives(&st.q, &st.qd, &st.u, DerivativeProvider::ForwardAD)
            .unwrap();
        let b = d
            .fd_derivatives(&st.q, &st.qd, &st.u, DerivativeProvider::NumDiff)
            .unwrap();
        for (x, y) in [(&a.a_q, &b.a_q), (&a.a_qd, &b.a_qd), (&a.b, &b.b)] {
            assert!(rel_diff(x, y) < 1e-5, "{name}: {:e}", rel_diff(x, y));
        }
    }
}

#[test]
fn mass_matrix_derivative_properties() {
    let pendulum = mass_matrix_derivative(&model("pendulum"), &[0.9]).unwrap();
    assert_eq!(pendulum.len(), 1);
    assert_eq!(pendulum[0].amax(), 0.0);

    for name in ["double_pendulum", "arm6"] {
        let m = model(name);
        let mut s = StateSampler::new(23);
        let q = s.position(&m);
        let dm = mass_matrix_derivative(&m, &q).unwrap();
        let nd = numdiff_jacobian(
            |x| Ok(crba(&m.params::<f64>(), x)?.as_slice().to_vec()),
            &q,
            DifferenceScheme::Central,
        )
        .unwrap();
        for (k, slice) in dm.iter().enumerate() {
            assert!((slice - slice.transpose()).amax() < 1e-15, "{name}");
            let col = DMatrix::from_row_slice(m.n_dof(), m.n_dof(), nd.column(k).as_slice());
            assert!((slice - col).amax() < 1e-5, "{name} slice {k}");
        }
    }
    // The double pendulum's inertia depends only on the elbow angle.
    let dm = mass_matrix_derivative(&model("double_pendulum"), &[0.3, 0.8]).unwrap();
    assert_eq!(dm[0].amax(), 0.0);
    assert!(dm[1].amax() > 0.1);
    assert!(mass_matrix_derivative(&model("quad18"), &[0.0; 18]).is_err());
}

#[test]
fn inverse_dynamics_mass_derivative_closed_form() {
    let m = model("pendulum");
    let id = InverseDynamics::new(m.clone())
        .with_inertial_parameters(vec![0])
        .unwrap();
    assert_eq!(id.n_inputs(), 3 + INERTIAL_PARAMETERS_PER_LINK);
    let theta = id.inertial_parameters();
    assert_eq!(theta[0], 1.0);
    for q in [0.0, 0.7, -2.1] {
        let x = [vec![q, 0.0, 0.0], theta.clone()].concat();
        let (tau, j) = forward_jacobian(&id, &x, None).unwrap();
        let plain = InverseDynamics::new(m.clone())
            .eval_f64(&[q, 0.0, 0.0])
            .unwrap();
        assert!((tau[0] - plain[0]).abs() < 1e-14);
        let expected = 9.81 * 0.5 * q.cos();
        assert!(
            (j[(0, 3)] - expected).abs() < 1e-12,
            "{} vs {expected}",
            j[(0, 3)]
        );
    }
    assert!(InverseDynamics::new(m)
        .with_inertial_parameters(vec![3])
        .is_err());
}

#[test]
fn contact_inside_dynamics_keeps_providers_consistent() {
    let m = model("quad18");
    let contact = ContactSetup {
        params: crate::contact::ContactModelParams::default(),
        end_effectors: (0..m.end_effectors.len()).collect(),
    };
    let d = RobotDerivatives::with_contact(m.clone(), contact, &OptimizationConfig::default(), 5)
        .unwrap();
    let mut s = StateSampler::new(24);
    let mut st = state(&m, &mut s);
    st.q[5] = 0.3;
    let base = d
        .fd_derivatives(&st.q, &st.qd, &st.u, DerivativeProvider::ForwardAD)
        .unwrap();
    for p in [
        DerivativeProvider::ReverseAD,
        DerivativeProvider::CompiledAD,
    ] {
        let other = d.fd_derivatives(&st.q, &st.qd, &st.u, p).unwrap();
        assert!(rel_diff(&base.a_q, &other.a_q) < 1e-12, "{p}");
        assert!(rel_diff(&base.a_qd, &other.a_qd) < 1e-12, "{p}");
    }
    // Contact does not depend on the torques.
    let free = quad()
        .fd_derivatives(&st.q, &st.qd, &st.u, DerivativeProvider::ForwardAD)
        .unwrap();
    assert!(rel_diff(&base.b, &free.b) < 1e-12);
}

#[test]
fn analytic_provider_only_covers_the_torque_block() {
    let d = arm();
    let z = vec![0.0; 6];
    let err = d
        .fd_derivatives(&z, &z, &z, DerivativeProvider::AnalyticReference)
        .unwrap_err();
    assert!(matches!(err, Error::Unsupported { .. }));
    assert!(d
        .id_derivatives(&z, &z, &z, DerivativeProvider::AnalyticReference)
        .is_err());
    assert!(d
        .fd_torque_jacobian(&z, &z, &z, DerivativeProvider::AnalyticReference)
        .is_ok());
    assert!(matches!(
        d.fd_derivatives(&z[..5], &z, &z, DerivativeProvider::CompiledAD),
        Err(Error::Dimension { .. })
    ));
}
