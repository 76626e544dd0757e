use pcdm::eso::{self, EsoSource};
use pcdm::io::{gen_least_squares, SparseMatrix};
use pcdm::model::{CompositeProblem, Regularizer};
use pcdm::sampling::SamplingSpec;

#[test]
fn experiment_factors() {
    let cases = [
        (eso::rt_p_factor(20, 512, 2000), 5.856, 1e-3),
        (eso::rt_d_factor(10.48, 512, 2000), 3.424, 1e-3),
        (eso::rt_p_factor(29881, 32, 29882), 31.998, 2e-3),
        (eso::rt_d_factor(287.273, 32, 29882), 1.296, 2e-3),
        (eso::rt_p_factor(29881, 256, 29882), 255.991, 2e-3),
        (eso::rt_d_factor(287.273, 256, 29882), 3.443, 2e-3),
    ];
    for (got, want, tol) in cases {
        assert!((got - want).abs() <= tol, "{got} vs {want}");
    }
}

#[test]
fn separable_instance_gives_unit_weights() {
    let inst = gen_least_squares(60, 40, 1, 3).unwrap();
    let p = CompositeProblem::least_squares(inst.a, inst.b, Regularizer::Zero).unwrap();
    let d = p.smoothness_with_sigma(1e-12, 10_000).unwrap();
    assert_eq!(d.omega, 1);
    let spec = SamplingSpec::tau_nice(8, 40).unwrap();
    for src in [EsoSource::RtP, EsoSource::RtD, EsoSource::Fr, EsoSource::Nc, EsoSource::Bkbg] {
        let v = eso::build_eso(src, &d, &spec).unwrap().v;
        assert!(v.iter().all(|&x| (x - 1.0).abs() < 1e-9), "{src}: {v:?}");
    }
}

#[test]
fn toy_logistic_nc_is_about_m_times_larger() {
    let p = CompositeProblem::toy_logistic(10, 100.0).unwrap();
    let d = p.smoothness().unwrap();
    assert!(d.lipschitz[0] <= 0.25 + 1e-6);
    let nc = eso::eso_nc(&d, 1).unwrap().v[0];
    let rtp = eso::eso_rt_p(&d.lipschitz, d.omega, 1, 1).unwrap().v[0];
    assert!(((nc / rtp) / 10.0 - 1.0).abs() <= 0.05, "{}", nc / rtp);

    let one = CompositeProblem::toy_logistic(1, 3.0).unwrap().smoothness().unwrap();
    let nc1 = eso::eso_nc(&one, 1).unwrap().v[0];
    assert!((nc1 - 0.25).abs() < 1e-9 && (one.lipschitz[0] - 0.25).abs() < 1e-9);
}

#[test]
fn toy_logistic_curvature_scan() {
    // Dense scan of f'' over a wide window never exceeds the reported L.
    let (m, zeta) = (10, 100.0);
    let l = CompositeProblem::toy_logistic(m, zeta).unwrap().smoothness().unwrap().lipschitz[0];
    let mut x = -50.0;
    while x < 1100.0 {
        assert!(pcdm::model::toy_derivatives(m, zeta, x).2 <= l + 1e-12);
        x += 0.01;
    }
}

#[test]
fn nc_dominates_fr_on_generated_data() {
    let inst = gen_least_squares(800, 200, 20, 1).unwrap();
    let d = eso::lipschitz_from_quadratic(&inst.a).unwrap();
    let fr = eso::eso_fr(&d, 64, 200).unwrap().v;
    let nc = eso::eso_nc(&d, 200).unwrap().v;
    assert!(fr.iter().zip(&nc).all(|(a, b)| b + 1e-12 >= *a));
    let ratio = nc.iter().sum::<f64>() / fr.iter().sum::<f64>();
    assert!((2.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn sigma_of_orthonormal_columns_is_one() {
    let a = SparseMatrix::identity(5);
    assert!((eso::sigma_estimate(&a, 1e-12, 100).unwrap() - 1.0).abs() < 1e-12);
}
