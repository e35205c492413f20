use proptest::prelude::*;
use sirate::gaussian::{
    classify_case, conditional_differential_entropy, converse_gamma, r_cr_gaussian, r_gaussian,
    r_gaussian_branches, r_wz_gaussian, scheme_params, scheme_rate, GaussianProblem, Scheme,
    SchemeParams,
};
use sirate::Error;

fn rate(vx: f64, vu: f64, dd: f64, de: f64) -> f64 {
    r_gaussian(&GaussianProblem::new(vx, vu, dd, de).unwrap()).unwrap()
}

fn coding(p: &GaussianProblem) -> SchemeParams {
    match scheme_params(p).unwrap() {
        Scheme::Coding(s) => s,
        other => panic!("expected a coding scheme, got {other:?}"),
    }
}

#[test]
fn rate_examples() {
    assert_eq!(rate(1.0, 1.0, 0.6, 0.36), 0.0);
    assert!((rate(1.0, 1.0, 0.25, 0.0625) - 0.5).abs() < 1e-12);
    let expect = 0.5 * (0.5_f64 * 1.05 / 0.24).log2();
    assert!((rate(1.0, 1.0, 0.25, 0.01) - expect).abs() < 1e-12);
    assert!((expect - 0.564_641_508_472).abs() < 1e-11);
}

#[test]
fn baseline_examples() {
    assert_eq!(r_wz_gaussian(1.0, 1.0, 0.5).unwrap(), 0.0);
    assert!((r_wz_gaussian(1.0, 1.0, 0.25).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(r_wz_gaussian(1.0, 1.0, 2.0).unwrap(), 0.0);
    assert_eq!(r_cr_gaussian(1.0, 1.0, 1.0).unwrap(), 0.0);
    assert!((r_cr_gaussian(1.0, 1.0, 0.25).unwrap() - 0.5 * 2.5_f64.log2()).abs() < 1e-12);
    let mut prev = 0.0;
    for k in 1..30 {
        let r = r_cr_gaussian(1.0, 1.0, 0.5_f64.powi(k)).unwrap();
        assert!(r > prev);
        prev = r;
    }
    assert!(prev > 14.0);
}

#[test]
fn case_examples() {
    let case = |dd, de| classify_case(&GaussianProblem::new(1.0, 1.0, dd, de).unwrap()).unwrap();
    assert_eq!(case(0.6, 0.36), 1);
    assert_eq!(case(0.25, 0.0625), 3);
    assert_eq!(case(0.25, 0.01), 4);
    // D_d = 0.6 is above (1 - sqrt(0.16))^2 + 0.16 = 0.52.
    assert_eq!(case(0.6, 0.16), 2);
    assert_eq!(rate(1.0, 1.0, 0.6, 0.16), 0.0);
}

#[test]
fn scheme_examples() {
    let p3 = GaussianProblem::new(1.0, 1.0, 0.25, 0.0625).unwrap();
    let s3 = coding(&p3);
    assert_eq!(s3.case_id, 3);
    assert!((s3.var_w - 0.5).abs() < 1e-12);
    assert!((s3.a - 0.5).abs() < 1e-12);
    assert!((s3.b - 0.25).abs() < 1e-12);
    assert!((s3.decoder_distortion(1.0, 1.0) - 0.25).abs() < 1e-12);
    assert!((scheme_rate(&s3, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-12);

    let p4 = GaussianProblem::new(1.0, 1.0, 0.25, 0.01).unwrap();
    let s4 = coding(&p4);
    assert_eq!(s4.case_id, 4);
    assert!((s4.b - 0.1).abs() < 1e-12);
    assert!((s4.var_w - 0.24 / 0.57).abs() < 1e-12);
    assert!((s4.a - 0.9 / (1.0 + 0.24 / 0.57)).abs() < 1e-12);
    assert!((s4.a - 0.633_333_333_333).abs() < 1e-9);
    assert!((scheme_rate(&s4, 1.0, 1.0).unwrap() - r_gaussian(&p4).unwrap()).abs() < 1e-12);

    let far = SchemeParams { var_w: 1e300, ..s3 };
    assert!(scheme_rate(&far, 1.0, 1.0).unwrap() < 1e-12);

    let none = GaussianProblem::new(1.0, 1.0, 0.6, 0.36).unwrap();
    assert!(matches!(
        scheme_params(&none).unwrap(),
        Scheme::NoCoding { case_id: 1, .. }
    ));
}

#[test]
fn converse_examples() {
    let h = conditional_differential_entropy(1.0, 1.0);
    let p4 = GaussianProblem::new(1.0, 1.0, 0.25, 0.01).unwrap();
    assert!((h - converse_gamma(&p4).unwrap() - r_gaussian(&p4).unwrap()).abs() < 1e-12);
    let edge = GaussianProblem::new(1.0, 1.0, 0.25, 0.0625).unwrap();
    assert!((h - converse_gamma(&edge).unwrap() - 0.5).abs() < 1e-12);
    let zero = GaussianProblem::new(1.0, 2.0, 0.3, 0.0).unwrap();
    let expect =
        0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 0.3 * 2.0 / (0.3 + 2.0)).log2();
    assert!((converse_gamma(&zero).unwrap() - expect).abs() < 1e-12);
    let loose = GaussianProblem::new(1.0, 1.0, 0.6, 0.36).unwrap();
    assert!(matches!(converse_gamma(&loose), Err(Error::Domain(_))));
}

#[test]
fn gain_rescales_noise() {
    let a = GaussianProblem::with_gain(1.0, 4.0, 0.2, 0.01, 2.0).unwrap();
    let b = GaussianProblem::new(1.0, 1.0, 0.2, 0.01).unwrap();
    assert_eq!(a, b);
    assert!(GaussianProblem::with_gain(1.0, 1.0, 0.2, 0.01, 0.0).is_err());
}

#[test]
fn invalid_parameters() {
    for (vx, vu, dd, de) in [
        (0.0, 1.0, 0.1, 0.0),
        (1.0, -1.0, 0.1, 0.0),
        (1.0, 1.0, 0.0, 0.0),
        (1.0, 1.0, 0.1, -0.1),
        (f64::NAN, 1.0, 0.1, 0.0),
    ] {
        assert!(matches!(
            GaussianProblem::new(vx, vu, dd, de),
            Err(Error::Domain(_))
        ));
    }
}

fn params() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.1..5.0f64, 0.1..5.0f64, 0.01..3.0f64, 0.0..3.0f64)
}

proptest! {
    #[test]
    fn branches_agree_on_boundary(vx in 0.1..5.0f64, vu in 0.1..5.0f64, frac in 0.02..1.5f64) {
        let mmse = vx * vu / (vx + vu);
        let dd = frac * mmse;
        let reach = dd.min(mmse);
        let de = reach * reach / vu;
        prop_assume!(dd > de);
        let p = GaussianProblem::new(vx, vu, dd, de).unwrap();
        let (first, second) = r_gaussian_branches(&p).unwrap();
        prop_assert!((first - second).abs() < 1e-12, "{first} vs {second}");
    }

    #[test]
    fn sandwich_between_baselines((vx, vu, dd, de) in params()) {
        let r = rate(vx, vu, dd, de);
        let wz = r_wz_gaussian(vx, vu, dd).unwrap();
        let cr = r_cr_gaussian(vx, vu, dd).unwrap();
        prop_assert!(wz <= r + 1e-12 && r <= cr + 1e-12, "{wz} {r} {cr}");
        prop_assert!(r >= 0.0);
    }

    #[test]
    fn exact_encoder_estimate_is_common_reconstruction(vx in 0.1..5.0f64, vu in 0.1..5.0f64, dd in 0.01..3.0f64) {
        prop_assert_eq!(rate(vx, vu, dd, 0.0), r_cr_gaussian(vx, vu, dd).unwrap());
    }

    #[test]
    fn loose_encoder_constraint_is_wyner_ziv(vx in 0.1..5.0f64, vu in 0.1..5.0f64, dd in 0.01..3.0f64, extra in 1.0..4.0f64) {
        let mmse = vx * vu / (vx + vu);
        let reach = dd.min(mmse);
        let de = extra * reach * reach / vu;
        let r = rate(vx, vu, dd, de);
        prop_assert!((r - r_wz_gaussian(vx, vu, dd).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nonincreasing((vx, vu, dd, de) in params(), step in 0.0..0.5f64) {
        let r = rate(vx, vu, dd, de);
        prop_assert!(rate(vx, vu, dd + step, de) <= r + 1e-12);
        prop_assert!(rate(vx, vu, dd, de + step) <= r + 1e-12);
    }

    #[test]
    fn midpoint_convex(vx in 0.1..5.0f64, vu in 0.1..5.0f64, a in (0.01..3.0f64, 0.0..3.0f64), b in (0.01..3.0f64, 0.0..3.0f64)) {
        let mid = rate(vx, vu, 0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
        let avg = 0.5 * (rate(vx, vu, a.0, a.1) + rate(vx, vu, b.0, b.1));
        prop_assert!(mid <= avg + 1e-12, "{mid} > {avg}");
    }

    #[test]
    fn scheme_meets_constraints((vx, vu, dd, de) in params()) {
        let p = GaussianProblem::new(vx, vu, dd, de).unwrap();
        if let Scheme::Coding(s) = scheme_params(&p).unwrap() {
            let dec = s.decoder_distortion(vx, vu);
            let enc = s.encoder_distortion(vu);
            prop_assert!(dec <= dd + 1e-9 && enc <= de + 1e-9, "{dec} {enc}");
            // The decoder constraint binds in both coding cases, the encoder
            // one only in case 4.
            prop_assert!((dec - dd).abs() < 1e-12 * (1.0 + dd));
            if s.case_id == 4 {
                prop_assert!((enc - de).abs() < 1e-12 * (1.0 + de));
            }
            let sr = scheme_rate(&s, vx, vu).unwrap();
            prop_assert!((sr - r_gaussian(&p).unwrap()).abs() < 1e-9, "{sr}");
        } else {
            prop_assert_eq!(r_gaussian(&p).unwrap(), 0.0);
        }
    }
}
