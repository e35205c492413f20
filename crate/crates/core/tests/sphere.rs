use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sirate::gaussian::{scheme_params, GaussianProblem, Scheme, SchemeParams};
use sirate::sphere::{
    build_codebook, cap_exponent, cap_fraction, cap_ratio, codebook_size, decode, encode,
    largest_feasible_n, run_simulation, sample_sphere, simulate_with, Codebook, SimConfig,
};
use sirate::Error;
use std::f64::consts::PI;

fn case3() -> SchemeParams {
    let p = GaussianProblem::new(1.0, 1.0, 0.25, 0.0625).unwrap();
    match scheme_params(&p).unwrap() {
        Scheme::Coding(s) => s,
        _ => unreachable!(),
    }
}

/// `var_x = var_w = 1` gives `R' = 1/2`; `var_u` is picked so that
/// `R = 0.2`. With `delta = 0.05` and `n = 8` that is 16 codewords in four
/// bins of four.
fn sixteen_codewords() -> SimConfig {
    let t = 0.4_f64.exp2() - 1.0;
    let var_u = t / (1.0 - t);
    let params = SchemeParams {
        a: 0.5,
        b: 0.2,
        var_w: 1.0,
        case_id: 3,
    };
    SimConfig::new(8, 1.0, var_u, params, 0.05, 50, 3).unwrap()
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

#[test]
fn sphere_samples() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let v = sample_sphere(2, 1.0, &mut rng).unwrap();
    assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-15);

    let (n, count, r) = (3, 100_000, 2.0);
    let mut sums = vec![0.0; n];
    let mut below = 0usize;
    for _ in 0..count {
        let v = sample_sphere(n, r, &mut rng).unwrap();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((norm - r).abs() < 1e-12);
        for (s, c) in sums.iter_mut().zip(&v) {
            *s += c;
        }
        below += usize::from(v[0] < 0.0);
    }
    let sigma = (r * r / n as f64 / count as f64).sqrt();
    for s in sums {
        assert!((s / count as f64).abs() < 4.0 * sigma);
    }
    assert!((below as f64 / count as f64 - 0.5).abs() < 0.01);
    assert!(sample_sphere(1, 1.0, &mut rng).is_err());
    assert!(sample_sphere(3, 0.0, &mut rng).is_err());
}

#[test]
fn cap_examples() {
    for n in [2, 3, 17, 400] {
        assert!((cap_ratio(n, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(cap_ratio(n, 1.0).unwrap(), 0.0);
    }
    for tau in [0.0, 0.25, 0.5, 0.9] {
        assert!((cap_ratio(3, tau).unwrap() - (1.0 - tau) / 2.0).abs() < 1e-12);
    }
    assert_eq!(cap_exponent(0.0).unwrap(), 0.0);
    assert!((cap_exponent(0.6).unwrap() - 0.5 * 0.64_f64.log2()).abs() < 1e-15);
    assert!((cap_exponent(0.6).unwrap() + 0.3219).abs() < 1e-4);
    let empirical = cap_ratio(512, 0.6).unwrap().log2() / 512.0;
    assert!((empirical - cap_exponent(0.6).unwrap()).abs() <= 0.02);
    assert!(cap_ratio(3, 1.5).is_err());
    assert!(cap_ratio(1, 0.5).is_err());
}

#[test]
fn cap_monotone_in_tau() {
    for n in [2, 5, 50, 500] {
        let mut prev = 1.0;
        for k in 0..=100 {
            let r = cap_ratio(n, k as f64 / 100.0).unwrap();
            assert!(r <= prev + 1e-15);
            prev = r;
        }
    }
}

#[test]
fn caps_narrower_than_hemisphere_vanish() {
    let ns = [64, 256, 1024];
    let small: Vec<f64> = ns
        .iter()
        .map(|&n| cap_fraction(n, PI / 3.0).unwrap())
        .collect();
    let large: Vec<f64> = ns
        .iter()
        .map(|&n| cap_fraction(n, 2.0 * PI / 3.0).unwrap())
        .collect();
    assert!(small.windows(2).all(|w| w[1] < w[0]));
    assert!(large.windows(2).all(|w| w[1] >= w[0]));
    // The wide caps reach 1 in floating point, so follow their complements.
    let rest: Vec<f64> = ns.iter().map(|&n| cap_ratio(n, 0.5).unwrap()).collect();
    assert!(rest.windows(2).all(|w| w[1] < w[0]));
    assert!(small[2] < 1e-50);
    assert!(1.0 - large[2] < 1e-50);
}

#[test]
fn cap_matches_monte_carlo() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let (n, tau, count) = (5, 0.3, 100_000);
    let hits = (0..count)
        .filter(|_| sample_sphere(n, 1.0, &mut rng).unwrap()[0] >= tau)
        .count();
    let p = cap_ratio(n, tau).unwrap();
    let se = (p * (1.0 - p) / count as f64).sqrt();
    assert!((hits as f64 / count as f64 - p).abs() < 4.0 * se);
}

#[test]
fn sixteen_codewords_in_four_bins() {
    let cfg = sixteen_codewords();
    let cb = build_codebook(&cfg).unwrap();
    assert_eq!(cb.len(), 16);
    assert_eq!(cb.bins(), &[0..4, 4..8, 8..12, 12..16]);
    let r = cb.radius();
    for i in 0..cb.len() {
        let norm = cb.vector(i).iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((norm - r).abs() <= 1e-9 * r);
        assert_eq!(cb.bin_of(i), i / 4);
    }
    assert_eq!(build_codebook(&cfg).unwrap(), cb);
    let other = SimConfig { seed: 4, ..cfg };
    assert_ne!(build_codebook(&other).unwrap(), cb);
}

#[test]
fn acceptance_sized_codebook_norms() {
    let mut cfg = SimConfig::new(16, 1.0, 1.0, case3(), 0.1, 1, 0).unwrap();
    cfg.codeword_cap = 1 << 20;
    let cb = build_codebook(&cfg).unwrap();
    assert_eq!(cb.len() as f64, codebook_size(&cfg.params, 1.0, 16));
    let r = cb.radius();
    let worst = (0..cb.len())
        .map(|i| (cb.vector(i).iter().map(|c| c * c).sum::<f64>().sqrt() - r).abs() / r)
        .fold(0.0, f64::max);
    assert!(worst <= 1e-9);
}

#[test]
fn encoder_picks_target_angle() {
    let cfg = sixteen_codewords();
    let n = cfg.n;
    let c = cfg.encoder_target();
    let radius = 3.0;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut vectors: Vec<Vec<f64>> = (0..7)
        .map(|_| sample_sphere(n, radius, &mut rng).unwrap())
        .collect();
    let exact: Vec<f64> = (0..n)
        .map(|i| radius * (c * unit(n, 0)[i] + (1.0 - c * c).sqrt() * unit(n, 1)[i]))
        .collect();
    vectors.insert(4, exact.clone());
    let cb = Codebook::new(n, vectors, vec![0..3, 3..8]).unwrap();
    let x: Vec<f64> = unit(n, 0).iter().map(|v| 2.5 * v).collect();
    let e = encode(&x, &cb, &cfg).unwrap();
    assert_eq!(e.index, 4);
    assert_eq!(e.bin, 1);
    for i in 0..n {
        assert_eq!(e.xhat_e[i], exact[i] + cfg.params.b * x[i]);
    }

    let single = Codebook::new(n, vec![exact.clone()], vec![0..1]).unwrap();
    let e = encode(&unit(n, 3), &single, &cfg).unwrap();
    assert_eq!((e.index, e.bin), (0, 0));
    assert!(encode(&vec![0.0; n], &single, &cfg).is_err());
    assert!(encode(&[1.0], &single, &cfg).is_err());
}

#[test]
fn decoder_searches_its_bin() {
    let cfg = sixteen_codewords();
    let n = cfg.n;
    let c = cfg.decoder_target().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut vectors: Vec<Vec<f64>> = (0..5)
        .map(|_| sample_sphere(n, 1.0, &mut rng).unwrap())
        .collect();
    let exact: Vec<f64> = (0..n)
        .map(|i| c * unit(n, 2)[i] + (1.0 - c * c).sqrt() * unit(n, 5)[i])
        .collect();
    vectors.insert(3, exact.clone());
    let cb = Codebook::new(n, vectors, vec![0..1, 1..6]).unwrap();
    let y = unit(n, 2);
    let d = decode(1, &y, &cb, &cfg).unwrap();
    assert_eq!(d.index, 3);
    for i in 0..n {
        assert_eq!(d.xhat_d[i], exact[i] + cfg.params.b * y[i]);
    }
    assert_eq!(decode(0, &y, &cb, &cfg).unwrap().index, 0);
    assert!(matches!(decode(2, &y, &cb, &cfg), Err(Error::Domain(_))));
}

#[test]
fn codebook_rejects_bad_layouts() {
    let v = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    assert!(Codebook::new(2, v.clone(), vec![0..1]).is_err());
    assert!(Codebook::new(2, v.clone(), vec![0..1, 2..2]).is_err());
    assert!(Codebook::new(2, vec![vec![1.0, 0.0], vec![0.0, 2.0]], vec![0..2]).is_err());
    assert!(Codebook::new(3, v, vec![0..2]).is_err());
}

#[test]
fn simulation_is_reproducible() {
    let cfg = SimConfig {
        trials: 40,
        ..SimConfig::new(12, 1.0, 1.0, case3(), 0.1, 40, 17).unwrap()
    };
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seed, 17);
    assert_eq!(a.trials_run, 40);
    let c = run_simulation(&SimConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn union_bound_on_events() {
    for (n, seed) in [(8, 0), (12, 1), (16, 2)] {
        let cfg = SimConfig::new(n, 1.0, 1.0, case3(), 0.1, 60, seed).unwrap();
        let r = run_simulation(&cfg).unwrap();
        let parts = [r.freq_src, r.freq_enc, r.freq_dec1, r.freq_dec2];
        assert!(r.freq_any <= parts.iter().sum::<f64>() + 1e-12);
        assert!(parts.iter().all(|&f| f <= r.freq_any));
        assert!((0.0..=1.0).contains(&r.freq_any));
        let se = r.standard_error(r.freq_any);
        assert!((se - (r.freq_any * (1.0 - r.freq_any) / 60.0).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn no_encoder_gain_means_no_encoder_distortion() {
    // Singleton bins rule out decoding errors, and with b = 0 both
    // reconstructions are the shared codeword.
    let params = SchemeParams {
        a: 0.5,
        b: 0.0,
        var_w: 1.0,
        case_id: 3,
    };
    let cfg = SimConfig::new(10, 1.0, 1.0, params, 1.0, 30, 2).unwrap();
    let cb = build_codebook(&cfg).unwrap();
    assert_eq!(cb.bins().len(), cb.len());
    let r = simulate_with(&cfg, &cb).unwrap();
    assert_eq!(r.freq_dec2, 0.0);
    assert_eq!(r.empirical_de, 0.0);
    assert!(r.success_de.map_or(true, |v| v == 0.0));
}

#[test]
fn configuration_errors() {
    let s = case3();
    let big = SimConfig::new(200, 1.0, 1.0, s, 0.1, 1, 0).unwrap();
    assert!(matches!(build_codebook(&big), Err(Error::ResourceCap(_))));
    let n = largest_feasible_n(&s, 1.0, 1 << 10).unwrap();
    assert!(codebook_size(&s, 1.0, n) <= 1024.0);
    assert!(codebook_size(&s, 1.0, n + 1) > 1024.0);
    let bad = SimConfig {
        trials: 0,
        ..SimConfig::new(8, 1.0, 1.0, s, 0.1, 1, 0).unwrap()
    };
    assert!(matches!(run_simulation(&bad), Err(Error::Domain(_))));
}
