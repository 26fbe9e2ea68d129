use smps::mcsim::{
    estimate_mutual_information, mutual_information_from_samples, simulate, site_densities,
    McConfig, RunFile,
};
use smps::models::{asep_mps, AsepParams};
use smps::oracle::exact_mutual_information;

fn config(a: f64, b: f64, n: usize, samples: usize, seed: u64) -> McConfig {
    McConfig::new(AsepParams::new(a, b, n).unwrap(), samples, seed)
}

#[test]
fn densities_match_exact_marginals() {
    let cfg = config(0.3, 0.3, 8, 200_000, 11);
    let samples = simulate(&cfg).unwrap();
    let exact = asep_mps(cfg.params).site_marginals();
    for (k, ((mean, se), m)) in site_densities(&samples).iter().zip(&exact).enumerate() {
        assert!(
            (mean - m[1]).abs() <= 3.0 * se,
            "site {k}: {mean} ± {se} vs {}",
            m[1]
        );
    }
}

#[test]
fn mutual_information_near_exact() {
    let cfg = config(0.3, 0.3, 6, 200_000, 5);
    let est = estimate_mutual_information(&cfg, 3).unwrap();
    let exact = exact_mutual_information(cfg.params, 3).unwrap();
    assert!((est.estimate - exact).abs() <= (3.0 * est.std_error).max(0.02));
    assert!(!est.undersampled);
    assert_eq!(est.sample_count, 200_000);
}

#[test]
fn product_line_is_uncorrelated() {
    let cfg = config(0.4, 0.6, 6, 100_000, 3);
    let est = estimate_mutual_information(&cfg, 3).unwrap();
    // plug-in bias for an 8 x 8 joint is about 49 / (2 S ln 2) bits
    assert!(est.estimate < 3.0 * est.std_error + 1e-3, "{est:?}");
    let exp_mi = (est.estimate * std::f64::consts::LN_2).exp();
    assert!((exp_mi - 1.0).abs() < 2e-3);
}

#[test]
fn same_seed_same_samples() {
    let cfg = config(0.5, 0.2, 5, 2_000, 99);
    assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
    let other = McConfig {
        seed: 100,
        ..cfg.clone()
    };
    assert_ne!(simulate(&cfg).unwrap(), simulate(&other).unwrap());
}

#[test]
fn run_file_round_trip() {
    let cfg = config(0.3, 0.7, 7, 1_000, 4);
    let run = RunFile {
        config: cfg.clone(),
        samples: simulate(&cfg).unwrap(),
    };
    let mut buf = Vec::new();
    run.write_to(&mut buf).unwrap();
    let back = RunFile::read_from(buf.as_slice()).unwrap();
    assert_eq!(back.config, cfg);
    assert_eq!(back.samples, run.samples);
    let a = mutual_information_from_samples(&run.samples, 3).unwrap();
    let b = mutual_information_from_samples(&back.samples, 3).unwrap();
    assert_eq!(a, b);
    assert!(RunFile::read_from(&buf[..10]).is_err());
}

#[test]
fn oversized_chain_is_rejected() {
    assert!(simulate(&config(0.3, 0.3, 25, 1_000, 1)).is_err());
    let few = config(0.3, 0.3, 4, 5, 1);
    assert!(simulate(&few).is_err());
}
