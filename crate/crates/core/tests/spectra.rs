use std::f64::consts::PI;

use approx::assert_relative_eq;
use qfilter::quadrature::GaussPanels;
use qfilter::NoiseSpectrum;

#[test]
fn white_cutoff_variance_and_xi() {
    let s = NoiseSpectrum::white_cutoff(0.5, 40.0).unwrap();
    assert_relative_eq!(s.variance().unwrap(), 20.0 / PI, max_relative = 1e-14);
    let st = s.strength(0.3).unwrap();
    assert_relative_eq!(st.xi, st.rms * 0.15, max_relative = 1e-14);
    assert!(!st.xi_warning);
    assert!(s.strength(10.0).unwrap().xi_warning);
}

#[test]
fn power_law_variance_closed_form() {
    // α/ω² on [a, b]: (α/π)(1/a − 1/b)
    let s = NoiseSpectrum::power_law(3.0, 2.0, Some(0.1), Some(50.0)).unwrap();
    assert_relative_eq!(s.variance().unwrap(), 3.0 / PI * (10.0 - 0.02), max_relative = 1e-12);
    // 1/ω on [a, b]: (α/π) ln(b/a)
    let s = NoiseSpectrum::power_law(1.0, 1.0, Some(0.01), Some(100.0)).unwrap();
    assert_relative_eq!(s.variance().unwrap(), (1e4f64).ln() / PI, max_relative = 1e-12);
}

#[test]
fn power_law_without_cutoffs() {
    let s = NoiseSpectrum::power_law(1.0, 2.0, None, None).unwrap();
    assert!(s.variance().is_err());
    let r = s.resolved(2.0);
    let (lo, hi) = r.support().unwrap();
    assert_relative_eq!(lo, 1e-3 / 2.0, max_relative = 1e-12);
    assert!(hi.is_infinite());
    assert!(r.variance().unwrap().is_finite());
    assert!(NoiseSpectrum::power_law(1.0, 1.0, Some(1.0), None).unwrap().variance().is_err());
}

#[test]
fn autocorrelation_matches_direct_cosine_transform() {
    let s = NoiseSpectrum::power_law(2.0, 1.0, Some(0.5), Some(30.0)).unwrap();
    let gp = GaussPanels::new(16);
    for lag in [0.0, 0.05, 0.3, 1.0, 2.5] {
        let direct = gp.integrate(0.5, 30.0, 400, |w| 2.0 / w * (w * lag).cos()) / PI;
        assert_relative_eq!(s.autocorrelation(lag).unwrap(), direct, max_relative = 1e-9, epsilon = 1e-12);
    }
    assert_relative_eq!(s.autocorrelation(0.0).unwrap(), s.variance().unwrap(), max_relative = 1e-10);
}

#[test]
fn tabulated_band_power_is_trapezoid_exact() {
    let s = NoiseSpectrum::tabulated(vec![[0.0, 1.0], [2.0, 3.0], [5.0, 0.0]]).unwrap();
    // trapezoids: 4 + 4.5
    assert_relative_eq!(s.band_power(0.0, 10.0).unwrap(), 8.5, max_relative = 1e-14);
    assert_relative_eq!(s.band_power(1.0, 2.0).unwrap(), 2.5, max_relative = 1e-14);
    assert_eq!(s.eval(6.0), 0.0);
    assert_relative_eq!(s.eval(3.5), 1.5, max_relative = 1e-14);
}

#[test]
fn json_and_csv_sources() {
    let s = NoiseSpectrum::from_json(r#"{"type":"white_cutoff","alpha":1.5,"omega_c":9.0}"#, None).unwrap();
    assert_eq!(s, NoiseSpectrum::white_cutoff(1.5, 9.0).unwrap());
    assert_eq!(NoiseSpectrum::from_json(&s.to_json(), None).unwrap(), s);

    let dir = std::env::temp_dir().join(format!("qfilter-spectra-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("s.csv"), "omega,S\n0.5,2\n1.0,1\n4.0,0.25\n").unwrap();
    let t = NoiseSpectrum::from_json(r#"{"type":"tabulated","csv":"s.csv"}"#, Some(&dir)).unwrap();
    assert_relative_eq!(t.eval(1.0), 1.0);
    std::fs::remove_dir_all(&dir).unwrap();

    for bad in [
        r#"{"type":"white_cutoff","alpha":-1.0,"omega_c":9.0}"#,
        r#"{"type":"power_law","alpha":1.0}"#,
        r#"{"type":"tabulated","points":[[1.0,1.0],[0.5,1.0]]}"#,
        r#"{"type":"lorentzian","alpha":1.0}"#,
    ] {
        assert!(NoiseSpectrum::from_json(bad, None).is_err(), "{bad}");
    }
}

#[test]
fn scaling_is_linear() {
    let s = NoiseSpectrum::power_law(1.0, 2.0, Some(0.1), Some(10.0)).unwrap();
    let t = s.scaled(4.0);
    assert_relative_eq!(t.variance().unwrap(), 4.0 * s.variance().unwrap(), max_relative = 1e-14);
    assert_relative_eq!(t.xi(1.0).unwrap(), 2.0 * s.xi(1.0).unwrap(), max_relative = 1e-14);
}
