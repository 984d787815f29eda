use approx::relative_eq;
use proptest::prelude::*;
use qfilter::fidelity::moment_a1;
use qfilter::filters::f1;
use qfilter::geometry::norm;
use qfilter::quadrature::IntegrationSettings;
use qfilter::{Axis, ControlSegment, ControlSequence, NoiseSpectrum};

fn segment() -> impl Strategy<Value = ControlSegment> {
    (0..4usize, -15.0..15.0f64, 0.05..0.8f64).prop_map(|(a, rate, d)| {
        let axis = [Axis::Identity, Axis::X, Axis::Y, Axis::Z][a];
        ControlSegment::new(axis, if axis == Axis::Identity { 0.0 } else { rate }, d).unwrap()
    })
}

fn sequence() -> impl Strategy<Value = ControlSequence> {
    prop::collection::vec(segment(), 1..6).prop_map(|s| ControlSequence::new(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn control_vector_is_unit(seq in sequence(), u in 0.0..=1.0f64) {
        let v = seq.control_vector(u * seq.tau()).unwrap();
        prop_assert!((norm(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filter_is_nonnegative_sum_of_parts(seq in sequence(), w in 1e-3..1e3f64) {
        let f = f1(&seq, w).unwrap();
        prop_assert!(f.components.iter().all(|c| *c >= 0.0));
        prop_assert!(relative_eq!(f.total, f.components.iter().sum::<f64>(), max_relative = 1e-14));
        // |y₁| ≤ ω τ since s₁ is a unit vector
        prop_assert!(f.total <= (w * seq.tau()).powi(2) * (1.0 + 1e-12));
    }

    #[test]
    fn filter_is_invariant_under_time_rescaling(seq in sequence(), w in 1e-2..1e2f64, c in 0.1..10.0f64) {
        let scaled = seq.time_scaled(c).unwrap();
        let a = f1(&seq, w).unwrap().total;
        let b = f1(&scaled, w / c).unwrap().total;
        prop_assert!(relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-14));
    }

    #[test]
    fn first_order_moments_respect_the_unit_vector_bound(seq in sequence(), wc in 1.0..200.0f64) {
        let spec = NoiseSpectrum::white_cutoff(1.0, wc).unwrap();
        let xi = spec.xi(seq.tau()).unwrap();
        let m = moment_a1(&seq, &spec, &IntegrationSettings::default()).unwrap();
        for i in 0..3 {
            prop_assert!(m.matrix[i][i] >= 0.0);
            for j in 0..3 {
                prop_assert!(m.matrix[i][j].abs() <= 1.05 * xi * xi);
                prop_assert_eq!(m.matrix[i][j], m.matrix[j][i]);
            }
        }
    }
}
