use moment_sos::christoffel::cf_eval;
use moment_sos::hierarchy::{lower_bound, upper_bound, LowerBoundOptions};
use moment_sos::moments::{catalog_moments, empirical_moments};
use moment_sos::{MeasureDescriptor, MomentSequence, Polynomial, SemialgebraicSet};

#[test]
fn two_minimizers_on_the_square() {
    // x1·x2 on [-1, 1]² is minimized at (1, -1) and (-1, 1)
    let f = Polynomial::from_terms(2, vec![(vec![1, 1], 1.0)]).unwrap();
    let set = SemialgebraicSet::unit_box(2).unwrap();
    let r = lower_bound(&f, &set, 2, &LowerBoundOptions::default()).unwrap();
    assert!((r.rho_t + 1.0).abs() <= 1e-6, "{}", r.rho_t);
    assert!(r.flat && r.extraction_verified);
    let mut atoms = r.minimizers.clone();
    atoms.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    assert_eq!(atoms.len(), 2);
    for (atom, expect) in atoms.iter().zip([[-1.0, 1.0], [1.0, -1.0]]) {
        assert!((atom[0] - expect[0]).abs() <= 1e-5 && (atom[1] - expect[1]).abs() <= 1e-5, "{atom:?}");
    }
    let mu = catalog_moments(&MeasureDescriptor::UniformBox { bounds: vec![[-1.0, 1.0]; 2] }, 8).unwrap();
    let tau = upper_bound(&f, &mu, 2).unwrap().value;
    assert!(r.rho_t <= tau);
}

#[test]
fn descriptors_and_sequences_survive_json() {
    let desc = MeasureDescriptor::Product {
        factors: vec![
            MeasureDescriptor::Chebyshev1 { a: -1.0, b: 1.0 },
            MeasureDescriptor::Gaussian { dim: 1, variance: 0.5 },
        ],
    };
    let text = serde_json::to_string(&desc).unwrap();
    assert_eq!(serde_json::from_str::<MeasureDescriptor>(&text).unwrap(), desc);
    let defaulted: MeasureDescriptor = serde_json::from_str(r#"{"kind": "uniform_interval", "params": {}}"#).unwrap();
    assert_eq!(defaulted, MeasureDescriptor::UniformInterval { a: -1.0, b: 1.0 });

    let mu = catalog_moments(&desc, 4).unwrap();
    let text = serde_json::to_string(&mu).unwrap();
    let back: MomentSequence = serde_json::from_str(&text).unwrap();
    assert_eq!(back, mu);
    assert_eq!(cf_eval(&back, 2, &[0.1, 0.2]).unwrap(), cf_eval(&mu, 2, &[0.1, 0.2]).unwrap());
}

#[test]
fn cloud_scores_separate_outliers() {
    let mut points = Vec::new();
    for i in 0..20 {
        for j in 0..20 {
            let (x, y) = (-1.0 + 2.0 * i as f64 / 19.0, -1.0 + 2.0 * j as f64 / 19.0);
            if x * x + y * y <= 1.0 {
                points.push(vec![x, y]);
            }
        }
    }
    let mu = empirical_moments(&points, 8).unwrap();
    let inside = cf_eval(&mu, 4, &[0.0, 0.0]).unwrap();
    let outside = cf_eval(&mu, 4, &[2.0, 2.0]).unwrap();
    assert!(outside < 1e-4 * inside);
}
