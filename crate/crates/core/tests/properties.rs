use proptest::prelude::*;

use pulseflow::area::{AreaField, AreaSamples};
use pulseflow::fourier::TrigSeries;
use pulseflow::hemodynamics::{reynolds, womersley, FluidProperties};
use pulseflow::io::{read_area_csv, write_area_csv};
use pulseflow::riccati::{periodic_solutions, IntegratorSettings, RiccatiCoefficients};

fn area_grid() -> impl Strategy<Value = AreaSamples> {
    (2usize..6, 8usize..16, 0.4f64..1.5).prop_flat_map(|(stations, phases, period)| {
        prop::collection::vec(prop::collection::vec(5.0f64..8.0, stations), phases).prop_map(
            move |values| AreaSamples {
                period,
                stations: (0..stations).map(|j| 0.7 * j as f64 + 0.1).collect(),
                values,
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn area_csv_round_trips(samples in area_grid()) {
        let text = write_area_csv(&samples);
        prop_assert_eq!(read_area_csv(&text, samples.period).unwrap(), samples);
    }

    #[test]
    fn trig_fit_reproduces_band_limited_samples(
        a0 in 1.0f64..10.0,
        a in prop::collection::vec(-1.0f64..1.0, 3),
        b in prop::collection::vec(-1.0f64..1.0, 3),
        period in 0.3f64..2.0,
    ) {
        let truth = TrigSeries { period, a0, a, b };
        let samples: Vec<f64> = (0..12).map(|k| truth.eval(period * k as f64 / 12.0)).collect();
        let fit = TrigSeries::fit_uniform(period, &samples, 3).unwrap();
        prop_assert!((fit.a0 - truth.a0).abs() < 1e-12);
        for m in 0..3 {
            prop_assert!((fit.a[m] - truth.a[m]).abs() < 1e-12);
            prop_assert!((fit.b[m] - truth.b[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_is_additive_and_odd(samples in area_grid(), t in 0.0f64..1.0, w in 0.05f64..0.95) {
        let field = AreaField::fit(&samples, 3).unwrap();
        let (lo, hi) = (field.x_min(), field.x_max());
        let mid = lo + w * (hi - lo);
        let t = t * samples.period;
        let whole = field.phi(t, lo, hi).unwrap();
        let parts = field.phi(t, lo, mid).unwrap() + field.phi(t, mid, hi).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * (1.0 + whole.abs()));
        prop_assert_eq!(field.phi_signed(t, hi, lo).unwrap(), -whole);
    }

    #[test]
    fn reynolds_is_linear_in_flow(q in 0.0f64..500.0, area in 0.1f64..20.0, k in 0.1f64..10.0) {
        let p = FluidProperties::default();
        let base = reynolds(q, area, &p).unwrap();
        prop_assert!((reynolds(k * q, area, &p).unwrap() - k * base).abs() <= 1e-9 * (1.0 + k * base));
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn womersley_scales_with_radius(area in 0.1f64..20.0, k in 0.2f64..5.0) {
        let p = FluidProperties::default();
        let ratio = womersley(k * k * area, &p).unwrap() / womersley(area, &p).unwrap();
        prop_assert!((ratio - k).abs() < 1e-12);
    }

    /// `A < 0 < C`: exactly one positive and one negative constant solution.
    #[test]
    fn constant_riccati_roots(a in 0.2f64..2.0, b in -1.0f64..1.0, c in 0.2f64..2.0) {
        let coeffs = RiccatiCoefficients::constant(1.0, -a, b, c, 0.0);
        let set = periodic_solutions(&coeffs, 0.0, &IntegratorSettings::default()).unwrap();
        prop_assert_eq!(set.solutions.len(), 2);
        let disc = (b * b + 4.0 * a * c).sqrt();
        let mut roots = [(b - disc) / (2.0 * a), (b + disc) / (2.0 * a)];
        roots.sort_by(f64::total_cmp);
        let mut means: Vec<f64> = set.solutions.iter().map(|s| s.mean).collect();
        means.sort_by(f64::total_cmp);
        for (m, r) in means.iter().zip(roots) {
            prop_assert!((m - r).abs() < 1e-7 * (1.0 + r.abs()));
        }
        for s in &set.solutions {
            prop_assert!(s.periodicity_gap() <= IntegratorSettings::default().periodicity_tolerance(s.max_abs()));
        }
    }
}
