use twinslit_core::biphoton::*;
use twinslit_core::dispersion::{CrystalSpec, KzMode};
use twinslit_core::grid::GridSpec;
use twinslit_core::optical_chain::{measure_cone_diameter, ApertureShape, ResolvedAperture};
use twinslit_core::pump_modes::PumpMode;
use twinslit_core::{Arm, Complex64, WaveVector};

fn setup() -> (CrystalSpec, PumpMode) {
    (CrystalSpec::default(), PumpMode::tem01(75.0).unwrap())
}

fn circle(diameter: f64, cx: f64, cy: f64) -> ResolvedAperture {
    ResolvedAperture { shape: ApertureShape::Circle { diameter }, center: WaveVector::new(cx, cy) }
}

#[test]
fn line_amplitude_has_unit_norm() {
    let (c, p) = setup();
    let a = build_1d_amplitude(GridSpec::new(256, 1.6).unwrap(), &p, &c, KzMode::Exact).unwrap();
    assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
    let dq = a.grid.dq();
    for arm in [Arm::Signal, Arm::Idler] {
        let total: f64 = a.singles(arm).iter().sum::<f64>() * dq;
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn weight_concentrates_on_the_phase_matching_band() {
    let (c, p) = setup();
    let g = GridSpec::new(512, 1.6).unwrap();
    let a = build_1d_amplitude(g, &p, &c, KzMode::Exact).unwrap();
    let photons = c.photons().unwrap();
    let dq = g.dq();
    let mut inside = 0.0;
    for j in 0..g.n {
        for k in 0..g.n {
            let dk =
                photons.delta_kz(WaveVector::new(0.0, g.qy(j)), WaveVector::new(0.0, g.qy(k)), KzMode::Exact).unwrap();
            if (dk * photons.half_length).abs() <= 2.0 * std::f64::consts::PI {
                inside += a.at(j, k).norm_sqr() * dq * dq;
            }
        }
    }
    // A linear mismatch across the band leaves the sinc² tail outside
    // |x| <= 2π: the fraction inside is 2 Si(4π) / π.
    let si = simpson(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, 4.0 * std::f64::consts::PI, 20_000);
    let expected = 2.0 * si / std::f64::consts::PI;
    assert!((inside - expected).abs() < 0.01, "{inside} vs {expected}");
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn grid_must_contain_the_ring() {
    let (c, p) = setup();
    assert!(build_1d_amplitude(GridSpec::new(64, 0.5).unwrap(), &p, &c, KzMode::Exact).unwrap_err().is_config());
}

#[test]
fn grid_quadrature_matches_dense_brute_force() {
    let (c, p) = setup();
    let g = GridSpec::new(32, 1.2).unwrap();
    let signal = circle(1.4, 0.1, 0.3);
    let idler = signal.point_reflected();
    let map = singles_map_2d(Arm::Signal, &signal, &idler, g, &p, &c, KzMode::Exact, PartnerQuadrature::Grid).unwrap();
    let n = g.n;
    let cell = g.dq() * g.dq();
    let pts: Vec<WaveVector> = (0..n * n).map(|i| WaveVector::new(g.qx(i % n), g.qy(i / n))).collect();
    use twinslit_core::biphoton::MomentumMask;
    let mut worst = 0.0f64;
    let mut oracle = vec![0.0; n * n];
    for (i, &qs) in pts.iter().enumerate() {
        let ms = signal.transmission(qs);
        let mut acc = 0.0;
        for &qi in &pts {
            acc += phi(qs, qi, &p, &c, KzMode::Exact).unwrap().norm_sqr() * idler.transmission(qi);
        }
        oracle[i] = acc * ms * cell;
    }
    let scale = oracle.iter().copied().fold(0.0, f64::max);
    assert!(scale > 0.0);
    for (a, b) in map.data.iter().zip(&oracle) {
        worst = worst.max((a - b).abs() / scale);
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn singles_maps_are_mirror_symmetric_in_x() {
    let (c, p) = setup();
    let g = GridSpec::new(32, 0.6).unwrap().with_center(WaveVector::new(0.0, 0.45));
    // The same-grid rule is not mirror symmetric: an even-N grid holds -Q but not +Q.
    for quadrature in
        [PartnerQuadrature::default(), PartnerQuadrature::PumpAdapted { samples: 17, half_width_waists: 3.0 }]
    {
        let map = singles_map_2d(Arm::Signal, &Open, &Open, g, &p, &c, KzMode::Exact, quadrature).unwrap();
        let n = g.n;
        let scale = map.max();
        for iy in 0..n {
            for ix in 1..n {
                let r = (map.at(ix, iy) - map.at(n - ix, iy)).abs() / scale;
                assert!(r < 1e-10, "{quadrature:?} ({ix}, {iy}): {r}");
            }
        }
    }
}

#[test]
fn point_evaluation_matches_the_map() {
    let (c, p) = setup();
    let g = GridSpec::new(32, 0.6).unwrap().with_center(WaveVector::new(0.0, 0.45));
    let map =
        singles_map_2d(Arm::Signal, &Open, &Open, g, &p, &c, KzMode::Exact, PartnerQuadrature::default()).unwrap();
    let column: Vec<WaveVector> = (0..g.n).map(|iy| WaveVector::new(g.qx(20), g.qy(iy))).collect();
    let points = singles_at(Arm::Signal, &Open, &Open, &column, &p, &c, KzMode::Exact, 33, 4.0).unwrap();
    assert_eq!(points, map.column(20));
}

#[test]
fn measured_cone_agrees_with_the_ring_extent() {
    let (c, p) = setup();
    let (lo, hi) = ring_extent(&c, KzMode::Exact).unwrap();
    let g = GridSpec::new(64, 0.6).unwrap().with_center(WaveVector::new(0.0, 0.5 * (lo + hi)));
    let map =
        singles_map_2d(Arm::Signal, &Open, &Open, g, &p, &c, KzMode::Exact, PartnerQuadrature::default()).unwrap();
    let d = measure_cone_diameter(&map).unwrap();
    assert!((d / (hi - lo) - 1.0).abs() < 0.02, "{d} vs {}", hi - lo);
}

#[test]
fn conditional_amplitude_matches_direct_sum() {
    let (c, p) = setup();
    let g = GridSpec::new(128, 1.6).unwrap();
    let a = build_1d_amplitude(g, &p, &c, KzMode::Exact).unwrap();
    let mask: Vec<f64> = (0..g.n).map(|k| if g.qy(k) < 0.0 { 1.0 } else { 0.0 }).collect();
    let y_i = 37.0;
    let field = conditional_signal_amplitude_1d(y_i, &mask, &a).unwrap();
    let dq = g.dq();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in (0..g.n).step_by(3) {
        let mut want = Complex64::new(0.0, 0.0);
        for k in 0..g.n {
            let v = phi(WaveVector::new(0.0, g.qy(j)), WaveVector::new(0.0, g.qy(k)), &p, &c, KzMode::Exact).unwrap();
            want += v * a.normalization * mask[k] * Complex64::from_polar(dq, g.qy(k) * y_i);
        }
        worst = worst.max((field.data[j] - want).norm());
        scale = scale.max(want.norm());
    }
    assert!(worst <= 1e-12 * scale, "{worst} / {scale}");
}

#[test]
fn two_dimensional_conditional_reduces_to_the_line() {
    let (c, p) = setup();
    let g = GridSpec::new(32, 1.2).unwrap();
    let a = build_1d_amplitude(g, &p, &c, KzMode::Exact).unwrap();
    let line = conditional_signal_amplitude_1d(20.0, &vec![1.0; g.n], &a).unwrap();
    let sheet = conditional_signal_amplitude_2d(20.0, 0.0, &Open, g, &p, &c, KzMode::Exact).unwrap();
    let ix = g.n / 2;
    assert_eq!(g.qx(ix), 0.0);
    for iy in 0..g.n {
        let d = (sheet.at(ix, iy) * a.normalization - line.data[iy]).norm();
        assert!(d < 1e-12, "{iy}: {d}");
    }
}

#[test]
fn idler_position_outside_the_grid_is_rejected() {
    let (c, p) = setup();
    let g = GridSpec::new(32, 1.2).unwrap();
    let a = build_1d_amplitude(g, &p, &c, KzMode::Exact).unwrap();
    assert!(conditional_signal_amplitude_1d(1e4, &vec![1.0; g.n], &a).is_err());
}
