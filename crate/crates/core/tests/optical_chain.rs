use std::f64::consts::PI;

use twinslit_core::biphoton::{MomentumMask, RealMap2D};
use twinslit_core::grid::{Domain, Field1D, GridSpec};
use twinslit_core::optical_chain::*;
use twinslit_core::pump_modes::PumpMode;
use twinslit_core::{Complex64, Error, WaveVector};

fn plane_wave(g: GridSpec) -> Field1D {
    Field1D::new(g, Domain::Position, vec![Complex64::new(1.0, 0.0); g.n]).unwrap()
}

#[test]
fn uniform_field_passes_only_the_openings() {
    let g = GridSpec::new(1024, 1.6).unwrap();
    let slit = DoubleSlitSpec::default();
    let out = apply_double_slit_1d(&plane_wave(g), &slit).unwrap();
    for (k, v) in out.data.iter().enumerate() {
        let y = g.y(k);
        let inside = (y.abs() - 0.5 * slit.separation_um).abs() <= 0.5 * slit.width_um;
        assert_eq!(v.norm() > 0.0, inside, "y = {y}");
    }
    let extent = g.n as f64 * g.dy();
    let fraction = out.norm_sqr() / plane_wave(g).norm_sqr();
    assert!((fraction - 2.0 * slit.width_um / extent).abs() <= 2.0 * 2.0 * g.dy() / extent);
}

#[test]
fn double_slit_far_field_matches_closed_form_sum() {
    let g = GridSpec::new(4096, 8.0).unwrap();
    let slit = DoubleSlitSpec::default();
    let far = to_far_field_1d(&apply_double_slit_1d(&plane_wave(g), &slit).unwrap()).unwrap();
    let parseval = far.norm_sqr() / apply_double_slit_1d(&plane_wave(g), &slit).unwrap().norm_sqr();
    assert!((parseval - 1.0).abs() < 1e-12);
    // Each opening is a run of equally spaced samples: a geometric series.
    let runs: Vec<(f64, usize)> = {
        let mut runs = Vec::new();
        let mut k = 0;
        while k < g.n {
            if slit.opening(g.y(k)).is_some() {
                let start = k;
                while k < g.n && slit.opening(g.y(k)).is_some() {
                    k += 1;
                }
                runs.push((g.y(start), k - start));
            } else {
                k += 1;
            }
        }
        runs
    };
    assert_eq!(runs.len(), 2);
    let dy = g.dy();
    let peak = far.data.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    for j in (0..g.n).step_by(7) {
        let q = g.qy(j);
        let mut s = Complex64::new(0.0, 0.0);
        for &(y0, m) in &runs {
            let r = Complex64::from_polar(1.0, -q * dy);
            let series = if (r - 1.0).norm() < 1e-14 {
                Complex64::new(m as f64, 0.0)
            } else {
                (Complex64::new(1.0, 0.0) - r.powu(m as u32)) / (Complex64::new(1.0, 0.0) - r)
            };
            s += Complex64::from_polar(1.0, -q * y0) * series;
        }
        let want = s.norm_sqr() * dy * dy / (2.0 * PI);
        assert!((far.data[j].norm_sqr() - want).abs() < 1e-10 * peak, "q = {q}");
    }
    // Continuous two-slit pattern sinc²(qa/2) cos²(qd/2) near the axis.
    let (a, d) = (slit.width_um, slit.separation_um);
    let center = g.n / 2;
    let i0 = far.data[center].norm_sqr();
    for j in center - 40..center + 40 {
        let q = g.qy(j);
        let x = 0.5 * q * a;
        let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
        let want = sinc * sinc * (0.5 * q * d).cos().powi(2);
        assert!((far.data[j].norm_sqr() / i0 - want).abs() < 0.02, "q = {q}");
    }
}

#[test]
fn under_resolved_slit_is_a_config_error() {
    let g = GridSpec::new(1024, 0.1).unwrap();
    let e = DoubleSlitSpec::default().check_resolution(&g).unwrap_err();
    assert!(e.is_config(), "{e}");
}

#[test]
fn masks_are_binary_and_complementary() {
    let slit =
        ResolvedAperture { shape: ApertureShape::VerticalSlit { width: 0.3 }, center: WaveVector::new(0.1, 0.0) };
    let inverse =
        ResolvedAperture { shape: ApertureShape::InverseSlit { width: 0.3 }, center: WaveVector::new(0.1, 0.0) };
    let circle = ResolvedAperture { shape: ApertureShape::Circle { diameter: 0.4 }, center: WaveVector::new(0.0, 0.9) };
    for i in 0..200 {
        let q = WaveVector::new(-1.0 + 0.01 * i as f64, 0.8 + 0.001 * i as f64);
        for m in [&slit, &inverse, &circle] {
            let t = m.transmission(q);
            assert_eq!(t * t, t);
        }
        assert_eq!(slit.transmission(q) + inverse.transmission(q), 1.0);
        assert_eq!(circle.transmission(q), circle.point_reflected().transmission(-q));
    }
    assert_eq!(circle.transmission(WaveVector::new(0.0, 1.09)), 1.0);
    assert_eq!(circle.transmission(WaveVector::new(0.0, 1.11)), 0.0);
}

#[test]
fn relative_units_need_a_measured_cone() {
    let spec = ApertureSpec::relative(ApertureShape::Circle { diameter: 0.3 }, (0.0, 1.0));
    assert!(matches!(spec.resolve(None), Err(Error::ConeUnmeasured)));
    let r = spec.resolve(Some(0.95)).unwrap();
    assert!((r.center.qy - 0.95).abs() < 1e-15);
    assert_eq!(r.shape, ApertureShape::Circle { diameter: 0.3 * 0.95 });
    let too_big = ApertureSpec::relative(ApertureShape::VerticalSlit { width: 1.6 }, (0.0, 0.0));
    assert!(too_big.validate().is_err());
    assert!(ApertureSpec::none().resolve(None).is_ok());
}

#[test]
fn cone_diameter_of_a_synthetic_annulus() {
    let g = GridSpec::new(128, 1.0).unwrap().with_center(WaveVector::new(0.05, 0.3));
    let r0 = 0.4;
    let n = g.n;
    let mut data = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let r = ((g.qx(ix) - 0.05).powi(2) + (g.qy(iy) - 0.3).powi(2)).sqrt();
            data.push((-((r - r0) / 0.03).powi(2)).exp());
        }
    }
    let d = measure_cone_diameter(&RealMap2D { grid: g, data }).unwrap();
    assert!((d - 2.0 * r0).abs() < g.dq(), "{d}");
}

#[test]
fn featureless_map_has_no_cone() {
    let g = GridSpec::new(64, 1.0).unwrap();
    assert!(measure_cone_diameter(&RealMap2D { grid: g, data: vec![1.0; 64 * 64] }).is_err());
}

#[test]
fn matched_magnification_puts_humps_on_slits() {
    let slit = DoubleSlitSpec::default();
    let pump = PumpMode::tem01(75.0).unwrap();
    let m = matched_magnification(&slit, &pump);
    assert!((m - 2.2156).abs() < 1e-4);
    let crystal = slit.scaled(m);
    assert!((0.5 * crystal.separation_um - 75.0 / 2f64.sqrt()).abs() < 1e-12);
}
