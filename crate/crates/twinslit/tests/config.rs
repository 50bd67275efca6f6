use proptest::prelude::*;
use twinslit::config::{ScenarioConfig, KEYS, PRESETS};

#[test]
fn defaults_resolve_and_every_key_is_echoed() {
    let text = ScenarioConfig::default().serialize();
    for key in KEYS {
        assert!(text.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key}");
    }
}

#[test]
fn presets_are_selected_in_the_file() {
    for name in PRESETS {
        let c = ScenarioConfig::parse(&format!("scenario.preset = {name}\n")).unwrap();
        assert_eq!(c, ScenarioConfig::preset(name).unwrap());
    }
}

#[test]
fn file_values_override_the_preset_regardless_of_order() {
    let c = ScenarioConfig::parse("chain.aperture_size = 0.2\nscenario.preset = circle-lower\n").unwrap();
    assert_eq!(c.chain.aperture_size, 0.2);
    assert_eq!(c.chain.aperture, ScenarioConfig::preset("circle-lower").unwrap().chain.aperture);
}

#[test]
fn validation_errors_point_at_the_offending_line() {
    let e = ScenarioConfig::parse("grid.n = 1024\n\nscan.y_step_um = -5\n").unwrap_err();
    assert_eq!(e.line, Some(3));
    let e = ScenarioConfig::parse("detection.pixel_cells = 2\n").unwrap_err();
    assert_eq!(e.line, Some(1));
    assert!(e.message.contains("odd"));
}

proptest! {
    #[test]
    fn parse_serialize_is_a_fixed_point(
        preset in proptest::sample::select(PRESETS),
        length in 100.0f64..5000.0,
        waist in 10.0f64..300.0,
        order in 0u32..3,
        log_n in 5u32..12,
        widths in proptest::collection::vec(0.01f64..1.5, 0..4),
        step in 0.1f64..50.0,
    ) {
        let mut c = ScenarioConfig::preset(preset).unwrap();
        c.crystal.length_um = length;
        c.pump.waist_um = waist;
        c.pump.order_x = order;
        c.grid.n = 1 << log_n;
        c.scan.widths = widths;
        c.scan.y_step_um = step;
        let once = ScenarioConfig::parse(&c.serialize()).unwrap();
        prop_assert_eq!(&once, &c);
        prop_assert_eq!(once.serialize(), c.serialize());
    }
}
