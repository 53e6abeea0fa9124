use crng_harness::spec::{validate_spec, validate_spec_with, Overrides};

const EXAMPLE2: &str = include_str!("../../../configs/example2.json");

#[test]
fn example_two_parses() {
    let spec = validate_spec(EXAMPLE2).unwrap();
    assert_eq!(spec.model.access.num_messages(), 3);
    assert_eq!(spec.model.sorted.len(), 3);
    assert_eq!(spec.run.rate_points.len(), 2);
    assert_eq!(spec.code.unwrap().shape.n, 6);
}

#[test]
fn unknown_encoder_in_arc_is_one_error() {
    let text = EXAMPLE2.replace(r#"["2", "2"], ["12", "1"]"#, r#"["2", "9"], ["12", "1"]"#);
    assert_ne!(text, EXAMPLE2);
    let errs = validate_spec(&text).unwrap_err();
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert!(errs[0].message.contains("arc (2,9)") && errs[0].message.contains("unknown encoder '9'"), "{}", errs[0]);
    assert_eq!(errs[0].path, "access.arcs[1]");
    assert_eq!(errs[0].line, 6);
}

#[test]
fn short_probability_row_names_kernel_and_row() {
    let text = EXAMPLE2.replace("[0.3, 0.7]", "[0.2, 0.7]");
    let errs = validate_spec(&text).unwrap_err();
    assert_eq!(errs.len(), 1, "{errs:?}");
    let e = &errs[0];
    assert!(e.message.contains("kernel 'source group {2}'") && e.message.contains("row 1 sums to 0.9"), "{e}");
    assert_eq!(e.path, "source.groups[2].rows[1]");
    assert_eq!(e.line, 13);
}

#[test]
fn several_problems_reported_together() {
    let text = EXAMPLE2
        .replace(r#""seed": 7"#, r#""seed": -1"#)
        .replace(r#""q": 2"#, r#""q": 4"#)
        .replace(r#""1": ["1", "12"]"#, r#""1": ["1", "13"]"#);
    let errs = validate_spec(&text).unwrap_err();
    let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
    assert!(paths.contains(&"code.q"), "{errs:?}");
    assert!(paths.contains(&"access.demands.1[1]"), "{errs:?}");
    assert!(paths.contains(&"run.seed"), "{errs:?}");
    for e in &errs {
        assert!(e.line > 1, "{e}");
    }
}

#[test]
fn syntax_error_has_a_line() {
    let text = EXAMPLE2.replacen("],", "]", 1);
    let errs = validate_spec(&text).unwrap_err();
    assert_eq!(errs.len(), 1);
    assert!(errs[0].message.starts_with("invalid JSON"));
    assert!(errs[0].line >= 3, "{}", errs[0]);
}

#[test]
fn unknown_fields_are_rejected() {
    let text = EXAMPLE2.replace(r#""trials": 200"#, r#""trails": 200"#);
    let errs = validate_spec(&text).unwrap_err();
    assert_eq!(errs[0].path, "run.trails");
}

#[test]
fn tuple_inputs_must_fit_the_channel() {
    let text = EXAMPLE2.replace(r#""inputs": {"1": "sum-mod", "2": "sum-mod"},"#, "");
    let errs = validate_spec(&text).unwrap_err();
    assert!(errs.iter().all(|e| e.message.contains("sum-mod")), "{errs:?}");
    assert_eq!(errs.len(), 2);
}

#[test]
fn hash_tracks_content_not_layout() {
    let base = validate_spec(EXAMPLE2).unwrap().config_hash;
    let compact: serde_json::Value = serde_json::from_str(EXAMPLE2).unwrap();
    let relaid = validate_spec(&serde_json::to_string(&compact).unwrap()).unwrap().config_hash;
    assert_eq!(base, relaid);
    let renumbered = validate_spec(&EXAMPLE2.replace("[0.9, 0.1]", "[0.90, 1e-1]")).unwrap().config_hash;
    assert_eq!(base, renumbered);
    let changed = validate_spec(&EXAMPLE2.replace("[0.9, 0.1]", "[0.8, 0.2]")).unwrap().config_hash;
    assert_ne!(base, changed);

    let threads = Overrides { threads: Some(9), ..Default::default() };
    let spec = validate_spec_with(EXAMPLE2, &threads).unwrap();
    assert_eq!(spec.run.threads, 9);
    assert_eq!(spec.config_hash, base);
    let seed = Overrides { seed: Some(8), trials: Some(3), ..Default::default() };
    let spec = validate_spec_with(EXAMPLE2, &seed).unwrap();
    assert_eq!((spec.run.seed, spec.run.trials), (8, 3));
    assert_ne!(spec.config_hash, base);
}
