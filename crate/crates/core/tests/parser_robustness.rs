//! The JSON entry points reject malformed input with errors, never panics.

use proptest::prelude::*;
use reebkit::cli::{parse_orbit_spec, parse_run_spec};
use reebkit::czindex::cz_index;
use reebkit::models::ModelSpec;
use reebkit::sp2core::SymplecticPath;

const SEEDS: [&str; 8] = [
    r#"{"samples":[[0,1,0,0,1],[0.5,1.05,0,0,0.9523809523809523],[1,1.1025,0,0,0.9070294784580499]]}"#,
    r#"{"samples":[[0,1,0,0,1],[1,2,0,0,2]]}"#,
    r#"{"name":"sl2","params":{"rate":0.4}}"#,
    r#"{"name":"ellipsoid(1, 1.5)"}"#,
    r#"{"model":"sl2","seed":"axis","frame":"splitting","iterate":3}"#,
    r#"{"model":{"name":"su2"},"seed":[0,0,0],"period_guess":12.5}"#,
    r#"{"command":"curvature","input":{"name":"sl2"},"overrides":{"angles":16}}"#,
    r#"{"input":{"axioms":{}},"overrides":{"trials":20}}"#,
];

fn exercise(s: &str) {
    if let Ok(p) = SymplecticPath::from_json(s) {
        if p.len() <= 256 {
            let _ = cz_index(&p);
        }
    }
    if let Ok(m) = ModelSpec::from_json(s) {
        let _ = m.build();
    }
    if let Ok(o) = parse_orbit_spec(s) {
        let _ = o.resolve();
    }
    let _ = parse_run_spec(s);
}

#[test]
fn seeds_parse_where_expected() {
    assert!(SymplecticPath::from_json(SEEDS[0]).is_ok());
    assert!(SymplecticPath::from_json(SEEDS[1]).is_err());
    assert!(ModelSpec::from_json(SEEDS[2]).unwrap().build().is_ok());
    assert!(parse_orbit_spec(SEEDS[4]).unwrap().resolve().is_ok());
    assert!(parse_run_spec(SEEDS[6]).is_ok());
    for s in SEEDS {
        exercise(s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mutated_seeds_do_not_panic(k in 0usize..SEEDS.len(), at in any::<prop::sample::Index>(), cut in 0usize..8, junk in "[-0-9.,:{}\\[\\]\"a-z eE]{0,12}") {
        let seed = SEEDS[k];
        let mut i = at.index(seed.len() + 1);
        while !seed.is_char_boundary(i) {
            i -= 1;
        }
        let end = (i + cut).min(seed.len());
        let end = (end..=seed.len()).find(|&j| seed.is_char_boundary(j)).unwrap();
        let text = format!("{}{}{}", &seed[..i], junk, &seed[end..]);
        exercise(&text);
    }

    #[test]
    fn arbitrary_text_does_not_panic(s in "\\PC{0,64}") {
        exercise(&s);
    }
}
