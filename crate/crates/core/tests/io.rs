use epkit::generate;
use epkit::io::{System, SystemFile};
use epkit::Error;
use proptest::prelude::*;

fn generated(seed: u64) -> Vec<SystemFile> {
    vec![
        SystemFile::new(System::Polytope(generate::random_polytope(3, 4, 12, &mut generate::rng(seed)))),
        SystemFile::new(System::MultiArea(generate::multi_area(3, 5, 12, 2, seed))),
        SystemFile::new(System::TransmissionDistribution(generate::td_system(8, 2, 5, seed))),
    ]
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for (k, file) in generated(5).into_iter().enumerate() {
        let path = dir.path().join(format!("{k}.json"));
        file.write(&path).unwrap();
        assert_eq!(SystemFile::read(&path).unwrap(), file);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), file.to_json());
    }
}

#[test]
fn read_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"kind\": \"polytope\", \"schema_version\": 1, \"system\": {\"num_x\": -1}}").unwrap();
    match SystemFile::read(&path) {
        Err(Error::Schema { path: p, line: 1, .. }) => assert!(p.contains("bad.json") && p.ends_with("system.num_x"), "{p}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(SystemFile::read(&dir.path().join("missing.json")), Err(Error::Io(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_files_round_trip(seed in 0u64..10_000) {
        for file in generated(seed) {
            let text = file.to_json();
            prop_assert_eq!(SystemFile::from_json(&text).unwrap(), file);
        }
    }

    #[test]
    fn damaged_files_fail_cleanly(seed in 0u64..100, cut in 0.0f64..1.0, at in 0.0f64..1.0, byte in any::<u8>()) {
        for file in generated(seed) {
            let text = file.to_json();
            let truncated = &text[..(cut * text.len() as f64) as usize];
            prop_assert!(SystemFile::from_json(truncated).is_err());
            let mut bytes = text.into_bytes();
            let i = (at * bytes.len() as f64) as usize % bytes.len();
            bytes[i] = byte;
            if let Ok(s) = String::from_utf8(bytes) {
                // a flipped byte may still parse; it must never panic
                let _ = SystemFile::from_json(&s);
            }
        }
    }
}
