#![no_main]
use libfuzzer_sys::fuzz_target;
use truvar::tv::{minimal_envelope, total_variation, truncated_variation};
use truvar::SampledPath;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(path) = SampledPath::parse_csv(text) else { return };
    // Anything that parses must round-trip and yield a finite TV^c.
    let back = SampledPath::parse_csv(&path.to_csv_string()).expect("written CSV parses");
    assert_eq!(back.values(), path.values());
    let total = total_variation(&path);
    if total.is_finite() {
        let v = truncated_variation(&path, 1.0).unwrap().value;
        assert!(v <= total * (1.0 + 1e-9) + 1e-9);
        let _ = minimal_envelope(&path, 1.0).unwrap();
    }
});
