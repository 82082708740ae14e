#![no_main]
use libfuzzer_sys::fuzz_target;
use truvar::pathsim::ProcessSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ProcessSpec::from_toml_str(text) {
        let text = spec.to_toml_string();
        let again = ProcessSpec::from_toml_str(&text).expect("written spec parses");
        assert_eq!(again.to_toml_string(), text);
        let _ = spec.validate();
    }
});
