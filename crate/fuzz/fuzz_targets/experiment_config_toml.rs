#![no_main]
use libfuzzer_sys::fuzz_target;
use truvar::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
        let text = cfg.to_toml_string();
        let again = ExperimentConfig::from_toml_str(&text).expect("written config parses");
        assert_eq!(again.to_toml_string(), text);
        let _ = cfg.resolved().validate();
    }
});
