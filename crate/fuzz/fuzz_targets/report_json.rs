#![no_main]
use libfuzzer_sys::fuzz_target;
use truvar::harness::ExperimentReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = ExperimentReport::from_json(text) {
        let _ = report.summary();
        for s in report.series() {
            let _ = report.csv(s);
        }
        let _ = ExperimentReport::from_json(&report.to_json()).expect("written report parses");
    }
});
