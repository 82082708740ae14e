#![no_main]
use libfuzzer_sys::fuzz_target;
use truvar::expr::Expr;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = Expr::parse(text) {
        let v = e.eval(0.5, -1.25);
        let again = Expr::parse(&e.to_string()).expect("printed expression parses");
        let w = again.eval(0.5, -1.25);
        assert!(v.to_bits() == w.to_bits() || (v.is_nan() && w.is_nan()));
    }
});
