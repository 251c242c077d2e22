#![no_main]

use libfuzzer_sys::fuzz_target;
use toda_bruhat::config::parse_matrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_matrix(text) {
        assert!(m.is_square() && m.nrows() >= 1);
        assert!(m.iter().all(|x| x.is_finite()));
    }
});
