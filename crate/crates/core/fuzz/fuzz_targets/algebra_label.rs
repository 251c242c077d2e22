#![no_main]

use libfuzzer_sys::fuzz_target;
use toda_bruhat::rootsys::{AlgebraLabel, RootSystem};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(label) = text.parse::<AlgebraLabel>() {
        assert_eq!(label.to_string().parse::<AlgebraLabel>().unwrap(), label);
        if label.rank <= 8 {
            let _ = RootSystem::build(label.cartan_type, label.rank);
        }
    }
});
