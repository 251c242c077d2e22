#![no_main]

use libfuzzer_sys::fuzz_target;
use toda_bruhat::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = RunConfig::from_toml_str(text) {
        // validation must reject, not panic; skip configs that would build
        // large groups
        if config.algebra.rank <= 4 {
            let _ = config.validate();
        }
    }
    let _ = RunConfig::from_json_str(text);
});
