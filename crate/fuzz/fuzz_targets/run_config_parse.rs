#![no_main]

use fluencelab::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = RunConfig::parse(text) else {
        return;
    };
    if let Ok(grid) = cfg.wavelength_grid() {
        let _ = cfg.medium(&grid);
    }
    let _ = cfg.probe();
    let _ = cfg.search();
});
