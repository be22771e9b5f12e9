#![no_main]

use fluencelab::io::ReferenceSpectrum;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spectrum) = ReferenceSpectrum::parse(text) else {
        return;
    };
    assert_eq!(spectrum.wavelengths_nm.len(), spectrum.alpha.len());
    let lo = spectrum.wavelengths_nm[0];
    let hi = spectrum.wavelengths_nm[spectrum.wavelengths_nm.len() - 1];
    if let Ok(v) = spectrum.resample(&[lo, (lo + hi) / 2.0, hi]) {
        assert!(v.iter().all(|a| a.is_finite()));
    }
});
