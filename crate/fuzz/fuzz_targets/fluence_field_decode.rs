#![no_main]

use fluencelab::montecarlo::FluenceField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(field) = FluenceField::from_bytes(data) else {
        return;
    };
    assert_eq!(field.values.len(), field.grid.len());
    let back = FluenceField::from_bytes(&field.to_bytes()).expect("re-encoded field decodes");
    assert_eq!(back.grid, field.grid);
    assert_eq!(back.values, field.values);
});
