#![no_main]

use fluencelab::tensor::MeasurementTensor;
use libfuzzer_sys::fuzz_target;

// Input is the metadata JSON, a NUL byte, then the f32 payload.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else {
        return;
    };
    let Ok(t) = MeasurementTensor::decode(&data[..split], &data[split + 1..]) else {
        return;
    };
    assert!(t.values.data().iter().all(|v| v.is_finite()));
    let meta = serde_json::to_vec(&t.meta()).unwrap();
    let back = MeasurementTensor::decode(&meta, &t.payload()).expect("re-encoded tensor decodes");
    assert_eq!(back.values.dims(), t.values.dims());
    assert_eq!(back.wavelengths_nm, t.wavelengths_nm);
    assert_eq!(back.control_index, t.control_index);
});
