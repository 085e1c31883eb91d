#![no_main]

use libfuzzer_sys::fuzz_target;
use weightsteg::mininet::data::Split;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(split) = Split::from_csv(text) {
        // accepted splits are internally consistent and re-encode cleanly
        assert_eq!(split.features.len(), split.len() * split.dim);
        if split.features.iter().all(|v| v.is_finite()) {
            let reparsed = Split::from_csv(&split.to_csv()).expect("canonical CSV reparses");
            assert_eq!(reparsed, split);
        }
    }
});
