#![no_main]

use libfuzzer_sys::fuzz_target;
use weightsteg::embed::Manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(manifest) = Manifest::from_json(text) {
        let json = manifest.to_json();
        let reparsed = Manifest::from_json(&json).expect("canonical manifest reparses");
        assert_eq!(reparsed, manifest);
        assert_eq!(reparsed.to_json(), json);
    }
});
