#![no_main]

use libfuzzer_sys::fuzz_target;
use weightsteg::container::ModelContainer;

fuzz_target!(|data: &[u8]| {
    // Parsing must never panic. When it accepts, the canonical write must
    // reparse to the same tensors and data and stay byte-stable. file_size
    // is allowed to differ for accepted non-canonical headers.
    if let Ok(container) = ModelContainer::parse(data) {
        let bytes = container.to_bytes();
        let reparsed = ModelContainer::parse(&bytes).expect("canonical bytes reparse");
        assert_eq!(reparsed.tensors(), container.tensors());
        assert_eq!(reparsed.data(), container.data());
        assert_eq!(reparsed.to_bytes(), bytes);
    }
});
