#![no_main]

use libfuzzer_sys::fuzz_target;
use weightsteg::trigger::{binarize, parse_vector_line, trigger_condition, TriggerSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // first line is treated as a candidate target, the rest as vectors
    let mut lines = text.lines();
    let spec = lines
        .next()
        .and_then(|l| TriggerSpec::new(l.trim(), 0.0, 5).ok());
    for (lineno, line) in lines.enumerate() {
        let Ok(vector) = parse_vector_line(line, lineno + 2) else {
            continue;
        };
        let _ = binarize(&vector, 0.0);
        if let Some(spec) = &spec {
            let _ = trigger_condition(&vector, spec);
        }
    }
});
