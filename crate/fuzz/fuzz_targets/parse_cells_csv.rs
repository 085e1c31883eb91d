#![no_main]

use libfuzzer_sys::fuzz_target;
use weightsteg::evaluate::{parse_cells_csv, quality_table, EvalParams};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cells) = parse_cells_csv(text) {
        // anything the parser accepts must be scoreable without panicking
        let _ = quality_table(&cells, &EvalParams::default());
    }
});
