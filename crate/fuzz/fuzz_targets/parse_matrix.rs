#![no_main]

use libfuzzer_sys::fuzz_target;
use stein_shrink::matrix_io::{parse_matrix, write_matrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(matrix) = parse_matrix(text) {
        // Anything accepted must survive a write/parse cycle bit for bit.
        let rendered = write_matrix(&matrix.view());
        let reparsed = parse_matrix(&rendered).expect("rendered matrix must parse");
        assert_eq!(reparsed.shape(), matrix.shape());
        for (a, b) in reparsed.iter().zip(matrix.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
});
