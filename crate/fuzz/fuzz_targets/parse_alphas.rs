#![no_main]

use libfuzzer_sys::fuzz_target;
use stein_shrink::matrix_io::parse_alphas;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(alphas) = parse_alphas(text) {
        assert!(!alphas.is_empty());
        assert!(alphas.iter().all(|a| a.is_finite() && *a > 0.0));
    }
});
