#![no_main]

use libfuzzer_sys::fuzz_target;
use stein_shrink::report::PrialReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = PrialReport::from_csv(text) {
        let rendered = report.to_csv();
        let reparsed = PrialReport::from_csv(&rendered).expect("rendered report must parse");
        assert_eq!(reparsed, report);
        // The markdown renderer must not panic on anything parseable.
        let _ = report.to_markdown();
    }
});
