#![no_main]

use bunched_fuzz::checker::check_program;
use bunched_fuzz::lang::parse_program;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(prog) = parse_program(src) {
        let report = check_program(&prog);
        let _ = report.to_json();
    }
});
