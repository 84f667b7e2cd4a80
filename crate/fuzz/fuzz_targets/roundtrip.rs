#![no_main]

use bunched_fuzz::lang::{parse_program, print_program};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(prog) = parse_program(src) else { return };
    let printed = print_program(&prog);
    let again = parse_program(&printed).unwrap_or_else(|e| panic!("reprint does not parse: {e}\n{printed}"));
    assert_eq!(again, prog);
});
