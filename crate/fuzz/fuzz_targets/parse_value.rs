#![no_main]

use bunched_fuzz::runtime::parse_value;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_value(src) {
        // printing then parsing gives back an equal value
        let again = parse_value(&v.to_string()).expect("printed value parses");
        assert_eq!(again, v);
    }
});
