#![no_main]

use bunched_fuzz::lang::{parse_ty, print_ty};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(ty) = parse_ty(src) {
        assert_eq!(parse_ty(&print_ty(&ty)).as_ref(), Ok(&ty));
    }
});
