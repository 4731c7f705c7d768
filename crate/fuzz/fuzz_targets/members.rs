#![no_main]

use cloudcompact::io::read_members;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_members(data);
});
