#![no_main]

use libfuzzer_sys::fuzz_target;
use wgfb_mps::checkpoint::decode;

fuzz_target!(|data: &[u8]| {
    let _ = decode(data);
});
