#![no_main]

use libfuzzer_sys::fuzz_target;
use wgfb_cli::parse_config;

fuzz_target!(|data: &[u8]| {
    let _ = parse_config(data);
});
