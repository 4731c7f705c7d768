#![no_main]

use cloudcompact::io::read_raster_labels;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(labels) = read_raster_labels(data) {
        assert_eq!(labels.len() * 4, data.len());
    }
});
