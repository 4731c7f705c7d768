#![no_main]

use cloudcompact::io::{bounding_partition, read_lattice_entries};
use cloudcompact::field::LatticeField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((dim, entries)) = read_lattice_entries(data) {
        if let Ok(part) = bounding_partition(1.0, dim, entries.iter().map(|e| e.0)) {
            let _ = LatticeField::from_entries(&part, &entries);
        }
    }
});
