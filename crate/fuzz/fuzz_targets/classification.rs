#![no_main]

use cloudcompact::bad_boxes::components_from_mask;
use cloudcompact::io::{bounding_partition, read_classification};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((dim, rows)) = read_classification(data) {
        if let Ok(part) = bounding_partition(1.0, dim, rows.iter().map(|r| r.id)) {
            let mut bad = vec![false; part.len()];
            for r in &rows {
                bad[part.index_of(&r.id).unwrap()] = r.is_bad;
            }
            let graph = components_from_mask(&bad, &part).unwrap();
            assert_eq!(graph.component_of.len(), part.len());
        }
    }
});
