#![no_main]

use cloudcompact::io::{read_cloud, write_cloud, CloudMeta};
use cloudcompact::Region;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let fallback = CloudMeta {
        epsilon: Some(0.1),
        region: Some(Region::centered_cube(2, 4.0).unwrap()),
        ..Default::default()
    };
    if let Ok(cloud) = read_cloud(data, fallback) {
        let mut out = Vec::new();
        write_cloud(&cloud, &mut out).unwrap();
        let again = read_cloud(out.as_slice(), CloudMeta::default()).unwrap();
        assert_eq!(again.coords(), cloud.coords());
    }
});
