#![no_main]

use cloudcompact::io::read_cloud_field;
use cloudcompact::{PointCloud, ProcessParams, Region};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let params = ProcessParams::new(1.0, 0.5, 1, 0).unwrap();
    let points = (0..4).map(|i| vec![i as f64 * 0.25]).collect();
    let cloud = PointCloud::from_points(points, params, Region::unit_cube(1).unwrap()).unwrap();
    if let Ok(field) = read_cloud_field(data, &cloud) {
        assert_eq!(field.len(), cloud.len());
    }
});
