#![no_main]

use cloudcompact::Region;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = Region::parse(text) {
        assert!((0..r.dim()).all(|k| r.lo()[k] < r.hi()[k]));
        assert_eq!(Region::parse(&format!("{},{}", join(r.lo()), join(r.hi()))).unwrap(), r);
    }
});

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}
