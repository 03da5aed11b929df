#![no_main]

use libfuzzer_sys::fuzz_target;
use scfde_blind::sim::report;

fuzz_target!(|data: &[u8]| {
    let Ok(points) = report::read_ber_csv(data) else {
        return;
    };
    let mut out = Vec::new();
    report::write_ber_csv(&mut out, &[], &points).expect("accepted rows serialize");
    let again = report::read_ber_csv(out.as_slice()).expect("written table re-reads");
    assert_eq!(again.len(), points.len());
});
