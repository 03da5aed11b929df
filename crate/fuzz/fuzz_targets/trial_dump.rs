#![no_main]

use libfuzzer_sys::fuzz_target;
use scfde_blind::sim::report;

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = report::read_dump(data) else {
        return;
    };
    let mut w = report::DumpWriter::new(Vec::new()).expect("header");
    for r in &rows {
        w.write(r).expect("accepted rows serialize");
    }
    let out = w.finish().expect("flush");
    let again = report::read_dump(out.as_slice()).expect("written dump re-reads");
    assert_eq!(again.len(), rows.len());
});
