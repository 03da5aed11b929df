#![no_main]

use libfuzzer_sys::fuzz_target;
use num_complex::Complex64;
use scfde_blind::constellation::Constellation;

fuzz_target!(|data: &[u8]| {
    let Some((&sel, rest)) = data.split_first() else {
        return;
    };
    let c = Constellation::new([4, 16, 64, 256][sel as usize % 4]).unwrap();
    let symbols: Vec<Complex64> = rest
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().unwrap());
            let im = f64::from_le_bytes(b[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    let d = c.demodulate(&symbols);
    assert_eq!(d.indices.len(), symbols.len());
    assert_eq!(d.bits.len(), symbols.len() * c.bits_per_symbol());
    assert!(d.indices.iter().all(|&i| i < c.order()));
    assert_eq!(c.modulate(&d.bits).unwrap(), d.points);
});
