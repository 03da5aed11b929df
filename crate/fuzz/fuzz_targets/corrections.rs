#![no_main]

use libfuzzer_sys::fuzz_target;
use num_complex::Complex64;
use scfde_blind::blind::{self, Correction};
use scfde_blind::frame::FrameConfig;

// Arbitrary time-domain estimates through every scale correction.
fuzz_target!(|data: &[u8]| {
    let samples: Vec<Complex64> = data
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes(b[..4].try_into().unwrap());
            let im = f32::from_le_bytes(b[4..].try_into().unwrap());
            Complex64::new(re.into(), im.into())
        })
        .collect();
    let Ok(cfg) = FrameConfig::new(samples.len(), 2, 16) else {
        return;
    };
    for mode in [Correction::Pilot, Correction::PilotQq, Correction::CentroidAdjust] {
        if let Ok(t) = blind::correct(&samples, &cfg, mode) {
            assert_eq!(t.corrected.len(), samples.len());
        }
    }
});
