#![no_main]

use libfuzzer_sys::fuzz_target;
use scfde_blind::sim::{config, SimulationConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(pairs) = config::parse_config_text(text) else {
        return;
    };
    if let Ok(cfg) = SimulationConfig::resolve(&pairs, &[]) {
        // A resolved config must be internally consistent.
        cfg.validate().expect("resolve returned an invalid config");
        for p in &cfg.seq_lens {
            cfg.frame_config(*p).expect("validated frame config");
        }
    }
});
