#![no_main]

use libfuzzer_sys::fuzz_target;
use qaoa_mps::mps::{from_checkpoint_json, to_checkpoint_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(state) = from_checkpoint_json(text) {
        let back = from_checkpoint_json(&to_checkpoint_json(&state)).expect("written checkpoints load");
        assert_eq!(back.bond_dims(), state.bond_dims());
        let _ = state.norm_squared();
    }
});
