#![no_main]

use libfuzzer_sys::fuzz_target;
use qaoa_mps::optimize::parse_run_jsonl;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_run_jsonl(text) {
        for r in records {
            if r.is_ok() {
                assert_eq!(r.gammas.len(), r.p);
                let _ = r.angles();
            }
            let _ = parse_run_jsonl(&r.to_json_line());
        }
    }
});
