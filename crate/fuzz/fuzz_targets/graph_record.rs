#![no_main]

use libfuzzer_sys::fuzz_target;
use qaoa_mps::graph::parse_graph_jsonl;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_graph_jsonl(text) {
        for r in records {
            let g = r.to_graph().expect("parsed records are valid graphs");
            let again = parse_graph_jsonl(&r.to_json_line()).expect("written records parse");
            assert_eq!(again[0].to_graph().expect("valid"), g);
        }
    }
});
