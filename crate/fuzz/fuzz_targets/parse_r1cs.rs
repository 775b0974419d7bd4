#![no_main]

use libfuzzer_sys::fuzz_target;
use r1cs_paradigm::{parse_r1cs, serialize_r1cs};

fuzz_target!(|data: &[u8]| {
    if let Ok(sys) = parse_r1cs(data) {
        // Whatever parses must survive a serialization round trip.
        let text = serialize_r1cs(&sys);
        let again = parse_r1cs(text.as_bytes()).expect("serialized output parses");
        assert_eq!(again, sys);
    }
});
