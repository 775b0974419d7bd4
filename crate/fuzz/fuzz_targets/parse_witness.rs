#![no_main]

use libfuzzer_sys::fuzz_target;
use r1cs_paradigm::r1cs::serialize_witness;
use r1cs_paradigm::{parse_witness, Prime};

fuzz_target!(|data: &[u8]| {
    for p in [Prime::from_u64(7).unwrap(), Prime::bn254()] {
        if let Ok(w) = parse_witness(data, &p) {
            let again = parse_witness(serialize_witness(&w).as_bytes(), &p).expect("serialized witness parses");
            assert_eq!(again, w);
        }
    }
});
