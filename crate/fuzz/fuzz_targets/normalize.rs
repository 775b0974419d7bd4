#![no_main]

use libfuzzer_sys::fuzz_target;
use r1cs_paradigm::canon::normalize;
use r1cs_paradigm::r1cs::validate_paradigm;
use r1cs_paradigm::{parse_r1cs, serialize_r1cs};

fuzz_target!(|data: &[u8]| {
    let Ok(sys) = parse_r1cs(data) else { return };
    if sys.num_vars > 64 || sys.constraints.len() > 32 {
        return;
    }
    // Inconsistent linear parts are reported, never panicked on.
    let Ok(n) = normalize(&sys) else { return };
    assert!(validate_paradigm(&n.r1cs).is_valid());
    let twice = normalize(&n.r1cs).expect("canonical output normalizes");
    assert_eq!(serialize_r1cs(&twice.r1cs), serialize_r1cs(&n.r1cs));
});
