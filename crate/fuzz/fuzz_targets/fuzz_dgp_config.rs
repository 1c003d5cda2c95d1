//! Every generator config the parser accepts has passed validation, so its
//! dump must reparse to the identical parameter set (floats print in
//! shortest round-trip form and are finite once validated).

#![no_main]

use libfuzzer_sys::fuzz_target;
use panelmed::synth::DgpParams;

fuzz_target!(|text: &str| {
    let Ok(params) = DgpParams::from_config_str(text) else {
        return;
    };
    let dumped = params.to_config_string();
    let again = DgpParams::from_config_str(&dumped).expect("dumped config always reparses");
    assert_eq!(params, again);
});
