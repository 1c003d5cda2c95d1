//! Any byte stream the CSV decoder accepts must survive an emit → reload
//! round trip unchanged; everything else must be a typed error, never a
//! panic. Numeric fields are finite by construction, so derived equality
//! is plain `==`.

#![no_main]

use std::io::Cursor;

use libfuzzer_sys::fuzz_target;
use panelmed::ingest::load_csv_reader;
use panelmed::synth::emit_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(records) = load_csv_reader(Cursor::new(data)) else {
        return;
    };
    let mut bytes = Vec::new();
    emit_csv(&records, &mut bytes).expect("decoded records always emit");
    let again =
        load_csv_reader(Cursor::new(bytes.as_slice())).expect("emitted records always reload");
    assert_eq!(records, again);
});
