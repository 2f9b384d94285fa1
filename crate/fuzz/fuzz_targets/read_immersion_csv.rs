#![no_main]

use std::sync::Arc;

use libfuzzer_sys::fuzz_target;
use mcflab_core::ambient::AmbientChart;
use mcflab_core::io::{parse_immersion_csv, write_immersion_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(table) = parse_immersion_csv(text) else {
        return;
    };
    let chart = match table.dim {
        2 => AmbientChart::flat(2, 1e6),
        3 => AmbientChart::warped3d(mcflab_core::ambient::WarpProfile::CoshCosh, 1e3),
        _ => return,
    };
    if let Ok(imm) = table.clone().into_immersion(Arc::new(chart)) {
        let again = parse_immersion_csv(&write_immersion_csv(&imm)).expect("written files parse");
        assert_eq!(again.points.len(), table.points.len());
    }
});
