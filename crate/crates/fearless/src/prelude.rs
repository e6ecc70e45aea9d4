//! The prelude: library source loaded before user code. Prelude
//! declarations are ordinary table entries, not scoped or hidden.

use std::path::Path;

pub const PRELUDE_FILES: &[(&str, &str)] = &[
    ("<prelude>/00_func.fear", include_str!("../prelude/00_func.fear")),
    ("<prelude>/01_bool.fear", include_str!("../prelude/01_bool.fear")),
    ("<prelude>/02_opt.fear", include_str!("../prelude/02_opt.fear")),
    ("<prelude>/03_list.fear", include_str!("../prelude/03_list.fear")),
    ("<prelude>/04_block.fear", include_str!("../prelude/04_block.fear")),
    ("<prelude>/05_let.fear", include_str!("../prelude/05_let.fear")),
    ("<prelude>/06_num.fear", include_str!("../prelude/06_num.fear")),
    ("<prelude>/07_ref.fear", include_str!("../prelude/07_ref.fear")),
    ("<prelude>/08_system.fear", include_str!("../prelude/08_system.fear")),
    ("<prelude>/09_isopod.fear", include_str!("../prelude/09_isopod.fear")),
];

/// Returns the prelude sources in dependency order. `no_prelude` yields
/// nothing; `dir` substitutes a directory of `.fear` files (sorted by name).
pub fn load_prelude(
    no_prelude: bool,
    dir: Option<&Path>,
) -> std::io::Result<Vec<(String, String)>> {
    if no_prelude {
        return Ok(Vec::new());
    }
    match dir {
        None => Ok(PRELUDE_FILES
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect()),
        Some(dir) => {
            let mut entries: Vec<_> = std::fs::read_dir(dir)?
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("fear"))
                .collect();
            entries.sort();
            entries
                .into_iter()
                .map(|p| Ok((p.display().to_string(), std::fs::read_to_string(&p)?)))
                .collect()
        }
    }
}
