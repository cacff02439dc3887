//! Built-in experiment configs, one per acceptance run.

pub const PRESETS: [(&str, &str); 8] = [
    ("ou_validate", include_str!("../configs/ou_validate.cfg")),
    ("kolmogorov", include_str!("../configs/kolmogorov.cfg")),
    ("regularity", include_str!("../configs/regularity.cfg")),
    ("girsanov", include_str!("../configs/girsanov.cfg")),
    ("zvonkin", include_str!("../configs/zvonkin.cfg")),
    ("uniqueness_by_noise", include_str!("../configs/uniqueness_by_noise.cfg")),
    ("deterministic_nonuniqueness", include_str!("../configs/deterministic_nonuniqueness.cfg")),
    ("kernel_norms", include_str!("../configs/kernel_norms.cfg")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for (name, text) in PRESETS {
            let cfg = crate::parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(crate::parse_config(&crate::serialize_config(&cfg)).unwrap(), cfg);
        }
    }
}
