//! Ready-made configurations, one per figure panel.

use crate::config::{parse_config, ConfigError, ExperimentConfig};

pub const PRESET_NAMES: [&str; 8] = [
    "fig1-topleft",
    "fig1-topright",
    "fig1-bottomleft",
    "fig1-bottomright",
    "fig2",
    "fig3-ksd",
    "fig4-funnel",
    "fig5-rotated",
];

/// Shared settings of the four Gaussian panels: every curve gets the same
/// budget of directional derivatives and the error is that of the running
/// average, as in a single long run.
const GAUSSIAN_COMMON: &str = r#"experiment = "gaussian"
steps = 20000
thin = 100
ensemble = 100
err_mode = "running"
equal_budget = true
step_reference = "max_block"
h = 0.01
"#;

const DIAGONAL: &str = r#"{ type = "diagonal", values = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10] }"#;

const LOGISTIC_COMMON: &str = r#"experiment = "logistic"
steps = 100
ensemble = 100
rank = 1
step_reference = "max_block"

[[curves]]
label = "identity_h0.01"
h = 0.01

[[curves]]
label = "identity_h0.1"
h = 0.1

[[curves]]
label = "avg_hessian_h0.5"
h = 0.5
schedule = { kind = "avg_hessian" }
"#;

const FUNNEL_CURVES: &str = r#"
[[curves]]
label = "identity"

[[curves]]
label = "rmsprop"
schedule = { kind = "rmsprop" }

[[curves]]
label = "adagrad"
schedule = { kind = "adagrad" }
"#;

/// TOML text of a preset.
pub fn preset_text(name: &str) -> Option<String> {
    let text = match name {
        "fig1-topleft" => format!(
            "{GAUSSIAN_COMMON}\n[[curves]]\nsampler = \"lmc\"\n\n[[curves]]\nsampler = \"rclmc\"\n\n\
             [[curves]]\nrank = 5\n\n[[curves]]\nrank = 10\n"
        ),
        "fig1-topright" => format!(
            "{GAUSSIAN_COMMON}\n[[curves]]\nsampler = \"lmc\"\n\n[[curves]]\nsampler = \"rclmc\"\n\n\
             [[curves]]\nsampler = \"plmc\"\nschedule = {{ kind = \"fixed\", matrix = {DIAGONAL} }}\n\n\
             [[curves]]\nrank = 5\nschedule = {{ kind = \"fixed\", matrix = {DIAGONAL} }}\n\n\
             [[curves]]\nrank = 10\nschedule = {{ kind = \"fixed\", matrix = {DIAGONAL} }}\n"
        ),
        "fig1-bottomleft" => format!(
            "{GAUSSIAN_COMMON}\n[[curves]]\nsampler = \"lmc\"\n\n[[curves]]\nsampler = \"rclmc\"\n\n\
             [[curves]]\nrank = 5\nh = 0.5\nschedule = {{ kind = \"fixed\", matrix = {{ type = \"covariance\" }} }}\n\n\
             [[curves]]\nrank = 10\nh = 0.5\nschedule = {{ kind = \"fixed\", matrix = {{ type = \"covariance\" }} }}\n"
        ),
        "fig1-bottomright" => format!(
            "{GAUSSIAN_COMMON}\n[[curves]]\nsampler = \"lmc\"\n\n[[curves]]\nsampler = \"rclmc\"\n\n\
             [[curves]]\nrank = 5\n\n[[curves]]\nrank = 10\n\n\
             [[curves]]\nrank = 5\nschedule = {{ kind = \"fixed\", matrix = {{ type = \"rotated_identity\" }} }}\n\n\
             [[curves]]\nrank = 10\nschedule = {{ kind = \"fixed\", matrix = {{ type = \"rotated_identity\" }} }}\n"
        ),
        "fig2" => format!("repetitions = 1\n{LOGISTIC_COMMON}"),
        "fig3-ksd" => format!("repetitions = 20\n{LOGISTIC_COMMON}"),
        "fig4-funnel" => format!("{}{FUNNEL_CURVES}", funnel_common(false)),
        "fig5-rotated" => format!("{}{FUNNEL_CURVES}", funnel_common(true)),
        _ => return None,
    };
    Some(text)
}

fn funnel_common(rotate: bool) -> String {
    format!(
        "experiment = \"funnel\"\nrotate = {rotate}\nsteps = 4000\nthin = 10\nensemble = 50\nrepetitions = 20\nrank = 1\nh = 0.05\n"
    )
}

/// Parsed configuration of a preset.
pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let text = preset_text(name).ok_or_else(|| ConfigError::Invalid {
        path: "preset".to_string(),
        message: format!("unknown preset `{name}`; expected one of {}", PRESET_NAMES.join(", ")),
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ErrMode, ExperimentKind};

    #[test]
    fn every_preset_parses() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!cfg.resolved_curves().is_empty());
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn preset_contents() {
        let tl = preset("fig1-topleft").unwrap();
        let labels: Vec<String> = tl.resolved_curves().into_iter().map(|c| c.label).collect();
        assert_eq!(labels, ["lmc", "rclmc", "slmc_r5", "slmc_r10"]);
        assert_eq!(tl.err_mode, ErrMode::Running);
        assert_eq!(tl.steps(), 20_000);
        let br = preset("fig1-bottomright").unwrap();
        assert_eq!(br.resolved_curves().len(), 6);
        let bl = preset("fig1-bottomleft").unwrap();
        let hs: Vec<f64> = bl.resolved_curves().iter().map(|c| c.h).collect();
        assert_eq!(hs, [0.01, 0.01, 0.5, 0.5]);
        let ksd = preset("fig3-ksd").unwrap();
        assert_eq!(ksd.repetitions(), 20);
        assert_eq!(ksd.experiment, ExperimentKind::Logistic);
        assert!(preset("fig5-rotated").unwrap().rotate);
        assert!(!preset("fig4-funnel").unwrap().rotate);
    }
}
