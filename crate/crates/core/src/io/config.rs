//! Flat `key=value` tracker configuration. Blank lines and `#` comments are
//! ignored; keys mirror [`TrackerConfig`] field names.

use std::fs;
use std::path::Path;

use crate::association::{FusionMode, SplitMode, TrackerConfig};
use crate::error::{Error, Result};

fn value<T: std::str::FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value `{raw}` for {key}"),
    })
}

/// Starts from defaults, applies each assignment, then validates.
pub fn parse_config(text: &str) -> Result<TrackerConfig> {
    let mut cfg = TrackerConfig::default();
    let mut split_mode: Option<String> = None;
    let mut split_threshold: Option<f64> = None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, val)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: n,
                message: format!("expected key=value, got `{line}`"),
            });
        };
        let (key, val) = (key.trim(), val.trim());
        match key {
            "gate_epsilon" => cfg.gate_epsilon = value(key, val, n)?,
            "new_track_threshold" => cfg.new_track_threshold = value(key, val, n)?,
            "match_cost_cap" => cfg.match_cost_cap = value(key, val, n)?,
            "det_floor" => cfg.det_floor = value(key, val, n)?,
            "lost_ttl" => cfg.lost_ttl = value(key, val, n)?,
            "bank_capacity" => cfg.bank_capacity = value(key, val, n)?,
            "fusion_mode" => cfg.fusion_mode = value::<FusionMode>(key, val, n)?,
            "alpha" => cfg.alpha = value(key, val, n)?,
            "stage2_enabled" => cfg.stage2_enabled = value(key, val, n)?,
            "stage2_appearance" => cfg.stage2_appearance = value(key, val, n)?,
            "split_mode" => split_mode = Some(val.to_string()),
            "split_threshold" => split_threshold = Some(value(key, val, n)?),
            "position_std_factor" => cfg.motion.position_std_factor = value(key, val, n)?,
            "velocity_std_factor" => cfg.motion.velocity_std_factor = value(key, val, n)?,
            other => {
                return Err(Error::Parse {
                    line: n,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    cfg.split_mode = match (split_mode.as_deref(), split_threshold) {
        (None | Some("adaptive-mean"), None) => SplitMode::AdaptiveMean,
        (Some("fixed"), Some(t)) => SplitMode::Fixed(t),
        (Some("fixed"), None) => return Err(Error::Config("split_mode=fixed needs split_threshold".into())),
        (None | Some("adaptive-mean"), Some(_)) => {
            return Err(Error::Config("split_threshold requires split_mode=fixed".into()))
        }
        (Some(other), _) => return Err(Error::Config(format!("unknown split_mode `{other}`"))),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<TrackerConfig> {
    parse_config(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn config_to_string(cfg: &TrackerConfig) -> String {
    let mut out = format!(
        "gate_epsilon={}\nnew_track_threshold={}\nmatch_cost_cap={}\ndet_floor={}\nlost_ttl={}\n\
         bank_capacity={}\nfusion_mode={}\nalpha={}\nstage2_enabled={}\nstage2_appearance={}\n",
        cfg.gate_epsilon,
        cfg.new_track_threshold,
        cfg.match_cost_cap,
        cfg.det_floor,
        cfg.lost_ttl,
        cfg.bank_capacity,
        cfg.fusion_mode,
        cfg.alpha,
        cfg.stage2_enabled,
        cfg.stage2_appearance
    );
    match cfg.split_mode {
        SplitMode::AdaptiveMean => out.push_str("split_mode=adaptive-mean\n"),
        SplitMode::Fixed(t) => out.push_str(&format!("split_mode=fixed\nsplit_threshold={t}\n")),
    }
    out.push_str(&format!(
        "position_std_factor={}\nvelocity_std_factor={}\n",
        cfg.motion.position_std_factor, cfg.motion.velocity_std_factor
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse_config("# nothing\n\n").unwrap(), TrackerConfig::default());
    }

    #[test]
    fn round_trip() {
        let cfg = TrackerConfig {
            fusion_mode: FusionMode::Weighted,
            stage2_enabled: false,
            stage2_appearance: true,
            split_mode: SplitMode::Fixed(0.55),
            lost_ttl: 12,
            ..Default::default()
        };
        assert_eq!(parse_config(&config_to_string(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_config("alpha=2\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("\nbogus=1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config("lost_ttl=x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_config("fusion_mode=magic\n").is_err());
        assert!(parse_config("split_mode=fixed\n").is_err());
        assert!(parse_config("no equals sign\n").is_err());
    }
}
