use std::path::{Path, PathBuf};

use phaseless_ofdm::eval::{EstimatorKind, EstimatorSettings, SweepConfig};
use phaseless_ofdm::phy::{Modulation, OfdmConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmSection {
    pub n: usize,
    pub p: usize,
    pub l: usize,
    pub s: usize,
    #[serde(default = "one")]
    pub pilot_power: f64,
}

fn one() -> f64 {
    1.0
}

/// Everything a run needs. Loaded from a TOML file, then overridden by
/// environment variables and flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub noise_grid_db: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub modulations: Vec<Modulation>,
    /// Arm used by `estimate`.
    pub estimator: EstimatorKind,
    /// Noise variance used by `estimate`.
    pub sigma2: f64,
    pub out_dir: Option<PathBuf>,
    pub ofdm: OfdmSection,
    pub settings: EstimatorSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 28,
            noise_grid_db: vec![-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0],
            estimators: vec![
                EstimatorKind::Ls,
                EstimatorKind::Bpdn,
                EstimatorKind::PhaselessBpdn,
                EstimatorKind::Ideal,
            ],
            modulations: vec![Modulation::Qpsk, Modulation::Qam16],
            estimator: EstimatorKind::PhaselessBpdn,
            sigma2: 0.0,
            out_dir: None,
            ofdm: OfdmSection {
                n: 2048,
                p: 256,
                l: 20,
                s: 3,
                pilot_power: 1.0,
            },
            settings: EstimatorSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::Config(format!("{}: {}", origin.display(), e.to_string().trim_end())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn ofdm(&self, modulation: Modulation) -> OfdmConfig<f64> {
        OfdmConfig {
            n: self.ofdm.n,
            p: self.ofdm.p,
            l: self.ofdm.l,
            s: self.ofdm.s,
            modulation,
            pilot_power: self.ofdm.pilot_power,
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            ofdm: self.ofdm(self.modulations.first().copied().unwrap_or(Modulation::Qpsk)),
            modulations: self.modulations.clone(),
            noise_grid_db: self.noise_grid_db.clone(),
            trials: self.trials,
            estimators: self.estimators.clone(),
            seed: self.seed,
            settings: self.settings.clone(),
        }
    }
}

/// Parses `0dB`, `-30,-20,-10` or `-30:5:0` (start, step, stop inclusive).
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("--grid: cannot parse `{text}`"));
    let num = |s: &str| -> Result<f64, CliError> {
        let s = s.trim();
        let s = s.strip_suffix("dB").or_else(|| s.strip_suffix("db")).unwrap_or(s);
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad())
            .and_then(|v| if v.is_finite() { Ok(v) } else { Err(bad()) })
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (a, d, b) = (num(start)?, num(step)?, num(stop)?);
            if d == 0.0 || (b - a) / d < 0.0 {
                return Err(bad());
            }
            let count = ((b - a) / d + 1e-9).floor() as usize + 1;
            (0..count).map(|i| a + d * i as f64).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0dB").unwrap(), vec![0.0]);
        assert_eq!(parse_grid("-30,-20, -10").unwrap(), vec![-30.0, -20.0, -10.0]);
        assert_eq!(parse_grid("-30:10:0").unwrap(), vec![-30.0, -20.0, -10.0, 0.0]);
        assert_eq!(parse_grid("-30dB:15dB:0dB").unwrap(), vec![-30.0, -15.0, 0.0]);
        assert!(parse_grid("x").is_err());
        assert!(parse_grid("0:-5:10").is_err());
        assert!(parse_grid("inf").is_err());
    }

    #[test]
    fn unknown_field_is_named_with_line() {
        let err = RunConfig::parse(
            "seed = 1\n[ofdm]\nn = 64\np = 16\nl = 2\ns = 1\nbogus = 3\n",
            Path::new("x.cfg"),
        )
        .unwrap_err();
        let CliError::Config(msg) = err else { panic!() };
        assert!(
            msg.contains("x.cfg") && msg.contains("bogus") && msg.contains("line 7"),
            "{msg}"
        );
    }

    #[test]
    fn bundled_fig2_config_parses() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/fig2.cfg");
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!((cfg.ofdm.n, cfg.ofdm.p, cfg.ofdm.l, cfg.ofdm.s), (2048, 256, 20, 3));
        assert_eq!(cfg.settings.alpha, 0.01);
        assert_eq!(cfg.modulations, vec![Modulation::Qpsk, Modulation::Qam16]);
        cfg.sweep().validate().unwrap();
    }
}
