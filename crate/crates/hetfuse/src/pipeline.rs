//! Pipeline names accepted in scenario files and on the command line.

use std::fmt;
use std::str::FromStr;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    /// Local PHD filter of one sensor, `local:i`.
    Local(usize),
    /// Local MB filter of one sensor, `local-mb:i`.
    LocalMb(usize),
    WaaPhd,
    Hmphd,
    WaaMb,
    Hmmb,
}

impl Pipeline {
    pub fn uses_phd(&self) -> bool {
        matches!(self, Self::Local(_) | Self::WaaPhd | Self::Hmphd)
    }

    pub fn uses_mb(&self) -> bool {
        !self.uses_phd()
    }

    pub fn is_fused(&self) -> bool {
        !matches!(self, Self::Local(_) | Self::LocalMb(_))
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Local(i) => write!(f, "local:{i}"),
            Self::LocalMb(i) => write!(f, "local-mb:{i}"),
            Self::WaaPhd => f.write_str("waa-phd"),
            Self::Hmphd => f.write_str("hmphd"),
            Self::WaaMb => f.write_str("waa-mb"),
            Self::Hmmb => f.write_str("hmmb"),
        }
    }
}

impl FromStr for Pipeline {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || HarnessError::Config(format!("unknown pipeline '{s}'"));
        let sensor = |idx: &str| idx.parse::<usize>().map_err(|_| unknown());
        match s.trim() {
            "waa-phd" => Ok(Self::WaaPhd),
            "hmphd" => Ok(Self::Hmphd),
            "waa-mb" => Ok(Self::WaaMb),
            "hmmb" => Ok(Self::Hmmb),
            t => {
                if let Some(i) = t.strip_prefix("local-mb:") {
                    sensor(i).map(Self::LocalMb)
                } else if let Some(i) = t.strip_prefix("local:") {
                    sensor(i).map(Self::Local)
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

/// Parses a comma-separated list such as `local:0,waa-phd,hmphd`.
pub fn parse_list(list: &str) -> Result<Vec<String>, HarnessError> {
    let names: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    for n in &names {
        n.parse::<Pipeline>()?;
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for p in [
            Pipeline::Local(3),
            Pipeline::LocalMb(0),
            Pipeline::WaaPhd,
            Pipeline::Hmphd,
            Pipeline::WaaMb,
            Pipeline::Hmmb,
        ] {
            assert_eq!(p.to_string().parse::<Pipeline>().unwrap(), p);
        }
    }

    #[test]
    fn rejects_unknown() {
        let e = "hmphd2".parse::<Pipeline>().unwrap_err();
        assert!(e.to_string().contains("hmphd2"));
        assert!("local:x".parse::<Pipeline>().is_err());
        assert_eq!(e.exit_code(), 2);
    }
}
