use std::fmt;
use std::str::FromStr;

use crate::{BenchError, BenchResult};

/// Online solution methods. Labels drop the `SI-` prefix of source
/// iteration variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Si,
    Dsa,
    Romig,
    Romsa { window: usize },
    Romsad { window: usize, theta: usize },
    Pgmres,
    PgmresRomig,
}

impl Method {
    pub fn label(self) -> String {
        match self {
            Method::Si => "SI".into(),
            Method::Dsa => "DSA".into(),
            Method::Romig => "ROMIG".into(),
            Method::Romsa { window } => format!("ROMSA-{window}"),
            Method::Romsad { window, theta } => format!("ROMSAD-{window},{theta}"),
            Method::Pgmres => "PGMRES".into(),
            Method::PgmresRomig => "PGMRES-ROMIG".into(),
        }
    }

    /// Name used in reports, e.g. `SI-ROMSAD-3,5`.
    pub fn long_label(self) -> String {
        match self {
            Method::Si | Method::Pgmres | Method::PgmresRomig => self.label(),
            _ => format!("SI-{}", self.label()),
        }
    }

    /// Directory-safe label.
    pub fn dir_name(self) -> String {
        self.label().replace(',', "_")
    }

    pub fn window(self) -> Option<usize> {
        match self {
            Method::Romsa { window } | Method::Romsad { window, .. } => Some(window),
            _ => None,
        }
    }

    pub fn uses_initial_guess(self) -> bool {
        matches!(self, Method::Romig | Method::PgmresRomig)
    }

    /// Needs offline models.
    pub fn is_reduced(self) -> bool {
        self.uses_initial_guess() || self.window().is_some()
    }

    pub fn is_gmres(self) -> bool {
        matches!(self, Method::Pgmres | Method::PgmresRomig)
    }

    /// Parses a comma-separated list. A bare integer after `ROMSAD-w`
    /// is its `theta`, so `DSA,ROMSAD-3,5,PGMRES` has three entries.
    pub fn parse_list(s: &str) -> BenchResult<Vec<Method>> {
        let mut tokens: Vec<String> = Vec::new();
        for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let pending = tokens.last().is_some_and(|p| {
                let p = p.trim_start_matches("SI-");
                p.starts_with("ROMSAD-") && !p.contains(',')
            });
            if pending && t.chars().all(|c| c.is_ascii_digit()) {
                let last = tokens.last_mut().unwrap();
                last.push(',');
                last.push_str(t);
            } else {
                tokens.push(t.to_string());
            }
        }
        tokens.iter().map(|t| t.parse()).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = BenchError;
    fn from_str(s: &str) -> BenchResult<Self> {
        let bad = || BenchError::UnknownMethod(s.to_string());
        let t = s.trim();
        let t = t.strip_prefix("SI-").unwrap_or(t);
        let num = |x: &str| x.parse::<usize>().ok().filter(|v| *v > 0).ok_or_else(bad);
        Ok(match t {
            "SI" => Method::Si,
            "DSA" => Method::Dsa,
            "ROMIG" => Method::Romig,
            "PGMRES" => Method::Pgmres,
            "PGMRES-ROMIG" => Method::PgmresRomig,
            _ => {
                if let Some(rest) = t.strip_prefix("ROMSAD-") {
                    let (w, th) = rest.split_once([',', '_']).ok_or_else(bad)?;
                    Method::Romsad { window: num(w)?, theta: num(th)? }
                } else if let Some(rest) = t.strip_prefix("ROMSA-") {
                    Method::Romsa { window: num(rest)? }
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_roundtrip() {
        let all = [
            Method::Si,
            Method::Dsa,
            Method::Romig,
            Method::Romsa { window: 3 },
            Method::Romsad { window: 3, theta: 5 },
            Method::Pgmres,
            Method::PgmresRomig,
        ];
        for m in all {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
            assert_eq!(m.long_label().parse::<Method>().unwrap(), m);
            assert_eq!(m.dir_name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::Romsad { window: 1, theta: 3 }.long_label(), "SI-ROMSAD-1,3");
    }

    #[test]
    fn list_parsing_groups_theta() {
        let l = Method::parse_list("DSA, ROMSA-3,ROMSAD-3,5,PGMRES-ROMIG").unwrap();
        assert_eq!(
            l,
            vec![Method::Dsa, Method::Romsa { window: 3 }, Method::Romsad { window: 3, theta: 5 }, Method::PgmresRomig]
        );
        assert!(Method::parse_list("ROMSAD-3").is_err());
        assert!(Method::parse_list("ROMSA-0").is_err());
        assert!(Method::parse_list("FOO").is_err());
    }
}
