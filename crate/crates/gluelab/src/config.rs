//! Run configuration: a small TOML key-value file.
//!
//! ```toml
//! family = "std2d"      # std2d | general_n | counterexample | custom
//! L = 2
//! window = ["0,0", "2,2"]
//! gen_range = [0, 2]
//! seed = 7
//!
//! [[rule]]              # custom families only
//! x_pos = 1
//! tail = ["0/3"]        # residue/period per tail axis, or "any"
//! shift = [1]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::gluing::{AxisPattern, BaseGenerator};
use crate::lattice::{BoxQ, ExactPoint, SystemParams};
use crate::{LabError, Q};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub x_pos: i64,
    #[serde(default)]
    pub x_extent: bool,
    pub tail: Vec<String>,
    pub shift: Vec<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub family: String,
    #[serde(rename = "L")]
    pub l: i64,
    pub n: usize,
    pub m: Option<i64>,
    pub m_v: Option<i64>,
    pub window: Option<[String; 2]>,
    pub gen_range: Option<[i32; 2]>,
    pub seed: u64,
    pub pairs: usize,
    pub samples: usize,
    pub budget: usize,
    pub centers: usize,
    pub eps0: f64,
    pub out_dir: String,
    #[serde(rename = "rule")]
    pub rules: Vec<RuleSpec>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            family: "std2d".into(),
            l: 2,
            n: 2,
            m: None,
            m_v: None,
            window: None,
            gen_range: None,
            seed: 7,
            pairs: 20,
            samples: 64,
            budget: 200,
            centers: 30,
            eps0: 0.05,
            out_dir: "out".into(),
            rules: Vec::new(),
        }
    }
}

fn cfg_err(s: impl Into<String>) -> LabError {
    LabError::Config(s.into())
}

pub fn parse_q(s: &str) -> Result<Q, LabError> {
    s.trim().parse::<Q>().map_err(|_| cfg_err(format!("not a rational: {s:?}")))
}

/// `"x,y,..."` with rational entries.
pub fn parse_point(s: &str) -> Result<ExactPoint, LabError> {
    Ok(ExactPoint::new(s.split(',').map(parse_q).collect::<Result<_, _>>()?))
}

pub fn parse_list(s: &str) -> Result<Vec<Q>, LabError> {
    s.split(',').map(parse_q).collect()
}

fn parse_pattern(s: &str) -> Result<AxisPattern, LabError> {
    if s.trim() == "any" {
        return Ok(AxisPattern::Any);
    }
    let (r, p) = s.split_once('/').ok_or_else(|| cfg_err(format!("tail pattern {s:?}")))?;
    let num = |t: &str| t.trim().parse::<i64>().map_err(|_| cfg_err(format!("tail pattern {s:?}")));
    Ok(AxisPattern::Periodic { residue: num(r)?, period: num(p)? })
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, LabError> {
        toml::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn params(&self) -> Result<SystemParams, LabError> {
        let mut p = match self.family.as_str() {
            "std2d" => SystemParams::std2d(self.l),
            "general_n" => SystemParams::general_n(self.n, self.m_v.unwrap_or(3 * self.l)),
            "counterexample" => SystemParams::counterexample(),
            "custom" => {
                let m = self.m.ok_or_else(|| cfg_err("custom family needs m"))?;
                let mv = self.m_v.ok_or_else(|| cfg_err("custom family needs m_v"))?;
                let rules = self
                    .rules
                    .iter()
                    .map(|r| {
                        Ok(BaseGenerator {
                            x_pos: r.x_pos,
                            x_extent: r.x_extent,
                            tail: r.tail.iter().map(|t| parse_pattern(t)).collect::<Result<_, LabError>>()?,
                            shift: r.shift.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, LabError>>()?;
                SystemParams::custom(self.n, m, mv, rules)?
            }
            f => return Err(cfg_err(format!("unknown family {f:?}"))),
        };
        if let Some([lo, hi]) = &self.window {
            p = p.with_window(BoxQ::new(parse_point(lo)?.coords, parse_point(hi)?.coords));
        }
        if let Some([a, b]) = self.gen_range {
            p = p.with_gen_range(a, b);
        }
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    #[test]
    fn defaults_give_std2d() {
        let c = Config::parse("").unwrap();
        let p = c.params().unwrap();
        assert_eq!((p.m, p.mv), (4, 6));
    }

    #[test]
    fn custom_rules_roundtrip() {
        let c = Config::parse(
            r#"
family = "custom"
m = 4
m_v = 6
window = ["0,0", "1,1/2"]
[[rule]]
x_pos = 2
tail = ["1/3"]
shift = [1]
"#,
        )
        .unwrap();
        let p = c.params().unwrap();
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.rules[0].tail[0], AxisPattern::Periodic { residue: 1, period: 3 });
        assert_eq!(p.window.hi[1], q(1, 2));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(Config::parse("famly = \"std2d\"").is_err());
        assert!(parse_point("1/2,x").is_err());
    }
}
