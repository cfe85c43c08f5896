//! JSON channel description.

use serde::{Deserialize, Serialize};

use channelfj::{Channel, ChannelSpec, CurveSpec, Polynomial, SectionMap, TwistOffset, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub curve: CurveConfig,
    pub section: SectionConfig,
    #[serde(default)]
    pub twist: TwistConfig,
    #[serde(rename = "bulk_D", default = "unit")]
    pub bulk_d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveConfig {
    Helix {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
    Circle {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
    Line {
        fallback_normal: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SectionConfig {
    Ellipse { r1: f64, r2: f64 },
    Rectangle { d1: f64, d2: f64 },
    Cardioid { r: f64 },
}

/// A constant or polynomial coefficients `[c0, c1, ...]` in `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolyConfig {
    Constant(f64),
    Coefficients(Vec<f64>),
}

impl Default for PolyConfig {
    fn default() -> Self {
        PolyConfig::Constant(0.0)
    }
}

impl PolyConfig {
    fn polynomial(&self) -> Polynomial<f64> {
        match self {
            PolyConfig::Constant(c) => Polynomial::constant(*c),
            PolyConfig::Coefficients(c) => Polynomial::new(c.clone()),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            PolyConfig::Constant(c) => vec![*c],
            PolyConfig::Coefficients(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistConfig {
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub p: PolyConfig,
    #[serde(default)]
    pub q: PolyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    pub n: usize,
}

/// Invalid or unreadable configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ChannelConfig {
    /// Parses JSON, reporting the offending path and position on failure.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            ConfigError(format!("at `{}` (line {}, column {}): {}", e.path(), inner.line(), inner.column(), inner))
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    /// Compact JSON for CSV headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |what: &str| Err(ConfigError(what.to_string()));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !(self.bulk_d > 0.0) || !self.bulk_d.is_finite() {
            return bad("bulk_D must be a positive number");
        }
        match &self.curve {
            CurveConfig::Helix { a, b, .. } if !(*a > 0.0) || !b.is_finite() => return bad("curve.a must be positive"),
            CurveConfig::Circle { radius, .. } if !(*radius > 0.0) => return bad("curve.radius must be positive"),
            _ => {}
        }
        let dims: Vec<f64> = match self.section {
            SectionConfig::Ellipse { r1, r2 } => vec![r1, r2],
            SectionConfig::Rectangle { d1, d2 } => vec![d1, d2],
            SectionConfig::Cardioid { r } => vec![r],
        };
        if dims.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return bad("section sizes must be positive");
        }
        let t = &self.twist;
        if !t.omega.is_finite() || !finite(&t.p.values()) || !finite(&t.q.values()) {
            return bad("twist entries must be finite");
        }
        if let Some(g) = self.grid {
            if g.n < 2 {
                return bad("grid.n must be at least 2");
            }
        }
        Ok(())
    }

    pub fn curve(&self) -> channelfj::Result<CurveSpec<f64>> {
        let (curve, domain) = match &self.curve {
            CurveConfig::Helix { a, b, domain } => (CurveSpec::helix(*a, *b)?, domain),
            CurveConfig::Circle { radius, domain } => (CurveSpec::circle(*radius)?, domain),
            CurveConfig::Line { fallback_normal: n, domain } => (CurveSpec::line(Some(Vec3::new(n[0], n[1], n[2]))), domain),
        };
        match domain {
            Some([a, b]) => curve.with_domain(*a, *b),
            None => Ok(curve),
        }
    }

    pub fn section(&self) -> channelfj::Result<SectionMap<f64>> {
        match self.section {
            SectionConfig::Ellipse { r1, r2 } => SectionMap::ellipse(r1, r2),
            SectionConfig::Rectangle { d1, d2 } => SectionMap::rectangle(d1, d2),
            SectionConfig::Cardioid { r } => SectionMap::cardioid(r),
        }
    }

    pub fn transport(&self) -> TwistOffset<f64> {
        TwistOffset::new(self.twist.omega, self.twist.p.polynomial(), self.twist.q.polynomial())
    }

    pub fn channel(&self) -> channelfj::Result<Channel> {
        ChannelSpec::new(self.curve()?, self.section()?, self.transport(), self.bulk_d)
    }

    /// Grid points `(u_min, u_max, n)`, defaulting to the channel domain and 512 points.
    pub fn grid(&self, channel: &Channel) -> (f64, f64, usize) {
        let (a, b) = channel.domain();
        match self.grid {
            Some(g) => (g.u_min.unwrap_or(a), g.u_max.unwrap_or(b), g.n),
            None => (a, b, 512),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3: &str = r#"{
        "curve": {"kind": "helix", "a": 0.25, "b": 0.16666666666666666},
        "section": {"kind": "ellipse", "r1": 0.16666666666666666, "r2": 0.1},
        "twist": {"omega": 4.0, "p": 0.0, "q": [0.0]},
        "bulk_D": 1.0,
        "grid": {"u_min": 0.0, "u_max": 1.5707963267948966, "n": 512}
    }"#;

    #[test]
    fn parses_and_builds() {
        let c = ChannelConfig::parse(FIG3).unwrap();
        let ch = c.channel().unwrap();
        assert_eq!(ch.bulk_d(), 1.0);
        assert_eq!(c.grid(&ch), (0.0, std::f64::consts::FRAC_PI_2, 512));
    }

    #[test]
    fn json_round_trip() {
        let c = ChannelConfig::parse(FIG3).unwrap();
        assert_eq!(ChannelConfig::parse(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = FIG3.replace("\"r2\": 0.1", "\"r2\": 0.1, \"r3\": 2");
        let e = ChannelConfig::parse(&text).unwrap_err();
        assert!(e.0.contains("section"), "{}", e.0);
        let text = FIG3.replace("\"omega\"", "\"omgea\"");
        assert!(ChannelConfig::parse(&text).is_err());
    }

    #[test]
    fn invalid_values() {
        assert!(ChannelConfig::parse(&FIG3.replace("\"r1\": 0.16666666666666666", "\"r1\": -1")).is_err());
        assert!(ChannelConfig::parse(&FIG3.replace("\"bulk_D\": 1.0", "\"bulk_D\": 0")).is_err());
    }
}
