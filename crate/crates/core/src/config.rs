//! Problem configuration text (TOML).
//!
//! ```toml
//! [params]
//! N = 1
//! m = 1.0
//! p = 2.0
//! q = 3.0
//! alpha = 0.5
//! L = 16
//! n = 256
//!
//! [potential.Vp]
//! tag = "constant"
//! value = 1.0
//!
//! [potential.Vl]
//! tag = "gaussian-bump"
//! sign = "negative"
//! amplitude = -0.3
//! width = 1.0
//! center = [0.0]
//!
//! [potential.Gamma]
//! tag = "zero"
//! ```
//!
//! Unknown keys, and keys that do not belong to the selected tag, are errors.
//! Top-level sections other than `params` and `potential` are handed back
//! untouched for callers that layer their own settings on top.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{CoreError, Result};
use crate::problem::{
    LocalShape, LocalizedProfile, PeriodicProfile, PotentialSpec, ProblemParams, SignMode,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub params: ProblemParams,
    pub potential: PotentialSpec,
    /// Remaining top-level sections.
    pub extra: Table,
}

fn err(msg: impl Into<String>) -> CoreError {
    CoreError::Config(msg.into())
}

/// Keys are consumed as they are read; whatever remains is rejected.
struct Section<'a> {
    name: &'a str,
    table: Table,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, value: Value) -> Result<Self> {
        match value {
            Value::Table(table) => Ok(Self { name, table }),
            other => Err(err(format!("[{name}] must be a table, got {}", other.type_str()))),
        }
    }

    fn take(&mut self, key: &str) -> Result<Value> {
        self.table
            .remove(key)
            .ok_or_else(|| err(format!("[{}] missing key `{key}`", self.name)))
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key)?;
        as_f64(&v).ok_or_else(|| err(format!("[{}] `{key}` must be a number", self.name)))
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        if self.table.contains_key(key) {
            self.f64(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn usize(&mut self, key: &str) -> Result<usize> {
        match self.take(key)? {
            Value::Integer(i) if i >= 0 => Ok(i as usize),
            _ => Err(err(format!("[{}] `{key}` must be a non-negative integer", self.name))),
        }
    }

    fn string(&mut self, key: &str) -> Result<String> {
        match self.take(key)? {
            Value::String(s) => Ok(s),
            _ => Err(err(format!("[{}] `{key}` must be a string", self.name))),
        }
    }

    fn vector(&mut self, key: &str) -> Result<Vec<f64>> {
        match self.take(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| as_f64(v).ok_or_else(|| err(format!("[{}] `{key}` must hold numbers", self.name))))
                .collect(),
            v => as_f64(&v)
                .map(|x| vec![x])
                .ok_or_else(|| err(format!("[{}] `{key}` must be a number array", self.name))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            None => Ok(()),
            Some(k) => Err(err(format!("[{}] unknown or inapplicable key `{k}`", self.name))),
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_periodic(name: &str, value: Value) -> Result<PeriodicProfile> {
    let mut s = Section::new(name, value)?;
    let tag = s.string("tag")?;
    let profile = match tag.as_str() {
        "zero" => PeriodicProfile::Zero,
        "constant" => PeriodicProfile::Constant { value: s.f64("value")? },
        "cosine" => PeriodicProfile::Cosine {
            value: s.f64("value")?,
            amplitude: s.f64("amplitude")?,
        },
        _ => return Err(CoreError::UnknownFormula(tag)),
    };
    s.finish()?;
    Ok(profile)
}

fn parse_localized(name: &str, value: Value, dim: usize) -> Result<LocalizedProfile> {
    let mut s = Section::new(name, value)?;
    let tag = s.string("tag")?;
    let sign = if s.table.contains_key("sign") {
        match s.string("sign")?.as_str() {
            "zero" => SignMode::Zero,
            "negative" => SignMode::Negative,
            "positive" => SignMode::Positive,
            other => return Err(err(format!("[{name}] unknown sign mode `{other}`"))),
        }
    } else if tag == "zero" {
        SignMode::Zero
    } else {
        return Err(err(format!("[{name}] missing key `sign`")));
    };
    let integrability = s.opt_f64("s")?;
    let shape = match tag.as_str() {
        "zero" => LocalShape::Zero,
        "gaussian-bump" => {
            let center = center(&mut s, name, dim)?;
            LocalShape::Gaussian {
                amplitude: s.f64("amplitude")?,
                width: s.f64("width")?,
                center,
            }
        }
        "inverse-power-bump" => {
            let center = center(&mut s, name, dim)?;
            LocalShape::InversePower {
                amplitude: s.f64("amplitude")?,
                width: s.f64("width")?,
                exponent: s.f64("exponent")?,
                center,
            }
        }
        _ => return Err(CoreError::UnknownFormula(tag)),
    };
    s.finish()?;
    Ok(LocalizedProfile {
        sign,
        shape,
        integrability,
    })
}

fn center(s: &mut Section, name: &str, dim: usize) -> Result<Vec<f64>> {
    if !s.table.contains_key("center") {
        return Ok(vec![0.0; dim]);
    }
    let c = s.vector("center")?;
    if c.len() != dim {
        return Err(err(format!("[{name}] `center` needs {dim} components, got {}", c.len())));
    }
    Ok(c)
}

/// Parse configuration text. The assumptions are not checked here; see
/// [`crate::problem::validate`].
pub fn parse_problem(text: &str) -> Result<ProblemConfig> {
    let mut root: Table = text.parse().map_err(|e: toml::de::Error| err(e.to_string()))?;

    let mut p = Section::new("params", root.remove("params").ok_or_else(|| err("missing [params]"))?)?;
    let params = ProblemParams {
        dim: p.usize("N")?,
        mass: p.f64("m")?,
        p: p.f64("p")?,
        q: p.f64("q")?,
        alpha: p.f64("alpha")?,
        half_period: p.f64("L")?,
        points: p.usize("n")?,
    };
    p.finish()?;

    let mut pot = Section::new(
        "potential",
        root.remove("potential").ok_or_else(|| err("missing [potential]"))?,
    )?;
    let vp = parse_periodic("potential.Vp", pot.take("Vp")?)?;
    let vl = match pot.table.remove("Vl") {
        Some(v) => parse_localized("potential.Vl", v, params.dim)?,
        None => LocalizedProfile::zero(),
    };
    let gamma = parse_periodic("potential.Gamma", pot.take("Gamma")?)?;
    pot.finish()?;

    Ok(ProblemConfig {
        params,
        potential: PotentialSpec::new(vp, vl, gamma),
        extra: root,
    })
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

fn periodic_table(p: &PeriodicProfile) -> Table {
    let mut t = Table::new();
    t.insert("tag".into(), p.tag().into());
    match *p {
        PeriodicProfile::Zero => {}
        PeriodicProfile::Constant { value } => {
            t.insert("value".into(), value.into());
        }
        PeriodicProfile::Cosine { value, amplitude } => {
            t.insert("value".into(), value.into());
            t.insert("amplitude".into(), amplitude.into());
        }
    }
    t
}

fn localized_table(l: &LocalizedProfile) -> Table {
    let mut t = Table::new();
    t.insert("tag".into(), l.shape.tag().into());
    t.insert("sign".into(), l.sign.as_str().into());
    if let Some(s) = l.integrability {
        t.insert("s".into(), s.into());
    }
    let vec = |c: &[f64]| Value::Array(c.iter().map(|&x| Value::Float(x)).collect());
    match &l.shape {
        LocalShape::Zero => {}
        LocalShape::Gaussian {
            amplitude,
            width,
            center,
        } => {
            t.insert("amplitude".into(), (*amplitude).into());
            t.insert("width".into(), (*width).into());
            t.insert("center".into(), vec(center));
        }
        LocalShape::InversePower {
            amplitude,
            width,
            exponent,
            center,
        } => {
            t.insert("amplitude".into(), (*amplitude).into());
            t.insert("width".into(), (*width).into());
            t.insert("exponent".into(), (*exponent).into());
            t.insert("center".into(), vec(center));
        }
    }
    t
}

/// The `[params]` and `[potential.*]` sections as a table.
pub fn problem_table(params: &ProblemParams, pot: &PotentialSpec) -> Table {
    let mut pt = Table::new();
    pt.insert("N".into(), (params.dim as i64).into());
    pt.insert("m".into(), params.mass.into());
    pt.insert("p".into(), params.p.into());
    pt.insert("q".into(), params.q.into());
    pt.insert("alpha".into(), params.alpha.into());
    pt.insert("L".into(), params.half_period.into());
    pt.insert("n".into(), (params.points as i64).into());

    let mut pot_t = Table::new();
    pot_t.insert("Vp".into(), periodic_table(&pot.vp).into());
    pot_t.insert("Vl".into(), localized_table(&pot.vl).into());
    pot_t.insert("Gamma".into(), periodic_table(&pot.gamma).into());

    let mut root = Table::new();
    root.insert("params".into(), pt.into());
    root.insert("potential".into(), pot_t.into());
    root
}

/// Canonical configuration text; parses back to the same problem.
pub fn render_problem(params: &ProblemParams, pot: &PotentialSpec) -> String {
    toml::to_string(&problem_table(params, pot)).expect("tables of scalars always serialize")
}
