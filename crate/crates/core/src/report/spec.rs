//! Density specifications: whitespace-separated `key=value` tokens, e.g.
//! `family=perturbed a=0.3 amplitude=0.05 frequency=2 dim=1 tilt=0.5`.
//!
//! Keys: `family` (`quadratic`, `loglinear`, `perturbed`), `dim`, `a`, `b`
//! (comma list, or one value broadcast to `dim`), `amplitude`, `frequency`,
//! `tilt` (comma list), `scale`, and the per-density overrides `epsilon`,
//! `M`, `r`.

use crate::density::{log_linear, perturbed_quadratic, quadratic_family, LogDensity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Quadratic { a: f64 },
    LogLinear { b: Vec<f64> },
    Perturbed { a: f64, amplitude: f64, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySpec {
    pub family: Family,
    pub dim: usize,
    pub tilt: Option<Vec<f64>>,
    pub scale: Option<f64>,
    pub epsilon: Option<f64>,
    pub m: Option<f64>,
    pub r: Option<f64>,
    /// The specification as written, whitespace-normalized.
    pub text: String,
}

struct Token<'a> {
    key: &'a str,
    value: &'a str,
    column: usize,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn number(tok: &Token<'_>, line: usize) -> Result<f64> {
    tok.value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        parse_err(
            line,
            tok.column,
            format!("{} expects a number, got `{}`", tok.key, tok.value),
        )
    })
}

fn list(tok: &Token<'_>, line: usize) -> Result<Vec<f64>> {
    tok.value
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, tok.column, format!("{} expects numbers, got `{p}`", tok.key)))
        })
        .collect()
}

impl DensitySpec {
    /// Parses one specification. `line` and `column_offset` place error
    /// positions within a surrounding file; columns are 1-based.
    pub fn parse_at(text: &str, line: usize, column_offset: usize) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut pos = 0;
        for word in text.split_whitespace() {
            let start = pos + text[pos..].find(word).unwrap_or(0);
            pos = start + word.len();
            let column = column_offset + text[..start].chars().count() + 1;
            let (key, value) = word
                .split_once('=')
                .ok_or_else(|| parse_err(line, column, format!("expected key=value, got `{word}`")))?;
            if value.is_empty() {
                return Err(parse_err(line, column, format!("missing value for `{key}`")));
            }
            if tokens.iter().any(|t: &Token<'_>| t.key == key) {
                return Err(parse_err(line, column, format!("duplicate key `{key}`")));
            }
            tokens.push(Token { key, value, column });
        }
        let end_column = column_offset + text.chars().count() + 1;
        let family_tok = tokens
            .iter()
            .find(|t| t.key == "family")
            .ok_or_else(|| parse_err(line, end_column, "missing `family`"))?;

        let allowed: &[&str] = match family_tok.value {
            "quadratic" => &["a"],
            "loglinear" => &["b"],
            "perturbed" => &["a", "amplitude", "frequency"],
            other => {
                return Err(parse_err(
                    line,
                    family_tok.column,
                    format!("unknown family `{other}`; expected quadratic, loglinear or perturbed"),
                ))
            }
        };
        const COMMON: [&str; 7] = ["family", "dim", "tilt", "scale", "epsilon", "M", "r"];
        if let Some(t) = tokens
            .iter()
            .find(|t| !COMMON.contains(&t.key) && !allowed.contains(&t.key))
        {
            return Err(parse_err(
                line,
                t.column,
                format!("key `{}` does not apply to family {}", t.key, family_tok.value),
            ));
        }
        let get = |key: &str| tokens.iter().find(|t| t.key == key);
        let required = |key: &str| -> Result<f64> {
            let tok = get(key).ok_or_else(|| parse_err(line, end_column, format!("missing `{key}`")))?;
            number(tok, line)
        };
        let optional = |key: &str| get(key).map(|t| number(t, line)).transpose();

        let dim = match get("dim") {
            Some(t) => match t.value.parse::<usize>() {
                Ok(d) if (1..=3).contains(&d) => Some(d),
                _ => {
                    return Err(parse_err(
                        line,
                        t.column,
                        format!("dim must be 1, 2 or 3, got `{}`", t.value),
                    ))
                }
            },
            None => None,
        };
        let (family, dim) = match family_tok.value {
            "quadratic" => (Family::Quadratic { a: required("a")? }, dim.unwrap_or(1)),
            "perturbed" => (
                Family::Perturbed {
                    a: required("a")?,
                    amplitude: required("amplitude")?,
                    frequency: required("frequency")?,
                },
                dim.unwrap_or(1),
            ),
            _ => {
                let tok = get("b").ok_or_else(|| parse_err(line, end_column, "missing `b`"))?;
                let mut b = list(tok, line)?;
                let dim = match (dim, b.len()) {
                    (Some(d), 1) => {
                        b = vec![b[0]; d];
                        d
                    }
                    (Some(d), k) if d != k => {
                        return Err(parse_err(line, tok.column, format!("b has {k} entries but dim is {d}")))
                    }
                    (_, k) if k > 3 => return Err(parse_err(line, tok.column, "b has more than 3 entries")),
                    (_, k) => k,
                };
                (Family::LogLinear { b }, dim)
            }
        };
        let tilt = match get("tilt") {
            Some(t) => {
                let v = list(t, line)?;
                if v.len() != dim {
                    return Err(parse_err(
                        line,
                        t.column,
                        format!("tilt has {} entries but dim is {dim}", v.len()),
                    ));
                }
                Some(v)
            }
            None => None,
        };
        Ok(Self {
            family,
            dim,
            tilt,
            scale: optional("scale")?,
            epsilon: optional("epsilon")?,
            m: optional("M")?,
            r: optional("r")?,
            text: text.split_whitespace().collect::<Vec<_>>().join(" "),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_at(text, 1, 0)
    }

    pub fn build(&self) -> Result<LogDensity> {
        let mut f = match &self.family {
            Family::Quadratic { a } => quadratic_family(*a, self.dim)?,
            Family::LogLinear { b } => log_linear(b)?,
            Family::Perturbed {
                a,
                amplitude,
                frequency,
            } => perturbed_quadratic(*a, *amplitude, *frequency, self.dim)?,
        };
        if let Some(b) = &self.tilt {
            f = f.tilted(b)?;
        }
        if let Some(c) = self.scale {
            f = f.scaled(c)?;
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_family() {
        let s = DensitySpec::parse("family=quadratic a=0.5 dim=1").unwrap();
        assert_eq!(s.family, Family::Quadratic { a: 0.5 });
        let s = DensitySpec::parse("family=loglinear b=0 dim=2").unwrap();
        assert_eq!(s.family, Family::LogLinear { b: vec![0.0, 0.0] });
        assert_eq!(s.dim, 2);
        let s =
            DensitySpec::parse("  family=perturbed  a=0.3 amplitude=0.05 frequency=2 tilt=0.5 epsilon=0.4").unwrap();
        assert_eq!(s.dim, 1);
        assert_eq!(s.tilt, Some(vec![0.5]));
        assert_eq!(s.epsilon, Some(0.4));
        assert_eq!(
            s.text,
            "family=perturbed a=0.3 amplitude=0.05 frequency=2 tilt=0.5 epsilon=0.4"
        );
        assert!(s.build().is_ok());
    }

    #[test]
    fn errors_carry_columns() {
        let at = |text: &str| match DensitySpec::parse(text) {
            Err(Error::Parse { line, column, .. }) => (line, column),
            other => panic!("{other:?}"),
        };
        assert_eq!(at("family=quadratic a=x"), (1, 18));
        assert_eq!(at("family=cubic a=1"), (1, 1));
        assert_eq!(at("family=quadratic a=1 amplitude=2"), (1, 22));
        assert_eq!(at("family=quadratic oops"), (1, 18));
        assert_eq!(at("family=quadratic"), (1, 17));
        assert_eq!(at("family=loglinear b=1,2 dim=3"), (1, 18));
        assert_eq!(at("family=quadratic a=1 a=2"), (1, 22));
        assert_eq!(at("family=quadratic a=1 dim=4"), (1, 22));
    }

    #[test]
    fn offsets_shift_positions() {
        match DensitySpec::parse_at("family=quadratic a=?", 7, 10) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (7, 28)),
            other => panic!("{other:?}"),
        }
    }
}
