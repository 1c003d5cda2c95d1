//! Model mini-language: `"DEP ~ R1 + R2 | FE1 + FE2"`.
//!
//! The part after `|` is optional and names fixed-effect dimensions
//! (`year`, `industry`). Whitespace around tokens is ignored.

use crate::error::{Error, Result};
use crate::regress::{FixedEffect, ModelSpec};

/// Parse a model expression into a [`ModelSpec`] with an intercept.
///
/// Variable names are kept verbatim; whether they exist is decided later
/// against the dataset, so a formula can be parsed without data in hand.
pub fn parse_formula(input: &str) -> Result<ModelSpec> {
    let (model_part, fe_part) = match split_once_only(input, '|')? {
        (m, Some(f)) => (m, Some(f)),
        (m, None) => (m, None),
    };

    let (dep_part, reg_part) = match split_once_only(model_part, '~')? {
        (_, None) => {
            return Err(Error::Formula(format!(
                "expected `DEP ~ regressors` before any `|`, got `{}`",
                model_part.trim()
            )));
        }
        (d, Some(r)) => (d, r),
    };

    let dependent = identifier(dep_part, "dependent variable")?;
    let mut regressors = Vec::new();
    for piece in reg_part.split('+') {
        let name = identifier(piece, "regressor")?;
        if name == dependent {
            return Err(Error::Formula(format!(
                "dependent `{name}` cannot appear among the regressors"
            )));
        }
        if regressors.contains(&name) {
            return Err(Error::Formula(format!("regressor `{name}` repeated")));
        }
        regressors.push(name);
    }

    let mut fixed_effects = Vec::new();
    if let Some(fe_part) = fe_part {
        for piece in fe_part.split('+') {
            let name = identifier(piece, "fixed effect")?;
            let fe = FixedEffect::parse(&name).ok_or_else(|| {
                Error::Formula(format!(
                    "unknown fixed effect `{name}`; expected `year` or `industry`"
                ))
            })?;
            if fixed_effects.contains(&fe) {
                return Err(Error::Formula(format!("fixed effect `{name}` repeated")));
            }
            fixed_effects.push(fe);
        }
    }

    Ok(ModelSpec {
        dependent,
        regressors,
        fixed_effects,
        include_intercept: true,
    })
}

/// Render a spec back into the mini-language. `parse_formula` inverts this.
pub fn format_formula(spec: &ModelSpec) -> String {
    let mut out = format!("{} ~ {}", spec.dependent, spec.regressors.join(" + "));
    if !spec.fixed_effects.is_empty() {
        let names: Vec<&str> = spec.fixed_effects.iter().map(|fe| fe.name()).collect();
        out.push_str(" | ");
        out.push_str(&names.join(" + "));
    }
    out
}

fn split_once_only(s: &str, sep: char) -> Result<(&str, Option<&str>)> {
    let mut parts = s.split(sep);
    let head = parts.next().unwrap_or("");
    let tail = parts.next();
    if parts.next().is_some() {
        return Err(Error::Formula(format!("more than one `{sep}` in `{}`", s.trim())));
    }
    Ok((head, tail))
}

fn identifier(piece: &str, what: &str) -> Result<String> {
    let name = piece.trim();
    if name.is_empty() {
        return Err(Error::Formula(format!("empty {what}")));
    }
    if name.chars().any(char::is_whitespace) {
        return Err(Error::Formula(format!(
            "{what} `{name}` contains whitespace; separate terms with `+`"
        )));
    }
    Ok(name.to_string())
}
