//! Operator expressions: `sigma_x(3)`, `projector_up(1)`, and products of
//! single-site factors on distinct sites joined by `*`.

use chaoscorr::tensorops::{embed_product, pauli_x, pauli_y, pauli_z, projector_up, sigma_minus, sigma_plus, Operator};

use crate::error::CliError;

fn site_operator(name: &str) -> Option<Operator> {
    Some(match name {
        "sigma_x" => pauli_x(),
        "sigma_y" => pauli_y(),
        "sigma_z" => pauli_z(),
        "sigma_plus" => sigma_plus(),
        "sigma_minus" => sigma_minus(),
        "projector_up" => projector_up(),
        _ => return None,
    })
}

fn factor(text: &str) -> Result<(Operator, usize), CliError> {
    let bad = || CliError::Usage(format!("cannot parse observable factor `{text}` (expected e.g. sigma_x(1))"));
    let (name, rest) = text.trim().split_once('(').ok_or_else(bad)?;
    let site: usize = rest.strip_suffix(')').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let op = site_operator(name.trim()).ok_or_else(|| CliError::Usage(format!("unknown observable `{}`", name.trim())))?;
    Ok((op, site))
}

pub fn parse(expr: &str, n_sites: usize) -> Result<Operator, CliError> {
    let factors: Vec<(Operator, usize)> = expr.split('*').map(factor).collect::<Result<_, _>>()?;
    let refs: Vec<(&Operator, usize)> = factors.iter().map(|(o, s)| (o, *s)).collect();
    embed_product(&refs, n_sites).map_err(|e| CliError::Usage(format!("observable `{expr}`: {e}")))
}

/// File-name fragment: `sigma_x(1)*sigma_z(2)` → `sigma_x1_sigma_z2`.
pub fn slug(expr: &str) -> String {
    expr.split('*')
        .map(|f| f.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '_').collect::<String>())
        .collect::<Vec<_>>()
        .join("_")
}
