//! Domain descriptor files.
//!
//! ```text
//! C = 1
//! dim = 1
//! F.kind = abs
//! F.params = 3.2, 0.5, 0.0
//! grid.n = 129, 257
//! epsilon = 0.2
//! ```
//!
//! `F.params` is `value` for `const`, `base, slope, center…` for `abs` and
//! `k0, v0, k1, v1, …` for `pwl`.

use super::cap::CapDomain;
use super::graph::{GraphKind, LipschitzGraph};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub const DOMAIN_KEYS: &[&str] = &["C", "dim", "F.kind", "F.params", "grid.n", "epsilon"];

#[derive(Debug, Clone)]
pub struct DomainDescriptor {
    pub domain: CapDomain,
    pub grid: GridSpec,
    pub epsilon: f64,
}

/// Graph from the `C`, `dim`, `F.*` keys; `F` defaults to `F ≡ 3C`.
pub fn graph_from_config(cfg: &Config) -> Result<LipschitzGraph> {
    let c: f64 = cfg.get_or("C", 1.0)?;
    let dim: usize = cfg.get_or("dim", 1)?;
    let kind: String = cfg.get_or("F.kind", "const".to_string())?;
    let params: Vec<f64> = cfg.list_or("F.params", Vec::new())?;
    let bad = |what: &str| Error::Config { line: 0, msg: format!("F.params for {kind}: {what}") };
    let kind = match kind.as_str() {
        "const" => GraphKind::Const(*params.first().unwrap_or(&(3.0 * c))),
        "abs" => {
            if params.len() != 2 + dim && params.len() != 2 {
                return Err(bad("expected base, slope, center"));
            }
            let center = if params.len() == 2 { vec![0.0; dim] } else { params[2..].to_vec() };
            GraphKind::Abs { base: params[0], slope: params[1], center }
        }
        "pwl" => {
            if params.len() < 4 || params.len() % 2 != 0 {
                return Err(bad("expected knot/value pairs"));
            }
            let knots = params.iter().step_by(2).cloned().collect();
            let values = params.iter().skip(1).step_by(2).cloned().collect();
            GraphKind::Pwl { knots, values }
        }
        other => return Err(Error::Config { line: 0, msg: format!("unknown F.kind `{other}`") }),
    };
    LipschitzGraph::new(c, dim, kind)
}

impl DomainDescriptor {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let graph = graph_from_config(cfg)?;
        let domain = CapDomain::new(graph);
        let m = domain.ambient_dim();
        let default_n = if m == 2 { vec![129, 257] } else { vec![17; m] };
        let n: Vec<usize> = cfg.list_or("grid.n", default_n)?;
        if n.len() != m {
            return Err(Error::Config { line: 0, msg: format!("grid.n needs {m} entries") });
        }
        let grid = domain.grid(&n)?;
        let epsilon = cfg.get_or("epsilon", 0.2)?;
        Ok(DomainDescriptor { domain, grid, epsilon })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Config::parse(text)?;
        cfg.check_keys(DOMAIN_KEYS)?;
        Self::from_config(&cfg)
    }
}
