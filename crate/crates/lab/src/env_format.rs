//! Labeled-MDP JSON documents, paired with an RM document.

use serde::{Deserialize, Serialize};

use prm_core::{CrossProductMdp, Environment, LabeledMdp};

use crate::error::{LabError, Result};
use crate::rm_format::{self, ParseOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpDocument {
    pub num_obs: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial: usize,
    /// `p[o][a][o']`
    pub p: Vec<Vec<Vec<f64>>>,
    /// `labels[o][a][o']`, event indices of the companion alphabet.
    pub labels: Vec<Vec<Vec<usize>>>,
    /// Product kernel `P[s][a][s']`, `s = q·O + o`, when requested.
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub product_p: Option<Vec<Vec<Vec<f64>>>>,
    /// Product reward `R[s][a]`, when requested.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub product_r: Option<Vec<Vec<f64>>>,
}

/// `[outer][mid][rest]` view of a flat row-major table.
fn nest<T: Clone>(flat: &[T], outer: usize, mid: usize) -> Vec<Vec<Vec<T>>> {
    let rest = flat.len() / (outer * mid);
    flat.chunks(mid * rest).map(|block| block.chunks(rest).map(<[T]>::to_vec).collect()).collect()
}

impl MdpDocument {
    pub fn from_environment(env: &Environment, with_product: bool) -> Self {
        let m = &env.mdp;
        let (on, an) = (m.num_obs(), m.num_actions());
        let (product_p, product_r) = if with_product {
            let cp = CrossProductMdp::build(env);
            let sn = cp.num_states();
            (
                Some(nest(cp.transitions(), sn, an)),
                Some(cp.rewards().chunks(an).map(<[f64]>::to_vec).collect()),
            )
        } else {
            (None, None)
        };
        Self {
            num_obs: on,
            num_actions: an,
            horizon: m.horizon(),
            initial: m.initial_obs(),
            p: nest(m.transitions(), on, an),
            labels: nest(m.labels(), on, an),
            product_p,
            product_r,
        }
    }

    fn flatten<T: Copy>(name: &str, nested: &[Vec<Vec<T>>], on: usize, an: usize) -> Result<Vec<T>> {
        let shape_ok = nested.len() == on && nested.iter().all(|r| r.len() == an && r.iter().all(|x| x.len() == on));
        if !shape_ok {
            return Err(LabError::Semantic(format!("`{name}` must have shape {on}x{an}x{on}")));
        }
        Ok(nested.iter().flatten().flatten().copied().collect())
    }

    pub fn to_mdp(&self) -> Result<LabeledMdp> {
        let (on, an) = (self.num_obs, self.num_actions);
        let p = Self::flatten("p", &self.p, on, an)?;
        let labels = Self::flatten("labels", &self.labels, on, an)?;
        Ok(LabeledMdp::new(on, an, self.horizon, p, labels, self.initial)?)
    }
}

pub fn serialize_mdp(env: &Environment, with_product: bool) -> String {
    let mut s = serde_json::to_string_pretty(&MdpDocument::from_environment(env, with_product)).expect("documents always serialize");
    s.push('\n');
    s
}

/// Loads an environment from an RM document and a labeled-MDP document.
pub fn parse_environment(rm_text: &str, mdp_text: &str, options: ParseOptions) -> Result<Environment> {
    let doc = rm_format::parse_rm(rm_text, options)?;
    let mdp: MdpDocument = serde_json::from_str(mdp_text)
        .map_err(|e| LabError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    Ok(Environment::new(mdp.to_mdp()?, doc.rm, doc.alphabet)?)
}
