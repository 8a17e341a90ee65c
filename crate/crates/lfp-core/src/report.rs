//! Experiment harness: named probe definitions, experiment configs, and
//! deterministic report emission (CSV tables plus a JSON report with
//! embedded certificates).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constructions::{define_arith_macros, InterpretedFormula, StagePreorder};
use crate::dividing::{
    profile_family, Budget, ExtMatrix, FamilyProfile, Probe, PropertyKind, VerifyError,
};
use crate::eval::{EvalCache, EvalError};
use crate::family::{generate_family, FamilyError, FamilySpec};
use crate::formula::PartitionedFormula;
use crate::parser::{parse_formula_with, MacroSet, ParseError};
use crate::signature::{Signature, SignatureError};
use crate::stages::LfpSpec;
use crate::structure::FiniteStructure;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("formula `{name}`: {err}")]
    Parse { name: String, err: ParseError },
    #[error("formula `{name}`: {err}")]
    Signature { name: String, err: SignatureError },
    #[error("formula `{name}`: {msg}")]
    Bad { name: String, msg: String },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("certificate failed re-verification in report assembly: {0}")]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A named probe definition. Exactly one of `formula` (with the `x`/`y`
/// partition) or `stage_preorder` (an lfp application whose stage comparison
/// is probed) must be set. `signature` declares the relation symbols the
/// text parses against; the arithmetic macros are available whenever `<` is
/// declared.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FormulaDef {
    pub name: String,
    pub signature: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_preorder: Option<String>,
}

/// An experiment: families × probes × kinds, with caps and budgets.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub name: String,
    pub families: Vec<String>,
    pub formulas: Vec<FormulaDef>,
    pub kinds: Vec<PropertyKind>,
    pub n_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_nodes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_ms: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn budget(&self) -> Budget {
        Budget {
            max_nodes: self.budget_nodes,
            max_millis: self.budget_ms,
        }
    }

    pub fn sha256(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

/// Any probe resolvable from a config.
#[derive(Debug, Clone)]
pub enum AnyProbe {
    Text(PartitionedFormula),
    Stage(StagePreorder),
    Interpreted(InterpretedFormula),
}

impl Probe for AnyProbe {
    fn x_arity(&self) -> usize {
        match self {
            AnyProbe::Text(p) => p.x_arity(),
            AnyProbe::Stage(p) => p.x_arity(),
            AnyProbe::Interpreted(p) => p.x_arity(),
        }
    }

    fn y_arity(&self) -> usize {
        match self {
            AnyProbe::Text(p) => p.y_arity(),
            AnyProbe::Stage(p) => p.y_arity(),
            AnyProbe::Interpreted(p) => p.y_arity(),
        }
    }

    fn label(&self) -> String {
        match self {
            AnyProbe::Text(p) => p.label(),
            AnyProbe::Stage(p) => p.label(),
            AnyProbe::Interpreted(p) => p.label(),
        }
    }

    fn compatible(&self, m: &FiniteStructure) -> bool {
        match self {
            AnyProbe::Text(p) => p.compatible(m),
            AnyProbe::Stage(p) => p.compatible(m),
            AnyProbe::Interpreted(p) => p.compatible(m),
        }
    }

    fn ext_matrix(&self, m: &FiniteStructure) -> Result<ExtMatrix, EvalError> {
        match self {
            AnyProbe::Text(p) => p.ext_matrix(m),
            AnyProbe::Stage(p) => p.ext_matrix(m),
            AnyProbe::Interpreted(p) => p.ext_matrix(m),
        }
    }

    fn eval_pair(
        &self,
        m: &FiniteStructure,
        xt: &[usize],
        yt: &[usize],
        cache: &mut EvalCache,
    ) -> Result<bool, EvalError> {
        match self {
            AnyProbe::Text(p) => p.eval_pair(m, xt, yt, cache),
            AnyProbe::Stage(p) => p.eval_pair(m, xt, yt, cache),
            AnyProbe::Interpreted(p) => p.eval_pair(m, xt, yt, cache),
        }
    }

    fn closure_ordinal(&self, m: &FiniteStructure) -> Option<Result<usize, EvalError>> {
        match self {
            AnyProbe::Text(p) => p.closure_ordinal(m),
            AnyProbe::Stage(p) => p.closure_ordinal(m),
            AnyProbe::Interpreted(p) => p.closure_ordinal(m),
        }
    }
}

/// Resolve a formula definition into a probe.
pub fn resolve_formula_def(def: &FormulaDef) -> Result<(String, AnyProbe), ConfigError> {
    let sig = Signature::new(def.signature.clone()).map_err(|err| ConfigError::Signature {
        name: def.name.clone(),
        err,
    })?;
    let mut macros = MacroSet::new();
    define_arith_macros(&mut macros, &sig);
    let parse = |text: &str| {
        parse_formula_with(text, &sig, &[], &macros).map_err(|err| ConfigError::Parse {
            name: def.name.clone(),
            err,
        })
    };
    match (&def.formula, &def.stage_preorder) {
        (Some(text), None) => {
            let f = parse(text)?;
            let pf =
                match (&def.x, &def.y) {
                    (Some(x), Some(y)) => PartitionedFormula::new(f, x.clone(), y.clone())
                        .map_err(|e| ConfigError::Bad {
                            name: def.name.clone(),
                            msg: e.to_string(),
                        })?,
                    (None, None) => {
                        PartitionedFormula::default_split(f).map_err(|e| ConfigError::Bad {
                            name: def.name.clone(),
                            msg: e.to_string(),
                        })?
                    }
                    _ => {
                        return Err(ConfigError::Bad {
                            name: def.name.clone(),
                            msg: "give both x and y, or neither".into(),
                        })
                    }
                };
            Ok((def.name.clone(), AnyProbe::Text(pf)))
        }
        (None, Some(text)) => {
            let f = parse(text)?;
            let (spec, _args) = LfpSpec::from_formula(&f).ok_or_else(|| ConfigError::Bad {
                name: def.name.clone(),
                msg: "stage_preorder must be an lfp application".into(),
            })?;
            if !spec.context_vars().is_empty() {
                return Err(ConfigError::Bad {
                    name: def.name.clone(),
                    msg: "stage_preorder body must have no free variables outside its binder"
                        .into(),
                });
            }
            Ok((
                def.name.clone(),
                AnyProbe::Stage(StagePreorder::with_label(
                    spec,
                    format!("stage-preorder({})", def.name),
                )),
            ))
        }
        _ => Err(ConfigError::Bad {
            name: def.name.clone(),
            msg: "define exactly one of `formula` or `stage_preorder`".into(),
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub spec: String,
    pub profile: FamilyProfile,
}

/// A full experiment report. Everything in it is derived from the config
/// and seed, so reports are byte-identical across runs.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config_name: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub families: Vec<FamilyReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One CSV row per structure; columns per (probe, kind) plus closure
    /// columns. Undecided cells carry a `?` suffix, incompatible ones read
    /// `n/a`.
    pub fn to_csv(&self, config: &ExperimentConfig) -> String {
        let mut header = vec!["family".to_string(), "structure".into(), "size".into()];
        for def in &config.formulas {
            for kind in &config.kinds {
                header.push(format!("{}:{}", def.name, kind));
            }
        }
        for def in &config.formulas {
            header.push(format!("closure:{}", def.name));
        }
        let mut out = header.join(",");
        out.push('\n');
        for fam in &self.families {
            for row in &fam.profile.rows {
                let mut cells = vec![
                    fam.spec.clone(),
                    row.structure.clone(),
                    row.size.to_string(),
                ];
                for def in &config.formulas {
                    for kind in &config.kinds {
                        let cell = row.cells.get(&def.name).and_then(|m| m.get(kind));
                        cells.push(match cell {
                            None => String::new(),
                            Some(c) => match &c.annotation {
                                Some(a) if a == "n/a" => "n/a".into(),
                                Some(_) => format!("{}?", c.max_n),
                                None => c.max_n.to_string(),
                            },
                        });
                    }
                }
                for def in &config.formulas {
                    cells.push(
                        row.closures
                            .get(&def.name)
                            .map(|c| c.to_string())
                            .unwrap_or_default(),
                    );
                }
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out
    }
}

/// Run an experiment config: generate each family, profile it against the
/// resolved probes, and re-verify every attached certificate.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, ConfigError> {
    let probes: Vec<(String, AnyProbe)> = config
        .formulas
        .iter()
        .map(resolve_formula_def)
        .collect::<Result<_, _>>()?;
    let budget = config.budget();
    let mut families = Vec::new();
    for spec_text in &config.families {
        let spec = FamilySpec::parse(spec_text, config.seed)?;
        let family = generate_family(&spec)?;
        let profile = profile_family(&family, &probes, &config.kinds, config.n_cap, &budget);
        // Every reported max-n must be backed by a certificate that
        // re-verifies against its structure.
        for row in &profile.rows {
            let m = family
                .iter()
                .find(|m| m.name() == row.structure)
                .expect("profile rows come from the family");
            for (label, kinds) in &row.cells {
                let probe = &probes
                    .iter()
                    .find(|(l, _)| l == label)
                    .expect("known probe")
                    .1;
                for cell in kinds.values() {
                    if let Some(cert) = &cell.certificate {
                        if !crate::dividing::verify_witness(cert, probe, m)? {
                            return Err(ConfigError::Bad {
                                name: label.clone(),
                                msg: format!(
                                    "certificate for {} on {} does not verify",
                                    cert.kind, row.structure
                                ),
                            });
                        }
                    }
                }
            }
        }
        families.push(FamilyReport {
            spec: spec_text.clone(),
            profile,
        });
    }
    Ok(Report {
        config_name: config.name.clone(),
        config_sha256: config.sha256(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        families,
    })
}

/// The bundled desk-scale experiment: pure sets, successor structures,
/// linear orders, and Paley graphs, probed with a fixed formula corpus.
pub fn figure1_desk() -> ExperimentConfig {
    let sig = |pairs: &[(&str, usize)]| -> BTreeMap<String, usize> {
        pairs.iter().map(|(n, a)| (n.to_string(), *a)).collect()
    };
    ExperimentConfig {
        name: "figure1-desk".into(),
        families: vec![
            "pure:1..6".into(),
            "succ:2..10".into(),
            "linord:2..10".into(),
            "paley:5,13,17,29".into(),
        ],
        formulas: vec![
            FormulaDef {
                name: "eq".into(),
                signature: sig(&[]),
                formula: Some("x = y".into()),
                x: Some(vec!["x".into()]),
                y: Some(vec!["y".into()]),
                stage_preorder: None,
            },
            FormulaDef {
                name: "lt".into(),
                signature: sig(&[("<", 2)]),
                formula: Some("x < y".into()),
                x: Some(vec!["x".into()]),
                y: Some(vec!["y".into()]),
                stage_preorder: None,
            },
            FormulaDef {
                name: "succ-edge".into(),
                signature: sig(&[("S", 2)]),
                formula: Some("S(x,y)".into()),
                x: Some(vec!["x".into()]),
                y: Some(vec!["y".into()]),
                stage_preorder: None,
            },
            FormulaDef {
                name: "edge".into(),
                signature: sig(&[("E", 2)]),
                formula: Some("E(x,y)".into()),
                x: Some(vec!["x".into()]),
                y: Some(vec!["y".into()]),
                stage_preorder: None,
            },
            FormulaDef {
                name: "stage-reach".into(),
                signature: sig(&[("S", 2)]),
                formula: None,
                x: None,
                y: None,
                stage_preorder: Some("[lfp T(x). (A y. !S(y,x)) | E y. (S(y,x) & T(y))](u)".into()),
            },
            FormulaDef {
                name: "bit".into(),
                signature: sig(&[("<", 2)]),
                formula: Some("bit(x,y)".into()),
                x: Some(vec!["x".into()]),
                y: Some(vec!["y".into()]),
                stage_preorder: None,
            },
        ],
        kinds: vec![
            PropertyKind::Op,
            PropertyKind::Sop,
            PropertyKind::Ip,
            PropertyKind::Tp2,
        ],
        n_cap: 8,
        budget_nodes: Some(50_000_000),
        budget_ms: None,
        seed: 0,
    }
}

/// Look up a bundled config by name.
pub fn bundled_config(name: &str) -> Option<ExperimentConfig> {
    match name {
        "figure1-desk" => Some(figure1_desk()),
        _ => None,
    }
}
