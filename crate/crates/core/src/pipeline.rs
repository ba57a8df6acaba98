//! Parse, validate, isolate and normalize a specification in one go.

use crate::dsl::{parse_spec, validate_spec, Diagnostic, ParseError, Spec};
use crate::normalize::{check_assumption1, isolate_instance_atoms, normalize, Assumption1Violation, NormalizeError, NormalizedSystem};
use crate::rewriting::{enumerate_trees, ground_system, GroundSystem, PreparedSystem, RewriteError, RewritingTree};
use crate::system::RewritingSystem;

#[derive(Debug, Clone, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Assumption(#[from] Assumption1Violation),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

impl PipelineError {
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            PipelineError::Parse(e) => e.0.clone(),
            PipelineError::Invalid(d) => d.clone(),
            _ => Vec::new(),
        }
    }
}

/// A specification ready for unfolding.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: Spec,
    pub normalized: NormalizedSystem,
    pub system: PreparedSystem,
}

pub fn load(text: &str) -> Result<Model, PipelineError> {
    prepare(parse_spec(text)?)
}

pub fn prepare(spec: Spec) -> Result<Model, PipelineError> {
    let diags = validate_spec(&spec);
    if !diags.is_empty() {
        return Err(PipelineError::Invalid(diags));
    }
    let mut rules = isolate_instance_atoms(&spec.system.with_root(&spec.root)).rules;
    let root = rules.remove(0);
    let normalized = normalize(&RewritingSystem::new(rules), &root.body)?;
    check_assumption1(&normalized)?;
    let system = PreparedSystem::new(spec.components.clone(), &normalized.system)?;
    Ok(Model { spec, normalized, system })
}

/// The rooted system exactly as written, before isolation and normalization.
pub fn written_system(spec: &Spec) -> Result<PreparedSystem, RewriteError> {
    PreparedSystem::new(spec.components.clone(), &spec.system.with_root(&spec.root))
}

impl Model {
    /// Instance count used by `--size`: instances of the first declared
    /// component type.
    pub fn size_of(&self, g: &GroundSystem) -> usize {
        self.spec.components.first().map_or(0, |c| g.count_of(&c.name))
    }

    /// Trees with at most `max_nodes` nodes whose ground system has the given size.
    pub fn trees_of_size(&self, size: usize, max_nodes: usize) -> Result<Vec<(RewritingTree, GroundSystem)>, RewriteError> {
        let mut out = Vec::new();
        for t in enumerate_trees(&self.system, max_nodes) {
            let g = ground_system(&self.system, &t)?;
            if self.size_of(&g) == size {
                out.push((t, g));
            }
        }
        Ok(out)
    }
}
