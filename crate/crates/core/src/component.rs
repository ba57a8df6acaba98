//! Component types: finite-state behavior templates with named ports.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub from: String,
    pub port: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentType {
    pub name: String,
    pub ports: Vec<String>,
    pub states: Vec<String>,
    pub init: String,
    pub rules: Vec<Transition>,
}

impl ComponentType {
    pub fn has_port(&self, port: &str) -> bool {
        self.ports.iter().any(|p| p == port)
    }

    pub fn has_state(&self, state: &str) -> bool {
        self.states.iter().any(|s| s == state)
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// The unique transition labeled by `port`, if any.
    pub fn transition(&self, port: &str) -> Option<&Transition> {
        self.rules.iter().find(|t| t.port == port)
    }

    /// Source state of the transition labeled by `port`.
    pub fn pre(&self, port: &str) -> Option<&str> {
        self.transition(port).map(|t| t.from.as_str())
    }

    /// Target state of the transition labeled by `port`.
    pub fn post(&self, port: &str) -> Option<&str> {
        self.transition(port).map(|t| t.to.as_str())
    }
}

/// Index of the component type owning `port`.
pub fn port_owner(types: &[ComponentType], port: &str) -> Option<usize> {
    types.iter().position(|c| c.has_port(port))
}

/// Index of the component type owning `state`.
pub fn state_owner(types: &[ComponentType], state: &str) -> Option<usize> {
    types.iter().position(|c| c.has_state(state))
}
