//! Actor-networks: principals, nodes, configuration trees and typed channels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AuthFlag {
    /// auch.m.1: the sender knows its message reaches the exit.
    MsgWrite,
    /// auch.m.2: the receiver knows who sent.
    MsgRead,
    /// auch.p.1: emitted values are sampled at the exit.
    SrcWrite,
    /// auch.p.2: sampled values were emitted at the entry.
    SrcRead,
}

impl AuthFlag {
    pub const ALL: [AuthFlag; 4] = [AuthFlag::MsgWrite, AuthFlag::MsgRead, AuthFlag::SrcWrite, AuthFlag::SrcRead];

    pub fn name(self) -> &'static str {
        match self {
            AuthFlag::MsgWrite => "auch.m.1",
            AuthFlag::MsgRead => "auch.m.2",
            AuthFlag::SrcWrite => "auch.p.1",
            AuthFlag::SrcRead => "auch.p.2",
        }
    }

    pub fn from_name(s: &str) -> Option<AuthFlag> {
        AuthFlag::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    pub id: String,
    pub entry: String,
    pub exit: String,
    pub ty: String,
    pub flags: BTreeSet<AuthFlag>,
}

impl Channel {
    pub fn new(id: &str, entry: &str, exit: &str, ty: &str) -> Self {
        Channel {
            id: id.to_string(),
            entry: entry.to_string(),
            exit: exit.to_string(),
            ty: ty.to_string(),
            flags: BTreeSet::new(),
        }
    }

    pub fn with_flag(mut self, flag: AuthFlag) -> Self {
        self.flags.insert(flag);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    NameClash(String),
    MembershipCycle(String),
    UndeclaredMember { config: String, member: String },
    EmptyConfiguration(String),
    DanglingEndpoint { channel: String, endpoint: String },
    UndeclaredChannelType { channel: String, ty: String },
    DuplicateChannel(String),
    ControlOnUndeclared(String),
    UndeclaredPrincipal { target: String, principal: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NameClash(n) => write!(f, "`{n}` is declared both as a node and a configuration"),
            Violation::MembershipCycle(c) => write!(f, "configuration `{c}` contains itself"),
            Violation::UndeclaredMember { config, member } => {
                write!(f, "configuration `{config}` has undeclared member `{member}`")
            }
            Violation::EmptyConfiguration(c) => write!(f, "configuration `{c}` has no members"),
            Violation::DanglingEndpoint { channel, endpoint } => {
                write!(f, "channel `{channel}` has undeclared endpoint `{endpoint}`")
            }
            Violation::UndeclaredChannelType { channel, ty } => {
                write!(f, "channel `{channel}` uses undeclared type `{ty}`")
            }
            Violation::DuplicateChannel(id) => write!(f, "channel id `{id}` is declared twice"),
            Violation::ControlOnUndeclared(c) => write!(f, "control assigned to undeclared `{c}`"),
            Violation::UndeclaredPrincipal { target, principal } => {
                write!(f, "`{target}` is controlled by undeclared principal `{principal}`")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("unknown configuration `{0}`")]
    UnknownConfiguration(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActorNetwork {
    pub name: String,
    pub principals: BTreeSet<String>,
    pub nodes: BTreeSet<String>,
    /// Configuration name to members (nodes or other configurations).
    pub configs: BTreeMap<String, BTreeSet<String>>,
    pub channel_types: BTreeSet<String>,
    pub channels: Vec<Channel>,
    pub control: BTreeMap<String, String>,
}

impl ActorNetwork {
    pub fn new(name: &str) -> Self {
        ActorNetwork { name: name.to_string(), ..Default::default() }
    }

    /// A node or configuration of this name exists.
    pub fn is_declared(&self, c: &str) -> bool {
        self.nodes.contains(c) || self.configs.contains_key(c)
    }

    /// All declared locations, nodes and configurations, sorted.
    pub fn locations(&self) -> BTreeSet<String> {
        self.nodes.iter().chain(self.configs.keys()).cloned().collect()
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == id)
    }

    /// `inner ⊆ outer` in the configuration tree order; a node is its own singleton.
    pub fn within(&self, inner: &str, outer: &str) -> bool {
        let mut seen = BTreeSet::new();
        self.within_rec(inner, outer, &mut seen)
    }

    fn within_rec<'a>(&'a self, inner: &str, outer: &'a str, seen: &mut BTreeSet<&'a str>) -> bool {
        if inner == outer {
            return true;
        }
        if !seen.insert(outer) {
            return false;
        }
        match self.configs.get(outer) {
            Some(members) => members.iter().any(|m| self.within_rec(inner, m, seen)),
            None => false,
        }
    }

    pub fn comparable(&self, a: &str, b: &str) -> bool {
        self.within(a, b) || self.within(b, a)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for n in &self.nodes {
            if self.configs.contains_key(n) {
                out.push(Violation::NameClash(n.clone()));
            }
        }
        for (c, members) in &self.configs {
            if members.is_empty() {
                out.push(Violation::EmptyConfiguration(c.clone()));
            }
            for m in members {
                if !self.is_declared(m) {
                    out.push(Violation::UndeclaredMember { config: c.clone(), member: m.clone() });
                }
            }
            if self.reaches_self(c) {
                out.push(Violation::MembershipCycle(c.clone()));
            }
        }
        let mut ids = BTreeSet::new();
        for ch in &self.channels {
            if !ids.insert(ch.id.as_str()) {
                out.push(Violation::DuplicateChannel(ch.id.clone()));
            }
            for end in [&ch.entry, &ch.exit] {
                if !self.is_declared(end) {
                    out.push(Violation::DanglingEndpoint { channel: ch.id.clone(), endpoint: end.clone() });
                }
            }
            if !self.channel_types.contains(&ch.ty) {
                out.push(Violation::UndeclaredChannelType { channel: ch.id.clone(), ty: ch.ty.clone() });
            }
        }
        for (target, principal) in &self.control {
            if !self.is_declared(target) {
                out.push(Violation::ControlOnUndeclared(target.clone()));
            }
            if !self.principals.contains(principal) {
                out.push(Violation::UndeclaredPrincipal { target: target.clone(), principal: principal.clone() });
            }
        }
        out
    }

    fn reaches_self(&self, c: &str) -> bool {
        let mut stack: Vec<&str> = self.configs.get(c).into_iter().flatten().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        while let Some(m) = stack.pop() {
            if m == c {
                return true;
            }
            if seen.insert(m) {
                stack.extend(self.configs.get(m).into_iter().flatten().map(String::as_str));
            }
        }
        false
    }

    /// Controlling principal, `None` for uncontrolled locations.
    pub fn controller(&self, c: &str) -> Result<Option<&str>, NetworkError> {
        if !self.is_declared(c) {
            return Err(NetworkError::UnknownConfiguration(c.to_string()));
        }
        Ok(self.control.get(c).map(String::as_str))
    }

    /// Locations controlled by `principal`.
    pub fn controlled_by(&self, principal: &str) -> BTreeSet<String> {
        self.control.iter().filter(|(_, p)| *p == principal).map(|(c, _)| c.clone()).collect()
    }

    /// Witness channel for a flow channel `from ⇝ to` of type `ty`.
    ///
    /// Channels lift to enclosing configurations, so a channel works whenever its
    /// entry lies within `from` and its exit within `to`.
    pub fn flow_channel(&self, from: &str, to: &str, ty: &str) -> Option<&Channel> {
        self.channels.iter().find(|ch| ch.ty == ty && self.within(&ch.entry, from) && self.within(&ch.exit, to))
    }

    pub fn flow_channels<'a>(&'a self, from: &'a str, to: &'a str) -> impl Iterator<Item = &'a Channel> + 'a {
        self.channels.iter().filter(move |ch| self.within(&ch.entry, from) && self.within(&ch.exit, to))
    }

    pub fn flow_channel_exists(&self, from: &str, to: &str, ty: &str) -> bool {
        self.flow_channel(from, to, ty).is_some()
    }

    /// Some channel leaves a location inside `c`.
    pub fn has_outgoing(&self, c: &str) -> bool {
        self.channels.iter().any(|ch| self.within(&ch.entry, c))
    }

    pub fn has_incoming(&self, c: &str) -> bool {
        self.channels.iter().any(|ch| self.within(&ch.exit, c))
    }

    /// One channel type, only single-node configurations, a channel for every
    /// ordered pair of distinct nodes and control a bijection onto principals.
    pub fn is_cyber_network(&self) -> bool {
        if self.channel_types.len() > 1 {
            return false;
        }
        if self.configs.values().any(|m| m.len() != 1 || m.iter().any(|x| !self.nodes.contains(x))) {
            return false;
        }
        for a in &self.nodes {
            for b in &self.nodes {
                if a != b && !self.channels.iter().any(|ch| &ch.entry == a && &ch.exit == b) {
                    return false;
                }
            }
        }
        let controlled: BTreeSet<&String> = self.control.keys().collect();
        let owners: BTreeSet<&String> = self.control.values().collect();
        let nodes: BTreeSet<&String> = self.nodes.iter().collect();
        controlled == nodes
            && owners.len() == self.control.len()
            && owners == self.principals.iter().collect::<BTreeSet<_>>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cap() -> ActorNetwork {
        let mut n = ActorNetwork::new("cap");
        n.principals = ["A", "B"].iter().map(|s| s.to_string()).collect();
        n.nodes = ["I_A", "C_A", "S_A", "R", "C_B"].iter().map(|s| s.to_string()).collect();
        n.configs.insert("Q".into(), ["S_A", "R"].iter().map(|s| s.to_string()).collect());
        n.channel_types = ["cyb", "vis", "kyb"].iter().map(|s| s.to_string()).collect();
        n.channels = vec![
            Channel::new("c1", "C_A", "C_B", "cyb"),
            Channel::new("c2", "C_B", "C_A", "cyb"),
            Channel::new("v1", "C_A", "I_A", "vis"),
            Channel::new("k1", "I_A", "C_A", "kyb"),
            Channel::new("v2", "R", "I_A", "vis").with_flag(AuthFlag::SrcWrite),
            Channel::new("k2", "I_A", "R", "kyb"),
        ];
        for c in ["I_A", "C_A", "S_A", "R", "Q"] {
            n.control.insert(c.into(), "A".into());
        }
        n.control.insert("C_B".into(), "B".into());
        n
    }

    #[test]
    fn cap_is_valid() {
        let n = cap();
        assert!(n.validate().is_empty());
        assert!(!n.is_cyber_network());
    }

    #[test]
    fn self_containing_config_is_a_cycle() {
        let mut n = cap();
        n.configs.get_mut("Q").unwrap().insert("Q".into());
        assert!(n.validate().contains(&Violation::MembershipCycle("Q".into())));
    }

    #[test]
    fn dangling_exit() {
        let mut n = cap();
        n.channels.push(Channel::new("x", "C_A", "Z", "cyb"));
        assert!(n.validate().contains(&Violation::DanglingEndpoint { channel: "x".into(), endpoint: "Z".into() }));
    }

    #[test]
    fn controller_lookup() {
        let mut n = cap();
        n.nodes.insert("S".into());
        assert_eq!(n.controller("Q").unwrap(), Some("A"));
        assert_eq!(n.controller("S").unwrap(), None);
        assert_eq!(n.controller("nope"), Err(NetworkError::UnknownConfiguration("nope".into())));
    }

    #[test]
    fn flow_channels_lift_upwards() {
        let n = cap();
        assert_eq!(n.flow_channel("Q", "I_A", "vis").map(|c| c.id.as_str()), Some("v2"));
        assert_eq!(n.flow_channel("C_A", "C_B", "cyb").map(|c| c.id.as_str()), Some("c1"));
        assert!(!n.flow_channel_exists("I_A", "Q", "vis"));
        assert!(n.flow_channel_exists("I_A", "Q", "kyb"));
        assert!(!n.flow_channel_exists("R", "Q", "kyb"));
    }

    #[test]
    fn empty_network_is_cyber() {
        assert!(ActorNetwork::new("e").is_cyber_network());
    }
}
