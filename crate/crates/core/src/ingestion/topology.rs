use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed link between two node indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub source: usize,
    pub target: usize,
}

/// Nodes plus directed links with dense ids `0..N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkTopology {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    links: Vec<Link>,
    pairs: HashSet<(usize, usize)>,
}

impl NetworkTopology {
    pub fn new<I, T>(nodes: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut topo = NetworkTopology {
            nodes: Vec::new(),
            index: HashMap::new(),
            links: Vec::new(),
            pairs: HashSet::new(),
        };
        for n in nodes {
            topo.add_node(n)?;
        }
        Ok(topo)
    }

    pub fn add_node(&mut self, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Validation(format!("duplicate node `{name}`")));
        }
        let id = self.nodes.len();
        self.index.insert(name.clone(), id);
        self.nodes.push(name);
        Ok(id)
    }

    /// Adds the directed link `source -> target` and returns its id.
    pub fn add_link(&mut self, source: &str, target: &str) -> Result<usize> {
        let s = self.require(source)?;
        let t = self.require(target)?;
        if s == t {
            return Err(Error::Validation(format!("self-loop on node `{source}`")));
        }
        if !self.pairs.insert((s, t)) {
            return Err(Error::Validation(format!(
                "duplicate link `{source}` -> `{target}`"
            )));
        }
        self.links.push(Link { source: s, target: t });
        Ok(self.links.len() - 1)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.node_id(name)
            .ok_or_else(|| Error::Validation(format!("unknown node `{name}`")))
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn node_name(&self, id: usize) -> &str {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// `"SRC->DST"`, the name used for link columns in series files.
    pub fn link_name(&self, id: usize) -> String {
        let l = self.links[id];
        format!("{}->{}", self.nodes[l.source], self.nodes[l.target])
    }

    pub fn link_names(&self) -> Vec<String> {
        (0..self.links.len()).map(|i| self.link_name(i)).collect()
    }

    /// Rebuilds a topology from `"SRC->DST"` link names, in order.
    pub fn from_link_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut topo = NetworkTopology::new(Vec::<String>::new())?;
        for name in names {
            let name = name.as_ref();
            let (s, t) = name.split_once("->").ok_or_else(|| {
                Error::Validation(format!("link name `{name}` is not of the form SRC->DST"))
            })?;
            for n in [s, t] {
                if topo.node_id(n).is_none() {
                    topo.add_node(n)?;
                }
            }
            topo.add_link(s, t)?;
        }
        Ok(topo)
    }

    /// Ids of the links leaving each node, ascending by target index.
    pub(crate) fn out_links(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (id, l) in self.links.iter().enumerate() {
            out[l.source].push(id);
        }
        for list in &mut out {
            list.sort_by_key(|&id| self.links[id].target);
        }
        out
    }
}
