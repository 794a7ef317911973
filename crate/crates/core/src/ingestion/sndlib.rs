//! Reader for the subset of the SNDlib XML format used by traffic traces.
//!
//! Accepted grammar (namespaces are ignored, unknown elements are skipped):
//!
//! ```text
//! network          := <network> meta? networkStructure? demands? </network>
//! meta             := <meta> (<granularity>5min</granularity>)? (<time>YYYYMMDD-HHMM</time>)? ... </meta>
//! networkStructure := <networkStructure> <nodes> node* </nodes> <links> link* </links> </networkStructure>
//! node             := <node id="NAME"> ... </node>
//! link             := <link id="ID"> <source>NAME</source> <target>NAME</target> ... </link>
//! demands          := <demands> demand* </demands>
//! demand           := <demand id="ID"> <source>NAME</source> <target>NAME</target>
//!                       <demandValue>FLOAT</demandValue> </demand>
//! ```
//!
//! SNDlib links are undirected physical links; each one becomes the two
//! directed links `source->target` and `target->source`, in that order.
//! A dynamic trace is one network file holding the structure plus one file per
//! interval holding `meta` and `demands`. Demands from a node to itself carry
//! no link load and are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::ingestion::topology::NetworkTopology;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Demand {
    pub source: usize,
    pub target: usize,
    pub volume: f64,
}

/// Origin-destination demands of one interval.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DemandMatrix {
    pub time: Option<String>,
    pub demands: Vec<Demand>,
}

impl DemandMatrix {
    /// Dense `n x n` row-major matrix, repeated pairs summed.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for d in &self.demands {
            m[d.source * n + d.target] += d.volume;
        }
        m
    }
}

/// Topology and time-ordered demand matrices of one trace.
#[derive(Clone, Debug)]
pub struct SndlibTrace {
    pub topology: NetworkTopology,
    pub demands: Vec<DemandMatrix>,
    pub interval_minutes: Option<f64>,
}

fn parse_err(context: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.to_string(),
        message: message.into(),
    }
}

fn position(doc: &Document, node: Node) -> String {
    let p = doc.text_pos_at(node.range().start);
    format!("line {}, column {}", p.row, p.col)
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
}

fn children<'a, 'i>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == name)
}

fn child_text(doc: &Document, context: &str, node: Node, name: &str) -> Result<String> {
    child(node, name)
        .and_then(|c| c.text())
        .map(|t| t.trim().to_string())
        .ok_or_else(|| {
            parse_err(
                context,
                format!(
                    "<{}> at {} lacks a <{name}> child",
                    node.tag_name().name(),
                    position(doc, node)
                ),
            )
        })
}

fn parse_doc<'i>(text: &'i str, context: &str) -> Result<Document<'i>> {
    let doc = Document::parse(text).map_err(|e| parse_err(context, e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "network" {
        return Err(parse_err(
            context,
            format!("root element is <{}>, expected <network>", root.tag_name().name()),
        ));
    }
    Ok(doc)
}

/// Parses `"5min"`, `"15min"`, `"1h"` or a bare number of minutes.
pub fn parse_granularity(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(v) = s.strip_suffix("min") {
        v.trim().parse().ok()
    } else if let Some(v) = s.strip_suffix('h') {
        v.trim().parse::<f64>().ok().map(|h| h * 60.0)
    } else {
        s.parse().ok()
    }
}

fn parse_meta(doc: &Document) -> (Option<String>, Option<f64>) {
    let Some(meta) = child(doc.root_element(), "meta") else {
        return (None, None);
    };
    let time = child(meta, "time").and_then(|n| n.text()).map(|t| t.trim().to_string());
    let gran = child(meta, "granularity")
        .and_then(|n| n.text())
        .and_then(parse_granularity);
    (time, gran)
}

fn parse_structure(doc: &Document, context: &str) -> Result<NetworkTopology> {
    let root = doc.root_element();
    let structure = child(root, "networkStructure")
        .ok_or_else(|| parse_err(context, "missing <networkStructure>"))?;
    let nodes = child(structure, "nodes").ok_or_else(|| parse_err(context, "missing <nodes>"))?;
    let mut topo = NetworkTopology::new(Vec::<String>::new())?;
    for n in children(nodes, "node") {
        let id = n.attribute("id").ok_or_else(|| {
            parse_err(context, format!("<node> at {} has no id", position(doc, n)))
        })?;
        topo.add_node(id.trim())
            .map_err(|e| parse_err(context, format!("{e} at {}", position(doc, n))))?;
    }
    if let Some(links) = child(structure, "links") {
        for l in children(links, "link") {
            let src = child_text(doc, context, l, "source")?;
            let dst = child_text(doc, context, l, "target")?;
            let at = || {
                format!(
                    "link `{}` at {}",
                    l.attribute("id").unwrap_or("?"),
                    position(doc, l)
                )
            };
            topo.add_link(&src, &dst)
                .map_err(|e| Error::Validation(format!("{context}: {e} ({})", at())))?;
            topo.add_link(&dst, &src)
                .map_err(|e| Error::Validation(format!("{context}: {e} ({})", at())))?;
        }
    }
    Ok(topo)
}

fn parse_demand_block(
    doc: &Document,
    context: &str,
    topology: &NetworkTopology,
) -> Result<Option<Vec<Demand>>> {
    let Some(block) = child(doc.root_element(), "demands") else {
        return Ok(None);
    };
    let mut out = Vec::new();
    for d in children(block, "demand") {
        let src = child_text(doc, context, d, "source")?;
        let dst = child_text(doc, context, d, "target")?;
        let raw = child_text(doc, context, d, "demandValue")?;
        let volume: f64 = raw.parse().map_err(|_| {
            parse_err(
                context,
                format!("demandValue `{raw}` at {} is not a number", position(doc, d)),
            )
        })?;
        let lookup = |name: &str| {
            topology.node_id(name).ok_or_else(|| {
                Error::Validation(format!(
                    "{context}: demand `{}` at {} references unknown node `{name}`",
                    d.attribute("id").unwrap_or("?"),
                    position(doc, d)
                ))
            })
        };
        let (s, t) = (lookup(&src)?, lookup(&dst)?);
        if s != t {
            out.push(Demand {
                source: s,
                target: t,
                volume,
            });
        }
    }
    Ok(Some(out))
}

/// Parses a network file; an embedded `<demands>` block counts as one interval.
pub fn parse_network(text: &str, context: &str) -> Result<SndlibTrace> {
    let doc = parse_doc(text, context)?;
    let topology = parse_structure(&doc, context)?;
    let (time, gran) = parse_meta(&doc);
    let demands = parse_demand_block(&doc, context, &topology)?
        .map(|demands| vec![DemandMatrix { time, demands }])
        .unwrap_or_default();
    Ok(SndlibTrace {
        topology,
        demands,
        interval_minutes: gran,
    })
}

/// Parses one per-interval demand file against a known topology.
pub fn parse_demand_file(
    text: &str,
    context: &str,
    topology: &NetworkTopology,
) -> Result<(DemandMatrix, Option<f64>)> {
    let doc = parse_doc(text, context)?;
    let (time, gran) = parse_meta(&doc);
    let demands = parse_demand_block(&doc, context, topology)?
        .ok_or_else(|| parse_err(context, "missing <demands>"))?;
    Ok((DemandMatrix { time, demands }, gran))
}

/// Combines a network file with per-interval demand files, ordered by their
/// `<meta><time>` stamp (file order breaks ties and covers missing stamps).
pub fn parse_topology_and_demands(
    network: (&str, &str),
    demand_files: &[(&str, &str)],
) -> Result<SndlibTrace> {
    let (ctx, text) = network;
    let mut trace = parse_network(text, ctx)?;
    let mut parsed = Vec::with_capacity(demand_files.len());
    for (i, (ctx, text)) in demand_files.iter().enumerate() {
        let (m, gran) = parse_demand_file(text, ctx, &trace.topology)?;
        if trace.interval_minutes.is_none() {
            trace.interval_minutes = gran;
        }
        parsed.push((i, m));
    }
    parsed.sort_by(|(ia, a), (ib, b)| a.time.cmp(&b.time).then(ia.cmp(ib)));
    trace.demands.extend(parsed.into_iter().map(|(_, m)| m));
    Ok(trace)
}

/// Reads a network file and, optionally, every `*.xml` file in `demand_dir`
/// (sorted by file name before time ordering).
pub fn load_sndlib(network: &Path, demand_dir: Option<&Path>) -> Result<SndlibTrace> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
        })
    };
    let net_text = read(network)?;
    let mut files: Vec<PathBuf> = Vec::new();
    if let Some(dir) = demand_dir {
        for entry in fs::read_dir(dir).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display())))
        })? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "xml") {
                files.push(path);
            }
        }
        files.sort();
    }
    let texts: Vec<(String, String)> = files
        .iter()
        .map(|p| Ok((p.display().to_string(), read(p)?)))
        .collect::<Result<_>>()?;
    let refs: Vec<(&str, &str)> = texts.iter().map(|(c, t)| (c.as_str(), t.as_str())).collect();
    parse_topology_and_demands((&network.display().to_string(), &net_text), &refs)
}

/// Built-in Abilene backbone (12 nodes, 15 bidirectional links).
pub const ABILENE_XML: &str = include_str!("../../data/abilene.xml");

/// Built-in GEANT backbone (22 nodes, 36 bidirectional links).
pub const GEANT_XML: &str = include_str!("../../data/geant.xml");

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<?xml version="1.0"?>
<network xmlns="http://sndlib.zib.de/network">
  <meta><granularity>5min</granularity><time>20040301-0000</time></meta>
  <networkStructure>
    <nodes><node id="A"/><node id="B"/></nodes>
    <links><link id="A_B"><source>A</source><target>B</target></link></links>
  </networkStructure>
  <demands>
    <demand id="A_B"><source>A</source><target>B</target><demandValue>3.5</demandValue></demand>
    <demand id="B_A"><source>B</source><target>A</target><demandValue>1.0</demandValue></demand>
  </demands>
</network>"#;

    fn demand_doc(time: &str, value: f64, target: &str) -> String {
        format!(
            r#"<network><meta><time>{time}</time></meta><demands>
<demand id="d"><source>A</source><target>{target}</target><demandValue>{value}</demandValue></demand>
</demands></network>"#
        )
    }

    #[test]
    fn minimal_document() {
        let trace = parse_network(MINIMAL, "minimal").unwrap();
        assert_eq!(trace.topology.num_nodes(), 2);
        assert_eq!(trace.topology.num_links(), 2);
        assert_eq!(trace.demands.len(), 1);
        assert_eq!(trace.demands[0].dense(2), vec![0.0, 3.5, 1.0, 0.0]);
        assert_eq!(trace.interval_minutes, Some(5.0));
    }

    #[test]
    fn builtin_backbones_have_published_sizes() {
        let a = parse_network(ABILENE_XML, "abilene").unwrap();
        assert_eq!((a.topology.num_nodes(), a.topology.num_links()), (12, 30));
        let g = parse_network(GEANT_XML, "geant").unwrap();
        assert_eq!((g.topology.num_nodes(), g.topology.num_links()), (22, 72));
    }

    #[test]
    fn malformed_xml_reports_position() {
        let err = parse_network("<network><nodes></network>", "bad.xml").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(msg.contains("bad.xml") && msg.contains("1:"), "{msg}");
    }

    #[test]
    fn unknown_demand_node_is_a_validation_error() {
        let text = MINIMAL.replace("<target>A</target><demandValue>1.0", "<target>Q</target><demandValue>1.0");
        let err = parse_network(&text, "x").unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("`Q`")), "{err}");
    }

    #[test]
    fn demand_files_are_time_ordered() {
        let net = MINIMAL.replace("<demands>", "<ignored>").replace("</demands>", "</ignored>");
        let late = demand_doc("20040301-0010", 2.0, "B");
        let early = demand_doc("20040301-0005", 1.0, "B");
        let trace = parse_topology_and_demands(("net", &net), &[("late", &late), ("early", &early)]).unwrap();
        assert_eq!(trace.demands.len(), 2);
        assert_eq!(trace.demands[0].demands[0].volume, 1.0);
        assert_eq!(trace.demands[1].time.as_deref(), Some("20040301-0010"));
    }

    #[test]
    fn self_demands_are_skipped() {
        let net = parse_network(MINIMAL, "n").unwrap();
        let (m, _) = parse_demand_file(&demand_doc("t", 9.0, "A"), "d", &net.topology).unwrap();
        assert!(m.demands.is_empty());
    }

    #[test]
    fn granularity_forms() {
        assert_eq!(parse_granularity("15min"), Some(15.0));
        assert_eq!(parse_granularity("1h"), Some(60.0));
        assert_eq!(parse_granularity("bogus"), None);
    }
}
