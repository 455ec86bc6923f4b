//! Per-node feature extraction: a structural view counting edge events by
//! kind and direction, and a behavioral view of boolean sensitivity labels.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::event::{EdgeKind, NodeType, EDGE_KIND_COUNT};
use crate::graph::{NodeId, ProvenanceGraph};
use crate::matrix::Matrix;

/// Width of the structural view: incoming plus outgoing counts per kind.
pub const STRUCTURAL_DIM: usize = 2 * EDGE_KIND_COUNT;
/// Width of the behavioral view.
pub const BEHAVIORAL_DIM: usize = 20;

/// Behavioral label positions. The four `*0` labels are type indicators;
/// exactly one of them is set per node, and the remaining labels of other
/// types stay zero.
pub mod label {
    pub const PL0: usize = 0;
    pub const PL1: usize = 1;
    pub const PL2: usize = 2;
    pub const PL3: usize = 3;
    pub const PL4: usize = 4;
    pub const PL5: usize = 5;
    pub const PL6: usize = 6;
    pub const PL7: usize = 7;
    pub const PL8: usize = 8;
    pub const PL9: usize = 9;
    pub const PL10: usize = 10;
    pub const FL0: usize = 11;
    pub const FL1: usize = 12;
    pub const FL2: usize = 13;
    pub const FL3: usize = 14;
    pub const FL4: usize = 15;
    pub const NL0: usize = 16;
    pub const NL1: usize = 17;
    pub const RL0: usize = 18;
    pub const RL1: usize = 19;

    pub const NAMES: [&str; super::BEHAVIORAL_DIM] = [
        "PL0", "PL1", "PL2", "PL3", "PL4", "PL5", "PL6", "PL7", "PL8", "PL9", "PL10", "FL0",
        "FL1", "FL2", "FL3", "FL4", "NL0", "NL1", "RL0", "RL1",
    ];
}

/// Match `text` against a pattern where `*` spans any sequence and `?`
/// matches one character, ASCII case-insensitively.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p = pattern.as_bytes();
    let t = text.as_bytes();
    let (mut pi, mut ti) = (0usize, 0usize);
    let (mut star_pi, mut star_ti) = (usize::MAX, 0usize);
    while ti < t.len() {
        if pi < p.len() && (p[pi] == b'?' || p[pi].to_ascii_lowercase() == t[ti].to_ascii_lowercase())
        {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == b'*' {
            star_pi = pi;
            star_ti = ti;
            pi += 1;
        } else if star_pi != usize::MAX {
            pi = star_pi + 1;
            star_ti += 1;
            ti = star_ti;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == b'*' {
        pi += 1;
    }
    pi == p.len()
}

fn matches_any(patterns: &[String], text: &str) -> bool {
    patterns.iter().any(|p| glob_match(p, text))
}

/// Patterns and indicator lists that define the behavioral labels.
///
/// Pattern lists use [`glob_match`] semantics; IoC sets are exact string
/// matches. Paths and names compare ASCII case-insensitively through the
/// glob matcher, IoC entries compare verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityConfig {
    /// Glob patterns over file paths considered sensitive.
    pub sensitive_files: Vec<String>,
    /// Glob patterns over process images considered sensitive.
    pub sensitive_processes: Vec<String>,
    /// Command names (file stems) considered sensitive instructions.
    pub sensitive_instructions: Vec<String>,
    /// Known-bad socket addresses.
    pub ioc_addresses: BTreeSet<String>,
    /// Known-bad file content hashes.
    pub ioc_file_hashes: BTreeSet<String>,
    /// Known-bad registry keys.
    pub ioc_registry_keys: BTreeSet<String>,
}

impl Default for SensitivityConfig {
    fn default() -> SensitivityConfig {
        let owned = |items: &[&str]| items.iter().map(|s| String::from(*s)).collect::<Vec<_>>();
        SensitivityConfig {
            sensitive_files: owned(&[
                "/etc/passwd",
                "/etc/shadow",
                "/etc/sudoers",
                "*/.ssh/*",
                "*.pem",
                "*.key",
                "*/secrets/*",
                "*/credentials*",
            ]),
            sensitive_processes: owned(&["*mimikatz*", "*psexec*", "*procdump*", "*lazagne*"]),
            sensitive_instructions: owned(&[
                "whoami",
                "systeminfo",
                "tasklist",
                "ipconfig",
                "netstat",
                "hostname",
                "quser",
            ]),
            ioc_addresses: BTreeSet::new(),
            ioc_file_hashes: BTreeSet::new(),
            ioc_registry_keys: BTreeSet::new(),
        }
    }
}

/// Structural view: one row per node; columns 0..21 count incoming events
/// by edge kind, columns 21..42 count outgoing events. Counts include
/// multiplicities.
pub fn structural_features(graph: &ProvenanceGraph) -> Matrix {
    let mut out = Matrix::zeros(graph.node_count(), STRUCTURAL_DIM);
    for e in graph.edges() {
        let col = (e.kind.index() - 1) as usize;
        let m = e.multiplicity as f64;
        *out.row_mut(e.dst).get_mut(col).unwrap() += m;
        *out.row_mut(e.src).get_mut(EDGE_KIND_COUNT + col).unwrap() += m;
    }
    out
}

/// The file path used for label matching: the `path` attribute when
/// present, otherwise the entity key.
fn node_path<'a>(graph: &'a ProvenanceGraph, id: NodeId, attr: &str) -> &'a str {
    graph.attr(id, attr).unwrap_or_else(|| graph.key(id))
}

/// Last path component of `text`, without its extension.
fn command_stem(text: &str) -> &str {
    let base = text
        .rsplit(|c| c == '/' || c == '\\')
        .next()
        .unwrap_or(text);
    match base.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem,
        _ => base,
    }
}

/// Behavioral view: one row per node holding the 20 labels as 0/1 values,
/// ordered PL0..PL10, FL0..FL4, NL0..NL1, RL0..RL1.
pub fn behavioral_features(graph: &ProvenanceGraph, config: &SensitivityConfig) -> Matrix {
    let n = graph.node_count();

    // Files considered network-derived: written by a process that also
    // received from a socket.
    let receivers: BTreeSet<NodeId> = graph
        .edges()
        .iter()
        .filter(|e| e.kind == EdgeKind::SocketReceive)
        .map(|e| e.src)
        .collect();
    let senders: BTreeSet<NodeId> = graph
        .edges()
        .iter()
        .filter(|e| e.kind == EdgeKind::SocketSend)
        .map(|e| e.src)
        .collect();
    let from_network: BTreeSet<NodeId> = graph
        .edges()
        .iter()
        .filter(|e| e.kind == EdgeKind::FileWrite && receivers.contains(&e.src))
        .map(|e| e.dst)
        .collect();
    let deleted: BTreeSet<NodeId> = graph
        .edges()
        .iter()
        .filter(|e| e.kind == EdgeKind::FileDelete)
        .map(|e| e.dst)
        .collect();
    let from_network_paths: BTreeSet<String> = from_network
        .iter()
        .map(|&f| node_path(graph, f, "path").to_ascii_lowercase())
        .collect();
    let sensitive_files: BTreeSet<NodeId> = (0..n)
        .filter(|&id| {
            graph.node_type(id) == NodeType::File
                && matches_any(&config.sensitive_files, node_path(graph, id, "path"))
        })
        .collect();

    let mut out = Matrix::zeros(n, BEHAVIORAL_DIM);
    for id in 0..n {
        let row = out.row_mut(id);
        match graph.node_type(id) {
            NodeType::Process => row[label::PL0] = 1.0,
            NodeType::File => row[label::FL0] = 1.0,
            NodeType::Socket => row[label::NL0] = 1.0,
            NodeType::Registry => row[label::RL0] = 1.0,
        }
    }

    for id in graph.process_ids() {
        let mut set = |l: usize| out.set(id, l, 1.0);
        for &eid in graph.out_edge_ids(id) {
            let e = graph.edge(eid);
            let dst = e.dst;
            match e.kind {
                EdgeKind::Launch => {
                    let image = node_path(graph, dst, "image");
                    if from_network_paths.contains(&image.to_ascii_lowercase()) {
                        set(label::PL4);
                    }
                    if matches_any(&config.sensitive_processes, image) {
                        set(label::PL8);
                    }
                    if let Some(cmd) = graph.attr(dst, "cmd") {
                        if let Some(first) = cmd.split_whitespace().next() {
                            let stem = command_stem(first);
                            if config
                                .sensitive_instructions
                                .iter()
                                .any(|i| i.eq_ignore_ascii_case(stem))
                            {
                                set(label::PL9);
                            }
                        }
                    }
                }
                EdgeKind::FileRead => {
                    if from_network.contains(&dst) {
                        set(label::PL2);
                    }
                    if sensitive_files.contains(&dst) {
                        set(label::PL6);
                    }
                }
                EdgeKind::FileWrite => {
                    if from_network.contains(&dst) {
                        set(label::PL3);
                    }
                    if sensitive_files.contains(&dst) {
                        set(label::PL7);
                    }
                }
                EdgeKind::RegistryModify => set(label::PL10),
                _ => {}
            }
            if e.kind.object_type() == NodeType::Socket {
                set(label::PL1);
            }
            if e.kind.object_type() == NodeType::File && deleted.contains(&dst) {
                set(label::PL5);
            }
        }
    }

    for id in 0..n {
        match graph.node_type(id) {
            NodeType::File => {
                if sensitive_files.contains(&id) {
                    out.set(id, label::FL1, 1.0);
                }
                let uploaded = graph
                    .in_edge_ids(id)
                    .iter()
                    .any(|&eid| {
                        let e = graph.edge(eid);
                        e.kind == EdgeKind::FileRead && senders.contains(&e.src)
                    });
                if uploaded {
                    out.set(id, label::FL2, 1.0);
                }
                if from_network.contains(&id) {
                    out.set(id, label::FL3, 1.0);
                }
                if let Some(hash) = graph.attr(id, "hash") {
                    if config.ioc_file_hashes.contains(hash) {
                        out.set(id, label::FL4, 1.0);
                    }
                }
            }
            NodeType::Socket => {
                let addr = node_path(graph, id, "addr");
                if config.ioc_addresses.contains(addr) {
                    out.set(id, label::NL1, 1.0);
                }
            }
            NodeType::Registry => {
                let key = node_path(graph, id, "key");
                if config.ioc_registry_keys.contains(key) {
                    out.set(id, label::RL1, 1.0);
                }
            }
            NodeType::Process => {}
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::EventRecord;
    use crate::graph::build_graph;
    use alloc::vec;

    fn ev(ts: i64, sub: &str, act: &str, obj: &str, obj_t: NodeType) -> EventRecord {
        EventRecord::new(ts, sub, act, obj, obj_t).unwrap()
    }

    #[test]
    fn glob_matcher_table() {
        let cases = [
            ("*.pem", "id_rsa.pem", true),
            ("*.pem", "ID_RSA.PEM", true),
            ("*.pem", "pem", false),
            ("*/.ssh/*", "/home/u/.ssh/id_rsa", true),
            ("*/.ssh/*", "/home/u/.ssh", false),
            ("/etc/passwd", "/etc/passwd", true),
            ("/etc/passwd", "/etc/passwd.bak", false),
            ("a?c", "abc", true),
            ("a?c", "ac", false),
            ("*", "", true),
            ("**a*", "bca", true),
            ("", "", true),
            ("", "x", false),
        ];
        for (pat, text, want) in cases {
            assert_eq!(glob_match(pat, text), want, "{pat:?} vs {text:?}");
        }
    }

    #[test]
    fn command_stem_strips_dirs_and_extension() {
        assert_eq!(command_stem("whoami"), "whoami");
        assert_eq!(command_stem("/usr/bin/whoami"), "whoami");
        assert_eq!(command_stem("C:\\Windows\\System32\\whoami.exe"), "whoami");
        assert_eq!(command_stem(".hidden"), ".hidden");
    }

    #[test]
    fn structural_counts_match_brute_force_tally() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
        let mut events = Vec::new();
        for i in 0..800 {
            let sub = alloc::format!("p{}", rng.gen_range(0..12));
            let kind = EdgeKind::ALL[rng.gen_range(0..EdgeKind::ALL.len())];
            let obj = match kind.object_type() {
                NodeType::Process => alloc::format!("p{}", rng.gen_range(0..12)),
                NodeType::File => alloc::format!("f{}", rng.gen_range(0..12)),
                NodeType::Registry => alloc::format!("r{}", rng.gen_range(0..12)),
                NodeType::Socket => alloc::format!("s{}", rng.gen_range(0..12)),
            };
            events.push(ev(i, &sub, kind.action(), &obj, kind.object_type()));
        }
        let graph = build_graph(&events).unwrap();
        let feats = structural_features(&graph);

        // Oracle: tally the raw events per node without going through the
        // graph's collapsed edges.
        let mut expect = Matrix::zeros(graph.node_count(), STRUCTURAL_DIM);
        for e in &events {
            let kind = e.edge_kind().unwrap();
            let col = (kind.index() - 1) as usize;
            let src = graph.node_id(&e.sub).unwrap();
            let dst = graph.node_id(&e.obj).unwrap();
            expect.set(dst, col, expect.get(dst, col) + 1.0);
            let ocol = EDGE_KIND_COUNT + col;
            expect.set(src, ocol, expect.get(src, ocol) + 1.0);
        }
        assert_eq!(feats, expect);
    }

    #[test]
    fn launch_occupies_first_column_pair() {
        let events = vec![ev(1, "p1", "launch", "p2", NodeType::Process)];
        let graph = build_graph(&events).unwrap();
        let feats = structural_features(&graph);
        let p1 = graph.node_id("p1").unwrap();
        let p2 = graph.node_id("p2").unwrap();
        assert_eq!(feats.get(p1, EDGE_KIND_COUNT), 1.0);
        assert_eq!(feats.get(p2, 0), 1.0);
        assert_eq!(feats.row(p1).iter().sum::<f64>(), 1.0);
        assert_eq!(feats.row(p2).iter().sum::<f64>(), 1.0);
    }

    fn default_config() -> SensitivityConfig {
        SensitivityConfig::default()
    }

    #[test]
    fn exactly_one_type_indicator_per_node() {
        let events = vec![
            ev(1, "p1", "launch", "p2", NodeType::Process),
            ev(2, "p2", "write", "f1", NodeType::File),
            ev(3, "p2", "send", "s1", NodeType::Socket),
            ev(4, "p1", "modify", "r1", NodeType::Registry),
        ];
        let graph = build_graph(&events).unwrap();
        let feats = behavioral_features(&graph, &default_config());
        for id in 0..graph.node_count() {
            let row = feats.row(id);
            let indicators =
                row[label::PL0] + row[label::FL0] + row[label::NL0] + row[label::RL0];
            assert_eq!(indicators, 1.0, "node {}", graph.key(id));
            // Labels of other types stay zero.
            let groups: [(usize, usize, NodeType); 4] = [
                (label::PL0, label::PL10, NodeType::Process),
                (label::FL0, label::FL4, NodeType::File),
                (label::NL0, label::NL1, NodeType::Socket),
                (label::RL0, label::RL1, NodeType::Registry),
            ];
            for (lo, hi, ty) in groups {
                if graph.node_type(id) != ty {
                    assert!(row[lo..=hi].iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn network_derived_file_chain_sets_pl2_pl3_pl4_fl3() {
        let events = vec![
            // downloader receives from a socket and writes the payload
            ev(1, "down", "receive", "s1", NodeType::Socket),
            ev(2, "down", "write", "/tmp/payload", NodeType::File)
                .with_attr("path", "/tmp/payload"),
            // reader and rewriter touch the payload
            ev(3, "reader", "read", "/tmp/payload", NodeType::File),
            ev(4, "rewriter", "write", "/tmp/payload", NodeType::File),
            // runner executes a child whose image is the payload path
            ev(5, "runner", "launch", "child", NodeType::Process)
                .with_attr("image", "/tmp/payload"),
            // bystander writes an unrelated file
            ev(6, "bystander", "write", "/tmp/log", NodeType::File),
        ];
        let graph = build_graph(&events).unwrap();
        let feats = behavioral_features(&graph, &default_config());
        let at = |key: &str, l: usize| feats.get(graph.node_id(key).unwrap(), l);

        assert_eq!(at("reader", label::PL2), 1.0);
        assert_eq!(at("rewriter", label::PL3), 1.0);
        assert_eq!(at("runner", label::PL4), 1.0);
        assert_eq!(at("/tmp/payload", label::FL3), 1.0);
        assert_eq!(at("/tmp/log", label::FL3), 0.0);
        assert_eq!(at("bystander", label::PL3), 0.0);
        assert_eq!(at("down", label::PL1), 1.0);
        assert_eq!(at("down", label::PL3), 1.0, "writer itself is a receiver");
    }

    #[test]
    fn deleted_file_interaction_sets_pl5() {
        let events = vec![
            ev(1, "cleaner", "delete", "f1", NodeType::File),
            ev(2, "toucher", "open", "f1", NodeType::File),
            ev(3, "other", "read", "f2", NodeType::File),
        ];
        let graph = build_graph(&events).unwrap();
        let feats = behavioral_features(&graph, &default_config());
        let at = |key: &str, l: usize| feats.get(graph.node_id(key).unwrap(), l);
        assert_eq!(at("cleaner", label::PL5), 1.0);
        assert_eq!(at("toucher", label::PL5), 1.0);
        assert_eq!(at("other", label::PL5), 0.0);
    }

    #[test]
    fn sensitive_file_and_instruction_labels() {
        let events = vec![
            ev(1, "spy", "read", "/etc/passwd", NodeType::File),
            ev(2, "editor", "write", "/home/u/.ssh/config", NodeType::File),
            ev(3, "recon", "launch", "c1", NodeType::Process)
                .with_attr("cmd", "/usr/bin/whoami -a"),
            ev(4, "builder", "launch", "c2", NodeType::Process)
                .with_attr("cmd", "make all"),
            ev(5, "dropper", "launch", "c3", NodeType::Process)
                .with_attr("image", "/opt/tools/Mimikatz.exe"),
        ];
        let graph = build_graph(&events).unwrap();
        let feats = behavioral_features(&graph, &default_config());
        let at = |key: &str, l: usize| feats.get(graph.node_id(key).unwrap(), l);

        assert_eq!(at("spy", label::PL6), 1.0);
        assert_eq!(at("editor", label::PL7), 1.0);
        assert_eq!(at("/etc/passwd", label::FL1), 1.0);
        assert_eq!(at("/home/u/.ssh/config", label::FL1), 1.0);
        assert_eq!(at("recon", label::PL9), 1.0);
        assert_eq!(at("builder", label::PL9), 0.0);
        assert_eq!(at("dropper", label::PL8), 1.0);
    }

    #[test]
    fn upload_and_ioc_labels() {
        let mut config = default_config();
        config.ioc_addresses.insert(String::from("10.9.9.9:443"));
        config.ioc_registry_keys.insert(String::from("hklm/run/evil"));
        config.ioc_file_hashes.insert(String::from("deadbeef"));

        let events = vec![
            ev(1, "exfil", "read", "/data/report", NodeType::File),
            ev(2, "exfil", "send", "10.9.9.9:443", NodeType::Socket),
            ev(3, "idle", "read", "/data/other", NodeType::File),
            ev(4, "reg", "modify", "hklm/run/evil", NodeType::Registry),
            ev(5, "drop", "write", "/tmp/mal", NodeType::File).with_attr("hash", "deadbeef"),
        ];
        let graph = build_graph(&events).unwrap();
        let feats = behavioral_features(&graph, &config);
        let at = |key: &str, l: usize| feats.get(graph.node_id(key).unwrap(), l);

        assert_eq!(at("/data/report", label::FL2), 1.0);
        assert_eq!(at("/data/other", label::FL2), 0.0);
        assert_eq!(at("10.9.9.9:443", label::NL1), 1.0);
        assert_eq!(at("hklm/run/evil", label::RL1), 1.0);
        assert_eq!(at("/tmp/mal", label::FL4), 1.0);
        assert_eq!(at("reg", label::PL10), 1.0);
        assert_eq!(at("exfil", label::PL1), 1.0);
    }
}
