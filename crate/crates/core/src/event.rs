//! Audit events and the monitored-event taxonomy.
//!
//! Every audit record is a triad: a process (the only entity type that
//! initiates events) performs an action on an object entity. The action
//! vocabulary is fixed per (subject, object) type pair, giving 21 edge
//! kinds total. The canonical numbering runs row by row, actions left to
//! right: launch = 1, the six file actions = 2..=7, the six registry
//! actions = 8..=13, the eight socket actions = 14..=21.

use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;
use serde::{Deserialize, Serialize};

/// The four system entity types appearing in a provenance graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Process,
    File,
    Registry,
    Socket,
}

impl NodeType {
    pub const ALL: [NodeType; 4] = [
        NodeType::Process,
        NodeType::File,
        NodeType::Registry,
        NodeType::Socket,
    ];

    /// Dense index used as the class label in node-type classification.
    pub fn class_index(self) -> usize {
        match self {
            NodeType::Process => 0,
            NodeType::File => 1,
            NodeType::Registry => 2,
            NodeType::Socket => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeType::Process => "process",
            NodeType::File => "file",
            NodeType::Registry => "registry",
            NodeType::Socket => "socket",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the 21 monitored event kinds, identified by (subject type,
/// object type, action). The subject is always a process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Launch,
    FileCreate,
    FileRead,
    FileWrite,
    FileClose,
    FileDelete,
    FileOpen,
    RegistryOpen,
    RegistryQuery,
    RegistryEnumerate,
    RegistryModify,
    RegistryClose,
    RegistryDelete,
    SocketSend,
    SocketReceive,
    SocketRetransmit,
    SocketCopy,
    SocketConnect,
    SocketDisconnect,
    SocketAccept,
    SocketReconnect,
}

pub const EDGE_KIND_COUNT: usize = 21;

impl EdgeKind {
    pub const ALL: [EdgeKind; EDGE_KIND_COUNT] = [
        EdgeKind::Launch,
        EdgeKind::FileCreate,
        EdgeKind::FileRead,
        EdgeKind::FileWrite,
        EdgeKind::FileClose,
        EdgeKind::FileDelete,
        EdgeKind::FileOpen,
        EdgeKind::RegistryOpen,
        EdgeKind::RegistryQuery,
        EdgeKind::RegistryEnumerate,
        EdgeKind::RegistryModify,
        EdgeKind::RegistryClose,
        EdgeKind::RegistryDelete,
        EdgeKind::SocketSend,
        EdgeKind::SocketReceive,
        EdgeKind::SocketRetransmit,
        EdgeKind::SocketCopy,
        EdgeKind::SocketConnect,
        EdgeKind::SocketDisconnect,
        EdgeKind::SocketAccept,
        EdgeKind::SocketReconnect,
    ];

    /// Canonical 1-based index in the monitored-event table.
    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    /// Inverse of [`EdgeKind::index`].
    pub fn from_index(index: u8) -> Option<EdgeKind> {
        if (1..=EDGE_KIND_COUNT as u8).contains(&index) {
            Some(Self::ALL[index as usize - 1])
        } else {
            None
        }
    }

    /// Object entity type this edge kind points at (subjects are always
    /// processes).
    pub fn object_type(self) -> NodeType {
        match self {
            EdgeKind::Launch => NodeType::Process,
            EdgeKind::FileCreate
            | EdgeKind::FileRead
            | EdgeKind::FileWrite
            | EdgeKind::FileClose
            | EdgeKind::FileDelete
            | EdgeKind::FileOpen => NodeType::File,
            EdgeKind::RegistryOpen
            | EdgeKind::RegistryQuery
            | EdgeKind::RegistryEnumerate
            | EdgeKind::RegistryModify
            | EdgeKind::RegistryClose
            | EdgeKind::RegistryDelete => NodeType::Registry,
            EdgeKind::SocketSend
            | EdgeKind::SocketReceive
            | EdgeKind::SocketRetransmit
            | EdgeKind::SocketCopy
            | EdgeKind::SocketConnect
            | EdgeKind::SocketDisconnect
            | EdgeKind::SocketAccept
            | EdgeKind::SocketReconnect => NodeType::Socket,
        }
    }

    /// (subject type, object type) pair of the edge kind.
    pub fn pair(self) -> (NodeType, NodeType) {
        (NodeType::Process, self.object_type())
    }

    /// Action name as it appears on the wire.
    pub fn action(self) -> &'static str {
        match self {
            EdgeKind::Launch => "launch",
            EdgeKind::FileCreate => "create",
            EdgeKind::FileRead => "read",
            EdgeKind::FileWrite => "write",
            EdgeKind::FileClose => "close",
            EdgeKind::FileDelete => "delete",
            EdgeKind::FileOpen => "open",
            EdgeKind::RegistryOpen => "open",
            EdgeKind::RegistryQuery => "query",
            EdgeKind::RegistryEnumerate => "enumerate",
            EdgeKind::RegistryModify => "modify",
            EdgeKind::RegistryClose => "close",
            EdgeKind::RegistryDelete => "delete",
            EdgeKind::SocketSend => "send",
            EdgeKind::SocketReceive => "receive",
            EdgeKind::SocketRetransmit => "retransmit",
            EdgeKind::SocketCopy => "copy",
            EdgeKind::SocketConnect => "connect",
            EdgeKind::SocketDisconnect => "disconnect",
            EdgeKind::SocketAccept => "accept",
            EdgeKind::SocketReconnect => "reconnect",
        }
    }

    /// Resolve an edge kind from the triad's type pair and action name.
    /// Returns `None` for combinations outside the monitored-event table.
    pub fn from_parts(subject_type: NodeType, object_type: NodeType, action: &str) -> Option<EdgeKind> {
        if subject_type != NodeType::Process {
            return None;
        }
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.object_type() == object_type && k.action() == action)
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "process-{}/{}", self.object_type(), self.action())
    }
}

/// Canonical index for a (subject type, object type, action) triple.
pub fn edge_type_index(
    subject_type: NodeType,
    object_type: NodeType,
    action: &str,
) -> Result<u8, EventError> {
    EdgeKind::from_parts(subject_type, object_type, action)
        .map(EdgeKind::index)
        .ok_or_else(|| EventError::UnknownAction {
            subject_type,
            object_type,
            action: action.into(),
        })
}

/// One parsed audit event.
///
/// Field names mirror the JSON-Lines wire schema: `ts`, `sub`, `sub_t`,
/// `act`, `obj`, `obj_t`, `attrs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    /// Timestamp in nanoseconds.
    pub ts: i64,
    /// Subject entity key. Subjects are always processes.
    pub sub: String,
    pub sub_t: NodeType,
    /// Action name, validated against the monitored-event table.
    pub act: String,
    /// Object entity key.
    pub obj: String,
    pub obj_t: NodeType,
    /// Free-form attributes of the interaction. By convention they
    /// describe the object entity (file `path`, socket `addr`, registry
    /// `key`, launched-process `cmd` and `image`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, String>,
}

impl EventRecord {
    /// Build a record, enforcing the triad invariants: the subject must be
    /// a process and the action must be valid for the type pair.
    pub fn new(
        ts: i64,
        sub: impl Into<String>,
        act: impl Into<String>,
        obj: impl Into<String>,
        obj_t: NodeType,
    ) -> Result<EventRecord, EventError> {
        let record = EventRecord {
            ts,
            sub: sub.into(),
            sub_t: NodeType::Process,
            act: act.into(),
            obj: obj.into(),
            obj_t,
            attrs: BTreeMap::new(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<String>) -> EventRecord {
        self.attrs.insert(key.into(), value.into());
        self
    }

    /// Check the triad invariants without consuming the record.
    pub fn validate(&self) -> Result<(), EventError> {
        if self.sub_t != NodeType::Process {
            return Err(EventError::NonProcessSubject { subject_type: self.sub_t });
        }
        self.edge_kind().map(|_| ())
    }

    /// Resolved edge kind of this event.
    pub fn edge_kind(&self) -> Result<EdgeKind, EventError> {
        EdgeKind::from_parts(self.sub_t, self.obj_t, &self.act).ok_or_else(|| {
            EventError::UnknownAction {
                subject_type: self.sub_t,
                object_type: self.obj_t,
                action: self.act.clone(),
            }
        })
    }
}

/// Schema violations in an audit event triad.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventError {
    /// Only processes initiate events.
    NonProcessSubject { subject_type: NodeType },
    /// The (type pair, action) combination is not in the monitored-event
    /// table.
    UnknownAction {
        subject_type: NodeType,
        object_type: NodeType,
        action: String,
    },
}

impl fmt::Display for EventError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventError::NonProcessSubject { subject_type } => {
                write!(f, "event subject must be a process, got {subject_type}")
            }
            EventError::UnknownAction {
                subject_type,
                object_type,
                action,
            } => write!(
                f,
                "action {action:?} is not monitored for the {subject_type}-{object_type} pair"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EventError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec::Vec;

    #[test]
    fn launch_is_index_one() {
        assert_eq!(
            edge_type_index(NodeType::Process, NodeType::Process, "launch").unwrap(),
            1
        );
    }

    #[test]
    fn file_open_is_index_seven() {
        assert_eq!(
            edge_type_index(NodeType::Process, NodeType::File, "open").unwrap(),
            7
        );
    }

    #[test]
    fn indices_are_a_bijection_onto_1_to_21() {
        // Brute-force enumeration of the monitored-event table rows.
        let table: [(NodeType, &[&str]); 4] = [
            (NodeType::Process, &["launch"]),
            (NodeType::File, &["create", "read", "write", "close", "delete", "open"]),
            (
                NodeType::Registry,
                &["open", "query", "enumerate", "modify", "close", "delete"],
            ),
            (
                NodeType::Socket,
                &[
                    "send",
                    "receive",
                    "retransmit",
                    "copy",
                    "connect",
                    "disconnect",
                    "accept",
                    "reconnect",
                ],
            ),
        ];
        let mut seen = BTreeSet::new();
        let mut total = 0usize;
        for (obj_t, actions) in table {
            for act in actions {
                let idx = edge_type_index(NodeType::Process, obj_t, act).unwrap();
                assert!((1..=21).contains(&idx));
                assert!(seen.insert(idx), "index {idx} assigned twice");
                total += 1;
            }
        }
        assert_eq!(total, 21);
        assert_eq!(seen.len(), 21);
        // Round-trip through from_index.
        for kind in EdgeKind::ALL {
            assert_eq!(EdgeKind::from_index(kind.index()), Some(kind));
        }
        assert_eq!(EdgeKind::from_index(0), None);
        assert_eq!(EdgeKind::from_index(22), None);
    }

    #[test]
    fn send_is_invalid_for_files() {
        let err = edge_type_index(NodeType::Process, NodeType::File, "send").unwrap_err();
        assert!(matches!(err, EventError::UnknownAction { .. }));
    }

    #[test]
    fn subject_must_be_process() {
        let record = EventRecord {
            ts: 1,
            sub: "f1".into(),
            sub_t: NodeType::File,
            act: "read".into(),
            obj: "f2".into(),
            obj_t: NodeType::File,
            attrs: BTreeMap::new(),
        };
        assert!(matches!(
            record.validate(),
            Err(EventError::NonProcessSubject { .. })
        ));
    }

    #[test]
    fn minimal_launch_record() {
        let record = EventRecord::new(1, "p1", "launch", "p2", NodeType::Process).unwrap();
        assert_eq!(record.edge_kind().unwrap(), EdgeKind::Launch);
        assert_eq!(record.sub, "p1");
        assert_eq!(record.obj, "p2");
    }

    #[test]
    fn wire_field_names_round_trip() {
        let record = EventRecord::new(2, "p1", "write", "f1", NodeType::File)
            .unwrap()
            .with_attr("path", "/tmp/out.log");
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains("\"sub_t\":\"process\""));
        assert!(json.contains("\"obj_t\":\"file\""));
        let back: EventRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn actions_resolve_object_types() {
        let kinds: Vec<EdgeKind> = EdgeKind::ALL.into();
        for kind in kinds {
            assert_eq!(
                EdgeKind::from_parts(NodeType::Process, kind.object_type(), kind.action()),
                Some(kind)
            );
        }
    }
}
