//! Synthetic audit-log scenarios with known ground truth.
//!
//! The benign background is a library of workload templates arranged in a
//! two-level launch tree (init, session managers, interactive and system
//! daemons, leaf workers). Attack plants come in two deliberately opposite
//! flavors:
//!
//! * ransomware: file and registry event counts at least twenty times the
//!   benign per-process mean, but almost no sensitive-behavior labels
//!   (a structural deviant);
//! * collection/exfiltration: sensitive-file reads, sensitive-instruction
//!   launches, and socket traffic to threat-intel addresses, with total
//!   degree kept within twice the benign mean (a behavioral deviant).
//!
//! Everything is drawn from a single seeded generator, so a spec produces
//! the same byte stream every time.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::event::{EdgeKind, EventRecord, NodeType};
use crate::features::SensitivityConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Structural deviants only.
    RansomwareBurst,
    /// Behavioral deviants only.
    CollectionExfiltration,
    /// No plants at all.
    BenignBackground,
    /// Both plant families over the same background.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Approximate benign process population.
    pub processes: usize,
    /// Lower bound on emitted events; operation counts are scaled up
    /// uniformly when the natural volume falls short.
    pub min_events: usize,
    pub rng_seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> ScenarioSpec {
        ScenarioSpec {
            kind: ScenarioKind::Mixed,
            processes: 640,
            min_events: 10_000,
            rng_seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    TooSmall {
        field: &'static str,
        minimum: usize,
        got: usize,
    },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ScenarioError::TooSmall { field, minimum, got } = self;
        write!(f, "{field} = {got} is below the minimum viable size {minimum}")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub events: Vec<EventRecord>,
    /// One entry per process key; plants are true.
    pub truth: BTreeMap<String, bool>,
    /// The planted keys, sorted.
    pub plants: Vec<String>,
}

impl ScenarioSpec {
    /// The sensitivity configuration the scenarios are written against:
    /// library defaults plus the threat-intel indicators used by the
    /// exfiltration and ransomware plants.
    pub fn sensitivity(&self) -> SensitivityConfig {
        let mut config = SensitivityConfig::default();
        let n = plant_count(self.processes);
        for i in 0..n {
            config.ioc_addresses.insert(c2_address(i));
            config.ioc_file_hashes.insert(stage_hash(i));
        }
        config
            .ioc_registry_keys
            .insert(String::from(RANSOM_PERSISTENCE_KEY));
        config
    }
}

const RANSOM_PERSISTENCE_KEY: &str = "hklm/software/cryptolock/run";

fn plant_count(processes: usize) -> usize {
    (processes / 60).max(2)
}

fn c2_address(i: usize) -> String {
    format!("185.220.101.{}:443", i % 250)
}

fn stage_hash(i: usize) -> String {
    format!("5f4dcc3b5aa765d61d8327deb882cf99{i:04x}")
}

/// Event sink with a monotone timestamp.
struct Emitter {
    events: Vec<EventRecord>,
    ts: i64,
    /// Multiplier applied to every non-launch operation count.
    scale: u32,
}

impl Emitter {
    fn new(scale: u32) -> Emitter {
        Emitter {
            events: Vec::new(),
            ts: 0,
            scale,
        }
    }

    fn next_ts(&mut self) -> i64 {
        self.ts += 10;
        self.ts
    }

    fn launch(&mut self, parent: &str, child: &str, image: &str, cmd: &str) {
        let ts = self.next_ts();
        self.events.push(
            EventRecord::new(ts, parent, "launch", child, NodeType::Process)
                .expect("launch triad is valid")
                .with_attr("image", image)
                .with_attr("cmd", cmd),
        );
    }

    fn op(&mut self, process: &str, kind: EdgeKind, object: &str, times: u32) {
        self.op_with(process, kind, object, times, &[]);
    }

    fn op_with(
        &mut self,
        process: &str,
        kind: EdgeKind,
        object: &str,
        times: u32,
        attrs: &[(&str, &str)],
    ) {
        for _ in 0..times * self.scale {
            let ts = self.next_ts();
            let mut record =
                EventRecord::new(ts, process, kind.action(), object, kind.object_type())
                    .expect("operation triad is valid");
            for (k, v) in attrs {
                record = record.with_attr(*k, *v);
            }
            self.events.push(record);
        }
    }
}

/// Per-template population sizes derived from the process knob.
struct Census {
    managers: usize,
    workers_per_manager: usize,
    desktops: usize,
    crons: usize,
    editors: usize,
    indexers: usize,
    loggers: usize,
    browsers: usize,
    utilities: usize,
    idlers: usize,
    backups: usize,
}

impl Census {
    fn for_processes(processes: usize) -> Census {
        let part = |frac: f64| ((processes as f64 * frac) as usize).max(2);
        let desktops = (processes / 40).max(2);
        let crons = (processes / 50).max(2);
        let managers = (processes as f64 * 0.58 / 8.0).round().max(1.0) as usize;
        // Family sizes snap to multiples of the parent tier so every parent
        // launches an identical fan and no single parent is an oddity.
        let snap = |n: usize, per: usize| n.div_ceil(per.max(1)) * per.max(1);
        Census {
            managers,
            workers_per_manager: 8,
            desktops,
            crons,
            editors: snap(part(0.15), desktops),
            indexers: snap(part(0.12), managers),
            loggers: snap(part(0.10), desktops),
            browsers: snap(part(0.12), desktops),
            utilities: snap(part(0.15), crons),
            idlers: snap(part(0.06), crons),
            backups: snap(part(0.04), crons),
        }
    }
}

/// Single-file service workload: the worker constants with one op count
/// shifted by `delta` on the dimension picked by `variant`. Used to ring
/// the exactly-repeated worker mass with near-identical populations at
/// graded distances.
fn single_file_service(em: &mut Emitter, process: &str, file: &str, variant: usize, delta: i64) {
    use EdgeKind::*;
    let mut counts: [i64; 4] = [2, 6, 3, 2];
    let dim = (variant / 2) % 4;
    let sign = if variant % 2 == 0 { 1 } else { -1 };
    counts[dim] = (counts[dim] + sign * delta).max(1);
    em.op(process, FileOpen, file, counts[0] as u32);
    em.op(process, FileRead, file, counts[1] as u32);
    em.op(process, FileWrite, file, counts[2] as u32);
    em.op(process, FileClose, file, counts[3] as u32);
}

fn emit_background(em: &mut Emitter, census: &Census, rng: &mut ChaCha8Rng) -> Vec<String> {
    use EdgeKind::*;

    for d in 0..census.desktops {
        let desktop = format!("desktop-{d}");
        em.op(&desktop, FileOpen, "/home/user/.config/session.rc", 1);
        em.op(&desktop, FileRead, "/home/user/.config/session.rc", 2);
        em.op(&desktop, FileRead, "/etc/desktop.conf", 1);
        for a in 0..16 + d % 3 {
            let applog = format!("/home/user/.local/logs/app-{d}-{a}.log");
            em.op(&desktop, FileOpen, &applog, 1);
            em.op(&desktop, FileWrite, &applog, 2);
        }
    }
    for c in 0..census.crons {
        let cron = format!("cron-{c}");
        em.op(&cron, FileOpen, "/etc/crontab", 1);
        em.op(&cron, FileRead, "/etc/crontab", 2);
        em.op(&cron, FileRead, "/etc/cron.d/jobs", 1);
        for j in 0..16 + c % 3 {
            let joblog = format!("/var/log/cron/job-{c}-{j}.log");
            em.op(&cron, FileOpen, &joblog, 1);
            em.op(&cron, FileWrite, &joblog, 2);
        }
    }

    // Service pool: managers with identical fan-out whose workers run an
    // identical private workload. The workers form one large mass of
    // exactly repeated structure.
    for m in 0..census.managers {
        let mgr = format!("svc-mgr-{m}");
        em.op(&mgr, FileOpen, "/etc/svc.conf", 1);
        em.op(&mgr, FileRead, "/etc/svc.conf", 2);
        let journal = format!("/var/log/svc-{m}.log");
        em.op(&mgr, FileOpen, &journal, 1);
        em.op(&mgr, FileWrite, &journal, 4);
        for w in 0..census.workers_per_manager {
            let worker = format!("svc-worker-{m}-{w}");
            em.launch(&mgr, &worker, "/usr/sbin/svc-worker", "svc-worker");
            let state = format!("/var/lib/svc/{m}-{w}/state.db");
            em.op(&worker, FileOpen, &state, 2);
            em.op(&worker, FileRead, &state, 6);
            em.op(&worker, FileWrite, &state, 3);
            em.op(&worker, FileClose, &state, 2);
            em.op(&mgr, FileRead, &state, 1);
        }
    }

    // Indexers share the manager parents and run the workers' exact
    // single-private-file workload, thickening the repeated mass.
    for i in 0..census.indexers {
        let indexer = format!("indexd-{i}");
        let mgr = format!("svc-mgr-{}", i % census.managers);
        em.launch(&mgr, &indexer, "/usr/sbin/indexd", "indexd --shard");
        let shard = format!("/var/lib/index/{i}.idx");
        single_file_service(em, &indexer, &shard, 0, 0);
    }

    // Loggers repeat the same workload under the interactive parents.
    for i in 0..census.loggers {
        let logger = format!("logd-{i}");
        let desktop = format!("desktop-{}", i % census.desktops);
        em.launch(&desktop, &logger, "/usr/sbin/logd", "logd --app");
        let log = format!("/var/log/app/{i}.log");
        single_file_service(em, &logger, &log, 0, 0);
    }

    let mut doc_files = Vec::new();
    for i in 0..census.editors {
        let editor = format!("editor-{i}");
        let desktop = format!("desktop-{}", i % census.desktops);
        em.launch(&desktop, &editor, "/usr/bin/edit", "edit");
        let draft = format!("/home/user/docs/{i}-draft.txt");
        let notes = format!("/home/user/docs/{i}-notes.txt");
        em.op(&editor, FileOpen, &draft, 2);
        em.op(&editor, FileRead, &draft, 8 + rng.gen_range(0..3));
        em.op(&editor, FileWrite, &draft, 3 + rng.gen_range(0..2));
        em.op(&editor, FileClose, &draft, 2);
        em.op(&editor, FileRead, &notes, 1);
        let recent = format!("hkcu/software/editor/recent-{i}");
        em.op(&editor, RegistryOpen, &recent, 1);
        em.op(&editor, RegistryQuery, &recent, 1);
        em.op(&editor, RegistryModify, &recent, 1);
        em.op(&editor, RegistryClose, &recent, 1);
        doc_files.push(draft);
    }

    for i in 0..census.browsers {
        let browser = format!("browser-{i}");
        let desktop = format!("desktop-{}", i % census.desktops);
        em.launch(&desktop, &browser, "/usr/bin/browser", "browser");
        let addr = format!("203.0.113.{}:443", i % 250);
        em.op(&browser, SocketConnect, &addr, 1);
        em.op(&browser, SocketSend, &addr, 5 + rng.gen_range(0..2));
        em.op(&browser, SocketReceive, &addr, 7 + rng.gen_range(0..2));
        em.op(&browser, SocketRetransmit, &addr, (i % 2) as u32);
        if i % 5 == 0 {
            em.op(&browser, SocketReconnect, &addr, 1);
        }
        em.op(&browser, SocketDisconnect, &addr, 1);
        let bookmarks = format!("/home/user/.config/bookmarks-{i}.json");
        em.op(&browser, FileOpen, &bookmarks, 1);
        em.op(&browser, FileRead, &bookmarks, 2 + rng.gen_range(0..2));
    }

    for i in 0..census.utilities {
        let util = format!("util-{i}");
        let (cmd, probe) = [
            ("uptime", "/proc/uptime"),
            ("date", "/etc/localtime"),
            ("df -h", "/proc/mounts"),
        ][i % 3];
        let cron = format!("cron-{}", i % census.crons);
        em.launch(&cron, &util, "/usr/bin/coreutil", cmd);
        em.op(&util, FileOpen, probe, 1);
        em.op(&util, FileRead, probe, 1 + rng.gen_range(0..2));
        let scratch = format!("/tmp/util-{i}.out");
        em.op(&util, FileCreate, &scratch, 1);
        em.op(&util, FileWrite, &scratch, 1);
        em.op(&util, FileDelete, &scratch, 1);
    }

    // Scheduled sleeps: a launch and a timezone lookup. They anchor the
    // quiet end of both views so the small launcher tiers are not the
    // extreme tail of the population.
    for i in 0..census.idlers {
        let idler = format!("sleep-{i}");
        let cron = format!("cron-{}", i % census.crons);
        em.launch(&cron, &idler, "/usr/bin/sleep", "sleep 300");
        em.op(&idler, FileOpen, "/etc/localtime", 1);
        em.op(&idler, FileRead, "/etc/localtime", 1);
    }

    // Backup daemons read the small side files and ship them out: the
    // benign workload closest in shape to exfiltration.
    for i in 0..census.backups {
        let backup = format!("backup-{i}");
        let cron = format!("cron-{}", i % census.crons);
        em.launch(&cron, &backup, "/usr/sbin/backupd", "backupd --nightly");
        for k in 0..2 {
            let log = format!("/var/log/app/{}.log", (i * 2 + k) % census.loggers.max(1));
            em.op(&backup, FileOpen, &log, 1);
            em.op(&backup, FileRead, &log, 3 + rng.gen_range(0..3));
        }
        let archive = format!("/var/backups/{i}.tar");
        em.op(&backup, FileCreate, &archive, 1);
        em.op(&backup, FileWrite, &archive, 2 + rng.gen_range(0..2));
        em.op(&backup, SocketConnect, "10.0.8.5:873", 1);
        em.op(&backup, SocketSend, "10.0.8.5:873", 4 + rng.gen_range(0..3));
        em.op(&backup, SocketDisconnect, "10.0.8.5:873", 1);
    }

    doc_files
}

fn emit_ransomware(
    em: &mut Emitter,
    census: &Census,
    docs: &[String],
    index: usize,
    rng: &mut ChaCha8Rng,
) -> String {
    use EdgeKind::*;
    let key = format!("ransom-{index}");
    if index > 0 {
        let image = format!("/home/user/downloads/invoice-{index}.scr");
        em.launch("ransom-0", &key, &image, "invoice.scr --worker");
    }
    // Encrypt a rotating six-eighths slice of the user document tree in
    // place. The stride keeps per-document coverage uniform across plants,
    // then private staging copies are scrubbed.
    let window = docs.len() * (2 + 2 * index).min(14) / 16;
    let stride = (docs.len() / 8).max(1);
    for (j, doc) in docs.iter().enumerate() {
        if (j + index * stride) % docs.len().max(1) < window {
            em.op(&key, FileOpen, doc, 1);
            em.op(&key, FileRead, doc, 1);
            em.op(&key, FileWrite, doc, 2);
        }
    }
    let victims = 150 + (index % 3) * 5 + rng.gen_range(0..3);
    for v in 0..victims {
        let victim = format!("/home/user/docs/r{index}-v{v}.dat");
        em.op(&key, FileOpen, &victim, 4);
        em.op(&key, FileRead, &victim, 6);
        em.op(&key, FileWrite, &victim, 10);
        em.op(&key, FileClose, &victim, 3);
        em.op(&key, FileDelete, &victim, 2);
    }
    for r in 0..3 {
        let recovery = format!("hklm/system/recovery/point-{r}");
        em.op(&key, RegistryOpen, &recovery, 1);
        em.op(&key, RegistryEnumerate, &recovery, 2);
        em.op(&key, RegistryDelete, &recovery, 1);
    }
    for k in 0..12 + rng.gen_range(0..4) {
        let reg = format!("hklm/software/cryptocfg{index}/k{k}");
        em.op(&key, RegistryOpen, &reg, 1);
        em.op(&key, RegistryEnumerate, &reg, 1);
        em.op(&key, RegistryModify, &reg, 3);
        em.op(&key, RegistryClose, &reg, 1);
    }
    em.op(&key, RegistryModify, RANSOM_PERSISTENCE_KEY, 1);
    let note = format!("/home/user/docs/readme-{index}.txt");
    em.op(&key, FileCreate, &note, 1);
    em.op(&key, FileWrite, &note, 1);
    key
}

fn emit_exfiltration(
    em: &mut Emitter,
    census: &Census,
    docs: &[String],
    index: usize,
    accomplices: &mut Vec<String>,
    _rng: &mut ChaCha8Rng,
) -> String {
    use EdgeKind::*;
    let key = format!("exfil-{index}");
    if index > 0 {
        let image = format!("/usr/local/bin/sync-agent{index}");
        em.op("exfil-0", FileWrite, &image, 1);
        em.launch("exfil-0", &key, &image, "sync-agent --daemon");
    }

    // Recon through a sensitive instruction; the child itself looks like
    // any other short-lived leaf. One plant also drops a credential tool.
    let recon = format!("exfil-{index}-recon");
    em.launch(&key, &recon, "/usr/bin/whoami", "whoami");
    em.op(&recon, FileRead, "/etc/passwd", 1);
    accomplices.push(recon);
    if index == 0 {
        let child = format!("exfil-{index}-cred");
        em.launch(&key, &child, "/tmp/.cache/mimikatz", "mimikatz privilege::debug");
        em.op(&child, FileRead, "/etc/shadow", 1);
        accomplices.push(child);
    }

    // Collection: sweep a slice of the user document tree plus credential
    // material across every sensitive store on the host.
    for k in 0..3 + index {
        if let Some(doc) = docs.get((index * 5 + k) % docs.len().max(1)) {
            em.op(&key, FileRead, doc, 1);
        }
    }
    em.op(&key, FileRead, "/etc/passwd", 1);
    em.op(&key, FileRead, "/etc/shadow", 1);
    em.op(&key, FileRead, "/etc/sudoers", 1);
    em.op(&key, FileRead, "/home/user/.ssh/id_rsa", 1);
    em.op(&key, FileRead, "/etc/ssl/private/server.key", 1);
    em.op(&key, FileRead, "/var/secrets/db.key", 1);
    em.op(&key, FileRead, "/home/user/.aws/credentials", 1);

    // Staging file arrives over the wire, is re-read, and one stage is
    // executed from the downloaded path.
    let c2 = c2_address(index);
    let stage = format!("/tmp/.sync-{index}/stage.bin");
    let hash = stage_hash(index);
    em.op(&key, SocketConnect, &c2, 1);
    em.op(&key, SocketReconnect, &c2, 3 + 2 * index as u32);
    em.op(&key, SocketReceive, &c2, 1);
    em.op_with(&key, FileWrite, &stage, 1, &[("hash", hash.as_str())]);
    em.op(&key, FileRead, &stage, 1);
    if index == 0 {
        let helper = format!("exfil-{index}-helper");
        em.launch(&key, &helper, &stage, "stage.bin --run");
        em.op(&helper, FileWrite, &format!("/tmp/.sync-{index}/out.dat"), 1);
        accomplices.push(helper);
    }

    let bundle = format!("/tmp/.sync-{index}/credentials.tar");
    em.op(&key, FileWrite, &bundle, 2 + (index % 4) as u32);
    em.op(&key, FileRead, &bundle, 1);
    em.op(&key, SocketSend, &c2, 1);
    em.op(&key, FileDelete, &bundle, 1);
    em.op(&key, SocketDisconnect, &c2, 1);
    key
}

/// QA stress robots: benign load generators that hammer their private
/// scratch files and a config key far harder than any interactive
/// workload, though still well short of an encryption sweep. They stake
/// out the loud frontier of the benign population so ordinary desktops
/// and editors are never the extreme points of the score distribution.
fn emit_stress(em: &mut Emitter, index: usize) -> String {
    use EdgeKind::*;
    let key = format!("stress-{index}");
    let ease = index as u32;
    for f in 0..3 {
        let target = format!("/var/tmp/stress-{index}-{f}.dat");
        em.op(&key, FileOpen, &target, 60 - 5 * ease);
        em.op(&key, FileRead, &target, 140 - 10 * ease);
        em.op(&key, FileWrite, &target, 170 - 10 * ease);
        em.op(&key, FileClose, &target, 55 - 5 * ease);
    }
    let cycle = format!("hklm/software/stress/cycle-{index}");
    em.op(&key, RegistryOpen, &cycle, 12 - ease);
    em.op(&key, RegistryModify, &cycle, 25 - 2 * ease);
    em.op(&key, RegistryClose, &cycle, 10 - ease);
    key
}

/// Generate the event stream and ground truth for a scenario.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    if spec.processes < 40 {
        return Err(ScenarioError::TooSmall {
            field: "processes",
            minimum: 40,
            got: spec.processes,
        });
    }
    if spec.min_events < 500 {
        return Err(ScenarioError::TooSmall {
            field: "min_events",
            minimum: 500,
            got: spec.min_events,
        });
    }

    let mut scenario = generate_at_scale(spec, 1);
    // One-shot launches do not multiply with the repeat scale, so step the
    // scale up until the stream actually clears the floor.
    let mut scale = 1;
    while scenario.events.len() < spec.min_events {
        scale += spec.min_events.div_ceil(scenario.events.len()) as u32 - 1;
        scenario = generate_at_scale(spec, scale);
    }
    Ok(scenario)
}

fn generate_at_scale(spec: &ScenarioSpec, scale: u32) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut em = Emitter::new(scale);
    let census = Census::for_processes(spec.processes);
    let docs = emit_background(&mut em, &census, &mut rng);

    let n_plants = plant_count(spec.processes);
    let mut plants = Vec::new();
    let (ransomware, exfiltration) = match spec.kind {
        ScenarioKind::RansomwareBurst => (n_plants, 0),
        ScenarioKind::CollectionExfiltration => (0, n_plants),
        ScenarioKind::BenignBackground => (0, 0),
        ScenarioKind::Mixed => (n_plants, n_plants),
    };
    let mut accomplices = Vec::new();
    for i in 0..ransomware {
        plants.push(emit_ransomware(&mut em, &census, &docs, i, &mut rng));
    }
    for i in 0..exfiltration {
        plants.push(emit_exfiltration(&mut em, &census, &docs, i, &mut accomplices, &mut rng));
    }
    for b in 0..2 {
        emit_stress(&mut em, b);
    }
    plants.sort();

    let mut events = em.events;
    events.shuffle(&mut rng);

    // Child processes spawned by a plant are part of the attack and count
    // as malicious ground truth, though only the roots are listed as
    // plants.
    let plant_set: BTreeSet<&String> = plants.iter().chain(accomplices.iter()).collect();
    let mut truth = BTreeMap::new();
    for event in &events {
        truth
            .entry(event.sub.clone())
            .or_insert_with(|| plant_set.contains(&event.sub));
        if event.obj_t == NodeType::Process {
            truth
                .entry(event.obj.clone())
                .or_insert_with(|| plant_set.contains(&event.obj));
        }
    }

    Scenario {
        events,
        truth,
        plants,
    }
}
