//! File schemas and scenario plumbing.
//!
//! A network on disk is a directory holding two CSV tables:
//!
//! * `nodes.csv` — header `id,delta_bar,group`; ids must cover `0..n`.
//! * `edges.csv` — header `src,dst,beta_bar`; one directed edge per row.
//!
//! Objectives, gains, scenarios, certificates, and summaries are JSON. All
//! writes go through a write-temp-then-rename helper so partial files never
//! replace good ones. Numbers are printed with Rust's shortest round-trip
//! formatting, so a load/save/load cycle is lossless.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Edge, GainSet, ModelError, Network, Objective};

pub mod compare;
pub mod generate;
pub mod plot;

pub use compare::{compare_modes, ComparisonReport};
pub use generate::{generate_synthetic, GeneratorParams};
pub use plot::emit_plots;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Schema { path: PathBuf, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

/// Write-temp-then-rename; the destination is either the old or the new file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents).map_err(file_err(&tmp))?;
    fs::rename(&tmp, path).map_err(file_err(path))?;
    Ok(())
}

/// Network plus its per-node group labels.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub net: Network,
    pub groups: Vec<u32>,
}

impl LoadedNetwork {
    /// Sorted distinct group labels.
    pub fn labels(&self) -> Vec<u32> {
        let mut l: Vec<u32> = self.groups.clone();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Node supports per label, in label order.
    pub fn group_supports(&self) -> Vec<(u32, Vec<usize>)> {
        self.labels()
            .into_iter()
            .map(|lab| {
                (
                    lab,
                    self.groups
                        .iter()
                        .enumerate()
                        .filter(|(_, &g)| g == lab)
                        .map(|(i, _)| i)
                        .collect(),
                )
            })
            .collect()
    }
}

fn split_csv_line(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Load `nodes.csv` + `edges.csv` from `dir`.
pub fn load_network(dir: &Path) -> Result<LoadedNetwork, IoError> {
    let nodes_path = dir.join("nodes.csv");
    let text = fs::read_to_string(&nodes_path).map_err(file_err(&nodes_path))?;
    let mut rows: Vec<(usize, f64, u32)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            let cols = split_csv_line(line);
            if cols != ["id", "delta_bar", "group"] {
                return Err(IoError::Schema {
                    path: nodes_path,
                    msg: format!("expected header id,delta_bar,group, got `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_csv_line(line);
        let parse = |idx: usize, what: &str| -> Result<&str, IoError> {
            cols.get(idx).copied().ok_or_else(|| IoError::Parse {
                path: nodes_path.clone(),
                line: lineno + 1,
                msg: format!("missing column `{what}`"),
            })
        };
        let id: usize = parse(0, "id")?.parse().map_err(|e| IoError::Parse {
            path: nodes_path.clone(),
            line: lineno + 1,
            msg: format!("bad id: {e}"),
        })?;
        let delta: f64 = parse(1, "delta_bar")?.parse().map_err(|e| IoError::Parse {
            path: nodes_path.clone(),
            line: lineno + 1,
            msg: format!("bad delta_bar: {e}"),
        })?;
        let group: u32 = parse(2, "group")?.parse().map_err(|e| IoError::Parse {
            path: nodes_path.clone(),
            line: lineno + 1,
            msg: format!("bad group: {e}"),
        })?;
        rows.push((id, delta, group));
    }
    rows.sort_by_key(|r| r.0);
    for (expect, row) in rows.iter().enumerate() {
        if row.0 != expect {
            return Err(IoError::Schema {
                path: nodes_path,
                msg: format!("node ids must cover 0..n exactly; missing or duplicate id near {expect}"),
            });
        }
    }
    let n = rows.len();
    let delta_bar: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let groups: Vec<u32> = rows.iter().map(|r| r.2).collect();

    let edges_path = dir.join("edges.csv");
    let text = fs::read_to_string(&edges_path).map_err(file_err(&edges_path))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            let cols = split_csv_line(line);
            if cols != ["src", "dst", "beta_bar"] {
                return Err(IoError::Schema {
                    path: edges_path,
                    msg: format!("expected header src,dst,beta_bar, got `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_csv_line(line);
        if cols.len() != 3 {
            return Err(IoError::Parse {
                path: edges_path.clone(),
                line: lineno + 1,
                msg: format!("expected 3 columns, got {}", cols.len()),
            });
        }
        let src: usize = cols[0].parse().map_err(|e| IoError::Parse {
            path: edges_path.clone(),
            line: lineno + 1,
            msg: format!("bad src: {e}"),
        })?;
        let dst: usize = cols[1].parse().map_err(|e| IoError::Parse {
            path: edges_path.clone(),
            line: lineno + 1,
            msg: format!("bad dst: {e}"),
        })?;
        let beta_bar: f64 = cols[2].parse().map_err(|e| IoError::Parse {
            path: edges_path.clone(),
            line: lineno + 1,
            msg: format!("bad beta_bar: {e}"),
        })?;
        if src >= n || dst >= n {
            return Err(IoError::Parse {
                path: edges_path.clone(),
                line: lineno + 1,
                msg: format!("edge {src}->{dst} references a node outside 0..{n}"),
            });
        }
        edges.push(Edge { src, dst, beta_bar });
    }
    let net = Network::new(delta_bar, edges)?;
    Ok(LoadedNetwork { net, groups })
}

/// Save a network directory (creates `dir` if needed).
pub fn save_network(dir: &Path, loaded: &LoadedNetwork) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    let mut nodes = String::from("id,delta_bar,group\n");
    for i in 0..loaded.net.node_count() {
        nodes.push_str(&format!(
            "{},{},{}\n",
            i,
            loaded.net.delta_bar()[i],
            loaded.groups[i]
        ));
    }
    write_atomic(&dir.join("nodes.csv"), nodes.as_bytes())?;
    let mut edges = String::from("src,dst,beta_bar\n");
    for e in loaded.net.edges() {
        edges.push_str(&format!("{},{},{}\n", e.src, e.dst, e.beta_bar));
    }
    write_atomic(&dir.join("edges.csv"), edges.as_bytes())?;
    Ok(())
}

/// Objective file: either per-group-average thresholds keyed by label (the
/// supports come from the node table) or explicit node-set targets; `p` is
/// optional, and absent means "design it".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_thresholds: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<TargetSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSpec {
    pub nodes: Vec<usize>,
    pub d_bar: f64,
}

pub fn load_objective_file(path: &Path) -> Result<ObjectiveFile, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.into(), source })
}

pub fn save_objective_file(path: &Path, file: &ObjectiveFile) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(file).expect("objective serializes");
    write_atomic(path, text.as_bytes())
}

/// Resolve an objective file against a loaded network: group thresholds become
/// `d_bar = |V_m| x_bar_m` over the node table's groups. Returns supports and
/// thresholds plus the optional explicit `p`.
pub fn resolve_objective(
    file: &ObjectiveFile,
    loaded: &LoadedNetwork,
    path: &Path,
) -> Result<(Vec<Vec<usize>>, Vec<f64>, Option<Vec<f64>>), IoError> {
    match (&file.group_thresholds, &file.targets) {
        (Some(thresholds), None) => {
            let groups = loaded.group_supports();
            let mut supports = Vec::new();
            let mut d_bar = Vec::new();
            for (label, support) in &groups {
                let key = label.to_string();
                let Some(&x_bar) = thresholds.get(&key) else {
                    return Err(IoError::Schema {
                        path: path.into(),
                        msg: format!("no threshold for group label {label}"),
                    });
                };
                supports.push(support.clone());
                d_bar.push(support.len() as f64 * x_bar);
            }
            if thresholds.len() != groups.len() {
                return Err(IoError::Schema {
                    path: path.into(),
                    msg: "thresholds reference labels absent from the node table".into(),
                });
            }
            Ok((supports, d_bar, file.p.clone()))
        }
        (None, Some(targets)) => Ok((
            targets.iter().map(|t| t.nodes.clone()).collect(),
            targets.iter().map(|t| t.d_bar).collect(),
            file.p.clone(),
        )),
        _ => Err(IoError::Schema {
            path: path.into(),
            msg: "objective file needs exactly one of group_thresholds / targets".into(),
        }),
    }
}

/// Build a full [`Objective`] (requires `p`, explicit or supplied).
pub fn objective_from_file(
    file: &ObjectiveFile,
    loaded: &LoadedNetwork,
    path: &Path,
    p_fallback: Option<&[f64]>,
) -> Result<Objective, IoError> {
    let (supports, d_bar, p) = resolve_objective(file, loaded, path)?;
    let p = match (p, p_fallback) {
        (Some(p), _) => p,
        (None, Some(p)) => p.to_vec(),
        (None, None) => {
            return Err(IoError::Schema {
                path: path.into(),
                msg: "objective has no Lyapunov parameter p and no fallback was supplied".into(),
            })
        }
    };
    Ok(Objective::from_supports(supports, d_bar, p, loaded.net.node_count())?)
}

/// Gains on disk; `l` entries are keyed by edge endpoints so the file stays
/// meaningful independent of edge order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainsFile {
    pub k: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eta: Vec<f64>,
    pub k_bar: Vec<f64>,
    pub l: Vec<EdgeValue>,
    pub l_bar: Vec<EdgeValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeValue {
    pub src: usize,
    pub dst: usize,
    pub value: f64,
}

/// Synthesis metadata carried with designed gains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub p: Vec<f64>,
    pub stage1_objective: f64,
    pub stage2_objective: f64,
    pub relaxed_s: Vec<f64>,
    pub relaxed_r: Vec<f64>,
    pub certified_level: f64,
}

fn edge_values(net: &Network, values: &[f64]) -> Vec<EdgeValue> {
    net.edges()
        .iter()
        .zip(values.iter())
        .map(|(e, &value)| EdgeValue { src: e.src, dst: e.dst, value })
        .collect()
}

pub fn gains_to_file(net: &Network, gains: &GainSet, provenance: Option<Provenance>) -> GainsFile {
    GainsFile {
        k: gains.k.clone(),
        sigma: gains.sigma.clone(),
        eta: gains.eta.clone(),
        k_bar: gains.k_bar.clone(),
        l: edge_values(net, &gains.l),
        l_bar: edge_values(net, &gains.l_bar),
        provenance,
    }
}

pub fn save_gains(path: &Path, file: &GainsFile) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(file).expect("gains serialize");
    write_atomic(path, text.as_bytes())
}

/// Load gains and bind the edge-keyed values to `net`'s edge order.
pub fn load_gains(path: &Path, net: &Network) -> Result<(GainSet, Option<Provenance>), IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let file: GainsFile =
        serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.into(), source })?;
    let bind = |entries: &[EdgeValue], what: &str| -> Result<Vec<f64>, IoError> {
        let mut map = BTreeMap::new();
        for ev in entries {
            map.insert((ev.src, ev.dst), ev.value);
        }
        if map.len() != net.edge_count() || entries.len() != net.edge_count() {
            return Err(IoError::Schema {
                path: path.into(),
                msg: format!(
                    "{what}: {} entries for a network with {} edges",
                    entries.len(),
                    net.edge_count()
                ),
            });
        }
        net.edges()
            .iter()
            .map(|e| {
                map.get(&(e.src, e.dst)).copied().ok_or_else(|| IoError::Schema {
                    path: path.into(),
                    msg: format!("{what}: no entry for edge {}->{}", e.src, e.dst),
                })
            })
            .collect()
    };
    let gains = GainSet {
        k: file.k,
        l: bind(&file.l, "l")?,
        sigma: file.sigma,
        eta: file.eta,
        k_bar: file.k_bar,
        l_bar: bind(&file.l_bar, "l_bar")?,
    };
    gains.validate(net)?;
    Ok((gains, file.provenance))
}

/// Scenario file driving `compare` and batch simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub network: PathBuf,
    pub objective: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<PathBuf>,
    #[serde(default = "default_k_bar")]
    pub k_bar: f64,
    #[serde(default = "default_l_bar")]
    pub l_bar: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_p_bounds")]
    pub p_bounds: (f64, f64),
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    #[serde(default = "default_x0_draws")]
    pub x0_draws: usize,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    pub output_dir: PathBuf,
}

fn default_k_bar() -> f64 {
    0.52
}
fn default_l_bar() -> f64 {
    0.054
}
fn default_eps() -> f64 {
    crate::synth::DEFAULT_EPS
}
fn default_p_bounds() -> (f64, f64) {
    crate::synth::DEFAULT_P_BOUNDS
}
fn default_x0_draws() -> usize {
    1
}
fn default_stride() -> usize {
    100
}
fn default_tail() -> f64 {
    0.25
}

pub fn load_scenario(path: &Path) -> Result<Scenario, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.into(), source })
}

/// Seed-splitting rule: one master seed, one ChaCha8 stream per purpose.
/// Streams: 0 topology, 1 rates, 16 + r for the r-th initial-state draw.
pub fn stream_rng(master_seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Stream index for the r-th x0 draw.
pub const X0_STREAM_BASE: u64 = 16;

/// Draw `x0 ~ U[0,1]^n` from the documented stream of `master_seed`.
pub fn draw_x0(master_seed: u64, draw_index: usize, n: usize) -> Vec<f64> {
    use rand::Rng;
    let mut rng = stream_rng(master_seed, X0_STREAM_BASE + draw_index as u64);
    (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()
}

/// Trajectory CSV: `t,x_0,...,x_{n-1}` per recorded sample.
pub fn write_trajectory_csv(path: &Path, traj: &crate::sim::Trajectory) -> Result<(), IoError> {
    let n = traj.state(0).len();
    let mut out = String::from("t");
    for i in 0..n {
        out.push_str(&format!(",x_{i}"));
    }
    out.push('\n');
    for (idx, t) in traj.times().iter().enumerate() {
        out.push_str(&format!("{t}"));
        for v in traj.state(idx) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Inputs CSV: `t,u_0..u_{n-1},v_0..v_{E-1}` (v in network edge order).
pub fn write_inputs_csv(
    path: &Path,
    net: &Network,
    traj: &crate::sim::Trajectory,
) -> Result<(), IoError> {
    let n = traj.state(0).len();
    let mut out = String::from("t");
    for i in 0..n {
        out.push_str(&format!(",u_{i}"));
    }
    for e in net.edges() {
        out.push_str(&format!(",v_{}_{}", e.src, e.dst));
    }
    out.push('\n');
    for (idx, t) in traj.times().iter().enumerate() {
        let (u, v) = traj.inputs_at(idx);
        out.push_str(&format!("{t}"));
        for x in u.iter().chain(v.iter()) {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Events CSV: `node,time,held_value` in time order per node.
pub fn write_events_csv(path: &Path, traj: &crate::sim::Trajectory) -> Result<(), IoError> {
    let mut out = String::from("node,time,held_value\n");
    for i in 0..traj.triggers().node_count() {
        for ev in traj.triggers().node(i) {
            out.push_str(&format!("{},{},{}\n", i, ev.time, ev.held_value));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Run summary: tail-window group peaks, verdicts, trigger counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: String,
    pub horizon: f64,
    pub step: f64,
    pub tail_fraction: f64,
    /// Max over the tail window of each group's average state.
    pub group_tail_peak: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub verdicts: Vec<bool>,
    pub trigger_counts: Vec<usize>,
    pub total_triggers: usize,
    pub min_inter_event: Option<f64>,
}

pub fn summarize_run(
    traj: &crate::sim::Trajectory,
    obj: &Objective,
    horizon: f64,
    step: f64,
    tail_fraction: f64,
) -> RunSummary {
    let tail = traj.tail(tail_fraction);
    let group_tail_peak: Vec<f64> = (0..obj.len())
        .map(|m| {
            tail.iter()
                .map(|x| obj.selector_dot(m, x) / obj.support(m).len() as f64)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let thresholds: Vec<f64> = (0..obj.len())
        .map(|m| obj.d_bar()[m] / obj.support(m).len() as f64)
        .collect();
    let verdicts = group_tail_peak
        .iter()
        .zip(thresholds.iter())
        .map(|(&peak, &x_bar)| peak <= x_bar)
        .collect();
    let trigger_counts: Vec<usize> = (0..traj.triggers().node_count())
        .map(|i| traj.triggers().node(i).len())
        .collect();
    let min_inter_event = crate::sim::inter_event_stats(traj.triggers())
        .iter()
        .flatten()
        .map(|s| s.min)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    RunSummary {
        mode: format!("{:?}", traj.mode),
        horizon,
        step,
        tail_fraction,
        group_tail_peak,
        thresholds,
        verdicts,
        trigger_counts,
        total_triggers: traj.triggers().total(),
        min_inter_event,
    }
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    write_atomic(path, text.as_bytes())
}
