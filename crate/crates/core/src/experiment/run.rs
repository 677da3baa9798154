use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{RunConfig, ScenarioSource};
use crate::comm::{deserialize, serialize, transmission_cost, AbAccumulator, Channel, CommPacket, Pose};
use crate::error::{config, Result};
use crate::eval::{average_precision, focal_loss, l1_loss, match_detections, total_loss};
use crate::extractor::{ExtractContext, Extractor, ExtractorConfig, SemDb};
use crate::fusion::{DetectionBox, Fuser, FusionConfig, FusionOutput, SenderFrame, TemporalBuffer};
use crate::geometry::{normalize_angle, point_in_convex};
use crate::scenario::{
    generate_scenario, load_layout, presets, shuffle_ego_iter, simulate, write_layout, AgentKind, EgoDraw, Scenario,
    INCLUSION_PROB,
};
use crate::sparse::VoxelSpec;
use crate::trace::OpTrace;
use crate::AgentId;

const FOCAL_GAMMA: f64 = 2.0;
const FOCAL_ALPHA: f64 = 0.25;

/// Metrics for one latency of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub latency_ms: u64,
    pub config: String,
    pub frames: usize,
    pub ap50: Option<f64>,
    pub ap70: Option<f64>,
    /// AP over gt boxes that at least one participating agent hit.
    pub ap50_observed: Option<f64>,
    pub ap70_observed: Option<f64>,
    pub gt_in_range: usize,
    pub gt_observed: usize,
    pub detections: usize,
    pub ab_paper: Option<f64>,
    pub ab_wire: Option<f64>,
    pub no_communication: bool,
    pub communicating_frames: usize,
    /// Mean SemDBs per collaborator packet sent to the ego.
    pub semdbs_sent_mean: f64,
    /// Mean and max SemDBs entering ego fusion per frame.
    pub semdbs_fused_mean: f64,
    pub semdbs_fused_max: usize,
    /// Mean focal + L1 loss of the training pass.
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ops: Vec<String>,
    /// Wall time; never written to report files.
    #[serde(skip)]
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub version: String,
    pub config: RunConfig,
    /// SHA-256 over the crate version and resolved config.
    pub config_hash: String,
    /// SHA-256 over the scenario layout file.
    pub scenario_hash: String,
    pub ego: AgentId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: ReportMeta,
    pub rows: Vec<MetricsRow>,
}

struct Seeds {
    extractor: u64,
    fuser: u64,
    shuffle: u64,
}

impl Seeds {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            extractor: rng.next_u64(),
            fuser: rng.next_u64(),
            shuffle: rng.next_u64(),
        }
    }
}

pub fn load_scenario(cfg: &RunConfig) -> Result<Scenario> {
    match &cfg.scenario {
        ScenarioSource::File { path } => simulate(&load_layout(path)?),
        ScenarioSource::Preset { name, seed } => generate_scenario(seed.unwrap_or(cfg.seed), &presets::by_name(name)?),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Simulates the scenario once per latency and evaluates the ego's fused
/// detections.
pub fn run(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let scenario = load_scenario(cfg)?;
    run_on(cfg, &scenario)
}

/// [`run`] on an already loaded scenario.
pub fn run_on(cfg: &RunConfig, scenario: &Scenario) -> Result<MetricsReport> {
    cfg.validate()?;
    let ego = match cfg.ego {
        Some(id) => AgentId(id),
        None => scenario.test_ego(),
    };
    match scenario.layout.agent(ego) {
        Some(a) if a.kind == AgentKind::Vehicle => {}
        _ => return Err(config("ego", format!("{ego} is not a vehicle agent of the scenario"))),
    }
    let seeds = Seeds::new(cfg.seed);
    let extractor = Extractor::new(ExtractorConfig {
        channels: cfg.channels,
        tau: cfg.tau,
        window: cfg.window,
        head_mode: cfg.head_mode,
        reweight: cfg.flags.reweight,
        seed: seeds.extractor,
        ..Default::default()
    })?;
    let spec = extractor.config().voxel;
    let fuser = Fuser::new(
        FusionConfig {
            channels: cfg.channels,
            rte: cfg.flags.rte,
            revoxelize: cfg.flags.revoxelize,
            time_unit: cfg.time_unit,
            frame_interval_ms: scenario.frame_interval_ms(),
            tau: cfg.tau,
            window: cfg.window,
            head_mode: cfg.head_mode,
            seed: seeds.fuser,
            ..Default::default()
        },
        spec,
    )?;
    let participants: Vec<AgentId> = if cfg.collaborate {
        scenario.agents().iter().map(|a| a.id).collect::<BTreeSet<_>>().into_iter().collect()
    } else {
        vec![ego]
    };

    let mut extract_trace = if cfg.trace { OpTrace::recording() } else { OpTrace::off() };
    let extracted = extract_all(&extractor, scenario, &participants, &mut extract_trace)?;
    let draws = if cfg.collaborate && cfg.flags.shuffle_ego {
        Some(shuffle_ego_iter(scenario, seeds.shuffle, true, INCLUSION_PROB)?)
    } else {
        None
    };

    let sim = Simulation {
        cfg,
        scenario,
        fuser: &fuser,
        spec: &spec,
        ego,
        participants: &participants,
        extracted: &extracted,
        draws: draws.as_deref(),
        extract_ops: extract_trace.ops(),
    };
    let rows = cfg
        .latencies_ms
        .par_iter()
        .map(|&latency| sim.run_latency(latency))
        .collect::<Result<Vec<_>>>()?;

    let version = env!("CARGO_PKG_VERSION").to_string();
    let config_json = serde_json::to_string(cfg)?;
    Ok(MetricsReport {
        meta: ReportMeta {
            config_hash: sha256_hex(format!("{version}\n{config_json}").as_bytes()),
            scenario_hash: sha256_hex(write_layout(&scenario.layout)?.as_bytes()),
            version,
            config: cfg.clone(),
            ego,
        },
        rows,
    })
}

/// SemDBs of every participant at every frame.
fn extract_all(
    extractor: &Extractor,
    scenario: &Scenario,
    participants: &[AgentId],
    trace: &mut OpTrace,
) -> Result<Vec<BTreeMap<AgentId, Vec<SemDb>>>> {
    let jobs: Vec<(usize, AgentId)> = (0..scenario.frames.len())
        .flat_map(|k| participants.iter().map(move |&a| (k, a)))
        .collect();
    if let Some(&(k, a)) = jobs.first() {
        // Op names only; the result is recomputed below.
        let f = &scenario.frames[k];
        let ctx = ExtractContext { agent: a, timestamp_ms: f.timestamp_ms, pose: f.agent_poses[&a] };
        extractor.extract_traced(&f.agent_clouds[&a], &ctx, trace)?;
    }
    let out = jobs
        .par_iter()
        .map(|&(k, a)| {
            let f = &scenario.frames[k];
            let ctx = ExtractContext { agent: a, timestamp_ms: f.timestamp_ms, pose: f.agent_poses[&a] };
            extractor.extract(&f.agent_clouds[&a], &ctx)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut frames = vec![BTreeMap::new(); scenario.frames.len()];
    for ((k, a), semdbs) in jobs.into_iter().zip(out) {
        frames[k].insert(a, semdbs);
    }
    Ok(frames)
}

struct Simulation<'a> {
    cfg: &'a RunConfig,
    scenario: &'a Scenario,
    fuser: &'a Fuser,
    spec: &'a VoxelSpec,
    ego: AgentId,
    participants: &'a [AgentId],
    extracted: &'a [BTreeMap<AgentId, Vec<SemDb>>],
    draws: Option<&'a [EgoDraw]>,
    extract_ops: &'a [String],
}

impl Simulation<'_> {
    fn run_latency(&self, latency: u64) -> Result<MetricsRow> {
        let started = Instant::now();
        let cfg = self.cfg;
        let newest_only = !cfg.flags.temporal_fusion;
        let mut receivers: BTreeSet<AgentId> = BTreeSet::from([self.ego]);
        if self.draws.is_some() {
            receivers.extend(
                self.scenario
                    .agents()
                    .iter()
                    .filter(|a| a.kind == AgentKind::Vehicle && self.participants.contains(&a.id))
                    .map(|a| a.id),
            );
        }
        let mut channels: BTreeMap<(AgentId, AgentId), Channel> = BTreeMap::new();
        for &s in self.participants {
            for &r in &receivers {
                if s != r {
                    channels.insert((s, r), Channel::new(latency));
                }
            }
        }
        let mut buffers: BTreeMap<AgentId, TemporalBuffer> =
            receivers.iter().map(|&r| (r, TemporalBuffer::new(cfg.history))).collect();

        let mut trace = if cfg.trace { OpTrace::recording() } else { OpTrace::off() };
        for op in self.extract_ops {
            trace.record(op.clone());
        }
        trace.record(if self.draws.is_some() { "shuffle_ego:train" } else { "shuffle_ego:eval" });
        trace.record(if newest_only { "buffer:newest" } else { "buffer:history" });

        let mut ab = AbAccumulator::default();
        let (mut sent_semdbs, mut sent_packets) = (0usize, 0usize);
        let mut fused_counts = Vec::new();
        let mut eval_frames: Vec<(Vec<DetectionBox>, Vec<DetectionBox>, Vec<bool>)> = Vec::new();
        let mut losses = Vec::new();

        for (k, frame) in self.scenario.frames.iter().enumerate() {
            let now = frame.timestamp_ms;
            let mut to_ego: Vec<CommPacket> = Vec::new();
            for &s in self.participants {
                let semdbs = &self.extracted[k][&s];
                for &r in &receivers {
                    if s == r {
                        continue;
                    }
                    let packet = serialize(semdbs, cfg.channels, s, now)?;
                    if r == self.ego {
                        sent_semdbs += packet.len();
                        sent_packets += 1;
                        to_ego.push(packet.clone());
                    }
                    channels.get_mut(&(s, r)).expect("channel per pair").send(packet, now)?;
                }
            }
            if k == 0 && !to_ego.is_empty() {
                trace.record("serialize");
                trace.record("channel");
            }
            ab.push(transmission_cost(&to_ego));

            for &r in &receivers {
                let buffer = buffers.get_mut(&r).expect("buffer per receiver");
                buffer.push(SenderFrame {
                    agent: r,
                    timestamp_ms: now,
                    pose: frame.agent_poses[&r],
                    semdbs: self.extracted[k][&r].clone(),
                })?;
                for &s in self.participants {
                    if s == r {
                        continue;
                    }
                    for packet in channels.get_mut(&(s, r)).expect("channel per pair").poll(now)? {
                        buffer.push(SenderFrame {
                            agent: s,
                            timestamp_ms: packet.timestamp_ms(),
                            pose: self.pose_at(s, packet.timestamp_ms()),
                            semdbs: deserialize(&packet),
                        })?;
                    }
                }
            }

            let ego_pose = frame.agent_poses[&self.ego];
            let frames = buffers[&self.ego].frames(newest_only);
            let last = k + 1 == self.scenario.frames.len();
            let out = if last {
                self.fuser.run(&frames, &ego_pose, now, &mut trace)?
            } else {
                self.fuser.run(&frames, &ego_pose, now, &mut OpTrace::off())?
            };
            fused_counts.push(out.semdbs_in_range);
            let (gt, observed) = self.ground_truth(k, &ego_pose, self.participants);

            let loss = match self.draws {
                None => frame_loss(&out, &gt, self.spec)?,
                Some(draws) => {
                    let d = &draws[k];
                    let pose = frame.agent_poses[&d.ego];
                    let frames: Vec<&SenderFrame> = buffers[&d.ego]
                        .frames(newest_only)
                        .into_iter()
                        .filter(|f| d.included.contains(&f.agent))
                        .collect();
                    let train = self.fuser.run(&frames, &pose, now, &mut OpTrace::off())?;
                    let included: Vec<AgentId> =
                        d.included.iter().copied().filter(|a| self.participants.contains(a)).collect();
                    let (train_gt, _) = self.ground_truth(k, &pose, &included);
                    frame_loss(&train, &train_gt, self.spec)?
                }
            };
            losses.push(loss);
            eval_frames.push((out.boxes, gt, observed));
        }

        let all: Vec<(&[DetectionBox], &[DetectionBox])> =
            eval_frames.iter().map(|(d, g, _)| (d.as_slice(), g.as_slice())).collect();
        let observed_gt: Vec<Vec<DetectionBox>> = eval_frames
            .iter()
            .map(|(_, g, o)| g.iter().zip(o).filter(|(_, &o)| o).map(|(b, _)| *b).collect())
            .collect();
        let obs: Vec<(&[DetectionBox], &[DetectionBox])> = eval_frames
            .iter()
            .zip(&observed_gt)
            .map(|((d, _, _), g)| (d.as_slice(), g.as_slice()))
            .collect();
        let ap50 = average_precision(&all, 0.5)?;
        let ap70 = average_precision(&all, 0.7)?;
        let ap50_obs = average_precision(&obs, 0.5)?;
        let ap70_obs = average_precision(&obs, 0.7)?;
        let summary = ab.summary();
        let n = self.scenario.frames.len();

        Ok(MetricsRow {
            latency_ms: latency,
            config: cfg.label(),
            frames: n,
            ap50: ap50.ap,
            ap70: ap70.ap,
            ap50_observed: ap50_obs.ap,
            ap70_observed: ap70_obs.ap,
            gt_in_range: ap50.gt_count,
            gt_observed: ap50_obs.gt_count,
            detections: ap50.detections,
            ab_paper: (!summary.no_communication).then_some(summary.ab_paper),
            ab_wire: (!summary.no_communication).then_some(summary.ab_wire),
            no_communication: summary.no_communication,
            communicating_frames: summary.communicating_frames,
            semdbs_sent_mean: if sent_packets > 0 { sent_semdbs as f64 / sent_packets as f64 } else { 0.0 },
            semdbs_fused_mean: fused_counts.iter().sum::<usize>() as f64 / n as f64,
            semdbs_fused_max: fused_counts.iter().copied().max().unwrap_or(0),
            loss: losses.iter().sum::<f64>() / n as f64,
            ops: dedup(trace.ops()),
            runtime_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }

    fn pose_at(&self, agent: AgentId, timestamp_ms: u64) -> Pose {
        let k = (timestamp_ms / self.scenario.frame_interval_ms()) as usize;
        self.scenario.frames[k].agent_poses[&agent]
    }

    /// In-range gt boxes in the frame of `pose`, plus whether any of
    /// `agents` saw each one.
    fn ground_truth(&self, k: usize, pose: &Pose, agents: &[AgentId]) -> (Vec<DetectionBox>, Vec<bool>) {
        let frame = &self.scenario.frames[k];
        let mut boxes = Vec::new();
        let mut observed = Vec::new();
        for (i, b) in frame.gt_boxes.iter().enumerate() {
            let local = b.transformed(&Pose::origin(), pose);
            if self.spec.contains(local.x, local.y) {
                boxes.push(local);
                observed.push(frame.observed_by(i, agents));
            }
        }
        (boxes, observed)
    }
}

fn dedup(ops: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    ops.iter().filter(|o| seen.insert(o.as_str())).cloned().collect()
}

/// Focal loss over fused cells (positive inside a gt footprint) plus L1
/// over the attributes of detections matched at IoU 0.5.
fn frame_loss(out: &FusionOutput, gt: &[DetectionBox], spec: &VoxelSpec) -> Result<f64> {
    let footprints: Vec<_> = gt.iter().map(DetectionBox::corners).collect();
    let cls = if out.fused.is_empty() {
        0.0
    } else {
        let stride = out.fused.stride();
        out.fused
            .cells()
            .iter()
            .zip(&out.cell_confidence)
            .map(|(&cell, &conf)| {
                let (x, y) = spec.cell_center(cell, stride);
                let p = crate::geometry::Vec2::new(x, y);
                let target = footprints.iter().any(|f| point_in_convex(f, p));
                focal_loss(conf, target, FOCAL_GAMMA, FOCAL_ALPHA)
            })
            .sum::<f64>()
            / out.fused.len() as f64
    };
    let m = match_detections(&out.boxes, gt, 0.5)?;
    let mut pred = Vec::new();
    let mut target = Vec::new();
    for (d, g) in m.matched.iter().enumerate() {
        if let Some(g) = *g {
            let (a, b) = (&out.boxes[d], &gt[g]);
            pred.extend([a.x, a.y, a.z, a.h, a.w, a.l, normalize_angle(a.yaw - b.yaw)]);
            target.extend([b.x, b.y, b.z, b.h, b.w, b.l, 0.0]);
        }
    }
    Ok(total_loss(cls, l1_loss(&pred, &target)))
}
