//! TD3: twin critics with clipped double-Q targets, target policy smoothing and
//! delayed actor/target updates. Networks train in `f32`; the exported actor is
//! widened to `f64`.

use std::io::Write;

use ndarray::{s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::replay::ReplayBuffer;
use super::reward::RewardTerms;
use super::TrainError;
use crate::policy::actor::{actor_specs, critic_specs, scale_action, ACTION_DIM};
use crate::policy::{Adam, Mlp, MlpPolicy};
use crate::world::state::{encode_goal, GOAL_SLICE};
use crate::world::{goal_polar, sample_scene, Action, Episode, Outcome, Pose, Scene, StateVector, STATE_DIM};

/// One environment step as stored in the replay buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    /// Action in the network's `[-1, 1]` space.
    pub normalized_action: [f64; 2],
    pub action: Action,
    pub reward: f64,
    pub next_state: StateVector,
    /// True only for goal and collision; timeouts still bootstrap.
    pub done: bool,
    pub prev_actions: (Action, Action),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Global step at which the episode ended.
    pub step: usize,
    pub length: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainLog {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.episodes.iter().filter(|e| e.outcome == outcome).count()
    }

    /// CSV with header `step,episode,length,return,outcome`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrainError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "episode", "length", "return", "outcome"])?;
        for e in &self.episodes {
            w.write_record([
                e.step.to_string(),
                e.episode.to_string(),
                e.length.to_string(),
                format!("{:.6}", e.episode_return),
                e.outcome.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct TrainResult {
    pub policy: MlpPolicy,
    pub log: TrainLog,
}

fn to_f32(x: &[f64]) -> impl Iterator<Item = f32> + '_ {
    x.iter().map(|&v| v as f32)
}

/// Online and target networks with their optimizers.
pub struct Td3 {
    cfg: TrainConfig,
    pub actor: Mlp<f32>,
    pub actor_target: Mlp<f32>,
    pub critics: [Mlp<f32>; 2],
    pub critic_targets: [Mlp<f32>; 2],
    actor_opt: Adam<f32>,
    critic_opts: [Adam<f32>; 2],
    updates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: Option<f64>,
}

impl Td3 {
    pub fn new<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> Self {
        let actor: Mlp<f32> = MlpPolicy::init(rng).network().cast();
        let critics: [Mlp<f32>; 2] = [Mlp::new(&critic_specs(), rng), Mlp::new(&critic_specs(), rng)];
        debug_assert_eq!(actor.specs(), actor_specs());
        Self {
            actor_opt: Adam::new(&actor, cfg.actor_lr),
            critic_opts: [
                Adam::new(&critics[0], cfg.critic_lr),
                Adam::new(&critics[1], cfg.critic_lr),
            ],
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor,
            critics,
            cfg: cfg.clone(),
            updates: 0,
        }
    }

    pub fn policy(&self) -> MlpPolicy {
        MlpPolicy::from_network(self.actor.cast()).expect("actor architecture is fixed")
    }

    /// Deterministic actor output in `[-1, 1]²`.
    pub fn act(&self, state: &StateVector) -> [f64; 2] {
        let x: ndarray::Array1<f32> = to_f32(state.as_slice()).collect();
        let u = self.actor.predict_one(x.view());
        [u[0] as f64, u[1] as f64]
    }

    fn critic_input(states: &Array2<f32>, actions: &Array2<f32>) -> Array2<f32> {
        ndarray::concatenate(Axis(1), &[states.view(), actions.view()]).expect("same rows")
    }

    /// One gradient step on a sampled batch.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &[&Transition],
        rng: &mut R,
    ) -> Result<UpdateStats, TrainError> {
        let n = batch.len();
        let states = Array2::from_shape_fn((n, STATE_DIM), |(i, j)| batch[i].state.0[j] as f32);
        let next_states =
            Array2::from_shape_fn((n, STATE_DIM), |(i, j)| batch[i].next_state.0[j] as f32);
        let actions =
            Array2::from_shape_fn((n, ACTION_DIM), |(i, j)| batch[i].normalized_action[j] as f32);

        // clipped double-Q target with smoothed target actions
        let noise = Normal::new(0.0, self.cfg.smoothing_noise).expect("valid std");
        let clip = self.cfg.smoothing_clip;
        let mut next_actions = self.actor_target.predict(next_states.view());
        next_actions.mapv_inplace(|u| {
            let eps = noise.sample(rng).clamp(-clip, clip) as f32;
            (u + eps).clamp(-1.0, 1.0)
        });
        let next_input = Self::critic_input(&next_states, &next_actions);
        let q1 = self.critic_targets[0].predict(next_input.view());
        let q2 = self.critic_targets[1].predict(next_input.view());
        let gamma = self.cfg.discount as f32;
        let targets: Vec<f32> = (0..n)
            .map(|i| {
                let t = batch[i];
                let bootstrap = if t.done { 0.0 } else { gamma * q1[[i, 0]].min(q2[[i, 0]]) };
                t.reward as f32 + bootstrap
            })
            .collect();

        let input = Self::critic_input(&states, &actions);
        let mut critic_loss = 0.0f64;
        for (critic, opt) in self.critics.iter_mut().zip(self.critic_opts.iter_mut()) {
            let tape = critic.forward_batch(input.view());
            let q = tape.output();
            let mut grad = Array2::zeros((n, 1));
            for i in 0..n {
                let err = q[[i, 0]] - targets[i];
                critic_loss += (err as f64).powi(2) / n as f64;
                grad[[i, 0]] = 2.0 * err / n as f32;
            }
            let (grads, _) = critic.backward(&tape, grad.view());
            opt.step(critic, &grads);
        }
        if !critic_loss.is_finite() {
            return Err(TrainError::Diverged {
                step: self.updates,
                what: "critic loss",
            });
        }

        self.updates += 1;
        let mut actor_loss = None;
        if self.updates.is_multiple_of(self.cfg.policy_delay) {
            let actor_tape = self.actor.forward_batch(states.view());
            let pi = actor_tape.output().clone();
            let q_input = Self::critic_input(&states, &pi);
            let q_tape = self.critics[0].forward_batch(q_input.view());
            let last = self.actor.layers.len() - 1;
            let head = &self.actor.layers[last];
            let mut pre = actor_tape.layer_input(last).dot(&head.weight.t());
            pre += &head.bias;
            let penalty = self.cfg.actor_preactivation_penalty as f32;
            let loss = -q_tape.output().mean().unwrap_or(0.0) as f64
                + f64::from(penalty) * pre.mapv(|z| z * z).mean().unwrap_or(0.0) as f64;
            if !loss.is_finite() {
                return Err(TrainError::Diverged {
                    step: self.updates,
                    what: "actor loss",
                });
            }
            let seed = Array2::from_elem((n, 1), -1.0 / n as f32);
            let dq = self.critics[0].input_gradient_batch(&q_tape, seed.view());
            let d_action = dq.slice(s![.., STATE_DIM..]).to_owned();
            let scale = 2.0 * penalty / (n * ACTION_DIM) as f32;
            let d_pre = pre.mapv(|z| scale * z);
            let (grads, _) = self.actor.backward_with_preactivation(&actor_tape, d_action.view(), Some(d_pre.view()));
            self.actor_opt.step(&mut self.actor, &grads);
            self.sync_targets(self.cfg.tau as f32);
            actor_loss = Some(loss);
        }
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
        })
    }

    /// Polyak-averages every target network towards its online network.
    pub fn sync_targets(&mut self, tau: f32) {
        self.actor_target.soft_update(&self.actor, tau);
        for (t, o) in self.critic_targets.iter_mut().zip(&self.critics) {
            t.soft_update(o, tau);
        }
    }
}

/// Independent RNG streams derived from one seed.
/// What hindsight relabeling needs from one executed step.
struct StepRecord {
    index: usize,
    before: Pose,
    after: Pose,
    d_min: f64,
    outcome: Outcome,
}

fn with_goal(state: &StateVector, pose: &Pose, goal: crate::world::Vec2) -> StateVector {
    let mut s = *state;
    s.0[GOAL_SLICE].copy_from_slice(&encode_goal(goal_polar(pose, goal)));
    s
}

/// Replays a finished episode with goals moved to positions the robot reached
/// later in the same episode ("future" hindsight relabeling).
fn relabel(
    cfg: &TrainConfig,
    steps: &[StepRecord],
    buffer: &mut ReplayBuffer<Transition>,
    originals: &[Transition],
    rng: &mut ChaCha8Rng,
) {
    for (i, rec) in steps.iter().enumerate() {
        let orig = &originals[rec.index];
        for _ in 0..cfg.hindsight_goals {
            let goal = steps[rng.random_range(i..steps.len())].after.position;
            let outcome = match rec.outcome {
                Outcome::Collision => Outcome::Collision,
                _ if rec.after.position.distance(goal) <= cfg.limits.goal_radius => Outcome::Goal,
                Outcome::Timeout => Outcome::Timeout,
                _ => Outcome::Running,
            };
            buffer.push(Transition {
                state: with_goal(&orig.state, &rec.before, goal),
                next_state: with_goal(&orig.next_state, &rec.after, goal),
                reward: cfg.reward.reward(orig.prev_actions, orig.action, outcome, rec.d_min),
                done: matches!(outcome, Outcome::Goal | Outcome::Collision),
                ..orig.clone()
            });
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Scene source drawing from [`TrainConfig::sampler_at`] for the current step.
pub fn sampled_scenes(cfg: &TrainConfig) -> impl FnMut(&mut ChaCha8Rng, usize) -> Result<Scene, TrainError> + '_ {
    move |rng, step| Ok(sample_scene(rng, &cfg.sampler_at(step))?)
}

/// Trains an actor on scenes drawn from `scenes`, which receives the global
/// step at which the episode starts; fully determined by `cfg.seed`.
pub fn train<F>(cfg: &TrainConfig, mut scenes: F) -> Result<TrainResult, TrainError>
where
    F: FnMut(&mut ChaCha8Rng, usize) -> Result<Scene, TrainError>,
{
    train_with_progress(cfg, &mut scenes, |_, _| {})
}

/// [`train`] with a callback invoked after every finished episode.
pub fn train_with_progress<F, P>(
    cfg: &TrainConfig,
    scenes: &mut F,
    mut progress: P,
) -> Result<TrainResult, TrainError>
where
    F: FnMut(&mut ChaCha8Rng, usize) -> Result<Scene, TrainError>,
    P: FnMut(&EpisodeLog, &TrainLog),
{
    cfg.validate()?;
    let mut init_rng = stream(cfg.seed, 0);
    let mut env_rng = stream(cfg.seed, 1);
    let mut explore_rng = stream(cfg.seed, 2);
    let mut batch_rng = stream(cfg.seed, 3);
    let mut relabel_rng = stream(cfg.seed, 4);

    let mut agent = Td3::new(cfg, &mut init_rng);
    let mut log = TrainLog::default();
    if cfg.total_steps == 0 {
        return Ok(TrainResult {
            policy: agent.policy(),
            log,
        });
    }

    let explore = Normal::new(0.0, cfg.exploration_noise).expect("valid std");
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut episode = Episode::new(scenes(&mut env_rng, 0)?, cfg.limits);
    let mut obs = episode.observe().state;
    let mut prev = (Action::STOP, Action::STOP);
    let mut ep_return = RewardTerms::default();
    let mut ep_steps: Vec<StepRecord> = Vec::new();
    let mut ep_transitions: Vec<Transition> = Vec::new();

    for step in 0..cfg.total_steps {
        let u = if step < cfg.learning_starts {
            [explore_rng.random_range(-1.0..=1.0), explore_rng.random_range(-1.0..=1.0)]
        } else {
            let u = agent.act(&obs);
            [
                (u[0] + explore.sample(&mut explore_rng)).clamp(-1.0, 1.0),
                (u[1] + explore.sample(&mut explore_rng)).clamp(-1.0, 1.0),
            ]
        };
        let scaled = scale_action(u);
        let action = Action::clamped(scaled[0], scaled[1]);
        let before = episode.pose();
        let tr = episode.advance(action);
        let terms = cfg.reward.terms(prev, action, tr.outcome, tr.d_min);
        ep_return.accumulate(&terms);
        let next = episode.observe().state;
        let transition = Transition {
            state: obs,
            normalized_action: u,
            action,
            reward: terms.total(),
            next_state: next,
            done: matches!(tr.outcome, Outcome::Goal | Outcome::Collision),
            prev_actions: prev,
        };
        if cfg.hindsight_goals > 0 {
            ep_steps.push(StepRecord {
                index: ep_transitions.len(),
                before,
                after: tr.pose,
                d_min: tr.d_min,
                outcome: tr.outcome,
            });
            ep_transitions.push(transition.clone());
        }
        buffer.push(transition);
        prev = (action, prev.0);
        obs = next;

        if tr.outcome.is_terminal() {
            let entry = EpisodeLog {
                episode: log.episodes.len(),
                step: step + 1,
                length: episode.steps(),
                episode_return: ep_return.total(),
                outcome: tr.outcome,
            };
            log.episodes.push(entry.clone());
            progress(&entry, &log);
            relabel(cfg, &ep_steps, &mut buffer, &ep_transitions, &mut relabel_rng);
            ep_steps.clear();
            ep_transitions.clear();
            episode = Episode::new(scenes(&mut env_rng, step + 1)?, cfg.limits);
            obs = episode.observe().state;
            prev = (Action::STOP, Action::STOP);
            ep_return = RewardTerms::default();
        }

        if step + 1 >= cfg.learning_starts && buffer.len() >= cfg.batch_size {
            let batch = buffer.sample(&mut batch_rng, cfg.batch_size);
            agent.update(&batch, &mut batch_rng).map_err(|e| match e {
                TrainError::Diverged { what, .. } => TrainError::Diverged { step, what },
                other => other,
            })?;
        }
    }

    Ok(TrainResult {
        policy: agent.policy(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Pose, Vec2};

    fn tiny(total_steps: usize) -> TrainConfig {
        TrainConfig {
            total_steps,
            learning_starts: 50,
            batch_size: 16,
            seed: 7,
            ..TrainConfig::default()
        }
    }

    fn ahead(_: &mut ChaCha8Rng, _: usize) -> Result<Scene, TrainError> {
        Ok(Scene::empty(Pose::new(Vec2::ZERO, 0.0), Vec2::new(1.0, 0.0)))
    }

    #[test]
    fn zero_steps_returns_initial_policy() {
        let cfg = tiny(0);
        let result = train(&cfg, ahead).unwrap();
        let agent = Td3::new(&cfg, &mut stream(cfg.seed, 0));
        assert_eq!(result.policy, agent.policy());
        assert!(result.log.episodes.is_empty());
    }

    #[test]
    fn same_seed_same_log() {
        let a = train(&tiny(400), ahead).unwrap();
        let b = train(&tiny(400), ahead).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.policy, b.policy);
        assert!(!a.log.episodes.is_empty());
    }

    #[test]
    fn full_rate_sync_copies_online() {
        let cfg = tiny(1);
        let mut agent = Td3::new(&cfg, &mut stream(1, 0));
        // perturb the online nets so they differ from the targets
        agent.actor.layers[0].bias.mapv_inplace(|b| b + 1.0);
        agent.critics[1].layers[2].weight.mapv_inplace(|w| w * 2.0);
        assert_ne!(agent.actor, agent.actor_target);
        agent.sync_targets(1.0);
        assert_eq!(agent.actor, agent.actor_target);
        assert_eq!(agent.critics[0], agent.critic_targets[0]);
        assert_eq!(agent.critics[1], agent.critic_targets[1]);
    }

    #[test]
    fn diverging_critic_is_reported() {
        let cfg = tiny(1);
        let mut agent = Td3::new(&cfg, &mut stream(1, 0));
        let t = Transition {
            state: StateVector([0.5; STATE_DIM]),
            normalized_action: [0.0, 0.0],
            action: Action::STOP,
            reward: f64::INFINITY,
            next_state: StateVector([0.5; STATE_DIM]),
            done: true,
            prev_actions: (Action::STOP, Action::STOP),
        };
        let err = agent.update(&[&t], &mut stream(1, 1)).unwrap_err();
        assert!(matches!(err, TrainError::Diverged { what: "critic loss", .. }));
    }

    #[test]
    fn log_csv_header() {
        let log = train(&tiny(400), ahead).unwrap().log;
        let mut out = Vec::new();
        log.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("step,episode,length,return,outcome\n"));
        assert_eq!(text.lines().count(), log.episodes.len() + 1);
    }
}
