#pragma once

// Deep deterministic policy gradient agent: replay buffer, min/max state
// normalization, exploration noise, learning passes, training loop,
// evaluation, multi-seed runs and checkpoints.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "hems/control.hpp"
#include "hems/dataio.hpp"
#include "hems/env.hpp"
#include "hems/nn.hpp"

namespace hems::ddpg {

using nn::Matrix;
using nn::Vector;
constexpr int kStates = static_cast<int>(kStateFeatures);
constexpr int kActions = static_cast<int>(kActionSize);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Per-feature min/max scaling to [0, 1]; values outside the fitted range clamp.
struct Normalizer {
  Vector lo = Vector::Zero(kStates);
  Vector hi = Vector::Ones(kStates);

  void fit(const Matrix& states) {
    if (states.rows() != kStates || states.cols() == 0) throw std::invalid_argument("normalizer: bad input");
    lo = states.rowwise().minCoeff();
    hi = states.rowwise().maxCoeff();
  }

  Matrix apply(const Matrix& states) const {
    Matrix out(states.rows(), states.cols());
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
      const double span = hi(i) - lo(i);
      for (Eigen::Index j = 0; j < states.cols(); ++j)
        out(i, j) = span > 0 ? std::clamp((states(i, j) - lo(i)) / span, 0.0, 1.0) : 0.0;
    }
    return out;
  }

  Vector apply(const StateFeatures& f) const {
    Matrix m(kStates, 1);
    for (int i = 0; i < kStates; ++i) m(i, 0) = f[static_cast<std::size_t>(i)];
    return apply(m).col(0);
  }
};

// ---------------------------------------------------------------------------
// Replay buffer
// ---------------------------------------------------------------------------

/// Fixed-capacity ring of raw (unnormalized) transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1)
      : capacity_(capacity),
        states_(kStates, static_cast<Eigen::Index>(capacity)),
        actions_(kActions, static_cast<Eigen::Index>(capacity)),
        rewards_(static_cast<Eigen::Index>(capacity)),
        next_states_(kStates, static_cast<Eigen::Index>(capacity)),
        serial_(capacity, -1) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  void push(const StateFeatures& s, const Action& a, double r, const StateFeatures& s2) {
    const auto k = static_cast<Eigen::Index>(next_);
    for (int i = 0; i < kStates; ++i) {
      states_(i, k) = s[static_cast<std::size_t>(i)];
      next_states_(i, k) = s2[static_cast<std::size_t>(i)];
    }
    actions_(0, k) = a.target_bess;
    actions_(1, k) = a.target_ev;
    rewards_(k) = r;
    serial_[next_] = inserted_++;
    next_ = (next_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return size_ == capacity_; }
  long inserted() const { return inserted_; }

  /// Insertion serial numbers currently held (ring semantics checks).
  std::vector<long> serials() const {
    std::vector<long> out;
    for (long s : serial_)
      if (s >= 0) out.push_back(s);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// k distinct slot indices, uniform over the filled part (Floyd's algorithm).
  template <typename Rng>
  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const {
    if (k > size_) throw std::invalid_argument("replay buffer: batch larger than contents");
    std::vector<std::size_t> picked;
    std::unordered_set<std::size_t> seen;
    picked.reserve(k);
    for (std::size_t j = size_ - k; j < size_; ++j) {
      std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
      std::size_t v = seen.contains(t) ? j : t;
      seen.insert(v);
      picked.push_back(v);
    }
    return picked;
  }

  const Matrix& states() const { return states_; }
  const Matrix& next_states() const { return next_states_; }
  const Matrix& actions() const { return actions_; }
  const Vector& rewards() const { return rewards_; }

  /// States and next states of the filled part, side by side.
  Matrix all_states() const {
    const auto n = static_cast<Eigen::Index>(size_);
    Matrix out(kStates, 2 * n);
    out.leftCols(n) = states_.leftCols(n);
    out.rightCols(n) = next_states_.leftCols(n);
    return out;
  }

 private:
  std::size_t capacity_;
  Matrix states_, actions_;
  Vector rewards_;
  Matrix next_states_;
  std::vector<long> serial_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  long inserted_ = 0;
};

/// Normalized mini-batch, one sample per column.
struct Batch {
  Matrix states, actions, next_states;
  Eigen::RowVectorXd rewards;
};

inline Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& idx,
                        const Normalizer& norm) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Matrix s(kStates, k), s2(kStates, k);
  Batch b;
  b.actions.resize(kActions, k);
  b.rewards.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]);
    s.col(j) = buffer.states().col(i);
    s2.col(j) = buffer.next_states().col(i);
    b.actions.col(j) = buffer.actions().col(i);
    b.rewards(j) = buffer.rewards()(i);
  }
  b.states = norm.apply(s);
  b.next_states = norm.apply(s2);
  return b;
}

// ---------------------------------------------------------------------------
// Exploration noise
// ---------------------------------------------------------------------------

class NoiseProcess {
 public:
  NoiseProcess() = default;
  NoiseProcess(NoiseKind kind, double scale, double theta = 0.15, double mu = 0.0)
      : kind_(kind), scale_(scale), theta_(theta), mu_(mu) {
    reset();
  }

  void reset() { state_.fill(mu_); }

  template <typename Rng>
  std::array<double, kActionSize> sample(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::array<double, kActionSize> out{};
    for (std::size_t i = 0; i < kActionSize; ++i) {
      if (kind_ == NoiseKind::Gaussian) {
        out[i] = scale_ * n(rng);
      } else {
        state_[i] += theta_ * (mu_ - state_[i]) + scale_ * n(rng);
        out[i] = state_[i];
      }
    }
    return out;
  }

  double scale() const { return scale_; }

 private:
  NoiseKind kind_ = NoiseKind::Gaussian;
  double scale_ = 0.1, theta_ = 0.15, mu_ = 0.0;
  std::array<double, kActionSize> state_{};
};

// ---------------------------------------------------------------------------
// Agent and learner
// ---------------------------------------------------------------------------

/// Trained actor/critic plus the normalization they were trained with.
struct Agent {
  TrainConfig config;
  Normalizer normalizer;
  nn::Mlp actor;
  nn::Mlp critic;

  /// Actor output in [-1, 1] for one state.
  std::array<double, kActionSize> raw_action(const SimState& s, const TechnicalSpec& spec) const {
    Matrix x = normalizer.apply(s.features(spec));
    Matrix y = actor.forward(x);
    return {y(0, 0), y(1, 0)};
  }

  Action act(const SimState& s, const TechnicalSpec& spec) const {
    auto a = raw_action(s, spec);
    return Action::from_actor(a[0], a[1]);
  }

  control::Policy policy(const TechnicalSpec& spec) const {
    return [this, spec](const SimState& s) { return act(s, spec); };
  }
};

inline nn::Mlp make_actor(const TrainConfig& c) {
  return nn::Mlp({kStates, c.net_sizes[0], c.net_sizes[1], kActions}, nn::OutputActivation::Tanh);
}

inline nn::Mlp make_critic(const TrainConfig& c) {
  return nn::Mlp({kStates + kActions, c.net_sizes[0], c.net_sizes[1], 1}, nn::OutputActivation::Linear);
}

/// Everything mutated during training.
struct Learner {
  Agent agent;
  nn::Mlp actor_target, critic_target;
  nn::Adam actor_opt, critic_opt;
  ReplayBuffer buffer;
  NoiseProcess noise;
  std::mt19937_64 rng;
};

/// Noisy action: actor output plus noise, clamped to [-1, 1], mapped to [0, 1].
template <typename Rng>
Action select_action(const Agent& agent, const SimState& s, const TechnicalSpec& spec, NoiseProcess* noise,
                     Rng& rng) {
  auto a = agent.raw_action(s, spec);
  if (noise) {
    auto n = noise->sample(rng);
    a[0] += n[0];
    a[1] += n[1];
  }
  return Action::from_actor(a[0], a[1]);
}

inline Matrix stack(const Matrix& states, const Matrix& actions) {
  Matrix x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

/// Bellman targets r + gamma * Q'(s', mu'(s')) from the target networks.
inline Eigen::RowVectorXd critic_targets(const Learner& l, const Batch& b) {
  Matrix next_actions = (l.actor_target.forward(b.next_states).array() + 1.0) / 2.0;
  Matrix q_next = l.critic_target.forward(stack(b.next_states, next_actions));
  return b.rewards + l.agent.config.discount * q_next.row(0);
}

/// Mean-squared error of the critic against fixed targets, and its gradient.
inline double critic_loss(const nn::Mlp& critic, const Batch& b, const Eigen::RowVectorXd& y,
                          nn::Gradients* grad = nullptr) {
  nn::Mlp::Cache cache;
  Matrix q = critic.forward(stack(b.states, b.actions), &cache);
  Eigen::RowVectorXd diff = q.row(0) - y;
  const double k = static_cast<double>(b.states.cols());
  if (grad) *grad = critic.backward(cache, (2.0 / k) * diff);
  return diff.squaredNorm() / k;
}

/// Negative mean Q of the actor's actions under a frozen critic, and the actor gradient.
inline double actor_objective(const nn::Mlp& actor, const nn::Mlp& critic, const Matrix& states,
                              nn::Gradients* grad = nullptr) {
  nn::Mlp::Cache actor_cache, critic_cache;
  Matrix raw = actor.forward(states, &actor_cache);
  Matrix mapped = (raw.array() + 1.0) / 2.0;
  Matrix q = critic.forward(stack(states, mapped), &critic_cache);
  const double k = static_cast<double>(states.cols());
  if (grad) {
    Matrix dq = Matrix::Constant(1, states.cols(), -1.0 / k);
    Matrix d_input;
    critic.backward(critic_cache, dq, &d_input);
    Matrix d_raw = 0.5 * d_input.bottomRows(kActions);
    *grad = actor.backward(actor_cache, d_raw);
  }
  return -q.sum() / k;
}

inline double critic_update(Learner& l, const Batch& b) {
  auto y = critic_targets(l, b);
  nn::Gradients g;
  double loss = critic_loss(l.agent.critic, b, y, &g);
  if (!std::isfinite(loss))
    throw TrainingError("critic loss is not finite after " + std::to_string(l.critic_opt.steps()) + " updates");
  l.critic_opt.step(l.agent.critic, g);
  return loss;
}

inline double actor_update(Learner& l, const Batch& b) {
  nn::Gradients g;
  double obj = actor_objective(l.agent.actor, l.agent.critic, b.states, &g);
  if (!std::isfinite(obj))
    throw TrainingError("actor objective is not finite after " + std::to_string(l.actor_opt.steps()) + " updates");
  l.actor_opt.step(l.agent.actor, g);
  return obj;
}

inline void soft_update_targets(Learner& l) {
  nn::soft_update(l.agent.actor, l.actor_target, l.agent.config.soft_update);
  nn::soft_update(l.agent.critic, l.critic_target, l.agent.config.soft_update);
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct Window {
  long start = 0;
  long end = 0;  // exclusive
};

/// Start of an H-hour window moved later, if needed, so that its last hour is
/// not inside a transaction that continues beyond the window.
inline long shift_to_transaction_end(const env::Timeline& tl, long start, long H) {
  int remaining = tl.countdown(start + H - 1);
  return remaining > 0 ? start + remaining : start;
}

/// Random H-hour window inside the given segments. A window whose last hour
/// falls inside a transaction that continues beyond it shifts later to include
/// the transaction's end; if that leaves the segment, a new window is drawn.
template <typename Rng>
Window sample_episode(const env::Timeline& tl, const std::vector<dataio::Segment>& segments, long H, Rng& rng,
                      int max_tries = 1000) {
  std::vector<std::pair<long, long>> ranges;  // inclusive start ranges
  long total = 0;
  for (const auto& s : segments)
    if (s.end - s.start >= H) {
      ranges.emplace_back(s.start, s.end - H);
      total += s.end - H - s.start + 1;
    }
  if (total == 0) throw TrainingError("no training segment is at least " + std::to_string(H) + " h long");
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    long pick = std::uniform_int_distribution<long>(0, total - 1)(rng);
    std::size_t r = 0;
    while (pick > ranges[r].second - ranges[r].first) {
      pick -= ranges[r].second - ranges[r].first + 1;
      ++r;
    }
    long start = shift_to_transaction_end(tl, ranges[r].first + pick, H);
    if (start <= ranges[r].second) return {start, start + H};
  }
  throw TrainingError("no feasible episode window after " + std::to_string(max_tries) + " draws");
}

struct EpisodeStats {
  double reward_sum = 0.0;
  double critic_loss_sum = 0.0;
  double actor_objective_sum = 0.0;
  long steps = 0;
  long learning_passes = 0;
};

enum class ActionSource { Random, Actor };

/// Runs one episode, storing transitions; optionally performs one learning pass per step.
inline EpisodeStats run_episode(Learner& l, const env::Timeline& tl, Window w, const Tariff& tariff,
                                ActionSource source, bool learn) {
  const auto& spec = tl.spec();
  const auto& cfg = l.agent.config;
  const RewardWeights weights = RewardWeights::from(cfg);
  EpisodeStats stats;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double soc_b = spec.bess_capacity_kwh * unit(l.rng);
  SimState s = env::build_state(tl, w.start, soc_b, tl.interpolated_soc(w.start));
  l.noise.reset();
  for (long t = w.start; t < w.end; ++t) {
    Action a;
    if (source == ActionSource::Random) {
      a.target_bess = unit(l.rng);
      a.target_ev = unit(l.rng);
    } else {
      a = select_action(l.agent, s, spec, &l.noise, l.rng);
    }
    long nt = std::min<long>(t + 1, static_cast<long>(tl.size()) - 1);
    auto next = env::next_exogenous(tl, nt);
    if (nt == t) next.connected = false, next.countdown_h = -1;
    auto out = env::step(s, a, next, spec, tariff, weights);
    l.buffer.push(s.features(spec), a, out.reward, out.next_state.features(spec));
    stats.reward_sum += out.reward;
    ++stats.steps;
    if (learn && l.buffer.size() >= static_cast<std::size_t>(cfg.batch)) {
      auto idx = l.buffer.sample_indices(static_cast<std::size_t>(cfg.batch), l.rng);
      Batch b = make_batch(l.buffer, idx, l.agent.normalizer);
      stats.critic_loss_sum += critic_update(l, b);
      stats.actor_objective_sum += actor_update(l, b);
      soft_update_targets(l);
      ++stats.learning_passes;
    }
    s = out.next_state;
  }
  return stats;
}

/// Fresh networks, target copies, and a buffer filled by random-action episodes.
inline Learner init(const env::Timeline& tl, const dataio::SplitPlan& plan, const TrainConfig& cfg,
                    std::uint64_t seed, const Tariff& tariff) {
  cfg.validate();
  if (static_cast<long>(tl.size()) < cfg.episode_len_h)
    throw TrainingError("dataset shorter than one episode");
  Learner l;
  l.rng.seed(seed);
  l.agent.config = cfg;
  l.agent.actor = make_actor(cfg);
  l.agent.critic = make_critic(cfg);
  l.agent.actor.initialize(l.rng);
  l.agent.critic.initialize(l.rng);
  l.actor_target = l.agent.actor;
  l.critic_target = l.agent.critic;
  l.actor_opt = nn::Adam(l.agent.actor, cfg.lr_actor);
  l.critic_opt = nn::Adam(l.agent.critic, cfg.lr_critic);
  l.noise = NoiseProcess(cfg.noise_kind, cfg.noise_scale, cfg.ou_theta, cfg.ou_mu);
  l.buffer = ReplayBuffer(static_cast<std::size_t>(cfg.buffer));
  auto train = plan.of_role(dataio::Role::Train);
  while (!l.buffer.full()) {
    Window w = sample_episode(tl, train, cfg.episode_len_h, l.rng);
    w.end = std::min<long>(w.end, w.start + static_cast<long>(l.buffer.capacity() - l.buffer.size()));
    run_episode(l, tl, w, tariff, ActionSource::Random, false);
  }
  l.agent.normalizer.fit(l.buffer.all_states());
  return l;
}

struct EpisodeLog {
  int episode = 0;
  double mean_reward = 0.0;
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

struct TrainResult {
  Agent agent;
  std::vector<EpisodeLog> log;
  long learning_passes = 0;
};

inline TrainResult train(const env::Timeline& tl, const dataio::SplitPlan& plan, const TrainConfig& cfg,
                         std::uint64_t seed, const Tariff& tariff,
                         const std::function<void(const EpisodeLog&)>& progress = {}) {
  Learner l = init(tl, plan, cfg, seed, tariff);
  auto segments = plan.of_role(dataio::Role::Train);
  TrainResult result;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Window w = sample_episode(tl, segments, cfg.episode_len_h, l.rng);
    auto stats = run_episode(l, tl, w, tariff, ActionSource::Actor, true);
    const double passes = std::max<long>(1, stats.learning_passes);
    EpisodeLog entry{ep, stats.reward_sum / static_cast<double>(stats.steps), stats.critic_loss_sum / passes,
                     stats.actor_objective_sum / passes};
    result.log.push_back(entry);
    result.learning_passes += stats.learning_passes;
    if (progress) progress(entry);
  }
  result.agent = std::move(l.agent);
  return result;
}

/// Noise-free rollout over all segments of a role.
inline control::RolloutResult evaluate(const Agent& agent, const env::Timeline& tl, const dataio::SplitPlan& plan,
                                       dataio::Role role, const Tariff& tariff) {
  return control::rollout_role(tl, plan, role, agent.policy(tl.spec()), tariff,
                               RewardWeights::from(agent.config));
}

// ---------------------------------------------------------------------------
// Multi-seed runs
// ---------------------------------------------------------------------------

struct SeedResult {
  std::uint64_t seed = 0;
  control::RolloutResult eval;
  control::RolloutResult test;
  std::vector<EpisodeLog> log;
  Agent agent;
};

struct MultiSeedResult {
  std::vector<SeedResult> runs;
  std::size_t best_eval = 0;  // index chosen by evaluation profit only
  double mean_test_profit = 0.0;
  std::optional<double> mean_test_discomfort;

  const SeedResult& best() const { return runs.at(best_eval); }
};

inline std::size_t select_best_eval(const std::vector<SeedResult>& runs) {
  if (runs.empty()) throw std::invalid_argument("select_best_eval: no runs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].eval.profit_per_day > runs[best].eval.profit_per_day) best = i;
  return best;
}

/// Trains seeds base_seed .. base_seed + seed_count - 1. With jobs > 1 seeds run
/// on worker threads; every seed owns its state, so results do not depend on jobs.
inline MultiSeedResult multi_seed(const env::Timeline& tl, const dataio::SplitPlan& plan, const TrainConfig& cfg,
                                  std::uint64_t base_seed, const Tariff& tariff,
                                  const std::function<void(const SeedResult&)>& on_seed = {}, int jobs = 1) {
  MultiSeedResult out;
  out.runs.resize(static_cast<std::size_t>(cfg.seed_count));
  std::atomic<int> next{0};
  std::mutex report;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < cfg.seed_count; i = next++) {
      try {
        SeedResult r;
        r.seed = base_seed + static_cast<std::uint64_t>(i);
        auto trained = train(tl, plan, cfg, r.seed, tariff);
        r.agent = std::move(trained.agent);
        r.log = std::move(trained.log);
        r.eval = evaluate(r.agent, tl, plan, dataio::Role::Eval, tariff);
        r.test = evaluate(r.agent, tl, plan, dataio::Role::Test, tariff);
        std::lock_guard lock(report);
        if (on_seed) on_seed(r);
        out.runs[static_cast<std::size_t>(i)] = std::move(r);
      } catch (...) {
        std::lock_guard lock(report);
        if (!failure) failure = std::current_exception();
        next = cfg.seed_count;
      }
    }
  };
  jobs = std::clamp(jobs, 1, cfg.seed_count);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  out.best_eval = select_best_eval(out.runs);
  double sum = 0.0, discomfort = 0.0;
  int with_discomfort = 0;
  for (const auto& r : out.runs) {
    sum += r.test.profit_per_day;
    if (r.test.discomfort_score) discomfort += *r.test.discomfort_score, ++with_discomfort;
  }
  out.mean_test_profit = sum / static_cast<double>(out.runs.size());
  if (with_discomfort > 0) out.mean_test_discomfort = discomfort / with_discomfort;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints and logs
// ---------------------------------------------------------------------------

inline void write_training_log(std::ostream& out, const std::vector<EpisodeLog>& log) {
  out << "episode,mean_reward,critic_loss,actor_objective\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", e.episode, e.mean_reward, e.critic_loss,
                  e.actor_objective);
    out << buf;
  }
}

inline void save_agent(std::ostream& out, const Agent& a) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const auto& c = a.config;
  out << "hems-agent 1\n";
  out << "episodes " << c.episodes << "\nepisode_len_h " << c.episode_len_h << "\nbatch " << c.batch
      << "\nbuffer " << c.buffer << "\nlr_actor " << num(c.lr_actor) << "\nlr_critic " << num(c.lr_critic)
      << "\nsoft_update " << num(c.soft_update) << "\ndiscount " << num(c.discount) << "\nnet_sizes "
      << c.net_sizes[0] << ' ' << c.net_sizes[1] << "\nnoise_kind "
      << (c.noise_kind == NoiseKind::Gaussian ? "gaussian" : "ou") << "\nnoise_scale " << num(c.noise_scale)
      << "\nou_theta " << num(c.ou_theta) << "\nou_mu " << num(c.ou_mu) << "\ndiscomfort_kind "
      << (c.discomfort_kind == DiscomfortKind::Quadratic ? "quadratic" : "linear") << "\ndiscomfort_weight "
      << num(c.discomfort_weight) << "\npenalty_weight " << num(c.penalty_weight) << "\nseed_count "
      << c.seed_count << "\nend\n";
  out << "normalizer";
  for (int i = 0; i < kStates; ++i) out << ' ' << num(a.normalizer.lo(i));
  for (int i = 0; i < kStates; ++i) out << ' ' << num(a.normalizer.hi(i));
  out << '\n';
  a.actor.write(out);
  a.critic.write(out);
}

inline Agent load_agent(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "hems-agent" || version != 1) throw std::runtime_error("checkpoint: unsupported format");
  Agent a;
  auto& c = a.config;
  std::string key;
  while (in >> key && key != "end") {
    std::string v;
    if (key == "net_sizes") {
      in >> c.net_sizes[0] >> c.net_sizes[1];
      continue;
    }
    in >> v;
    if (key == "episodes") c.episodes = std::stoi(v);
    else if (key == "episode_len_h") c.episode_len_h = std::stoi(v);
    else if (key == "batch") c.batch = std::stoi(v);
    else if (key == "buffer") c.buffer = std::stoi(v);
    else if (key == "lr_actor") c.lr_actor = std::stod(v);
    else if (key == "lr_critic") c.lr_critic = std::stod(v);
    else if (key == "soft_update") c.soft_update = std::stod(v);
    else if (key == "discount") c.discount = std::stod(v);
    else if (key == "noise_kind") c.noise_kind = v == "ou" ? NoiseKind::OrnsteinUhlenbeck : NoiseKind::Gaussian;
    else if (key == "noise_scale") c.noise_scale = std::stod(v);
    else if (key == "ou_theta") c.ou_theta = std::stod(v);
    else if (key == "ou_mu") c.ou_mu = std::stod(v);
    else if (key == "discomfort_kind") c.discomfort_kind = v == "linear" ? DiscomfortKind::Linear : DiscomfortKind::Quadratic;
    else if (key == "discomfort_weight") c.discomfort_weight = std::stod(v);
    else if (key == "penalty_weight") c.penalty_weight = std::stod(v);
    else if (key == "seed_count") c.seed_count = std::stoi(v);
    else throw std::runtime_error("checkpoint: unknown key '" + key + "'");
  }
  in >> tag;
  if (tag != "normalizer") throw std::runtime_error("checkpoint: missing normalizer");
  for (int i = 0; i < kStates; ++i) {
    in >> key;
    a.normalizer.lo(i) = std::stod(key);
  }
  for (int i = 0; i < kStates; ++i) {
    in >> key;
    a.normalizer.hi(i) = std::stod(key);
  }
  a.actor = nn::Mlp::read(in);
  a.critic = nn::Mlp::read(in);
  if (!a.actor.same_shape(make_actor(c)) || !a.critic.same_shape(make_critic(c)))
    throw std::runtime_error("checkpoint: network shapes disagree with config");
  return a;
}

inline void save_agent(const std::string& path, const Agent& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_agent(out, a);
}

inline Agent load_agent(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return load_agent(in);
}

}  // namespace hems::ddpg
