// hems_cli: data preparation, benchmarks, DDPG training/evaluation, EV
// behavior analysis, synthetic data, sweeps and report tables.
//
// Exit status: 0 success, 2 usage error, 1 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hems/hems.hpp"

namespace fs = std::filesystem;
using namespace hems;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  std::optional<int> episodes;
  std::string tariff;
  std::string policy = "rbpm";
  std::string preset;
  std::vector<std::string> set;
  std::string split_file;
  std::string agent;
  std::string transactions;
  std::string date;
  std::string grid = "parameter-search";
  bool dry_run = false;
  bool generate = false;
  int jobs = 1;
  int k_max = 8;
  int restarts = 20;
};

void require_path(const std::string& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("missing --") + what);
  if (!fs::exists(p)) throw UsageError(std::string(what) + " not found: " + p);
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Flags override the config file; HEMS_OUT overrides the config's output
/// directory. --preset is the base the config's [train] keys apply to.
config::ExperimentConfig resolve(const Options& o) {
  config::ExperimentConfig cfg;
  if (!o.config.empty()) {
    require_path(o.config, "config");
    try {
      cfg = config::load_config(o.config, o.preset);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  } else if (const char* env = std::getenv("HEMS_OUT"); env && *env) {
    cfg.out = env;
  }
  try {
    if (!o.preset.empty() && o.config.empty()) cfg.train = TrainConfig::preset(o.preset);
    if (!o.data.empty()) cfg.data = o.data;
    if (!o.out.empty()) cfg.out = o.out;
    if (!o.tariff.empty()) cfg.tariff = o.tariff;
    if (o.seed) cfg.seed = *o.seed;
    if (o.seeds) cfg.train.seed_count = *o.seeds;
    if (o.episodes) cfg.train.episodes = *o.episodes;
    for (const auto& kv : o.set) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects name=value, got '" + kv + "'");
      config::apply_parameter(cfg.train, kv.substr(0, eq), kv.substr(eq + 1));
    }
    Tariff::preset(cfg.tariff);
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct Household {
  HouseholdSeries series;
  dataio::SplitPlan plan;
};

Household load_household(const config::ExperimentConfig& cfg, const Options& o) {
  require_path(cfg.data.string(), "data");
  Household h;
  h.series = dataio::read_household(cfg.data);
  if (auto problems = validate_household(h.series); !problems.empty())
    throw DataError("household invalid: " + problems.front());
  if (!o.split_file.empty()) {
    require_path(o.split_file, "split");
    h.plan = dataio::parse_split_plan_json(read_text(o.split_file), h.series.origin());
  } else {
    h.plan = dataio::split(h.series);
  }
  return h;
}

const std::vector<dataio::Role> kRoles{dataio::Role::Train, dataio::Role::Eval, dataio::Role::Test};

void write_trace(const fs::path& p, const std::vector<env::TraceRow>& trace) {
  auto out = open_out(p);
  env::write_trace_header(out);
  for (const auto& row : trace) env::write_trace_row(out, row);
}

struct Benchmarks {
  std::map<dataio::Role, control::RolloutResult> rbpm;
  std::map<dataio::Role, mpc::MpcResult> mpc;
};

Benchmarks benchmarks(const env::Timeline& tl, const Household& h, const Tariff& tariff,
                      const RewardWeights& w, const std::vector<dataio::Role>& roles) {
  Benchmarks b;
  for (auto role : roles) {
    b.rbpm[role] = control::rollout_role(tl, h.plan, role, control::rbpm_policy(h.series.spec), tariff, w);
    b.mpc[role] = mpc::mpc_role(tl, h.plan, role, tariff, w);
  }
  return b;
}

std::optional<double> realized(double profit, const Benchmarks& b, dataio::Role role) {
  auto r = control::potential_realized(profit, b.rbpm.at(role).profit_per_day,
                                       b.mpc.at(role).rollout.profit_per_day);
  if (r.zero_potential) return std::nullopt;
  return r.fraction;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o) {
  require_path(o.data, "data");
  auto cfg = resolve(o);
  std::ifstream in(o.data);
  auto raw = dataio::ingest(in);
  std::map<std::string, std::vector<ChargingTransaction>> given;
  if (!o.transactions.empty()) {
    require_path(o.transactions, "transactions");
    std::ifstream tin(o.transactions);
    given = dataio::read_transactions(tin);
  }
  for (const auto& [id, records] : dataio::by_household(raw)) {
    std::optional<std::vector<ChargingTransaction>> txs;
    if (!o.transactions.empty()) txs = given.contains(id) ? given.at(id) : std::vector<ChargingTransaction>{};
    auto h = dataio::assemble_household(records, txs);
    dataio::write_household(cfg.out / id, h);
    std::cout << id << ": " << h.size() << " hours, " << h.transactions.size() << " transactions\n";
  }
  return 0;
}

int cmd_split(const Options& o) {
  auto cfg = resolve(o);
  auto h = load_household(cfg, o);
  auto out = open_out(cfg.out / "split.json");
  out << dataio::split_plan_json(h.plan, h.series.origin()) << '\n';
  for (auto role : kRoles)
    std::cout << dataio::role_name(role) << ": " << h.plan.days(role) << " days in "
              << h.plan.of_role(role).size() << " segments\n";
  return 0;
}

int cmd_benchmark(const Options& o, bool use_mpc) {
  auto cfg = resolve(o);
  auto h = load_household(cfg, o);
  env::Timeline tl(h.series);
  const Tariff tariff = Tariff::preset(cfg.tariff);
  const auto w = RewardWeights::from(cfg.train);
  const std::string name = use_mpc ? "mpc" : "rbpm";
  auto metrics = open_out(cfg.out / name / "metrics.csv");
  control::write_metrics_header(metrics);
  for (auto role : kRoles) {
    control::RolloutResult r;
    if (use_mpc) {
      auto m = mpc::mpc_role(tl, h.plan, role, tariff, w);
      if (m.max_replay_gap > 1e-6)
        throw std::runtime_error("mpc replay differs from LP objective by " + std::to_string(m.max_replay_gap));
      r = std::move(m.rollout);
    } else {
      r = control::rollout_role(tl, h.plan, role, control::rbpm_policy(h.series.spec), tariff, w);
    }
    std::optional<double> pr = use_mpc ? 1.0 : 0.0;
    control::write_metrics_row(metrics, {h.series.household_id, name, std::nullopt, dataio::role_name(role),
                                         r.profit_per_day, r.discomfort_score, pr});
    write_trace(cfg.out / name / (std::string("trace_") + dataio::role_name(role) + ".csv"), r.trace);
    std::printf("%s %s: %.4f EUR/day\n", name.c_str(), dataio::role_name(role), r.profit_per_day);
  }
  return 0;
}

int cmd_train(const Options& o) {
  auto cfg = resolve(o);
  auto h = load_household(cfg, o);
  env::Timeline tl(h.series);
  const Tariff tariff = Tariff::preset(cfg.tariff);
  const auto w = RewardWeights::from(cfg.train);
  auto bench = benchmarks(tl, h, tariff, w, {dataio::Role::Eval, dataio::Role::Test});
  const fs::path dir = cfg.out / "ddpg";
  auto result = ddpg::multi_seed(
      tl, h.plan, cfg.train, cfg.seed, tariff,
      [&](const ddpg::SeedResult& r) {
        std::printf("seed %llu: eval %.4f test %.4f EUR/day\n", static_cast<unsigned long long>(r.seed),
                    r.eval.profit_per_day, r.test.profit_per_day);
        std::fflush(stdout);
      },
      o.jobs);
  auto metrics = open_out(dir / "metrics.csv");
  control::write_metrics_header(metrics);
  const auto& id = h.series.household_id;
  for (const auto& r : result.runs) {
    const fs::path seed_dir = dir / ("seed_" + std::to_string(r.seed));
    fs::create_directories(seed_dir);
    ddpg::save_agent((seed_dir / "agent.txt").string(), r.agent);
    auto log = open_out(seed_dir / "training_log.csv");
    ddpg::write_training_log(log, r.log);
    const long seed = static_cast<long>(r.seed);
    control::write_metrics_row(metrics, {id, "ddpg", seed, "eval", r.eval.profit_per_day, r.eval.discomfort_score,
                                         realized(r.eval.profit_per_day, bench, dataio::Role::Eval)});
    control::write_metrics_row(metrics, {id, "ddpg", seed, "test", r.test.profit_per_day, r.test.discomfort_score,
                                         realized(r.test.profit_per_day, bench, dataio::Role::Test)});
  }
  const auto& best = result.best();
  control::write_metrics_row(metrics, {id, "ddpg_mean", std::nullopt, "test", result.mean_test_profit,
                                       result.mean_test_discomfort,
                                       realized(result.mean_test_profit, bench, dataio::Role::Test)});
  control::write_metrics_row(metrics, {id, "ddpg_best_eval", static_cast<long>(best.seed), "test",
                                       best.test.profit_per_day, best.test.discomfort_score,
                                       realized(best.test.profit_per_day, bench, dataio::Role::Test)});
  for (auto role : {dataio::Role::Eval, dataio::Role::Test}) {
    control::write_metrics_row(metrics, {id, "rbpm", std::nullopt, dataio::role_name(role),
                                         bench.rbpm.at(role).profit_per_day, bench.rbpm.at(role).discomfort_score, 0.0});
    control::write_metrics_row(metrics, {id, "mpc", std::nullopt, dataio::role_name(role),
                                         bench.mpc.at(role).rollout.profit_per_day,
                                         bench.mpc.at(role).rollout.discomfort_score, 1.0});
  }
  fs::create_directories(dir);
  ddpg::save_agent((dir / "best_agent.txt").string(), best.agent);
  std::printf("best-eval seed %llu: test %.4f EUR/day; mean test %.4f EUR/day\n",
              static_cast<unsigned long long>(best.seed), best.test.profit_per_day, result.mean_test_profit);
  return 0;
}

int cmd_evaluate(const Options& o) {
  auto cfg = resolve(o);
  require_path(o.agent, "agent");
  auto h = load_household(cfg, o);
  env::Timeline tl(h.series);
  const Tariff tariff = Tariff::preset(cfg.tariff);
  auto agent = ddpg::load_agent(o.agent);
  auto bench = benchmarks(tl, h, tariff, RewardWeights::from(agent.config), {dataio::Role::Eval, dataio::Role::Test});
  auto metrics = open_out(cfg.out / "evaluate" / "metrics.csv");
  control::write_metrics_header(metrics);
  for (auto role : {dataio::Role::Eval, dataio::Role::Test}) {
    auto r = ddpg::evaluate(agent, tl, h.plan, role, tariff);
    control::write_metrics_row(metrics, {h.series.household_id, "ddpg", std::nullopt, dataio::role_name(role),
                                         r.profit_per_day, r.discomfort_score, realized(r.profit_per_day, bench, role)});
    write_trace(cfg.out / "evaluate" / (std::string("trace_") + dataio::role_name(role) + ".csv"), r.trace);
    std::printf("ddpg %s: %.4f EUR/day\n", dataio::role_name(role), r.profit_per_day);
  }
  return 0;
}

/// Household directories under a path (the path itself when it is one).
std::vector<fs::path> household_dirs(const fs::path& root) {
  if (fs::exists(root / "hourly.csv")) return {root};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "hourly.csv")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_analyze(const Options& o) {
  auto cfg = resolve(o);
  if (o.data.empty() && o.transactions.empty()) throw UsageError("analyze needs --data and/or --transactions");
  const Tariff tariff = Tariff::preset(cfg.tariff);
  analysis::TransactionsByHousehold all;
  std::vector<analysis::HouseholdSavings> savings;
  if (!o.data.empty()) {
    require_path(o.data, "data");
    for (const auto& dir : household_dirs(o.data)) {
      auto h = dataio::read_household(dir);
      if (h.household_id.empty()) h.household_id = dir.filename().string();
      env::Timeline tl(h);
      auto r = control::rollout(tl, 0, static_cast<long>(h.size()), control::rbpm_policy(h.spec), tariff, {});
      savings.push_back(analysis::grid_savings(tl, r.trace));
      auto& list = all[h.household_id];
      list.insert(list.end(), h.transactions.begin(), h.transactions.end());
    }
  }
  if (!o.transactions.empty()) {
    require_path(o.transactions, "transactions");
    std::ifstream in(o.transactions);
    for (auto& [id, list] : dataio::read_transactions(in)) all[id] = list;
  }
  analysis::FilterStats stats;
  auto kept = analysis::filter_transactions(all, &stats);
  {
    auto out = open_out(cfg.out / "filter_stats.csv");
    std::vector<double> durations, energies;
    for (const auto& [id, list] : kept)
      for (const auto& tx : list) durations.push_back(tx.duration_h()), energies.push_back(tx.energy_kwh);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "total,excluded_long,excluded_long_pct,excluded_short,excluded_short_pct,remaining,"
                  "median_duration_h,median_energy_kwh\n%zu,%zu,%.2f,%zu,%.2f,%zu,%.2f,%.2f\n",
                  stats.total, stats.too_long, stats.long_pct(), stats.too_short, stats.short_pct(), stats.remaining,
                  analysis::median(durations), analysis::median(energies));
    out << buf;
  }
  {
    auto out = open_out(cfg.out / "optimizable.csv");
    out << "household,transaction_id,start,end,label\n";
    for (const auto& [id, list] : kept)
      for (const auto& tx : list)
        out << id << ',' << tx.id << ',' << format_timestamp(tx.start) << ',' << format_timestamp(tx.end) << ','
            << analysis::optimizability_name(analysis::classify_optimizable(tx)) << '\n';
  }
  auto profiles = analysis::profiles(kept);
  if (profiles.size() >= 2) {
    auto elbow = analysis::elbow_sweep(profiles, o.k_max, o.restarts, cfg.seed);
    auto e = open_out(cfg.out / "elbow.csv");
    analysis::write_elbow_csv(e, elbow);
    auto c = open_out(cfg.out / "clusters.csv");
    analysis::write_cluster_csv(c, profiles, elbow.best());
    std::printf("profiles %zu, best k %d, silhouette %.3f\n", profiles.size(), elbow.best_k,
                elbow.best().silhouette.value_or(0.0));
  } else {
    std::printf("profiles %zu: too few for clustering\n", profiles.size());
  }
  if (!savings.empty()) {
    auto monthly = analysis::aggregate_monthly(savings);
    auto s = open_out(cfg.out / "savings.csv");
    analysis::write_savings_csv(s, monthly);
    auto annual = analysis::annualize_savings(monthly, tariff);
    auto a = open_out(cfg.out / "savings_annual.csv");
    char buf[128];
    std::snprintf(buf, sizeof buf, "kwh,eur,kg_co2\n%.2f,%.2f,%.2f\n", annual.kwh, annual.eur, annual.kg_co2);
    a << buf;
  }
  std::printf("transactions %zu, excluded long %.2f%%, short %.2f%%, remaining %zu\n", stats.total, stats.long_pct(),
              stats.short_pct(), stats.remaining);
  return 0;
}

int cmd_synth(const Options& o) {
  auto cfg = resolve(o);
  HouseholdSeries base;
  if (o.generate) {
    base = analysis::generate_base_household(cfg.seed);
    dataio::write_household(cfg.out / "base", base);
  } else {
    require_path(o.data, "data");
    base = dataio::read_household(o.data);
  }
  auto synth = analysis::synthesize(base);
  dataio::write_household(cfg.out / synth.household_id, synth);
  std::printf("%s: %zu -> %zu transactions\n", synth.household_id.c_str(), base.transactions.size(),
              synth.transactions.size());
  return 0;
}

struct SweepOutcome {
  std::string label;
  int seeds = 0;
  double mean_eval = 0.0;
  double mean_test = 0.0;
  double best_eval_test = 0.0;
};

int cmd_sweep(const Options& o) {
  auto cfg = resolve(o);
  config::SweepStage stage;
  try {
    if (o.grid == "config") {
      if (cfg.sweep.empty()) throw UsageError("--grid config needs a [sweep] section in --config");
      stage.points = config::cartesian(cfg.train, cfg.sweep);
      stage.seeds = cfg.train.seed_count;
    } else {
      stage = config::sweep_preset(o.grid, cfg.train);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.seeds) {
    stage.seeds = *o.seeds;
    if (stage.rerun_seeds) stage.rerun_seeds = *o.seeds;
  }
  if (o.dry_run) {
    auto out = open_out(cfg.out / "sweep_plan.csv");
    out << "stage,label,seeds\n";
    for (const auto& p : stage.points) out << "1," << p.label << ',' << stage.seeds << '\n';
    if (stage.keep_top > 0)
      out << "2,top " << stage.keep_top << " of stage 1," << stage.rerun_seeds << '\n';
    std::printf("%zu models x %d seeds", stage.points.size(), stage.seeds);
    if (stage.keep_top > 0) std::printf(", then top %d x %d seeds", stage.keep_top, stage.rerun_seeds);
    std::printf("\n");
    return 0;
  }
  auto h = load_household(cfg, o);
  env::Timeline tl(h.series);
  const Tariff tariff = Tariff::preset(cfg.tariff);
  auto run = [&](const config::SweepPoint& p, int seeds) {
    TrainConfig c = p.train;
    c.seed_count = seeds;
    auto r = ddpg::multi_seed(tl, h.plan, c, cfg.seed, tariff, {}, o.jobs);
    SweepOutcome s{p.label, seeds, 0.0, r.mean_test_profit, r.best().test.profit_per_day};
    for (const auto& x : r.runs) s.mean_eval += x.eval.profit_per_day / static_cast<double>(r.runs.size());
    std::printf("%s: mean eval %.4f, mean test %.4f\n", p.label.c_str(), s.mean_eval, s.mean_test);
    std::fflush(stdout);
    return s;
  };
  auto out = open_out(cfg.out / "sweep.csv");
  out << "stage,label,seeds,mean_eval,mean_test,best_eval_test\n";
  auto row = [&](int st, const SweepOutcome& s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%d,%.6f,%.6f,%.6f\n", s.seeds, s.mean_eval, s.mean_test, s.best_eval_test);
    out << st << ",\"" << s.label << '"' << buf;
  };
  std::vector<std::pair<SweepOutcome, std::size_t>> first;
  for (std::size_t i = 0; i < stage.points.size(); ++i) {
    first.emplace_back(run(stage.points[i], stage.seeds), i);
    row(1, first.back().first);
  }
  if (stage.keep_top > 0) {
    // ranked by evaluation profit; the test split stays untouched by selection
    std::stable_sort(first.begin(), first.end(),
                     [](const auto& a, const auto& b) { return a.first.mean_eval > b.first.mean_eval; });
    for (int k = 0; k < stage.keep_top && k < static_cast<int>(first.size()); ++k)
      row(2, run(stage.points[first[static_cast<std::size_t>(k)].second], stage.rerun_seeds));
  }
  return 0;
}

struct MetricsFile {
  std::map<std::string, std::map<std::string, std::vector<std::string>>> rows;  // policy -> split -> cells
};

MetricsFile read_metrics(const fs::path& p) {
  MetricsFile m;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    auto cells = dataio::split_csv_line(line);
    if (cells.size() != 7) throw DataError("malformed metrics row in " + p.string());
    m.rows[cells[1]][cells[3]] = cells;
  }
  return m;
}

int cmd_report(const Options& o) {
  auto cfg = resolve(o);
  require_path(o.data, "data");
  std::vector<fs::path> runs;
  auto is_run = [](const fs::path& d) { return fs::exists(d / "ddpg" / "metrics.csv"); };
  if (is_run(o.data)) {
    runs.push_back(o.data);
  } else {
    for (const auto& e : fs::directory_iterator(o.data))
      if (e.is_directory() && is_run(e.path())) runs.push_back(e.path());
    std::sort(runs.begin(), runs.end());
  }
  if (runs.empty()) throw UsageError("no completed training run under " + o.data);
  std::ostringstream out;
  out << "household,lower_rbpm,upper_mpc,potential,drl_mean,drl_best_eval,realized_mean,realized_best_eval,"
         "discomfort_mean,discomfort_best_eval\n";
  for (const auto& run : runs) {
    auto m = read_metrics(run / "ddpg" / "metrics.csv");
    auto cell = [&](const char* policy, int col) -> std::string {
      auto p = m.rows.find(policy);
      if (p == m.rows.end() || !p->second.contains("test")) throw DataError(std::string("report: no ") + policy + " test row");
      return p->second.at("test")[static_cast<std::size_t>(col)];
    };
    const double lower = std::stod(cell("rbpm", 4)), upper = std::stod(cell("mpc", 4));
    const double mean = std::stod(cell("ddpg_mean", 4)), best = std::stod(cell("ddpg_best_eval", 4));
    auto pct = [](const std::string& v) {
      if (v.empty()) return std::string();
      char b[32];
      std::snprintf(b, sizeof b, "%.0f%%", 100.0 * std::stod(v));
      return std::string(b);
    };
    auto two = [](const std::string& v) {
      if (v.empty()) return std::string();
      char b[32];
      std::snprintf(b, sizeof b, "%.2f", std::stod(v));
      return std::string(b);
    };
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%.2f,%.2f,%.2f,%.2f,%.2f,", lower, upper, upper - lower, mean, best);
    out << cell("ddpg_mean", 0) << buf << pct(cell("ddpg_mean", 6)) << ',' << pct(cell("ddpg_best_eval", 6)) << ','
        << two(cell("ddpg_mean", 5)) << ',' << two(cell("ddpg_best_eval", 5)) << '\n';
  }
  open_out(cfg.out / "report.csv") << out.str();
  std::printf("report rows: %zu\n", runs.size());
  return 0;
}

int cmd_trace_day(const Options& o) {
  auto cfg = resolve(o);
  if (o.date.empty()) throw UsageError("missing --date");
  auto h = load_household(cfg, o);
  env::Timeline tl(h.series);
  const Tariff tariff = Tariff::preset(cfg.tariff);
  Timestamp day;
  try {
    day = parse_timestamp(o.date + "T00:00:00");
  } catch (const DataError&) {
    throw UsageError("--date expects YYYY-MM-DD");
  }
  const long t0 = static_cast<long>((day - h.series.origin()) / hours{1});
  if (t0 < 0 || t0 + 24 > static_cast<long>(h.series.size())) throw DataError("date outside data: " + o.date);
  std::optional<dataio::Role> role;
  for (const auto& s : h.plan.segments)
    if (t0 >= s.start && t0 < s.end) role = s.role;
  if (!role) throw DataError("date not covered by the split: " + o.date);
  control::RolloutResult r;
  const auto w = RewardWeights::from(cfg.train);
  if (o.policy == "rbpm") {
    r = control::rollout_role(tl, h.plan, *role, control::rbpm_policy(h.series.spec), tariff, w);
  } else if (o.policy == "mpc") {
    r = mpc::mpc_role(tl, h.plan, *role, tariff, w).rollout;
  } else if (o.policy == "ddpg") {
    require_path(o.agent, "agent");
    r = ddpg::evaluate(ddpg::load_agent(o.agent), tl, h.plan, *role, tariff);
  } else {
    throw UsageError("--policy must be rbpm, mpc or ddpg");
  }
  auto out = open_out(cfg.out / ("trace_" + o.policy + "_" + o.date + ".csv"));
  env::write_trace_header(out);
  double purchase = 0, profit = 0;
  for (const auto& row : r.trace)
    if (format_date(row.timestamp) == o.date) {
      env::write_trace_row(out, row);
      purchase += row.outcome.flows.grid_purchase_kwh;
      profit += row.outcome.profit;
    }
  std::printf("%s %s: purchase %.2f kWh, profit %.2f EUR\n", o.policy.c_str(), o.date.c_str(), purchase, profit);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Home energy management toolkit: PV, battery and EV charging control"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Input data (household directory unless noted)");
    c->add_option("--config", o.config, "Experiment configuration file");
    c->add_option("--out", o.out, "Output directory");
    c->add_option("--seed", o.seed, "Base random seed");
    c->add_option("--tariff", o.tariff, "Tariff preset")->check(CLI::IsMember({"table", "sec53"}));
    c->add_option("--split", o.split_file, "Split plan JSON (computed when omitted)");
  };
  auto training = [&](CLI::App* c) {
    c->add_option("--seeds", o.seeds, "Number of seeds")->check(CLI::PositiveNumber);
    c->add_option("--episodes", o.episodes, "Training episodes per seed")->check(CLI::PositiveNumber);
    c->add_option("--preset", o.preset, "Training preset")->check(CLI::IsMember({"paper", "tuned"}));
    c->add_option("--set", o.set, "Override a training parameter (name=value)");
    c->add_option("--jobs", o.jobs, "Seeds trained in parallel")->check(CLI::PositiveNumber);
  };

  std::map<std::string, std::function<int()>> handlers;
  auto add = [&](const std::string& name, const std::string& help, std::function<int()> fn) {
    auto* c = app.add_subcommand(name, help);
    common(c);
    handlers[name] = std::move(fn);
    return c;
  };

  auto* ingest = add("ingest", "Raw 15-minute measurements to hourly household directories", [&] { return cmd_ingest(o); });
  ingest->add_option("--transactions", o.transactions, "Transaction CSV (derived from EV load when omitted)");
  add("split", "Write the train/eval/test split plan", [&] { return cmd_split(o); });
  add("simulate-rbpm", "Rule-based power-mode benchmark", [&] { return cmd_benchmark(o, false); });
  add("solve-mpc", "Perfect-information LP benchmark", [&] { return cmd_benchmark(o, true); });
  training(add("train", "Train DDPG agents over several seeds", [&] { return cmd_train(o); }));
  auto* evaluate = add("evaluate", "Evaluate a saved agent", [&] { return cmd_evaluate(o); });
  evaluate->add_option("--agent", o.agent, "Agent checkpoint")->required();
  auto* analyze = add("analyze", "EV behavior clustering, optimizable transactions, grid savings",
                      [&] { return cmd_analyze(o); });
  analyze->add_option("--transactions", o.transactions, "Population transaction CSV");
  analyze->add_option("--k-max", o.k_max, "Largest k in the elbow sweep")->check(CLI::Range(2, 50));
  analyze->add_option("--restarts", o.restarts, "k-means restarts")->check(CLI::PositiveNumber);
  auto* synth = add("synth", "High-potential synthetic household", [&] { return cmd_synth(o); });
  synth->add_flag("--generate", o.generate, "Construct the base household instead of reading --data");
  auto* sweep = add("sweep", "Hyperparameter sweep", [&] { return cmd_sweep(o); });
  training(sweep);
  sweep->add_option("--grid", o.grid, "Sweep preset")->check(CLI::IsMember({"parameter-search", "grid-search", "config"}));
  sweep->add_flag("--dry-run", o.dry_run, "List the models without training");
  add("report", "Table of benchmark and DDPG results from training runs", [&] { return cmd_report(o); });
  auto* trace = add("trace-day", "Per-step trace for one calendar day", [&] { return cmd_trace_day(o); });
  trace->add_option("--date", o.date, "Day as YYYY-MM-DD")->required();
  trace->add_option("--policy", o.policy, "Policy")->check(CLI::IsMember({"rbpm", "mpc", "ddpg"}));
  trace->add_option("--agent", o.agent, "Agent checkpoint for --policy ddpg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    for (auto* sub : app.get_subcommands()) return handlers.at(sub->get_name())();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
