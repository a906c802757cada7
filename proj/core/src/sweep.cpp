#include "srkdiff/sweep.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "parallel_for.hpp"
#include "srkdiff/rng.hpp"

namespace srkdiff {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

TimeGrid build_grid(const ScheduleSpec& spec, std::size_t steps) {
  if (spec.mode == ScheduleSpec::Mode::corollary)
    return build_corollary_grid(spec.corollary);
  return build_uniform_grid(spec.horizon, steps, spec.delta_stop);
}

std::vector<std::uint64_t> seed_list(const RunConfig& config) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(config.seed_count));
  for (long i = 0; i < config.seed_count; ++i)
    seeds[static_cast<std::size_t>(i)] =
        config.seed_base + static_cast<std::uint64_t>(i);
  return seeds;
}

void check_config(const RunConfig& config, const TargetSpec& target) {
  if (config.samplers.empty())
    throw std::invalid_argument("config: sampler list is empty");
  if (config.seed_count < 1)
    throw std::invalid_argument("config: need at least one seed");
  if (config.metric == RunConfig::Metric::gaussian_kl) {
    if (!target.is_gaussian())
      throw std::invalid_argument(
          "config: gaussian_kl metric requires a gaussian target");
    if (config.perturbation.kind != PerturbationSpec::Kind::none ||
        config.projection)
      throw std::invalid_argument(
          "config: the exact-KL path requires an unperturbed, unprojected "
          "score");
  }
  if (config.projection && !target.bounded_support())
    throw std::invalid_argument(
        "config: projection requires a bounded-support target");
}

struct Cell {
  SamplerKind kind;
  long K;
  int d;
  std::vector<SweepRow> rows;
};

// Monte Carlo cell: seeds -> final states -> sample metric against direct
// q_delta draws.
void run_mc_cell(const RunConfig& config, const TargetSpec& target,
                 const TimeGrid& grid, Cell& cell) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto score = build_score_field(config, target, grid.horizon());
  const auto seeds = seed_list(config);
  const Eigen::MatrixXd states =
      run_final_states(grid, cell.kind, *score, seeds);
  SampleSet produced{states, to_string(cell.kind)};

  SweepRow row;
  row.kind = to_string(cell.kind);
  row.K = cell.K;
  row.d = cell.d;
  row.nfe = cell.K;
  row.seed = config.seed_base;

  if (config.metric == RunConfig::Metric::energy) {
    const std::uint64_t ref_seed = derive_seed(config.seed_base, 0x9d5);
    SampleSet reference{
        sample_q_delta(target, grid.delta_stop(), states.rows(), ref_seed),
        "q_delta"};
    EnergyOptions options;
    options.seed = derive_seed(config.seed_base, 0xed);
    row.metric = "energy";
    row.value = energy_distance(produced, reference, options);
    row.wall_time_s = seconds_since(t0);
    cell.rows.push_back(row);
    row.metric = "energy_bootstrap_se";
    row.value = bootstrap_energy_se(produced, reference, 24, options);
    row.wall_time_s = seconds_since(t0);
    cell.rows.push_back(row);
    return;
  }

  // moments metric
  const Moments got = empirical_moments(produced);
  const Moments want = q_delta_moments(target, grid.delta_stop());
  row.metric = "moment_mean_err";
  row.value = (got.mean - want.mean).norm();
  row.wall_time_s = seconds_since(t0);
  cell.rows.push_back(row);
  row.metric = "moment_cov_err";
  row.value = (got.cov - want.cov).norm();
  row.wall_time_s = seconds_since(t0);
  cell.rows.push_back(row);
}

void run_cell(const RunConfig& config, const TargetSpec& target, Cell& cell) {
  const TimeGrid grid =
      build_grid(config.schedule, static_cast<std::size_t>(cell.K));
  if (config.metric == RunConfig::Metric::gaussian_kl) {
    const auto t0 = std::chrono::steady_clock::now();
    const GaussianLaw output =
        exact_output_law(grid, cell.kind, *target.as_gaussian());
    const GaussianLaw truth =
        q_delta_law(*target.as_gaussian(), grid.delta_stop());
    SweepRow row{to_string(cell.kind), cell.K,          cell.d,
                 "gaussian_kl",        gaussian_kl(truth, output),
                 cell.K,               0,
                 seconds_since(t0)};
    cell.rows.push_back(row);
    return;
  }
  run_mc_cell(config, target, grid, cell);
}

// Deterministic (kind, cell) order regardless of worker completion order.
// Completed cells survive a failing one so partial results can be flushed.
std::vector<SweepRow> collect(const RunConfig& config,
                              std::vector<Cell>& cells) {
  std::vector<std::string> errors(cells.size());
  detail::parallel_for_index(
      static_cast<long>(cells.size()), [&](long i) {
        auto& cell = cells[static_cast<std::size_t>(i)];
        try {
          const TargetSpec target =
              materialize_target(config.target_json, cell.d);
          run_cell(config, target, cell);
        } catch (const std::exception& e) {
          errors[static_cast<std::size_t>(i)] = e.what();
        }
      });
  std::vector<SweepRow> rows;
  std::string first_error;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      if (first_error.empty())
        first_error = "cell " + to_string(cells[i].kind) + "/K=" +
                      std::to_string(cells[i].K) + ": " + errors[i];
      continue;
    }
    rows.insert(rows.end(), cells[i].rows.begin(), cells[i].rows.end());
  }
  if (!first_error.empty()) throw SweepAborted(first_error, std::move(rows));
  return rows;
}

void append_slope_rows(std::vector<SweepRow>& rows, const RunConfig& config,
                       const std::string& axis) {
  const std::string primary =
      config.metric == RunConfig::Metric::gaussian_kl ? "gaussian_kl"
      : config.metric == RunConfig::Metric::energy    ? "energy"
                                                      : "moment_mean_err";
  for (SamplerKind kind : config.samplers) {
    std::vector<std::pair<double, double>> points;
    const SweepRow* last = nullptr;
    for (const auto& row : rows) {
      if (row.kind != to_string(kind) || row.metric != primary) continue;
      const double x = axis == "K" ? static_cast<double>(row.K)
                                   : static_cast<double>(row.d);
      if (row.value > 0) points.emplace_back(x, row.value);
      last = &row;
    }
    if (points.size() < 3 || !last) continue;
    const SlopeFit fit = loglog_slope(points);
    SweepRow row{to_string(kind), 0,        last->d,     primary + "_slope_vs_" + axis,
                 fit.slope,       0,        last->seed,  0.0};
    if (axis == "d") row.d = 0;
    rows.push_back(row);
  }
}

}  // namespace

nlohmann::json ScheduleSpec::to_json() const {
  if (mode == Mode::corollary) {
    nlohmann::json j{{"mode", "corollary"},
                     {"d", corollary.d},
                     {"eps", corollary.eps},
                     {"delta", corollary.delta_stop}};
    if (corollary.kappa_override) j["kappa"] = *corollary.kappa_override;
    if (corollary.T_override) j["T"] = *corollary.T_override;
    return j;
  }
  return {{"mode", "uniform"}, {"T", horizon}, {"delta", delta_stop}};
}

ScheduleSpec ScheduleSpec::from_json(const nlohmann::json& j) {
  ScheduleSpec spec;
  const auto mode = j.value("mode", std::string("uniform"));
  if (mode == "corollary") {
    spec.mode = Mode::corollary;
    spec.corollary.d = j.value("d", 1);
    spec.corollary.eps = j.value("eps", 0.5);
    spec.corollary.delta_stop = j.value("delta", 0.1);
    if (j.contains("kappa"))
      spec.corollary.kappa_override = j.at("kappa").get<double>();
    if (j.contains("T")) spec.corollary.T_override = j.at("T").get<double>();
  } else if (mode == "uniform") {
    spec.mode = Mode::uniform;
    spec.horizon = j.value("T", 4.0);
    spec.delta_stop = j.value("delta", 0.01);
  } else {
    throw std::invalid_argument("schedule: unknown mode '" + mode + "'");
  }
  return spec;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig config;
  config.target_json = j.at("target");
  if (j.contains("schedule"))
    config.schedule = ScheduleSpec::from_json(j.at("schedule"));
  for (const auto& name : j.value("samplers", std::vector<std::string>{"srk"}))
    config.samplers.push_back(sampler_kind_from_string(name));
  if (j.contains("perturbation"))
    config.perturbation = PerturbationSpec::from_json(j.at("perturbation"));
  config.projection = j.value("projection", false);
  if (j.contains("seeds")) {
    const auto& seeds = j.at("seeds");
    if (seeds.is_array()) {
      const auto list = seeds.get<std::vector<std::uint64_t>>();
      if (list.empty()) throw std::invalid_argument("config: empty seed list");
      config.seed_base = list.front();
      config.seed_count = static_cast<long>(list.size());
      for (std::size_t i = 0; i < list.size(); ++i)
        if (list[i] != config.seed_base + i)
          throw std::invalid_argument(
              "config: seed lists must be contiguous; use {base, count}");
    } else {
      config.seed_base = seeds.value("base", std::uint64_t{1});
      config.seed_count = seeds.value("count", 1L);
    }
  }
  const auto metric = j.value("metric", std::string("gaussian_kl"));
  if (metric == "gaussian_kl")
    config.metric = Metric::gaussian_kl;
  else if (metric == "energy")
    config.metric = Metric::energy;
  else if (metric == "moments")
    config.metric = Metric::moments;
  else
    throw std::invalid_argument("config: unknown metric '" + metric + "'");
  config.output = j.value("output", std::string{});
  config.k_list = j.value("K_list", std::vector<long>{});
  config.d_list = j.value("d_list", std::vector<int>{});
  config.steps = j.value("K", 100L);
  return config;
}

TargetSpec materialize_target(const nlohmann::json& j, int d) {
  if (j.value("variant", std::string{}) == "gaussian" && j.contains("var")) {
    if (d < 1)
      throw std::invalid_argument(
          "config: the isotropic target shorthand needs an explicit "
          "dimension (use it with sweep-dim, or spell out mean/cov_diag)");
    GaussianTarget g;
    g.mean = Eigen::VectorXd::Constant(d, j.value("mean_coord", 0.0));
    g.cov_diag = Eigen::VectorXd::Constant(d, j.at("var").get<double>());
    return TargetSpec(std::move(g));
  }
  TargetSpec target = TargetSpec::from_json(j);
  if (d > 0 && target.dim() != d)
    throw std::invalid_argument("config: target dimension " +
                                std::to_string(target.dim()) +
                                " does not match requested " +
                                std::to_string(d));
  return target;
}

Moments q_delta_moments(const TargetSpec& target, double delta) {
  const auto ks = kernel_scalars(delta);
  const double lam = ks.lambda, sig2 = ks.sigma * ks.sigma;
  const long d = target.dim();
  Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd cov0 = Eigen::MatrixXd::Zero(d, d);
  if (const auto* g = target.as_gaussian()) {
    mean0 = g->mean;
    cov0 = g->cov_diag.asDiagonal();
  } else if (const auto* f = target.as_finite()) {
    for (std::size_t i = 0; i < f->atoms.size(); ++i)
      mean0 += f->weights[i] * f->atoms[i];
    for (std::size_t i = 0; i < f->atoms.size(); ++i) {
      const Eigen::VectorXd c = f->atoms[i] - mean0;
      cov0 += f->weights[i] * c * c.transpose();
    }
  } else {
    const auto* m = target.as_mixture();
    for (std::size_t i = 0; i < m->means.size(); ++i)
      mean0 += m->weights[i] * m->means[i];
    for (std::size_t i = 0; i < m->means.size(); ++i) {
      const Eigen::VectorXd c = m->means[i] - mean0;
      cov0 += m->weights[i] * c * c.transpose();
    }
    cov0 += m->component_var * Eigen::MatrixXd::Identity(d, d);
  }
  Moments out;
  out.mean = lam * mean0;
  out.cov = lam * lam * cov0 + sig2 * Eigen::MatrixXd::Identity(d, d);
  return out;
}

Eigen::MatrixXd sample_q_delta(const TargetSpec& target, double delta,
                               long count, std::uint64_t seed) {
  const auto ks = kernel_scalars(delta);
  const long d = target.dim();
  Eigen::MatrixXd out(count, d);
  detail::parallel_for_index(count, [&](long i) {
    const NoiseStream noise(derive_seed(seed, static_cast<std::uint64_t>(i)),
                            0);
    Eigen::VectorXd x(d);
    noise.fill_normal(x);
    if (const auto* g = target.as_gaussian()) {
      out.row(i) =
          (ks.lambda * g->mean.array() +
           (ks.lambda * ks.lambda * g->cov_diag.array() + ks.sigma * ks.sigma)
               .sqrt() *
               x.array())
              .matrix()
              .transpose();
      return;
    }
    const double pick = noise.uniform(static_cast<std::uint64_t>(d) * 2 + 1);
    if (const auto* f = target.as_finite()) {
      double acc = 0.0;
      std::size_t chosen = f->atoms.size() - 1;
      for (std::size_t a = 0; a < f->atoms.size(); ++a) {
        acc += f->weights[a];
        if (pick <= acc) { chosen = a; break; }
      }
      out.row(i) =
          (ks.lambda * f->atoms[chosen] + ks.sigma * x).transpose();
      return;
    }
    const auto* m = target.as_mixture();
    double acc = 0.0;
    std::size_t chosen = m->means.size() - 1;
    for (std::size_t a = 0; a < m->means.size(); ++a) {
      acc += m->weights[a];
      if (pick <= acc) { chosen = a; break; }
    }
    const double std_total = std::sqrt(
        ks.lambda * ks.lambda * m->component_var + ks.sigma * ks.sigma);
    out.row(i) = (ks.lambda * m->means[chosen] + std_total * x).transpose();
  });
  return out;
}

Eigen::MatrixXd run_final_states(const TimeGrid& grid, SamplerKind kind,
                                 const ScoreField& score,
                                 std::span<const std::uint64_t> seeds) {
  Eigen::MatrixXd out(static_cast<long>(seeds.size()), score.dim());
  detail::parallel_for_index(static_cast<long>(seeds.size()), [&](long i) {
    SamplerRun run{&grid, kind, &score, seeds[static_cast<std::size_t>(i)],
                   false};
    out.row(i) = run_sampler(run).final_state.transpose();
  });
  return out;
}

std::shared_ptr<const ScoreField> build_score_field(const RunConfig& config,
                                                    const TargetSpec& target,
                                                    double horizon) {
  std::shared_ptr<const ScoreField> field =
      make_analytic_score(target, horizon);
  if (config.perturbation.kind != PerturbationSpec::Kind::none &&
      config.perturbation.magnitude > 0)
    field = perturbed_score(field, config.perturbation);
  if (config.projection) field = project_score(field);
  return field;
}

std::vector<SweepRow> sweep_steps(const RunConfig& config) {
  if (config.schedule.mode != ScheduleSpec::Mode::uniform)
    throw std::invalid_argument(
        "sweep-steps: requires a uniform schedule (K is swept explicitly)");
  if (config.k_list.empty())
    throw std::invalid_argument("sweep-steps: K_list is empty");
  const TargetSpec target0 = materialize_target(config.target_json, 0);
  check_config(config, target0);
  const int d = target0.dim();
  std::vector<Cell> cells;
  for (SamplerKind kind : config.samplers)
    for (long k : config.k_list) cells.push_back({kind, k, d, {}});
  auto rows = collect(config, cells);
  append_slope_rows(rows, config, "K");
  return rows;
}

std::vector<SweepRow> sweep_dim(const RunConfig& config) {
  if (config.schedule.mode != ScheduleSpec::Mode::uniform)
    throw std::invalid_argument("sweep-dim: requires a uniform schedule");
  if (config.d_list.empty())
    throw std::invalid_argument("sweep-dim: d_list is empty");
  check_config(config,
               materialize_target(config.target_json, config.d_list.front()));
  std::vector<Cell> cells;
  for (SamplerKind kind : config.samplers)
    for (int d : config.d_list) cells.push_back({kind, config.steps, d, {}});
  auto rows = collect(config, cells);
  append_slope_rows(rows, config, "d");
  return rows;
}

void sample_to_jsonl(const RunConfig& config, bool record_trajectory,
                     std::ostream& out) {
  const TargetSpec target = materialize_target(config.target_json, 0);
  check_config(config, target);
  const TimeGrid grid =
      build_grid(config.schedule, static_cast<std::size_t>(config.steps));
  const auto score = build_score_field(config, target, grid.horizon());
  for (std::uint64_t seed : seed_list(config)) {
    SamplerRun run{&grid, config.samplers.front(), score.get(), seed,
                   record_trajectory};
    write_trajectory_jsonl(out, run_sampler(run), target.dim());
  }
}

}  // namespace srkdiff
