// Command-line driver for the benchmark experiments. Each subcommand writes
// CSV data and a JSON summary into the output directory (--out, else
// $RIM_OUT_DIR, else the working directory).
//
// Exit status: 0 on success, 2 when any run tripped the outer-iteration
// guard, 1 on errors.

#include "rim/experiments.hpp"
#include "rim/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#ifndef RIM_IRIS_PATH
#define RIM_IRIS_PATH "data/iris.csv"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rim;
using namespace rim::experiments;

namespace {

using Clock = std::chrono::steady_clock;

struct Common {
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

void add_common(CLI::App* app, Common& c, std::uint64_t default_seed) {
  const char* env = std::getenv("RIM_OUT_DIR");
  c.out = env && *env ? env : ".";
  c.seed = default_seed;
  app->add_option("--out", c.out, "Output directory (default: $RIM_OUT_DIR, else .)");
  app->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads for independent trials")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
}

fs::path output_file(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return fs::path(c.out) / name;
}

// Every option of the subcommand with the value it ran with.
json flags_of(const CLI::App* app) {
  json f = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    std::string key = opt->get_name();
    if (key == "--help" || key.empty()) continue;
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    const auto& res = opt->results();
    if (res.empty())
      f[key] = opt->get_default_str();
    else if (res.size() == 1)
      f[key] = res.front();
    else
      f[key] = res;
  }
  return f;
}

json counts_json(const EvalCounts& e) {
  return {{"values", e.values}, {"partials", e.partials}, {"gradients", e.gradients}};
}

EvalCounts total_counts(const std::vector<const RunTrace*>& traces) {
  EvalCounts e;
  for (const RunTrace* t : traces) e += t->evaluations;
  return e;
}

json escape_stats(const std::vector<const RunTrace*>& traces) {
  std::size_t count = 0, samples = 0;
  double radius = 0;
  for (const RunTrace* t : traces)
    for (const auto& e : t->escapes) {
      ++count;
      samples += e.samples;
      radius += e.radius;
    }
  json s = {{"count", count}};
  s["mean_radius"] = count ? radius / static_cast<double>(count) : 0.0;
  s["mean_samples_per_escape"] = count ? static_cast<double>(samples) / static_cast<double>(count) : 0.0;
  return s;
}

bool any_guard(const std::vector<const RunTrace*>& traces) {
  for (const RunTrace* t : traces)
    if (t->stop == StopReason::outer_guard) return true;
  return false;
}

json summary_head(const std::string& command, const CLI::App* app, const Common& c) {
  json s;
  s["command"] = command;
  s["flags"] = flags_of(app);
  s["seed"] = c.seed;
  return s;
}

void write_summary(const Common& c, const std::string& name, json& s, Clock::time_point t0) {
  s["wall_time_s"] = std::chrono::duration<double>(Clock::now() - t0).count();
  const fs::path p = output_file(c, name);
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open " + p.string());
  out << s.dump(2) << "\n";
}

json stats(const std::vector<double>& v) {
  json s = {{"mean", mean(v)}, {"var", variance(v)}};
  if (!v.empty()) {
    s["min"] = *std::min_element(v.begin(), v.end());
    s["max"] = *std::max_element(v.begin(), v.end());
  }
  return s;
}

// Iterates of one run-and-inspect call, tagged by runner segment. The first
// row of every later segment is the accepted escape point (phase "inspect");
// the last row is the reported final point, tagged with the stop reason.
class Trajectory {
 public:
  RunHooks hooks() {
    return {[this] { fresh_ = true; },
            [this](const Vector& x, double v) {
              if (fresh_ && !rows_.empty()) ++segment_;
              rows_.push_back({segment_, fresh_ && segment_ > 0 ? "inspect" : "run", x, v});
              fresh_ = false;
            }};
  }

  void finish(const RunTrace& t) { rows_.push_back({segment_, to_string(t.stop), t.final_point, t.final_value}); }

  void write(const fs::path& path, const std::vector<std::string>& coords) const {
    std::vector<std::string> header{"segment", "phase"};
    header.insert(header.end(), coords.begin(), coords.end());
    header.push_back("F");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_escape(header[i]);
    out << "\r\n";
    for (const auto& r : rows_) {
      if (r.x.size() != static_cast<Index>(coords.size())) throw std::logic_error("trajectory row has wrong dimension");
      out << r.segment << ',' << csv_escape(r.kind);
      for (Index j = 0; j < r.x.size(); ++j) out << ',' << format_double(r.x[j]);
      out << ',' << format_double(r.value) << "\r\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }

 private:
  struct Row {
    std::size_t segment;
    std::string kind;
    Vector x;
    double value;
  };
  std::vector<Row> rows_;
  std::size_t segment_ = 0;
  bool fresh_ = true;
};

// quad-sine ------------------------------------------------------------------

struct QuadSineArgs {
  QuadSineConfig cfg;
  double x0 = 5;
  std::size_t max_outer = 10'000;
};

int cmd_quad_sine(const CLI::App* app, const Common& c, const QuadSineArgs& a) {
  const auto t0 = Clock::now();
  Trajectory traj;
  const RunTrace t = run_quad_sine(a.cfg, a.x0, MetaOptions{a.max_outer}, traj.hooks());
  traj.finish(t);
  traj.write(output_file(c, "quad_sine_trace.csv"), {"x"});

  json s = summary_head("quad-sine", app, c);
  s["final_x"] = t.final_point[0];
  s["final_abs_x"] = std::abs(t.final_point[0]);
  s["final_F"] = t.final_value;
  s["stop"] = to_string(t.stop);
  s["certified"] = t.certificate.has_value();
  s["iterations"] = t.iterations;
  s["inspections"] = t.inspections;
  s["evaluations"] = counts_json(t.evaluations);
  s["escapes"] = escape_stats({&t});
  s["prop1_escape_radius"] = prop1_escape_radius(a.cfg.params.a, a.cfg.params.b);
  write_summary(c, "quad_sine_summary.json", s, t0);
  std::cout << "quad-sine: x = " << format_double(t.final_point[0]) << ", F = " << format_double(t.final_value)
            << ", escapes = " << t.escapes.size() << " (" << to_string(t.stop) << ")\n";
  return any_guard({&t}) ? 2 : 0;
}

// ackley -----------------------------------------------------------------------

struct AckleyArgs {
  AckleyConfig cfg;
  std::string mode = "gd2d";
  std::vector<double> x0;
  std::size_t trial = 0;
  double grid_resolution = 1e-3;
  double grid_box = 10;
};

int cmd_ackley(const CLI::App* app, const Common& c, AckleyArgs a) {
  const auto t0 = Clock::now();
  a.cfg.mode = parse_ackley_mode(a.mode);
  Vector start = ackley_start(c.seed, a.trial);
  if (!a.x0.empty()) start << a.x0[0], a.x0[1];
  Trajectory traj;
  const RunTrace t = run_ackley(a.cfg, start, {}, traj.hooks());
  traj.finish(t);
  traj.write(output_file(c, "ackley_trajectory.csv"), {"x", "y"});

  const GridMinimum g = grid_minimum_2d(modified_ackley(), a.grid_box, a.grid_resolution, 8, c.threads);
  json s = summary_head("ackley", app, c);
  s["start"] = {start[0], start[1]};
  s["final_point"] = {t.final_point[0], t.final_point[1]};
  s["final_F"] = t.final_value;
  s["grid_oracle"] = {{"resolution", a.grid_resolution},
                      {"box", a.grid_box},
                      {"grid_value", g.grid_value},
                      {"refined_value", g.value},
                      {"point", {g.point[0], g.point[1]}}};
  s["gap_to_oracle"] = t.final_value - g.value;
  s["within_1e-3"] = std::abs(t.final_value - g.value) <= 1e-3;
  s["stop"] = to_string(t.stop);
  s["iterations"] = t.iterations;
  s["inspections"] = t.inspections;
  s["diverged_runs"] = t.diverged_runs;
  s["evaluations"] = counts_json(t.evaluations);
  s["escapes"] = escape_stats({&t});
  write_summary(c, "ackley_summary.json", s, t0);
  std::cout << "ackley (" << a.mode << "): F = " << format_double(t.final_value)
            << ", grid oracle = " << format_double(g.value) << ", escapes = " << t.escapes.size() << "\n";
  return any_guard({&t}) ? 2 : 0;
}

// kmeans -----------------------------------------------------------------------

struct KmeansArgs {
  std::string dataset = "gauss";
  std::size_t trials = 0;  // 0: 20 for gauss, 500 for iris
  std::optional<double> R, dR, dtheta, nu;
  std::string iris = RIM_IRIS_PATH;
  std::uint64_t data_seed = 1;
  std::string init = "adversarial";
  int component = 0;
  std::size_t oracle_restarts = 100;
};

int cmd_kmeans(const CLI::App* app, const Common& c, const KmeansArgs& a) {
  const auto t0 = Clock::now();
  const bool gauss = a.dataset == "gauss";
  if (!gauss && a.dataset != "iris") throw std::invalid_argument("unknown dataset '" + a.dataset + "'");
  if (a.init != "adversarial" && a.init != "random") throw std::invalid_argument("unknown init '" + a.init + "'");

  KmeansConfig cfg;
  ClusterData data;
  if (gauss) {
    data = gaussian_clusters(a.data_seed);
  } else {
    data.points = load_iris(a.iris);
    cfg.K = 3;
    cfg.R = 3;
    cfg.dR = 1;
    cfg.nu = 1e-3;
  }
  if (a.R) cfg.R = *a.R;
  if (a.dR) cfg.dR = *a.dR;
  if (a.dtheta) cfg.dtheta = *a.dtheta;
  if (a.nu) cfg.nu = *a.nu;
  const std::size_t trials = a.trials ? a.trials : (gauss ? 20 : 500);
  const bool adversarial = gauss && a.init == "adversarial";

  std::vector<KmeansTrial> results(trials);
  parallel_for(trials, c.threads, [&](std::size_t t) {
    Rng rng = Rng::stream(c.seed, t);
    const Vector z0 = adversarial ? adversarial_cluster_init(data, cfg.K, rng, a.component)
                                  : random_data_centers(data.points, cfg.K, rng);
    results[t] = run_kmeans_trial(data.points, z0, cfg);
  });

  CsvWriter csv(output_file(c, "kmeans_" + a.dataset + "_trials.csv").string(),
                {"trial", "em_objective", "inspect_objective", "escapes", "inspections", "mean_escape_radius"});
  std::vector<double> em, ins;
  std::vector<const RunTrace*> traces;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto& r = results[t];
    csv.row(t, r.em_only, r.em_inspect, r.escapes, r.inspections, r.mean_escape_radius);
    em.push_back(r.em_only);
    ins.push_back(r.em_inspect);
    traces.push_back(&r.em_trace);
    traces.push_back(&r.inspect_trace);
  }
  std::vector<const RunTrace*> inspected;
  for (const auto& r : results) inspected.push_back(&r.inspect_trace);

  json s = summary_head("kmeans", app, c);
  s["dataset"] = a.dataset;
  s["trials"] = trials;
  s["K"] = cfg.K;
  s["policy"] = {{"R", cfg.R}, {"dR", cfg.dR}, {"dtheta", cfg.dtheta}, {"nu", cfg.nu}};
  s["em_objective"] = stats(em);
  s["inspect_objective"] = stats(ins);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < trials; ++t) violations += ins[t] > em[t] + cfg.nu;
  s["inspect_above_em_plus_nu"] = violations;
  if (gauss) {
    const double oracle = kmeans_best_of_restarts(data.points, cfg.K, a.oracle_restarts, splitmix64(c.seed), c.threads);
    std::size_t em_off = 0, ins_off = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      em_off += em[t] > 1.01 * oracle;
      ins_off += ins[t] > 1.01 * oracle;
    }
    s["oracle_best_of_restarts"] = oracle;
    s["em_above_1pct_of_oracle"] = em_off;
    s["inspect_above_1pct_of_oracle"] = ins_off;
    s["init"] = a.init;
  } else {
    std::size_t stuck = 0, good = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      stuck += em[t] > 0.4;
      good += ins[t] <= 0.27;
    }
    s["em_above_0.4"] = stuck;
    s["inspect_at_most_0.27"] = good;
  }
  s["evaluations"] = counts_json(total_counts(traces));
  s["escapes"] = escape_stats(inspected);
  write_summary(c, "kmeans_" + a.dataset + "_summary.json", s, t0);
  std::cout << "kmeans (" << a.dataset << ", " << trials << " trials): EM mean " << format_double(mean(em))
            << ", EM+inspection mean " << format_double(mean(ins)) << "\n";
  return any_guard(inspected) ? 2 : 0;
}

// robust-reg -------------------------------------------------------------------

struct RobustArgs {
  RobustRegConfig cfg;
  std::vector<double> beta0{-5, 0};
  std::size_t trials = 1;
  std::size_t surface_points = 101;
  double surface_half_width = 10;
};

int cmd_robust_reg(const CLI::App* app, const Common& c, const RobustArgs& a) {
  const auto t0 = Clock::now();
  Vector beta0(2);
  beta0 << a.beta0[0], a.beta0[1];

  // Trial t uses the instance with seed (seed + t); trial 0 is the one
  // whose path and loss surface are written.
  std::vector<RobustRegResult> results(a.trials);
  Trajectory traj;
  for (std::size_t t = 0; t < a.trials; ++t) {
    const RobustRegInstance inst = robust_reg_instance(c.seed + t);
    results[t] = t == 0 ? run_robust_reg(inst, beta0, a.cfg, traj.hooks()) : run_robust_reg(inst, beta0, a.cfg);
  }
  traj.finish(results.front().inspected);
  traj.write(output_file(c, "robust_reg_path.csv"), {"beta0", "beta1"});

  const RobustRegInstance inst = robust_reg_instance(c.seed);
  {
    CsvWriter surf(output_file(c, "robust_reg_surface.csv").string(), {"beta0", "beta1", "loss"});
    const std::size_t n = std::max<std::size_t>(a.surface_points, 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Vector b(2);
        b[0] = inst.beta_true[0] - a.surface_half_width + 2 * a.surface_half_width * static_cast<double>(i) / static_cast<double>(n - 1);
        b[1] = inst.beta_true[1] - a.surface_half_width + 2 * a.surface_half_width * static_cast<double>(j) / static_cast<double>(n - 1);
        surf.row(b[0], b[1], tukey_loss(inst.X, inst.y, b, a.cfg.r0));
      }
  }
  CsvWriter csv(output_file(c, "robust_reg_trials.csv").string(),
                {"trial", "instance_seed", "irls_loss", "irls_stop", "irls_beta0", "irls_beta1", "inspect_loss",
                 "inspect_beta0", "inspect_beta1", "escapes"});
  std::vector<const RunTrace*> traces, inspected;
  std::size_t worse = 0;
  for (std::size_t t = 0; t < a.trials; ++t) {
    const auto& r = results[t];
    csv.row(t, c.seed + t, r.loss_irls, to_string(r.irls.stop), r.irls.final_point[0], r.irls.final_point[1],
            r.loss_inspected, r.inspected.final_point[0], r.inspected.final_point[1], r.inspected.escapes.size());
    worse += r.loss_inspected > r.loss_irls;
    traces.push_back(&r.irls);
    traces.push_back(&r.inspected);
    inspected.push_back(&r.inspected);
  }

  const auto& r0 = results.front();
  json s = summary_head("robust-reg", app, c);
  s["r0"] = a.cfg.r0;
  s["beta_true"] = {inst.beta_true[0], inst.beta_true[1]};
  s["outliers"] = inst.outliers;
  s["irls"] = {{"loss", r0.loss_irls},
               {"beta", {r0.irls.final_point[0], r0.irls.final_point[1]}},
               {"stop", to_string(r0.irls.stop)}};
  s["irls_with_inspection"] = {{"loss", r0.loss_inspected},
                               {"beta", {r0.inspected.final_point[0], r0.inspected.final_point[1]}},
                               {"stop", to_string(r0.inspected.stop)}};
  s["trials"] = a.trials;
  s["trials_with_inspection_worse"] = worse;
  s["evaluations"] = counts_json(total_counts(traces));
  s["escapes"] = escape_stats(inspected);
  write_summary(c, "robust_reg_summary.json", s, t0);
  std::cout << "robust-reg: IRLS loss " << format_double(r0.loss_irls) << ", with inspection "
            << format_double(r0.loss_inspected) << "\n";
  return any_guard(inspected) ? 2 : 0;
}

// cs ---------------------------------------------------------------------------

struct CsArgs {
  CsConfig cfg;
  Index m = 25;
  std::size_t trials = 100;
  double lambda = 0.05;
  std::vector<std::string> algos{"half", "cd", "cdi"};
};

int cmd_cs(const CLI::App* app, const Common& c, const CsArgs& a) {
  const auto t0 = Clock::now();
  std::vector<CsAlgorithm> algos;
  for (const auto& name : a.algos) algos.push_back(parse_cs_algorithm(name));

  std::vector<std::vector<CsOutcome>> out(a.trials, std::vector<CsOutcome>(algos.size()));
  parallel_for(a.trials, c.threads, [&](std::size_t t) {
    const CsInstance inst = cs_instance(a.m, trial_seed(c.seed, t), a.lambda);
    for (std::size_t k = 0; k < algos.size(); ++k) out[t][k] = run_cs(inst, algos[k], a.cfg);
  });

  CsvWriter csv(output_file(c, "cs_trials.csv").string(),
                {"trial", "algorithm", "objective", "support_ratio", "all_identified", "below_true_objective",
                 "iterations", "inspections", "escapes"});
  for (std::size_t t = 0; t < a.trials; ++t)
    for (std::size_t k = 0; k < algos.size(); ++k) {
      const auto& o = out[t][k];
      csv.row(t, to_string(algos[k]), o.objective, o.support_ratio, o.all_identified, o.below_true, o.iterations,
              o.inspections, o.escapes);
    }

  json s = summary_head("cs", app, c);
  s["m"] = a.m;
  s["n"] = 2 * a.m;
  s["support_threshold"] = a.cfg.support_tol;
  json table = json::object();
  std::size_t escapes = 0;
  for (std::size_t k = 0; k < algos.size(); ++k) {
    std::vector<double> ratio, obj, iters;
    std::size_t all = 0, below = 0, insp = 0;
    for (std::size_t t = 0; t < a.trials; ++t) {
      const auto& o = out[t][k];
      ratio.push_back(o.support_ratio);
      obj.push_back(o.objective);
      iters.push_back(static_cast<double>(o.iterations));
      all += o.all_identified;
      below += o.below_true;
      insp += o.inspections;
      escapes += o.escapes;
    }
    table[to_string(algos[k])] = {{"a_support_ratio_pct", 100 * mean(ratio)},
                                  {"b_all_identified", all},
                                  {"c_below_true_objective", below},
                                  {"ave_obj", mean(obj)},
                                  {"mean_iterations", mean(iters)},
                                  {"mean_inspections", static_cast<double>(insp) / static_cast<double>(a.trials)}};
  }
  s["table"] = table;
  const auto cd = std::find(algos.begin(), algos.end(), CsAlgorithm::cd);
  const auto cdi = std::find(algos.begin(), algos.end(), CsAlgorithm::cdi);
  if (cd != algos.end() && cdi != algos.end()) {
    std::size_t ordered = 0;
    for (std::size_t t = 0; t < a.trials; ++t)
      ordered += out[t][static_cast<std::size_t>(cdi - algos.begin())].objective <=
                 out[t][static_cast<std::size_t>(cd - algos.begin())].objective;
    s["cdi_le_cd_trials"] = ordered;
  }
  s["evaluations"] = "closed-form updates; not counted";
  s["escapes"] = {{"count", escapes}};
  write_summary(c, "cs_summary.json", s, t0);
  std::cout << "cs (m=" << a.m << ", " << a.trials << " trials):";
  for (const auto& [name, row] : table.items())
    std::cout << " " << name << " a=" << format_double(row["a_support_ratio_pct"].get<double>()) << "%";
  std::cout << "\n";
  return 0;
}

// logreg -----------------------------------------------------------------------

struct LogRegArgs {
  LogRegConfig cfg;
  std::vector<Index> K{5};
  std::vector<double> eps{0.01};
  std::size_t trials = 100;
};

int cmd_logreg(const CLI::App* app, const Common& c, const LogRegArgs& a) {
  const auto t0 = Clock::now();
  CsvWriter csv(output_file(c, "logreg_trials.csv").string(),
                {"K", "eps", "trial", "algorithm", "objective", "test_error", "iterations", "inspections", "escapes"});
  json cells = json::array();
  for (Index K : a.K)
    for (double eps : a.eps) {
      std::vector<LogRegTrial> res(a.trials);
      parallel_for(a.trials, c.threads, [&](std::size_t t) {
        res[t] = run_logreg_trial(logreg_instance(K, eps, trial_seed(c.seed, t)), a.cfg);
      });
      std::vector<double> po, pe, pi, qo, qe, qi, qn;
      for (std::size_t t = 0; t < a.trials; ++t) {
        const auto& r = res[t];
        csv.row(K, eps, t, "PL", r.pl.objective, r.pl.test_error, r.pl.iterations, r.pl.inspections, r.pl.escapes);
        csv.row(K, eps, t, "PLI", r.pli.objective, r.pli.test_error, r.pli.iterations, r.pli.inspections,
                r.pli.escapes);
        po.push_back(r.pl.objective);
        pe.push_back(r.pl.test_error);
        pi.push_back(static_cast<double>(r.pl.iterations));
        qo.push_back(r.pli.objective);
        qe.push_back(r.pli.test_error);
        qi.push_back(static_cast<double>(r.pli.iterations));
        qn.push_back(static_cast<double>(r.pli.inspections));
      }
      cells.push_back({{"K", K},
                       {"eps", eps},
                       {"weight", logreg_penalty_weight(K)},
                       {"PL", {{"iterations", mean(pi)}, {"objective", stats(po)}, {"test_error", stats(pe)}}},
                       {"PLI",
                        {{"iterations", mean(qi)},
                         {"inspections", mean(qn)},
                         {"objective", stats(qo)},
                         {"test_error", stats(qe)}}}});
      std::cout << "logreg K=" << K << " eps=" << eps << ": PL " << format_double(mean(po)) << " / "
                << format_double(100 * mean(pe)) << "%, PLI " << format_double(mean(qo)) << " / "
                << format_double(100 * mean(qe)) << "%\n";
    }
  json s = summary_head("logreg", app, c);
  s["trials"] = a.trials;
  s["cells"] = cells;
  s["evaluations"] = "gradient steps are counted as iterations";
  write_summary(c, "logreg_summary.json", s, t0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run-and-inspect experiments: descent runs alternated with ball-sampling inspections."};
  app.require_subcommand(1);
  int status = 0;

  Common qc;
  QuadSineArgs qa;
  auto* q = app.add_subcommand("quad-sine", "GD with line inspection on x^2/2 + a sin(b pi (x - 1/(2b))) + a");
  add_common(q, qc, 0);
  q->add_option("--a", qa.cfg.params.a, "Amplitude")->capture_default_str()->check(CLI::NonNegativeNumber);
  q->add_option("--b", qa.cfg.params.b, "Frequency")->capture_default_str()->check(CLI::PositiveNumber);
  q->add_option("--x0", qa.x0, "Start point")->capture_default_str();
  q->add_option("--R", qa.cfg.R, "Inspection radius")->capture_default_str()->check(CLI::PositiveNumber);
  q->add_option("--dR", qa.cfg.dR, "Radius decrement")->capture_default_str()->check(CLI::PositiveNumber);
  q->add_option("--nu", qa.cfg.nu, "Descent threshold")->capture_default_str()->check(CLI::PositiveNumber);
  q->add_option("--step", qa.cfg.step, "GD step size")->capture_default_str()->check(CLI::PositiveNumber);
  q->add_option("--max-outer", qa.max_outer, "Escape cap")->capture_default_str();
  q->callback([&] { status = cmd_quad_sine(q, qc, qa); });

  Common ac;
  AckleyArgs aa;
  auto* ak = app.add_subcommand("ackley", "GD + ring or BCD + line inspection on the modified Ackley function");
  add_common(ak, ac, 0);
  ak->add_option("--mode", aa.mode, "gd2d or bcd1d")->capture_default_str()->check(CLI::IsMember({"gd2d", "bcd1d"}));
  ak->add_option("--R", aa.cfg.R, "Inspection radius")->capture_default_str()->check(CLI::PositiveNumber);
  ak->add_option("--dR", aa.cfg.dR, "Radius decrement")->capture_default_str()->check(CLI::PositiveNumber);
  ak->add_option("--dtheta", aa.cfg.dtheta, "Angle step")->capture_default_str()->check(CLI::PositiveNumber);
  ak->add_option("--nu", aa.cfg.nu, "Descent threshold")->capture_default_str()->check(CLI::PositiveNumber);
  ak->add_option("--step", aa.cfg.step, "GD/BCD step size")->capture_default_str()->check(CLI::PositiveNumber);
  ak->add_option("--trial", aa.trial, "Start-point stream under the seed")->capture_default_str();
  ak->add_option("--x0", aa.x0, "Explicit start point (two values)")->expected(2);
  ak->add_option("--grid-resolution", aa.grid_resolution, "Grid oracle resolution")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  ak->add_option("--grid-box", aa.grid_box, "Grid oracle half-width")->capture_default_str()->check(CLI::PositiveNumber);
  ak->callback([&] { status = cmd_ackley(ak, ac, aa); });

  Common kc;
  KmeansArgs ka;
  auto* km = app.add_subcommand("kmeans", "EM with per-center inspection on Gaussian clusters or Iris");
  add_common(km, kc, 0);
  km->add_option("--dataset", ka.dataset, "gauss or iris")->capture_default_str()->check(CLI::IsMember({"gauss", "iris"}));
  km->add_option("--trials", ka.trials, "Trials (default 20 for gauss, 500 for iris)");
  km->add_option("--R", ka.R, "Inspection radius (gauss 10, iris 3)")->check(CLI::PositiveNumber);
  km->add_option("--dR", ka.dR, "Radius decrement (gauss 2, iris 1)")->check(CLI::PositiveNumber);
  km->add_option("--dtheta", ka.dtheta, "Angle step (pi/10)")->check(CLI::PositiveNumber);
  km->add_option("--nu", ka.nu, "Descent threshold (gauss 0.1, iris 1e-3)")->check(CLI::PositiveNumber);
  km->add_option("--iris", ka.iris, "Iris CSV path")->capture_default_str();
  km->add_option("--data-seed", ka.data_seed, "Seed of the Gaussian data set")->capture_default_str();
  km->add_option("--init", ka.init, "gauss initialization: adversarial or random")
      ->capture_default_str()
      ->check(CLI::IsMember({"adversarial", "random"}));
  km->add_option("--component", ka.component, "Component the adversarial centers are drawn from")
      ->capture_default_str()
      ->check(CLI::Range(0, 3));
  km->add_option("--oracle-restarts", ka.oracle_restarts, "Random restarts for the gauss oracle")->capture_default_str();
  km->callback([&] { status = cmd_kmeans(km, kc, ka); });

  Common rc;
  RobustArgs ra;
  auto* rr = app.add_subcommand("robust-reg", "IRLS with inspection on Tukey-bisquare regression");
  add_common(rr, rc, 0);
  rr->add_option("--beta0", ra.beta0, "Start (intercept, slope)")->expected(2)->capture_default_str();
  rr->add_option("--R", ra.cfg.R, "Inspection radius")->capture_default_str()->check(CLI::PositiveNumber);
  rr->add_option("--dR", ra.cfg.dR, "Radius decrement")->capture_default_str()->check(CLI::PositiveNumber);
  rr->add_option("--dtheta", ra.cfg.dtheta, "Angle step")->capture_default_str()->check(CLI::PositiveNumber);
  rr->add_option("--nu", ra.cfg.nu, "Descent threshold")->capture_default_str()->check(CLI::PositiveNumber);
  rr->add_option("--r0", ra.cfg.r0, "Tukey cutoff")->capture_default_str()->check(CLI::PositiveNumber);
  rr->add_option("--trials", ra.trials, "Instances (seeds seed, seed+1, ...)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  rr->add_option("--surface-points", ra.surface_points, "Loss-surface grid points per axis")->capture_default_str();
  rr->add_option("--surface-half-width", ra.surface_half_width, "Loss-surface half-width around beta_true")
      ->capture_default_str();
  rr->callback([&] { status = cmd_robust_reg(rr, rc, ra); });

  Common cc;
  CsArgs ca;
  auto* cs = app.add_subcommand("cs", "l1/2 compressed sensing: half thresholding, CD, CD with inspection");
  add_common(cs, cc, 42);
  cs->add_option("--m", ca.m, "Measurements (n = 2m)")->capture_default_str()->check(CLI::PositiveNumber);
  cs->add_option("--trials", ca.trials, "Trials")->capture_default_str();
  cs->add_option("--lambda", ca.lambda, "Regularization weight")->capture_default_str()->check(CLI::PositiveNumber);
  cs->add_option("--algos", ca.algos, "Comma-separated subset of half,cd,cdi")->delimiter(',')->capture_default_str();
  cs->add_option("--R", ca.cfg.R, "Inspection radius")->capture_default_str()->check(CLI::PositiveNumber);
  cs->add_option("--dR", ca.cfg.dR, "Radius decrement")->capture_default_str()->check(CLI::PositiveNumber);
  cs->add_option("--dtheta", ca.cfg.dtheta, "Angle step")->capture_default_str()->check(CLI::PositiveNumber);
  cs->add_option("--nu", ca.cfg.nu, "Descent threshold")->capture_default_str()->check(CLI::PositiveNumber);
  cs->add_option("--support-tol", ca.cfg.support_tol, "Magnitude counted as a nonzero")->capture_default_str();
  cs->callback([&] { status = cmd_cs(cs, cc, ca); });

  Common lc;
  LogRegArgs la;
  auto* lr = app.add_subcommand("logreg", "MCP-penalized logistic regression: prox-linear with and without inspection");
  add_common(lr, lc, 0);
  lr->add_option("--K", la.K, "Sparsity levels, comma-separated")->delimiter(',')->capture_default_str();
  lr->add_option("--eps", la.eps, "Label-noise levels, comma-separated")->delimiter(',')->capture_default_str();
  lr->add_option("--trials", la.trials, "Trials per cell")->capture_default_str();
  lr->add_option("--R", la.cfg.R, "Inspection radius")->capture_default_str()->check(CLI::PositiveNumber);
  lr->add_option("--dR", la.cfg.dR, "Radius decrement")->capture_default_str()->check(CLI::PositiveNumber);
  lr->add_option("--dtheta", la.cfg.dtheta, "Angle step")->capture_default_str()->check(CLI::PositiveNumber);
  lr->add_option("--nu", la.cfg.nu, "Descent threshold")->capture_default_str()->check(CLI::PositiveNumber);
  lr->add_option("--step", la.cfg.step, "Prox-linear step size")->capture_default_str()->check(CLI::PositiveNumber);
  lr->add_option("--lambda", la.cfg.lambda, "MCP lambda")->capture_default_str();
  lr->add_option("--gamma", la.cfg.gamma, "MCP gamma")->capture_default_str();
  lr->add_option("--max-iterations", la.cfg.max_iterations, "Prox-linear iterations per segment")->capture_default_str();
  lr->callback([&] { status = cmd_logreg(lr, lc, la); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
