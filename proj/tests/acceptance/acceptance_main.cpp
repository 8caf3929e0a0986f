// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.
//
//   gradplan_acceptance                 all criteria
//   gradplan_acceptance --criterion 4   just one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradplan/autodiff.hpp"
#include "gradplan/baselines.hpp"
#include "gradplan/config.hpp"
#include "gradplan/domains.hpp"
#include "gradplan/harness.hpp"
#include "gradplan/optimizer.hpp"
#include "gradplan/planner.hpp"
#include "reference_models.hpp"

namespace {

using namespace gradplan;
using planner::ActionTensor;
using planner::Algorithm;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Resident set size in KiB from /proc, 0 when unavailable.
long rss_kib(const char* field = "VmRSS:") {
  std::ifstream in("/proc/self/status");
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(field, 0) == 0) return std::stol(line.substr(std::strlen(field)));
  }
  return 0;
}

// ---------------------------------------------------------------- 1
Outcome gradient_correctness() {
  constexpr std::size_t kHorizon = 10, kBatch = 4, kPoints = 100;
  constexpr long double kStep = 1e-5L;
  constexpr double kTol = 1e-5, kMargin = 1e-3;
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_where = "-";
  std::uint64_t seed = 1000;
  for (const auto& name : domains::domain_names()) {
    const auto params = domains::default_params(name);
    const auto spec = domains::make_domain(params);
    planner::BatchEvaluator eval(spec, kHorizon);
    const auto& tape = eval.program().tape();
    autodiff::Workspace ws;
    std::vector<double> values(kBatch);
    for (std::size_t point = 0; point < kPoints; ++point) {
      ActionTensor acts;
      for (std::size_t attempt = 0;; ++attempt) {
        if (attempt == 10000) {
          return {false, name + ": no interior point found after 10000 draws"};
        }
        acts = planner::init_actions(spec, kBatch, kHorizon, seed++);
        bool interior = true;
        for (std::size_t i = 0; i < kBatch && interior; ++i) {
          ws.forward(tape, acts.instance(i));
          interior = ws.kink_margin(tape) >= kMargin;
        }
        if (interior) break;
      }
      std::vector<double> grads(acts.data.size());
      eval.evaluate(acts, values, grads);

      std::vector<long double> v2(kBatch);
      std::vector<std::vector<long double>> x(kBatch);
      for (std::size_t i = 0; i < kBatch; ++i) {
        const auto inst = acts.instance(i);
        x[i].assign(inst.begin(), inst.end());
        const long double v =
            testing::reference_value<long double>(params, x[i], kHorizon);
        v2[i] = v * v;
      }
      for (std::size_t i = 0; i < kBatch; ++i) {
        long double others = 0;
        for (std::size_t k = 0; k < kBatch; ++k) {
          if (k != i) others += v2[k];
        }
        const auto loss = [&](std::span<const long double> xi) {
          const long double v = testing::reference_value<long double>(params, xi, kHorizon);
          return (others + v * v) / static_cast<long double>(kBatch);
        };
        const auto fd = autodiff::finite_difference_gradient<long double>(
            loss, x[i], kStep);
        for (std::size_t c = 0; c < fd.size(); ++c) {
          const double g = grads[i * x[i].size() + c];
          const double f = static_cast<double>(fd[c]);
          const double err = std::abs(g - f) / std::max({1.0, std::abs(g), std::abs(f)});
          if (err > worst) {
            worst = err;
            worst_where = fmt("%s point %zu instance %zu coord %zu (ad %.12g fd %.12g)",
                              name.c_str(), point, i, c, g, f);
          }
        }
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst <= kTol && secs < 60.0,
          fmt("max error %.3g at %s; %.1f s", worst, worst_where.c_str(), secs)};
}

// ---------------------------------------------------------------- 2
Outcome rmsprop_step() {
  // 1 - 0.1 * 0.1 / sqrt(0.1 * 0.1^2 + 1e-8), computed offline in Python.
  constexpr double kExpected = 0.6837738151101336;
  planner::OptimizerState opt(Algorithm::kRmsProp, 0.1, 1, 1e-8);
  std::vector<double> a{1.0};
  opt.step(a, std::vector<double>{0.1});
  const double err = std::abs(a[0] - kExpected);
  const double gerr = std::abs(opt.second_moment()[0] - 0.001);
  return {err <= 1e-9 && gerr <= 1e-15,
          fmt("a' = %.16g (error %.3g), G' = %.16g", a[0], err, opt.second_moment()[0])};
}

// ---------------------------------------------------------------- 3
Outcome lambda_tables() {
  using domains::NavVariant;
  struct Case {
    double d;
    NavVariant variant;
    double expected;
  };
  const Case cases[] = {
      {0.0, NavVariant::kLinear, 0.05},   {0.5, NavVariant::kLinear, 0.05},
      {0.79, NavVariant::kLinear, 0.05},  {0.8, NavVariant::kLinear, 0.2},
      {1.2, NavVariant::kLinear, 0.2},    {1.6, NavVariant::kLinear, 0.4},
      {2.0, NavVariant::kLinear, 0.4},    {2.4, NavVariant::kLinear, 0.6},
      {3.0, NavVariant::kLinear, 0.6},    {3.2, NavVariant::kLinear, 0.6},
      {3.59, NavVariant::kLinear, 0.6},   {3.6, NavVariant::kLinear, 0.8},
      {3.99, NavVariant::kLinear, 0.8},   {4.0, NavVariant::kLinear, 1.0},
      {7.5, NavVariant::kLinear, 1.0},    {0.0, NavVariant::kBilinear, 0.0},
      {1.0, NavVariant::kBilinear, 0.25}, {2.0, NavVariant::kBilinear, 0.5},
      {3.0, NavVariant::kBilinear, 0.75}, {4.0, NavVariant::kBilinear, 1.0},
      {9.0, NavVariant::kBilinear, 1.0},
  };
  std::size_t bad = 0;
  std::string first;
  for (const auto& c : cases) {
    const double got = domains::nav_lambda(c.d, c.variant);
    if (got != c.expected) {
      if (bad++ == 0) first = fmt("; first mismatch d=%g gave %.17g", c.d, got);
    }
  }
  return {bad == 0, fmt("%zu cases, %zu mismatches%s", std::size(cases), bad, first.c_str())};
}

// ---------------------------------------------------------------- 4
struct BenchmarkRun {
  const char* domain;
  cli::KeyValues settings;
};

Outcome beats_heuristic() {
  const auto start = Clock::now();
  const BenchmarkRun runs[] = {
      {"nav-nonlinear",
       {{"batch", "100"}, {"horizon", "120"}, {"optimizer", "adam"}, {"rate", "0.03"}}},
      {"reservoir-nonlinear",
       {{"batch", "20"}, {"horizon", "120"}, {"optimizer", "rmsprop"}, {"rate", "1"}}},
      {"hvac", {{"batch", "20"}, {"horizon", "96"}, {"optimizer", "rmsprop"}, {"rate", "0.01"}}},
  };
  bool all = true;
  std::string detail;
  for (const auto& r : runs) {
    cli::KeyValues entries{{"domain", r.domain}, {"epochs", "2000"}, {"seed", "0"}};
    entries.insert(entries.end(), r.settings.begin(), r.settings.end());
    const auto config = cli::parse_config(entries);
    const auto params = cli::resolve_params(config);
    const auto spec = domains::make_domain(params);
    const auto result = planner::plan(
        spec, cli::planner_config(config, config.optimizer, config.rate));
    const double heuristic =
        baselines::rollout_heuristic(spec, baselines::make_heuristic(params), result.horizon)
            .value;
    const bool ok = result.best_value >= heuristic;
    all = all && ok;
    detail += fmt("%s%s planner %.6f vs heuristic %.6f after %zu epochs [%s]",
                  detail.empty() ? "" : "; ", r.domain, result.best_value, heuristic,
                  result.epochs_run, ok ? "ok" : "short");
  }
  const double secs = seconds_since(start);
  detail += fmt("; %.1f s", secs);
  return {all && secs < 900.0, detail};
}

// ---------------------------------------------------------------- 5
Outcome optimizer_ordering() {
  constexpr std::size_t kEpochs = 10000;
  auto params = domains::hvac_building(3, 4);
  const auto spec = domains::make_hvac(params);
  planner::PlannerConfig config;
  config.instances = 10;
  config.horizon = 48;
  config.epochs = kEpochs;
  config.patience = kEpochs;
  config.rate = 0.001;
  config.seed = 5;
  const auto init = planner::init_actions(spec, config.instances, config.horizon, config.seed);
  const auto final_best = [&](Algorithm alg) {
    auto c = config;
    c.optimizer = alg;
    return planner::plan(spec, c, init).best_value;
  };
  const double rms = final_best(Algorithm::kRmsProp);
  const double sgd = final_best(Algorithm::kSgd);
  const double ada = final_best(Algorithm::kAdagrad);
  return {rms >= sgd && rms >= ada,
          fmt("rmsprop %.6f, sgd %.6f, adagrad %.6f after %zu epochs", rms, sgd, ada, kEpochs)};
}

// ---------------------------------------------------------------- 6
Outcome scalability() {
  const auto start = Clock::now();
  const auto spec = domains::make_domain(domains::default_params("hvac"));
  planner::PlannerConfig config;
  config.instances = 100;
  config.horizon = 96;
  config.epochs = 10;
  config.rate = 0.001;
  std::vector<long> rss;
  const auto result = planner::plan(spec, config, [&](const planner::EpochRecord&) {
    rss.push_back(rss_kib());
  });
  const double secs = seconds_since(start);
  const std::size_t variables = config.instances * config.horizon * spec.action_dim;
  // Entry 0 is the initialization and entry 1 the first update; everything
  // allocated per run exists by then.
  const long growth = rss.size() > 1 ? rss.back() - rss[1] : 0;
  const bool ok = variables == 576000 && result.epochs_run == 10 &&
                  std::isfinite(result.best_value) && secs < 600.0 && growth < 16 * 1024;
  return {ok, fmt("%zu action variables, %zu epochs in %.1f s, best %.4f, peak RSS %ld KiB, "
                  "growth after first epoch %ld KiB",
                  variables, result.epochs_run, secs, result.best_value,
                  rss_kib("VmHWM:"), growth)};
}

// ---------------------------------------------------------------- 7
Outcome projection_invariant() {
  constexpr std::size_t kSteps = 1000;
  const Algorithm algorithms[] = {Algorithm::kSgd, Algorithm::kRmsProp, Algorithm::kAdagrad,
                                  Algorithm::kAdadelta, Algorithm::kAdam};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> exponent(-3.0, 4.0);
  std::size_t checks = 0, violations = 0;
  for (const auto& name : domains::domain_names()) {
    const auto spec = domains::make_domain(domains::default_params(name));
    for (Algorithm alg : algorithms) {
      auto acts = planner::init_actions(spec, 2, 10, rng());
      planner::OptimizerState opt(alg, std::pow(10.0, exponent(rng) - 2.0), acts.data.size());
      std::vector<double> grads(acts.data.size());
      for (std::size_t k = 0; k < kSteps; ++k) {
        const double scale = std::pow(10.0, exponent(rng));
        for (double& g : grads) g = scale * normal(rng);
        opt.step(acts.data, grads);
        planner::project(acts);
        ++checks;
        if (!acts.within_bounds()) ++violations;
      }
    }
  }
  return {violations == 0 && checks > 0,
          fmt("%zu projected steps checked, %zu out of bounds", checks, violations)};
}

// ---------------------------------------------------------------- 8
std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "gradplan_acceptance_determinism";
  fs::remove_all(root);
  std::size_t compared = 0, differing = 0;
  std::string first;
  for (const auto& name : domains::domain_names()) {
    std::vector<std::string> plans;
    for (const char* workers : {"1", "1", "4", "4"}) {
      auto config = cli::parse_config({{"domain", name}, {"batch", "8"}, {"horizon", "30"},
                                       {"epochs", "25"}, {"seed", "11"}, {"workers", workers}});
      config.out_dir = root / fmt("%s_%zu", name.c_str(), plans.size());
      plans.push_back(read_bytes(cli::run(config).plan));
    }
    for (std::size_t k = 1; k < plans.size(); ++k) {
      ++compared;
      if (plans[k] != plans[0] || plans[k].empty()) {
        if (differing++ == 0) first = "; first difference in " + name;
      }
    }
  }
  fs::remove_all(root);
  return {differing == 0,
          fmt("%zu plan.json comparisons across repeats and workers {1, 4}, %zu differ%s",
              compared, differing, first.c_str())};
}

// ---------------------------------------------------------------- 9
double relative(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

Outcome mse_identity() {
  constexpr std::size_t kBatch = 4, kHorizon = 10, kRollouts = 5;
  double worst = 0.0;
  std::size_t compared = 0;
  for (const auto& name : domains::domain_names()) {
    const auto spec = domains::make_domain(domains::default_params(name));
    const auto reference = planner::build_batch_tape(spec, kBatch, kHorizon);
    planner::BatchEvaluator eval(spec, kHorizon);
    autodiff::Workspace ws;
    for (std::size_t r = 0; r < kRollouts; ++r) {
      const auto acts = planner::init_actions(spec, kBatch, kHorizon, 900 + r);
      ws.forward(reference.tape, acts.data);
      ws.backward(reference.tape, reference.loss);
      std::vector<double> expected(acts.data.size());
      ws.input_adjoints(reference.tape, expected);

      std::vector<double> values(kBatch), loss_grads(acts.data.size());
      eval.evaluate(acts, values, loss_grads);
      const std::size_t per = kHorizon * spec.action_dim;
      std::vector<double> dv(per);
      for (std::size_t i = 0; i < kBatch; ++i) {
        const double v = eval.instance_gradient(acts.instance(i), dv);
        for (std::size_t c = 0; c < per; ++c) {
          const double factored = 2.0 / kBatch * v * dv[c];
          worst = std::max({worst, relative(factored, expected[i * per + c]),
                            relative(loss_grads[i * per + c], expected[i * per + c])});
          ++compared;
        }
      }
    }
  }
  return {worst <= 1e-10, fmt("%zu partials, max relative difference %.3g", compared, worst)};
}

// ---------------------------------------------------------------- 10
ActionTensor zero_actions(const domains::DomainSpec& spec, std::size_t horizon) {
  ActionTensor acts;
  acts.instances = 1;
  acts.horizon = horizon;
  acts.dim = spec.action_dim;
  acts.data.assign(horizon * spec.action_dim, 0.0);
  acts.bounds = spec.action_bounds;
  return acts;
}

Outcome fixed_points() {
  std::vector<std::string> failures;

  for (double tau : {5.0, 20.0, 22.5, 31.7}) {
    auto p = domains::hvac_building(5, 12);
    p.outside_temp = tau;
    p.hall_temp = tau;
    p.initial.assign(p.count, tau);
    p.comfort_lower.assign(p.count, tau - 1.0);
    p.comfort_upper.assign(p.count, tau + 1.0);
    const auto spec = domains::make_hvac(p);
    const auto traj = planner::rollout(spec, zero_actions(spec, 96));
    for (double s : traj.states) {
      if (s != tau) {
        failures.push_back(fmt("hvac tau=%g drifted to %.17g", tau, s));
        break;
      }
    }
  }

  for (auto variant : {domains::NavVariant::kNonlinear, domains::NavVariant::kBilinear,
                       domains::NavVariant::kLinear}) {
    for (const std::vector<double>& s0 :
         {std::vector<double>{1.0, 1.0}, {5.0, 5.0}, {0.0, 10.0}, {3.3, 7.1}}) {
      domains::NavigationParams p{variant};
      p.start = s0;
      const auto spec = domains::make_navigation(p);
      const auto traj = planner::rollout(spec, zero_actions(spec, 120));
      for (std::size_t k = 0; k < traj.states.size(); ++k) {
        if (traj.states[k] != s0[k % 2]) {
          failures.push_back(fmt("nav start (%g, %g) moved", s0[0], s0[1]));
          break;
        }
      }
    }
  }

  double worst = 0.0;
  {
    const auto p = domains::reservoir_chain(3, domains::ReservoirVariant::kLinear);
    const auto spec = domains::make_reservoir(p);
    constexpr std::size_t kHorizon = 5, kBatch = 8;
    const auto acts = planner::init_actions(spec, kBatch, kHorizon, 31);
    const auto traj = planner::rollout(spec, acts);
    for (std::size_t i = 0; i < kBatch; ++i) {
      const auto ref = testing::reservoir_states<double>(p, acts.instance(i), kHorizon);
      for (std::size_t t = 0; t <= kHorizon; ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
          worst = std::max(worst, std::abs(traj.state(i, t, j) - ref[t * 3 + j]));
        }
      }
      worst = std::max(worst, std::abs(traj.values[i] - testing::reservoir_value<double>(
                                                            p, acts.instance(i), kHorizon)));
    }
    if (worst > 1e-12) failures.push_back(fmt("reservoir deviation %.3g", worst));
  }

  std::string detail = fmt("hvac and nav exact, reservoir max deviation %.3g", worst);
  if (!failures.empty()) detail = failures.front();
  return {failures.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*check)();
};

const Criterion kCriteria[] = {
    {1, "gradient correctness", gradient_correctness},
    {2, "rmsprop step fidelity", rmsprop_step},
    {3, "lambda tables exact", lambda_tables},
    {4, "planner beats heuristic", beats_heuristic},
    {5, "optimizer ordering", optimizer_ordering},
    {6, "scalability smoke", scalability},
    {7, "projection invariant", projection_invariant},
    {8, "determinism", determinism},
    {9, "mse gradient identity", mse_identity},
    {10, "domain fixed points", fixed_points},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradplan acceptance suite"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")
      ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  for (const auto& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    all_pass = all_pass && out.pass;
    std::printf("%s %d %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
