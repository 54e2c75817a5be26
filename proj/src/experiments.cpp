#include "rdspec/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "rdspec/errors.hpp"
#include "rdspec/hyperbolic_times.hpp"
#include "rdspec/measures.hpp"
#include "rdspec/parallel.hpp"
#include "rdspec/return_points.hpp"
#include "rdspec/sampling.hpp"
#include "rdspec/system_json.hpp"
#include "rdspec/transfer_operator.hpp"
#include "rdspec/validation.hpp"

namespace rdspec {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kWeakStarNote =
    "weak* closeness is measured by W1 on fiber marginals and by the invariance defect over "
    "the test family (base cylinders [w0=s] or X) x (1, cos 2 pi m x, sin 2 pi m x)";

// ---------------------------------------------------------------- parameters

const std::map<std::string, std::set<std::string>>& parameter_table() {
  static const std::map<std::string, std::set<std::string>> table{
      {"validate", {}},
      {"hyp-times", {"samples", "horizon", "c"}},
      {"first-time", {"samples", "horizon", "c"}},
      {"bad-set", {"rho", "N", "grid", "w_samples"}},
      {"itineraries", {"rho", "n_schedule"}},
      {"returns", {"samples", "n", "eps"}},
      {"spec-stats", {"samples", "n_schedule", "eps"}},
      {"transfer", {"G", "T"}},
      {"jacobian", {"G_schedule", "arcs", "T"}},
      {"corollary1", {"r_schedule", "G", "T"}},
      {"corollary2", {"samples", "n_schedule", "eps", "G", "tail"}},
      {"kb-average", {"start", "atoms", "G", "n_schedule", "samples", "max_mode"}},
  };
  return table;
}

class Params {
 public:
  Params(const json& given, const std::string& experiment) : given_(given) {
    if (!given_.is_object()) throw ConfigError("parameters: expected an object");
    const auto& allowed = parameter_table().at(experiment);
    for (const auto& [key, value] : given_.items()) {
      if (!allowed.count(key)) {
        throw ConfigError("parameters." + key + ": not a parameter of experiment '" + experiment + "'");
      }
    }
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 1) {
    const json& v = lookup(key, json(fallback));
    if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min)) {
      throw ConfigError(where(key) + ": expected an integer >= " + std::to_string(min));
    }
    return v.get<std::size_t>();
  }

  double real(const std::string& key, double fallback, double lo, double hi) {
    const json& v = lookup(key, json(fallback));
    if (!v.is_number() || !(v.get<double>() > lo && v.get<double>() < hi)) {
      std::ostringstream msg;
      msg << where(key) << ": expected a number in (" << lo << ", " << hi << ")";
      throw ConfigError(msg.str());
    }
    return v.get<double>();
  }

  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& fallback) {
    const json& v = lookup(key, json(fallback));
    if (!v.is_array() || v.empty()) throw ConfigError(where(key) + ": expected a nonempty array");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 1) {
        throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a positive integer");
      }
      out.push_back(v[i].get<std::size_t>());
    }
    return out;
  }

  std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) {
    const json& v = lookup(key, json(fallback));
    if (!v.is_array() || v.empty()) throw ConfigError(where(key) + ": expected a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     const std::set<std::string>& options) {
    const json& v = lookup(key, json(fallback));
    if (!v.is_string() || !options.count(v.get<std::string>())) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      throw ConfigError(where(key) + ": expected one of {" + list + "}");
    }
    return v.get<std::string>();
  }

  const json& resolved() const { return resolved_; }

 private:
  static std::string where(const std::string& key) { return "parameters." + key; }

  const json& lookup(const std::string& key, json fallback) {
    resolved_[key] = given_.contains(key) ? given_[key] : std::move(fallback);
    return resolved_[key];
  }

  json given_;
  json resolved_ = json::object();
};

// -------------------------------------------------------------------- output

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(std::size_t v) { return std::to_string(v); }

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Table {
 public:
  Table(std::string name, std::vector<std::string> header)
      : name_(std::move(name)), width_(header.size()) {
    add_line(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("table " + name_ + ": row width mismatch");
    add_line(cells);
    ++rows_;
  }

  OutputFile write(const fs::path& dir) const {
    std::ofstream out(dir / name_, std::ios::binary);
    out << text_;
    if (!out) throw ConfigError("output_dir: cannot write " + (dir / name_).string());
    return {name_, rows_};
  }

 private:
  void add_line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += '\n';
  }

  std::string name_;
  std::size_t width_;
  std::size_t rows_ = 0;
  std::string text_;
};

struct Context {
  const RandomSystem& sys;
  Params& params;
  fs::path dir;
  RunManifest& manifest;
  unsigned jobs;

  void emit(const Table& t) { manifest.files.push_back(t.write(dir)); }
  void emit_json(const std::string& name, const json& j) {
    std::ofstream out(dir / name, std::ios::binary);
    out << j.dump(1) << '\n';
    manifest.files.push_back({name, 1});
  }
  void fail(const std::string& what) {
    manifest.assertion_failures.push_back(what + " (reproduce with --seed " +
                                          std::to_string(manifest.seed) + ")");
  }
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::vector<std::size_t> doubling_schedule(std::size_t from, std::size_t to) {
  std::vector<std::size_t> out;
  for (std::size_t n = from; n <= to; n *= 2) out.push_back(n);
  return out;
}

// --------------------------------------------------------------- experiments

void run_validate(Context& ctx) {
  const ValidationReport report = validate_system(ctx.sys);
  Table t("validation.csv", {"hypothesis", "holds", "value", "witness"});
  for (const HypothesisCheck& c : report.checks) {
    t.row({c.hypothesis, c.holds ? "true" : "false", num(c.value), quoted(c.witness)});
  }
  ctx.emit(t);
  ctx.manifest.summary["valid"] = report.valid();
  ctx.manifest.summary["violated"] = report.violated();
}

void run_hyp_times(Context& ctx) {
  const std::size_t samples = ctx.params.count("samples", 20);
  const std::size_t horizon = ctx.params.count("horizon", 1000);
  const double c = ctx.params.real("c", ctx.sys.c(), 0.0, 1e6);
  std::vector<std::vector<std::string>> rows(samples);
  parallel_for(samples, ctx.jobs, [&](std::size_t i) {
    const Draw d = draw_sample(ctx.sys, Stream::hyperbolic, i, horizon);
    const Orbit orbit = iterate_word(ctx.sys, d.word, d.x);
    const HyperbolicTimeRecord rec = hyperbolic_times(orbit, c);
    const NonlacunarityReport gaps = nonlacunarity(rec);
    std::size_t max_gap = 0;
    for (std::size_t g : rec.gaps) max_gap = std::max(max_gap, g);
    rows[i] = {num(i),
               num(horizon),
               num(c),
               num(rec.times.size()),
               num(rec.density_at_horizon),
               rec.first_time ? num(*rec.first_time) : "NA",
               num(max_gap),
               num(gaps.tail_max),
               num(expansion_exponent(orbit).final_average)};
  });
  Table t("hyp_times.csv", {"sample", "horizon", "c", "count", "density", "first_time", "max_gap",
                            "nonlacunarity_tail_max", "mean_log_contraction"});
  for (const auto& r : rows) t.row(r);
  ctx.emit(t);
}

void run_first_time(Context& ctx) {
  const std::size_t samples = ctx.params.count("samples", 1000);
  const std::size_t horizon = ctx.params.count("horizon", 200);
  const double c = ctx.params.real("c", ctx.sys.c(), 0.0, 1e6);
  const FirstTimeStats stats = first_time_stats(ctx.sys, samples, horizon, c, ctx.jobs);
  Table t("first_time.csv", {"n", "count", "tail"});
  for (std::size_t n = 0; n <= horizon; ++n) {
    t.row({num(n), num(n < stats.histogram.size() ? stats.histogram[n] : std::size_t{0}),
           num(stats.tail[n])});
  }
  ctx.emit(t);
  ctx.manifest.summary["mean_first_time"] = stats.mean;
  ctx.manifest.summary["censored"] = stats.censored;
}

void run_bad_set(Context& ctx) {
  const double rho = ctx.params.real("rho", ctx.sys.rho(), 0.0, 1.0);
  const std::size_t N = ctx.params.count("N", 40);
  const std::size_t grid = ctx.params.count("grid", 4000, 1000);
  const std::size_t w_samples = ctx.params.count("w_samples", 32);
  const std::vector<double> measure =
      bad_set_measure_averaged(ctx.sys, rho, N, grid, w_samples, ctx.jobs);
  Table t("bad_set.csv", {"n", "measure", "log_measure"});
  for (std::size_t n = 1; n <= N; ++n) {
    const double m = measure[n - 1];
    t.row({num(n), num(m), m > 0.0 ? num(std::log(m)) : "NA"});
  }
  ctx.emit(t);
  std::size_t positive = 0;
  for (double m : measure) positive += m > 0.0;
  ctx.manifest.summary["log_slope"] = positive >= 2 ? json(log_slope(measure)) : json(nullptr);
  ctx.manifest.summary["positive_entries"] = positive;
}

void run_itineraries(Context& ctx) {
  const double rho = ctx.params.real("rho", ctx.sys.rho(), 0.0, 1.0);
  const auto schedule = ctx.params.counts("n_schedule", {10, 20, 40, 80, 160});
  Table t("itineraries.csv",
          {"n", "rho", "k", "q_hat", "q_bar", "p_hat", "exact", "strict_count", "geq_count",
           "strict_rate", "geq_rate", "log_binomial_bound", "log_stirling_bound"});
  for (std::size_t n : schedule) {
    const ItineraryCount r = itinerary_count(ctx.sys, rho, n);
    t.row({num(n), num(rho), num(static_cast<std::size_t>(r.k)),
           num(static_cast<std::size_t>(r.q_hat)), num(static_cast<std::size_t>(r.q_bar)),
           num(static_cast<std::size_t>(r.p_hat)), r.exact ? "true" : "false",
           r.exact ? r.strict_count.get_str() : "NA", r.exact ? r.geq_count.get_str() : "NA",
           r.exact ? num(r.strict_rate) : "NA", r.exact ? num(r.geq_rate) : "NA",
           num(r.log_binomial_bound), num(r.log_stirling_bound)});
    if (r.exact && r.geq_count > 0 &&
        r.geq_rate * static_cast<double>(n) > r.log_binomial_bound + 1e-9) {
      ctx.fail("itineraries: count exceeds the binomial bound at n = " + std::to_string(n));
    }
  }
  ctx.emit(t);
}

void run_returns(Context& ctx) {
  const std::size_t samples = ctx.params.count("samples", 100);
  const std::size_t n = ctx.params.count("n", 500);
  const double eps = ctx.params.real("eps", 0.01, 0.0, ctx.sys.epsilon0());
  struct Outcome {
    std::vector<std::string> row;
    bool solved = false;
    bool verified = false;
  };
  std::vector<Outcome> out(samples);
  parallel_for(samples, ctx.jobs, [&](std::size_t i) {
    const Draw d = draw_sample(ctx.sys, Stream::returns, i, query_horizon(n));
    Outcome& o = out[i];
    try {
      const ReturnPointResult r = find_return_point(ctx.sys, d.w, d.x, n, eps);
      const ReturnPointCheck check = verify_return_point(ctx.sys, d.w, d.x, r);
      o.solved = true;
      o.verified = check.ok;
      o.row = {num(i), num(n), num(eps), "ok", num(r.period), num(r.K), num(r.shadow_error),
               num(r.fixpoint_residual), num(check.shadow_error), num(check.fixpoint_residual)};
    } catch (const ReturnPointError& e) {
      static const char* kinds[] = {"search_horizon", "exactness", "contraction", "certificate"};
      o.row = {num(i), num(n), num(eps), kinds[static_cast<int>(e.kind())], "NA", "NA", "NA", "NA",
               "NA", "NA"};
    }
  });
  Table t("returns.csv", {"sample", "n", "eps", "status", "period", "K", "shadow_error",
                          "fixpoint_residual", "verified_shadow_error", "verified_fixpoint_residual"});
  std::size_t failed = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    t.row(out[i].row);
    if (!out[i].solved) ++failed;
    if (out[i].solved && !out[i].verified) {
      ctx.fail("returns: sample " + std::to_string(i) + " failed independent re-verification");
    }
  }
  ctx.emit(t);
  ctx.manifest.failures["return_point"] = failed;
  ctx.manifest.summary["failure_rate"] = static_cast<double>(failed) / static_cast<double>(samples);
}

void run_spec_stats(Context& ctx) {
  const std::size_t samples = ctx.params.count("samples", 100);
  const auto schedule = ctx.params.counts("n_schedule", doubling_schedule(50, 3200));
  const double eps = ctx.params.real("eps", 0.01, 0.0, ctx.sys.epsilon0());
  const auto rows = specification_statistics(ctx.sys, samples, schedule, eps, ctx.jobs);
  Table t("spec_stats.csv",
          {"n", "eps", "samples", "median_K_over_n", "p90_K_over_n", "failure_rate"});
  bool nonincreasing = true;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SpecificationRow& r = rows[i];
    t.row({num(r.n), num(r.eps), num(r.samples), num(r.median_K_over_n), num(r.p90_K_over_n),
           num(r.failure_rate)});
    if (i > 0 && r.median_K_over_n > rows[i - 1].median_K_over_n) nonincreasing = false;
    failed += static_cast<std::size_t>(std::llround(r.failure_rate * static_cast<double>(r.samples)));
  }
  ctx.emit(t);
  ctx.manifest.failures["return_point"] = failed;
  ctx.manifest.summary["median_nonincreasing"] = nonincreasing;
  ctx.manifest.summary["final_median_K_over_n"] = rows.back().median_K_over_n;
}

void run_transfer(Context& ctx) {
  const std::size_t G = ctx.params.count("G", 4096, 16);
  const std::size_t T = ctx.params.count("T", 16);
  const BasePoint w = ctx.sys.base().origin();
  const auto word = ctx.sys.word(w, 2 * T);
  const std::span<const Symbol> head(word.data(), T);
  const ReferenceSequence ref = reference_measure_sequence(ctx.sys, head, G);
  const ReferenceSequence longer = reference_measure_sequence(ctx.sys, word, G);

  Table t("transfer.csv", {"j", "symbol", "degree", "lambda", "lambda_minus_degree"});
  double worst = 0.0;
  for (std::size_t j = 0; j < T; ++j) {
    const int deg = ctx.sys.fiber(word[j]).degree();
    const double diff = ref.lambdas[j] - deg;
    worst = std::max(worst, std::fabs(diff));
    t.row({num(j), std::to_string(word[j]), std::to_string(deg), num(ref.lambdas[j]), num(diff)});
  }
  ctx.emit(t);
  if (worst > 1e-12) ctx.fail("transfer: |lambda - deg| = " + num(worst) + " exceeds 1e-12");

  // Truncation: mu_0 from words of length T and 2T.
  const double truncation = wasserstein1(AtomicMeasure::from_grid(ref.measures[0].normalized()),
                                         AtomicMeasure::from_grid(longer.measures[0].normalized()));
  ctx.manifest.summary["max_lambda_minus_degree"] = worst;
  ctx.manifest.summary["truncation_w1_T_vs_2T"] = truncation;
  ctx.emit_json("reference_measure.json", to_json(ref.measures[0]));
}

void run_jacobian(Context& ctx) {
  const auto schedule = ctx.params.counts("G_schedule", {2048, 4096, 8192});
  const std::size_t arcs = ctx.params.count("arcs", 100);
  const std::size_t T = ctx.params.count("T", 8);
  const BasePoint w = ctx.sys.base().origin();
  const auto word = ctx.sys.word(w, T);
  const FiberMap& f = ctx.sys.fiber(word[0]);

  std::mt19937_64 rng(substream_seed(ctx.sys.base().master_seed(),
                                     static_cast<std::uint64_t>(Stream::jacobian), 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Arc> chosen;
  for (std::size_t k = 0; k < arcs; ++k) {
    const int b = static_cast<int>(rng() % static_cast<std::uint64_t>(f.degree()));
    const double lo = f.breakpoints()[b];
    const double hi = f.breakpoints()[b + 1];
    double a = lo + (hi - lo) * unit(rng), c = lo + (hi - lo) * unit(rng);
    if (a > c) std::swap(a, c);
    chosen.push_back({a, c - a});
  }

  Table t("jacobian.csv", {"G", "arcs", "mean_relative_error", "max_relative_error", "bound",
                           "mean_arc_relative_error"});
  std::vector<double> means;
  for (std::size_t G : schedule) {
    if (G < 16) throw ConfigError("parameters.G_schedule: resolutions must be at least 16");
    const ReferenceSequence ref = reference_measure_sequence(ctx.sys, word, G);
    double sum = 0.0, worst = 0.0, arc_sum = 0.0;
    for (const Arc& A : chosen) {
      const JacobianCheck j = jacobian_check(f, ref.measures[0], ref.measures[1], A);
      sum += j.relative_error;
      arc_sum += j.arc_relative_error;
      worst = std::max(worst, j.relative_error);
    }
    const double bound = 2.0 / static_cast<double>(G) + 1e-8;
    means.push_back(sum / static_cast<double>(arcs));
    t.row({num(G), num(arcs), num(means.back()), num(worst), num(bound),
           num(arc_sum / static_cast<double>(arcs))});
    if (worst > bound) {
      ctx.fail("jacobian: max relative error " + num(worst) + " exceeds 2/G + 1e-8 at G = " +
               std::to_string(G));
    }
  }
  ctx.emit(t);
  json ratios = json::array();
  for (std::size_t i = 1; i < means.size(); ++i) {
    ratios.push_back(means[i - 1] > 0.0 ? json(means[i] / means[i - 1]) : json(nullptr));
  }
  ctx.manifest.summary["mean_error_ratios"] = ratios;
}

void run_corollary1(Context& ctx) {
  const auto schedule = ctx.params.counts("r_schedule", {10, 20, 40});
  const std::size_t G = ctx.params.count("G", 4096, 16);
  const std::size_t T = ctx.params.count("T", 16);
  const BasePoint w = ctx.sys.base().origin();
  const ReferenceSequence ref = reference_measure_sequence(ctx.sys, ctx.sys.word(w, T), G);
  Table t("corollary1.csv", {"r", "w1", "mesh_bound", "placement_error", "bound"});
  std::vector<double> values(schedule.size(), 0.0);
  std::vector<std::string> errors(schedule.size());
  std::vector<std::vector<std::string>> rows(schedule.size());
  parallel_for(schedule.size(), ctx.jobs, [&](std::size_t i) {
    const std::size_t r = schedule[i];
    if (r < 2) throw ConfigError("parameters.r_schedule: r must be at least 2");
    try {
      const DisintegrationApprox a = atomic_disintegration_approx(ctx.sys, ref.measures[0], w, r);
      values[i] = a.w1;
      rows[i] = {num(r), num(a.w1), num(a.mesh_bound), num(a.placement_error), num(a.bound())};
    } catch (const AssertionFailure& e) {
      errors[i] = e.what();
      rows[i] = {num(r), "NA", num(0.5 / static_cast<double>(r)), "NA", "NA"};
    }
  });
  bool decreasing = true;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    t.row(rows[i]);
    if (!errors[i].empty()) ctx.fail(errors[i]);
    if (i > 0 && !(values[i] < values[i - 1])) decreasing = false;
  }
  ctx.emit(t);
  ctx.manifest.summary["w1_decreasing_in_r"] = decreasing;
  ctx.manifest.summary["weak_star"] = kWeakStarNote;
}

void run_corollary2(Context& ctx) {
  const std::size_t samples = ctx.params.count("samples", 4);
  const auto schedule = ctx.params.counts("n_schedule", {50, 100, 200, 400, 800});
  const double eps = ctx.params.real("eps", 0.01, 0.0, ctx.sys.epsilon0());
  const std::size_t G = ctx.params.count("G", 2048, 16);
  const std::size_t tail = ctx.params.count("tail", 16);
  const std::size_t n_max = *std::max_element(schedule.begin(), schedule.end());
  const Observable obs = Observable::cosine(1);

  const std::size_t cells = samples * schedule.size();
  std::vector<std::vector<std::string>> rows(cells);
  std::vector<std::string> errors(cells);
  std::vector<bool> solved(cells, false);
  parallel_for(cells, ctx.jobs, [&](std::size_t k) {
    const std::size_t i = k / schedule.size();
    const std::size_t n = schedule[k % schedule.size()];
    const Draw d = draw_sample(ctx.sys, Stream::corollary, i, query_horizon(n_max));
    try {
      const ReturnPointResult r = find_return_point(ctx.sys, d.w, d.x, n, eps);
      const AtomicMeasure orbit = return_orbit_measure(ctx.sys, r, d.w);
      const ReferenceSequence ref =
          reference_measure_sequence(ctx.sys, ctx.sys.word(d.w, n + tail), G);
      const GridDistance dist = fiber_average_comparison(ref.measures, n, orbit);
      std::string sum_diff = "NA", sum_bound = "NA";
      try {
        const SumComparison s = sum_comparison(ctx.sys, d.w, r, obs);
        sum_diff = num(s.difference);
        sum_bound = num(s.bound);
      } catch (const AssertionFailure& e) {
        errors[k] = e.what();
      }
      solved[k] = true;
      rows[k] = {num(i), num(n), num(r.period), num(r.K), num(dist.value),
                 num(dist.discretization_bound), sum_diff, sum_bound};
    } catch (const ReturnPointError&) {
      rows[k] = {num(i), num(n), "NA", "NA", "NA", "NA", "NA", "NA"};
    }
  });
  Table t("corollary2.csv", {"sample", "n", "period", "K", "w1", "discretization_bound",
                             "sum_difference", "sum_bound"});
  std::size_t failed = 0;
  for (std::size_t k = 0; k < cells; ++k) {
    t.row(rows[k]);
    if (!solved[k]) ++failed;
    if (!errors[k].empty()) ctx.fail(errors[k]);
  }
  ctx.emit(t);
  ctx.manifest.failures["return_point"] = failed;
  ctx.manifest.summary["observable"] = obs.label();
  ctx.manifest.summary["weak_star"] = kWeakStarNote;
}

void run_kb_average(Context& ctx) {
  const std::string start = ctx.params.choice("start", "atoms", {"atoms", "uniform"});
  KrylovStart nu;
  if (start == "atoms") {
    const auto positions = ctx.params.reals("atoms", {0.1, 0.2});
    std::vector<Atom> atoms;
    for (double x : positions) {
      if (!(x >= 0.0 && x < 1.0)) throw ConfigError("parameters.atoms: positions must lie in [0,1)");
      atoms.push_back({x, 1.0 / static_cast<double>(positions.size())});
    }
    nu = KrylovStart::from(AtomicMeasure(atoms));
  } else {
    nu = KrylovStart::uniform(ctx.params.count("G", 101));
  }
  const auto schedule = ctx.params.counts("n_schedule", {25, 50, 100, 200});
  KrylovOptions opts;
  opts.base_samples = ctx.params.count("samples", 4000);
  opts.max_mode = static_cast<int>(ctx.params.count("max_mode", 3));
  opts.jobs = ctx.jobs;
  Table t("kb_average.csv", {"n", "defect", "bound", "worst_observable"});
  try {
    for (const KrylovRow& row : krylov_bogolioubov(ctx.sys, nu, schedule, opts)) {
      t.row({num(row.n), num(row.defect), num(row.bound), quoted(row.worst)});
    }
  } catch (const AssertionFailure& e) {
    ctx.fail(e.what());
  }
  ctx.emit(t);
  ctx.manifest.summary["weak_star"] = kWeakStarNote;
}

using Runner = std::function<void(Context&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"validate", run_validate},       {"hyp-times", run_hyp_times},
      {"first-time", run_first_time},   {"bad-set", run_bad_set},
      {"itineraries", run_itineraries}, {"returns", run_returns},
      {"spec-stats", run_spec_stats},   {"transfer", run_transfer},
      {"jacobian", run_jacobian},       {"corollary1", run_corollary1},
      {"corollary2", run_corollary2},   {"kb-average", run_kb_average},
  };
  return table;
}

// ---------------------------------------------------------------- plot series

struct SeriesSpec {
  std::string table, x, y, file;
};

const std::map<std::string, std::vector<SeriesSpec>>& series_table() {
  static const std::map<std::string, std::vector<SeriesSpec>> table{
      {"validate", {}},
      {"hyp-times", {{"hyp_times.csv", "sample", "density", "density_vs_sample.series"}}},
      {"first-time", {{"first_time.csv", "n", "tail", "first_time_tail.series"}}},
      {"bad-set", {{"bad_set.csv", "n", "log_measure", "log_bad_set_vs_n.series"}}},
      {"itineraries", {{"itineraries.csv", "n", "strict_rate", "itinerary_rate_vs_n.series"}}},
      {"returns", {{"returns.csv", "sample", "K", "K_vs_sample.series"}}},
      {"spec-stats", {{"spec_stats.csv", "n", "median_K_over_n", "K_over_n_vs_n.series"}}},
      {"transfer", {{"transfer.csv", "j", "lambda", "lambda_vs_j.series"}}},
      {"jacobian", {{"jacobian.csv", "G", "mean_relative_error", "jacobian_error_vs_G.series"}}},
      {"corollary1", {{"corollary1.csv", "r", "w1", "w1_vs_r.series"}}},
      {"corollary2", {{"corollary2.csv", "n", "w1", "w1_vs_n.series"}}},
      {"kb-average", {{"kb_average.csv", "n", "defect", "defect_vs_n.series"}}},
  };
  return table;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool in_quotes = false;
  for (char c : line) {
    if (c == '"') {
      in_quotes = !in_quotes;
    } else if (c == ',' && !in_quotes) {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "validate",   "hyp-times",  "first-time", "bad-set",    "itineraries", "returns",
      "spec-stats", "transfer",   "jacobian",   "corollary1", "corollary2",  "kb-average"};
  return names;
}

ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  if (!j.contains("system")) {
    cfg.system = j;
    system_from_json(cfg.system);
    return cfg;
  }
  static const std::set<std::string> known{"system", "experiment", "parameters", "output_dir",
                                           "master_seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(key + ": unknown config field");
  }
  cfg.system = j["system"];
  system_from_json(cfg.system);
  if (j.contains("experiment")) {
    if (!j["experiment"].is_string()) throw ConfigError("experiment: expected a string");
    cfg.experiment = j["experiment"].get<std::string>();
    if (!parameter_table().count(cfg.experiment)) {
      throw ConfigError("experiment: unknown experiment '" + cfg.experiment + "'");
    }
  }
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object()) throw ConfigError("parameters: expected an object");
    cfg.parameters = j["parameters"];
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("output_dir: expected a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("master_seed")) {
    const json& seed = j["master_seed"];
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      throw ConfigError("master_seed: expected a nonnegative integer");
    }
    cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
  return parse_experiment_config(j);
}

json RunManifest::to_json() const {
  json files_json = json::array();
  for (const OutputFile& f : files) files_json.push_back({{"file", f.name}, {"rows", f.rows}});
  json out{{"tool", "rdspec"},
           {"version", version},
           {"experiment", experiment},
           {"config_hash", config_hash},
           {"seed", seed},
           {"parameters", parameters},
           {"files", files_json},
           {"failures", failures},
           {"assertion_failures", assertion_failures},
           {"status", passed() ? "ok" : "assertion_failure"},
           {"summary", summary}};
  if (wall_time_seconds) out["wall_time_seconds"] = *wall_time_seconds;
  return out;
}

RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto it = runners().find(config.experiment);
  if (it == runners().end()) {
    throw ConfigError("experiment: unknown experiment '" + config.experiment + "'");
  }
  const auto started = std::chrono::steady_clock::now();
  RandomSystem sys = system_from_json(config.system);
  if (config.master_seed) sys = sys.with_seed(*config.master_seed);
  Params params(config.parameters, config.experiment);

  RunManifest manifest;
  manifest.experiment = config.experiment;
  manifest.seed = sys.base().master_seed();
  const fs::path dir = config.output_dir.empty() ? fs::path("out") / config.experiment
                                                 : fs::path(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output_dir: cannot create " + dir.string() + " (" + ec.message() + ")");

  Context ctx{sys, params, dir, manifest, std::max(1u, options.jobs)};
  it->second(ctx);

  manifest.parameters = params.resolved();
  const json hashed{{"system", rdspec::to_json(sys)},
                    {"experiment", config.experiment},
                    {"parameters", manifest.parameters},
                    {"version", manifest.version}};
  manifest.config_hash = hex64(fnv1a(hashed.dump()));
  if (options.record_time) {
    manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << manifest.to_json().dump(1) << '\n';
  if (!out) throw ConfigError("output_dir: cannot write manifest.json");
  return manifest;
}

std::vector<fs::path> emit_plot_series(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("manifest: cannot open " + manifest_path.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("manifest: not valid JSON (" + std::string(e.what()) + ")");
  }
  if (!m.is_object() || !m.contains("files") || !m["files"].is_array() || m["files"].empty()) {
    throw ConfigError("manifest: no output tables listed");
  }
  const std::string experiment = m.value("experiment", "");
  const auto spec_it = series_table().find(experiment);
  if (spec_it == series_table().end()) {
    throw ConfigError("manifest.experiment: unknown experiment '" + experiment + "'");
  }
  const fs::path dir = manifest_path.parent_path();
  std::vector<fs::path> written;
  for (const SeriesSpec& s : spec_it->second) {
    bool listed = false;
    for (const auto& f : m["files"]) listed = listed || f.value("file", "") == s.table;
    std::ifstream table(dir / s.table);
    if (!listed || !table) throw ConfigError("manifest: missing table " + s.table);
    std::string line;
    std::getline(table, line);
    const auto header = split_csv_line(line);
    const auto col = [&](const std::string& name) {
      const auto pos = std::find(header.begin(), header.end(), name);
      if (pos == header.end()) throw ConfigError(s.table + ": missing column " + name);
      return static_cast<std::size_t>(pos - header.begin());
    };
    const std::size_t xi = col(s.x), yi = col(s.y);
    std::vector<std::pair<std::string, std::string>> points;
    while (std::getline(table, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells.at(yi) == "NA") continue;
      points.emplace_back(cells.at(xi), cells.at(yi));
    }
    std::ostringstream text;
    text << "# " << s.x << ' ' << s.y << '\n';
    if (experiment == "bad-set") {
      // Least-squares slope of log measure against n.
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (const auto& [x, y] : points) {
        const double xv = std::stod(x), yv = std::stod(y);
        sx += xv;
        sy += yv;
        sxx += xv * xv;
        sxy += xv * yv;
      }
      const double k = static_cast<double>(points.size());
      const double denom = k * sxx - sx * sx;
      text << "# slope " << (points.size() >= 2 && denom != 0.0 ? num((k * sxy - sx * sy) / denom) : "NA")
           << '\n';
    }
    for (const auto& [x, y] : points) text << x << ' ' << y << '\n';
    const fs::path target = dir / s.file;
    std::ofstream out(target, std::ios::binary);
    out << text.str();
    written.push_back(target);
  }
  return written;
}

}  // namespace rdspec
