#include "relrep/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "relrep/error.hpp"
#include "relrep/fim.hpp"
#include "relrep/nn.hpp"
#include "relrep/rng.hpp"
#include "relrep/svg.hpp"

namespace relrep {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::field: return "field";
    case ExperimentKind::gd: return "gd";
    case ExperimentKind::ecm: return "ecm";
    case ExperimentKind::fim: return "fim";
    case ExperimentKind::nn: return "nn";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (auto kind : {ExperimentKind::field, ExperimentKind::gd, ExperimentKind::ecm, ExperimentKind::fim,
                    ExperimentKind::nn}) {
    if (text == to_string(kind)) return kind;
  }
  fail(ErrorCode::config, "unknown experiment `" + text + "` (field | gd | ecm | fim | nn)");
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source,
                                         std::optional<ExperimentKind> expected,
                                         std::optional<std::uint64_t> seed_override) {
  ExperimentConfig config;
  config.text = text;
  config.values = KeyValueText::parse(text, source);
  if (config.values.has("experiment")) {
    const std::string name = config.values.get_string("experiment");
    try {
      config.kind = parse_experiment_kind(name);
    } catch (const Error& e) {
      config.values.field_error("experiment", e.what());
    }
    if (expected && *expected != config.kind) {
      config.values.field_error("experiment", "config is for `" + name + "` but the `" + to_string(*expected) +
                                                  "` subcommand was used");
    }
  } else if (expected) {
    config.kind = *expected;
  } else {
    fail(ErrorCode::config, source + ": missing `experiment` key");
  }
  if (seed_override) {
    config.seed = seed_override;
    if (config.values.has("seed")) config.values.get_u64("seed");
  } else if (config.values.has("seed")) {
    config.seed = config.values.get_u64("seed");
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, std::optional<ExperimentKind> expected,
                                        std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::config, "cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str(), path.string(), expected, seed_override);
}

std::string default_config(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::field:
      return "experiment = field\n"
             "# axis = min max step\n"
             "mu1_axis = -2 2 0.1\n"
             "mu2_axis = -2 2 0.1\n"
             "v = 0.5\n"
             "eta = 1\n"
             "true_mu = 0 0\n"
             "true_pi = 0.5\n"
             "# cells with |mu1 - mu2| < band enter the norm comparison\n"
             "band = 0.2\n"
             "# arrow length = 0.9 * min step * min(1, |velocity| / arrow_cap);\n"
             "# 0 picks the 90th percentile of the panel's norms\n"
             "arrow_cap = 0\n";
    case ExperimentKind::gd:
      return "experiment = gd\n"
             "init = -1.5 1.5\n"
             "true_mu = 0 0\n"
             "pi = 0.5\n"
             "eta = 0.1\n"
             "steps = 200\n"
             "# expected | empirical (empirical needs seed and n_samples)\n"
             "source = expected\n"
             "n_samples = 200\n"
             "# raw_constrained | squared\n"
             "encoding = raw_constrained\n"
             "clearance = 0\n";
    case ExperimentKind::ecm:
      return "experiment = ecm\n"
             "seed = 7\n"
             "init = -2.5 2\n"
             "true_mu = -5.1 -5\n"
             "pi = 0.5 0.5\n"
             "sigma = 1 1\n"
             "n_samples = 200\n"
             "epsilon = 1e-8\n"
             "max_iters = 10000\n"
             "encoding = raw_constrained\n"
             "clearance = 0\n";
    case ExperimentKind::fim:
      return "experiment = fim\n"
             "seed = 11\n"
             "pi = 0.5 0.5\n"
             "mu = -1 1\n"
             "sigma = 1 1\n"
             "encoding = raw_constrained\n"
             "clearance = 0\n"
             "mc_draws = 200000\n"
             "# estimator for the absolute-coordinate matrix that gets transformed:\n"
             "# quadrature, or monte_carlo (reuses the direct estimate's draws)\n"
             "absolute_estimator = quadrature\n"
             "quadrature_nodes = 201\n"
             "se_multiple = 4\n";
    case ExperimentKind::nn:
      return "experiment = nn\n"
             "seed = 3\n"
             "inputs = 3\n"
             "hidden = 5\n"
             "linear_units = 4\n"
             "# any of: elimination overlap linear_dependence\n"
             "plant = elimination overlap linear_dependence\n"
             "tol = 1e-6\n"
             "reparam_column = 0\n"
             "reparam_lambda = 0\n"
             "eval_points = 32\n"
             "demo_steps = 500\n"
             "demo_eta = 0.05\n"
             "demo_lambda = 0.1\n";
  }
  return {};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::io, "SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["config_sha256"] = config_hash;
  j["tool_version"] = tool_version;
  j["csv_schema"] = kCsvSchemaVersion;
  j["wall_seconds"] = wall_seconds;
  j["converged"] = converged;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    j["files"].push_back({{"file", f.file}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

namespace {

std::string schema_line(const std::string& kind, const std::string& extra = {}) {
  return "# schema=" + std::to_string(kCsvSchemaVersion) + " kind=" + kind + (extra.empty() ? "" : " " + extra) +
         "\n";
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::string flow_field_csv(const std::vector<FlowField>& fields) {
  std::string out = schema_line("flow_field");
  out += "mu1,mu2,dmu1_dt,dmu2_dt,parameterization\n";
  for (const auto& field : fields) {
    const std::string p = to_string(field.parameterization);
    for (const auto& c : field.cells) {
      out += fmt(c.mu1) + "," + fmt(c.mu2) + "," + fmt(c.dmu1_dt) + "," + fmt(c.dmu2_dt) + "," + p + "\n";
    }
  }
  return out;
}

std::string trajectory_csv(const Trajectory& trajectory, const std::string& parameterization) {
  std::string out = schema_line("trajectory", "parameterization=" + parameterization +
                                                  (trajectory.diverged ? " diverged=1" : ""));
  out += "step,mu1,mu2,delta,loglik,dist_to_true\n";
  for (const auto& p : trajectory.points) {
    out += std::to_string(p.step) + "," + fmt(p.mu1) + "," + fmt(p.mu2) + "," + fmt(p.delta) + "," + fmt(p.loglik) +
           "," + fmt(p.dist_to_true) + "\n";
  }
  return out;
}

std::string fit_trajectory_csv(const std::vector<std::pair<std::string, const FitResult*>>& runs) {
  std::size_t k = 0;
  for (const auto& run : runs) {
    if (!run.second->trajectory.empty()) k = std::max(k, run.second->trajectory.front().params.size());
  }
  std::string out = schema_line("fit_trajectory");
  out += "algorithm,iteration";
  for (std::size_t j = 0; j < k; ++j) out += ",mu" + std::to_string(j + 1);
  for (std::size_t j = 0; j + 1 < k; ++j) out += k == 2 ? ",delta" : ",delta" + std::to_string(j + 1);
  out += ",loglik,dist_to_true\n";
  for (const auto& [name, fit] : runs) {
    for (const auto& r : fit->trajectory) {
      out += name + "," + std::to_string(r.iteration);
      for (double m : r.params.means) out += "," + fmt(m);
      for (double g : r.gaps) out += "," + fmt(g);
      out += "," + fmt(r.loglik) + "," + (r.dist_to_true ? fmt(*r.dist_to_true) : std::string()) + "\n";
    }
  }
  return out;
}

namespace {

struct Artifact {
  std::string name;
  std::string content;
};

struct Outcome {
  std::vector<Artifact> files;
  std::vector<std::string> summary;
  bool converged = true;
};

void reject_unknown_keys(const KeyValueText& kv) {
  const auto unread = kv.unread_keys();
  if (!unread.empty()) kv.field_error(unread.front(), "unknown key for this experiment");
}

std::uint64_t require_seed(const ExperimentConfig& config, const std::string& why) {
  if (!config.seed) {
    fail(ErrorCode::config, config.values.source() + ": `seed` is required (" + why + "); pass --seed or add it");
  }
  return *config.seed;
}

double positive(const KeyValueText& kv, const std::string& key, double fallback) {
  const double v = kv.get_double(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) kv.field_error(key, "must be finite and > 0");
  return v;
}

double nonnegative(const KeyValueText& kv, const std::string& key, double fallback) {
  const double v = kv.get_double(key, fallback);
  if (!(v >= 0.0) || !std::isfinite(v)) kv.field_error(key, "must be finite and >= 0");
  return v;
}

double open_unit(const KeyValueText& kv, const std::string& key, double fallback) {
  const double v = kv.get_double(key, fallback);
  if (!(v > 0.0 && v < 1.0)) kv.field_error(key, "must lie in (0, 1)");
  return v;
}

std::size_t count_at_least(const KeyValueText& kv, const std::string& key, std::uint64_t fallback,
                           std::uint64_t minimum) {
  const std::uint64_t v = kv.get_u64(key, fallback);
  if (v < minimum) kv.field_error(key, "must be at least " + std::to_string(minimum));
  return static_cast<std::size_t>(v);
}

std::vector<double> sized(const KeyValueText& kv, const std::string& key, std::vector<double> fallback,
                          std::size_t size) {
  auto v = kv.get_doubles(key, std::move(fallback));
  if (v.size() != size) {
    kv.field_error(key, "expected " + std::to_string(size) + " values, got " + std::to_string(v.size()));
  }
  return v;
}

GridAxis read_axis(const KeyValueText& kv, const std::string& key, std::vector<double> fallback) {
  const auto v = sized(kv, key, std::move(fallback), 3);
  GridAxis axis{v[0], v[1], v[2]};
  if (!(axis.step > 0.0) || !(axis.max >= axis.min) || !std::isfinite(axis.max) || !std::isfinite(axis.min)) {
    kv.field_error(key, "need `min max step` with max >= min and step > 0");
  }
  if ((axis.max - axis.min) / axis.step > 1e6) kv.field_error(key, "grid is too large");
  return axis;
}

ReparamSpec read_reparam(const KeyValueText& kv) {
  ReparamSpec spec;
  spec.order_by = OrderBy::mean;
  try {
    spec.encoding = parse_encoding(kv.get_string("encoding", "raw_constrained"));
  } catch (const Error& e) {
    kv.field_error("encoding", e.what());
  }
  spec.clearance = nonnegative(kv, "clearance", 0.0);
  return spec;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string word;
  for (char c : text + " ") {
    if (c == ' ' || c == ',' || c == '\t') {
      if (!word.empty()) out.push_back(word);
      word.clear();
    } else {
      word += c;
    }
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  return values[idx];
}

struct Range {
  double lo = INFINITY;
  double hi = -INFINITY;

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Range padded() const {
    if (!(hi >= lo)) return {0.0, 1.0};
    const double pad = hi > lo ? 0.05 * (hi - lo) : 0.5;
    return {lo - pad, hi + pad};
  }
};

// ---------------------------------------------------------------- field

void draw_field(SvgDocument& svg, const FlowField& field, double left, double cap_setting, const std::string& title) {
  const auto& a1 = field.mu1_axis;
  const auto& a2 = field.mu2_axis;
  const double half1 = a1.max > a1.min ? 0.0 : 0.5, half2 = a2.max > a2.min ? 0.0 : 0.5;
  auto panel = svg.add_panel(left, 40, 360, 360, a1.min - half1, a1.max + half1, a2.min - half2, a2.max + half2,
                             title, "mu1", "mu2");
  const double lo = std::max(a1.min, a2.min), hi = std::min(a1.max, a2.max);
  if (hi > lo) svg.line(panel, lo, lo, hi, hi, "black", 1.0, true);
  std::vector<double> norms;
  for (const auto& c : field.cells) norms.push_back(std::hypot(c.dmu1_dt, c.dmu2_dt));
  double cap = cap_setting > 0.0 ? cap_setting : percentile(norms, 0.9);
  if (!(cap > 0.0)) cap = 1.0;
  const double reach = 0.9 * std::min(a1.count() > 1 ? a1.step : 1.0, a2.count() > 1 ? a2.step : 1.0);
  for (std::size_t i = 0; i < field.cells.size(); ++i) {
    const auto& c = field.cells[i];
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) continue;
    const double len = reach * std::min(1.0, norms[i] / cap);
    svg.arrow(panel, c.mu1, c.mu2, c.dmu1_dt / norms[i] * len, c.dmu2_dt / norms[i] * len,
              field.parameterization == Parameterization::original ? "#c0392b" : "#2c6fbb");
  }
  svg.cross(panel, field.truth.means[0], field.truth.means[1], "#1e8449");
}

double band_mean_norm(const FlowField& field, double band) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& c : field.cells) {
    if (std::abs(c.mu1 - c.mu2) < band) {
      total += std::hypot(c.dmu1_dt, c.dmu2_dt);
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

Outcome run_field(const ExperimentConfig& config) {
  const KeyValueText& kv = config.values;
  const GridAxis a1 = read_axis(kv, "mu1_axis", {-2, 2, 0.1});
  const GridAxis a2 = read_axis(kv, "mu2_axis", {-2, 2, 0.1});
  const double v = open_unit(kv, "v", 0.5);
  const double eta = positive(kv, "eta", 1.0);
  const auto true_mu = sized(kv, "true_mu", {0, 0}, 2);
  const double true_pi = open_unit(kv, "true_pi", 0.5);
  const double band = positive(kv, "band", 0.2);
  const double arrow_cap = nonnegative(kv, "arrow_cap", 0.0);
  reject_unknown_keys(kv);

  const TrueModel truth(MixtureParams::two(true_pi, true_mu[0], true_mu[1]));
  const FlowField original = flow_field(a1, a2, v, truth, Parameterization::original, eta);
  const FlowField relative = flow_field(a1, a2, v, truth, Parameterization::relative, eta);

  SvgDocument svg(880, 460);
  draw_field(svg, original, 70, arrow_cap, "original parameterization");
  draw_field(svg, relative, 500, arrow_cap, "relative parameterization");

  Outcome out;
  out.files.push_back({"field_original.csv", flow_field_csv({original})});
  out.files.push_back({"field_relative.csv", flow_field_csv({relative})});
  out.files.push_back({"field.svg", svg.str()});
  const double n_orig = band_mean_norm(original, band), n_rel = band_mean_norm(relative, band);
  out.summary.push_back("grid=" + std::to_string(a1.count()) + "x" + std::to_string(a2.count()));
  out.summary.push_back("band_mean_norm_original=" + fmt(n_orig));
  out.summary.push_back("band_mean_norm_relative=" + fmt(n_rel));
  out.summary.push_back(std::string("relative_exceeds_original=") + (n_rel > n_orig ? "yes" : "no"));
  return out;
}

// ---------------------------------------------------------------- gd

Outcome run_gd(const ExperimentConfig& config) {
  const KeyValueText& kv = config.values;
  const auto init = sized(kv, "init", {-1.5, 1.5}, 2);
  const auto true_mu = sized(kv, "true_mu", {0, 0}, 2);
  const double pi = open_unit(kv, "pi", 0.5);
  GdConfig gd;
  gd.eta = positive(kv, "eta", 0.1);
  gd.steps = count_at_least(kv, "steps", 200, 1);
  const std::string source = kv.get_string("source", "expected");
  if (source == "expected") {
    gd.source = GradientSource::expected;
  } else if (source == "empirical") {
    gd.source = GradientSource::empirical;
  } else {
    kv.field_error("source", "expected `expected` or `empirical`");
  }
  const std::size_t n = count_at_least(kv, "n_samples", 200, 1);
  gd.reparam = read_reparam(kv);
  reject_unknown_keys(kv);

  GdTarget target;
  target.truth = MixtureParams::two(pi, true_mu[0], true_mu[1]);
  if (gd.source == GradientSource::empirical) {
    target.data = sample(*target.truth, n, require_seed(config, "empirical gradients sample data"));
  }
  const MixtureParams start = MixtureParams::two(pi, init[0], init[1]);
  gd.parameterization = Parameterization::original;
  const Trajectory original = integrate_gd(start, target, gd);
  gd.parameterization = Parameterization::relative;
  const Trajectory relative = integrate_gd(start, target, gd);

  SvgDocument svg(880, 460);
  Range rx, ry, rs, rd;
  for (const auto* t : {&original, &relative}) {
    for (const auto& p : t->points) {
      rx.add(p.mu1);
      ry.add(p.mu2);
      rs.add(static_cast<double>(p.step));
      rd.add(p.dist_to_true);
    }
  }
  rx.add(true_mu[0]);
  ry.add(true_mu[1]);
  const Range bx = rx.padded(), by = ry.padded(), bs = rs.padded(), bd = rd.padded();
  auto left = svg.add_panel(70, 40, 360, 360, bx.lo, bx.hi, by.lo, by.hi, "trajectories", "mu1", "mu2");
  const double lo = std::max(bx.lo, by.lo), hi = std::min(bx.hi, by.hi);
  if (hi > lo) svg.line(left, lo, lo, hi, hi, "black", 1.0, true);
  auto right = svg.add_panel(500, 40, 360, 360, bs.lo, bs.hi, bd.lo, bd.hi, "distance to truth", "step", "distance");
  const std::pair<const Trajectory*, const char*> series[] = {{&original, "#c0392b"}, {&relative, "#2c6fbb"}};
  for (const auto& [t, color] : series) {
    std::vector<double> xs, ys, ss, ds;
    for (const auto& p : t->points) {
      xs.push_back(p.mu1);
      ys.push_back(p.mu2);
      ss.push_back(static_cast<double>(p.step));
      ds.push_back(p.dist_to_true);
    }
    svg.polyline(left, xs, ys, color);
    svg.polyline(right, ss, ds, color);
  }
  svg.cross(left, true_mu[0], true_mu[1], "#1e8449");

  Outcome out;
  out.files.push_back({"gd_original.csv", trajectory_csv(original, "original")});
  out.files.push_back({"gd_relative.csv", trajectory_csv(relative, "relative")});
  out.files.push_back({"gd.svg", svg.str()});
  out.summary.push_back("final_dist_original=" + fmt(original.points.back().dist_to_true));
  out.summary.push_back("final_dist_relative=" + fmt(relative.points.back().dist_to_true));
  out.summary.push_back(std::string("diverged_original=") + (original.diverged ? "yes" : "no"));
  out.summary.push_back(std::string("diverged_relative=") + (relative.diverged ? "yes" : "no"));
  out.converged = !original.diverged && !relative.diverged;
  return out;
}

// ---------------------------------------------------------------- ecm

std::vector<double> padded_series(const FitResult& fit, std::size_t length, bool distance) {
  std::vector<double> out;
  for (const auto& r : fit.trajectory) out.push_back(distance ? r.dist_to_true.value_or(NAN) : r.loglik);
  while (out.size() < length) out.push_back(out.back());
  return out;
}

Outcome run_ecm(const ExperimentConfig& config) {
  const KeyValueText& kv = config.values;
  const auto init = kv.get_doubles("init", {-2.5, 2});
  const std::size_t k = init.size();
  if (k < 2) kv.field_error("init", "need at least two means");
  const auto true_mu = sized(kv, "true_mu", {-5.1, -5}, k);
  const auto pi = sized(kv, "pi", std::vector<double>(k, 1.0 / static_cast<double>(k)), k);
  const auto sigma = sized(kv, "sigma", std::vector<double>(k, 1.0), k);
  const std::size_t n = count_at_least(kv, "n_samples", 200, 1);
  ECMConfig ecm;
  ecm.epsilon = nonnegative(kv, "epsilon", 1e-8);
  ecm.max_iters = count_at_least(kv, "max_iters", 10000, 1);
  const ReparamSpec spec = read_reparam(kv);
  reject_unknown_keys(kv);
  const std::uint64_t seed = require_seed(config, "the dataset is sampled");

  const MixtureParams truth = MixtureParams::make(pi, true_mu, sigma);
  const MixtureParams start = MixtureParams::make(pi, init, sigma);
  const Dataset data = sample(truth, n, seed);
  const FitResult em = fit_em_standard(data, start, ecm, truth);
  const FitResult rel = fit_ecm_relative(data, to_relative(start, spec), spec, ecm, truth);

  const std::size_t length = std::max(em.trajectory.size(), rel.trajectory.size());
  const auto em_dist = padded_series(em, length, true), rel_dist = padded_series(rel, length, true);
  const auto em_ll = padded_series(em, length, false), rel_ll = padded_series(rel, length, false);

  std::string comparison = schema_line("fit_comparison", "note=series_end_repeats_final_value");
  comparison += "iteration,standard_loglik,relative_loglik,standard_dist,relative_dist\n";
  for (std::size_t i = 0; i < length; ++i) {
    comparison += std::to_string(i) + "," + fmt(em_ll[i]) + "," + fmt(rel_ll[i]) + "," + fmt(em_dist[i]) + "," +
                  fmt(rel_dist[i]) + "\n";
  }
  // First iteration from which the relative run stays at or below the standard run.
  std::size_t dominates_from = length;
  for (std::size_t i = length; i-- > 0;) {
    if (!(rel_dist[i] <= em_dist[i])) break;
    dominates_from = i;
  }

  SvgDocument svg(880, 900);
  Range ax, ay, bd, it, ll, dd;
  for (const auto* fit : {&em, &rel}) {
    for (const auto& r : fit->trajectory) {
      ax.add(r.params.means[0]);
      ay.add(r.params.means[1]);
      bd.add(r.params.means[1] - r.params.means[0]);
      it.add(static_cast<double>(r.iteration));
      ll.add(r.loglik);
      dd.add(r.dist_to_true.value_or(NAN));
    }
  }
  const MixtureParams sorted_truth = canonical_order(truth);
  ax.add(true_mu[0]);
  ay.add(true_mu[1]);
  bd.add(sorted_truth.means[1] - sorted_truth.means[0]);
  const Range pax = ax.padded(), pay = ay.padded(), pbd = bd.padded(), pit = it.padded(), pll = ll.padded(),
              pdd = dd.padded();
  auto pa = svg.add_panel(70, 40, 340, 340, pax.lo, pax.hi, pay.lo, pay.hi, "a) trajectories", "mu1", "mu2");
  auto pb = svg.add_panel(510, 40, 340, 340, pax.lo, pax.hi, pbd.lo, pbd.hi, "b) relative coordinates", "mu1",
                          "delta");
  auto pc = svg.add_panel(70, 480, 340, 340, pit.lo, pit.hi, pll.lo, pll.hi, "c) log-likelihood", "iteration",
                          "log-likelihood");
  auto pd = svg.add_panel(510, 480, 340, 340, pit.lo, pit.hi, pdd.lo, pdd.hi, "d) distance to truth", "iteration",
                          "distance");
  const double lo = std::max(pax.lo, pay.lo), hi = std::min(pax.hi, pay.hi);
  if (hi > lo) svg.line(pa, lo, lo, hi, hi, "black", 1.0, true);
  if (pbd.lo < 0.0 && pbd.hi > 0.0) svg.line(pb, pax.lo, 0.0, pax.hi, 0.0, "black", 1.0, true);
  const std::pair<const FitResult*, const char*> series[] = {{&em, "#c0392b"}, {&rel, "#2c6fbb"}};
  for (const auto& [fit, color] : series) {
    std::vector<double> m1, m2, gap, iters, lls, dists;
    for (const auto& r : fit->trajectory) {
      m1.push_back(r.params.means[0]);
      m2.push_back(r.params.means[1]);
      gap.push_back(r.params.means[1] - r.params.means[0]);
      iters.push_back(static_cast<double>(r.iteration));
      lls.push_back(r.loglik);
      dists.push_back(r.dist_to_true.value_or(NAN));
    }
    svg.polyline(pa, m1, m2, color);
    svg.polyline(pb, m1, gap, color);
    svg.polyline(pc, iters, lls, color);
    svg.polyline(pd, iters, dists, color);
  }
  svg.cross(pa, true_mu[0], true_mu[1], "#1e8449");
  svg.cross(pb, sorted_truth.means[0], sorted_truth.means[1] - sorted_truth.means[0], "#1e8449");

  Outcome out;
  out.files.push_back({"data.txt", format_dataset(data)});
  out.files.push_back({"ecm_trajectory.csv", fit_trajectory_csv({{"standard_em", &em}, {"relative_ecm", &rel}})});
  out.files.push_back({"ecm_comparison.csv", comparison});
  out.files.push_back({"ecm.svg", svg.str()});
  out.summary.push_back("standard_iterations=" + std::to_string(em.iterations));
  out.summary.push_back("relative_iterations=" + std::to_string(rel.iterations));
  out.summary.push_back(std::string("standard_converged=") + (em.converged ? "yes" : "no"));
  out.summary.push_back(std::string("relative_converged=") + (rel.converged ? "yes" : "no"));
  out.summary.push_back("standard_final_dist=" + fmt(em_dist.back()));
  out.summary.push_back("relative_final_dist=" + fmt(rel_dist.back()));
  out.summary.push_back(dominates_from < length
                            ? "relative_dist_le_standard_from_iteration=" + std::to_string(dominates_from)
                            : std::string("relative_dist_le_standard_from_iteration=never"));
  out.converged = em.converged && rel.converged;
  return out;
}

// ---------------------------------------------------------------- fim

Outcome run_fim(const ExperimentConfig& config) {
  const KeyValueText& kv = config.values;
  const auto mu = kv.get_doubles("mu", {-1, 1});
  const std::size_t k = mu.size();
  if (k < 1) kv.field_error("mu", "need at least one mean");
  const auto pi = sized(kv, "pi", std::vector<double>(k, 1.0 / static_cast<double>(k)), k);
  const auto sigma = sized(kv, "sigma", std::vector<double>(k, 1.0), k);
  const ReparamSpec spec = read_reparam(kv);
  const std::size_t draws = count_at_least(kv, "mc_draws", 200000, 100);
  const std::string abs_name = kv.get_string("absolute_estimator", "quadrature");
  FimEstimator abs_estimator = FimEstimator::quadrature;
  if (abs_name == "monte_carlo") {
    abs_estimator = FimEstimator::monte_carlo;
  } else if (abs_name != "quadrature") {
    kv.field_error("absolute_estimator", "expected `quadrature` or `monte_carlo`");
  }
  const std::size_t nodes = count_at_least(kv, "quadrature_nodes", 201, 100);
  const double se_multiple = positive(kv, "se_multiple", 4.0);
  reject_unknown_keys(kv);
  const std::uint64_t seed = require_seed(config, "the direct estimate is Monte Carlo");

  const MixtureParams point = canonical_order(MixtureParams::make(pi, mu, sigma));
  // Everything is computed before any file is written, so a guarded point
  // leaves no matrices behind.
  const FisherMatrix direct = fim_estimate(point, FimCoords::relative_means, FimEstimator::monte_carlo, draws, seed, spec);
  const FisherMatrix absolute = fim_estimate(point, FimCoords::means, abs_estimator,
                                             abs_estimator == FimEstimator::quadrature ? nodes : draws, seed, spec);
  const RelativeParams rel = to_relative(point, spec);
  const Eigen::MatrixXd jac = jacobian(rel, spec);
  const FisherMatrix transformed = transform_fim(absolute, jac, direct.coordinate_names, "relative_means_transformed");

  FisherMatrix residual = direct;
  residual.entries = direct.entries - transformed.entries;
  residual.coordinates = "residual_direct_minus_transformed";
  bool within = true;
  double worst_ratio = 0.0;
  for (Eigen::Index r = 0; r < residual.dim(); ++r) {
    for (Eigen::Index c = 0; c < residual.dim(); ++c) {
      // Only the direct side carries Monte-Carlo error: quadrature is
      // deterministic and the Monte-Carlo option reuses the same draws.
      const double bound =
          se_multiple * direct.standard_error(r, c) + 1e-12 * (1.0 + std::abs(direct.entries(r, c)));
      const double err = std::abs(residual.entries(r, c));
      within = within && err <= bound;
      if (bound > 0.0) worst_ratio = std::max(worst_ratio, err / bound);
    }
  }
  const Eigen::VectorXd delta = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
  const double ds_rel = length_element(transformed, delta);
  const double ds_abs = length_element(absolute, jac * delta);
  const double ds_err = std::abs(ds_rel - ds_abs) / std::max(1.0, std::abs(ds_abs));

  std::ostringstream report;
  report << "point: " << format_params(point);
  report << "direct: relative_means, monte_carlo, " << draws << " draws\n";
  report << "transformed: J^T I J from means, " << to_string(abs_estimator) << "\n";
  report << "residual_within_" << fmt(se_multiple) << "_se: " << (within ? "PASS" : "FAIL")
         << " (worst |residual| / bound = " << fmt(worst_ratio) << ")\n";
  report << "direct_symmetric: " << (direct.is_symmetric() ? "PASS" : "FAIL") << "\n";
  report << "direct_psd: " << (direct.is_psd() ? "PASS" : "FAIL") << " (min eigenvalue " << fmt(direct.min_eigenvalue())
         << ")\n";
  report << "transformed_symmetric: " << (transformed.is_symmetric() ? "PASS" : "FAIL") << "\n";
  report << "transformed_psd: " << (transformed.is_psd() ? "PASS" : "FAIL") << " (min eigenvalue "
         << fmt(transformed.min_eigenvalue()) << ")\n";
  report << "length_element_invariance: " << (ds_err <= 1e-12 ? "PASS" : "FAIL") << " (relative error " << fmt(ds_err)
         << ")\n";

  Outcome out;
  out.files.push_back({"fim_absolute.csv", fim_to_csv(absolute)});
  out.files.push_back({"fim_direct.csv", fim_to_csv(direct)});
  out.files.push_back({"fim_transformed.csv", fim_to_csv(transformed)});
  out.files.push_back({"fim_residual.csv", fim_to_csv(residual)});
  out.files.push_back({"fim_report.txt", report.str()});
  out.summary.push_back(std::string("covariance_check=") + (within ? "PASS" : "FAIL"));
  out.summary.push_back("worst_residual_over_bound=" + fmt(worst_ratio));
  out.summary.push_back("length_element_relative_error=" + fmt(ds_err));
  out.converged = within;
  return out;
}

// ---------------------------------------------------------------- nn

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

Outcome run_nn(const ExperimentConfig& config) {
  const KeyValueText& kv = config.values;
  const auto inputs = static_cast<Eigen::Index>(count_at_least(kv, "inputs", 3, 1));
  const auto hidden = static_cast<Eigen::Index>(count_at_least(kv, "hidden", 5, 1));
  const auto linear_units = static_cast<Eigen::Index>(count_at_least(kv, "linear_units", 4, 1));
  const auto plants = split_words(kv.get_string("plant", "elimination overlap linear_dependence"));
  bool plant_elimination = false, plant_overlap = false, plant_dependence = false;
  for (const auto& p : plants) {
    if (p == "elimination") {
      plant_elimination = true;
    } else if (p == "overlap") {
      plant_overlap = true;
    } else if (p == "linear_dependence") {
      plant_dependence = true;
    } else if (p != "none") {
      kv.field_error("plant", "unknown singularity `" + p + "`");
    }
  }
  if (plant_overlap && hidden < 3) kv.field_error("hidden", "planting an overlap needs at least 3 hidden units");
  if (plant_dependence && linear_units < 3) {
    kv.field_error("linear_units", "planting a linear dependence needs at least 3 units");
  }
  DetectOptions detect;
  detect.tol = positive(kv, "tol", 1e-6);
  const auto column = static_cast<Eigen::Index>(kv.get_u64("reparam_column", 0));
  if (column > inputs) kv.field_error("reparam_column", "must index an input weight or the bias (<= inputs)");
  const double lambda = nonnegative(kv, "reparam_lambda", 0.0);
  const auto eval_points = static_cast<Eigen::Index>(count_at_least(kv, "eval_points", 32, 1));
  const std::size_t demo_steps = count_at_least(kv, "demo_steps", 500, 1);
  const double demo_eta = positive(kv, "demo_eta", 0.05);
  const double demo_lambda = nonnegative(kv, "demo_lambda", 0.1);
  reject_unknown_keys(kv);
  const std::uint64_t seed = require_seed(config, "weights are random");

  Rng rng(seed);
  MLPParams mlp;
  mlp.layers.push_back({random_matrix(rng, inputs, hidden), random_matrix(rng, 1, hidden), Activation::tanh});
  mlp.layers.push_back(
      {random_matrix(rng, hidden, linear_units), random_matrix(rng, 1, linear_units), Activation::identity});
  mlp.layers.push_back({random_matrix(rng, linear_units, 1), random_matrix(rng, 1, 1), Activation::identity});
  if (plant_elimination) mlp.layers[1].weights.row(0).setZero();
  if (plant_overlap) {
    mlp.layers[0].weights.col(2) = mlp.layers[0].weights.col(1);
    mlp.layers[0].bias(2) = mlp.layers[0].bias(1);
  }
  if (plant_dependence) {
    auto& l1 = mlp.layers[1];
    l1.weights.col(2) = 2.0 * l1.weights.col(0) + 3.0 * l1.weights.col(1);
    l1.bias(2) = 2.0 * l1.bias(0) + 3.0 * l1.bias(1);
  }
  const NNSingularityReport report = detect_singularities(mlp, detect);

  const RowReparam rep = reparameterize_rows(unit_rows(mlp.layers[0]), lambda, column);
  const MLPParams rebuilt = apply_row_reparam(mlp, 0, rep);
  const Eigen::MatrixXd x = random_matrix(rng, eval_points, inputs);
  const double forward_gap = (forward(mlp, x) - forward(rebuilt, x)).cwiseAbs().maxCoeff();

  std::string reparam_csv = schema_line("nn_row_reparam", "layer=0 column=" + std::to_string(column) +
                                                              " lambda=" + fmt(lambda));
  reparam_csv += "sorted_row,original_unit";
  for (Eigen::Index c = 0; c < rep.encoded.cols(); ++c) {
    reparam_csv += c < inputs ? ",w" + std::to_string(c) : std::string(",bias");
  }
  reparam_csv += ",decoded_order_value\n";
  const Eigen::MatrixXd decoded = rep.decode();
  for (Eigen::Index r = 0; r < rep.encoded.rows(); ++r) {
    reparam_csv += std::to_string(r) + "," + std::to_string(rep.permutation[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < rep.encoded.cols(); ++c) reparam_csv += "," + fmt(rep.encoded(r, c));
    reparam_csv += "," + fmt(decoded(r, column)) + "\n";
  }

  const auto losses = toy_regression_demo(seed, demo_steps, demo_eta, demo_lambda);
  std::string loss_csv = schema_line("nn_demo_loss", "lambda=" + fmt(demo_lambda) + " eta=" + fmt(demo_eta));
  loss_csv += "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) loss_csv += std::to_string(i) + "," + fmt(losses[i]) + "\n";

  std::ostringstream text;
  text << "network: " << inputs << " inputs, " << hidden << " tanh, " << linear_units << " identity, 1 output\n";
  text << "detection (tol " << fmt(detect.tol) << ", relative to layer norm):\n" << report.to_text();
  text << "row reparameterization of layer 0, column " << column << ", lambda " << fmt(lambda)
       << ": max |forward difference| = " << fmt(forward_gap) << "\n";
  text << "demo loss: " << fmt(losses.front()) << " -> " << fmt(losses.back()) << "\n";

  Outcome out;
  out.files.push_back({"nn_report.txt", text.str()});
  out.files.push_back({"nn_singularities.csv", report.to_csv()});
  out.files.push_back({"nn_reparam.csv", reparam_csv});
  out.files.push_back({"nn_demo_loss.csv", loss_csv});
  out.summary.push_back("elimination_hits=" + std::to_string(report.elimination.size()));
  out.summary.push_back("overlap_hits=" + std::to_string(report.overlap.size()));
  out.summary.push_back("linear_dependence_hits=" + std::to_string(report.linear_dependence.size()));
  out.summary.push_back("reparam_forward_max_abs_diff=" + fmt(forward_gap));
  out.summary.push_back("demo_loss_initial=" + fmt(losses.front()));
  out.summary.push_back("demo_loss_final=" + fmt(losses.back()));
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    switch (config.kind) {
      case ExperimentKind::field: outcome = run_field(config); break;
      case ExperimentKind::gd: outcome = run_gd(config); break;
      case ExperimentKind::ecm: outcome = run_ecm(config); break;
      case ExperimentKind::fim: outcome = run_fim(config); break;
      case ExperimentKind::nn: outcome = run_nn(config); break;
    }
  } catch (const Error& e) {
    // Bad values that got past the field checks surface from the modules as
    // argument or domain errors; report them as config problems.
    if (e.code() == ErrorCode::argument || e.code() == ErrorCode::domain) {
      fail(ErrorCode::config, config.values.source() + ": " + e.what());
    }
    throw;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create " + out_dir.string() + ": " + ec.message());

  RunManifest manifest;
  manifest.experiment = to_string(config.kind);
  manifest.config_hash =
      sha256_hex(config.text + "\n# resolved seed: " + (config.seed ? std::to_string(*config.seed) : "none") + "\n");
  manifest.summary = outcome.summary;
  manifest.converged = outcome.converged;
  for (const auto& file : outcome.files) {
    write_file(out_dir / file.name, file.content);
    manifest.files.push_back({file.name, sha256_hex(file.content), file.content.size()});
  }
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(out_dir / "manifest.json", manifest.to_json());
  return manifest;
}

}  // namespace relrep
