#include "rdsmc/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "rdsmc/metrics.hpp"

namespace fs = std::filesystem;

namespace rdsmc {

namespace {

const std::set<std::string> kMetrics = {"log_z",      "logz_bias",  "gmm_weight_bias",
                                        "radius_tvd", "angle_tvd",  "sliced_ksd",
                                        "predictive_ll"};

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Walks a YAML document, collecting unknown keys and type errors.
class Reader {
 public:
  std::vector<std::string> unknown;
  std::vector<std::string> violations;

  void keys(const YAML::Node& node, const std::string& path,
            std::initializer_list<const char*> allowed) {
    if (!node || node.IsNull()) return;
    if (!node.IsMap()) {
      violations.push_back(path + ": expected a mapping");
      return;
    }
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        unknown.push_back(path.empty() ? key : path + "." + key);
    }
  }

  template <class T>
  bool get(const YAML::Node& node, const std::string& path, const char* key, T& out) {
    if (!node || !node.IsMap() || !node[key]) return false;
    try {
      out = node[key].as<T>();
      return true;
    } catch (const YAML::Exception&) {
      violations.push_back(join(path, key) + ": cannot read value '" + scalar(node[key]) + "'");
      return false;
    }
  }

  /// Reads a string key and maps it through `parse`.
  template <class E, class F>
  void get_enum(const YAML::Node& node, const std::string& path, const char* key, E& out,
                F parse) {
    std::string s;
    if (!get(node, path, key, s)) return;
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      violations.push_back(join(path, key) + ": " + e.what());
    }
  }

  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }

 private:
  static std::string scalar(const YAML::Node& n) {
    if (n.IsScalar()) return n.Scalar();
    YAML::Emitter e;
    e << YAML::Flow << n;
    return e.c_str();
  }
};

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "vp") return ScheduleKind::vp;
  if (s == "ve") return ScheduleKind::ve;
  throw std::invalid_argument("unknown schedule kind '" + s + "'");
}

VeProfile profile_from_string(const std::string& s) {
  if (s == "linear") return VeProfile::linear;
  if (s == "quadratic") return VeProfile::quadratic;
  if (s == "exponential") return VeProfile::exponential;
  throw std::invalid_argument("unknown VE profile '" + s + "'");
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  if (p.empty() || fs::path(p).is_absolute() || fs::exists(p)) return p;
  const fs::path candidate = fs::path(base_dir) / p;
  return fs::exists(candidate) ? candidate.string() : p;
}

struct Parsed {
  ExperimentConfig cfg;
  Reader reader;
};

/// "auto" or a number.
void get_scale(Reader& r, const YAML::Node& node, const std::string& path, const char* key,
               double& value, bool& is_auto) {
  if (!node || !node.IsMap() || !node[key]) return;
  if (node[key].IsScalar() && node[key].Scalar() == "auto") {
    is_auto = true;
    return;
  }
  if (r.get(node, path, key, value)) is_auto = false;
}

void check_semantics(Parsed& p) {
  ExperimentConfig& c = p.cfg;
  auto& v = p.reader.violations;
  auto guard = [&v](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      v.push_back(std::string(what) + ": " + e.what());
    }
  };

  static const std::set<std::string> kinds = {"gaussian", "gmm", "rings", "funnel", "logreg"};
  if (!kinds.count(c.target.kind)) {
    v.push_back("target.kind: unknown target '" + c.target.kind + "'");
    return;
  }
  if (c.target.dim < 1) v.push_back("target.dim: must be >= 1");
  if (c.target.kind == "logreg") {
    if (c.target.dataset.empty())
      v.push_back("target.dataset: required for logreg");
    else if (!fs::exists(resolve_path(c.target.dataset, c.base_dir)))
      v.push_back("target.dataset: file not found: " + c.target.dataset);
  }
  if (c.seeds.empty()) v.push_back("seeds: at least one seed is required");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    v.push_back("seeds: seeds must be distinct");
  if (c.steps < 1) v.push_back("schedule.steps: must be >= 1");
  if (c.projections < 1) v.push_back("metric_options.projections: must be >= 1");
  if (c.bins < 1) v.push_back("metric_options.bins: must be >= 1");
  if (c.reference_samples < 0) v.push_back("metric_options.reference_samples: must be >= 0");

  if (!v.empty()) return;
  TargetBundle bundle;
  guard("target", [&] { bundle = build_target(c.target, c.base_dir); });
  if (!bundle.target) return;
  const Target& t = *bundle.target;

  const bool diffusion = c.sampler == SamplerKind::rdsmc || c.sampler == SamplerKind::rdsmc_is ||
                         c.sampler == SamplerKind::rdsmc_proposal;
  if (diffusion) {
    guard("schedule", [&] { DiffusionSchedule(c.schedule, std::max(c.steps, 1)); });
    guard("sampler.outer", [&] { validate_outer_config(c.outer, c.steps); });
    guard("sampler.inner", [&] { validate_inner_config(c.inner, t); });
  } else {
    AnnealConfig a = c.anneal;
    if (c.anneal_radius_auto || c.anneal_tau_auto) {
      const auto s = default_baseline_scale(t);
      if (c.anneal_radius_auto) a.radius = s.radius;
      if (c.anneal_tau_auto) a.tau = s.tau;
    }
    guard("sampler.anneal", [&] { validate_anneal_config(a); });
    if (!t.has_gradient()) v.push_back("sampler.kind: baselines need a target gradient");
  }

  for (const auto& m : c.metrics) {
    if (!kMetrics.count(m)) {
      v.push_back("metrics: unknown metric '" + m + "'");
      continue;
    }
    if ((m == "log_z" || m == "logz_bias") && c.sampler == SamplerKind::rdsmc_proposal)
      v.push_back("metrics: " + m + " is undefined for rdsmc_proposal (no weights)");
    if (m == "logz_bias" && !t.log_normalizer())
      v.push_back("metrics: logz_bias needs a target with known log Z");
    if (m == "gmm_weight_bias" && c.target.kind != "gmm")
      v.push_back("metrics: gmm_weight_bias needs a gmm target");
    if ((m == "radius_tvd" || m == "angle_tvd") && t.dim() != 2)
      v.push_back("metrics: " + m + " needs a 2-D target");
    if ((m == "radius_tvd" || m == "angle_tvd" || m == "sliced_ksd") &&
        c.target.kind != "gaussian" && c.target.kind != "gmm" && c.target.kind != "rings" &&
        c.target.kind != "funnel")
      v.push_back("metrics: " + m + " needs a target with exact samples");
    if (m == "predictive_ll" && c.target.kind != "logreg")
      v.push_back("metrics: predictive_ll needs a logreg target");
  }
}

Parsed parse(const std::string& text, const std::string& base_dir) {
  Parsed p;
  ExperimentConfig& c = p.cfg;
  Reader& r = p.reader;
  c.base_dir = base_dir;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    r.violations.push_back(std::string("config: YAML parse error: ") + e.what());
    return p;
  }
  if (!root || root.IsNull()) {
    r.violations.push_back("config: empty document");
    return p;
  }
  r.keys(root, "", {"name", "target", "sampler", "schedule", "seeds", "metrics",
                    "metric_options", "output"});
  if (!root.IsMap()) return p;
  r.get(root, "", "name", c.name);

  const YAML::Node tn = root["target"];
  if (!tn) r.violations.push_back("target: block is required");
  r.keys(tn, "target", {"kind", "dim", "seed", "box_width", "dataset", "split_seed", "mean",
                        "variance", "log_scale", "gradient"});
  r.get(tn, "target", "kind", c.target.kind);
  r.get(tn, "target", "dim", c.target.dim);
  r.get(tn, "target", "seed", c.target.seed);
  r.get(tn, "target", "box_width", c.target.box_width);
  r.get(tn, "target", "dataset", c.target.dataset);
  if (tn && tn.IsMap() && tn["split_seed"] && tn["split_seed"].IsScalar() &&
      tn["split_seed"].Scalar() == "replicate")
    c.target.split_per_replicate = true;
  else
    r.get(tn, "target", "split_seed", c.target.split_seed);
  r.get(tn, "target", "mean", c.target.mean);
  r.get(tn, "target", "variance", c.target.variance);
  r.get(tn, "target", "log_scale", c.target.log_scale);
  r.get(tn, "target", "gradient", c.target.gradient);
  if (c.target.kind == "rings") c.target.dim = 2;
  if (c.target.kind == "funnel" && !(tn && tn["dim"])) c.target.dim = 10;
  if (c.target.kind == "gaussian" && !c.target.mean.empty())
    c.target.dim = static_cast<int>(c.target.mean.size());

  const YAML::Node sn = root["sampler"];
  r.keys(sn, "sampler", {"kind", "particles", "outer", "inner", "anneal"});
  r.get_enum(sn, "sampler", "kind", c.sampler, sampler_from_string);
  r.get(sn, "sampler", "particles", c.outer.n_particles);
  c.anneal.n_particles = c.outer.n_particles;
  switch (c.sampler) {
    case SamplerKind::rdsmc_is: c.outer.variant = Variant::is_only; break;
    case SamplerKind::rdsmc_proposal: c.outer.variant = Variant::proposal_only; break;
    default: c.outer.variant = Variant::full; break;
  }

  const YAML::Node on = sn ? sn["outer"] : YAML::Node();
  r.keys(on, "sampler.outer", {"resample", "kappa", "t_start"});
  r.get_enum(on, "sampler.outer", "resample", c.outer.scheme, scheme_from_string);
  r.get(on, "sampler.outer", "kappa", c.outer.kappa);
  int t_start = -1;
  if (r.get(on, "sampler.outer", "t_start", t_start)) c.outer.t_start = t_start;

  const YAML::Node in = sn ? sn["inner"] : YAML::Node();
  const std::string ip = "sampler.inner";
  r.keys(in, ip, {"estimator", "identity", "n_is", "n_steps", "m_steps", "kernel", "step",
                  "leapfrog", "proposal", "score_clip", "approx_mean", "approx_variance",
                  "log_marginal_clamp"});
  r.get_enum(in, ip, "estimator", c.inner.estimator, estimator_from_string);
  r.get_enum(in, ip, "identity", c.inner.identity, identity_from_string);
  r.get(in, ip, "n_is", c.inner.n_is);
  r.get(in, ip, "n_steps", c.inner.n_steps);
  r.get(in, ip, "m_steps", c.inner.m_steps);
  r.get_enum(in, ip, "kernel", c.inner.kernel.kind, kernel_from_string);
  r.get(in, ip, "step", c.inner.kernel.step);
  r.get(in, ip, "leapfrog", c.inner.kernel.leapfrog);
  r.get_enum(in, ip, "proposal", c.inner.proposal, proposal_from_string);
  double clip = 0.0;
  if (r.get(in, ip, "score_clip", clip)) c.inner.score_clip = clip;
  std::vector<double> approx_mean;
  if (r.get(in, ip, "approx_mean", approx_mean))
    c.inner.approx_mean = Eigen::Map<const Vector>(approx_mean.data(),
                                                   static_cast<Index>(approx_mean.size()));
  r.get(in, ip, "approx_variance", c.inner.approx_variance);
  std::vector<double> clamp;
  if (r.get(in, ip, "log_marginal_clamp", clamp)) {
    if (clamp.size() == 2)
      c.inner.log_marginal_clamp = std::make_pair(clamp[0], clamp[1]);
    else
      r.violations.push_back(ip + ".log_marginal_clamp: expected [lo, hi]");
  }

  const YAML::Node an = sn ? sn["anneal"] : YAML::Node();
  const std::string ap = "sampler.anneal";
  r.keys(an, ap, {"steps", "mcmc_steps", "n_chains", "step_init", "target_accept",
                  "adapt_rate", "kappa", "resample", "radius", "tau"});
  r.get(an, ap, "steps", c.anneal.steps);
  r.get(an, ap, "mcmc_steps", c.anneal.mcmc_steps);
  r.get(an, ap, "n_chains", c.anneal.n_chains);
  r.get(an, ap, "step_init", c.anneal.step_init);
  r.get(an, ap, "target_accept", c.anneal.target_accept);
  r.get(an, ap, "adapt_rate", c.anneal.adapt_rate);
  r.get(an, ap, "kappa", c.anneal.kappa);
  r.get_enum(an, ap, "resample", c.anneal.scheme, scheme_from_string);
  get_scale(r, an, ap, "radius", c.anneal.radius, c.anneal_radius_auto);
  get_scale(r, an, ap, "tau", c.anneal.tau, c.anneal_tau_auto);

  const YAML::Node dn = root["schedule"];
  r.keys(dn, "schedule", {"kind", "steps", "b_min", "b_max", "profile", "sigma_min", "sigma_max"});
  r.get_enum(dn, "schedule", "kind", c.schedule.kind, schedule_kind_from_string);
  r.get(dn, "schedule", "steps", c.steps);
  r.get(dn, "schedule", "b_min", c.schedule.b_min);
  r.get(dn, "schedule", "b_max", c.schedule.b_max);
  r.get_enum(dn, "schedule", "profile", c.schedule.profile, profile_from_string);
  r.get(dn, "schedule", "sigma_min", c.schedule.sigma_min);
  r.get(dn, "schedule", "sigma_max", c.schedule.sigma_max);

  r.get(root, "", "seeds", c.seeds);
  r.get(root, "", "metrics", c.metrics);

  const YAML::Node mn = root["metric_options"];
  r.keys(mn, "metric_options", {"reference_samples", "projections", "bins"});
  r.get(mn, "metric_options", "reference_samples", c.reference_samples);
  r.get(mn, "metric_options", "projections", c.projections);
  r.get(mn, "metric_options", "bins", c.bins);

  const YAML::Node out = root["output"];
  r.keys(out, "output", {"dir", "samples", "ess_trace", "wall_time"});
  r.get(out, "output", "dir", c.output.dir);
  r.get(out, "output", "samples", c.output.samples);
  r.get(out, "output", "ess_trace", c.output.ess_trace);
  r.get(out, "output", "wall_time", c.output.wall_time);

  if (r.violations.empty()) check_semantics(p);
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string parent_dir(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

void write_rows(const ParticleMatrix& x, const Vector& w, const fs::path& file) {
  std::ofstream out(file);
  for (Index j = 0; j < x.cols(); ++j) out << "x" << (j + 1) << '\t';
  out << "weight\n";
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) out << fmt(x(i, j)) << '\t';
    out << fmt(w(i)) << '\n';
  }
}

void write_trace(const RunResult& r, const fs::path& file) {
  std::ofstream out(file);
  out << "t\tess\tresampled\tmean_inner_ess\tmean_acceptance\tdead_particles\n";
  for (const auto& s : r.trace)
    out << s.t << '\t' << fmt(s.ess) << '\t' << (s.resampled ? 1 : 0) << '\t'
        << fmt(s.mean_inner_ess) << '\t' << fmt(s.mean_acceptance) << '\t' << s.dead_particles
        << '\n';
}

}  // namespace

// ---- Config ----

ValidationReport validate_config_text(const std::string& text, const std::string& base_dir) {
  Parsed p = parse(text, base_dir);
  ValidationReport rep;
  rep.unknown_keys = std::move(p.reader.unknown);
  rep.violations = std::move(p.reader.violations);
  rep.resolved = to_yaml(p.cfg);
  return rep;
}

ValidationReport validate_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const ConfigError& e) {
    ValidationReport rep;
    rep.violations.push_back(e.what());
    return rep;
  }
  return validate_config_text(text, parent_dir(path));
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  Parsed p = parse(text, base_dir);
  if (!p.reader.violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : p.reader.violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
  return p.cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config_text(read_file(path), parent_dir(path));
}

std::string to_yaml(const ExperimentConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;

  e << YAML::Key << "target" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.target.kind;
  e << YAML::Key << "dim" << YAML::Value << c.target.dim;
  if (c.target.kind == "gmm") {
    e << YAML::Key << "seed" << YAML::Value << c.target.seed;
    e << YAML::Key << "box_width" << YAML::Value << c.target.box_width;
  }
  if (c.target.kind == "logreg") {
    e << YAML::Key << "dataset" << YAML::Value << c.target.dataset;
    e << YAML::Key << "split_seed" << YAML::Value;
    if (c.target.split_per_replicate) e << "replicate"; else e << c.target.split_seed;
  }
  if (c.target.kind == "gaussian") {
    e << YAML::Key << "mean" << YAML::Value << YAML::Flow << c.target.mean;
    e << YAML::Key << "variance" << YAML::Value << c.target.variance;
    e << YAML::Key << "log_scale" << YAML::Value << c.target.log_scale;
  }
  e << YAML::Key << "gradient" << YAML::Value << c.target.gradient;
  e << YAML::EndMap;

  e << YAML::Key << "sampler" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << to_string(c.sampler);
  e << YAML::Key << "particles" << YAML::Value << c.outer.n_particles;
  const bool diffusion = c.sampler == SamplerKind::rdsmc || c.sampler == SamplerKind::rdsmc_is ||
                         c.sampler == SamplerKind::rdsmc_proposal;
  if (diffusion) {
    e << YAML::Key << "outer" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "resample" << YAML::Value << to_string(c.outer.scheme);
    e << YAML::Key << "kappa" << YAML::Value << c.outer.kappa;
    e << YAML::Key << "t_start" << YAML::Value << c.outer.t_start.value_or(c.steps);
    e << YAML::EndMap;
    const auto& in = c.inner;
    e << YAML::Key << "inner" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "estimator" << YAML::Value << to_string(in.estimator);
    e << YAML::Key << "identity" << YAML::Value << to_string(in.identity);
    e << YAML::Key << "n_is" << YAML::Value << in.n_is;
    e << YAML::Key << "n_steps" << YAML::Value << in.n_steps;
    e << YAML::Key << "m_steps" << YAML::Value << in.m_steps;
    e << YAML::Key << "kernel" << YAML::Value << to_string(in.kernel.kind);
    e << YAML::Key << "step" << YAML::Value << in.kernel.step;
    e << YAML::Key << "leapfrog" << YAML::Value << in.kernel.leapfrog;
    e << YAML::Key << "proposal" << YAML::Value << to_string(in.proposal);
    if (in.score_clip) e << YAML::Key << "score_clip" << YAML::Value << *in.score_clip;
    if (in.proposal == InnerProposal::gaussian_approx) {
      e << YAML::Key << "approx_mean" << YAML::Value << YAML::Flow
        << std::vector<double>(in.approx_mean.data(), in.approx_mean.data() + in.approx_mean.size());
      e << YAML::Key << "approx_variance" << YAML::Value << in.approx_variance;
    }
    if (in.log_marginal_clamp)
      e << YAML::Key << "log_marginal_clamp" << YAML::Value << YAML::Flow
        << std::vector<double>{in.log_marginal_clamp->first, in.log_marginal_clamp->second};
    e << YAML::EndMap;
  } else {
    const auto& a = c.anneal;
    e << YAML::Key << "anneal" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "steps" << YAML::Value << a.steps;
    e << YAML::Key << "mcmc_steps" << YAML::Value << a.mcmc_steps;
    e << YAML::Key << "n_chains" << YAML::Value << a.n_chains;
    e << YAML::Key << "step_init" << YAML::Value << a.step_init;
    e << YAML::Key << "target_accept" << YAML::Value << a.target_accept;
    e << YAML::Key << "adapt_rate" << YAML::Value << a.adapt_rate;
    if (c.sampler == SamplerKind::smc_baseline) {
      e << YAML::Key << "kappa" << YAML::Value << a.kappa;
      e << YAML::Key << "resample" << YAML::Value << to_string(a.scheme);
    }
    e << YAML::Key << "radius" << YAML::Value;
    if (c.anneal_radius_auto) e << "auto"; else e << a.radius;
    e << YAML::Key << "tau" << YAML::Value;
    if (c.anneal_tau_auto) e << "auto"; else e << a.tau;
    e << YAML::EndMap;
  }
  e << YAML::EndMap;

  if (diffusion) {
    e << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "kind" << YAML::Value << to_string(c.schedule.kind);
    e << YAML::Key << "steps" << YAML::Value << c.steps;
    if (c.schedule.kind == ScheduleKind::vp) {
      e << YAML::Key << "b_min" << YAML::Value << c.schedule.b_min;
      e << YAML::Key << "b_max" << YAML::Value << c.schedule.b_max;
    } else {
      e << YAML::Key << "profile" << YAML::Value << to_string(c.schedule.profile);
      if (c.schedule.profile == VeProfile::exponential)
        e << YAML::Key << "sigma_min" << YAML::Value << c.schedule.sigma_min;
      e << YAML::Key << "sigma_max" << YAML::Value << c.schedule.sigma_max;
    }
    e << YAML::EndMap;
  }

  e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.seeds;
  e << YAML::Key << "metrics" << YAML::Value << YAML::Flow << c.metrics;
  e << YAML::Key << "metric_options" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "reference_samples" << YAML::Value << c.reference_samples;
  e << YAML::Key << "projections" << YAML::Value << c.projections;
  e << YAML::Key << "bins" << YAML::Value << c.bins;
  e << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dir" << YAML::Value << c.output.dir;
  e << YAML::Key << "samples" << YAML::Value << c.output.samples;
  e << YAML::Key << "ess_trace" << YAML::Value << c.output.ess_trace;
  e << YAML::Key << "wall_time" << YAML::Value << c.output.wall_time;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

// ---- Targets ----

TargetBundle build_target(const TargetSpec& s, const std::string& base_dir) {
  TargetBundle b;
  std::shared_ptr<const Target> t;
  if (s.kind == "gaussian") {
    Vector mean = s.mean.empty() ? Vector::Zero(s.dim)
                                 : Vector(Eigen::Map<const Vector>(
                                       s.mean.data(), static_cast<Index>(s.mean.size())));
    t = std::make_shared<GaussianTarget>(std::move(mean), s.variance, s.log_scale);
  } else if (s.kind == "gmm") {
    b.gmm = gmm_generate(s.dim, s.seed, s.box_width);
    t = std::make_shared<GmmTarget>(*b.gmm);
  } else if (s.kind == "rings") {
    t = std::make_shared<RingsTarget>();
  } else if (s.kind == "funnel") {
    t = std::make_shared<FunnelTarget>(s.dim);
  } else if (s.kind == "logreg") {
    b.data = load_dataset(resolve_path(s.dataset, base_dir), s.split_seed);
    t = std::make_shared<LogRegTarget>(b.data->train.features, b.data->train.labels);
  } else {
    throw std::invalid_argument("unknown target '" + s.kind + "'");
  }
  b.target = s.gradient ? t : std::make_shared<GradientFreeTarget>(t);
  return b;
}

// ---- Running ----

ReplicateOutcome run_replicate(const ExperimentConfig& c, const TargetBundle& bundle,
                               std::uint64_t seed, int workers) {
  ReplicateOutcome o;
  o.seed = seed;
  const Target& target = *bundle.target;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (c.sampler == SamplerKind::ais_baseline || c.sampler == SamplerKind::smc_baseline) {
      AnnealConfig a = c.anneal;
      a.n_particles = c.outer.n_particles;
      a.workers = workers;
      const auto scale = default_baseline_scale(target);
      if (c.anneal_radius_auto) a.radius = scale.radius;
      if (c.anneal_tau_auto) a.tau = scale.tau;
      o.run = c.sampler == SamplerKind::ais_baseline ? run_ais_baseline(target, a, seed)
                                                     : run_smc_baseline(target, a, seed);
    } else {
      OuterConfig outer = c.outer;
      outer.workers = workers;
      const DiffusionSchedule schedule(c.schedule, c.steps);
      o.run = run_rdsmc(target, schedule, outer, c.inner, seed);
    }
    if (o.run.degenerate) throw DegenerateError(o.run.failure);

    const Index n_ref = c.reference_samples > 0 ? c.reference_samples : o.run.positions.rows();
    std::optional<ParticleMatrix> ref;
    auto reference = [&]() -> const ParticleMatrix& {
      if (!ref) {
        RngStream rr(seed, {purpose::metric, 0});
        ref = target.sample(n_ref, rr);
        if (!ref) throw std::invalid_argument("target has no exact sampler");
      }
      return *ref;
    };
    const auto& x = o.run.positions;
    const auto& w = o.run.weights;
    for (const auto& m : c.metrics) {
      if (m == "log_z") {
        o.metrics.push_back({m, o.run.log_z.value()});
      } else if (m == "logz_bias") {
        const double truth = target.log_normalizer().value();
        const double lz = o.run.log_z.value();
        o.metrics.push_back({m, logz_bias(lz, truth)});
        o.metrics.push_back({"z_bias", std::abs(std::exp(lz) - std::exp(truth))});
      } else if (m == "gmm_weight_bias") {
        o.metrics.push_back({m, gmm_weight_ratio_bias(x, w, bundle.gmm.value())});
      } else if (m == "radius_tvd") {
        const auto& r = reference();
        o.metrics.push_back({m, histogram_tvd(radii(x), w, radii(r), Vector::Ones(r.rows()),
                                              c.bins, 0.0, 8.0)});
      } else if (m == "angle_tvd") {
        const auto& r = reference();
        o.metrics.push_back({m, histogram_tvd(angles(x), w, angles(r), Vector::Ones(r.rows()),
                                              c.bins, -std::numbers::pi, std::numbers::pi)});
      } else if (m == "sliced_ksd") {
        const auto& r = reference();
        RngStream rp(seed, {purpose::metric, 1});
        o.metrics.push_back(
            {m, sliced_ksd(x, w, r, Vector::Ones(r.rows()), c.projections, rp)});
      } else if (m == "predictive_ll") {
        o.metrics.push_back({m, predictive_log_likelihood(x, w, bundle.data.value().test)});
      }
    }
    o.ok = true;
  } catch (const std::exception& e) {
    o.ok = false;
    o.error = e.what();
  }
  o.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return o;
}

int run_experiment(const ExperimentConfig& c, int workers, std::ostream& log) {
  TargetBundle bundle = build_target(c.target, c.base_dir);
  if (bundle.data && !bundle.data->constant_columns.empty()) {
    log << "warning: constant feature columns left unstandardized:";
    for (Index j : bundle.data->constant_columns) log << ' ' << j;
    log << '\n';
  }
  const fs::path dir(c.output.dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.yaml");
    cfg << to_yaml(c);
  }

  std::vector<std::string> names;
  for (const auto& m : c.metrics) {
    names.push_back(m);
    if (m == "logz_bias") names.push_back("z_bias");
  }

  std::ofstream results(dir / "results.tsv");
  results << "replicate\tseed\tmetric\tvalue\twall_time\tresample_events\tmean_inner_ess\n";
  std::map<std::string, std::vector<double>> per_metric;
  std::vector<double> walls, events, inner_ess;
  int failures = 0;
  for (std::size_t k = 0; k < c.seeds.size(); ++k) {
    const auto seed = c.seeds[k];
    if (c.target.split_per_replicate && bundle.data) {
      TargetSpec spec = c.target;
      spec.split_seed = seed;
      bundle = build_target(spec, c.base_dir);
    }
    ReplicateOutcome o = run_replicate(c, bundle, seed, workers);
    const std::string wall = c.output.wall_time ? fmt(o.wall_time) : "NA";
    if (!o.ok) {
      ++failures;
      log << "replicate " << k << " (seed " << seed << ") failed: " << o.error << '\n';
      for (const auto& m : names)
        results << k << '\t' << seed << '\t' << m << "\tNA\t" << wall << '\t'
                << o.run.resample_events << '\t' << fmt(o.run.mean_inner_ess) << '\n';
      continue;
    }
    walls.push_back(o.wall_time);
    events.push_back(o.run.resample_events);
    inner_ess.push_back(o.run.mean_inner_ess);
    for (const auto& mv : o.metrics) {
      per_metric[mv.metric].push_back(mv.value);
      results << k << '\t' << seed << '\t' << mv.metric << '\t' << fmt(mv.value) << '\t' << wall
              << '\t' << o.run.resample_events << '\t' << fmt(o.run.mean_inner_ess) << '\n';
    }
    log << "replicate " << k << " (seed " << seed << ")";
    for (const auto& mv : o.metrics) log << "  " << mv.metric << "=" << fmt(mv.value);
    log << '\n';
    if (c.output.samples)
      write_rows(o.run.positions, o.run.weights, dir / ("samples_" + std::to_string(k) + ".tsv"));
    if (c.output.ess_trace) write_trace(o.run, dir / ("ess_" + std::to_string(k) + ".tsv"));
  }

  auto mean_of = [](const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto stderr_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  };

  std::ofstream summary(dir / "summary.tsv");
  summary << "metric\tn\tmean\tstderr\n";
  const std::string wall = c.output.wall_time ? fmt(mean_of(walls)) : "NA";
  for (const auto& m : names) {
    const auto& v = per_metric[m];
    results << "summary\tNA\t" << m << '\t' << fmt(mean_of(v)) << '\t' << wall << '\t'
            << fmt(mean_of(events)) << '\t' << fmt(mean_of(inner_ess)) << '\n';
    summary << m << '\t' << v.size() << '\t' << fmt(mean_of(v)) << '\t' << fmt(stderr_of(v))
            << '\n';
    log << m << ": " << fmt(mean_of(v)) << " +- " << fmt(stderr_of(v)) << " (n=" << v.size()
        << ")\n";
  }
  return failures == 0 ? 0 : 1;
}

int report_results(const std::string& dir, std::ostream& out) {
  std::vector<fs::path> tables;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "summary.tsv")
      tables.push_back(entry.path());
  std::sort(tables.begin(), tables.end());
  std::ostringstream body;
  body << "experiment\tmetric\tn\tmean\tstderr\n";
  for (const auto& t : tables) {
    std::string label = fs::relative(t.parent_path(), dir).string();
    if (label.empty()) label = ".";
    std::ifstream in(t);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line))
      if (!line.empty()) body << label << '\t' << line << '\n';
  }
  out << body.str();
  std::ofstream(fs::path(dir) / "comparison.tsv") << body.str();
  return static_cast<int>(tables.size());
}

std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::rdsmc: return "rdsmc";
    case SamplerKind::rdsmc_is: return "rdsmc_is";
    case SamplerKind::rdsmc_proposal: return "rdsmc_proposal";
    case SamplerKind::ais_baseline: return "ais_baseline";
    case SamplerKind::smc_baseline: return "smc_baseline";
  }
  return "?";
}

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "rdsmc") return SamplerKind::rdsmc;
  if (s == "rdsmc_is") return SamplerKind::rdsmc_is;
  if (s == "rdsmc_proposal") return SamplerKind::rdsmc_proposal;
  if (s == "ais_baseline") return SamplerKind::ais_baseline;
  if (s == "smc_baseline") return SamplerKind::smc_baseline;
  throw std::invalid_argument("unknown sampler '" + s + "'");
}

}  // namespace rdsmc
