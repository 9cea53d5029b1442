#include "rflow/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace rflow {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kSchema{
    {"experiment", {"name", "backend"}},
    {"chart", {"resolution", "period", "stencil_order"}},
    {"initial_data",
     {"background", "scale_factor", "hubble", "curvature", "metric_amplitude", "extrinsic_amplitude",
      "momentum_amplitude", "lambda", "G"}},
    {"model", {"kind", "coefficients", "step", "normalization", "ceiling_factor"}},
    {"flow",
     {"beta_star", "gauge", "deturck_background", "safety", "max_step", "min_step", "ceiling_factor", "det_floor",
      "snapshot_every", "max_steps"}},
    {"coupling",
     {"enabled", "variant", "tau_star", "safety", "max_step", "renormalize_each_snapshot", "final_data", "center",
      "width"}},
    {"kernels", {"sources", "etas", "eta0", "ranks", "safety"}},
};

class Reader {
public:
  Reader(const pt::ptree& tree, std::string section) : tree_(tree), section_(std::move(section)) {}

  bool has(const std::string& key) const { return tree_.find(key) != tree_.not_found(); }

  std::string text(const std::string& key) const { return tree_.get<std::string>(key); }

  double number(const std::string& key) const {
    const std::string s = text(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || s.find_first_not_of(" \t", used) != std::string::npos) fail(key, "expected a number");
    return v;
  }

  long integer(const std::string& key) const {
    const double v = number(key);
    if (v != static_cast<double>(static_cast<long>(v))) fail(key, "expected an integer");
    return static_cast<long>(v);
  }

  bool flag(const std::string& key) const {
    const std::string s = text(key);
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    fail(key, "expected true or false");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::istringstream is(text(key));
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
      std::size_t used = 0;
      try {
        out.push_back(std::stod(tok, &used));
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) fail(key, "bad number '" + tok + "'");
    }
    return out;
  }

  /// Semicolon-separated triples of integers.
  std::vector<Node> nodes(const std::string& key) const {
    std::vector<Node> out;
    std::istringstream is(text(key));
    std::string item;
    while (std::getline(is, item, ';')) {
      if (item.find_first_not_of(" \t") == std::string::npos) continue;
      std::istringstream ns(item);
      Node n{};
      std::string rest;
      if (!(ns >> n[0] >> n[1] >> n[2]) || (ns >> rest)) fail(key, "expected 'i j k' triples separated by ';'");
      out.push_back(n);
    }
    return out;
  }

  template <class T, class F>
  T parsed(const std::string& key, F&& parse) const {
    try {
      return parse(text(key));
    } catch (const ValidationError& e) {
      fail(key, e.what());
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ValidationError("config [" + section_ + "] " + key + ": " + why);
  }

private:
  const pt::ptree& tree_;
  std::string section_;
};

FlowNormalization parse_normalization(const std::string& s) {
  if (s == "plain") return FlowNormalization::Plain;
  if (s == "volume-normalized") return FlowNormalization::VolumeNormalized;
  throw ValidationError("unknown normalization '" + s + "'");
}

InitialDataSpec::Background parse_background(const std::string& s) {
  if (s == "flat") return InitialDataSpec::Background::Flat;
  if (s == "flrw") return InitialDataSpec::Background::Flrw;
  if (s == "constant-curvature") return InitialDataSpec::Background::ConstantCurvature;
  throw ValidationError("unknown background '" + s + "'");
}

void require_positive(const std::string& what, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("config: " + what + " must be positive");
}

} // namespace

double ExperimentConfig::effective_eta0() const {
  if (kernels.eta0 > 0.0) return kernels.eta0;
  double h = 0.0;
  for (int a = 0; a < 3; ++a) h = std::max(h, chart.period[a] / chart.resolution[a]);
  return 4.0 * h * h;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = kSchema.find(section);
    if (it == kSchema.end()) throw ValidationError("config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw ValidationError("config: key '" + section + "' outside a section");
    for (const auto& kv : body)
      if (!it->second.contains(kv.first))
        throw ValidationError("config: unknown key '" + kv.first + "' in [" + section + "]");
  }
  auto section = [&](const std::string& name) {
    static const pt::ptree empty;
    const auto it = tree.find(name);
    return Reader(it == tree.not_found() ? empty : it->second, name);
  };

  ExperimentConfig c;
  if (const auto r = section("experiment"); true) {
    if (r.has("name")) c.name = r.text("name");
    if (r.has("backend")) {
      const auto b = r.text("backend");
      if (b == "grid") c.backend = Backend::Grid;
      else if (b == "homogeneous") c.backend = Backend::Homogeneous;
      else r.fail("backend", "expected grid or homogeneous");
    }
  }
  if (const auto r = section("chart"); true) {
    if (r.has("resolution")) {
      const auto v = r.numbers("resolution");
      if (v.size() == 1) c.chart.resolution.fill(static_cast<int>(v[0]));
      else if (v.size() == 3) for (int a = 0; a < 3; ++a) c.chart.resolution[a] = static_cast<int>(v[a]);
      else r.fail("resolution", "expected one or three integers");
      for (double x : v)
        if (x != static_cast<int>(x)) r.fail("resolution", "expected integers");
    }
    if (r.has("period")) {
      const auto v = r.numbers("period");
      if (v.size() == 1) c.chart.period.fill(v[0]);
      else if (v.size() == 3) std::copy(v.begin(), v.end(), c.chart.period.begin());
      else r.fail("period", "expected one or three lengths");
    }
    if (r.has("stencil_order")) c.chart.stencil_order = static_cast<int>(r.integer("stencil_order"));
  }
  if (const auto r = section("initial_data"); true) {
    auto& s = c.initial;
    if (r.has("background")) s.background = r.parsed<InitialDataSpec::Background>("background", parse_background);
    if (r.has("scale_factor")) s.scale_factor = r.number("scale_factor");
    if (r.has("hubble")) s.hubble = r.number("hubble");
    if (r.has("curvature")) s.curvature = r.number("curvature");
    if (r.has("metric_amplitude")) s.metric_amplitude = r.number("metric_amplitude");
    if (r.has("extrinsic_amplitude")) s.extrinsic_amplitude = r.number("extrinsic_amplitude");
    if (r.has("momentum_amplitude")) s.momentum_amplitude = r.number("momentum_amplitude");
    if (r.has("lambda")) s.Lambda = r.number("lambda");
    if (r.has("G")) s.G = r.number("G");
  }
  if (const auto r = section("model"); true) {
    auto& m = c.model;
    if (r.has("kind")) m.initial.model = r.parsed<ModelKind>("kind", parse_model_kind);
    m.initial.coefficients = m.initial.model == ModelKind::BergerSphere ? std::vector<double>{1.0, 1.0}
                                                                          : std::vector<double>{1.0};
    if (r.has("coefficients")) m.initial.coefficients = r.numbers("coefficients");
    if (r.has("step")) m.options.step = r.number("step");
    if (r.has("normalization"))
      m.options.normalization = r.parsed<FlowNormalization>("normalization", parse_normalization);
    if (r.has("ceiling_factor")) m.options.ceiling_factor = r.number("ceiling_factor");
  }
  if (const auto r = section("flow"); true) {
    auto& f = c.flow;
    if (r.has("beta_star")) f.target_beta = r.number("beta_star");
    if (r.has("gauge")) f.gauge = r.parsed<Gauge>("gauge", parse_gauge);
    if (r.has("deturck_background"))
      f.deturck_background = r.parsed<DeTurckBackground>("deturck_background", parse_deturck_background);
    if (r.has("safety")) f.safety = r.number("safety");
    if (r.has("max_step")) f.max_step = r.number("max_step");
    if (r.has("min_step")) f.min_step = r.number("min_step");
    if (r.has("ceiling_factor")) f.ceiling_factor = r.number("ceiling_factor");
    if (r.has("det_floor")) f.det_floor = r.number("det_floor");
    if (r.has("snapshot_every")) f.snapshot_every = static_cast<int>(r.integer("snapshot_every"));
    if (r.has("max_steps")) f.max_steps = r.integer("max_steps");
  }
  if (const auto r = section("coupling"); true) {
    auto& k = c.coupling;
    if (r.has("enabled")) k.enabled = r.flag("enabled");
    if (r.has("variant")) k.controls.variant = r.parsed<CouplingVariant>("variant", parse_coupling_variant);
    if (r.has("tau_star")) k.controls.tau_star = r.number("tau_star");
    if (r.has("safety")) k.controls.safety = r.number("safety");
    if (r.has("max_step")) k.controls.max_step = r.number("max_step");
    if (r.has("renormalize_each_snapshot")) k.controls.renormalize_each_snapshot = r.flag("renormalize_each_snapshot");
    if (r.has("final_data")) {
      const auto s = r.text("final_data");
      if (s == "constant") k.final_data = FinalData::Constant;
      else if (s == "gaussian") k.final_data = FinalData::Gaussian;
      else r.fail("final_data", "expected constant or gaussian");
    }
    if (r.has("center")) {
      const auto n = r.nodes("center");
      if (n.size() != 1) r.fail("center", "expected one node");
      k.center = n[0];
    }
    if (r.has("width")) k.width = r.number("width");
  }
  if (const auto r = section("kernels"); true) {
    auto& k = c.kernels;
    if (r.has("sources")) k.sources = r.nodes("sources");
    if (r.has("etas")) k.etas = r.numbers("etas");
    if (r.has("eta0")) k.eta0 = r.number("eta0");
    if (r.has("safety")) k.safety = r.number("safety");
    if (r.has("ranks")) {
      k.ranks.clear();
      std::istringstream is(r.text("ranks"));
      std::string tok;
      while (is >> tok) k.ranks.push_back(r.parsed<KernelRank>("ranks", [&](const std::string&) {
        return parse_kernel_rank(tok);
      }));
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  if (c.backend == Backend::Homogeneous) {
    validate(c.model.initial);
    require_positive("[model] step", c.model.options.step);
    require_positive("[model] ceiling_factor", c.model.options.ceiling_factor);
    require_positive("[flow] beta_star", c.flow.target_beta);
    return;
  }
  const GridChart chart = c.chart.chart();
  require_positive("[flow] beta_star", c.flow.target_beta);
  require_positive("[flow] safety", c.flow.safety);
  require_positive("[flow] min_step", c.flow.min_step);
  require_positive("[flow] ceiling_factor", c.flow.ceiling_factor);
  require_positive("[flow] det_floor", c.flow.det_floor);
  if (c.flow.max_step < 0.0) throw ValidationError("config: [flow] max_step must be >= 0");
  if (c.flow.snapshot_every < 1) throw ValidationError("config: [flow] snapshot_every must be >= 1");
  if (c.flow.max_steps < 1) throw ValidationError("config: [flow] max_steps must be >= 1");
  require_positive("[initial_data] G", c.initial.G);
  if (c.coupling.enabled) {
    require_positive("[coupling] tau_star", c.coupling.controls.tau_star);
    require_positive("[coupling] safety", c.coupling.controls.safety);
    require_positive("[coupling] width", c.coupling.width);
    if (c.coupling.controls.max_step < 0.0) throw ValidationError("config: [coupling] max_step must be >= 0");
    if (!chart.contains(c.coupling.center))
      throw ValidationError("config: [coupling] center " + to_string(c.coupling.center) + " is not a node");
  }
  const auto& k = c.kernels;
  require_positive("[kernels] safety", k.safety);
  if (k.eta0 < 0.0) throw ValidationError("config: [kernels] eta0 must be >= 0");
  if (!k.sources.empty() && k.etas.empty()) throw ValidationError("config: [kernels] sources given without etas");
  if (k.ranks.empty()) throw ValidationError("config: [kernels] ranks is empty");
  for (const auto& y : k.sources)
    if (!chart.contains(y)) throw ValidationError("config: [kernels] source " + to_string(y) + " is not a node");
  const double eta0 = c.effective_eta0();
  double h = 0.0;
  for (int a = 0; a < 3; ++a) h = std::max(h, chart.spacing(a));
  if (!(eta0 >= 4.0 * h * h))
    throw ValidationError("config: [kernels] eta0 " + std::to_string(eta0) + " is below 4 h^2 = " +
                          std::to_string(4.0 * h * h));
  for (double eta : k.etas) {
    if (!(eta <= c.flow.target_beta))
      throw ValidationError("config: [kernels] eta " + std::to_string(eta) + " exceeds beta_star");
    if (!(eta >= eta0 * (1 - 1e-12)))
      throw ValidationError("config: [kernels] eta " + std::to_string(eta) + " is below eta0");
  }
}

} // namespace rflow
