#include "rflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <unistd.h>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "json.hpp"
#include "rflow/csv.hpp"
#include "rflow/field_io.hpp"
#include "rflow/sym3.hpp"

namespace rflow {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ValidationError("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  os << text;
  if (!os) throw NumericalError("write failed for " + p.string());
}

std::optional<double> error_beta(const std::exception& e) {
  if (auto* b = dynamic_cast<const BlowUpError*>(&e)) return b->beta();
  if (auto* s = dynamic_cast<const StepUnderflowError*>(&e)) return s->beta();
  if (auto* p = dynamic_cast<const PositivityLossError*>(&e)) return p->beta();
  if (auto* x = dynamic_cast<const ExtinctionError*>(&e)) return x->beta_star();
  return std::nullopt;
}

std::string node_tag(const Node& y) {
  return "y" + std::to_string(y[0]) + "_" + std::to_string(y[1]) + "_" + std::to_string(y[2]);
}

std::string index_tag(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

// Run state shared by the stages.
struct Context {
  fs::path dir;
  std::string stage;
  double stage_beta = kNaN;
  json stages = json::array();
  std::vector<std::string> outputs; // CSVs, in production order
  std::map<std::string, std::string> file_stage;
  std::optional<StageError> error;
  json notes = json::object();

  void csv(const std::string& rel, const std::string& text) {
    write_file(dir / rel, text);
    outputs.push_back(rel);
    file_stage[rel] = stage;
  }
  template <class F>
  void field(const std::string& rel, const F& u) {
    fs::create_directories((dir / rel).parent_path());
    write_field(dir / rel, u);
    file_stage[rel] = stage;
  }

  /// Runs one stage unless an earlier one failed; records the outcome.
  void run(const std::string& name, const std::function<void()>& body) {
    if (error) {
      stages.push_back({{"name", name}, {"status", "skipped"}});
      return;
    }
    stage = name;
    stage_beta = kNaN;
    try {
      body();
      stages.push_back({{"name", name}, {"status", "ok"}});
    } catch (const std::exception& e) {
      StageError se{name, error_beta(e), error_kind(e), e.what(), exit_code_for(e)};
      if (!se.beta && std::isfinite(stage_beta)) se.beta = stage_beta;
      error = se;
      stages.push_back({{"name", name}, {"status", "failed"}});
    }
  }
  void skip(const std::string& name, const std::string& why) {
    stages.push_back({{"name", name}, {"status", "skipped"}, {"note", why}});
  }
};

json file_list(const fs::path& dir, const std::map<std::string, std::string>& file_stage,
               const std::optional<StageError>& error) {
  std::vector<std::string> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      const std::string rel = fs::relative(e.path(), dir).generic_string();
      if (rel != "manifest.json") paths.push_back(rel);
    }
  std::sort(paths.begin(), paths.end());
  json files = json::array();
  for (const auto& rel : paths) {
    json f{{"path", rel}, {"sha256", sha256_file(dir / rel)}, {"bytes", fs::file_size(dir / rel)}};
    const auto it = file_stage.find(rel);
    f["stage"] = it == file_stage.end() ? "external" : it->second;
    if (error && it != file_stage.end() && it->second == error->stage) f["partial"] = true;
    files.push_back(std::move(f));
  }
  return files;
}

std::string trajectory_csv(const FlowTrajectory& t) {
  std::ostringstream os;
  os << "beta,step,volume,sup_rm,min_det,min_rho,max_rho,mass,mass_rate,hamiltonian_linf,momentum_linf,"
        "weak_energy,alpha1_max,alpha2,alpha3\n";
  for (const auto& d : t.diagnostics)
    write_csv_row(os, {d.beta, d.step, d.volume, d.sup_rm, d.min_det, d.min_rho, d.max_rho, d.mass, d.mass_rate,
                       d.hamiltonian_linf, d.momentum_linf, d.weak_energy ? 1.0 : 0.0, d.pinching.alpha1_max,
                       d.pinching.alpha2, d.pinching.alpha3});
  return os.str();
}

void write_snapshots(Context& ctx, const FlowTrajectory& t) {
  std::ostringstream os;
  os << "index,beta\n";
  for (std::size_t i = 0; i < t.snapshots.size(); ++i) {
    const auto& s = t.snapshots[i];
    const std::string base = "snapshots/" + index_tag(i) + "/";
    ctx.field(base + "g.bin", s.g.components());
    ctx.field(base + "K.bin", s.K);
    ctx.field(base + "rho.bin", s.rho);
    os << i << ',' << format_number(s.beta) << '\n';
  }
  ctx.csv("snapshots.csv", os.str());
}

Norms tensor_norms(const MetricGeometry& geom, const SymTensorField& t) {
  const auto& g = geom.metric();
  ScalarField n(g.chart());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto gi = sym3::inverse(g.at(i));
    const auto ti = t.node_values(i);
    n[i] = std::sqrt(std::max(0.0, sym3::contract(ti, sym3::raise_both(gi, ti))));
  }
  return norms(g, n);
}

InitialDataSet slice_data(const FlowTrajectory& t, const FlowSnapshot& s, const std::optional<SymTensorField>& ric) {
  InitialDataSet d(s.g);
  d.K = s.K;
  d.rho = s.rho;
  if (t.J) d.J = *t.J;
  d.Lambda = t.Lambda;
  d.G = t.G;
  d.model_ricci = ric;
  return d;
}

// Writes the slices of one kernel and returns its kernels.csv rows.
std::string write_kernel(Context& ctx, const KernelField& k, const std::string& prefix) {
  std::ostringstream os;
  for (std::size_t s = 0; s < k.slices.size(); ++s) {
    const auto& sl = k.slices[s];
    const std::string base = prefix + node_tag(k.source) + "/" + to_string(k.rank) + "_eta" + index_tag(s);
    if (k.rank == KernelRank::Scalar)
      ctx.field(base + ".bin", sl.scalar);
    else
      for (int p = 0; p < 6; ++p) ctx.field(base + "_p" + std::to_string(p) + ".bin", sl.tensor[p]);
    // Mass is a scalar-kernel quantity; tensor rows leave it empty.
    const std::string mass = k.rank == KernelRank::Scalar ? format_number(k.mass(sl.eta)) : "";
    os << k.source[0] << ',' << k.source[1] << ',' << k.source[2] << ',' << to_string(k.rank) << ','
       << format_number(sl.eta) << ',' << format_number(sl.beta) << ',' << mass << ',' << base << '\n';
  }
  return os.str();
}

constexpr const char* kKernelHeader = "i,j,k,rank,eta,beta,mass,file\n";

void run_grid(Context& ctx, const ExperimentConfig& c, json& diag) {
  const GridChart chart = c.chart.chart();
  std::optional<InitialDataSet> data;
  FlowTrajectory traj;
  std::optional<CouplingRun> coupling;
  std::map<std::pair<Node, KernelRank>, KernelField> kernels;

  ctx.run("generate", [&] {
    ctx.stage_beta = 0.0;
    data.emplace(generate_initial_data(chart, c.initial));
    ctx.field("initial/g.bin", data->g.components());
    ctx.field("initial/K.bin", data->K);
    ctx.field("initial/rho.bin", data->rho);
    ctx.field("initial/J.bin", data->J);
  });

  ctx.run("validate", [&] {
    ctx.stage_beta = 0.0;
    const auto ec = validate(*data);
    std::ostringstream os;
    os << "weak,weak_margin,weak_i,weak_j,weak_k,dominant,dominant_margin,dominant_i,dominant_j,dominant_k\n";
    os << ec.weak << ',' << format_number(ec.weak_margin) << ',' << ec.weak_node[0] << ',' << ec.weak_node[1] << ','
       << ec.weak_node[2] << ',' << ec.dominant << ',' << format_number(ec.dominant_margin) << ','
       << ec.dominant_node[0] << ',' << ec.dominant_node[1] << ',' << ec.dominant_node[2] << '\n';
    ctx.csv("validation.csv", os.str());
    if (!ec.weak) throw InadmissibleDataError("weak", ec.weak_node, ec.weak_margin);
    if (!ec.dominant) throw InadmissibleDataError("dominant", ec.dominant_node, ec.dominant_margin);
  });

  ctx.run("evolve", [&] {
    FlowControls fc = c.flow;
    for (double eta : c.kernels.etas) fc.landmarks.push_back(c.beta_star() - eta);
    ctx.stage_beta = 0.0;
    try {
      evolve_into(traj, FlowState(*data), fc);
    } catch (...) {
      if (!traj.diagnostics.empty()) ctx.stage_beta = traj.diagnostics.back().beta;
      ctx.csv("trajectory.csv", trajectory_csv(traj));
      write_snapshots(ctx, traj);
      throw;
    }
    ctx.csv("trajectory.csv", trajectory_csv(traj));
    write_snapshots(ctx, traj);
    const auto& d0 = traj.diagnostics.front();
    double vol = 0.0, mass = 0.0, sup = 0.0;
    for (const auto& d : traj.diagnostics) {
      vol = std::max(vol, std::abs(d.volume - d0.volume) / d0.volume);
      mass = std::max(mass, std::abs(d.mass - d0.mass));
      sup = std::max(sup, d.sup_rm);
    }
    diag["volume_drift"] = vol;
    diag["mass_drift"] = mass;
    diag["sup_rm_max"] = sup;
    diag["steps"] = traj.diagnostics.size() - 1;
  });

  if (!c.coupling.enabled)
    ctx.skip("coupling", "disabled in config");
  else
    ctx.run("coupling", [&] {
      ctx.stage_beta = c.beta_star();
      const auto& g = traj.snapshots.back().g;
      const double tau = c.coupling.controls.tau_star;
      const ScalarField f = c.coupling.final_data == FinalData::Constant
                                ? normalizing_final_data(g, tau)
                                : gaussian_final_data(g, tau, c.coupling.center, c.coupling.width);
      coupling.emplace(couple_backward(traj, f, c.coupling.controls));
      std::ostringstream os;
      write_coupling_csv(os, *coupling);
      ctx.csv("coupling.csv", os.str());
      ctx.field("coupling/f_first.bin", coupling->snapshots.back().f);
      double norm = 0.0, loc = 0.0;
      const double m0 = coupling->records.front().localized_mass;
      for (const auto& r : coupling->records) {
        norm = std::max(norm, std::abs(r.normalization - 1.0));
        loc = std::max(loc, std::abs(r.localized_mass - m0));
      }
      diag["normalization_drift"] = norm;
      diag["localized_mass_drift"] = loc;
    });

  if (c.kernels.sources.empty())
    ctx.skip("kernels", "no sources in config");
  else
    ctx.run("kernels", [&] {
      ctx.stage_beta = c.beta_star();
      std::string rows = kKernelHeader;
      double drift = 0.0;
      for (const auto& y : c.kernels.sources)
        for (KernelRank rank : c.kernels.ranks) {
          KernelControls kc;
          kc.rank = rank;
          kc.eta0 = c.effective_eta0();
          kc.etas = c.kernels.etas;
          kc.safety = c.kernels.safety;
          auto k = conjugate_kernel(traj, y, kc);
          rows += write_kernel(ctx, k, "kernels/");
          if (rank == KernelRank::Scalar)
            for (const auto& s : k.slices) drift = std::max(drift, std::abs(k.mass(s.eta) - 1.0));
          kernels.emplace(std::make_pair(y, rank), std::move(k));
        }
      ctx.csv("kernels.csv", rows);
      diag["kernel_mass_drift"] = drift;
    });

  ctx.run("backreaction", [&] {
    std::ostringstream os;
    os << "beta,phi_l1,phi_l2,phi_linf,psi_l1,psi_l2,psi_linf,C,dR_l1,dR_l2,dR_linf,weak_margin,dominant_margin\n";
    for (const auto& s : traj.snapshots) {
      ctx.stage_beta = s.beta;
      const auto d = slice_data(traj, s, data->model_ricci);
      const auto rep = backreaction_report(d);
      const MetricGeometry geom(s.g);
      const auto dr = tensor_norms(geom, rep.split.delta);
      const auto ec = validate(d);
      write_csv_row(os, {s.beta, rep.phi_norms.l1, rep.phi_norms.l2, rep.phi_norms.linf, rep.psi_norms.l1,
                         rep.psi_norms.l2, rep.psi_norms.linf, rep.split.C, dr.l1, dr.l2, dr.linf, ec.weak_margin,
                         ec.dominant_margin});
    }
    ctx.csv("backreaction.csv", os.str());

    const bool both = std::count(c.kernels.ranks.begin(), c.kernels.ranks.end(), KernelRank::Scalar) &&
                      std::count(c.kernels.ranks.begin(), c.kernels.ranks.end(), KernelRank::Tensor);
    if (!both || c.kernels.sources.empty()) {
      ctx.notes["smoothed_phi"] = "needs scalar and tensor kernels";
      return;
    }
    bool vacuum_k = traj.Lambda == 0.0;
    for (const auto& s : traj.snapshots) vacuum_k = vacuum_k && s.K.max_abs() == 0.0;
    if (!vacuum_k) {
      ctx.notes["smoothed_phi"] = "skipped: the kernel-smoothed forms assume K = 0 and Lambda = 0";
      return;
    }
    std::ostringstream ps;
    ps << "i,j,k,eta,beta,full,fluctuation,difference,scale_residual,C\n";
    const auto& final_g = traj.snapshots.back().g;
    for (const auto& y : c.kernels.sources) {
      const auto& ks = kernels.at({y, KernelRank::Scalar});
      const auto& kt = kernels.at({y, KernelRank::Tensor});
      for (const auto& sl : ks.slices) {
        ctx.stage_beta = sl.beta;
        const auto& rho = traj.snapshot_at(sl.beta).rho;
        const auto phi = smoothed_phi(ks, kt, sl.eta, rho, final_g.at(final_g.chart().index(y)), traj.G,
                                      data->model_ricci ? &*data->model_ricci : nullptr);
        ps << y[0] << ',' << y[1] << ',' << y[2] << ',';
        write_csv_row(ps, {sl.eta, sl.beta, phi.full, phi.fluctuation, phi.difference, phi.scale_residual, phi.C});
      }
    }
    ctx.csv("smoothed_phi.csv", ps.str());
  });
  ctx.notes["momentum_density"] = "J is held at its initial-data value along the flow";
}

void run_homogeneous(Context& ctx, const ExperimentConfig& c, json& diag) {
  std::vector<ModelSample> samples;
  ctx.run("evolve", [&] {
    ctx.stage_beta = 0.0;
    auto write = [&] {
      std::ostringstream os;
      write_model_csv(os, samples);
      ctx.csv("trajectory.csv", os.str());
    };
    try {
      integrate_model_into(samples, c.model.initial, c.beta_star(), c.model.options);
    } catch (...) {
      if (!samples.empty()) ctx.stage_beta = samples.back().beta;
      write();
      throw;
    }
    write();
    diag["final_beta"] = samples.back().beta;
    diag["final_coefficients"] = samples.back().state.coefficients;
  });
  for (const char* s : {"coupling", "kernels", "backreaction"}) ctx.skip(s, "grid backend only");
}

void write_manifest(Context& ctx, const std::string& config_text, const ExperimentConfig& c, const json& diag) {
  json m;
  m["format"] = "rflow-experiment 1";
  m["name"] = c.name;
  m["backend"] = c.backend == Backend::Grid ? "grid" : "homogeneous";
  m["versions"] = {{"rflow", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  m["config"] = "config.ini";
  m["input_hash"] = sha256_hex(config_text);
  m["status"] = ctx.error ? "partial" : "complete";
  m["stages"] = ctx.stages;
  if (ctx.error) {
    const auto& e = *ctx.error;
    m["error"] = {{"stage", e.stage},
                  {"beta", e.beta ? json(*e.beta) : json(nullptr)},
                  {"kind", e.kind},
                  {"message", e.message},
                  {"exit_code", e.exit_code}};
  } else {
    m["error"] = nullptr;
  }
  m["diagnostics"] = diag;
  m["notes"] = ctx.notes;
  m["outputs"] = ctx.outputs;
  m["files"] = file_list(ctx.dir, ctx.file_stage, ctx.error);
  write_file(ctx.dir / "manifest.json", m.dump(2) + "\n");
}

json read_manifest(const fs::path& dir) {
  const auto p = dir / "manifest.json";
  if (!fs::exists(p)) throw ValidationError(dir.string() + " has no manifest.json");
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw ValidationError("manifest.json: " + std::string(e.what()));
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string cell;
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

// CSV keyed by its first column.
struct Table {
  std::vector<std::string> header;
  std::map<std::string, std::vector<std::string>> rows;
  std::vector<std::string> order;
};

std::optional<Table> read_table(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  const auto lines = split_lines(read_file(p));
  if (lines.empty()) return std::nullopt;
  Table t;
  t.header = split_cells(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = split_cells(lines[i]);
    if (cells.empty()) continue;
    t.order.push_back(cells[0]);
    t.rows[cells[0]] = std::move(cells);
  }
  return t;
}

void refresh_manifest_files(const fs::path& dir, json& m, const std::string& new_stage) {
  std::map<std::string, std::string> stage;
  std::optional<StageError> none;
  for (const auto& f : m["files"]) stage[f["path"].get<std::string>()] = f["stage"].get<std::string>();
  json files = file_list(dir, {}, none);
  for (auto& f : files) {
    const auto it = stage.find(f["path"].get<std::string>());
    f["stage"] = it == stage.end() ? new_stage : it->second;
  }
  // Keep the partial marks of the original run.
  std::map<std::string, bool> partial;
  for (const auto& f : m["files"])
    if (f.contains("partial")) partial[f["path"].get<std::string>()] = true;
  for (auto& f : files)
    if (partial.count(f["path"].get<std::string>())) f["partial"] = true;
  m["files"] = files;
}

} // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BlowUpError*>(&e) || dynamic_cast<const ExtinctionError*>(&e)) return kExitBlowUp;
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  return kExitNumerical;
}

std::string error_kind(const std::exception& e) {
  switch (exit_code_for(e)) {
  case kExitBlowUp: return "blow-up";
  case kExitValidation: return "validation";
  default: return "numerical";
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

RunResult run_experiment(const std::string& config_text, const fs::path& dir) {
  const ExperimentConfig c = parse_config(config_text);
  if (fs::exists(dir) && !fs::is_empty(dir)) throw ValidationError("output directory " + dir.string() + " is not empty");
  fs::create_directories(dir);
  Context ctx;
  ctx.dir = dir;
  write_file(dir / "config.ini", config_text);
  ctx.file_stage["config.ini"] = "config";
  json diag = json::object();
  if (c.backend == Backend::Grid)
    run_grid(ctx, c, diag);
  else
    run_homogeneous(ctx, c, diag);
  write_manifest(ctx, config_text, c, diag);

  RunResult r;
  r.dir = dir;
  r.complete = !ctx.error;
  r.error = ctx.error;
  r.exit_code = ctx.error ? ctx.error->exit_code : kExitOk;
  return r;
}

RunResult run_experiment_file(const fs::path& config, const fs::path& dir) {
  return run_experiment(read_file(config), dir);
}

std::string to_string(ReplayResult::Status s) {
  switch (s) {
  case ReplayResult::Status::Pass: return "pass";
  case ReplayResult::Status::Mismatch: return "mismatch";
  case ReplayResult::Status::ConfigMismatch: return "config-mismatch";
  default: return "incomplete";
  }
}

ReplayResult replay_check(const fs::path& dir) {
  using S = ReplayResult::Status;
  json m;
  try {
    m = read_manifest(dir);
  } catch (const ValidationError& e) {
    return {S::Incomplete, "manifest.json", 0, e.what()};
  }
  if (!fs::exists(dir / "config.ini")) return {S::Incomplete, "config.ini", 0, "stored config is missing"};
  const std::string text = read_file(dir / "config.ini");
  if (sha256_hex(text) != m.value("input_hash", ""))
    return {S::ConfigMismatch, "config.ini", 0, "stored config does not match the manifest input hash"};

  const fs::path scratch =
      fs::temp_directory_path() / ("rflow-replay-" + std::to_string(::getpid()) + "-" +
                                   sha256_hex(fs::absolute(dir).string()).substr(0, 12));
  fs::remove_all(scratch);
  ReplayResult out;
  try {
    run_experiment(text, scratch);
  } catch (const ValidationError& e) {
    fs::remove_all(scratch);
    return {S::ConfigMismatch, "config.ini", 0, e.what()};
  }
  const json rerun = read_manifest(scratch);

  auto finish = [&](ReplayResult r) {
    fs::remove_all(scratch);
    return r;
  };

  const auto stored_outputs = m.value("outputs", std::vector<std::string>{});
  const auto fresh_outputs = rerun.value("outputs", std::vector<std::string>{});
  for (const auto& rel : stored_outputs) {
    if (!fs::exists(dir / rel)) return finish({S::Incomplete, rel, 0, "listed output is missing"});
    if (!fs::exists(scratch / rel)) return finish({S::Mismatch, rel, 0, "the replay does not produce this file"});
    const auto a = split_lines(read_file(dir / rel));
    const auto b = split_lines(read_file(scratch / rel));
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::string* x = i < a.size() ? &a[i] : nullptr;
      const std::string* y = i < b.size() ? &b[i] : nullptr;
      if (!x || !y || *x != *y)
        return finish({S::Mismatch, rel, static_cast<long>(i + 1),
                       "stored '" + (x ? *x : std::string("<eof>")) + "' vs replay '" +
                           (y ? *y : std::string("<eof>")) + "'"});
    }
  }
  for (const auto& rel : fresh_outputs)
    if (std::find(stored_outputs.begin(), stored_outputs.end(), rel) == stored_outputs.end())
      return finish({S::Mismatch, rel, 0, "the replay produces an output the manifest does not list"});
  if (m["error"] != rerun["error"])
    return finish({S::Mismatch, "manifest.json", 0, "stage error differs from the replay"});

  // Remaining files: same bytes as the replay, or the recorded checksum for
  // files added after the run.
  for (const auto& f : m["files"]) {
    const std::string rel = f["path"];
    if (!fs::exists(dir / rel)) return finish({S::Incomplete, rel, 0, "listed file is missing"});
    const std::string sha = sha256_file(dir / rel);
    if (sha != f["sha256"]) return finish({S::Mismatch, rel, 0, "checksum differs from the manifest"});
    if (fs::exists(scratch / rel) && sha != sha256_file(scratch / rel))
      return finish({S::Mismatch, rel, 0, "bytes differ from the replay"});
  }
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    const bool listed = std::any_of(m["files"].begin(), m["files"].end(),
                                    [&](const json& f) { return f["path"] == rel; });
    if (!listed) return finish({S::Incomplete, rel, 0, "file is not listed in the manifest"});
  }
  return finish(out);
}

void write_report(const fs::path& dir, std::ostream& os) {
  const json m = read_manifest(dir);
  if (m.value("backend", "") == "homogeneous") {
    os << read_file(dir / "trajectory.csv");
    return;
  }
  const auto traj = read_table(dir / "trajectory.csv");
  const auto back = read_table(dir / "backreaction.csv");
  const auto coup = read_table(dir / "coupling.csv");
  const auto snaps = read_table(dir / "snapshots.csv");
  if (!traj || !snaps) throw ValidationError(dir.string() + " has no trajectory to report");

  std::vector<std::string> betas;
  for (const auto& idx : snaps->order) betas.push_back(snaps->rows.at(idx).at(1));

  auto emit_header = [&](const std::optional<Table>& t, const std::string& prefix) {
    if (!t) return;
    for (std::size_t i = 1; i < t->header.size(); ++i) os << ',' << prefix << t->header[i];
  };
  auto emit_row = [&](const std::optional<Table>& t, const std::string& beta) {
    if (!t) return;
    const auto it = t->rows.find(beta);
    for (std::size_t i = 1; i < t->header.size(); ++i)
      os << ',' << (it != t->rows.end() && i < it->second.size() ? it->second[i] : "nan");
  };
  os << "beta";
  emit_header(traj, "");
  emit_header(coup, "coupling_");
  emit_header(back, "");
  os << '\n';
  for (const auto& beta : betas) {
    os << beta;
    emit_row(traj, beta);
    emit_row(coup, beta);
    emit_row(back, beta);
    os << '\n';
  }
}

FlowTrajectory load_trajectory(const fs::path& dir) {
  const json m = read_manifest(dir);
  if (m.value("backend", "") != "grid") throw ValidationError("kernels need a grid experiment");
  const auto c = load_config(dir / "config.ini");
  const auto snaps = read_table(dir / "snapshots.csv");
  if (!snaps || snaps->order.empty()) throw ValidationError(dir.string() + " has no stored snapshots");
  FlowTrajectory t;
  t.gauge = c.flow.gauge;
  t.Lambda = c.initial.Lambda;
  t.G = c.initial.G;
  t.J = read_covector_field(dir / "initial/J.bin");
  for (const auto& idx : snaps->order) {
    const auto& row = snaps->rows.at(idx);
    const std::string base = "snapshots/" + index_tag(std::stoul(row.at(0))) + "/";
    FlowSnapshot s{std::stod(row.at(1)), MetricField(read_sym_tensor_field(dir / (base + "g.bin"))),
                   read_sym_tensor_field(dir / (base + "K.bin")), read_scalar_field(dir / (base + "rho.bin"))};
    t.snapshots.push_back(std::move(s));
  }
  return t;
}

KernelField kernel_command(const fs::path& dir, const Node& y, const std::vector<double>& etas, KernelRank rank,
                           double eta0) {
  json m = read_manifest(dir);
  const auto traj = load_trajectory(dir);
  const auto& chart = traj.snapshots.front().g.chart();
  if (!chart.contains(y)) throw ValidationError("source " + to_string(y) + " is not a node");
  KernelControls kc;
  kc.rank = rank;
  kc.etas = etas;
  if (eta0 > 0.0) {
    kc.eta0 = eta0;
  } else {
    const double h = chart.max_spacing();
    kc.eta0 = 4.0 * h * h;
  }
  const auto k = conjugate_kernel(traj, y, kc);
  Context ctx;
  ctx.dir = dir;
  ctx.stage = "kernel-command";
  const std::string rows = write_kernel(ctx, k, "kernels/extra/");
  const fs::path list = dir / "kernels_extra.csv";
  const bool fresh = !fs::exists(list);
  std::ofstream(list, std::ios::app) << (fresh ? kKernelHeader : "") << rows;
  refresh_manifest_files(dir, m, "kernel-command");
  write_file(dir / "manifest.json", m.dump(2) + "\n");
  return k;
}

} // namespace rflow
