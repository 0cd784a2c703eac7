#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgcca/rgcca.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNonConvergence = 2;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rgcca::InvalidArgument("cannot open '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    static const char* hex = "0123456789abcdef";
    os << hex[digest[i] >> 4] << hex[digest[i] & 15];
  }
  return os.str();
}

/// Collects what a rerun needs and writes manifest.json into the output directory.
class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["argv"] = std::vector<std::string>(argv, argv + argc);
    doc_["tool_version"] = kToolVersion;
    doc_["config"] = json::object();
    doc_["seeds"] = json::object();
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
  void config(const json& cfg) { doc_["config"] = cfg; }
  void input(const fs::path& path) {
    doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  void output(const fs::path& path) {
    doc_["outputs"].push_back({{"path", path.filename().string()}, {"sha256", sha256_file(path)}});
  }
  void status(int exit_code) { doc_["exit_code"] = exit_code; }

  void write(const fs::path& dir) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc_["wall_time_seconds"] = seconds;
    std::ofstream out(dir / "manifest.json");
    out << doc_.dump(2) << "\n";
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw rgcca::InvalidArgument("cannot create output directory '" + dir.string() + "'");
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw rgcca::InvalidArgument("cannot write '" + path.string() + "'");
  return out;
}

using rgcca::io::format_number;

json config_to_json(const rgcca::io::ModelConfig& cfg) {
  json j;
  j["components"] = cfg.components;
  j["scheme"] = "horst";
  j["center"] = true;
  j["scale"] = cfg.scale;
  const auto& t = cfg.tolerances;
  j["tolerances"] = {{"eps_outer", t.eps_outer},
                     {"eps_inner", t.eps_inner},
                     {"eps_dykstra0", t.eps_dykstra0},
                     {"eps_dykstra_floor", t.eps_dykstra_floor},
                     {"max_iter_inner", t.max_iter_inner},
                     {"max_iter_outer", t.max_iter_outer},
                     {"max_iter_dykstra", t.max_iter_dykstra}};
  j["blocks"] = json::array();
  for (const auto& b : cfg.blocks) {
    json jb{{"name", b.name}, {"tau", b.tau}, {"c", b.c}};
    jb["s"] = b.s ? json(*b.s) : json(nullptr);
    jb["penalties"] = json::array();
    for (const auto& p : b.penalties) {
      json jp{{"kind", p.kind}, {"omega", p.omega}, {"mu", p.mu}};
      if (p.kind == "group_l12") {
        jp["groups_file"] = p.groups_file;
        jp["groups"] = p.groups.groups;
        if (p.groups.weights) jp["group_weights"] = *p.groups.weights;
      }
      jb["penalties"].push_back(std::move(jp));
    }
    j["blocks"].push_back(std::move(jb));
  }
  return j;
}

/// Blocks, design and model spec shared by fit, cv and bootstrap.
struct ModelInputs {
  std::vector<fs::path> block_files;
  fs::path design_file;
  fs::path config_file;
  int components = 0;  // 0: take the value from the config

  std::vector<rgcca::Matrix> raw;
  rgcca::io::ModelConfig cfg;
  rgcca::ModelSpec spec;

  void load(Manifest& manifest) {
    if (block_files.size() < 2) throw rgcca::InvalidArgument("--blocks needs at least two CSV files");
    cfg = rgcca::io::read_config(config_file);
    manifest.input(config_file);
    if (components_given) cfg.components = components;
    for (const auto& b : cfg.blocks) {
      for (const auto& p : b.penalties) {
        if (!p.groups_file.empty()) manifest.input(config_file.parent_path() / p.groups_file);
      }
    }
    std::vector<rgcca::Index> widths;
    for (const auto& f : block_files) {
      raw.push_back(rgcca::io::read_csv(f).values);
      manifest.input(f);
      widths.push_back(raw.back().cols());
      if (raw.back().rows() != raw.front().rows()) {
        throw rgcca::InvalidArgument("block '" + f.string() + "' has " +
                                     std::to_string(raw.back().rows()) + " rows, expected " +
                                     std::to_string(raw.front().rows()));
      }
    }
    rgcca::Design design = rgcca::Design::fully_connected(static_cast<rgcca::Index>(raw.size()));
    if (!design_file.empty()) {
      design = rgcca::Design(rgcca::io::read_csv(design_file, false).values);
      manifest.input(design_file);
    }
    spec = rgcca::io::build_model_spec(cfg, design, widths);
    json resolved = config_to_json(cfg);
    resolved["design"] = json::array();
    for (rgcca::Index k = 0; k < design.size(); ++k) {
      std::vector<double> row(static_cast<std::size_t>(design.size()));
      for (rgcca::Index j = 0; j < design.size(); ++j) row[static_cast<std::size_t>(j)] = design(k, j);
      resolved["design"].push_back(row);
    }
    manifest.config(resolved);
  }

  std::vector<rgcca::Block> blocks() const {
    std::vector<rgcca::Block> out;
    for (const auto& x : raw) out.push_back(rgcca::preprocess(x, true, cfg.scale));
    return out;
  }

  bool components_given = false;
};

void add_model_options(CLI::App* cmd, ModelInputs& in) {
  cmd->add_option("--blocks", in.block_files, "Block CSV files (comma-separated)")
      ->required()
      ->delimiter(',')
      ->check(CLI::ExistingFile);
  cmd->add_option("--design", in.design_file, "Design matrix CSV (default: fully connected)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--config", in.config_file, "Model config file")->required()->check(CLI::ExistingFile);
}

struct Common {
  std::uint64_t seed = 0;
  int jobs = 1;
  fs::path out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory");
}

std::string block_label(const ModelInputs& in, std::size_t k) { return in.cfg.blocks[k].name; }

void write_tidy(std::ostream& out, const std::vector<rgcca::Matrix>& per_block,
                const ModelInputs& in) {
  out << "component,index,value,label\n";
  for (std::size_t k = 0; k < per_block.size(); ++k) {
    const rgcca::Matrix& m = per_block[k];
    for (rgcca::Index a = 0; a < m.cols(); ++a) {
      for (rgcca::Index i = 0; i < m.rows(); ++i) {
        out << a + 1 << "," << i << "," << format_number(m(i, a)) << "," << block_label(in, k) << "\n";
      }
    }
  }
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    if constexpr (std::is_floating_point_v<T>) os << format_number(values[i]);
    else os << values[i];
  }
  return os.str();
}

int cmd_fit(ModelInputs& in, const Common& common, int argc, char** argv) {
  Manifest manifest("fit", argc, argv);
  manifest.seed("seed", common.seed);
  in.load(manifest);
  ensure_dir(common.out);
  const rgcca::FitResult result = rgcca::fit(in.blocks(), in.spec);

  {
    auto out = open_output(common.out / "weights.csv");
    write_tidy(out, result.weights, in);
  }
  {
    auto out = open_output(common.out / "scores.csv");
    write_tidy(out, result.scores, in);
  }
  {
    auto out = open_output(common.out / "diagnostics.txt");
    out << "[fit]\n";
    out << "components_requested = " << in.spec.n_components << "\n";
    out << "components_extracted = " << result.extracted << "\n";
    out << "converged = " << (result.converged ? "true" : "false") << "\n";
    out << "degenerate = " << (result.degenerate ? "true" : "false") << "\n";
    for (std::size_t a = 0; a < result.components.size(); ++a) {
      const auto& d = result.components[a];
      out << "\n[component " << a + 1 << "]\n";
      out << "sweeps = " << d.sweeps << "\n";
      out << "converged = " << (d.converged ? "true" : "false") << "\n";
      out << "degenerate = " << (d.degenerate ? "true" : "false") << "\n";
      out << "objective = " << format_number(d.objective_trace.empty() ? 0.0 : d.objective_trace.back()) << "\n";
      out << "gradient_map_norms = " << join(d.gradient_map_norms) << "\n";
      out << "step_sizes = " << join(d.step_sizes) << "\n";
      out << "fista_iterations = " << join(d.fista_iterations) << "\n";
      out << "inner_cap_hits = " << join(d.inner_cap_hits) << "\n";
      out << "inexact_projections = " << d.inexact_projections << "\n";
      out << "objective_trace = " << join(d.objective_trace) << "\n";
    }
  }
  const int code = result.converged && !result.degenerate ? kExitOk : kExitNonConvergence;
  for (const char* f : {"weights.csv", "scores.csv", "diagnostics.txt"}) manifest.output(common.out / f);
  manifest.status(code);
  manifest.write(common.out);
  if (code != kExitOk) {
    std::cerr << "rgcca fit: " << (result.degenerate ? "degenerate component" : "did not converge")
              << "; outputs written to " << common.out.string() << "\n";
  }
  return code;
}

struct SimulateOptions {
  rgcca::SimSpec spec;
};

void write_column(const fs::path& path, const std::string& name, const rgcca::Vector& v) {
  rgcca::io::write_csv(path, {name}, v);
}

int cmd_simulate(SimulateOptions& opt, const Common& common, int argc, char** argv) {
  Manifest manifest("simulate", argc, argv);
  manifest.seed("seed", common.seed);
  opt.spec.seed = common.seed;
  ensure_dir(common.out);
  const rgcca::SimData data = rgcca::generate(opt.spec);
  const auto& s = opt.spec;
  rgcca::io::write_csv(common.out / "X1.csv", rgcca::io::column_names("x", s.p1), data.x1);
  rgcca::io::write_csv(common.out / "X2.csv", rgcca::io::column_names("x", s.p2), data.x2);
  write_column(common.out / "truth_w1.csv", "w1", data.truth.w1);
  write_column(common.out / "truth_w2.csv", "w2", data.truth.w2);
  {
    auto out = open_output(common.out / "sim_spec.txt");
    out << "[simulation]\n";
    out << "seed = " << s.seed << "\n";
    out << "n = " << s.n << "\np1 = " << s.p1 << "\np2 = " << s.p2 << "\n";
    out << "sd_t2 = " << format_number(s.sd_t2) << "\n";
    out << "sd_e1 = " << format_number(s.sd_e1) << "\n";
    out << "sd_e2 = " << format_number(s.sd_e2) << "\n";
    out << "truth = canonical\n";
    out << "streams = t1:1, t2:2, E1:3, E2:4\n";
  }
  json cfg{{"n", s.n},         {"p1", s.p1},       {"p2", s.p2},      {"sd_t2", s.sd_t2},
           {"sd_e1", s.sd_e1}, {"sd_e2", s.sd_e2}, {"truth", "canonical"}};
  manifest.config(cfg);
  for (const char* f : {"X1.csv", "X2.csv", "truth_w1.csv", "truth_w2.csv", "sim_spec.txt"}) {
    manifest.output(common.out / f);
  }
  manifest.status(kExitOk);
  manifest.write(common.out);
  return kExitOk;
}

struct CvOptions {
  fs::path grid_file;
  int folds = 7;
  int target = 0;
};

int cmd_cv(ModelInputs& in, CvOptions& opt, const Common& common, int argc, char** argv) {
  Manifest manifest("cv", argc, argv);
  manifest.seed("seed", common.seed);
  in.load(manifest);
  rgcca::CvGrid grid = rgcca::io::read_grid(opt.grid_file);
  manifest.input(opt.grid_file);
  grid.folds = opt.folds;
  ensure_dir(common.out);
  const rgcca::CvResult result = rgcca::cross_validate(in.raw, in.cfg.scale, in.spec, grid,
                                                       opt.target, common.seed, common.jobs);
  {
    auto out = open_output(common.out / "cv_scores.csv");
    out << "cell";
    for (const auto& name : result.axis_names) out << "," << name;
    out << ",score,failed,nonconverged_folds";
    for (int f = 0; f < grid.folds; ++f) out << ",fold_" << f;
    out << "\n";
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
      const auto& cell = result.cells[c];
      out << c;
      for (double v : cell.values) out << "," << format_number(v);
      out << "," << format_number(cell.score) << "," << (cell.failed ? 1 : 0) << ","
          << cell.nonconverged_folds;
      for (double v : cell.fold_scores) out << "," << format_number(v);
      out << "\n";
    }
  }
  {
    auto out = open_output(common.out / "cv_best.txt");
    const auto& best = result.cells[result.best];
    out << "[best]\ncell = " << result.best << "\n";
    for (std::size_t a = 0; a < result.axis_names.size(); ++a) {
      out << result.axis_names[a] << " = " << format_number(best.values[a]) << "\n";
    }
    out << "score = " << format_number(best.score) << "\n";
    out << "tie = " << (result.tie ? "true" : "false") << "\n";
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
      if (result.cells[c].failed) out << "failed_cell_" << c << " = " << result.cells[c].error << "\n";
    }
  }
  json g = json::array();
  for (const auto& a : grid.axes) g.push_back({{"axis", a.name}, {"values", a.values}});
  json cfg = json::object();
  cfg["model"] = config_to_json(in.cfg);
  cfg["grid"] = g;
  cfg["folds"] = grid.folds;
  cfg["target"] = opt.target;
  cfg["jobs"] = common.jobs;
  manifest.config(cfg);
  manifest.output(common.out / "cv_scores.csv");
  manifest.output(common.out / "cv_best.txt");
  bool any_nonconverged = false;
  for (const auto& cell : result.cells) any_nonconverged |= cell.nonconverged_folds > 0;
  const bool all_failed = std::all_of(result.cells.begin(), result.cells.end(),
                                      [](const rgcca::CvCell& c) { return c.failed; });
  const int code = all_failed || any_nonconverged ? kExitNonConvergence : kExitOk;
  manifest.status(code);
  manifest.write(common.out);
  std::cout << "best cell " << result.best << " score " << format_number(result.cells[result.best].score)
            << "\n";
  return code;
}

struct BootstrapOptions {
  int rounds = 100;
  double threshold = 1e-10;
};

int cmd_bootstrap(ModelInputs& in, BootstrapOptions& opt, const Common& common, int argc,
                  char** argv) {
  Manifest manifest("bootstrap", argc, argv);
  manifest.seed("seed", common.seed);
  in.load(manifest);
  ensure_dir(common.out);
  const rgcca::StabilityReport report = rgcca::bootstrap_stability(
      in.raw, in.cfg.scale, in.spec, opt.rounds, common.seed, opt.threshold, common.jobs);
  {
    auto out = open_output(common.out / "selection_counts.csv");
    out << "component,index,value,label\n";
    for (std::size_t k = 0; k < report.selection_counts.size(); ++k) {
      const auto& m = report.selection_counts[k];
      for (rgcca::Index a = 0; a < m.cols(); ++a)
        for (rgcca::Index i = 0; i < m.rows(); ++i)
          out << a + 1 << "," << i << "," << m(i, a) << "," << block_label(in, k) << "\n";
    }
  }
  {
    auto out = open_output(common.out / "kappa.txt");
    out << "[bootstrap]\nrounds = " << report.rounds << "\nsuccessful = " << report.successful
        << "\nfailed = " << report.failed << "\nthreshold = " << format_number(opt.threshold) << "\n";
    for (std::size_t k = 0; k < report.kappa.size(); ++k) {
      out << "\n[" << block_label(in, k) << "]\n";
      for (std::size_t a = 0; a < report.kappa[k].size(); ++a) {
        out << "kappa_component_" << a + 1 << " = " << format_number(report.kappa[k][a]) << "\n";
      }
    }
  }
  json cfg = json::object();
  cfg["model"] = config_to_json(in.cfg);
  cfg["rounds"] = opt.rounds;
  cfg["threshold"] = opt.threshold;
  cfg["jobs"] = common.jobs;
  manifest.config(cfg);
  manifest.output(common.out / "selection_counts.csv");
  manifest.output(common.out / "kappa.txt");
  const int code = report.successful >= 2 ? kExitOk : kExitNonConvergence;
  manifest.status(code);
  manifest.write(common.out);
  return code;
}

struct ProjectOptions {
  fs::path input;
  std::string kind = "w";
  std::optional<double> s;
  double tau = 1.0;
  double c = 1.0;
  double eps = 1e-10;
  fs::path block;
  bool scale = false;
};

int cmd_project(ProjectOptions& opt, const Common& common, int argc, char** argv) {
  Manifest manifest("project", argc, argv);
  manifest.seed("seed", common.seed);
  const rgcca::Vector x = rgcca::io::read_vector(opt.input);
  manifest.input(opt.input);
  const rgcca::Index p = x.size();

  auto ellipsoid = [&] {
    rgcca::Matrix data = rgcca::Matrix::Zero(2, p);
    rgcca::Preprocessing pp;
    if (!opt.block.empty()) {
      manifest.input(opt.block);
      const rgcca::Block b = rgcca::preprocess(rgcca::io::read_csv(opt.block).values, true, opt.scale);
      if (b.p() != p) {
        throw rgcca::InvalidArgument("--block has " + std::to_string(b.p()) +
                                     " columns but the vector has " + std::to_string(p) + " entries");
      }
      return rgcca::EllipsoidSpec(b, opt.tau, opt.c);
    }
    return rgcca::EllipsoidSpec(rgcca::Block(std::move(data), pp), opt.tau, opt.c);
  };

  rgcca::ProjectionReport report;
  if (opt.kind == "l1") {
    if (!opt.s) throw rgcca::InvalidArgument("--kind l1 requires --s");
    const rgcca::L1Projection r = rgcca::project_l1_report(x, *opt.s);
    report.point = r.point;
    report.iterations = 1;
    report.l1_active = r.active;
  } else if (opt.kind == "ellipsoid") {
    const rgcca::EllipsoidProjection r = rgcca::project_ellipsoid_report(x, ellipsoid());
    report.point = r.point;
    report.iterations = r.iterations;
    report.residual = r.last_step;
    report.converged = r.converged;
    report.ellipsoid_active = !r.interior;
  } else if (opt.kind == "w") {
    rgcca::BlockConstraint bc{opt.tau, opt.s, opt.c};
    bc.validate();
    report = rgcca::project_W(x, bc, ellipsoid(), opt.eps);
  } else {
    throw rgcca::InvalidArgument("--kind must be one of l1, ellipsoid, w");
  }

  ensure_dir(common.out);
  write_column(common.out / "projected.csv", "value", report.point);
  std::ostringstream line;
  line << "kind=" << opt.kind << " iterations=" << report.iterations
       << " residual=" << format_number(report.residual)
       << " converged=" << (report.converged ? "true" : "false")
       << " l1_active=" << (report.l1_active ? "true" : "false")
       << " ellipsoid_active=" << (report.ellipsoid_active ? "true" : "false");
  {
    auto out = open_output(common.out / "report.txt");
    out << line.str() << "\n";
  }
  std::cout << line.str() << "\n";
  json cfg{{"kind", opt.kind}, {"tau", opt.tau}, {"c", opt.c}, {"eps", opt.eps}, {"scale", opt.scale}};
  cfg["s"] = opt.s ? json(*opt.s) : json(nullptr);
  cfg["block"] = opt.block.empty() ? json(nullptr) : json(opt.block.string());
  manifest.config(cfg);
  manifest.output(common.out / "projected.csv");
  manifest.output(common.out / "report.txt");
  const int code = report.converged ? kExitOk : kExitNonConvergence;
  manifest.status(code);
  manifest.write(common.out);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-penalty RGCCA: fit, simulate, cross-validate, bootstrap, project"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  ModelInputs model;

  auto* fit = app.add_subcommand("fit", "Fit a multiblock model");
  add_common(fit, common);
  add_model_options(fit, model);
  fit->add_option("--components", model.components, "Number of components (overrides config)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate the two-block simulation data");
  add_common(simulate, common);
  simulate->add_option("--n", sim.spec.n, "Samples");
  simulate->add_option("--p1", sim.spec.p1, "Variables in block 1");
  simulate->add_option("--p2", sim.spec.p2, "Variables in block 2");
  simulate->add_option("--sd-t2", sim.spec.sd_t2, "Noise sd of the second latent variable");
  simulate->add_option("--sd-e1", sim.spec.sd_e1, "Noise sd of block 1");
  simulate->add_option("--sd-e2", sim.spec.sd_e2, "Noise sd of block 2");

  CvOptions cv_opt;
  auto* cv = app.add_subcommand("cv", "Cross-validated grid search");
  add_common(cv, common);
  add_model_options(cv, model);
  cv->add_option("--grid", cv_opt.grid_file, "Grid file")->required()->check(CLI::ExistingFile);
  cv->add_option("--folds", cv_opt.folds, "Number of folds");
  cv->add_option("--target", cv_opt.target, "Index of the predicted block");

  BootstrapOptions boot_opt;
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap selection stability");
  add_common(boot, common);
  add_model_options(boot, model);
  boot->add_option("--rounds", boot_opt.rounds, "Bootstrap rounds");
  boot->add_option("--threshold", boot_opt.threshold, "Selection threshold on |w|");

  ProjectOptions proj;
  auto* project = app.add_subcommand("project", "Project a vector onto a constraint set");
  add_common(project, common);
  project->add_option("--input", proj.input, "Vector CSV")->required()->check(CLI::ExistingFile);
  project->add_option("--kind", proj.kind, "l1, ellipsoid or w")
      ->check(CLI::IsMember({"l1", "ellipsoid", "w"}));
  project->add_option("--s", proj.s, "l1 radius");
  project->add_option("--tau", proj.tau, "Shrinkage parameter");
  project->add_option("--c", proj.c, "Ellipsoid radius");
  project->add_option("--eps", proj.eps, "Dykstra tolerance");
  project->add_option("--block", proj.block, "Data block defining the ellipsoid")
      ->check(CLI::ExistingFile);
  project->add_flag("--scale", proj.scale, "Scale the block to unit variance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*fit) {
      model.components_given = fit->count("--components") > 0;
      return cmd_fit(model, common, argc, argv);
    }
    if (*simulate) return cmd_simulate(sim, common, argc, argv);
    if (*cv) return cmd_cv(model, cv_opt, common, argc, argv);
    if (*boot) return cmd_bootstrap(model, boot_opt, common, argc, argv);
    if (*project) return cmd_project(proj, common, argc, argv);
  } catch (const rgcca::NumericalError& e) {
    std::cerr << "rgcca: numerical error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "rgcca: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
