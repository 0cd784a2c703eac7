#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "rgcca/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCli = RGCCA_CLI_PATH;
const fs::path kConfigs = RGCCA_CONFIG_DIR;

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rgcca_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliRun {
  int code = -1;
  std::string err;
};

CliRun run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = kCli.string() + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_manifests(const fs::path& dir) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir)) count += e.path().filename() == "manifest.json";
  return count;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Cli, SimulateIsDeterministic) {
  const fs::path dir = workdir("simulate");
  ASSERT_EQ(run("simulate --seed 7 --out " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run("simulate --seed 7 --out " + (dir / "b").string(), dir).code, 0);
  for (const char* f : {"X1.csv", "X2.csv", "truth_w1.csv", "truth_w2.csv", "sim_spec.txt"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(count_manifests(dir / "a"), 1);
  const auto x1 = rgcca::io::read_csv(dir / "a" / "X1.csv");
  EXPECT_EQ(x1.values.rows(), 50);
  EXPECT_EQ(x1.values.cols(), 150);
}

TEST(Cli, FitWithSimulationConfigSucceeds) {
  const fs::path dir = workdir("fit");
  ASSERT_EQ(run("simulate --seed 3 --out " + (dir / "data").string(), dir).code, 0);
  const std::string blocks = (dir / "data" / "X1.csv").string() + "," + (dir / "data" / "X2.csv").string();
  const CliRun r = run("fit --blocks " + blocks + " --config " + (kConfigs / "simulation.cfg").string() +
                        " --out " + (dir / "fit").string(),
                    dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"weights.csv", "scores.csv", "diagnostics.txt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / "fit" / f)) << f;
  }
  EXPECT_EQ(count_manifests(dir / "fit"), 1);
  const std::string weights = slurp(dir / "fit" / "weights.csv");
  EXPECT_EQ(weights.rfind("component,index,value,label\n", 0), 0u);
  EXPECT_NE(weights.find(",X2\n"), std::string::npos);
  EXPECT_NE(slurp(dir / "fit" / "diagnostics.txt").find("converged = true"), std::string::npos);
}

TEST(Cli, AsymmetricDesignIsAnInputError) {
  const fs::path dir = workdir("design");
  ASSERT_EQ(run("simulate --seed 1 --n 10 --out " + (dir / "data").string(), dir).code, 0);
  write_text(dir / "design.csv", "0,1\n0,0\n");
  const std::string blocks = (dir / "data" / "X1.csv").string() + "," + (dir / "data" / "X2.csv").string();
  const CliRun r = run("fit --blocks " + blocks + " --design " + (dir / "design.csv").string() +
                        " --config " + (kConfigs / "simulation_unpenalized.cfg").string() +
                        " --out " + (dir / "fit").string(),
                    dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("(0,1)"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("not symmetric"), std::string::npos) << r.err;
}

TEST(Cli, ZeroComponentsIsAnInputError) {
  const fs::path dir = workdir("components");
  ASSERT_EQ(run("simulate --seed 1 --n 10 --out " + (dir / "data").string(), dir).code, 0);
  const std::string blocks = (dir / "data" / "X1.csv").string() + "," + (dir / "data" / "X2.csv").string();
  const CliRun r = run("fit --blocks " + blocks + " --components 0 --config " +
                        (kConfigs / "simulation_unpenalized.cfg").string() + " --out " +
                        (dir / "fit").string(),
                    dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("n_components"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputIsAnInputError) {
  const fs::path dir = workdir("missing");
  EXPECT_EQ(run("fit --blocks nope.csv,nope2.csv --config nope.cfg", dir).code, 1);
  EXPECT_EQ(run("frobnicate", dir).code, 1);
}

TEST(Cli, ProjectL1Example) {
  const fs::path dir = workdir("project");
  write_text(dir / "x.csv", "3\n1\n");
  const CliRun r = run("project --input " + (dir / "x.csv").string() + " --kind l1 --s 2 --out " +
                        (dir / "out").string(),
                    dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const rgcca::Vector y = rgcca::io::read_vector(dir / "out" / "projected.csv");
  ASSERT_EQ(y.size(), 2);
  EXPECT_DOUBLE_EQ(y[0], 2.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_NE(slurp(dir / "out" / "report.txt").find("l1_active=true"), std::string::npos);
  EXPECT_EQ(count_manifests(dir / "out"), 1);
}

TEST(Cli, ProjectIntersectionReportsActiveConstraints) {
  const fs::path dir = workdir("project_w");
  write_text(dir / "x.csv", "3\n-1\n0.5\n");
  const CliRun r = run("project --input " + (dir / "x.csv").string() +
                        " --kind w --s 1.2 --tau 1 --c 1 --eps 1e-12 --out " + (dir / "out").string(),
                    dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const rgcca::Vector y = rgcca::io::read_vector(dir / "out" / "projected.csv");
  EXPECT_LE(y.lpNorm<1>(), 1.2 + 1e-10);
  EXPECT_LE(y.squaredNorm(), 1.0 + 1e-10);
}

TEST(Cli, CrossValidationSingleCellGridGivesOneRow) {
  const fs::path dir = workdir("cv");
  ASSERT_EQ(run("simulate --seed 2 --n 21 --out " + (dir / "data").string(), dir).code, 0);
  write_text(dir / "grid.txt", "block.0.tau = 0.33\n");
  const std::string blocks = (dir / "data" / "X1.csv").string() + "," + (dir / "data" / "X2.csv").string();
  const CliRun r = run("cv --blocks " + blocks + " --config " +
                        (kConfigs / "simulation_unpenalized.cfg").string() + " --grid " +
                        (dir / "grid.txt").string() + " --folds 3 --target 1 --seed 5 --out " +
                        (dir / "cv").string(),
                    dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = rgcca::io::read_csv(dir / "cv" / "cv_scores.csv");
  EXPECT_EQ(table.values.rows(), 1);
  EXPECT_EQ(table.header.at(1), "block.0.tau");
  EXPECT_EQ(count_manifests(dir / "cv"), 1);
}

TEST(Cli, BootstrapWritesCountsAndKappa) {
  const fs::path dir = workdir("bootstrap");
  ASSERT_EQ(run("simulate --seed 2 --n 20 --out " + (dir / "data").string(), dir).code, 0);
  const std::string blocks = (dir / "data" / "X1.csv").string() + "," + (dir / "data" / "X2.csv").string();
  write_text(dir / "model.cfg", "[model]\n[block 0]\ntau = 1\ns = 2\n[block 1]\ntau = 1\ns = 2\n");
  const std::string args = "bootstrap --blocks " + blocks + " --config " +
                           (dir / "model.cfg").string() + " --rounds 4 --seed 9 --jobs 2 --out ";
  ASSERT_EQ(run(args + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run(args + (dir / "b").string(), dir).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "selection_counts.csv"), slurp(dir / "b" / "selection_counts.csv"));
  EXPECT_NE(slurp(dir / "a" / "kappa.txt").find("kappa_component_1"), std::string::npos);
  EXPECT_EQ(count_manifests(dir / "a"), 1);
}
