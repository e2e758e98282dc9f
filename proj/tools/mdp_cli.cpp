// mdp: verification suites, SDE paths and direct samplers from the command line.
// Exit codes: 0 pass, 1 check or simulation failure, 2 usage error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mdp/config.hpp"
#include "mdp/sde.hpp"
#include "mdp/suites.hpp"
#include "mdp/wishart.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output is assembled in memory and written once.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::string join(const mdp::RealVector& x) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < x.size(); ++i) os << (i ? "," : "") << x(i);
  return os.str();
}

struct VerifyArgs {
  std::string suite;
  std::uint64_t seed = 0;
  int samples = 30;
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  const mdp::VerificationReport rep = mdp::run_suite(a.suite, a.seed, a.samples);
  emit(a.out, mdp::report_json(rep).dump(2) + "\n");
  int failed = 0;
  for (const auto& c : rep.checks)
    if (!c.pass) {
      ++failed;
      std::cerr << "FAIL " << c.id << ": residual " << c.max_abs_residual << " > tol " << c.tol << "\n";
    }
  std::cerr << a.suite << ": " << rep.checks.size() - failed << "/" << rep.checks.size() << " checks passed\n";
  return rep.pass() ? kPass : kFail;
}

struct SimulateArgs {
  std::string model;
  std::string x0 = "auto";
  double dt = 1e-3;
  long steps = 1000;
  long thin = 1;
  long burn_in = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  mdp::ModelConfig cfg;
  mdp::DiffusionModel model;
  mdp::RealVector x0;
  mdp::SimConfig sim;
  try {
    cfg = mdp::load_model_config(a.model);
    model = cfg.build();
    x0 = a.x0 == "auto" ? cfg.barycenter() : mdp::load_point(a.x0, cfg.dim());
    if (!model.contains(x0)) throw UsageError("x0 is outside the domain of the model");
    sim.dt = a.dt;
    sim.n_steps = a.steps;
    sim.thin = a.thin;
    sim.burn_in = a.burn_in;
    sim.seed = a.seed;
    sim.record_states = true;
    sim.validate();
  } catch (const mdp::InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const mdp::PathSummary s = mdp::simulate(model, x0, sim);
  std::ostringstream os;
  nlohmann::json run = {{"dt", a.dt},           {"steps", a.steps}, {"thin", a.thin},
                        {"burn_in", a.burn_in}, {"seed", a.seed},   {"x0", a.x0}};
  os << "# model " << nlohmann::json::parse(std::ifstream(a.model)).dump() << "\n";
  os << "# run " << run.dump() << "\n";
  os << "# summary {\"count\":" << s.count << ",\"accepted\":" << s.steps.accepted
     << ",\"rejected\":" << s.steps.rejected << ",\"mean\":[" << join(s.mean) << "]}\n";
  mdp::write_states_csv(os, s, cfg.coordinate_names());
  emit(a.out, os.str());
  return kPass;
}

struct SampleArgs {
  std::string law = "matrix-dirichlet";
  int d = 1;
  std::vector<int> dims;
  long n = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_sample(const SampleArgs& a) {
  if (a.dims.size() < 2) throw UsageError("--dims needs at least two block sizes");
  if (a.d < 1) throw UsageError("--d must be >= 1");
  for (int r : a.dims)
    if (r < a.d) throw UsageError("every block size in --dims must be >= d");
  if (a.n < 0) throw UsageError("--n must be non-negative");
  const mdp::WishartFamily fam{a.d, a.dims};
  const int blocks = fam.blocks() - 1;
  const mdp::HermitianLayout layout(blocks, a.d);
  mdp::Rng rng(a.seed);
  std::ostringstream os;
  os << "# law " << a.law << " d=" << a.d << " dims=";
  for (size_t i = 0; i < a.dims.size(); ++i) os << (i ? "," : "") << a.dims[i];
  os << " n=" << a.n << " seed=" << a.seed << "\n";
  const auto names = mdp::matrix_coordinate_names(blocks, a.d);
  for (size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << "\n";
  for (long s = 0; s < a.n; ++s) os << join(layout.realify(mdp::sample_matrix_dirichlet_direct(fam, rng))) << "\n";
  emit(a.out, os.str());
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix Dirichlet diffusions: verification, simulation and sampling"};
  app.require_subcommand(1);

  VerifyArgs va;
  CLI::App* verify = app.add_subcommand("verify", "Run an identity suite and write a JSON report");
  verify->add_option("--suite", va.suite, "Suite id")->required()->check(CLI::IsMember(mdp::suite_ids()));
  verify->add_option("--seed", va.seed, "Random seed");
  verify->add_option("--samples", va.samples, "Random points per identity")->check(CLI::PositiveNumber);
  verify->add_option("--out", va.out, "Report path (stdout if omitted)");

  SimulateArgs sa;
  CLI::App* simulate = app.add_subcommand("simulate", "Euler-Maruyama path of a model file, written as CSV");
  simulate->add_option("--model", sa.model, "Model parameter file (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--x0", sa.x0, "Starting point file (JSON array) or 'auto' for the barycentre");
  simulate->add_option("--dt", sa.dt, "Time step")->required();
  simulate->add_option("--steps", sa.steps, "Number of steps")->required();
  simulate->add_option("--thin", sa.thin, "Record every thin-th state");
  simulate->add_option("--burn-in", sa.burn_in, "Steps discarded before recording");
  simulate->add_option("--seed", sa.seed, "Random seed");
  simulate->add_option("--out", sa.out, "CSV path (stdout if omitted)");

  SampleArgs pa;
  CLI::App* sample = app.add_subcommand("sample", "Independent draws from a direct sampler, written as CSV");
  sample->add_option("--law", pa.law, "Law to sample")->check(CLI::IsMember({"matrix-dirichlet"}));
  sample->add_option("--d", pa.d, "Matrix size")->required();
  sample->add_option("--dims", pa.dims, "Wishart degrees of freedom d_1,..,d_k")->required()->delimiter(',');
  sample->add_option("--n", pa.n, "Number of draws")->required();
  sample->add_option("--seed", pa.seed, "Random seed");
  sample->add_option("--out", pa.out, "CSV path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*verify) return run_verify(va);
    if (*simulate) return run_simulate(sa);
    return run_sample(pa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const mdp::StepRejectedError& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kFail;
  }
}
