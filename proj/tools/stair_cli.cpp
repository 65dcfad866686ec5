// stair: build, verify and inspect staircase trajectories.

#include "stair/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace stair;
namespace fs = std::filesystem;

constexpr int kOk = 0, kFail = 1, kIncomplete = 2;

struct BuildArgs {
  std::string out, config;
  std::optional<int> depth;
  std::optional<std::string> eta, coverage_relax, eps_override, base_coverage, gap_fraction, clamp_eps;
  std::optional<long long> cell_budget;
  std::optional<int> boundary_layers, polygon_sides, c1_grid;
  unsigned threads = 0;
};

int do_build(const BuildArgs& a) {
  RunConfig cfg;
  try {
    KeyValues kv;
    if (!a.config.empty()) kv = read_config_file(a.config);
    auto set = [&](const char* key, const auto& v) {
      if (!v) return;
      if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>)
        kv[key] = *v;
      else
        kv[key] = std::to_string(*v);
    };
    set("depth", a.depth);
    set("eta", a.eta);
    set("coverage-relax", a.coverage_relax);
    set("cell-budget", a.cell_budget);
    set("eps-override", a.eps_override);
    set("base-coverage", a.base_coverage);
    set("gap-fraction", a.gap_fraction);
    set("clamp-eps", a.clamp_eps);
    set("boundary-layers", a.boundary_layers);
    set("polygon-sides", a.polygon_sides);
    set("c1-grid", a.c1_grid);
    apply_config(cfg, kv);
    cfg.threads = a.threads;
    cfg.check();
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\nusage: stair build --depth J [--out DIR] ...\n";
    return kFail;
  }
  const Trajectory tr = run(cfg);
  save_run(a.out, tr, cfg);
  const auto& rows = tr.states.back().metrics;
  std::printf("status: %s\n", to_string(tr.status).c_str());
  if (!tr.message.empty()) std::printf("message: %s\n", tr.message.c_str());
  std::printf("depth reached: %d, cells: %zu, metrics rows: %zu\n", tr.states.back().j, tr.states.back().u.size(),
              rows.size());
  return tr.status == RunStatus::Complete ? kOk : kIncomplete;
}

int do_verify(const std::string& dir, const std::string& suite) {
  std::pair<Trajectory, RunConfig> loaded;
  try {
    loaded = load_run(dir);
  } catch (const std::exception& e) {
    std::cerr << "cannot read run: " << e.what() << '\n';
    return kIncomplete;
  }
  const auto& [tr, cfg] = loaded;
  Report report;
  try {
    report = verify_all(tr, cfg, suite == "fast");
  } catch (const std::exception& e) {
    report.add({"verify_aborted", false, 0, 0, "contract", e.what()});
  }
  write_report_json(fs::path(dir) / "report.json", report);
  int failed = 0;
  for (const Check& c : report.checks) {
    if (c.pass) continue;
    ++failed;
    std::printf("FAIL %s: value %s bound %s %s\n", c.name.c_str(), format_double(c.value).c_str(),
                format_double(c.bound).c_str(), c.detail.c_str());
  }
  std::printf("%zu checks, %d failed\n", report.checks.size(), failed);
  return failed ? kFail : kOk;
}

int do_report(const std::string& dir) {
  try {
    std::ifstream in(fs::path(dir) / "metrics.csv");
    if (!in) throw IoError("no metrics.csv in " + dir);
    std::cout << in.rdbuf();
    std::ifstream rep(fs::path(dir) / "report.json");
    if (rep) std::cout << rep.rdbuf();
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kIncomplete;
  }
  return kOk;
}

int do_export(const std::string& dir, int depth, const std::string& out) {
  try {
    const fs::path src = fs::path(dir) / ("mesh_" + std::to_string(depth) + ".json");
    const IterationState st = read_mesh_json(src);
    if (out.empty() || out == "-") {
      std::ifstream in(src);
      std::cout << in.rdbuf();
    } else {
      write_mesh_json(out, st);
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kIncomplete;
  }
  return kOk;
}

int do_products(int n) {
  const ProductsReport r = partial_products(n);
  std::printf("%4s  %-14s %-14s %-14s %-14s %-14s  %s\n", "N", "k0", "k0'", "k1", "k2", "t_N", "t_N exact");
  for (int m = 1; m <= std::min(n, kExactCap); ++m) {
    const ProductPartials p = exact_partial_products(m);
    std::string exact = to_string(p.t);
    if (exact.size() > 48) exact = "(" + std::to_string(exact.size()) + " digits)";
    std::printf("%4d  %-14.10f %-14.10f %-14.10f %-14.10f %-14.10f  %s\n", m, to_double(p.k0), to_double(p.k0p),
                to_double(p.k1), to_double(p.k2), to_double(p.t), exact.c_str());
  }
  if (n > kExactCap)
    std::printf("%4d  %-14.10Lf %-14.10Lf %-14.10Lf %-14.10Lf %-14.10Lf  float, relative error <= %.3Le\n", n, r.k0,
                r.k0p, r.k1, r.k2, r.t, r.float_error_bound);
  std::printf("sums of |a_i|: k0 %.12Lf, k0' %.12Lf, k1 %.12Lf, k2 %.12Lf\n", r.sum_k0, r.sum_k0p, r.sum_k1, r.sum_k2);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staircase laminate construction of a singular convex function"};
  app.require_subcommand(1, 1);

  BuildArgs b;
  auto* build = app.add_subcommand("build", "Run the engine and write a run directory");
  build->add_option("--depth", b.depth, "Number of iterations J >= 1");
  build->add_option("--eta", b.eta, "Residual budget per split, e.g. 1/100");
  build->add_option("--coverage-relax", b.coverage_relax, "Target coverage factor, e.g. 19/20");
  build->add_option("--cell-budget", b.cell_budget, "Maximum number of cells");
  build->add_option("--eps-override", b.eps_override, "Per-depth eps, e.g. 1:1,2:1/10");
  build->add_option("--base-coverage", b.base_coverage, "Disk coverage of the base squares");
  build->add_option("--gap-fraction", b.gap_fraction, "Gap between squares relative to the side");
  build->add_option("--clamp-eps", b.clamp_eps, "true or false");
  build->add_option("--boundary-layers", b.boundary_layers, "Recursive re-covering layers per split");
  build->add_option("--polygon-sides", b.polygon_sides, "Sides of the polygonal disk");
  build->add_option("--c1-grid", b.c1_grid, "Grid for sampled C1 distances");
  build->add_option("--threads", b.threads, "Worker threads (0 = hardware)");
  build->add_option("--config", b.config, "key = value config file; flags override it");
  build->add_option("--out", b.out, "Output directory")->required();

  std::string run_dir, suite = "all";
  auto* verify = app.add_subcommand("verify", "Run the verification suite on a run directory");
  verify->add_option("--run", run_dir, "Run directory")->required();
  verify->add_option("--suite", suite, "all or fast")->check(CLI::IsMember({"all", "fast"}));

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print metrics and the last verification report");
  report->add_option("--run", report_dir, "Run directory")->required();

  std::string export_dir, export_out;
  int export_depth = 0;
  auto* exp = app.add_subcommand("export-mesh", "Write the mesh of one depth as JSON");
  exp->add_option("--run", export_dir, "Run directory")->required();
  exp->add_option("--depth", export_depth, "Depth j")->required();
  exp->add_option("--out", export_out, "Output file, '-' for stdout");

  int n = 0;
  auto* products = app.add_subcommand("products", "Partial products of the schedule");
  products->add_option("--n", n, "N >= 1")->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFail;
  }

  try {
    if (*build) return do_build(b);
    if (*verify) return do_verify(run_dir, suite);
    if (*report) return do_report(report_dir);
    if (*exp) return do_export(export_dir, export_depth, export_out);
    if (*products) return do_products(n);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kFail;
}
