#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "solitonsim/cli.hpp"
#include "solitonsim/error.hpp"
#include "solitonsim/initial_data.hpp"

using namespace solitonsim;
using namespace solitonsim::cli;
using nlohmann::json;
namespace fs = std::filesystem;
namespace id = solitonsim::initial_data;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("solitonsim_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

json evolve_doc(const fs::path& out) {
  return {{"command", "evolve"},
          {"grid", {{"n", 64}}},
          {"solver", {{"dt_over_h", 0.25}, {"t_end", 1.0}, {"record_every", 4}}},
          {"initial_data",
           {{"kind", "perturbed"},
            {"base", {{"kind", "latitude"}, {"k", 2}, {"costheta", -0.25}}},
            {"amplitude", 0.01},
            {"seed", 7}}},
          {"output_dir", out.string()}};
}

int run_main(std::vector<std::string> args) {
  args.insert(args.begin(), "solitonsim");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

std::string validation_message(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse_config lists every unknown key") {
  json doc = evolve_doc("/tmp/x");
  doc["solver"]["dtt"] = 0.1;
  doc["grid"]["m"] = 3;
  doc["extra"] = true;
  const std::string msg = validation_message(doc);
  CHECK(msg.find("solver.dtt") != std::string::npos);
  CHECK(msg.find("grid.m") != std::string::npos);
  CHECK(msg.find("extra") != std::string::npos);
}

TEST_CASE("parse_config rejects bad kinds, types and ranges") {
  json doc = evolve_doc("/tmp/x");
  doc["initial_data"] = {{"kind", "vortex"}};
  CHECK(validation_message(doc).find("vortex") != std::string::npos);

  doc = evolve_doc("/tmp/x");
  doc["grid"]["n"] = "many";
  CHECK(validation_message(doc).find("grid.n") != std::string::npos);

  doc = evolve_doc("/tmp/x");
  doc["solver"]["dt_over_h"] = 0.9;
  CHECK(validation_message(doc).find("CFL") != std::string::npos);

  doc = evolve_doc("/tmp/x");
  doc["solver"]["dt"] = 0.01;
  CHECK(validation_message(doc).find("not both") != std::string::npos);

  doc = evolve_doc("/tmp/x");
  doc["command"] = "sweep-eps";
  doc["eps"] = {0.05, 0.1, 0.0};
  CHECK(validation_message(doc).find("descending") != std::string::npos);

  doc = evolve_doc("/tmp/x");
  doc["command"] = "fly";
  CHECK(validation_message(doc).find("unknown command") != std::string::npos);

  doc = evolve_doc("/tmp/x");
  doc.erase("grid");
  CHECK(validation_message(doc).find("grid") != std::string::npos);

  doc = evolve_doc("/tmp/x");
  doc["initial_data"] = {{"kind", "latitude"}, {"k", 2}, {"costheta", 1.5}};
  CHECK(validation_message(doc).find("costheta") != std::string::npos);
}

TEST_CASE("eps accepts a comma-separated string") {
  json doc = evolve_doc("/tmp/x");
  doc["command"] = "sweep-eps";
  doc["solver"]["dt_over_h"] = 0.1;
  doc["eps"] = "0.1,0.05,0.025,0";
  const RunConfig c = parse_config(doc);
  CHECK(c.eps == std::vector<double>{0.1, 0.05, 0.025, 0.0});
  doc["eps"] = "0.1,abc,0";
  CHECK(validation_message(doc).find("abc") != std::string::npos);
}

TEST_CASE("config echo round trip") {
  const RunConfig c = parse_config(evolve_doc("/tmp/x"));
  const json echo = to_json(c);
  CHECK(to_json(parse_config(echo)) == echo);
}

TEST_CASE("apply_override handles dotted keys and raw strings") {
  json doc = evolve_doc("/tmp/x");
  apply_override(doc, "solver.t_end", "2.5");
  apply_override(doc, "output_dir", "/tmp/y");
  apply_override(doc, "initial_data.base.k", "3");
  apply_override(doc, "elliptic.mode", "gradient_flow");
  CHECK(doc["solver"]["t_end"] == 2.5);
  CHECK(doc["output_dir"] == "/tmp/y");
  CHECK(doc["initial_data"]["base"]["k"] == 3);
  CHECK(doc["elliptic"]["mode"] == "gradient_flow");
  CHECK_THROWS_AS(apply_override(doc, "solver..dt", "1"), ValidationError);
  CHECK_THROWS_AS(apply_override(doc, "output_dir.sub", "1"), ValidationError);
}

TEST_CASE("load_initial examples") {
  const grid::Grid1D g{32};
  InitialDataSpec pole;
  const auto p = load_initial(pole, g);
  for (int i = 0; i < g.n; ++i) {
    CHECK(p.u.vec3(i) == Vec3(0, 0, 1));
    CHECK(p.v.vec3(i) == Vec3(0, 0, 0));
  }

  InitialDataSpec lat;
  lat.kind = "latitude";
  lat.k = 2;
  lat.costheta = -0.25;
  const auto l = load_initial(lat, g);
  const double s = std::sqrt(1.0 - 0.0625);
  for (int i = 0; i < g.n; ++i) {
    const double a = 2.0 * g.node(i);
    CHECK((l.u.vec3(i) - Vec3(s * std::cos(a), s * std::sin(a), -0.25)).norm() <= 1e-15);
  }

  InitialDataSpec pert;
  pert.kind = "perturbed";
  pert.base = std::make_shared<InitialDataSpec>(pole);
  pert.amplitude = 0.01;
  pert.seed = 7;
  const auto a = load_initial(pert, g);
  const auto b = load_initial(pert, g);
  CHECK(a.u.values() == b.u.values());
  CHECK(a.u.values() != p.u.values());
  pert.seed = 8;
  CHECK(load_initial(pert, g).u.values() != a.u.values());

  InitialDataSpec spin = lat;
  spin.omega = 1.5;
  const auto r = load_initial(spin, g);
  for (int i = 0; i < g.n; ++i) {
    CHECK((r.v.vec3(i) - 1.5 * Vec3::UnitZ().cross(r.u.vec3(i))).norm() <= 1e-15);
  }
}

TEST_CASE("load_initial from files") {
  const fs::path dir = scratch("files");
  const grid::Grid1D g{32};
  const auto u = id::perturb(id::latitude(g, 1, 0.4), 0.05, 3);
  grid::write_csv((dir / "u.csv").string(), u);
  InitialDataSpec file;
  file.kind = "file";
  file.path = (dir / "u.csv").string();
  const auto loaded = load_initial(file, g).u;
  for (int i = 0; i < g.n; ++i) CHECK((loaded.vec3(i) - u.vec3(i)).norm() <= 1e-15);
  CHECK_THROWS_AS(load_initial(file, grid::Grid1D{64}), ValidationError);

  grid::GridField stretched = u;
  for (int c = 0; c < 3; ++c) stretched(4, c) *= 1.01;
  grid::write_csv((dir / "bad.csv").string(), stretched);
  file.path = (dir / "bad.csv").string();
  CHECK_THROWS_AS(load_initial(file, g), ValidationError);

  // A 6-column state file with a non-tangent velocity is projected with a warning.
  grid::GridField state(g, 6);
  for (int i = 0; i < g.n; ++i) {
    for (int c = 0; c < 3; ++c) {
      state(i, c) = u(i, c);
      state(i, c + 3) = u(i, c) + (c == 0 ? 0.1 : 0.0);
    }
  }
  grid::write_csv((dir / "state.csv").string(), state);
  file.path = (dir / "state.csv").string();
  std::vector<std::string> warnings;
  const auto st = load_initial(file, g, &warnings);
  CHECK(warnings.size() == 1);
  CHECK(evolver::tangency_drift(st.u, st.v) <= 1e-15);
}

TEST_CASE("run evolve: pole conserves H, artifacts written") {
  const fs::path dir = scratch("evolve_pole");
  json doc = evolve_doc(dir);
  doc["initial_data"] = {{"kind", "pole"}};
  doc["snapshot_every"] = 10;
  CHECK(run(parse_config(doc)) == kExitOk);
  for (const char* f : {"config_echo.json", "summary.json", "ledger.csv", "final.csv",
                        "snap_000000.csv", "snap_000001.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  std::ifstream ledger(dir / "ledger.csv");
  std::string line;
  std::getline(ledger, line);
  double h0 = std::nan("");
  while (std::getline(ledger, line)) {
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(std::stod(tok));
    if (std::isnan(h0)) h0 = cols[4];
    CHECK(std::abs(cols[4] - h0) <= 1e-13);
  }
  const json sum = read_json(dir / "summary.json");
  CHECK(sum["all_pass"] == true);
  CHECK(sum.contains("max_constraint_drift"));
  CHECK(sum.contains("max_tangency_drift"));
}

TEST_CASE("run is deterministic and the config echo reproduces the run") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  CHECK(run(parse_config(evolve_doc(a))) == kExitOk);
  CHECK(run(parse_config(evolve_doc(b))) == kExitOk);
  CHECK(slurp(a / "ledger.csv") == slurp(b / "ledger.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));

  json echo = read_json(a / "config_echo.json");
  const fs::path c = scratch("det_c");
  echo["output_dir"] = c.string();
  CHECK(run(parse_config(echo)) == kExitOk);
  CHECK(slurp(a / "ledger.csv") == slurp(c / "ledger.csv"));
}

TEST_CASE("run verify-reduction reports the residual and order") {
  const fs::path dir = scratch("verify");
  const json doc = {{"command", "verify-reduction"},
                    {"grid", {{"n", 256}}},
                    {"initial_data", {{"kind", "latitude"}, {"k", 2}, {"costheta", -0.25}}},
                    {"output_dir", dir.string()}};
  CHECK(run(parse_config(doc)) == kExitOk);
  const json sum = read_json(dir / "summary.json");
  CHECK(sum["results"]["order"].get<double>() == doctest::Approx(2.0).epsilon(0.05));
  CHECK(sum["results"]["schrodinger_l2"].get<double>() > 0.0);
  const json rep = read_json(dir / "report.json");
  CHECK(rep["residual"]["n"] == 256);
  CHECK(rep["fine"]["n"] == 512);
}

TEST_CASE("run sweep-eps writes a monotone table") {
  const fs::path dir = scratch("sweep");
  json doc = evolve_doc(dir);
  doc["command"] = "sweep-eps";
  doc["solver"] = {{"dt_over_h", 0.1}, {"t_end", 1.0}};
  doc["eps"] = "0.1,0.05,0.025,0";
  CHECK(run(parse_config(doc)) == kExitOk);
  std::ifstream csv(dir / "sweep.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "epsilon,sup_l2,sup_linf,aborted,ratio");
  std::vector<double> dev;
  while (std::getline(csv, line)) dev.push_back(std::stod(line.substr(line.find(',') + 1)));
  REQUIRE(dev.size() == 4);
  CHECK(dev[0] > dev[1]);
  CHECK(dev[1] > dev[2]);
  CHECK(dev[3] == 0.0);
  CHECK(read_json(dir / "summary.json")["checks"]["monotone"]["pass"] == true);
}

TEST_CASE("run refine writes per-job directories") {
  const fs::path dir = scratch("refine");
  const json doc = {{"command", "refine"},
                    {"grid", {{"length", 2.0 * std::numbers::pi}}},
                    {"solver", {{"dt_over_h", 0.25}, {"t_end", 1.0}}},
                    {"refine", {{"n", {64, 128}}}},
                    {"initial_data", {{"kind", "latitude"}, {"k", 2}, {"costheta", 0.25}}},
                    {"output_dir", dir.string()}};
  CHECK(run(parse_config(doc)) == kExitOk);
  CHECK(fs::exists(dir / "n_64" / "ledger.csv"));
  CHECK(fs::exists(dir / "n_128" / "ledger.csv"));
  const json sum = read_json(dir / "summary.json");
  CHECK(sum["results"]["finest_pair_order"].get<double>() == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("run ishimori and check-geometry") {
  const fs::path dir = scratch("ishimori");
  const json doc = {{"command", "ishimori"},
                    {"grid", {{"nx", 32}, {"ny", 32}}},
                    {"ishimori", {{"source", "extrude"}}},
                    {"initial_data", {{"kind", "latitude"}, {"k", 1}, {"costheta", 0.2}}},
                    {"output_dir", dir.string()}};
  CHECK(run(parse_config(doc)) == kExitOk);
  const json sum = read_json(dir / "summary.json");
  CHECK(sum["checks"]["rhs_identically_zero"]["pass"] == true);
  CHECK(fs::exists(dir / "phi.csv"));

  const fs::path geo = scratch("geometry");
  const json gdoc = {{"command", "check-geometry"}, {"output_dir", geo.string()}};
  CHECK(run(parse_config(gdoc)) == kExitOk);
  CHECK(read_json(geo / "summary.json")["all_pass"] == true);
}

TEST_CASE("numerical aborts exit with code 3") {
  const fs::path dir = scratch("abort");
  json doc = evolve_doc(dir);
  doc["solver"]["instability_drift"] = 1e-30;
  CHECK(run(parse_config(doc)) == kExitAbort);
  const json sum = read_json(dir / "summary.json");
  CHECK(sum["status"] == "aborted");
  CHECK(sum["all_pass"] == false);
}

TEST_CASE("main_entry: exit codes and overrides") {
  const fs::path dir = scratch("main");
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream os(cfg);
    os << evolve_doc(dir / "out").dump();
  }
  CHECK(run_main({"evolve", "--config", cfg.string(), "--solver.t_end=0.5"}) == kExitOk);
  CHECK(read_json(dir / "out" / "config_echo.json")["solver"]["t_end"] == 0.5);
  CHECK(run_main({"evolve", "--config", cfg.string(), "--solver.bogus=1"}) == kExitValidation);
  CHECK(run_main({"refine", "--config", cfg.string()}) == kExitValidation);
  CHECK(run_main({"evolve", "--config", (dir / "missing.json").string()}) == kExitValidation);
  CHECK(run_main({"evolve"}) == kExitValidation);
  CHECK(run_main({"evolve", "--config", cfg.string(), "stray"}) == kExitValidation);
}

TEST_CASE("thread cap honours SOLITONSIM_THREADS") {
  setenv("SOLITONSIM_THREADS", "3", 1);
  CHECK(thread_cap() == 3);
  setenv("SOLITONSIM_THREADS", "zero", 1);
  CHECK(thread_cap() >= 1);
  unsetenv("SOLITONSIM_THREADS");
  CHECK(thread_cap() >= 1);
}
