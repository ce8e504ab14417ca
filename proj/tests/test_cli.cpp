#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "dilute/point_process.hpp"
#include "dilute/microstructure.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kExe = DILUTE_HOMOG_EXE;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kExe + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

// Minimal well-formedness check: balanced tags, proper nesting, one root.
bool well_formed_xml(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  int roots = 0;
  while ((pos = s.find('<', pos)) != std::string::npos) {
    const std::size_t end = s.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = s.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const std::string name = tag.substr(0, tag.find_first_of(" \n/"));
    if (stack.empty()) ++roots;
    if (tag.back() != '/') stack.push_back(name);
    if (std::count(tag.begin(), tag.end(), '"') % 2) return false;
  }
  return stack.empty() && roots == 1;
}

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("sample: reproducible file, geometry equivalence") {
  REQUIRE(run("sample --process poisson --lambda 0.01 --L 64 --d 2 --seed 7 -o cli_s1") == 0);
  const std::string first = slurp("cli_s1.txt");
  REQUIRE(run("sample --process poisson --lambda 0.01 --L 64 --d 2 --seed 7 -o cli_s1") == 0);
  CHECK(slurp("cli_s1.txt") == first);
  CHECK(first.rfind("# 2 64 ", 0) == 0);
  CHECK(slurp("cli_s1.geometry.txt").find("singleton_rho_consistent = true") != std::string::npos);
  const auto s = dilute::load_sample("cli_s1.txt");
  CHECK(s.size() > 0);

  REQUIRE(run("sample --process matern2 --lambda-parent 0.1 --r-hard 3 --L 48 --count 4 -o cli_m") == 0);
  for (int k = 0; k < 4; ++k) CHECK(fs::exists("cli_m_" + std::to_string(k) + ".txt"));
  CHECK(slurp("cli_stdout.txt").find("singleton_iff_rho_ge_2 = true") != std::string::npos);
}

TEST_CASE("exit codes: config and I/O errors") {
  CHECK(run("sample --lambda -1 -o cli_bad") == 1);
  CHECK(slurp("cli_stderr.txt").find("lambda") != std::string::npos);
  CHECK(run("sample --lambda 0.01 -o /nonexistent_dir/x") == 2);
  CHECK(run("sample --bogus-flag") == 1);
  write("cli_unknown.json", R"({"process": {"kind": "poisson", "lambda": 0.01}, "colour": "red"})");
  CHECK(run("sample -c cli_unknown.json") == 1);
  CHECK(slurp("cli_stderr.txt").find("colour: unknown key") != std::string::npos);
  write("cli_broken.json", "{\n \"L\": 64,\n \"d\" 2\n}\n");
  CHECK(run("sample -c cli_broken.json") == 1);
  CHECK(slurp("cli_stderr.txt").find("cli_broken.json:3:") != std::string::npos);
  CHECK(run("sample -c /nonexistent/cfg.json") == 2);
  CHECK(run("solve --input /nonexistent/sample.txt") == 2);
  CHECK(run("plot -i /nonexistent.csv -o x") == 2);
}

TEST_CASE("solve: fixtures, determinism, non-convergence") {
  REQUIRE(run("solve --fixture laminate --L 16 --N 64 --period 8 --alpha 1 --beta 4 --tol 1e-11 -o cli_lam.json") == 0);
  const auto j = nlohmann::json::parse(slurp("cli_lam.json"));
  CHECK(j["Abar"][0].get<double>() == doctest::Approx(1.6).epsilon(1e-10));
  CHECK(j["Abar"][3].get<double>() == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(j["scheme"] == "conjugate_gradient");

  REQUIRE(run("solve --fixture homogeneous --L 16 --N 64 --alpha 2 -o cli_hom.json") == 0);
  const auto h = nlohmann::json::parse(slurp("cli_hom.json"));
  CHECK(h["Abar"] == nlohmann::json({2.0, 0.0, 0.0, 2.0}));

  REQUIRE(run("sample --lambda 0.03 --L 32 --seed 3 -o cli_solve") == 0);
  REQUIRE(run("solve --input cli_solve.txt --N 128 --beta 5 -o cli_a.json --threads 1") == 0);
  REQUIRE(run("solve --input cli_solve.txt --N 128 --beta 5 -o cli_b.json --threads 1") == 0);
  CHECK(slurp("cli_a.json") == slurp("cli_b.json"));
  CHECK(slurp("cli_stdout.txt").find("Abar") != std::string::npos);

  CHECK(run("solve --input cli_solve.txt --N 128 --beta 50 --max-iter 2 -o cli_nc.json") == 3);
  const auto nc = nlohmann::json::parse(slurp("cli_nc.json"));
  CHECK(nc["status"] == "nonconvergence");
  CHECK(nc["residual_history"].size() >= 2);

  REQUIRE(run("solve --input cli_solve.txt --N 128 --fields cli_fields -o cli_f.json") == 0);
  CHECK(fs::exists("cli_fields_phase.bin"));
  CHECK(fs::exists("cli_fields_g2.bin"));
}

TEST_CASE("sweep: smoke budget, plots, resume, env threads") {
  write("cli_sweep.json", R"({
    "intensities": [0.002, 0.004], "levels": [{"L": 64, "N": [256]}, {"L": 96, "N": [384]}],
    "ensemble_size": 2, "solver": {"tol": 1e-6}, "seed": 5, "output": "cli_sw"
  })");
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(run("sweep -c cli_sweep.json --plot") == 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);
  const std::string csv = slurp("cli_sw.csv");
  CHECK(csv.rfind("kind,lambda,L,N,h,members", 0) == 0);
  for (const char* svg : {"cli_sw_error.svg", "cli_sw_cm.svg"}) {
    const std::string s = slurp(svg);
    CHECK(well_formed_xml(s));
    CHECK(count_of(s, "<polyline") >= 1);
  }
  // CM plot: measured series and CM line → exactly two polylines
  CHECK(count_of(slurp("cli_sw_cm.svg"), "<polyline") == 2);
  const auto report = nlohmann::json::parse(slurp("cli_sw.json"));
  CHECK(report["config"]["seed"] == 5);
  CHECK(report.contains("fits"));

  // kill after two members, resume, identical CSV
  CHECK(run("sweep -c cli_sweep.json -o cli_sw2 --stop-after 2") == 130);
  REQUIRE(run("sweep -c cli_sweep.json -o cli_sw2 --resume") == 0);
  CHECK(slurp("cli_sw2.csv") == csv);

  REQUIRE(run("sweep -c cli_sweep.json -o cli_sw3", "DILUTE_HOMOG_THREADS=3") == 0);
  CHECK(slurp("cli_sw3.csv") == csv);
  REQUIRE(run("sweep -c cli_sweep.json -o cli_sw4 --threads 2 --seed 5") == 0);
  CHECK(slurp("cli_sw4.csv") == csv);

  // --M override changes the ensemble
  REQUIRE(run("sweep -c cli_sweep.json -o cli_sw5 --M 3") == 0);
  CHECK(slurp("cli_sw5.csv") != csv);

  REQUIRE(run("plot -i cli_sw.csv -o cli_replot") == 0);
  CHECK(slurp("cli_replot_cm.svg") == slurp("cli_sw_cm.svg"));
  CHECK(well_formed_xml(slurp("cli_replot_error.svg")));

  CHECK(run("sweep") == 1);
}
