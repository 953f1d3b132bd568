#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "hitchin/errors.hpp"
#include "hitchin/verify.hpp"

namespace fs = std::filesystem;

namespace hitchin::cli {

int exit_code_for(const std::string& kind) {
  if (kind == "ConfigParseError" || kind == "MissingReport") return kUsageError;
  if (kind == "DegenerateGram") return kCheckFailure;
  return kNumericalFailure;
}

namespace {

struct Options {
  std::string config_path;
  std::optional<int> level;
  std::optional<std::string> out;
  std::optional<unsigned> seed;
  std::vector<std::string> report_runs;
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (const char* env = std::getenv("HITCHIN_OUT"); env && *env) c.out = env;
  if (o.level) c.level = *o.level;
  if (o.out) c.out = *o.out;
  if (o.seed) c.seed = *o.seed;
  validate_config(c);
  return c;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// A fresh run-NNN directory below `parent`; existing runs are never touched.
fs::path new_run_directory(const std::string& parent) {
  fs::create_directories(parent);
  int next = 1;
  for (const auto& e : fs::directory_iterator(parent)) {
    const std::string name = e.path().filename().string();
    if (e.is_directory() && name.rfind("run-", 0) == 0) next = std::max(next, std::atoi(name.c_str() + 4) + 1);
  }
  for (;; ++next) {
    char name[32];
    std::snprintf(name, sizeof(name), "run-%03d", next);
    const fs::path p = fs::path(parent) / name;
    if (fs::create_directory(p)) return p;
  }
}

// Report file: one header line with the timestamp, then deterministic text.
void write_report(const fs::path& path, const std::string& command, const std::string& body) {
  std::ofstream f(path);
  if (!f) throw fs::filesystem_error("cannot write report", path, std::make_error_code(std::errc::io_error));
  f << "# " << command << " " << timestamp() << "\n" << body;
}

std::string failed_lines(const SuiteResult& s) {
  std::string text = format_suite(s), out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind("check = fail", 0) == 0) out += "  [" + s.name + "] " + line + "\n";
  return out;
}

int cmd_mesh_build(const RunConfig& c, std::ostream& out) {
  Workspace ws(c);
  const fs::path dir = new_run_directory(c.out);
  const SuiteResult s = mesh_suite(ws);
  save_mesh(ws.mesh(c.level), (dir / ("mesh-" + std::to_string(c.level) + ".txt")).string());
  write_report(dir / "suite-mesh.txt", "mesh-build", format_config(c) + format_suite(s));
  out << "run = " << dir.string() << "\n" << format_suite(s) << failed_lines(s);
  return s.passed() ? kSuccess : kCheckFailure;
}

int cmd_basis(const RunConfig& c, std::ostream& out) {
  Workspace ws(c);
  const fs::path dir = new_run_directory(c.out);
  const SuiteResult s = basis_suite(ws);
  for (int w : {2, 3})
    save_basis(ws.basis(w), ws.mesh(c.level), (dir / ("basis-" + std::to_string(w) + ".txt")).string());
  write_report(dir / "suite-basis.txt", "basis", format_config(c) + format_suite(s));
  out << "run = " << dir.string() << "\n" << format_suite(s) << failed_lines(s);
  return s.passed() ? kSuccess : kCheckFailure;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  Workspace ws(c);
  const fs::path dir = new_run_directory(c.out);
  const auto q = ws.base_cubic(c.level);
  WangReport report;
  solve_wang(ws.mesh(c.level), q, conjugate(q), WangMode::Real, ws.wang_options(), &report, ws.laplacian(c.level),
             nullptr, c.pairing_constant);
  const std::string body = format_config(c) + format_report(report);
  write_report(dir / "solve.txt", "solve", body);
  out << "run = " << dir.string() << "\n" << format_report(report);
  return kSuccess;
}

int cmd_holonomy(const RunConfig& c, std::ostream& out) {
  Workspace ws(c);
  const fs::path dir = new_run_directory(c.out);
  const auto d = assemble_D(ws.solved(c.level, WangMode::Real));
  std::vector<HolonomyMatrix> hol;
  for (const std::string& w : std::vector<std::string>{"a", "b", "c", "d", kRelationWord})
    hol.push_back(holonomy(d, ws.paths(c.level), w));
  const std::string text = format_holonomy(hol, c.level);
  write_report(dir / "holonomy.txt", "holonomy", format_config(c) + text);
  out << "run = " << dir.string() << "\n" << text;
  return kSuccess;
}

int cmd_signature(const RunConfig& c, std::ostream& out) {
  Workspace ws(c);
  const fs::path dir = new_run_directory(c.out);
  const GramReport g = gram_signature(ws.mesh(c.level), ws.basis(2), ws.basis(3));
  const std::string text = format_gram_report(g);
  write_report(dir / "gram.txt", "signature", format_config(c) + text);
  out << "run = " << dir.string() << "\n" << text;
  return g.n_plus == 6 && g.n_minus == 10 && g.n_zero == 0 ? kSuccess : kCheckFailure;
}

int cmd_verify_all(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Workspace ws(c);
  const fs::path dir = new_run_directory(c.out);
  write_report(dir / "config.txt", "verify-all", format_config(c));
  out << "run = " << dir.string() << "\n";
  bool passed = true;
  std::string failures;
  for (const auto& entry : kSuites) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult s;
    try {
      s = entry.run(ws);
    } catch (const Error& e) {
      write_report(dir / ("suite-" + std::string(entry.name) + ".txt"), "verify-all",
                   "[suite]\nname = " + std::string(entry.name) + "\nstatus = error\nerror = " + e.what() + "\n");
      err << "suite " << entry.name << " aborted: " << e.what() << "\n";
      return exit_code_for(e.kind());
    }
    write_report(dir / ("suite-" + s.name + ".txt"), "verify-all", format_suite(s));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[96];
    std::snprintf(buf, sizeof(buf), "suite %-10s %s  %zu checks  %.1f s\n", s.name.c_str(),
                  s.passed() ? "pass" : "FAIL", s.checks.size(), secs);
    out << buf << std::flush;
    passed = passed && s.passed();
    failures += failed_lines(s);
  }
  if (!failures.empty()) out << "failed checks:\n" << failures;
  out << "verify-all " << (passed ? "pass" : "fail") << "\n";
  return passed ? kSuccess : kCheckFailure;
}

// ---------------------------------------------------------------------------
// report

struct ParsedRun {
  std::string name;
  std::vector<std::string> checks;  // "check = ..." lines
  std::vector<std::string> verdicts;
  std::vector<SeriesPoint> series;
  int gram_level = -1;
  std::vector<std::string> eigenvalues;
  std::string signature;
};

ParsedRun parse_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingReport("no run directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("suite-", 0) == 0) files.push_back(e.path());
  }
  if (files.empty()) throw MissingReport("no suite reports in " + dir.string());
  std::sort(files.begin(), files.end());
  ParsedRun run{dir.filename().string(), {}, {}, {}, -1, {}, {}};
  if (run.name.empty()) run.name = dir.parent_path().filename().string();
  for (const auto& f : files) {
    std::ifstream in(f);
    bool in_gram = false;
    for (std::string line; std::getline(in, line);) {
      if (line == "[gram]") in_gram = true;
      if (line.rfind("check = ", 0) == 0) run.checks.push_back(line);
      if (line.rfind("verdict ", 0) == 0) run.verdicts.push_back(line);
      if (line.rfind("signature = ", 0) == 0) run.signature = line.substr(12);
      if (in_gram && line.rfind("level = ", 0) == 0) run.gram_level = std::atoi(line.c_str() + 8);
      if (in_gram && line.rfind("eigenvalues =", 0) == 0) {
        std::istringstream vals(line.substr(13));
        for (std::string v; vals >> v;) run.eigenvalues.push_back(v);
      }
      if (line.rfind("series = ", 0) == 0) {
        std::istringstream fields(line.substr(9));
        SeriesPoint p;
        fields >> p.metric >> p.level >> p.dt >> p.value;
        if (fields) run.series.push_back(p);
      }
    }
  }
  return run;
}

int cmd_report(const RunConfig& c, const std::vector<std::string>& runs, std::ostream& out) {
  if (runs.empty()) throw MissingReport("no run directories given");
  std::vector<ParsedRun> parsed;
  for (const auto& r : runs) parsed.push_back(parse_run(r));

  std::ostringstream summary, eig, ref;
  std::size_t total = 0, failed = 0;
  summary << "[summary]\n";
  for (const auto& r : parsed) {
    std::size_t f = 0;
    for (const auto& line : r.checks) f += line.rfind("check = fail", 0) == 0;
    total += r.checks.size();
    failed += f;
    summary << "run = " << r.name << " checks " << r.checks.size() << " failed " << f << "\n";
    if (!r.signature.empty()) summary << "signature = " << r.signature << "\n";
    for (const auto& v : r.verdicts) summary << v << "\n";
  }
  summary << "checks = " << total << "\nfailed = " << failed << "\n";
  for (const auto& r : parsed)
    for (const auto& line : r.checks)
      if (line.rfind("check = fail", 0) == 0) summary << "  [" << r.name << "] " << line << "\n";

  eig << "run,level,index,eigenvalue\n";
  for (const auto& r : parsed)
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
      eig << r.name << "," << r.gram_level << "," << i << "," << r.eigenvalues[i] << "\n";

  // For each metric and step, later runs override earlier ones at a shared level.
  std::map<std::pair<std::string, double>, std::map<int, double>> table;
  for (const auto& r : parsed)
    for (const auto& p : r.series) table[{p.metric, p.dt}][p.level] = p.value;
  ref << "metric,dt,level,value\n";
  summary << "[refinement]\n";
  for (const auto& [key, by_level] : table) {
    bool monotone = true;
    double previous = INFINITY;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s dt=%g:", key.first.c_str(), key.second);
    summary << buf;
    for (const auto& [level, value] : by_level) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%d,%.17g\n", key.first.c_str(), key.second, level, value);
      ref << buf;
      std::snprintf(buf, sizeof(buf), " L%d %.3e", level, value);
      summary << buf;
      monotone = monotone && value < previous;
      previous = value;
    }
    summary << (by_level.size() > 1 ? (monotone ? " decreasing" : " not-decreasing") : "") << "\n";
  }

  const fs::path dir = new_run_directory(c.out);
  write_report(dir / "summary.txt", "report", summary.str());
  std::ofstream(dir / "eigenvalues.csv") << eig.str();
  std::ofstream(dir / "refinement.csv") << ref.str();
  out << "run = " << dir.string() << "\n" << summary.str();
  return failed == 0 ? kSuccess : kCheckFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Affine-sphere Wang solver, flat SL(3) connections and Goldman pairing on the Bolza surface"};
  app.name("hitchin");
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--level", o.level, "mesh level 0..5 (overrides the config)");
  app.add_option("--out", o.out, "parent directory of run directories (overrides HITCHIN_OUT and the config)");
  app.add_option("--seed", o.seed, "seed of the random test vectors");
  app.fallthrough();
  std::map<std::string, CLI::App*> sub;
  for (const auto& [name, help] :
       std::vector<std::pair<std::string, std::string>>{{"mesh-build", "build the mesh and run the mesh checks"},
                                                        {"basis", "extract holomorphic 2- and 3-differentials"},
                                                        {"solve", "solve the Wang equation at the base point"},
                                                        {"holonomy", "generator and relation word holonomy"},
                                                        {"signature", "Gram matrix and signature of omega(., J.)"},
                                                        {"verify-all", "run every verification suite"},
                                                        {"report", "summarize run directories and export CSV"}})
    sub[name] = app.add_subcommand(name, help);
  sub["report"]->add_option("runs", o.report_runs, "run directories")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    const RunConfig c = resolve(o);
    if (sub["mesh-build"]->parsed()) return cmd_mesh_build(c, out);
    if (sub["basis"]->parsed()) return cmd_basis(c, out);
    if (sub["solve"]->parsed()) return cmd_solve(c, out);
    if (sub["holonomy"]->parsed()) return cmd_holonomy(c, out);
    if (sub["signature"]->parsed()) return cmd_signature(c, out);
    if (sub["verify-all"]->parsed()) return cmd_verify_all(c, out, err);
    return cmd_report(c, o.report_runs, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

}  // namespace hitchin::cli
