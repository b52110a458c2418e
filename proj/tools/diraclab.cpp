// diraclab: command-line entry point for the verifiers, simulations and campaigns.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "diraclab/config.hpp"
#include "diraclab/io.hpp"
#include "diraclab/parallel.hpp"
#include "diraclab/verify.hpp"

using namespace diraclab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kConfigError = 4;

struct Context {
  fs::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  bool dry_run = false;
  bool quiet = false;
};

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config::ConfigError(path, "cannot open file");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw config::ConfigError(path, std::string("not valid JSON: ") + e.what());
  }
}

void print_outcome(const Context& ctx, const Outcome& o) {
  if (!ctx.quiet)
    for (const auto& l : o.lines) std::cout << "  " << l << "\n";
  for (const auto& c : o.criteria) std::cout << to_string(c.verdict) << " " << c.id << ": " << c.detail << "\n";
}

/// Numeric cells become JSON numbers; "inf"/"nan" and text stay strings.
json cell_json(const std::string& c) {
  char* end = nullptr;
  double v = std::strtod(c.c_str(), &end);
  if (!c.empty() && end == c.c_str() + c.size() && std::isfinite(v)) {
    if (c.find_first_of(".eE") == std::string::npos) {
      try {
        return std::stoll(c);
      } catch (const std::out_of_range&) {
        return v;
      }
    }
    return v;
  }
  return c;
}

json table_rows(const std::string& name, const io::Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json j;
    j["table"] = name;
    for (std::size_t i = 0; i < t.columns.size(); ++i) j[t.columns[i]] = cell_json(r[i]);
    rows.push_back(j);
  }
  return rows;
}

/// Writes tables, JSONL and the manifest; returns the exit status.
int finish(const Context& ctx, const std::string& sub, const std::string& prefix, const json& effective,
           const Outcome& o, const std::string& started, std::vector<std::string> outputs = {}) {
  for (const auto& [stem, t] : o.tables) {
    std::string f = prefix + "." + stem + ".csv";
    io::write_csv(ctx.out_dir / f, t);
    outputs.push_back(f);
  }
  std::vector<json> lines;
  if (!o.reports.empty()) {
    io::write_csv(ctx.out_dir / (prefix + ".summary.csv"), io::report_summary(o.reports));
    outputs.push_back(prefix + ".summary.csv");
    for (std::size_t i = 0; i < o.reports.size(); ++i) {
      auto l = io::report_lines(o.reports[i]);
      lines.insert(lines.end(), l.begin(), l.end());
      if (!o.reports[i].refinement.empty()) {
        std::string f = prefix + ".refinement_" + std::to_string(i) + ".csv";
        io::write_csv(ctx.out_dir / f, io::refinement_table(o.reports[i]));
        outputs.push_back(f);
      }
    }
  } else {
    for (const auto& [stem, t] : o.tables)
      for (auto& j : table_rows(stem, t)) lines.push_back(j);
  }
  if (!lines.empty()) {
    io::write_atomic(ctx.out_dir / (prefix + ".jsonl"), io::to_jsonl(lines));
    outputs.push_back(prefix + ".jsonl");
  }
  io::RunManifest m;
  m.config = effective;
  m.config_hash = io::config_hash(effective);
  m.subcommand = sub;
  m.started = started;
  m.finished = io::utc_now();
  m.outputs = outputs;
  m.criteria = o.criteria;
  io::write_manifest(ctx.out_dir / "manifest.json", m);
  print_outcome(ctx, o);
  return o.exit_code();
}

// ---- verify-algebra ----

int cmd_verify_algebra(const Context& ctx, const std::string& fault, int samples) {
  std::string started = io::utc_now();
  json effective{{"kind", "verify-algebra"}, {"samples", samples}, {"seed", ctx.seed.value_or(1)}, {"fault", fault}};
  if (ctx.dry_run) {
    std::cout << "verify-algebra: " << samples << " random samples per identity\n";
    return 0;
  }
  auto rows = algebra_suite(ctx.seed.value_or(1), samples, fault);
  Outcome o;
  for (const auto& r : rows) o.check(r.identity, r.pass(), "max residual " + fmt(r.max_residual, 3) + " (tol " + fmt(r.tol, 1) + ")");
  o.tables.emplace_back("residuals", table_of(rows));
  return finish(ctx, "verify-algebra", "algebra", effective, o, started);
}

// ---- simulate ----

std::string step_name(long step) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "step_%010ld.snap", step);
  return buf;
}

/// Latest checkpoint in dir written for this config hash.
std::optional<io::Snapshot> latest_checkpoint(const fs::path& dir, std::uint64_t hash) {
  std::optional<io::Snapshot> best;
  if (!fs::exists(dir)) return best;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".snap") continue;
    io::Snapshot s = io::read_snapshot(e.path());
    if (s.config_hash == hash && (!best || s.step > best->step)) best = std::move(s);
  }
  return best;
}

int cmd_simulate(const Context& ctx, const std::string& path, bool resume) {
  std::string started = io::utc_now();
  json raw = read_json(path);
  if (ctx.seed && raw.is_object()) raw["seed"] = *ctx.seed;
  config::Parsed cfg = config::parse(raw);
  if (cfg.kind != "simulate") throw config::ConfigError("$.kind", "simulate needs a config of kind \"simulate\"");
  const auto& s = cfg.simulate;
  std::uint64_t hash = io::config_hash(cfg.effective);
  ModelSpec spec = s.model;
  spec.eps = s.eps;
  Grid g = s.grid.grid(spec.n);
  long nsteps = std::lround(s.T / s.grid.dt);
  if (ctx.dry_run) {
    std::cout << "simulate: n=" << spec.n << ", N=" << g.N << ", L=" << g.L << ", dt=" << s.grid.dt << ", " << nsteps
              << " steps, data " << s.data_kind << ", config hash " << io::hex64(hash) << "\n";
    if (s.checkpoint_stride > 0) std::cout << "  checkpoint every " << s.checkpoint_stride << " steps\n";
    if (s.equivalence) std::cout << "  second run in the other formulation for the equivalence check\n";
    return 0;
  }
  Field data = s.data_kind == "zero" ? Field(g, spec.ncomp(), true) : campaign_data(g, spec.ncomp(), s.data, s.seed);

  fs::path ckdir = ctx.out_dir / "checkpoints";
  std::optional<Checkpoint> from;
  std::vector<std::string> kept_rows;
  if (resume) {
    auto snap = latest_checkpoint(ckdir, hash);
    if (!snap) throw config::ConfigError(ckdir.string(), "no checkpoint written for config hash " + io::hex64(hash));
    from = Checkpoint{snap->step, snap->time, snap->charge0, snap->field};
    // keep the charge series up to the checkpoint so the resumed file matches an uninterrupted run
    std::ifstream is(ctx.out_dir / "charge.csv");
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line))
      if (std::stol(line.substr(0, line.find(','))) < snap->step) kept_rows.push_back(line);
    std::cout << "resuming from step " << snap->step << "\n";
  }

  io::Table charge{{"step", "t", "charge", "rel_drift"}, {}};
  std::vector<std::string> outputs;
  SolveOptions opt;
  opt.dt = s.grid.dt;
  opt.T = s.T;
  opt.keep_frames = false;
  opt.record_stride = s.record_stride;
  opt.tail_threshold = s.tail_threshold;
  opt.checkpoint_stride = s.checkpoint_stride;
  opt.resume = from ? &*from : nullptr;
  opt.on_checkpoint = [&](const Checkpoint& c) {
    std::string f = "checkpoints/" + step_name(c.step);
    io::write_snapshot(ctx.out_dir / f, {c.state, c.time, c.step, c.charge0, hash});
  };
  // equivalence: the psi-form run is kept at record frames and compared with the (u, v) run
  std::vector<Field> other;
  std::vector<long> other_steps;
  if (s.equivalence) {
    ModelSpec ps = spec;
    ps.form = spec.form == Formulation::UvForm ? Formulation::PsiForm : Formulation::UvForm;
    Field d2 = ps.form == Formulation::PsiForm ? uv_to_psi(data) : psi_to_uv(data);
    SolveOptions o2 = opt;
    o2.checkpoint_stride = 0;
    o2.on_checkpoint = nullptr;
    o2.resume = nullptr;
    o2.on_frame = [&](long k, double, const Field& a) {
      other.push_back(ps.form == Formulation::PsiForm ? a : uv_to_psi(a));
      other_steps.push_back(k);
    };
    nonlinear_solve(ps, d2, g, o2);
  }
  double divergence = 0.0;
  opt.on_frame = [&](long k, double, const Field& a) {
    if (!s.equivalence) return;
    auto it = std::find(other_steps.begin(), other_steps.end(), k);
    if (it == other_steps.end()) return;
    Field mine = spec.form == Formulation::PsiForm ? a : uv_to_psi(a);
    const Field& ref = other[static_cast<std::size_t>(it - other_steps.begin())];
    Field d = mine;
    d -= ref;
    double nr = ref.l2();
    divergence = std::max(divergence, nr > 0.0 ? d.l2() / nr : d.l2());
  };
  SolveResult r = nonlinear_solve(spec, data, g, opt);

  double q0 = from ? from->charge0 : (r.charge.empty() ? 0.0 : r.charge.front());
  long k0 = from ? from->step : 0;
  for (std::size_t i = 0; i < r.charge.size(); ++i) {
    long k = k0 + static_cast<long>(i);
    if ((k - k0) % s.record_stride != 0 && i + 1 != r.charge.size()) continue;
    double drift = q0 > 0.0 ? std::abs(r.charge[i] - q0) / q0 : 0.0;
    charge.add(k, r.times[i], r.charge[i], drift);
  }
  std::string csv = io::to_csv(charge);
  if (!kept_rows.empty()) {
    std::string head = csv.substr(0, csv.find('\n') + 1), body = csv.substr(csv.find('\n') + 1), prefix;
    for (const auto& l : kept_rows) prefix += l + "\n";
    csv = head + prefix + body;
  }
  io::write_atomic(ctx.out_dir / "charge.csv", csv);
  outputs.push_back("charge.csv");
  long last = k0 + r.steps_done;
  io::write_snapshot(ctx.out_dir / "final.snap", {r.last_valid, last * s.grid.dt, last, q0, hash});
  outputs.push_back("final.snap");
  if (s.checkpoint_stride > 0)
    for (long k = s.checkpoint_stride; k <= last; k += s.checkpoint_stride) outputs.push_back("checkpoints/" + step_name(k));

  Outcome o;
  o.lines.push_back("steps " + std::to_string(last) + ", status " + to_string(r.status) + ", max guard-band fraction " +
                    fmt(r.max_tail, 3));
  Verdict sv = r.status == SolveStatus::Ok ? Verdict::Pass
               : r.status == SolveStatus::ResolutionExceeded ? Verdict::Unresolved
                                                             : Verdict::Fail;
  o.add("solver-status", sv, to_string(r.status) + (r.message.empty() ? "" : ": " + r.message));
  o.check("charge-drift", r.charge_drift <= 1e-9, "max relative drift " + fmt(r.charge_drift, 3));
  if (s.equivalence) o.check("formulation-equivalence", divergence <= 1e-8, "max relative divergence " + fmt(divergence, 3));
  return finish(ctx, "simulate", "simulate", cfg.effective, o, started, outputs);
}

// ---- verify <id> ----

int cmd_verify(const Context& ctx, const std::string& id, const std::string& path, std::optional<int> n) {
  std::string started = io::utc_now();
  if (!is_verify_id(id)) {
    std::string list;
    for (const auto& v : verify_ids()) list += "  " + v + "\n";
    std::cerr << "usage error: unknown verify id \"" << id << "\"; registered ids:\n" << list;
    return kConfigError;
  }
  json raw = path.empty() ? json{{"kind", "verify"}, {"id", id}} : read_json(path);
  if (!raw.is_object()) throw config::ConfigError("$", "expected an object");
  if (!raw.contains("params")) raw["params"] = json::object();
  if (ctx.seed) raw["params"]["seed"] = *ctx.seed;
  if (n) raw["params"]["n"] = *n;
  config::Parsed cfg = config::parse(raw);
  if (cfg.kind != "verify") throw config::ConfigError("$.kind", "verify needs a config of kind \"verify\"");
  if (cfg.verify.id != id) throw config::ConfigError("$.id", "config is for \"" + cfg.verify.id + "\", not \"" + id + "\"");
  config::Node params(cfg.verify.params, "$.params");
  Outcome o = run_verify(id, params, ctx.dry_run);
  json effective = cfg.effective;
  effective["params"] = params.finish();
  if (ctx.dry_run) {
    for (const auto& l : o.lines) std::cout << l << "\n";
    return 0;
  }
  return finish(ctx, "verify", id, effective, o, started);
}

// ---- campaign ----

int cmd_campaign(const Context& ctx, const std::string& path) {
  std::string started = io::utc_now();
  json raw = read_json(path);
  if (ctx.seed && raw.is_object()) raw["seed"] = *ctx.seed;
  config::Parsed cfg = config::parse(raw);
  if (cfg.kind != "campaign") throw config::ConfigError("$.kind", "campaign needs a config of kind \"campaign\"");
  const auto& cc = cfg.campaign;
  if (ctx.dry_run) {
    std::cout << "campaign " << cc.campaign << " (config hash " << io::hex64(io::config_hash(cfg.effective)) << ")\n";
    for (const auto& l : campaign_plan(cc)) std::cout << "  " << l << "\n";
    return 0;
  }
  Outcome o = run_campaign(cc);
  return finish(ctx, "campaign", cc.campaign, cfg.effective, o, started);
}

int cmd_check_manifest(const std::string& path) {
  bool ok = io::check_manifest(path);
  std::cout << (ok ? "PASS" : "FAIL") << " manifest " << path << ": config hash "
            << (ok ? "matches" : "does not match") << " the embedded config\n";
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral lab for the massless cubic Dirac equation"};
  app.set_version_flag("--version", std::string(io::tool_version));
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  auto* seed_opt = app.add_option("--seed", seed, "override the seed in the config (enters the config hash)");
  app.add_option("--jobs", ctx.jobs, "cap on worker threads (0 = hardware concurrency)");
  app.add_option("--out-dir", out_dir, "directory for CSV, JSONL, snapshots and the manifest");
  app.add_flag("--dry-run", ctx.dry_run, "print the plan and exit without computing");
  app.add_flag("-q,--quiet", ctx.quiet, "print verdict lines only");

  auto* va = app.add_subcommand("verify-algebra", "algebraic identity suite");
  std::string fault;
  int samples = 10000;
  va->add_option("--fault-inject", fault, "deliberate fault: gamma1")->check(CLI::IsMember({"gamma1"}));
  va->add_option("--samples", samples, "random samples per identity")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "nonlinear evolution with checkpoints");
  std::string sim_cfg;
  bool resume = false;
  sim->add_option("config", sim_cfg, "config file of kind simulate")->required();
  sim->add_flag("--resume", resume, "continue from the latest checkpoint written for this config");

  auto* ver = app.add_subcommand("verify", "one registered estimate or experiment");
  std::string vid, vcfg;
  std::optional<int> vn;
  ver->add_option("id", vid, "estimate id")->required();
  ver->add_option("config", vcfg, "optional config file of kind verify");
  ver->add_option("--n", vn, "spatial dimension (stored in params.n)");

  auto* camp = app.add_subcommand("campaign", "run a campaign config");
  std::string ccfg;
  camp->add_option("config", ccfg, "config file of kind campaign")->required();

  auto* chk = app.add_subcommand("check-manifest", "recompute the config hash of a manifest");
  std::string mpath;
  chk->add_option("manifest", mpath, "manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::string list;
    for (const auto& v : verify_ids()) list += " " + v;
    std::cerr << "registered verify ids:" << list << "\n";
    return kConfigError;
  }
  if (*seed_opt) ctx.seed = seed;
  ctx.out_dir = out_dir;
  default_jobs() = ctx.jobs;
  try {
    if (*va) return cmd_verify_algebra(ctx, fault, samples);
    if (*sim) return cmd_simulate(ctx, sim_cfg, resume);
    if (*ver) return cmd_verify(ctx, vid, vcfg, vn);
    if (*camp) return cmd_campaign(ctx, ccfg);
    if (*chk) return cmd_check_manifest(mpath);
  } catch (const config::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return kConfigError;
}
