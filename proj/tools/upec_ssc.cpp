// upec_ssc: timing side-channel proofs for SoC netlists.
//
//   upec_ssc check <model-dir> | <netlist> <config>   run the fixpoint (or --unrolled) procedure
//   upec_ssc invariants <model-dir> | <netlist> <config>
//   upec_ssc demo <model-dir> <scenario> [-v N] [--baseline M]
//   upec_ssc generate <variant> <out-dir> [width options]
//
// Exit codes: 0 secure / all invariants hold, 1 usage or input error,
// 2 vulnerable / invariant fails, 3 needs classification, 4 inconclusive.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "upec/upec.hpp"

namespace fs = std::filesystem;
using namespace upec;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Inputs {
  std::string netlist, config;
};

// A single directory argument names a model bundle: one *.nl file plus
// config.json.
Inputs resolve_inputs(const std::vector<std::string>& args) {
  if (args.size() == 2) return {args[0], args[1]};
  if (args.size() != 1) throw ConfigError("expected <model-dir> or <netlist> <config>");
  fs::path dir(args[0]);
  if (!fs::is_directory(dir)) throw ConfigError(args[0] + " is not a model directory");
  std::vector<fs::path> nets;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".nl") nets.push_back(e.path());
  if (nets.size() != 1)
    throw ConfigError(args[0] + ": expected exactly one .nl file, found " + std::to_string(nets.size()));
  auto cfg = dir / "config.json";
  if (!fs::exists(cfg)) throw ConfigError(args[0] + ": missing config.json");
  return {nets[0].string(), cfg.string()};
}

Netlist load_netlist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return parse_netlist(in);
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

std::string pad(unsigned v, int w = 3) {
  std::ostringstream s;
  s << std::setw(w) << std::setfill('0') << v;
  return s.str();
}

std::string join(const std::vector<std::string>& xs, const std::string& sep = ", ") {
  std::string r;
  for (const auto& x : xs) r += (r.empty() ? "" : sep) + x;
  return r;
}

std::string show(const Value& v) {
  if (std::holds_alternative<std::uint64_t>(v)) return hex_string(as_bits(v));
  const auto& a = as_array(v);
  std::string s = "{default " + hex_string(a.default_element);
  for (const auto& [i, e] : a.entries)
    if (e != a.default_element) s += ", [" + std::to_string(i) + "]=" + hex_string(e);
  return s + "}";
}

// Human-readable trace: every state per cycle, marking cross-instance
// differences.
void print_trace(std::ostream& out, const Netlist& n, const Counterexample& cex) {
  unsigned insts = cex.two_instances ? 2 : 1;
  for (unsigned c = 0; c < cex.trace[0].size(); ++c) {
    out << "  cycle " << c << "\n";
    for (const auto& s : n.states()) {
      std::string a = show(cex.trace[0][c].states.at(s.node));
      out << "    " << std::left << std::setw(28) << n.name_of(s.node) << " " << a;
      if (insts == 2) {
        std::string b = show(cex.trace[1][c].states.at(s.node));
        out << " | " << b << (a != b ? "   <> differs" : "");
      }
      out << "\n";
    }
  }
}

struct CheckArgs {
  std::vector<std::string> inputs;
  bool unrolled = false, json = false;
  std::optional<unsigned> max_k;
  std::optional<unsigned long long> budget;
  std::string dimacs_dir, trace_dir, log_file, victim_window;
};

int cmd_check(const CheckArgs& a) {
  auto t0 = Clock::now();
  auto in = resolve_inputs(a.inputs);
  Netlist n = load_netlist(in.netlist);
  ProofConfig cfg = load_config(in.config);
  if (!a.victim_window.empty())
    cfg.victim_window = a.victim_window == "full" ? VictimWindow::Full : VictimWindow::First;

  RunFiles files;
  double solver_seconds = 0;
  ProcedureOptions opts;
  opts.budget = a.budget;
  opts.max_k = a.max_k;
  if (!a.dimacs_dir.empty())
    opts.on_query = [&](unsigned it, const ClauseSet& cs) {
      auto p = fs::path(a.dimacs_dir) / ("query_" + pad(it) + ".cnf");
      write_file(p, export_dimacs(cs));
      files.dimacs.push_back(p.string());
    };
  opts.on_iteration = [&](const IterationRecord& r, const Counterexample* cex) {
    solver_seconds += r.stats.seconds;
    if (!a.json)
      std::cerr << "iteration " << r.iteration << " [" << r.phase << ", k=" << r.k << "] " << r.status << " -> "
                << r.action << (r.diff_set.empty() ? "" : ": " + join(r.diff_set.names(n))) << "\n";
    if (cex && !a.trace_dir.empty()) {
      auto p = fs::path(a.trace_dir) / ("iter_" + pad(r.iteration) + ".vcd");
      write_file(p, write_vcd(n, *cex));
      files.traces.push_back(p.string());
    }
  };

  Verdict v = a.unrolled ? run_ssc_unrolled(n, cfg, opts) : run_ssc(n, cfg, opts);
  if (!a.log_file.empty()) {
    write_file(a.log_file, iteration_log_jsonl(n, v));
    files.log = a.log_file;
  }
  auto report = check_report(n, cfg, v, a.unrolled, in.netlist, in.config, files, {since(t0), solver_seconds});

  if (a.json) {
    std::cout << report.dump(2) << "\n";
    return exit_code(v.status);
  }
  for (const auto& w : v.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "verdict: " << verdict_name(v.status) << " after " << v.log.size() << " iteration(s)"
            << (a.unrolled ? ", k=" + std::to_string(v.k) : "") << "\n";
  if (v.evidence) {
    auto cls = classify(n, v.evidence->diff_set, cfg);
    std::cout << "diff set at cycle " << v.evidence->failing_cycle << ": " << join(v.evidence->diff_set.names(n))
              << "\npersistent: " << join(cls.persistent.names(n)) << "\n";
    for (const auto& [id, idx] : v.evidence->array_diffs) {
      std::vector<std::string> s;
      for (auto i : idx) s.push_back(std::to_string(i));
      std::cout << n.name_of(id) << " differs at index " << join(s) << "\n";
    }
  }
  if (v.status == VerdictStatus::NeedsClassification)
    std::cout << "unclassified: " << join(v.unclassified.names(n)) << "\n";
  if (v.status == VerdictStatus::Inconclusive) std::cout << v.budget_report << "\n";
  if (v.status == VerdictStatus::Secure) std::cout << "final S (" << v.final_set.size() << "): " << join(v.final_set.names(n)) << "\n";
  for (const auto& f : files.traces) std::cout << "trace: " << f << "\n";
  if (!files.dimacs.empty()) std::cout << files.dimacs.size() << " DIMACS file(s) in " << a.dimacs_dir << "\n";
  std::cout << "note: " << kOutputsNote << "\n";
  return exit_code(v.status);
}

struct InvArgs {
  std::vector<std::string> inputs;
  bool json = false;
  std::optional<unsigned long long> budget;
  std::string trace_dir;
};

int cmd_invariants(const InvArgs& a) {
  auto t0 = Clock::now();
  auto in = resolve_inputs(a.inputs);
  Netlist n = load_netlist(in.netlist);
  ProofConfig cfg = load_config(in.config);
  validate_config(n, cfg);

  std::vector<InvariantResult> results;
  double solver_seconds = 0;
  CheckOptions opts;
  opts.budget = a.budget;
  for (const auto& inv : cfg.invariants) {
    InvariantResult r;
    r.invariant = inv;
    try {
      auto out = check_invariant(n, inv, cfg, opts);
      r.status = out.holds() ? "holds" : "fails";
      r.conflicts = out.stats.conflicts;
      solver_seconds += out.stats.seconds;
      r.counterexample = std::move(out.counterexample);
    } catch (const BudgetExceeded& e) {
      r.status = "budget";
      r.conflicts = e.conflicts();
    }
    if (r.counterexample && !a.trace_dir.empty()) {
      auto p = fs::path(a.trace_dir) / ("invariant_" + inv.name + ".vcd");
      write_file(p, write_vcd(n, *r.counterexample));
      r.trace_file = p.string();
    }
    results.push_back(std::move(r));
  }
  auto report = invariants_report(n, cfg, results, in.netlist, in.config, {since(t0), solver_seconds});
  int code = report["exit_code"].get<int>();
  if (a.json) {
    std::cout << report.dump(2) << "\n";
    return code;
  }
  std::cout << results.size() << " invariants checked\n";
  for (const auto& r : results) {
    std::cout << "  " << r.status << "  " << r.invariant.name << ": " << r.invariant.describe() << "\n";
    if (r.counterexample) {
      std::cout << "  counterexample (holds at cycle 0, violated at cycle 1):\n";
      print_trace(std::cout, n, *r.counterexample);
    }
    if (!r.trace_file.empty()) std::cout << "  trace: " << r.trace_file << "\n";
  }
  if (!results.empty())
    std::cout << "note: invariants are proven by consecution only; an invariant that no reachable state satisfies "
                 "would be vacuous\n";
  return code;
}

struct DemoArgs {
  std::string model, scenario;
  unsigned v = 0;
  std::optional<unsigned> baseline;
  bool json = false;
};

int cmd_demo(const DemoArgs& a) {
  fs::path dir(a.model);
  auto in = resolve_inputs({a.model});
  auto script_path = dir / ("attack_" + a.scenario + ".json");
  if (!fs::exists(script_path)) {
    std::vector<std::string> known;
    for (const auto& e : fs::directory_iterator(dir)) {
      auto name = e.path().filename().string();
      if (name.rfind("attack_", 0) == 0 && e.path().extension() == ".json")
        known.push_back(name.substr(7, name.size() - 12));
    }
    std::sort(known.begin(), known.end());
    throw ConfigError("unknown scenario '" + a.scenario + "' for " + a.model + " (available: " + join(known) + ")");
  }
  Netlist n = load_netlist(in.netlist);
  auto script = load_attack_script(script_path);
  auto run = replay_attack_demo(n, script, a.v);
  std::optional<DemoReport> base;
  if (a.baseline) base = replay_attack_demo(n, script, *a.baseline);

  if (a.json) {
    json j;
    j["command"] = "demo";
    j["model"] = a.model;
    j["run"] = demo_json(run);
    if (base) {
      j["baseline"] = demo_json(*base);
      j["delta"] = std::int64_t(run.observation) - std::int64_t(base->observation);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "scenario " << script.scenario << ": " << script.description << "\n";
  auto line = [&](const DemoReport& r) {
    std::cout << "v=" << r.victim_accesses << ": " << r.signal << " "
              << (r.observation_kind == "value" ? "final value " : "overwritten cells ") << r.observation << "\n";
  };
  if (base) line(*base);
  line(run);
  if (base) {
    auto d = std::int64_t(run.observation) - std::int64_t(base->observation);
    std::cout << "delta: " << (d < 0 ? -d : d) << "\n";
  }
  return 0;
}

struct GenArgs {
  std::string variant, out;
  SocParams p;
  bool reduced = false;
};

int cmd_generate(GenArgs a) {
  auto variant = parse_variant(a.variant);
  auto bundle = generate_soc(variant, a.reduced ? reduced_params(variant) : a.p);
  write_bundle(bundle, a.out);
  std::cout << "wrote " << bundle.netlist_file << ", config.json, " << bundle.attacks.size()
            << " attack script(s) and README.md to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UPEC-SSC timing side-channel verification for SoC netlists"};
  app.require_subcommand(1);

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "prove or refute timing side-channel freedom");
  check->add_option("inputs", ca.inputs, "<model-dir> or <netlist> <config>")->required()->expected(1, 2);
  check->add_flag("--unrolled", ca.unrolled, "use the cycle-by-cycle unrolled procedure");
  check->add_option("--max-k", ca.max_k, "unrolling depth cap (default from config, 16)")->check(CLI::PositiveNumber);
  check->add_option("--budget", ca.budget, "solver conflict budget per query");
  check->add_option("--dimacs-dir", ca.dimacs_dir, "write every solver query as DIMACS");
  check->add_option("--trace-dir", ca.trace_dir, "write a VCD per counterexample");
  check->add_option("--log", ca.log_file, "write the iteration log as JSON lines");
  check->add_option("--victim-window", ca.victim_window, "cycles the victim constraints cover")
      ->check(CLI::IsMember({"first", "full"}));
  check->add_flag("--json", ca.json, "print the JSON report on stdout");

  InvArgs ia;
  auto* invs = app.add_subcommand("invariants", "check configured invariants by consecution");
  invs->add_option("inputs", ia.inputs, "<model-dir> or <netlist> <config>")->required()->expected(1, 2);
  invs->add_option("--budget", ia.budget, "solver conflict budget per query");
  invs->add_option("--trace-dir", ia.trace_dir, "write a VCD per counterexample");
  invs->add_flag("--json", ia.json, "print the JSON report on stdout");

  DemoArgs da;
  auto* demo = app.add_subcommand("demo", "replay an attack script in the simulator");
  demo->add_option("model", da.model, "model directory")->required();
  demo->add_option("scenario", da.scenario, "attack scenario (dma_timer, hwpe)")->required();
  demo->add_option("-v,--victim-accesses", da.v, "number of victim memory accesses");
  demo->add_option("--baseline", da.baseline, "also run with this many accesses and print the delta");
  demo->add_flag("--json", da.json, "print JSON on stdout");

  GenArgs ga;
  auto* gen = app.add_subcommand("generate", "write a toy SoC model bundle");
  gen->add_option("variant", ga.variant, "vulnerable, hwpe or fixed")->required();
  gen->add_option("out", ga.out, "output directory")->required();
  gen->add_option("--addr-width", ga.p.addr_width, "memory address bits (depth 2^n, at most 64 words)");
  gen->add_option("--data-width", ga.p.data_width, "memory word width");
  gen->add_option("--len-width", ga.p.len_width, "transfer length counter width");
  gen->add_option("--timer-width", ga.p.timer_width, "timer width");
  gen->add_flag("--reduced", ga.reduced, "minimal widths for exhaustive cross-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*check) return cmd_check(ca);
    if (*invs) return cmd_invariants(ia);
    if (*demo) return cmd_demo(da);
    if (*gen) return cmd_generate(ga);
  } catch (const SoundnessError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
