#pragma once

// Desk-scale MCU models: a core stub, a shared crossbar with fixed-priority
// arbitration, a DMA engine, a timer started by the DMA completion pulse, a
// memory array, optionally an HWPE-style sequential writer, and in the
// fixed variant a second crossbar with a private memory for the core.
//
// The core stub issues at most one request per cycle; it is presented in the
// following cycle and, since the core has the highest priority, accepted in
// that cycle.
//
// Crossbar timing: masters present requests combinationally; the winner is
// latched into the grant and request registers; memory is accessed from the
// request registers and the read data appears one cycle later. A master
// that sees its grant bit set knows its last request was accepted.
// Priority is core > DMA > HWPE.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "upec/config.hpp"
#include "upec/netlist_io.hpp"

namespace upec {

enum class SocVariant { Vulnerable, Hwpe, Fixed };

inline constexpr std::string_view variant_name(SocVariant v) {
  switch (v) {
    case SocVariant::Vulnerable: return "vulnerable";
    case SocVariant::Hwpe: return "hwpe";
    case SocVariant::Fixed: return "fixed";
  }
  return "?";
}

inline SocVariant parse_variant(const std::string& s) {
  for (auto v : {SocVariant::Vulnerable, SocVariant::Hwpe, SocVariant::Fixed})
    if (s == variant_name(v)) return v;
  throw ConfigError("unknown SoC variant '" + s + "' (expected vulnerable, hwpe or fixed)");
}

struct SocParams {
  unsigned addr_width = 5;   // memory depth is 2^addr_width words
  unsigned data_width = 8;
  unsigned len_width = 4;    // DMA/HWPE transfer length counter
  unsigned timer_width = 8;
  std::optional<bool> with_hwpe;  // default: off for vulnerable, on otherwise
};

inline constexpr unsigned kMaxMemoryWords = 64;
inline constexpr unsigned kMaxCounterWidth = 16;

// Parameters small enough that the total state fits the exhaustive oracle.
inline SocParams reduced_params(SocVariant v) {
  SocParams p;
  p.addr_width = v == SocVariant::Vulnerable ? 2 : 1;
  p.data_width = 1;
  p.len_width = 1;
  p.timer_width = 1;
  if (v == SocVariant::Fixed) p.with_hwpe = false;
  return p;
}

struct ModelBundle {
  SocVariant variant = SocVariant::Vulnerable;
  SocParams params;
  std::string netlist_file;
  std::string netlist_text;
  json config;
  std::map<std::string, json> attacks;  // scenario name -> script
  std::string readme;
};

namespace detail {

inline void check_soc_params(const SocParams& p) {
  if (p.addr_width < 1 || (1u << std::min(p.addr_width, 31u)) > kMaxMemoryWords)
    throw ConfigError("addr_width must give between 2 and " + std::to_string(kMaxMemoryWords) + " memory words");
  if (p.data_width < 1 || p.data_width > kMaxCounterWidth)
    throw ConfigError("data_width must be in 1.." + std::to_string(kMaxCounterWidth));
  if (p.len_width < 1 || p.len_width > kMaxCounterWidth)
    throw ConfigError("len_width must be in 1.." + std::to_string(kMaxCounterWidth));
  if (p.timer_width < 1 || p.timer_width > kMaxCounterWidth)
    throw ConfigError("timer_width must be in 1.." + std::to_string(kMaxCounterWidth));
}

struct Engine {
  NodeId base, remaining;  // states
  NodeId ack;              // grant bit seen this cycle
  NodeId eff_addr, eff_rem, req;
};

// Sequential bus master: presents one request per cycle while beats remain,
// and advances its pointer when the previous request was granted.
inline Engine build_engine(NetlistBuilder& b, const std::string& prefix, const std::string& ptr_name, NodeId ack,
                           NodeId start, NodeId start_addr, NodeId start_len, unsigned aw, unsigned lw) {
  Engine e;
  e.base = b.state(prefix + "." + ptr_name, aw);
  e.remaining = b.state(prefix + ".remaining", lw);
  e.ack = ack;
  NodeId pending = b.ne_const(e.remaining, 0);
  e.eff_rem = b.ite(b.and_(ack, pending), b.sub(e.remaining, b.constant(lw, 1)), e.remaining);
  e.eff_addr = b.ite(ack, b.add(e.base, b.constant(aw, 1)), e.base);
  e.req = b.ne_const(e.eff_rem, 0);
  b.next(e.remaining, b.ite(start, start_len, e.eff_rem));
  b.next(e.base, b.ite(start, start_addr, e.eff_addr));
  b.init(e.base, b.constant(aw, 0));
  b.init(e.remaining, b.constant(lw, 0));
  return e;
}

inline NodeId or_all(NetlistBuilder& b, std::initializer_list<NodeId> xs) {
  NodeId r = 0;
  for (auto x : xs) r = r ? b.or_(r, x) : x;
  return r;
}

}  // namespace detail

inline std::string generate_netlist(SocVariant variant, const SocParams& p) {
  detail::check_soc_params(p);
  const bool fixed = variant == SocVariant::Fixed;
  const bool hwpe = p.with_hwpe.value_or(variant != SocVariant::Vulnerable);
  const unsigned A = p.addr_width, D = p.data_width, L = p.len_width, T = p.timer_width;
  const unsigned M = hwpe ? 3 : 2;  // grant vector: bit0 core, bit1 dma, bit2 hwpe

  NetlistBuilder b;
  b.comment("toy MCU SoC, variant " + std::string(variant_name(variant)) + ": addr " + std::to_string(A) +
            " bits, data " + std::to_string(D) + " bits, length " + std::to_string(L) + " bits, timer " +
            std::to_string(T) + " bits" + (hwpe ? ", with HWPE" : ""));

  b.comment("primary inputs");
  NodeId issue = b.input("in.core_issue", 1);
  NodeId issue_addr = b.input("in.core_addr", A);
  NodeId dma_start = b.input("in.dma_start", 1);
  NodeId dma_addr_in = b.input("in.dma_addr", A);
  NodeId dma_len_in = b.input("in.dma_len", L);
  NodeId hwpe_start = 0, hwpe_addr_in = 0, hwpe_len_in = 0;
  if (hwpe) {
    hwpe_start = b.input("in.hwpe_start", 1);
    hwpe_addr_in = b.input("in.hwpe_addr", A);
    hwpe_len_in = b.input("in.hwpe_len", L);
  }
  NodeId timer_clear = b.input("in.timer_clear", 1);
  NodeId ld_we = b.input("in.ld_we", 1);
  NodeId ld_addr = b.input("in.ld_addr", A);
  NodeId ld_data = b.input("in.ld_data", D);
  NodeId ld_priv = fixed ? b.input("in.ld_priv", 1) : 0;

  b.comment("core stub: one outstanding request; address is core-internal state");
  NodeId pending = b.state("soc.core.pending", 1);
  NodeId core_addr = b.state("soc.core.addr", A);

  b.comment("shared crossbar registers");
  NodeId gnt = b.state("soc.xbar.gnt", M);
  NodeId req_valid = b.state("soc.xbar.req_valid", 1);
  NodeId req_addr = b.state("soc.xbar.req_addr", A);
  NodeId req_we = hwpe ? b.state("soc.xbar.req_we", 1) : 0;
  NodeId rsp_data = b.state("soc.xbar.rsp_data", D);
  NodeId gnt_dma = b.slice(gnt, 1, 1);
  NodeId gnt_hwpe = hwpe ? b.slice(gnt, 2, 2) : 0;

  NodeId priv_gnt = 0, priv_valid = 0, priv_addr = 0, priv_rsp = 0, priv_mem = 0;
  if (fixed) {
    b.comment("private crossbar: reachable by the core only");
    priv_gnt = b.state("soc.priv_xbar.gnt", 1);
    priv_valid = b.state("soc.priv_xbar.req_valid", 1);
    priv_addr = b.state("soc.priv_xbar.req_addr", A);
    priv_rsp = b.state("soc.priv_xbar.rsp_data", D);
  }

  b.comment("core request decode: the core wins arbitration, so a request is accepted when presented");
  NodeId pub_req = pending, priv_req = 0;
  if (fixed) {
    NodeId high = b.slice(core_addr, A - 1, A - 1);  // upper half is the private region
    pub_req = b.and_(pending, b.not_(high));
    priv_req = b.and_(pending, high);
  }
  b.next(pending, issue);
  b.next(core_addr, b.ite(issue, issue_addr, core_addr));

  b.comment("DMA engine (reads)");
  auto dma = detail::build_engine(b, "soc.dma", "addr", gnt_dma, dma_start, dma_addr_in, dma_len_in, A, L);
  NodeId dma_done = b.state("soc.dma.done", 1);
  b.next(dma_done, b.and_(gnt_dma, b.eq_const(dma.remaining, 1)));

  detail::Engine hw{};
  if (hwpe) {
    b.comment("HWPE engine (writes all-ones)");
    hw = detail::build_engine(b, "soc.hwpe", "ptr", gnt_hwpe, hwpe_start, hwpe_addr_in, hwpe_len_in, A, L);
  }

  b.comment("fixed-priority arbitration: core > dma > hwpe");
  NodeId g_core = pub_req;
  NodeId g_dma = b.and_(dma.req, b.not_(pub_req));
  NodeId g_hwpe = hwpe ? b.and_(hw.req, b.not_(b.or_(pub_req, dma.req))) : 0;
  NodeId grant_vec = b.concat(g_dma, g_core);
  if (hwpe) grant_vec = b.concat(g_hwpe, grant_vec);
  b.next(gnt, grant_vec);
  b.next(req_valid, hwpe ? detail::or_all(b, {g_core, g_dma, g_hwpe}) : b.or_(g_core, g_dma));
  NodeId addr_sel = hwpe ? b.ite(g_hwpe, hw.eff_addr, req_addr) : req_addr;
  b.next(req_addr, b.ite(g_core, core_addr, b.ite(g_dma, dma.eff_addr, addr_sel)));
  if (hwpe) b.next(req_we, g_hwpe);

  b.comment("shared memory");
  NodeId mem = b.state_array("soc.mem.data", A, D);
  b.next(rsp_data, b.ite(req_valid, b.read(mem, req_addr), rsp_data));
  NodeId mem1 = mem;
  if (hwpe)
    mem1 = b.ite(b.and_(req_valid, req_we), b.write(mem, req_addr, b.constant(D, width_mask(D))), mem);
  NodeId ld_pub = fixed ? b.and_(ld_we, b.not_(ld_priv)) : ld_we;
  b.next(mem, b.ite(ld_pub, b.write(mem1, ld_addr, ld_data), mem1));

  if (fixed) {
    b.comment("private memory");
    priv_mem = b.state_array("soc.priv_mem.data", A, D);
    b.next(priv_gnt, priv_req);
    b.next(priv_valid, priv_req);
    b.next(priv_addr, b.ite(priv_req, core_addr, priv_addr));
    b.next(priv_rsp, b.ite(priv_valid, b.read(priv_mem, priv_addr), priv_rsp));
    b.next(priv_mem, b.ite(b.and_(ld_we, ld_priv), b.write(priv_mem, ld_addr, ld_data), priv_mem));
  }

  b.comment("timer: starts counting on the DMA completion pulse");
  NodeId counter = b.state("soc.timer.counter", T);
  NodeId overflow = b.state("soc.timer.overflow", 1);
  NodeId running = b.ne_const(counter, 0);
  NodeId counted = b.ite(running, b.add(counter, b.constant(T, 1)), counter);
  b.next(counter, b.ite(timer_clear, b.constant(T, 0), b.ite(dma_done, b.constant(T, 1), counted)));
  b.next(overflow, b.ite(timer_clear, b.constant(1, 0), b.or_(overflow, b.eq_const(counter, width_mask(T)))));
  b.output(overflow, "soc.timer.irq");

  b.comment("reset values");
  for (NodeId s : {pending, req_valid, dma_done, overflow}) b.init(s, b.constant(1, 0));
  b.init(core_addr, b.constant(A, 0));
  b.init(gnt, b.constant(M, 0));
  b.init(req_addr, b.constant(A, 0));
  if (hwpe) b.init(req_we, b.constant(1, 0));
  b.init(rsp_data, b.constant(D, 0));
  b.init(counter, b.constant(T, 0));
  b.init(mem, b.const_array(A, D, 0));
  if (fixed) {
    for (NodeId s : {priv_gnt, priv_valid}) b.init(s, b.constant(1, 0));
    b.init(priv_addr, b.constant(A, 0));
    b.init(priv_rsp, b.constant(D, 0));
    b.init(priv_mem, b.const_array(A, D, 0));
  }
  return b.text();
}

inline json generate_config(SocVariant variant, const SocParams& p) {
  const bool fixed = variant == SocVariant::Fixed;
  const bool hwpe = p.with_hwpe.value_or(variant != SocVariant::Vulnerable);
  json c;
  c["description"] = "UPEC-SSC proof configuration for the " + std::string(variant_name(variant)) + " toy SoC";
  c["s_sys_patterns"] = {"soc.*", "!soc.core.*"};
  c["include_outputs"] = true;
  c["persistent_patterns"] = {"soc.timer.*", "soc.mem.*"};
  c["transient_patterns"] = {"soc.xbar.*", "soc.dma.*"};
  if (hwpe) c["transient_patterns"].push_back("soc.hwpe.*");
  if (fixed) {
    c["persistent_patterns"].push_back("soc.priv_mem.*");
    c["transient_patterns"].push_back("soc.priv_xbar.*");
  }
  c["input_equality_patterns"] = {"in.*"};
  c["victim_constraints"] = json::array();
  c["victim_constraints"].push_back({{"name", "victim_accesses_its_region"},
                                     {"signal", "soc.core.addr"},
                                     {"cmp", "uge"},
                                     {"value", std::uint64_t{1} << (p.addr_width - 1)},
                                     {"instance", "both"},
                                     {"when", {{"signal", "soc.core.pending"}, {"cmp", "eq"}, {"value", 1}}}});
  json inv = json::array();
  inv.push_back({{"name", "xbar_valid_has_grant"},
                 {"signal", "soc.xbar.gnt"},
                 {"cmp", "ne"},
                 {"value", 0},
                 {"when", {{"signal", "soc.xbar.req_valid"}, {"cmp", "eq"}, {"value", 1}}}});
  inv.push_back({{"name", "xbar_idle_has_no_grant"},
                 {"signal", "soc.xbar.gnt"},
                 {"cmp", "eq"},
                 {"value", 0},
                 {"when", {{"signal", "soc.xbar.req_valid"}, {"cmp", "eq"}, {"value", 0}}}});
  if (hwpe)
    inv.push_back({{"name", "xbar_write_is_valid"},
                   {"signal", "soc.xbar.req_valid"},
                   {"cmp", "eq"},
                   {"value", 1},
                   {"when", {{"signal", "soc.xbar.req_we"}, {"cmp", "eq"}, {"value", 1}}}});
  if (fixed)
    inv.push_back({{"name", "priv_xbar_grant_follows_valid"},
                   {"signal", "soc.priv_xbar.gnt"},
                   {"cmp", "eq"},
                   {"value", 1},
                   {"when", {{"signal", "soc.priv_xbar.req_valid"}, {"cmp", "eq"}, {"value", 1}}}});
  c["invariants"] = inv;
  c["solver"] = {{"conflict_budget", 10000000}};
  c["unrolled"] = {{"max_k", 16}, {"victim_window", "first"}};
  return c;
}

// Attack scripts. Victim accesses are injected by the demo driver at
// first_cycle + i * spacing for i < v.
inline json dma_timer_script(const SocParams& p) {
  const unsigned len = std::min<unsigned>(12, unsigned(width_mask(p.len_width)));
  json s;
  s["scenario"] = "dma_timer";
  s["description"] =
      "Attacker clears the timer and starts a DMA transfer whose completion starts the timer; the victim's "
      "memory accesses contend with the DMA on the crossbar; the attacker reads the timer afterwards.";
  s["cycles"] = 40;
  s["steps"] = json::array();
  s["steps"].push_back({{"cycle", 0}, {"inputs", {{"in.timer_clear", 1}}}});
  s["steps"].push_back({{"cycle", 1}, {"inputs", {{"in.dma_start", 1}, {"in.dma_addr", 0}, {"in.dma_len", len}}}});
  s["victim"] = {{"issue", "in.core_issue"},
                 {"addr_input", "in.core_addr"},
                 {"addr", std::uint64_t{1} << (p.addr_width - 1)},
                 {"first_cycle", 3},
                 {"spacing", 2},
                 {"max_accesses", 4}};
  s["observe"] = {{"kind", "value"}, {"signal", "soc.timer.counter"}};
  return s;
}

inline json hwpe_script(const SocParams& p) {
  const unsigned words = 1u << p.addr_width;
  const unsigned n = std::min<unsigned>({8, words / 2, unsigned(width_mask(p.len_width))});
  json s;
  s["scenario"] = "hwpe";
  s["description"] =
      "Attacker primes a memory region with zeros and starts the HWPE, which overwrites it with non-zero "
      "values; victim accesses stall the HWPE; the attacker counts overwritten cells at a fixed time.";
  json steps = json::array();
  for (unsigned i = 0; i < n; ++i)
    steps.push_back({{"cycle", i}, {"inputs", {{"in.ld_we", 1}, {"in.ld_addr", i}, {"in.ld_data", 0}}}});
  steps.push_back({{"cycle", n}, {"inputs", {{"in.hwpe_start", 1}, {"in.hwpe_addr", 0}, {"in.hwpe_len", n}}}});
  s["steps"] = steps;
  // Started at n, the engine presents beats at n+1..2n; the last write is
  // visible in the state two cycles later, which ends the window.
  s["cycles"] = 2 * n + 2;
  s["victim"] = {{"issue", "in.core_issue"},
                 {"addr_input", "in.core_addr"},
                 {"addr", std::uint64_t{1} << (p.addr_width - 1)},
                 {"first_cycle", n + 1},
                 {"spacing", 2},
                 {"max_accesses", std::min(4u, n)}};
  s["observe"] = {{"kind", "count_nonzero"}, {"signal", "soc.mem.data"}, {"first", 0}, {"count", n}};
  return s;
}

inline std::string bundle_readme(SocVariant variant, const SocParams& p) {
  const bool fixed = variant == SocVariant::Fixed;
  const bool hwpe = p.with_hwpe.value_or(variant != SocVariant::Vulnerable);
  std::string r;
  r += "# Toy SoC: " + std::string(variant_name(variant)) + "\n\n";
  r += "Generated by `upec_ssc generate " + std::string(variant_name(variant)) + "`.\n\n";
  r += "Parameters: " + std::to_string(1u << p.addr_width) + " memory words of " + std::to_string(p.data_width) +
       " bits, " + std::to_string(p.len_width) + "-bit transfer lengths, " + std::to_string(p.timer_width) +
       "-bit timer.\n\n";
  r += "## Components\n\n";
  r += "- `soc.core.*`: core stub that presents each issued request in the next cycle. Its address register is core-internal and\n"
       "  unconstrained at the start of a proof, which models timing that depends on the victim's secret.\n";
  r += "- `soc.xbar.*`: shared crossbar. Requests are arbitrated combinationally with fixed priority\n"
       "  core > DMA" + std::string(hwpe ? " > HWPE" : "") + " and latched in the grant and request registers.\n";
  r += "- `soc.dma.*`: DMA engine that reads a block of memory; its last accepted beat pulses `soc.dma.done`.\n";
  if (hwpe) r += "- `soc.hwpe.*`: accelerator that overwrites a block of memory with all-ones.\n";
  r += "- `soc.timer.*`: counter started by `soc.dma.done`; output `soc.timer.irq` is the overflow flag.\n";
  r += "- `soc.mem.data`: shared memory, also writable through the loader inputs `in.ld_*`.\n";
  if (fixed)
    r += "- `soc.priv_xbar.*`, `soc.priv_mem.data`: second crossbar and private memory. Core addresses in the\n"
         "  upper half of the address space go here; the DMA and HWPE cannot reach them.\n";
  r += "\n## Arbitration policy\n\n";
  r += "The core has the highest priority. A victim access presented while an engine is streaming takes the\n"
       "grant for one cycle, so the engine loses exactly one beat per victim access. With the engines above\n"
       "the core instead, victim accesses would be delayed but never delay the engines, and the attacker\n"
       "would observe nothing.\n";
  r += "\n## Classification\n\n";
  r += "- Persistent: timer registers and memories. They survive a context switch and can be read back.\n";
  r += "- Transient: crossbar buffers, which every transaction overwrites, and the DMA/HWPE progress\n"
       "  registers, which software cannot read in this model.\n";
  r += "\n## Victim constraint\n\n";
  r += "While the core has a request pending, its address lies in the upper half of the address space\n"
       "(the victim's data region). It applies to the first two cycles of each proof window.\n";
  r += "\n## Invariants\n\n";
  r += "Crossbar handshake invariants rule out start states with a valid request and no grant (or the\n"
       "reverse). Check them with `upec_ssc invariants`.\n";
  r += "\n## Attack scripts\n\n";
  r += "- `attack_dma_timer.json`: DMA/timer contention, observation is the final timer value.\n";
  if (hwpe) r += "- `attack_hwpe.json`: HWPE overwrite race, observation is the number of overwritten cells.\n";
  return r;
}

inline ModelBundle generate_soc(SocVariant variant, const SocParams& params = {}) {
  detail::check_soc_params(params);
  ModelBundle m;
  m.variant = variant;
  m.params = params;
  m.netlist_file = "soc_" + std::string(variant_name(variant)) + ".nl";
  m.netlist_text = generate_netlist(variant, params);
  m.config = generate_config(variant, params);
  m.attacks["dma_timer"] = dma_timer_script(params);
  if (params.with_hwpe.value_or(variant != SocVariant::Vulnerable)) m.attacks["hwpe"] = hwpe_script(params);
  m.readme = bundle_readme(variant, params);
  return m;
}

inline void write_bundle(const ModelBundle& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << text;
  };
  put(m.netlist_file, m.netlist_text);
  put("config.json", m.config.dump(2) + "\n");
  for (const auto& [name, script] : m.attacks) put("attack_" + name + ".json", script.dump(2) + "\n");
  put("README.md", m.readme);
}

}  // namespace upec
