#include "cli.hpp"

#include <cstdio>
#include <future>
#include <optional>
#include <stdexcept>
#include <utility>

#include "CLI11.hpp"
#include "edmm/config.hpp"
#include "edmm/cost_model.hpp"
#include "edmm/error.hpp"
#include "edmm/generators.hpp"
#include "edmm/replay.hpp"
#include "edmm/trace.hpp"

namespace edmm::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Anything the library rejects as an invalid argument while we are still
// interpreting flags is the caller's mistake, not a simulation failure.
template <typename F>
auto as_usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SimError& e) {
    if (e.kind() == ErrorKind::kInvalidArgument) throw UsageError(e.what());
    throw;
  }
}

PageCount size_flag_pages(const std::string& value, const std::string& flag) {
  try {
    return bytes_to_pages(parse_size_bytes(value));
  } catch (const SimError&) {
    throw UsageError(flag + ": bad size '" + value + "' (bytes, optional K/M/G suffix)");
  }
}

struct GeneratorOptions {
  std::string kind;
  std::uint64_t seed = 1;
  std::string pool;
  ChurnParams churn;
  ServerParams server;
  LinearParams linear;

  std::vector<CLI::Option*> shared;
  std::vector<std::pair<std::string, CLI::Option*>> specific;

  bool any_given() const {
    for (auto* o : shared) {
      if (o->count()) return true;
    }
    for (const auto& [kind, o] : specific) {
      if (o->count()) return true;
    }
    return false;
  }
};

void add_generator_options(CLI::App* cmd, GeneratorOptions& g) {
  g.shared.push_back(cmd->add_option("--seed", g.seed, "generator seed")->capture_default_str());
  g.shared.push_back(
      cmd->add_option("--pool", g.pool, "pool size in bytes, K/M/G suffix (default: sized to fit)"));
  auto specific = [&](const char* kind, CLI::Option* o) { g.specific.emplace_back(kind, o); };
  specific("churn", cmd->add_option("--iters", g.churn.n_iters, "churn: iterations")
                        ->capture_default_str());
  specific("churn", cmd->add_option("--tree-pages", g.churn.tree_pages, "churn: largest tree")
                        ->capture_default_str());
  specific("churn", cmd->add_option("--live-sets", g.churn.live_sets, "churn: trees kept live")
                        ->capture_default_str());
  specific("server", cmd->add_option("--requests", g.server.n_requests, "server: request count")
                         ->capture_default_str());
  specific("server",
           cmd->add_option("--working-set-pages", g.server.working_set_pages, "server: slab pages")
               ->capture_default_str());
  specific("server", cmd->add_option("--churn-period", g.server.churn_period,
                                     "server: requests per scratch mapping")
                         ->capture_default_str());
  specific("linear", cmd->add_option("--pages", g.linear.total_pages, "linear: mapped pages")
                         ->capture_default_str());
  specific("linear", cmd->add_option("--touch", g.linear.touch_fraction,
                                     "linear: fraction of mapped pages touched, in (0, 1]")
                         ->capture_default_str());
}

Trace generate(GeneratorOptions& g) {
  for (const auto& [kind, o] : g.specific) {
    if (o->count() && kind != g.kind) {
      throw UsageError(o->get_name() + " does not apply to generator '" + g.kind + "'");
    }
  }
  const PageCount pool = g.pool.empty() ? 0 : size_flag_pages(g.pool, "--pool");
  auto positive = [](std::uint64_t v, const char* flag) {
    if (v == 0) throw UsageError(std::string(flag) + " must be >= 1");
  };
  return as_usage([&] {
    if (g.kind == "churn") {
      positive(g.churn.n_iters, "--iters");
      positive(g.churn.tree_pages, "--tree-pages");
      positive(g.churn.live_sets, "--live-sets");
      g.churn.seed = g.seed;
      g.churn.pool_pages = pool;
      return gen_churn(g.churn);
    }
    if (g.kind == "server") {
      positive(g.server.n_requests, "--requests");
      positive(g.server.working_set_pages, "--working-set-pages");
      positive(g.server.churn_period, "--churn-period");
      g.server.seed = g.seed;
      g.server.pool_pages = pool;
      return gen_server(g.server);
    }
    positive(g.linear.total_pages, "--pages");
    if (!(g.linear.touch_fraction > 0.0 && g.linear.touch_fraction <= 1.0)) {
      throw UsageError("--touch must be in (0, 1]");
    }
    g.linear.seed = g.seed;
    g.linear.pool_pages = pool;
    return gen_linear(g.linear);
  });
}

struct GenCommand {
  GeneratorOptions gen;
  std::string out_path;
};

int cmd_gen(GenCommand& cmd, std::ostream& out) {
  const Trace trace = generate(cmd.gen);
  if (cmd.out_path.empty() || cmd.out_path == "-") {
    out << serialize_trace(trace);
  } else {
    save_trace(trace, cmd.out_path);
  }
  return kExitOk;
}

struct ReportCommand {
  std::string trace_path;
  GeneratorOptions gen;

  std::vector<std::string> labels;
  std::string mode;
  std::string prealloc;
  bool batch = false;
  std::uint64_t demand_n = 0;
  std::string lf;
  std::vector<CLI::Option*> flag_form;

  std::string binary = "0";
  std::uint32_t enclave_threads = 1;
  std::string costs_path;
  std::string format = "csv";
  std::string baseline;
};

void add_report_options(CLI::App* cmd, ReportCommand& r, bool compare) {
  auto* trace = cmd->add_option("--trace", r.trace_path, "trace file to replay");
  auto* gen = cmd->add_option("--gen", r.gen.kind, "generate the trace instead: churn|server|linear")
                  ->check(CLI::IsMember({"churn", "server", "linear"}));
  trace->excludes(gen);
  add_generator_options(cmd, r.gen);

  auto* strategy = cmd->add_option("--strategy,-s", r.labels,
                                   "strategy label, repeatable (e.g. edmm+pre=64M+batch+lf=15)");
  r.flag_form = {
      cmd->add_option("--mode", r.mode, "static|edmm|edmm-demand")
          ->check(CLI::IsMember({"static", "edmm", "edmm-demand"})),
      cmd->add_option("--prealloc", r.prealloc, "pages added at load, in bytes (K/M/G)"),
      cmd->add_flag("--batch", r.batch, "allocate each mmap with one batched EAUG round trip"),
      cmd->add_option("--demand-n", r.demand_n, "demand mode, up to N pages per fault"),
      cmd->add_option("--lf", r.lf, "lazy-free cache threshold, percent of pool"),
  };
  for (auto* o : r.flag_form) strategy->excludes(o);

  cmd->add_option("--binary", r.binary, "enclave binary size in bytes (K/M/G)")->capture_default_str();
  cmd->add_option("--enclave-threads", r.enclave_threads, "threads inside the enclave (IPIs per removal)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--costs", r.costs_path, "cost parameter file (name = microseconds per line)");
  cmd->add_option("--format", r.format, "csv|table")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "table"}));
  if (compare) {
    cmd->add_option("--baseline", r.baseline, "strategy the deltas are relative to (default: first)");
  }
}

// Flag-form strategies are spelled as a label so both forms share one
// parser and one set of rules.
std::string flags_to_label(const ReportCommand& r) {
  std::string label = r.mode.empty() ? "edmm" : r.mode == "edmm-demand" ? "edmm+demand" : r.mode;
  if (r.demand_n != 0) {
    if (r.mode == "static") throw UsageError("--demand-n does not apply to --mode static");
    if (r.mode != "edmm-demand") label += "+demand";
    label += "=" + std::to_string(r.demand_n);
  } else if (r.flag_form[3]->count()) {
    throw UsageError("--demand-n must be >= 1");
  }
  if (!r.prealloc.empty()) label += "+pre=" + r.prealloc;
  if (r.batch) label += "+batch";
  if (!r.lf.empty()) label += "+lf=" + r.lf;
  return label;
}

std::vector<StrategyConfig> build_configs(const ReportCommand& r, PageCount pool) {
  std::vector<std::string> labels = r.labels;
  if (labels.empty()) labels.push_back(flags_to_label(r));
  const PageCount binary = size_flag_pages(r.binary, "--binary");

  std::vector<StrategyConfig> configs;
  for (const std::string& label : labels) {
    StrategyConfig c = as_usage([&] { return parse_strategy_label(label); });
    c.binary_pages = binary;
    c.enclave_threads = r.enclave_threads;
    as_usage([&] {
      c.validate(pool);
      return 0;
    });
    configs.push_back(c);
  }
  return configs;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string delta_pct(double v, double base) {
  if (base == 0.0) return v == 0.0 ? "0.00" : "inf";
  return fixed((v - base) / base * 100.0, 2);
}

using Table = std::vector<std::vector<std::string>>;

void print_table(const Table& t, const std::string& format, std::ostream& out) {
  if (format == "csv") {
    for (const auto& row : t) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
    return;
  }
  std::vector<std::size_t> width(t.front().size(), 0);
  for (const auto& row : t) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  for (const auto& row : t) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string pad(width[i] - row[i].size(), ' ');
      if (i == 0) {
        line += row[i] + pad;
      } else {
        line += "  " + pad + row[i];
      }
    }
    out << line << '\n';
  }
}

int cmd_report(ReportCommand& r, bool compare, std::ostream& out, std::ostream& err) {
  if (r.trace_path.empty() && r.gen.kind.empty()) throw UsageError("one of --trace or --gen is required");
  if (!r.trace_path.empty() && r.gen.any_given()) {
    throw UsageError("generator options need --gen, not --trace");
  }
  const Trace trace = r.trace_path.empty() ? generate(r.gen) : load_trace(r.trace_path);
  const CostParams params = r.costs_path.empty() ? default_params() : load_cost_params(r.costs_path);
  const std::vector<StrategyConfig> configs = build_configs(r, trace.header.pool_size);

  std::size_t baseline = 0;
  if (compare) {
    if (configs.size() < 2) throw UsageError("compare needs at least two --strategy values");
    if (!r.baseline.empty()) {
      const std::string want = strategy_label(as_usage([&] { return parse_strategy_label(r.baseline); }));
      baseline = configs.size();
      for (std::size_t i = 0; i < configs.size() && baseline == configs.size(); ++i) {
        if (strategy_label(configs[i]) == want) baseline = i;
      }
      if (baseline == configs.size()) throw UsageError("--baseline " + want + " is not among the strategies");
    }
  }

  // Each cell owns its Manager; results are collected in request order.
  std::vector<std::future<ReplayResult>> cells;
  cells.reserve(configs.size());
  for (const StrategyConfig& c : configs) {
    cells.push_back(std::async(std::launch::async, [&trace, &params, c] { return replay(trace, c, params); }));
  }
  std::vector<std::optional<ReplayResult>> results;
  bool failed = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      results.emplace_back(cells[i].get());
    } catch (const SimError& e) {
      err << "edmm-sim: " << strategy_label(configs[i]) << ": " << error_kind_name(e.kind()) << ": "
          << e.what() << '\n';
      results.emplace_back();
      failed = true;
    }
  }
  if (compare && !results[baseline]) {
    err << "edmm-sim: baseline " << strategy_label(configs[baseline]) << " failed; no deltas\n";
    return kExitFailure;
  }

  Table table;
  table.push_back({"strategy", "load_us", "exec_us", "pf", "aex", "eenter", "eexit", "eaug", "eaccept",
                   "eremove", "crossings", "peak_mapped", "reused", "posix_warnings"});
  if (compare) {
    table.front().push_back("exec_delta_pct");
    table.front().push_back("load_delta_pct");
  }
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!results[i]) continue;
    const ReplayResult& res = *results[i];
    const Counters& c = res.report.counters;
    auto n = [](std::uint64_t v) { return std::to_string(v); };
    std::vector<std::string> row = {
        strategy_label(configs[i]),
        fixed(res.time.load_time_us, 3),
        fixed(res.time.exec_time_us, 3),
        n(c.get(EventKind::kPageFault)),
        n(c.get(EventKind::kAex)),
        n(c.get(EventKind::kEenter)),
        n(c.get(EventKind::kEexit)),
        n(c.get(EventKind::kEaug)),
        n(c.get(EventKind::kEaccept)),
        n(c.get(EventKind::kEremove)),
        n(c.crossings()),
        n(res.report.peak_mapped),
        n(c.reused_cached_pages),
        n(c.posix_warnings),
    };
    if (compare) {
      const TimeReport& base = results[baseline]->time;
      row.push_back(delta_pct(res.time.exec_time_us, base.exec_time_us));
      row.push_back(delta_pct(res.time.load_time_us, base.load_time_us));
    }
    table.push_back(std::move(row));
  }
  print_table(table, r.format, out);
  return failed ? kExitFailure : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trace-driven simulator of enclave dynamic memory management strategies", "edmm-sim"};
  app.require_subcommand(1, 1);

  GenCommand gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic trace");
  gen_cmd->add_option("generator", gen.gen.kind, "churn|server|linear")
      ->required()
      ->check(CLI::IsMember({"churn", "server", "linear"}));
  add_generator_options(gen_cmd, gen.gen);
  gen_cmd->add_option("--out,-o", gen.out_path, "output path (default: standard output)");

  ReportCommand run;
  auto* run_cmd = app.add_subcommand("run", "replay a trace under one or more strategies");
  add_report_options(run_cmd, run, false);

  ReportCommand cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "replay a trace under a strategy grid with deltas");
  add_report_options(cmp_cmd, cmp, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*run_cmd) return cmd_report(run, false, out, err);
    return cmd_report(cmp, true, out, err);
  } catch (const UsageError& e) {
    err << "edmm-sim: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SimError& e) {
    err << "edmm-sim: " << error_kind_name(e.kind()) << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace edmm::cli
