// pgm-forge: batch front-end for the puzzle solvers and the Hamming decoder.
//
// Exit codes: 0 when every instance succeeded, 1 when any solve failed
// (contradiction, table cap, timeout, ambiguous result), 2 on input errors.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11/CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pgmforge/csp.hpp"
#include "pgmforge/errors.hpp"
#include "pgmforge/puzzles.hpp"

namespace {

using nlohmann::json;
using pgm::Clock;

constexpr int kExitOk = 0;
constexpr int kExitSolveFailure = 1;
constexpr int kExitInputError = 2;

struct Options {
  std::string kind = "sudoku9";
  std::string metric = "gravity";
  std::string mode = "max";
  std::optional<double> threshold_start;
  std::optional<double> threshold_step;
  std::size_t table_cap = std::size_t{1} << 24;
  bool enumerate = false;
  std::size_t cap = 1000;
  std::string format = "text";
  std::optional<double> timeout_s;
  unsigned workers = 1;
  std::optional<unsigned> seed;
  int colours = 0;
  std::vector<std::string> inputs;
  // decode-hamming
  std::string received;
  double flip_prob = 0.1;
  std::string decode_mode = "sum";
};

struct Instance {
  std::string source;
  std::string text;
};

struct Outcome {
  json record;
  int exit_code = kExitOk;
};

bool is_input_error(pgm::ErrorCode code) {
  return code == pgm::ErrorCode::ParseError || code == pgm::ErrorCode::MalformedSpec ||
         code == pgm::ErrorCode::InconsistentClue;
}

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string read_source(const std::string& path) {
  if (path == "-") return read_all(std::cin);
  std::ifstream in(path);
  if (!in) pgm::fail(pgm::ErrorCode::ParseError, "cannot read '" + path + "'");
  return read_all(in);
}

std::vector<Instance> load_instances(pgm::PuzzleKind kind, const std::vector<std::string>& paths) {
  std::vector<Instance> out;
  const auto sources = paths.empty() ? std::vector<std::string>{"-"} : paths;
  for (const auto& path : sources) {
    const auto text = read_source(path);
    switch (kind) {
      case pgm::PuzzleKind::Sudoku4:
      case pgm::PuzzleKind::Sudoku9: {
        std::istringstream lines(text);
        std::string line;
        int no = 0;
        while (std::getline(lines, line)) {
          ++no;
          const auto first = line.find_first_not_of(" \t\r");
          if (first == std::string::npos || line[first] == '#') continue;
          out.push_back({path + ":" + std::to_string(no), line});
        }
        break;
      }
      case pgm::PuzzleKind::GraphColouring:
        out.push_back({path, text});
        break;
      default: {
        // One JSON document, a JSON array of documents, or JSON lines.
        try {
          const auto doc = json::parse(text);
          if (doc.is_array()) {
            for (std::size_t i = 0; i < doc.size(); ++i)
              out.push_back({path + "[" + std::to_string(i) + "]", doc[i].dump()});
          } else {
            out.push_back({path, text});
          }
        } catch (const json::parse_error&) {
          std::istringstream lines(text);
          std::string line;
          int no = 0;
          while (std::getline(lines, line)) {
            ++no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out.push_back({path + ":" + std::to_string(no), line});
          }
        }
      }
    }
  }
  return out;
}

template <typename Fn>
std::vector<Outcome> run_pool(std::size_t n, unsigned workers, Fn&& fn) {
  std::vector<Outcome> results(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) results[i] = fn(i);
  };
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

std::optional<Clock::time_point> deadline_for(const std::optional<double>& seconds) {
  if (!seconds) return std::nullopt;
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(*seconds));
}

pgm::PurgeMergeConfig solver_config(const Options& opt) {
  pgm::PurgeMergeConfig cfg;
  cfg.metric = pgm::parse_metric(opt.metric);
  cfg.threshold_start = opt.threshold_start;
  cfg.threshold_step = opt.threshold_step;
  cfg.table_cap = opt.table_cap;
  cfg.enumeration_cap = opt.cap;
  cfg.deadline = deadline_for(opt.timeout_s);
  return cfg;
}

std::string grid_text(const pgm::PuzzleSpec& spec, const std::vector<int>& values) {
  std::string out;
  const bool digits = spec.kind == pgm::PuzzleKind::Sudoku4 || spec.kind == pgm::PuzzleKind::Sudoku9;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!digits && i > 0) out.push_back(',');
    if (spec.kind == pgm::PuzzleKind::GraphColouring) out += spec.nodes[i] + "=";
    out += values[i] < 0 ? "." : std::to_string(values[i]);
  }
  return out;
}

Outcome solve_instance(pgm::PuzzleKind kind, const Instance& inst, std::size_t index, const Options& opt) {
  Outcome out;
  auto& rec = out.record;
  rec = {{"instance", index}, {"source", inst.source}, {"kind", pgm::to_string(kind)}};
  pgm::PuzzleSpec spec;
  try {
    spec = pgm::parse(kind, inst.text, opt.colours);
  } catch (const pgm::Error& e) {
    rec["status"] = "input_error";
    rec["error"] = pgm::to_string(e.code());
    rec["message"] = e.what();
    out.exit_code = kExitInputError;
    return out;
  }
  auto model = pgm::build_factors(spec);
  if (opt.seed) {
    std::mt19937 rng(*opt.seed + static_cast<unsigned>(index));
    std::shuffle(model.factors.begin(), model.factors.end(), rng);
  }
  const auto started = Clock::now();
  try {
    const auto result = pgm::purge_and_merge(model.factors, solver_config(opt));
    std::optional<pgm::Enumeration> listing;
    if (opt.enumerate) listing = pgm::enumerate_solutions(result, opt.cap);
    rec.update(pgm::solve_result_to_json(result, &model.registry, listing ? &*listing : nullptr));
    rec["log2_max_table_entries"] =
        result.stats.max_table_entries > 0 ? std::log2(static_cast<double>(result.stats.max_table_entries)) : 0.0;
    const bool unique = result.residual_factors.empty();
    if (listing) {
      bool all_valid = true;
      for (const auto& s : listing->solutions)
        all_valid = all_valid && pgm::verify_solution(spec, pgm::to_values(model, s));
      rec["solution_count"] = listing->solutions.size();
      rec["verified"] = all_valid;
      const bool complete = !listing->truncated && all_valid;
      rec["status"] = complete ? "enumerated" : (listing->truncated ? "truncated" : "invalid");
      if (!complete) out.exit_code = kExitSolveFailure;
      if (listing->solutions.size() == 1) rec["grid"] = grid_text(spec, pgm::to_values(model, listing->solutions[0]));
    } else if (unique) {
      const auto values = pgm::to_values(model, result.solved);
      const bool ok = pgm::verify_solution(spec, values);
      rec["grid"] = grid_text(spec, values);
      rec["verified"] = ok;
      rec["status"] = ok ? "solved" : "invalid";
      if (!ok) out.exit_code = kExitSolveFailure;
    } else if (kind == pgm::PuzzleKind::GraphColouring) {
      // Any proper colouring answers the question; report the first one.
      const auto first = pgm::enumerate_solutions(result, 1);
      const auto values = first.solutions.empty() ? std::vector<int>{} : pgm::to_values(model, first.solutions[0]);
      const bool ok = !values.empty() && pgm::verify_solution(spec, values);
      if (!values.empty()) rec["grid"] = grid_text(spec, values);
      rec["verified"] = ok;
      rec["status"] = ok ? "solved" : "invalid";
      if (!ok) out.exit_code = kExitSolveFailure;
    } else {
      rec["status"] = "ambiguous";
      out.exit_code = kExitSolveFailure;
    }
  } catch (const pgm::Error& e) {
    rec["status"] = "failed";
    rec["error"] = pgm::to_string(e.code());
    rec["message"] = e.what();
    rec["runtime_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
    out.exit_code = is_input_error(e.code()) ? kExitInputError : kExitSolveFailure;
  }
  return out;
}

json aggregate(const std::vector<Outcome>& outcomes) {
  std::size_t solved = 0;
  std::vector<double> runtimes;
  std::map<int, std::size_t> histogram;
  for (const auto& o : outcomes) {
    const auto& r = o.record;
    if (o.exit_code == kExitOk) ++solved;
    if (r.contains("runtime_ms")) runtimes.push_back(r["runtime_ms"].get<double>());
    if (r.contains("log2_max_table_entries"))
      ++histogram[static_cast<int>(std::floor(r["log2_max_table_entries"].get<double>()))];
  }
  double median = 0.0;
  if (!runtimes.empty()) {
    std::ranges::sort(runtimes);
    const auto m = runtimes.size() / 2;
    median = runtimes.size() % 2 ? runtimes[m] : 0.5 * (runtimes[m - 1] + runtimes[m]);
  }
  json hist = json::object();
  for (const auto& [bucket, count] : histogram) hist[std::to_string(bucket)] = count;
  return {{"schema_version", 1},
          {"instances", outcomes.size()},
          {"solved", solved},
          {"median_runtime_ms", median},
          {"log2_max_table_histogram", hist}};
}

int finish(const std::vector<Outcome>& outcomes, const Options& opt,
           const std::function<void(const json&)>& print_text) {
  int code = kExitOk;
  for (const auto& o : outcomes) code = std::max(code, o.exit_code);
  const auto summary = aggregate(outcomes);
  if (opt.format == "json") {
    for (const auto& o : outcomes) std::cout << o.record.dump() << "\n";
    std::cout << json{{"aggregate", summary}}.dump() << "\n";
  } else {
    for (const auto& o : outcomes) print_text(o.record);
    std::cout << "solved " << summary["solved"].get<std::size_t>() << "/" << outcomes.size()
              << ", median runtime " << summary["median_runtime_ms"].get<double>() << " ms\n";
  }
  return code;
}

void print_solve_text(const json& r) {
  std::cout << "[" << r["instance"].get<std::size_t>() << "] " << r["source"].get<std::string>() << "  "
            << r.value("status", std::string("?"));
  if (r.contains("error")) std::cout << " (" << r.value("message", "") << ")";
  if (r.contains("rounds"))
    std::cout << "  rounds=" << r["rounds"] << " max_table=" << r["max_table_entries"] << " runtime="
              << r["runtime_ms"].get<double>() << "ms";
  if (r.contains("solution_count")) std::cout << " solutions=" << r["solution_count"];
  std::cout << "\n";
  if (r.contains("grid")) std::cout << "    " << r["grid"].get<std::string>() << "\n";
}

int cmd_solve(const Options& opt, pgm::PuzzleKind kind) {
  std::vector<Instance> instances;
  try {
    instances = load_instances(kind, opt.inputs);
    pgm::parse_metric(opt.metric);
  } catch (const pgm::Error& e) {
    spdlog::error("{}", e.what());
    return kExitInputError;
  }
  if (opt.mode != "max") spdlog::warn("the solver purges in max mode; --mode {} is ignored", opt.mode);
  const auto outcomes = run_pool(instances.size(), opt.workers, [&](std::size_t i) {
    return solve_instance(kind, instances[i], i, opt);
  });
  return finish(outcomes, opt, print_solve_text);
}

json decode_record(const pgm::PuzzleSpec& spec, const Options& opt) {
  pgm::ConvergenceConfig cfg;
  cfg.deadline = deadline_for(opt.timeout_s);
  cfg.mode = opt.decode_mode == "max" ? pgm::NormMode::Max : pgm::NormMode::Sum;
  const auto bp = pgm::decode_hamming(spec, cfg);
  const auto exact = pgm::hamming_exact(spec);
  return {{"received", spec.received},
          {"flip_prob", spec.flip_prob},
          {"message", bp.message},
          {"codeword", bp.codeword},
          {"confidence", bp.confidence},
          {"p_one", bp.p_one},
          {"updates", bp.stats.updates},
          {"converged", bp.stats.converged},
          {"exact_codeword", exact.codeword},
          {"exact_confidence", exact.confidence}};
}

int cmd_decode(const Options& opt) {
  std::vector<std::pair<std::string, std::string>> docs;
  try {
    if (!opt.received.empty()) {
      docs.emplace_back("argv", json{{"received", opt.received}, {"flip_prob", opt.flip_prob}}.dump());
    } else {
      for (const auto& inst : load_instances(pgm::PuzzleKind::Hamming74, opt.inputs))
        docs.emplace_back(inst.source, inst.text);
    }
  } catch (const pgm::Error& e) {
    spdlog::error("{}", e.what());
    return kExitInputError;
  }
  const auto outcomes = run_pool(docs.size(), opt.workers, [&](std::size_t i) {
    Outcome out;
    out.record = {{"instance", i}, {"source", docs[i].first}};
    try {
      const auto spec = pgm::parse(pgm::PuzzleKind::Hamming74, docs[i].second);
      out.record.update(decode_record(spec, opt));
      out.record["status"] = "decoded";
    } catch (const pgm::Error& e) {
      out.record["status"] = "failed";
      out.record["error"] = pgm::to_string(e.code());
      out.record["message"] = e.what();
      out.exit_code = is_input_error(e.code()) ? kExitInputError : kExitSolveFailure;
    }
    return out;
  });
  return finish(outcomes, opt, [](const json& r) {
    if (r["status"] != "decoded") {
      std::cout << r["source"].get<std::string>() << ": " << r.value("message", "") << "\n";
      return;
    }
    std::cout << "received " << r["received"].get<std::string>() << " -> message "
              << r["message"].get<std::string>() << " (codeword " << r["codeword"].get<std::string>() << ")\n";
    const auto conf = r["confidence"];
    for (std::size_t i = 0; i < conf.size(); ++i)
      std::cout << "  b" << i + 1 << " confidence " << conf[i].get<double>() << "\n";
  });
}

int cmd_compare(const Options& opt, pgm::PuzzleKind kind) {
  std::vector<Instance> instances;
  try {
    instances = load_instances(kind, opt.inputs);
  } catch (const pgm::Error& e) {
    spdlog::error("{}", e.what());
    return kExitInputError;
  }
  const double per_run = opt.timeout_s.value_or(10.0);
  const auto outcomes = run_pool(instances.size(), opt.workers, [&](std::size_t i) {
    Outcome out;
    auto& rec = out.record;
    rec = {{"instance", i}, {"source", instances[i].source}};
    pgm::PuzzleSpec spec;
    try {
      spec = pgm::parse(kind, instances[i].text, opt.colours);
    } catch (const pgm::Error& e) {
      rec["status"] = "input_error";
      rec["message"] = e.what();
      out.exit_code = kExitInputError;
      return out;
    }
    const auto model = pgm::build_factors(spec);
    for (auto [name, topology] : {std::pair{"bethe", pgm::Topology::Bethe}, std::pair{"ltrip", pgm::Topology::Ltrip}}) {
      const auto r = pgm::purge_once(model.factors, topology);
      rec[name] = {{"solved", r.solved},
                   {"contradiction", r.contradiction},
                   {"open_variables", r.open_variables},
                   {"updates", r.stats.updates},
                   {"converged", r.stats.converged}};
    }
    json metrics = json::object();
    for (const char* metric : {"gravity", "entropy", "overlap"}) {
      Options run_opt = opt;
      run_opt.metric = metric;
      run_opt.timeout_s = per_run;
      auto cfg = solver_config(run_opt);
      try {
        const auto result = pgm::purge_and_merge(model.factors, cfg);
        metrics[metric] = {{"status", result.residual_factors.empty() ? "solved" : "tree"},
                           {"max_table_entries", result.stats.max_table_entries},
                           {"runtime_ms", result.stats.runtime_ms}};
      } catch (const pgm::Error& e) {
        metrics[metric] = {{"status", pgm::to_string(e.code())}};
      }
    }
    rec["metrics"] = metrics;
    rec["status"] = "compared";
    return out;
  });

  std::size_t bethe = 0, ltrip = 0, both_sizes = 0, gravity_not_larger = 0;
  bool containment = true;
  for (const auto& o : outcomes) {
    const auto& r = o.record;
    if (r["status"] != "compared") continue;
    const bool b = r["bethe"]["solved"].get<bool>();
    const bool l = r["ltrip"]["solved"].get<bool>();
    bethe += b;
    ltrip += l;
    if (b && !l) containment = false;
    const auto& g = r["metrics"]["gravity"];
    const auto& e = r["metrics"]["entropy"];
    if (g.contains("max_table_entries") && e.contains("max_table_entries")) {
      ++both_sizes;
      if (g["max_table_entries"].get<std::size_t>() <= e["max_table_entries"].get<std::size_t>()) ++gravity_not_larger;
    }
  }
  int code = kExitOk;
  for (const auto& o : outcomes) code = std::max(code, o.exit_code);
  const json summary{{"schema_version", 1},
                     {"instances", outcomes.size()},
                     {"bethe_solved", bethe},
                     {"ltrip_solved", ltrip},
                     {"bethe_subset_of_ltrip", containment},
                     {"metric_pairs", both_sizes},
                     {"gravity_not_larger_than_entropy", gravity_not_larger}};
  if (opt.format == "json") {
    for (const auto& o : outcomes) std::cout << o.record.dump() << "\n";
    std::cout << json{{"aggregate", summary}}.dump() << "\n";
  } else {
    for (const auto& o : outcomes) {
      const auto& r = o.record;
      std::cout << "[" << r["instance"] << "] " << r["source"].get<std::string>();
      if (r["status"] != "compared") {
        std::cout << "  " << r.value("message", "") << "\n";
        continue;
      }
      std::cout << "  bethe=" << (r["bethe"]["solved"].get<bool>() ? "solved" : "open")
                << " ltrip=" << (r["ltrip"]["solved"].get<bool>() ? "solved" : "open");
      for (const auto& [name, m] : r["metrics"].items()) {
        std::cout << "  " << name << "=";
        if (m.contains("max_table_entries"))
          std::cout << m["max_table_entries"];
        else
          std::cout << m["status"].get<std::string>();
      }
      std::cout << "\n";
    }
    std::cout << "bethe solved " << bethe << ", ltrip solved " << ltrip << ", containment "
              << (containment ? "holds" : "violated") << ", gravity <= entropy in " << gravity_not_larger << "/"
              << both_sizes << "\n";
  }
  return code;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("pgm-forge");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("PGM_FORGE_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Sparse-factor graphical models: puzzle solving by purge-and-merge and Hamming decoding"};
  app.require_subcommand(1);
  Options opt;

  auto add_solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--metric", opt.metric, "Factor clustering metric")
        ->check(CLI::IsMember({"overlap", "entropy", "gravity"}));
    cmd->add_option("--mode", opt.mode, "Normalisation mode")->check(CLI::IsMember({"max", "sum"}));
    cmd->add_option("--threshold-start", opt.threshold_start, "First entropy budget (bits)");
    cmd->add_option("--threshold-step", opt.threshold_step, "Budget increase per round (bits)");
    cmd->add_option("--table-cap", opt.table_cap, "Largest merged table (entries)");
    cmd->add_flag("--enumerate", opt.enumerate, "List every solution");
    cmd->add_option("--cap", opt.cap, "Most solutions to list");
    cmd->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--timeout-s", opt.timeout_s, "Per-instance time limit (seconds)");
    cmd->add_option("--workers", opt.workers, "Instances solved in parallel")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opt.seed, "Shuffle factor order with this seed");
    cmd->add_option("inputs", opt.inputs, "Input files ('-' for stdin)");
  };

  auto* solve = app.add_subcommand("solve", "Solve puzzles");
  solve->add_option("--kind", opt.kind, "Puzzle kind")->required();
  solve->add_option("--colours,--colors", opt.colours, "Colour count for graph colouring");
  add_solver_flags(solve);

  auto* color = app.add_subcommand("color", "Colour a graph given as an edge list");
  color->add_option("--colours,--colors", opt.colours, "Number of colours");
  add_solver_flags(color);

  auto* compare = app.add_subcommand("compare", "Compare Bethe and LTRIP purging and the clustering metrics");
  compare->add_option("--kind", opt.kind, "Puzzle kind");
  compare->add_option("--colours,--colors", opt.colours, "Colour count for graph colouring");
  add_solver_flags(compare);

  auto* decode = app.add_subcommand("decode-hamming", "Decode a Hamming(7,4) word by loopy belief update");
  decode->add_option("--received", opt.received, "Seven received bits");
  decode->add_option("--flip-prob", opt.flip_prob, "Channel bit-flip probability");
  decode->add_option("--mode", opt.decode_mode, "Normalisation mode (max gives max-marginal confidences)")->check(CLI::IsMember({"max", "sum"}));
  decode->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  decode->add_option("--timeout-s", opt.timeout_s, "Time limit (seconds)");
  decode->add_option("--workers", opt.workers, "Instances decoded in parallel");
  decode->add_option("inputs", opt.inputs, "JSON files with received bits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*decode) return cmd_decode(opt);
    if (*color) return cmd_solve(opt, pgm::PuzzleKind::GraphColouring);
    const auto kind = pgm::parse_kind(opt.kind);
    if (*compare) return cmd_compare(opt, kind);
    return cmd_solve(opt, kind);
  } catch (const pgm::Error& e) {
    spdlog::error("{}", e.what());
    return is_input_error(e.code()) ? kExitInputError : kExitSolveFailure;
  }
}
