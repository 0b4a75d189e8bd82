// streamalg command-line driver: run examples on traces, execute law and
// equivalence suites, optimize serialized pipeline terms, and simulate the
// TCP model. Reports go to stdout as JSON; traces and terms go to files.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "streamalg/cli.hpp"

namespace {

using namespace streamalg;

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("STREAMALG_SEED")) return std::strtoull(env, nullptr, 10);
  return 42;
}

int finish(const cli::CommandResult& result) {
  std::cout << result.report.dump(2) << "\n";
  return result.exit_code;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& line : lines) out << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stream processors as monoid homomorphisms with state"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::optional<std::uint64_t> seed_flag;
  app.add_option("--seed", seed_flag, "64-bit seed (default: STREAMALG_SEED or 42)");

  // run
  auto* run_cmd = app.add_subcommand("run", "stream a trace through a named example");
  std::string example, chunking = "whole", out_path = "trace.out.jsonl";
  std::optional<std::string> trace_path, inline_json;
  std::vector<std::size_t> sizes;
  run_cmd->add_option("--example", example, "registered example name")->required();
  run_cmd->add_option("--input", trace_path, "JSON-lines trace file");
  run_cmd->add_option("--inline", inline_json, "inline JSON array of chunks");
  run_cmd->add_option("--chunking", chunking, "whole | per-generator | sizes");
  run_cmd->add_option("--sizes", sizes, "chunk sizes for --chunking sizes");
  run_cmd->add_option("--out", out_path, "output trace file (JSON lines)");

  // laws
  auto* laws_cmd = app.add_subcommand("laws", "run the algebraic law suites");
  std::string scope = "all";
  int budget = 1000;
  laws_cmd->add_option("--scope", scope, "all | monoids | homs | streamfns | processors | embeddings");
  laws_cmd->add_option("--budget", budget, "sampled cases per law");

  // equiv
  auto* equiv_cmd = app.add_subcommand("equiv", "compare two serialized terms semantically");
  std::string term_a, term_b;
  int equiv_budget = 500;
  equiv_cmd->add_option("term_a", term_a, "first term (JSON file)")->required();
  equiv_cmd->add_option("term_b", term_b, "second term (JSON file)")->required();
  equiv_cmd->add_option("--budget", equiv_budget, "sampled inputs");

  // optimize
  auto* opt_cmd = app.add_subcommand("optimize", "rewrite a term under the verified rule set");
  std::string term_path, strategy = "greedy", opt_out = "optimized.term.json";
  int opt_budget = 200;
  bool parity_cert = false;
  opt_cmd->add_option("term", term_path, "input term (JSON file)")->required();
  opt_cmd->add_option("--strategy", strategy, "greedy | exhaustive:<depth>");
  opt_cmd->add_option("--budget", opt_budget, "verification cases per applied rewrite");
  opt_cmd->add_option("--out", opt_out, "optimized term output file");
  opt_cmd->add_flag("--parity-certificate", parity_cert,
                    "enable join partitioning under the parity independence certificate");

  // tcp
  auto* tcp_cmd = app.add_subcommand("tcp", "run the lossy-network delivery simulation");
  std::size_t messages = 4;
  std::optional<std::string> net1_path, net2_path;
  int max_rounds = 0;
  tcp_cmd->add_option("--messages", messages, "number of payloads to send");
  tcp_cmd->add_option("--net1", net1_path, "network 1 config (JSON file)");
  tcp_cmd->add_option("--net2", net2_path, "network 2 config (JSON file)");
  tcp_cmd->add_option("--max-rounds", max_rounds, "round limit (default: the deadline bound)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  try {
    Registry reg = default_registry();
    std::uint64_t seed = resolve_seed(seed_flag);

    if (*run_cmd) {
      cli::RunRequest req;
      req.example = example;
      req.trace_path = trace_path;
      req.inline_json = inline_json;
      req.seed = seed;
      req.sizes = sizes;
      if (chunking == "whole") req.chunking = cli::Chunking::Whole;
      else if (chunking == "per-generator") req.chunking = cli::Chunking::PerGenerator;
      else if (chunking == "sizes") req.chunking = cli::Chunking::Sizes;
      else {
        std::cout << R"({"error":"unknown chunking mode"})" << "\n";
        return cli::kExitUsage;
      }
      cli::CommandResult result = cli::cmd_run(req, reg);
      if (result.exit_code != cli::kExitUsage) write_lines(out_path, result.trace_lines);
      return finish(result);
    }

    if (*laws_cmd) {
      cli::LawScope s;
      if (scope == "all") s = cli::LawScope::All;
      else if (scope == "monoids") s = cli::LawScope::Monoids;
      else if (scope == "homs") s = cli::LawScope::Homs;
      else if (scope == "streamfns") s = cli::LawScope::StreamFns;
      else if (scope == "processors") s = cli::LawScope::Processors;
      else if (scope == "embeddings") s = cli::LawScope::Embeddings;
      else {
        std::cout << R"({"error":"unknown scope"})" << "\n";
        return cli::kExitUsage;
      }
      return finish(cli::cmd_laws(s, budget, seed, reg));
    }

    if (*equiv_cmd) return finish(cli::cmd_equiv(term_a, term_b, equiv_budget, seed, reg));

    if (*opt_cmd) {
      cli::OptimizeRequest req;
      req.term_path = term_path;
      req.strategy = strategy;
      req.budget = opt_budget;
      req.seed = seed;
      req.parity_certificate = parity_cert;
      nlohmann::ordered_json optimized;
      cli::CommandResult result = cli::cmd_optimize(req, reg, &optimized);
      if (result.exit_code != cli::kExitUsage) {
        std::ofstream out(opt_out);
        if (!out) throw std::runtime_error("cannot write " + opt_out);
        out << optimized.dump(2) << "\n";
      }
      return finish(result);
    }

    if (*tcp_cmd) {
      cli::TcpRequest req;
      req.messages = messages;
      req.net1_path = net1_path;
      req.net2_path = net2_path;
      req.max_rounds = max_rounds;
      req.seed = seed;
      return finish(cli::cmd_tcp(req, reg));
    }
  } catch (const std::exception& e) {
    nlohmann::ordered_json err = {{"error", e.what()}};
    std::cout << err.dump(2) << "\n";
    return cli::kExitUsage;
  }
  return cli::kExitUsage;
}
