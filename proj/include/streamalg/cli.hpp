#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "streamalg/registry.hpp"
#include "streamalg/repr.hpp"
#include "streamalg/streamfn.hpp"

namespace streamalg::cli {

// Exit codes: 0 all pass, 1 law/equivalence failure, 2 usage or parse error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct CommandResult {
  int exit_code = kExitPass;
  nlohmann::ordered_json report;
  std::vector<std::string> trace_lines;  // cmd_run: the JSON-lines output trace
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline nlohmann::ordered_json failure_entry(const std::string& law, const nlohmann::ordered_json& witness) {
  return {{"law", law}, {"witness", witness}};
}

inline void append_failures(nlohmann::ordered_json& failures, const LawReport& report,
                            const std::string& prefix) {
  for (const auto& f : report.failures) {
    nlohmann::ordered_json w = nlohmann::ordered_json::array();
    for (const auto& v : f.witness)
      w.push_back(v.is_fn() ? nlohmann::ordered_json("<fn>") : v.to_json());
    failures.push_back(failure_entry(prefix + f.law, w));
  }
}

inline CommandResult usage_error(const std::string& message) {
  CommandResult r;
  r.exit_code = kExitUsage;
  r.report = {{"error", message}};
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run: stream an input trace through a named example processor

enum class Chunking { Whole, PerGenerator, Sizes };

struct RunRequest {
  std::string example;
  std::optional<std::string> trace_path;   // JSON-lines input
  std::optional<std::string> inline_json;  // alternative: inline array of chunks
  Chunking chunking = Chunking::Whole;
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 42;
};

namespace detail {

// Input traces are JSON lines: a {"monoid": name} header, then one element
// per line; the elements are chunks of the total input.
inline std::vector<Value> parse_trace_lines(const std::vector<std::string>& lines,
                                            const std::string& expected_monoid) {
  if (lines.empty()) throw std::invalid_argument("trace is empty (missing header line)");
  nlohmann::json header = nlohmann::json::parse(lines.front());
  std::string monoid = header.at("monoid").get<std::string>();
  if (monoid != expected_monoid)
    throw std::invalid_argument("trace monoid " + monoid + " does not match example input " +
                                expected_monoid);
  std::vector<Value> chunks;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    chunks.push_back(Value::from_json(nlohmann::json::parse(lines[i])));
  }
  return chunks;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

inline CommandResult cmd_run(const RunRequest& req, const Registry& reg) {
  detail::Stopwatch timer;
  if (!reg.has_processor(req.example))
    return detail::usage_error("unknown example: " + req.example);
  const Processor& p = reg.processor(req.example);

  std::vector<Value> chunks;
  try {
    if (req.trace_path) {
      chunks = detail::parse_trace_lines(detail::read_lines(*req.trace_path), p.input.name);
    } else if (req.inline_json) {
      nlohmann::json arr = nlohmann::json::parse(*req.inline_json);
      if (!arr.is_array()) throw std::invalid_argument("inline input must be a JSON array");
      for (const auto& e : arr) chunks.push_back(Value::from_json(e));
    } else {
      return detail::usage_error("no input given (need a trace file or inline JSON)");
    }
  } catch (const std::exception& e) {
    return detail::usage_error(std::string("malformed trace: ") + e.what());
  }

  Value total = p.input.identity;
  for (const auto& c : chunks) total = p.input.product(total, c);

  // re-chunk per request
  std::vector<Value> feed;
  switch (req.chunking) {
    case Chunking::Whole:
      feed = {total};
      break;
    case Chunking::PerGenerator:
      if (!p.input.to_word) return detail::usage_error("input monoid has no generator factorization");
      feed = p.input.to_word(total);
      break;
    case Chunking::Sizes: {
      if (!p.input.to_word) return detail::usage_error("input monoid has no generator factorization");
      for (std::size_t s : req.sizes)
        if (s == 0) return detail::usage_error("chunk sizes must be positive");
      if (req.sizes.empty()) return detail::usage_error("chunk sizes must be non-empty");
      std::vector<Value> word = p.input.to_word(total);
      std::size_t i = 0, which = 0;
      while (i < word.size()) {
        Value chunk = p.input.identity;
        for (std::size_t j = 0; j < req.sizes[which % req.sizes.size()] && i < word.size(); ++j, ++i)
          chunk = p.input.product(chunk, word[i]);
        feed.push_back(chunk);
        ++which;
      }
      break;
    }
  }

  CommandResult result;
  StepSession session(p);
  for (const auto& chunk : feed) {
    StepEntry entry = session.feed(chunk);
    nlohmann::ordered_json line;
    line["chunk"] = chunk.to_json();
    line["out"] = entry.increment.to_json();
    line["state_digest"] = entry.post_state.is_fn()
                               ? nlohmann::ordered_json("<fn>")
                               : nlohmann::ordered_json(entry.post_state.digest());
    result.trace_lines.push_back(line.dump());
  }
  nlohmann::ordered_json final_line;
  final_line["total"] = session.total_output().to_json();
  result.trace_lines.push_back(final_line.dump());

  // streaming determinism: chunked execution must equal the whole-input run
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  Value whole = run(p, total);
  if (!p.output.eq(session.total_output(), whole))
    failures.push_back(detail::failure_entry(
        "streaming-determinism",
        {session.total_output().to_json(), whole.to_json()}));

  result.report["suite"] = "run";
  result.report["example"] = req.example;
  result.report["cases"] = feed.size();
  result.report["output"] = session.total_output().to_json();
  result.report["failures"] = failures;
  result.report["seed"] = req.seed;
  result.report["wall_time_ms"] = timer.ms();
  result.exit_code = failures.empty() ? kExitPass : kExitFail;
  return result;
}

// ---------------------------------------------------------------------------
// laws: every registered algebraic object's property suite

enum class LawScope { All, Monoids, Homs, StreamFns, Processors, Embeddings };

namespace detail {

// Derived monoids worth exercising beyond the registered base ones.
inline std::vector<std::string> derived_monoid_names() {
  return {"list(int)",
          "set(letter)",
          "list(letter)",
          "prod(int,int)",
          "prod(set(edge4),set(edge4))",
          "tensor(set(edge4),set(edge4))",
          "ticked(set(letter))",
          "state(int,list(int))"};
}

inline StreamFunctionSpec prefix_sum_fn_spec() {
  MonoidSpec lists = mk_list_monoid(int_alphabet());
  auto sums = [](const Value& xs) {
    std::vector<Value> acc;
    std::int64_t total = 0;
    for (const auto& x : xs.elems()) {
      total += x.as_int();
      acc.push_back(Value::integer(total));
    }
    return Value::list(std::move(acc));
  };
  return StreamFunctionSpec{"prefixSum", lists, lists, sums,
                            [sums](const Value& p, const Value& a) {
                              std::int64_t base = 0;
                              for (const auto& x : p.elems()) base += x.as_int();
                              std::vector<Value> emitted;
                              for (const auto& y : sums(a).elems())
                                emitted.push_back(Value::integer(base + y.as_int()));
                              return Value::list(std::move(emitted));
                            }};
}

// The non-stream-function: stratum-free set difference. The law suite must
// find a condition-(1) counterexample for it.
inline StreamFunctionSpec setdiff_fn_spec() {
  MonoidSpec sets = mk_set_monoid(letter_alphabet());
  MonoidSpec pairs = direct_product(sets, sets);
  auto diff = [](const Value& v) {
    std::vector<Value> kept;
    for (const auto& x : v.first().elems()) {
      bool removed = false;
      for (const auto& y : v.second().elems())
        if (x == y) removed = true;
      if (!removed) kept.push_back(x);
    }
    return Value::list(normalize_set(std::move(kept)));
  };
  return StreamFunctionSpec{"setdiff", pairs, sets, diff,
                            [diff, sets](const Value& p, const Value& a) {
                              Value merged =
                                  Value::pair(a.first(), sets.product(p.second(), a.second()));
                              return diff(merged);
                            }};
}

// Pairs into the tensor: not a homomorphism; the hom suite must find the
// witness pair.
inline HomSpec pairs_not_hom_spec() {
  MonoidSpec sets = mk_set_monoid(letter_alphabet());
  MonoidSpec tensor = tensor_product(sets, sets);
  MonoidSpec prod = direct_product(sets, sets);
  return HomSpec{"Pairs", prod, tensor,
                 [tensor](const Value& v) { return tensor_embed(tensor, v.first(), v.second()); }};
}

}  // namespace detail

inline const char* law_scope_name(LawScope s) {
  switch (s) {
    case LawScope::All: return "all";
    case LawScope::Monoids: return "monoids";
    case LawScope::Homs: return "homs";
    case LawScope::StreamFns: return "streamfns";
    case LawScope::Processors: return "processors";
    case LawScope::Embeddings: return "embeddings";
  }
  return "?";
}

inline CommandResult cmd_laws(LawScope scope, int budget, std::uint64_t seed, const Registry& reg) {
  detail::Stopwatch timer;
  if (budget < 1) return detail::usage_error("budget must be >= 1");
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  std::int64_t cases = 0;
  Rng seeder(seed);

  auto want = [scope](LawScope s) { return scope == LawScope::All || scope == s; };

  if (want(LawScope::Monoids)) {
    std::vector<std::string> names;
    for (const auto& [name, m] : reg.monoids()) names.push_back(name);
    for (const auto& name : detail::derived_monoid_names()) names.push_back(name);
    for (const auto& name : names) {
      LawReport r = check_monoid_laws(reg.monoid(name), budget, seeder.next_u64());
      cases += r.cases_run;
      detail::append_failures(failures, r, "monoid " + name + ": ");
    }
  }

  if (want(LawScope::Homs)) {
    for (const auto& [name, h] : reg.homs()) {
      LawReport r = check_homomorphism(h, budget, seeder.next_u64());
      cases += r.cases_run;
      detail::append_failures(failures, r, "hom " + name + ": ");
    }
    // every processor's homomorphism into its State monoid, extensionally
    for (const auto& [name, p] : reg.processors()) {
      LawReport r = check_homomorphism(p.hom_spec(), budget, seeder.next_u64());
      cases += r.cases_run;
      detail::append_failures(failures, r, "processor hom " + name + ": ");
    }
    // the negative specimen: Pairs must be caught
    LawReport pairs_r = check_homomorphism(detail::pairs_not_hom_spec(), budget, seeder.next_u64());
    cases += pairs_r.cases_run;
    if (pairs_r.passed())
      failures.push_back(detail::failure_entry(
          "negative: Pairs escaped the homomorphism checker", nlohmann::ordered_json::array()));
  }

  if (want(LawScope::StreamFns)) {
    std::vector<StreamFunctionSpec> positives = {detail::prefix_sum_fn_spec()};
    {
      MonoidSpec sets = mk_set_monoid(letter_alphabet());
      positives.push_back(pairs_stream_function(sets, sets));
      MonoidSpec lists = mk_list_monoid(letter_alphabet());
      positives.push_back(from_homomorphism(HomSpec{
          "flatten", lists, sets,
          [](const Value& v) { return Value::list(normalize_set(v.elems())); }}));
    }
    for (const auto& f : positives) {
      LawReport r = check_stream_function(f, budget, seeder.next_u64());
      cases += r.cases_run;
      detail::append_failures(failures, r, "streamfn " + f.name + ": ");
    }
    LawReport neg = check_stream_function(detail::setdiff_fn_spec(), budget, seeder.next_u64());
    cases += neg.cases_run;
    if (neg.passed())
      failures.push_back(detail::failure_entry(
          "negative: set difference escaped the stream-function checker",
          nlohmann::ordered_json::array()));
  }

  if (want(LawScope::Processors)) {
    for (const auto& [name, p] : reg.processors()) {
      LawReport sound = check_soundness(p, budget, seeder.next_u64());
      cases += sound.cases_run;
      detail::append_failures(failures, sound, "soundness " + name + ": ");
      LawReport stream = check_streaming_determinism(p, budget, seeder.next_u64());
      cases += stream.cases_run;
      detail::append_failures(failures, stream, "streaming " + name + ": ");
    }
  }

  if (want(LawScope::Embeddings)) {
    Processor adder = adder_processor();
    HomSpec f = adder.hom_spec();
    auto sample = [f](Rng& rng) { return f.apply(f.source.sample_element(rng)); };
    std::vector<std::pair<Value, std::string>> tags = {
        {Value::list({Value::pair(Value::integer(0), Value::integer(0))}), "x"},
        {Value::list({Value::pair(Value::integer(0), Value::integer(1))}), "y"},
        {Value::list({Value::pair(Value::integer(1), Value::integer(0))}), "y"},
        {Value::list({Value::pair(Value::integer(1), Value::integer(1))}), "z"}};
    std::vector<std::pair<std::string, Embedding>> embeddings;
    embeddings.emplace_back("defunctionalize(adder)", defunctionalize(f, tags));
    embeddings.emplace_back("tabulate(adder)", tabulate(adder.states, adder.output));
    for (const auto& [name, e] : embeddings) {
      LawReport r = check_embedding(e, sample, budget, seeder.next_u64());
      cases += r.cases_run;
      detail::append_failures(failures, r, name + ": ");
    }
    MonoidSpec letter_sets = mk_set_monoid(letter_alphabet());
    Embedding collapse = trivial_state_collapse(letter_sets);
    MonoidSpec image = collapse.image;
    auto sample_stateless = [image](Rng& rng) { return image.sample_generator(rng); };
    LawReport r = check_embedding(collapse, sample_stateless, budget, seeder.next_u64());
    cases += r.cases_run;
    detail::append_failures(failures, r, "collapse: ");
  }

  CommandResult result;
  result.report["suite"] = "laws";
  result.report["scope"] = law_scope_name(scope);
  result.report["cases"] = cases;
  result.report["failures"] = failures;
  result.report["seed"] = seed;
  result.report["wall_time_ms"] = timer.ms();
  result.exit_code = failures.empty() ? kExitPass : kExitFail;
  return result;
}

// ---------------------------------------------------------------------------
// equiv: semantic comparison of two serialized terms

inline CommandResult cmd_equiv(const std::string& term_a_path, const std::string& term_b_path,
                               int budget, std::uint64_t seed, const Registry& reg) {
  detail::Stopwatch timer;
  PipelineTerm a, b;
  Processor pa, pb;
  try {
    a = term_from_json(nlohmann::json::parse(detail::read_file(term_a_path)));
    b = term_from_json(nlohmann::json::parse(detail::read_file(term_b_path)));
    check_annotations(a, reg);
    check_annotations(b, reg);
    pa = denote_term(a, reg);
    pb = denote_term(b, reg);
  } catch (const std::exception& e) {
    return detail::usage_error(std::string("term error: ") + e.what());
  }

  EquivVerdict verdict;
  try {
    verdict = equiv_check(pa, pb, InputGen::from_monoid(pa.input), budget, seed);
  } catch (const std::exception& e) {
    return detail::usage_error(std::string("type error: ") + e.what());
  }

  CommandResult result;
  result.report["suite"] = "equiv";
  result.report["cases"] = verdict.cases_run;
  result.report["verdict"] = verdict.to_json();
  result.report["failures"] = nlohmann::ordered_json::array();
  if (!verdict.pass)
    result.report["failures"].push_back(
        detail::failure_entry("equivalence", verdict.to_json()["witness"]));
  result.report["seed"] = seed;
  result.report["wall_time_ms"] = timer.ms();
  result.exit_code = verdict.pass ? kExitPass : kExitFail;
  return result;
}

// ---------------------------------------------------------------------------
// optimize: rewrite a serialized term under the shipped rule set

struct OptimizeRequest {
  std::string term_path;
  std::string strategy = "greedy";  // or "exhaustive:<depth>"
  bool parity_certificate = false;
  int budget = 200;
  std::uint64_t seed = 42;
};

inline CommandResult cmd_optimize(const OptimizeRequest& req, const Registry& reg,
                                  nlohmann::ordered_json* optimized_term_out = nullptr) {
  detail::Stopwatch timer;
  PipelineTerm term;
  try {
    term = term_from_json(nlohmann::json::parse(detail::read_file(req.term_path)));
    check_annotations(term, reg);
  } catch (const std::exception& e) {
    return detail::usage_error(std::string("term error: ") + e.what());
  }

  OptimizeOptions opts;
  opts.verify_budget = req.budget;
  opts.seed = req.seed;
  if (req.strategy == "greedy") {
    opts.strategy = Strategy::Greedy;
  } else if (req.strategy.rfind("exhaustive:", 0) == 0) {
    opts.strategy = Strategy::ExhaustiveToDepth;
    opts.depth = std::stoi(req.strategy.substr(11));
  } else {
    return detail::usage_error("unknown strategy: " + req.strategy);
  }

  std::vector<RewriteRule> rules =
      req.parity_certificate ? rule_set_with_certificate(join_parity_certificate(reg))
                             : default_rule_set();
  OptimizeResult r = optimize(term, rules, reg, opts);

  CommandResult result;
  result.report["suite"] = "optimize";
  result.report["strategy"] = req.strategy;
  nlohmann::ordered_json log = nlohmann::ordered_json::array();
  bool all_verified = true;
  for (const auto& step : r.log) {
    log.push_back(step.to_json());
    all_verified = all_verified && step.verdict.pass;
  }
  result.report["log"] = log;
  result.report["steps"] = r.log.size();
  result.report["failures"] = nlohmann::ordered_json::array();
  if (!all_verified)
    result.report["failures"].push_back(
        detail::failure_entry("unverified rewrite committed", nlohmann::ordered_json::array()));
  result.report["seed"] = req.seed;
  result.report["wall_time_ms"] = timer.ms();
  if (optimized_term_out) *optimized_term_out = term_to_json(r.term);
  result.exit_code = all_verified ? kExitPass : kExitFail;
  return result;
}

// ---------------------------------------------------------------------------
// tcp: deterministic delivery simulation against the deadline bound

struct TcpRequest {
  std::size_t messages = 4;
  std::optional<std::string> net1_path;
  std::optional<std::string> net2_path;
  int max_rounds = 0;  // 0: use the bound
  std::uint64_t seed = 42;
};

inline CommandResult cmd_tcp(const TcpRequest& req, const Registry&) {
  detail::Stopwatch timer;
  NetworkConfig net1, net2;
  try {
    if (req.net1_path) net1 = NetworkConfig::from_json(nlohmann::json::parse(detail::read_file(*req.net1_path)));
    if (req.net2_path) net2 = NetworkConfig::from_json(nlohmann::json::parse(detail::read_file(*req.net2_path)));
  } catch (const std::exception& e) {
    return detail::usage_error(std::string("config error: ") + e.what());
  }

  Processor system = tcp_system(net1, net2);
  std::vector<Value> payloads;
  Rng rng(req.seed);
  for (std::size_t i = 0; i < req.messages; ++i)
    payloads.push_back(Value::integer(rng.range(0, 99)));

  std::int64_t bound = tcp_delivery_bound(net1, net2, req.messages);
  int max_rounds = req.max_rounds > 0 ? req.max_rounds : static_cast<int>(bound);
  TcpRun outcome = tcp_deliver(system, payloads, max_rounds);

  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  if (!outcome.delivered)
    failures.push_back(detail::failure_entry("delivery incomplete after " +
                                                 std::to_string(outcome.rounds_used) + " rounds",
                                             nlohmann::ordered_json::array()));
  if (!outcome.prefix_ok)
    failures.push_back(
        detail::failure_entry("prefix invariant violated", nlohmann::ordered_json::array()));
  if (outcome.delivered && outcome.rounds_used > bound)
    failures.push_back(detail::failure_entry("delivery exceeded the deadline bound",
                                             nlohmann::ordered_json::array()));

  CommandResult result;
  result.report["suite"] = "tcp";
  result.report["messages"] = req.messages;
  result.report["rounds_used"] = outcome.rounds_used;
  result.report["bound"] = bound;
  result.report["delivered"] = outcome.delivered;
  result.report["prefix_ok"] = outcome.prefix_ok;
  result.report["failures"] = failures;
  result.report["seed"] = req.seed;
  result.report["wall_time_ms"] = timer.ms();
  result.exit_code = failures.empty() ? kExitPass : kExitFail;
  return result;
}

}  // namespace streamalg::cli
