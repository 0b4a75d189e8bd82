#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "streamalg/monoid.hpp"
#include "streamalg/report.hpp"
#include "streamalg/rng.hpp"
#include "streamalg/state.hpp"
#include "streamalg/value.hpp"

namespace streamalg {

// A stream processor (S, f, s_eps, o_eps): a homomorphism f from the input
// monoid into State[S, output] together with an initial state and output.
// Immutable description; execution sessions own their own cursor.
struct Processor {
  std::string name;
  MonoidSpec input;
  MonoidSpec output;
  StateSpace states;
  std::function<Value(const Value&)> hom;  // input element -> State[S, output] element
  Value init_state;
  Value init_output;

  MonoidSpec state_monoid_spec() const { return state_monoid(states, output); }

  HomSpec hom_spec() const {
    return HomSpec{"hom:" + name, input, state_monoid_spec(), hom, {}};
  }
};

// Total output on one batch: o_eps . out(f(m)(s_eps)).
inline Value run(const Processor& p, const Value& m) {
  return p.output.product(p.init_output, out(p.hom(m)(p.init_state)));
}

// One streaming step from an explicit state; returns (post-state, increment).
inline std::pair<Value, Value> step(const Processor& p, const Value& s, const Value& a) {
  Value r = p.hom(a)(s);
  return {st(r), out(r)};
}

struct StepEntry {
  Value chunk;
  Value increment;
  Value post_state;
};

// Single-owner streaming cursor. Concatenating the increments after the
// initial output always equals running the whole concatenated input.
class StepSession {
 public:
  explicit StepSession(Processor p)
      : proc_(std::move(p)), state_(proc_.init_state), total_(proc_.init_output) {}

  StepEntry feed(const Value& chunk) {
    auto [s, o] = step(proc_, state_, chunk);
    state_ = s;
    total_ = proc_.output.product(total_, o);
    entries_.push_back({chunk, o, s});
    return entries_.back();
  }

  const Value& state() const { return state_; }
  const Value& total_output() const { return total_; }
  const std::vector<StepEntry>& entries() const { return entries_; }

 private:
  Processor proc_;
  Value state_;
  Value total_;
  std::vector<StepEntry> entries_;
};

inline StateSpace product_space(const StateSpace& a, const StateSpace& b) {
  StateSpace s;
  s.name = "pair(" + a.name + "," + b.name + ")";
  auto sa = a.sample;
  auto sb = b.sample;
  s.sample = [sa, sb](Rng& rng) { return Value::pair(sa(rng), sb(rng)); };
  if (a.enumeration && b.enumeration &&
      a.enumeration->size() * b.enumeration->size() <= 4096) {
    std::vector<Value> both;
    for (const auto& x : *a.enumeration)
      for (const auto& y : *b.enumeration) both.push_back(Value::pair(x, y));
    s.enumeration = std::move(both);
  }
  auto ea = a.equal;
  auto eb = b.equal;
  s.equal = [ea, eb](const Value& x, const Value& y) {
    return ea(x.first(), y.first()) && eb(x.second(), y.second());
  };
  return s;
}

// Free monoid whose letters are elements of an arbitrary monoid (loop batches).
inline MonoidSpec list_of(const MonoidSpec& m) {
  Alphabet batches{m.name, [m](Rng& rng) { return m.sample_element(rng); }, std::nullopt};
  MonoidSpec l = mk_list_monoid(batches);
  MonoidSpec entry = m;
  l.equal = [entry](const Value& a, const Value& b) {
    const auto& xs = a.elems();
    const auto& ys = b.elems();
    if (xs.size() != ys.size()) return false;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (!entry.eq(xs[i], ys[i])) return false;
    return true;
  };
  l.parts = {m};
  return l;
}

// ---------------------------------------------------------------------------
// Combinators

// Stateless lift of a homomorphism. Rejects maps that fail a quick
// homomorphism suite; the full law suites re-check registered homs at budget.
inline Processor pure(const HomSpec& f, int check_budget = 32) {
  if (check_budget > 0) {
    LawReport r = check_homomorphism(f, check_budget, 0x9u);
    if (!r.passed())
      throw std::invalid_argument("pure: " + f.name + " is not a homomorphism (" +
                                  r.failures.front().law + ")");
  }
  Processor p;
  p.name = "pure " + f.name;
  p.input = f.source;
  p.output = f.target;
  p.states = singleton_space();
  auto apply = f.apply;
  p.hom = [apply](const Value& a) {
    Value emitted = apply(a);
    return Value::fn([emitted](const Value& s) { return Value::pair(s, emitted); });
  };
  p.init_state = Value::unit();
  p.init_output = f.target.identity;
  return p;
}

// eval sigma = (S, id, s_eps, o_eps): feeds states into arriving hypotheticals.
inline Processor eval_processor(const Processor& p) {
  Processor e;
  e.name = "eval " + p.name;
  e.input = p.state_monoid_spec();
  e.output = p.output;
  e.states = p.states;
  e.hom = [](const Value& alpha) { return alpha; };
  e.init_state = p.init_state;
  e.init_output = p.init_output;
  return e;
}

// eval_{g_*} sigma: same states, output monoid transported along g, initial
// output g(o_eps).
inline Processor eval_pushed(const Processor& p, const HomSpec& g) {
  if (g.source.name != p.output.name)
    throw std::invalid_argument("eval_pushed: hom source " + g.source.name +
                                " does not match processor output " + p.output.name);
  Processor e;
  e.name = "eval[" + g.name + "_*] " + p.name;
  e.input = state_monoid(p.states, g.target);
  e.output = g.target;
  e.states = p.states;
  e.hom = [](const Value& alpha) { return alpha; };
  e.init_state = p.init_state;
  e.init_output = g.apply(p.init_output);
  return e;
}

// Sequential composition; the initial output feeds the first processor's
// initial output through the second once, exactly as the definition requires.
inline Processor seq(const Processor& p, const Processor& q) {
  if (p.output.name != q.input.name)
    throw std::invalid_argument("seq: output monoid " + p.output.name +
                                " does not match input monoid " + q.input.name);
  Processor c;
  c.name = p.name + " ; " + q.name;
  c.input = p.input;
  c.output = q.output;
  c.states = product_space(p.states, q.states);
  auto ph = p.hom;
  auto qh = q.hom;
  c.hom = [ph, qh](const Value& m) {
    return Value::fn([ph, qh, m](const Value& s) {
      Value ra = ph(m)(s.first());
      Value rb = qh(out(ra))(s.second());
      return Value::pair(Value::pair(st(ra), st(rb)), out(rb));
    });
  };
  Value fed = q.hom(p.init_output)(q.init_state);  // (t_{n_eps}, p_{eps ~> n_eps})
  c.init_state = Value::pair(p.init_state, st(fed));
  c.init_output = q.output.product(q.init_output, out(fed));
  return c;
}

enum class ParMode { Sequential, Concurrent };

// Product processor over the direct product of inputs and outputs. Concurrent
// mode evaluates the halves in separate tasks; the merge is by position, so
// results are observationally identical to sequential execution.
inline Processor par(const Processor& p, const Processor& q,
                     ParMode mode = ParMode::Sequential) {
  Processor c;
  c.name = p.name + " x " + q.name;
  c.input = direct_product(p.input, q.input);
  c.output = direct_product(p.output, q.output);
  c.states = product_space(p.states, q.states);
  auto ph = p.hom;
  auto qh = q.hom;
  c.hom = [ph, qh, mode](const Value& mn) {
    return Value::fn([ph, qh, mode, mn](const Value& s) {
      if (mode == ParMode::Concurrent) {
        auto left = std::async(std::launch::async,
                               [&] { return ph(mn.first())(s.first()); });
        Value rb = qh(mn.second())(s.second());
        Value ra = left.get();
        return Value::pair(Value::pair(st(ra), st(rb)), Value::pair(out(ra), out(rb)));
      }
      Value ra = ph(mn.first())(s.first());
      Value rb = qh(mn.second())(s.second());
      return Value::pair(Value::pair(st(ra), st(rb)), Value::pair(out(ra), out(rb)));
    });
  };
  c.init_state = Value::pair(p.init_state, q.init_state);
  c.init_output = Value::pair(p.init_output, q.init_output);
  return c;
}

// Stratified feedback: consumes batches of M, feeding channel U back each
// round. Requires p : M x U ~> N x U.
inline Processor loop_(const Processor& p) {
  if (p.input.parts.size() != 2 || p.output.parts.size() != 2)
    throw std::invalid_argument("loop: processor must have direct-product input and output");
  const MonoidSpec& m = p.input.parts[0];
  const MonoidSpec& u = p.input.parts[1];
  const MonoidSpec& n = p.output.parts[0];
  const MonoidSpec& u_out = p.output.parts[1];
  if (u.name != u_out.name)
    throw std::invalid_argument("loop: feedback monoid mismatch (" + u.name + " vs " +
                                u_out.name + ")");
  Processor c;
  c.name = "loop " + p.name;
  c.input = list_of(m);
  c.output = list_of(n);
  c.states = product_space(p.states, carrier_space(u));
  auto ph = p.hom;
  c.hom = [ph](const Value& batches) {
    return Value::fn([ph, batches](const Value& su) {
      Value s = su.first();
      Value u_prev = su.second();
      std::vector<Value> emitted;
      for (const auto& batch : batches.elems()) {
        Value r = ph(Value::pair(batch, u_prev))(s);
        s = st(r);
        emitted.push_back(out(r).first());
        u_prev = out(r).second();
      }
      return Value::pair(Value::pair(s, u_prev), Value::list(std::move(emitted)));
    });
  };
  Value n0 = p.init_output.first();
  Value u0 = p.init_output.second();
  c.init_state = Value::pair(p.init_state, u0);
  c.init_output = Value::list({n0});
  return c;
}

// Composes a homomorphism in front of a processor without an extra stage:
// (S, f ; g, s_eps, o_eps).
inline Processor fuse_pre_hom(const HomSpec& f, const Processor& p) {
  if (f.target.name != p.input.name)
    throw std::invalid_argument("fuse_pre_hom: hom target " + f.target.name +
                                " does not match processor input " + p.input.name);
  Processor c = p;
  c.name = "(" + f.name + " ; " + p.name + ")";
  c.input = f.source;
  auto apply = f.apply;
  auto ph = p.hom;
  c.hom = [apply, ph](const Value& a) { return ph(apply(a)); };
  return c;
}

// Composes a homomorphism behind a processor by pushing it into every
// hypothetical: (S, f ; g_*, s_eps, g(o_eps)).
inline Processor fuse_output_hom(const Processor& p, const HomSpec& g) {
  if (g.source.name != p.output.name)
    throw std::invalid_argument("fuse_output_hom: hom source " + g.source.name +
                                " does not match processor output " + p.output.name);
  Processor c = p;
  c.name = "(" + p.name + " ; " + g.name + ")";
  c.output = g.target;
  auto apply = g.apply;
  auto ph = p.hom;
  c.hom = [apply, ph](const Value& a) { return push_forward(apply, ph(a)); };
  c.init_output = g.apply(p.init_output);
  return c;
}

// Replaces the state sampler with one that draws reachable states by running
// the processor on short random input prefixes.
inline Processor with_reachable_states(Processor p) {
  auto hom = p.hom;
  MonoidSpec input = p.input;
  Value init = p.init_state;
  p.states.sample = [hom, input, init](Rng& rng) {
    Value prefix = input.sample_element(rng);
    return st(hom(prefix)(init));
  };
  return p;
}

// ---------------------------------------------------------------------------
// Semantic equivalence oracle

struct InputGen {
  std::optional<std::vector<Value>> finite;  // exhaustive when present
  std::function<Value(Rng&)> sample;

  static InputGen from_monoid(const MonoidSpec& m) {
    return InputGen{std::nullopt, [m](Rng& rng) { return m.sample_element(rng); }};
  }

  static InputGen exhaustive(std::vector<Value> inputs) {
    return InputGen{std::move(inputs), nullptr};
  }
};

namespace detail {

// Regroups a generator word into contiguous chunks with geometric sizes.
inline std::vector<Value> regroup(const MonoidSpec& m, const std::vector<Value>& word, Rng& rng) {
  std::vector<Value> chunks;
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t len = 1 + rng.geometric(2);
    Value chunk = m.identity;
    for (std::size_t j = 0; j < len && i < word.size(); ++j, ++i)
      chunk = m.product(chunk, word[i]);
    chunks.push_back(chunk);
  }
  return chunks;
}

}  // namespace detail

// Compares two processors on generated inputs (exhaustively when the
// generator is finite), both whole-batch and chunk-by-chunk along input
// factorizations. A pass means no counterexample within budget.
inline EquivVerdict equiv_check(const Processor& p, const Processor& q, const InputGen& gen,
                                int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("equiv_check: budget must be >= 1");
  if (p.input.name != q.input.name || p.output.name != q.output.name)
    throw std::invalid_argument("equiv_check: processor types differ (" + p.input.name + " ~> " +
                                p.output.name + " vs " + q.input.name + " ~> " + q.output.name +
                                ")");
  EquivVerdict verdict;
  Rng rng(seed);

  auto try_input = [&](const Value& m) {
    ++verdict.cases_run;
    Value left = run(p, m);
    Value right = run(q, m);
    if (!p.output.eq(left, right)) {
      verdict.pass = false;
      verdict.witness = {m, left, right};
      verdict.note = "whole-batch outputs differ";
      return false;
    }
    if (p.input.to_word) {
      std::vector<Value> word = p.input.to_word(m);
      std::vector<std::vector<Value>> chunkings;
      chunkings.push_back(word);  // per-generator
      Rng sub = rng.fork();
      chunkings.push_back(detail::regroup(p.input, word, sub));
      for (const auto& chunks : chunkings) {
        StepSession sp(p), sq(q);
        for (const auto& c : chunks) {
          sp.feed(c);
          sq.feed(c);
          if (!p.output.eq(sp.total_output(), sq.total_output())) {
            verdict.pass = false;
            verdict.witness = {m, sp.total_output(), sq.total_output()};
            verdict.note = "streamed prefix outputs differ at chunk " + c.dump();
            return false;
          }
        }
      }
    }
    return true;
  };

  if (gen.finite) {
    for (const auto& m : *gen.finite)
      if (!try_input(m)) return verdict;
    return verdict;
  }
  for (int i = 0; i < budget; ++i)
    if (!try_input(gen.sample(rng))) return verdict;
  return verdict;
}

// For every factorization m = a1 ... ak, the folded increments must equal the
// whole-batch run (streaming determinism).
inline LawReport check_streaming_determinism(const Processor& p, int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("check_streaming_determinism: budget >= 1");
  LawReport report;
  report.subject = "streaming determinism: " + p.name;
  report.seed = seed;
  Rng rng(seed);
  if (!p.input.to_word) return report;  // nothing to factor
  for (int i = 0; i < budget; ++i) {
    Value m = p.input.sample_element(rng);
    std::vector<Value> word = p.input.to_word(m);
    std::vector<Value> chunks = detail::regroup(p.input, word, rng);
    StepSession session(p);
    for (const auto& c : chunks) session.feed(c);
    ++report.cases_run;
    Value whole = run(p, m);
    if (!p.output.eq(session.total_output(), whole)) {
      report.fail("streaming-determinism", {m},
                  "chunked " + session.total_output().dump() + " vs whole " + whole.dump());
      break;
    }
  }
  return report;
}

// A singleton-state, identity-initial-output processor denotes a
// homomorphism; verifies that on samples.
inline LawReport check_stateless_iff_hom(const Processor& p, int budget, std::uint64_t seed) {
  if (!p.states.enumeration || p.states.enumeration->size() != 1)
    throw std::invalid_argument("check_stateless_iff_hom: state space must be a singleton");
  if (!p.output.eq(p.init_output, p.output.identity))
    throw std::invalid_argument("check_stateless_iff_hom: initial output must be identity");
  Processor copy = p;
  HomSpec denoted{"run " + p.name, p.input, p.output,
                  [copy](const Value& m) { return run(copy, m); }, {}};
  return check_homomorphism(denoted, budget, seed);
}

}  // namespace streamalg
