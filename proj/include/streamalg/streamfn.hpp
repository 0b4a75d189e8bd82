#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "streamalg/monoid.hpp"
#include "streamalg/processor.hpp"
#include "streamalg/report.hpp"
#include "streamalg/rng.hpp"
#include "streamalg/state.hpp"
#include "streamalg/value.hpp"

namespace streamalg {

// A stream function F with its update function: F(pa) = F(p) . dF(p, a),
// dF(p, eps) = eps, dF(p, ab) = dF(p, a) . dF(pa, b). Updates are supplied,
// not synthesized; the checker validates them on samples.
struct StreamFunctionSpec {
  std::string name;
  MonoidSpec source;
  MonoidSpec target;
  std::function<Value(const Value&)> apply;                        // F
  std::function<Value(const Value&, const Value&)> update;         // dF(p, a)
};

// Validates conditions (1), (2a) and (2b) on sampled (p, a, b) triples.
// Counterexamples name the violated condition.
inline LawReport check_stream_function(const StreamFunctionSpec& f, int budget,
                                       std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("check_stream_function: budget must be >= 1");
  LawReport report;
  report.subject = f.name;
  report.seed = seed;
  Rng rng(seed);
  const MonoidSpec& src = f.source;
  const MonoidSpec& dst = f.target;
  for (int i = 0; i < budget; ++i) {
    Value p = src.sample_element(rng);
    Value a = src.sample_element(rng);
    Value b = src.sample_element(rng);
    ++report.cases_run;
    if (!dst.eq(f.apply(src.product(p, a)), dst.product(f.apply(p), f.update(p, a)))) {
      report.fail("(1) F(pa) = F(p) . dF(p,a)", {p, a});
      break;
    }
    if (!dst.eq(f.update(p, src.identity), dst.identity)) {
      report.fail("(2a) dF(p, eps) = eps", {p});
      break;
    }
    Value lhs = f.update(p, src.product(a, b));
    Value rhs = dst.product(f.update(p, a), f.update(src.product(p, a), b));
    if (!dst.eq(lhs, rhs)) {
      report.fail("(2b) dF(p, ab) = dF(p,a) . dF(pa,b)", {p, a, b});
      break;
    }
  }
  return report;
}

// Every homomorphism is a stream function with a prefix-blind update.
inline StreamFunctionSpec from_homomorphism(const HomSpec& f, int check_budget = 64,
                                            std::uint64_t seed = 0x11u) {
  LawReport r = check_homomorphism(f, check_budget, seed);
  if (!r.passed())
    throw std::invalid_argument("from_homomorphism: " + f.name + " fails " +
                                r.failures.front().law);
  auto apply = f.apply;
  return StreamFunctionSpec{f.name, f.source, f.target, apply,
                            [apply](const Value&, const Value& a) { return apply(a); }};
}

// Generic decomposition: S = M, f(m) = s -> (s.m, dF(s,m)),
// initial state eps, initial output F(eps).
inline Processor generic_decompose(const StreamFunctionSpec& f) {
  Processor p;
  p.name = "decompose " + f.name;
  p.input = f.source;
  p.output = f.target;
  p.states = carrier_space(f.source);
  auto product = f.source.product;
  auto update = f.update;
  p.hom = [product, update](const Value& m) {
    return Value::fn([product, update, m](const Value& s) {
      return Value::pair(product(s, m), update(s, m));
    });
  };
  p.init_state = f.source.identity;
  p.init_output = f.apply(f.source.identity);
  return p;
}

namespace detail {

inline void require_condition_one(const StreamFunctionSpec& f, int budget, std::uint64_t seed,
                                  const char* who) {
  Rng rng(seed);
  for (int i = 0; i < budget; ++i) {
    Value p = f.source.sample_element(rng);
    Value a = f.source.sample_element(rng);
    if (!f.target.eq(f.apply(f.source.product(p, a)),
                     f.target.product(f.apply(p), f.update(p, a))))
      throw std::invalid_argument(std::string(who) + ": condition (1) fails at p=" + p.dump() +
                                  ", a=" + a.dump());
  }
}

}  // namespace detail

// When Img F is left-cancellative, condition (1) alone forces (2a)/(2b); the
// candidate update is accepted as-is after re-verification.
inline StreamFunctionSpec completion_for_left_cancellative(StreamFunctionSpec f, int budget = 128,
                                                           std::uint64_t seed = 0x21u) {
  detail::require_condition_one(f, budget, seed, "completion_for_left_cancellative");
  LawReport r = check_stream_function(f, budget, seed);
  if (!r.passed())
    throw std::invalid_argument("completion_for_left_cancellative: " + f.name + " fails " +
                                r.failures.front().law);
  return f;
}

// When Img F is idempotent, dF'(p, a) = eps if a = eps, else F(p) . dF(p, a)
// repairs any condition-(1) update into a regular one.
inline StreamFunctionSpec completion_for_idempotent(StreamFunctionSpec f, int budget = 128,
                                                    std::uint64_t seed = 0x22u) {
  detail::require_condition_one(f, budget, seed, "completion_for_idempotent");
  auto apply = f.apply;
  auto update = f.update;
  MonoidSpec src = f.source;
  MonoidSpec dst = f.target;
  StreamFunctionSpec repaired = f;
  repaired.name = f.name + "'";
  repaired.update = [apply, update, src, dst](const Value& p, const Value& a) {
    if (src.eq(a, src.identity)) return dst.identity;
    return dst.product(apply(p), update(p, a));
  };
  LawReport r = check_stream_function(repaired, budget, seed);
  if (!r.passed())
    throw std::invalid_argument("completion_for_idempotent: " + repaired.name + " fails " +
                                r.failures.front().law);
  return repaired;
}

// The semantics of a processor as a stream function, with the canonical update
// dF(p, a) = o_{p ~> a}. Feeding this to check_stream_function is the
// soundness suite.
inline StreamFunctionSpec denotation(const Processor& p) {
  Processor copy = p;
  return StreamFunctionSpec{
      "denote " + p.name, p.input, p.output,
      [copy](const Value& m) { return run(copy, m); },
      [copy](const Value& prefix, const Value& a) {
        Value s_p = st(copy.hom(prefix)(copy.init_state));
        return out(copy.hom(a)(s_p));
      }};
}

inline LawReport check_soundness(const Processor& p, int budget, std::uint64_t seed) {
  return check_stream_function(denotation(p), budget, seed);
}

}  // namespace streamalg
