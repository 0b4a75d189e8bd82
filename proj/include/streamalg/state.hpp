#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "streamalg/monoid.hpp"
#include "streamalg/report.hpp"
#include "streamalg/rng.hpp"
#include "streamalg/value.hpp"

namespace streamalg {

// A state type S: sampleable, optionally finitely enumerable. Enumerations
// make extensional equality over State[S, M] exact instead of sampled.
struct StateSpace {
  std::string name;
  std::function<Value(Rng&)> sample;
  std::optional<std::vector<Value>> enumeration;
  std::function<bool(const Value&, const Value&)> equal =
      [](const Value& a, const Value& b) { return a == b; };
};

inline StateSpace singleton_space() {
  return StateSpace{"unit", [](Rng&) { return Value::unit(); },
                    std::vector<Value>{Value::unit()}};
}

inline StateSpace int_space(std::int64_t lo = -32, std::int64_t hi = 32) {
  return StateSpace{"int", [lo, hi](Rng& rng) { return Value::integer(rng.range(lo, hi)); },
                    std::nullopt};
}

inline StateSpace enumerated_space(std::string name, std::vector<Value> states) {
  auto states_copy = states;
  return StateSpace{std::move(name),
                    [states_copy](Rng& rng) { return states_copy[rng.below(states_copy.size())]; },
                    std::move(states)};
}

// State space whose elements are carrier elements of a monoid, as used by the
// generic decomposition (S = M).
inline StateSpace carrier_space(const MonoidSpec& m) {
  auto sample = [m](Rng& rng) { return m.sample_element(rng); };
  StateSpace s{"acc(" + m.name + ")", sample, std::nullopt};
  s.equal = m.equal;
  return s;
}

// Projections of an evaluated state element.
inline Value st(const Value& pair) { return pair.first(); }
inline Value out(const Value& pair) { return pair.second(); }

inline Value state_identity_element(const Value& out_identity) {
  return Value::fn([out_identity](const Value& s) { return Value::pair(s, out_identity); });
}

// Sequential chaining: run alpha, feed its state to beta, multiply outputs.
inline Value state_product(const MonoidSpec& output, const Value& alpha, const Value& beta) {
  auto prod = output.product;
  std::optional<std::vector<Value>> word;
  const auto& wa = alpha.fn_data().word;
  const auto& wb = beta.fn_data().word;
  if (wa && wb) {
    std::vector<Value> w = *wa;
    w.insert(w.end(), wb->begin(), wb->end());
    word = std::move(w);
  }
  return Value::fn(
      [alpha, beta, prod](const Value& s) {
        Value ra = alpha(s);
        Value rb = beta(st(ra));
        return Value::pair(st(rb), prod(out(ra), out(rb)));
      },
      std::move(word));
}

// How many states a sampled extensional comparison probes when the space has
// no finite enumeration.
inline constexpr int kExtensionalSamples = 48;
inline constexpr std::uint64_t kExtensionalSeed = 0x517cc1b727220a95ull;

// Extensional equality of state elements over S: exact on an enumeration,
// otherwise sampled with a fixed internal seed so equality stays a pure
// deterministic predicate.
inline bool ext_equal_quick(const StateSpace& space, const MonoidSpec& output, const Value& alpha,
                            const Value& beta, int samples = kExtensionalSamples) {
  auto check_state = [&](const Value& s) {
    Value ra = alpha(s);
    Value rb = beta(s);
    return space.equal(st(ra), st(rb)) && output.eq(out(ra), out(rb));
  };
  if (space.enumeration) {
    for (const auto& s : *space.enumeration)
      if (!check_state(s)) return false;
    return true;
  }
  Rng rng(kExtensionalSeed);
  for (int i = 0; i < samples; ++i)
    if (!check_state(space.sample(rng))) return false;
  return true;
}

// The State[S, M] monoid: hypotheticals s -> (s', m) under sequential
// chaining. Equality is extensional over the state space; the probe states
// are drawn once per monoid and shared across every comparison.
inline MonoidSpec state_monoid(const StateSpace& space, const MonoidSpec& output) {
  MonoidSpec m;
  m.name = "state(" + space.name + "," + output.name + ")";
  m.identity = state_identity_element(output.identity);
  MonoidSpec output_copy = output;
  m.product = [output_copy](const Value& a, const Value& b) {
    return state_product(output_copy, a, b);
  };
  StateSpace space_copy = space;
  auto probes = std::make_shared<std::vector<Value>>();
  if (space.enumeration) {
    *probes = *space.enumeration;
  }
  m.equal = [space_copy, output_copy, probes](const Value& a, const Value& b) {
    if (probes->empty()) {
      Rng rng(kExtensionalSeed);
      for (int i = 0; i < kExtensionalSamples; ++i) probes->push_back(space_copy.sample(rng));
    }
    for (const auto& s : *probes) {
      Value ra = a(s);
      Value rb = b(s);
      if (!space_copy.equal(st(ra), st(rb)) || !output_copy.eq(out(ra), out(rb))) return false;
    }
    return true;
  };
  m.sample_generator = [space_copy, output_copy](Rng& rng) {
    Value emitted = output_copy.sample_element(rng);
    if (rng.coin()) {
      // state-preserving hypothetical
      return Value::fn([emitted](const Value& s) { return Value::pair(s, emitted); });
    }
    Value next = space_copy.sample(rng);
    return Value::fn([next, emitted](const Value&) { return Value::pair(next, emitted); });
  };
  m.parts = {output};
  return m;
}

// Push-forward of a plain output transformation: rewrites only the emitted
// component, preserving the state trajectory.
inline Value push_forward(const std::function<Value(const Value&)>& g, const Value& alpha) {
  return Value::fn([g, alpha](const Value& s) {
    Value r = alpha(s);
    return Value::pair(st(r), g(out(r)));
  });
}

// g_* as a homomorphism State[S, M] -> State[S, N] (a homomorphism exactly
// when g is; check_homomorphism verifies extensionally).
inline HomSpec push_forward_hom(const HomSpec& g, const StateSpace& space) {
  auto apply = g.apply;
  return HomSpec{g.name + "_*", state_monoid(space, g.source), state_monoid(space, g.target),
                 [apply](const Value& alpha) { return push_forward(apply, alpha); },
                 {}};
}

// Budgeted extensional comparison with a witness: reports the first state on
// which the elements disagree.
inline LawReport ext_equal(const Value& alpha, const Value& beta, const StateSpace& space,
                           const MonoidSpec& output, int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("ext_equal: budget must be >= 1");
  LawReport report;
  report.subject = "ext_equal over " + space.name;
  report.seed = seed;
  Rng rng(seed);
  auto probe = [&](const Value& s) {
    ++report.cases_run;
    Value ra = alpha(s);
    Value rb = beta(s);
    if (!space.equal(st(ra), st(rb)) || !output.eq(out(ra), out(rb))) {
      report.fail("extensional-equality", {s},
                  "left " + ra.dump() + " vs right " + rb.dump());
      return false;
    }
    return true;
  };
  if (space.enumeration) {
    for (const auto& s : *space.enumeration)
      if (!probe(s)) return report;
    return report;
  }
  for (int i = 0; i < budget; ++i)
    if (!probe(space.sample(rng))) return report;
  return report;
}

}  // namespace streamalg
