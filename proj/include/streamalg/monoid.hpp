#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "streamalg/report.hpp"
#include "streamalg/rng.hpp"
#include "streamalg/value.hpp"

namespace streamalg {

struct MonoidFlags {
  bool commutative = false;
  bool idempotent = false;
  bool left_cancellative = false;
  bool group = false;
};

// A finite or sampleable universe of raw elements, used as the alphabet of
// free monoids and the universe of set monoids.
struct Alphabet {
  std::string name;
  std::function<Value(Rng&)> sample;
  std::optional<std::vector<Value>> enumeration;
};

// First-class runtime description of a monoid. Everything downstream — law
// suites, the equivalence oracle, the CLI — works through this interface, so
// products must return canonical forms and `equal` must be total on them.
struct MonoidSpec {
  std::string name;
  Value identity;
  std::function<Value(const Value&, const Value&)> product;
  std::function<bool(const Value&, const Value&)> equal =
      [](const Value& a, const Value& b) { return a == b; };
  std::function<Value(Rng&)> sample_generator;
  std::optional<std::vector<Value>> generators;  // finite generator list, when known
  MonoidFlags flags;
  std::function<Value(const Value&)> inverse;  // set iff flags.group

  // Generator presentation of an element as (generator, multiplicity) terms;
  // required of tensor factors. Order follows the canonical form.
  std::function<std::vector<std::pair<Value, std::int64_t>>(const Value&)> decompose;

  // Ordered factorization into generator-sized letters, used for chunked
  // streaming checks. Product of the letters must reproduce the element.
  std::function<std::vector<Value>(const Value&)> to_word;

  // Factor specs of derived monoids (direct/tensor products, ticked, state).
  std::vector<MonoidSpec> parts;

  bool eq(const Value& a, const Value& b) const { return equal(a, b); }

  // Random element: a product of geometrically-many sampled generators.
  Value sample_element(Rng& rng) const {
    Value acc = identity;
    std::size_t n = rng.geometric();
    for (std::size_t i = 0; i < n; ++i) acc = product(acc, sample_generator(rng));
    return acc;
  }
};

// A named map between monoids. `apply` must preserve identity and products;
// check_homomorphism validates that on samples.
struct HomSpec {
  std::string name;
  MonoidSpec source;
  MonoidSpec target;
  std::function<Value(const Value&)> apply;
  // Optional generator table (source generator -> target element); consumed by
  // defunctionalization.
  std::vector<std::pair<Value, Value>> generator_table;
};

inline HomSpec identity_hom(const MonoidSpec& m) {
  return HomSpec{"id", m, m, [](const Value& v) { return v; }, {}};
}

// Diagrammatic composition: apply f, then g.
inline HomSpec hom_compose(const HomSpec& f, const HomSpec& g) {
  if (f.target.name != g.source.name)
    throw std::invalid_argument("hom_compose: " + f.name + " ; " + g.name +
                                " — target " + f.target.name + " != source " + g.source.name);
  auto fa = f.apply;
  auto ga = g.apply;
  return HomSpec{f.name + ";" + g.name, f.source, g.target,
                 [fa, ga](const Value& v) { return ga(fa(v)); }, {}};
}

// ---------------------------------------------------------------------------
// Base monoids

// Free monoid over an alphabet: lists under concatenation.
inline MonoidSpec mk_list_monoid(const Alphabet& alphabet) {
  MonoidSpec m;
  m.name = "list(" + alphabet.name + ")";
  m.identity = Value::list({});
  m.product = [](const Value& a, const Value& b) {
    std::vector<Value> xs = a.elems();
    const auto& ys = b.elems();
    xs.insert(xs.end(), ys.begin(), ys.end());
    return Value::list(std::move(xs));
  };
  auto sample = alphabet.sample;
  m.sample_generator = [sample](Rng& rng) { return Value::list({sample(rng)}); };
  if (alphabet.enumeration) {
    std::vector<Value> gens;
    for (const auto& a : *alphabet.enumeration) gens.push_back(Value::list({a}));
    m.generators = std::move(gens);
  }
  m.flags.left_cancellative = true;
  m.to_word = [](const Value& v) {
    std::vector<Value> letters;
    for (const auto& x : v.elems()) letters.push_back(Value::list({x}));
    return letters;
  };
  return m;
}

// Powerset monoid: canonical sorted sets under union.
inline MonoidSpec mk_set_monoid(const Alphabet& universe) {
  MonoidSpec m;
  m.name = "set(" + universe.name + ")";
  m.identity = Value::list({});
  m.product = [](const Value& a, const Value& b) {
    std::vector<Value> xs = a.elems();
    const auto& ys = b.elems();
    xs.insert(xs.end(), ys.begin(), ys.end());
    return Value::list(normalize_set(std::move(xs)));
  };
  auto sample = universe.sample;
  m.sample_generator = [sample](Rng& rng) { return Value::list({sample(rng)}); };
  if (universe.enumeration) {
    std::vector<Value> gens;
    for (const auto& a : *universe.enumeration) gens.push_back(Value::list({a}));
    m.generators = std::move(gens);
  }
  m.flags.commutative = true;
  m.flags.idempotent = true;
  m.decompose = [](const Value& v) {
    std::vector<std::pair<Value, std::int64_t>> terms;
    for (const auto& x : v.elems()) terms.emplace_back(Value::list({x}), 1);
    return terms;
  };
  m.to_word = [](const Value& v) {
    std::vector<Value> letters;
    for (const auto& x : v.elems()) letters.push_back(Value::list({x}));
    return letters;
  };
  return m;
}

// Integers under addition.
inline MonoidSpec int_add_group(std::int64_t sample_lo = -8, std::int64_t sample_hi = 8) {
  MonoidSpec m;
  m.name = "int";
  m.identity = Value::integer(0);
  m.product = [](const Value& a, const Value& b) { return Value::integer(a.as_int() + b.as_int()); };
  m.sample_generator = [sample_lo, sample_hi](Rng& rng) {
    return Value::integer(rng.range(sample_lo, sample_hi));
  };
  m.flags.commutative = true;
  m.flags.group = true;
  m.flags.left_cancellative = true;
  m.inverse = [](const Value& a) { return Value::integer(-a.as_int()); };
  m.decompose = [](const Value& v) {
    std::vector<std::pair<Value, std::int64_t>> terms;
    std::int64_t n = v.as_int();
    if (n > 0) terms.emplace_back(Value::integer(1), n);
    if (n < 0) terms.emplace_back(Value::integer(-1), -n);
    return terms;
  };
  m.to_word = [](const Value& v) {
    std::vector<Value> letters;
    std::int64_t n = v.as_int();
    for (std::int64_t i = 0; i < (n < 0 ? -n : n); ++i)
      letters.push_back(Value::integer(n < 0 ? -1 : 1));
    return letters;
  };
  return m;
}

// ({false, true}, or, false).
inline MonoidSpec bool_join_monoid() {
  MonoidSpec m;
  m.name = "bool";
  m.identity = Value::boolean(false);
  m.product = [](const Value& a, const Value& b) { return Value::boolean(a.as_bool() || b.as_bool()); };
  m.sample_generator = [](Rng& rng) { return Value::boolean(rng.coin()); };
  m.generators = std::vector<Value>{Value::boolean(true)};
  m.flags.commutative = true;
  m.flags.idempotent = true;
  m.to_word = [](const Value& v) {
    std::vector<Value> letters;
    if (v.as_bool()) letters.push_back(Value::boolean(true));
    return letters;
  };
  return m;
}

// ---------------------------------------------------------------------------
// Derived monoids

inline MonoidSpec direct_product(const MonoidSpec& m, const MonoidSpec& n) {
  MonoidSpec p;
  p.name = "prod(" + m.name + "," + n.name + ")";
  p.identity = Value::pair(m.identity, n.identity);
  auto mp = m.product;
  auto np = n.product;
  p.product = [mp, np](const Value& a, const Value& b) {
    return Value::pair(mp(a.first(), b.first()), np(a.second(), b.second()));
  };
  auto me = m.equal;
  auto ne = n.equal;
  p.equal = [me, ne](const Value& a, const Value& b) {
    return me(a.first(), b.first()) && ne(a.second(), b.second());
  };
  auto mg = m.sample_generator;
  auto ng = n.sample_generator;
  Value mid = m.identity;
  Value nid = n.identity;
  p.sample_generator = [mg, ng, mid, nid](Rng& rng) {
    // Generators of M x N have one trivial component.
    return rng.coin() ? Value::pair(mg(rng), nid) : Value::pair(mid, ng(rng));
  };
  if (m.generators && n.generators) {
    std::vector<Value> gens;
    for (const auto& g : *m.generators) gens.push_back(Value::pair(g, nid));
    for (const auto& g : *n.generators) gens.push_back(Value::pair(mid, g));
    p.generators = std::move(gens);
  }
  p.flags.commutative = m.flags.commutative && n.flags.commutative;
  p.flags.idempotent = m.flags.idempotent && n.flags.idempotent;
  p.flags.left_cancellative = m.flags.left_cancellative && n.flags.left_cancellative;
  p.flags.group = m.flags.group && n.flags.group;
  if (p.flags.group) {
    auto mi = m.inverse;
    auto ni = n.inverse;
    p.inverse = [mi, ni](const Value& a) { return Value::pair(mi(a.first()), ni(a.second())); };
  }
  p.to_word = [mid, nid](const Value& v) {
    std::vector<Value> letters;
    if (v.first() != mid) letters.push_back(Value::pair(v.first(), nid));
    if (v.second() != nid) letters.push_back(Value::pair(mid, v.second()));
    return letters;
  };
  p.parts = {m, n};
  return p;
}

namespace detail {

// Canonical bag of generator pairs, sorted by pair; idempotent mode clamps
// multiplicities to one. Entries are [pair, count].
inline Value tensor_canonical(std::vector<std::pair<Value, std::int64_t>> terms, bool idem) {
  std::map<Value, std::int64_t> bag;
  for (auto& [pair, count] : terms) {
    if (count <= 0) continue;
    bag[pair] += count;
  }
  std::vector<Value> entries;
  entries.reserve(bag.size());
  for (auto& [pair, count] : bag)
    entries.push_back(Value::pair(pair, Value::integer(idem ? 1 : count)));
  return Value::list(std::move(entries));
}

}  // namespace detail

// Tensor product of commutative, generator-presented monoids: canonical bags
// of generator pairs under bag union (set union when both are idempotent).
inline MonoidSpec tensor_product(const MonoidSpec& m, const MonoidSpec& n) {
  if (!m.flags.commutative || !n.flags.commutative)
    throw std::invalid_argument("tensor_product: factors must be commutative (" + m.name + ", " +
                                n.name + ")");
  if (!m.decompose || !n.decompose)
    throw std::invalid_argument("tensor_product: factors must be generator-presented");
  MonoidSpec t;
  const bool idem = m.flags.idempotent && n.flags.idempotent;
  t.name = "tensor(" + m.name + "," + n.name + ")";
  t.identity = Value::list({});
  t.product = [idem](const Value& a, const Value& b) {
    std::vector<std::pair<Value, std::int64_t>> terms;
    for (const auto& e : a.elems()) terms.emplace_back(e.first(), e.second().as_int());
    for (const auto& e : b.elems()) terms.emplace_back(e.first(), e.second().as_int());
    return detail::tensor_canonical(std::move(terms), idem);
  };
  // Sampled entries are pairs of presentation atoms, so structural equality
  // on bags coincides with equality in the tensor.
  auto atom_of = [](const MonoidSpec& factor) {
    auto gen = factor.sample_generator;
    auto decompose = factor.decompose;
    Value id = factor.identity;
    return [gen, decompose, id](Rng& rng) {
      auto atoms = decompose(gen(rng));
      if (atoms.empty()) return id;
      return atoms[rng.below(atoms.size())].first;
    };
  };
  auto ma = atom_of(m);
  auto na = atom_of(n);
  Value mid = m.identity;
  Value nid = n.identity;
  auto meq = m.equal;
  auto neq = n.equal;
  t.sample_generator = [ma, na, idem, mid, nid, meq, neq](Rng& rng) {
    Value a = ma(rng);
    Value b = na(rng);
    if (meq(a, mid) || neq(b, nid)) return Value::list({});  // eps (x) n = eps
    return detail::tensor_canonical({{Value::pair(a, b), 1}}, idem);
  };
  t.flags.commutative = true;
  t.flags.idempotent = idem;
  t.decompose = [](const Value& v) {
    std::vector<std::pair<Value, std::int64_t>> terms;
    for (const auto& e : v.elems())
      terms.emplace_back(Value::list({Value::pair(e.first(), Value::integer(1))}),
                         e.second().as_int());
    return terms;
  };
  t.to_word = [](const Value& v) {
    std::vector<Value> letters;
    for (const auto& e : v.elems()) letters.push_back(Value::list({e}));
    return letters;
  };
  t.parts = {m, n};
  return t;
}

// Bilinear embedding (m, n) -> m (x) n, expanded over the factors' generator
// presentations. Not a homomorphism — that failure is the Pairs example.
inline Value tensor_embed(const MonoidSpec& tensor, const Value& m, const Value& n) {
  const MonoidSpec& mf = tensor.parts.at(0);
  const MonoidSpec& nf = tensor.parts.at(1);
  std::vector<std::pair<Value, std::int64_t>> terms;
  for (const auto& [a, i] : mf.decompose(m))
    for (const auto& [b, j] : nf.decompose(n)) terms.emplace_back(Value::pair(a, b), i * j);
  return detail::tensor_canonical(std::move(terms), tensor.flags.idempotent);
}

// ---------------------------------------------------------------------------
// Ticked streams T[M] = M * B: alternating normal form m0 T m1 T ... T mk,
// stored as the segment list [m0, ..., mk] (k ticks). Interior segments are
// never the identity; an identity segment arising between two ticks collapses
// them (T v T = T), which is the only way a tick disappears.

inline MonoidSpec ticked(const MonoidSpec& m) {
  MonoidSpec t;
  t.name = "ticked(" + m.name + ")";
  t.identity = Value::list({m.identity});
  auto mp = m.product;
  auto meq = m.equal;
  Value mid = m.identity;
  t.product = [mp, meq, mid](const Value& a, const Value& b) {
    const auto& xs = a.elems();
    const auto& ys = b.elems();
    std::vector<Value> merged(xs.begin(), xs.end() - 1);
    Value boundary = mp(xs.back(), ys.front());
    // T eps T -> T: a boundary segment that vanishes between two ticks takes
    // one of them with it; end segments may stay empty.
    bool interior = xs.size() > 1 && ys.size() > 1;
    if (!(interior && meq(boundary, mid))) merged.push_back(boundary);
    merged.insert(merged.end(), ys.begin() + 1, ys.end());
    return Value::list(std::move(merged));
  };
  auto me = m.equal;
  t.equal = [me](const Value& a, const Value& b) {
    const auto& xs = a.elems();
    const auto& ys = b.elems();
    if (xs.size() != ys.size()) return false;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (!me(xs[i], ys[i])) return false;
    return true;
  };
  auto mg = m.sample_generator;
  t.sample_generator = [mg, mid](Rng& rng) {
    if (rng.below(4) == 0) return Value::list({mid, mid});  // a bare tick
    return Value::list({mg(rng)});
  };
  t.to_word = [mid](const Value& v) {
    std::vector<Value> letters;
    const auto& segs = v.elems();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (i > 0) letters.push_back(Value::list({mid, mid}));
      if (!(segs[i] == mid)) letters.push_back(Value::list({segs[i]}));
    }
    return letters;
  };
  t.parts = {m};
  return t;
}

// Lifts an M element into T[M] as a single segment.
inline Value ticked_embed(const Value& m) { return Value::list({m}); }

// The tick letter of T[M].
inline Value tick(const MonoidSpec& m) { return Value::list({m.identity, m.identity}); }

// ---------------------------------------------------------------------------
// Law suites

inline LawReport check_monoid_laws(const MonoidSpec& m, int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("check_monoid_laws: budget must be >= 1");
  LawReport report;
  report.subject = m.name;
  report.seed = seed;
  Rng rng(seed);
  // Mix word samples with raw generators so a defective product cannot hide
  // behind sampling that itself goes through the product.
  auto draw = [&m](Rng& r) {
    return r.coin() ? m.sample_generator(r) : m.sample_element(r);
  };
  for (int i = 0; i < budget; ++i) {
    Value a = draw(rng);
    Value b = draw(rng);
    Value c = draw(rng);
    ++report.cases_run;
    if (!m.eq(m.product(m.identity, a), a)) report.fail("left-identity", {a});
    if (!m.eq(m.product(a, m.identity), a)) report.fail("right-identity", {a});
    if (!m.eq(m.product(m.product(a, b), c), m.product(a, m.product(b, c))))
      report.fail("associativity", {a, b, c});
    if (m.flags.commutative && !m.eq(m.product(a, b), m.product(b, a)))
      report.fail("commutativity", {a, b});
    if (m.flags.idempotent && !m.eq(m.product(a, a), a)) report.fail("idempotence", {a});
    if (m.flags.group) {
      if (!m.eq(m.product(a, m.inverse(a)), m.identity)) report.fail("right-inverse", {a});
      if (!m.eq(m.product(m.inverse(a), a), m.identity)) report.fail("left-inverse", {a});
    }
    if (!report.failures.empty()) break;
  }
  return report;
}

inline LawReport check_homomorphism(const HomSpec& f, int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("check_homomorphism: budget must be >= 1");
  LawReport report;
  report.subject = f.name;
  report.seed = seed;
  Rng rng(seed);
  if (!f.target.eq(f.apply(f.source.identity), f.target.identity)) {
    report.cases_run = 1;
    report.fail("identity-preservation", {f.source.identity});
    return report;
  }
  for (int i = 0; i < budget; ++i) {
    Value a = f.source.sample_element(rng);
    Value b = f.source.sample_element(rng);
    ++report.cases_run;
    if (!f.target.eq(f.apply(f.source.product(a, b)), f.target.product(f.apply(a), f.apply(b)))) {
      report.fail("product-preservation", {a, b});
      break;
    }
  }
  return report;
}

}  // namespace streamalg
