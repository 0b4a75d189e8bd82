#pragma once

#include <cstdint>
#include <functional>
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

// A concrete representation P of the image of a homomorphism into a State
// monoid: phi embeds image elements into P, psi recovers them, and
// phi ; psi must be the identity on the image (extensionally).
struct Embedding {
  std::string name;
  MonoidSpec image;  // the State monoid carrying Img f
  MonoidSpec rep;    // the representation monoid P
  std::function<Value(const Value&)> phi;
  std::function<Value(const Value&)> psi;
};

// ---------------------------------------------------------------------------
// Defunctionalization: represent image elements as words of generator tags.
//
// State elements produced by a generator-table homomorphism carry their
// factorization as provenance words; phi translates those letters to tags and
// psi rebuilds the function by multiplying the tagged generator images.

inline Embedding defunctionalize(const HomSpec& f,
                                 const std::vector<std::pair<Value, std::string>>& tag_table) {
  if (!f.source.generators)
    throw std::invalid_argument("defunctionalize: source monoid must list its generators");

  struct TagEntry {
    Value generator;
    std::string tag;
    Value image;
  };
  std::vector<TagEntry> entries;
  for (const auto& [gen, tag] : tag_table) entries.push_back({gen, tag, f.apply(gen)});

  for (const auto& gen : *f.source.generators) {
    bool covered = false;
    for (const auto& e : entries)
      if (e.generator == gen) covered = true;
    if (!covered)
      throw std::invalid_argument("defunctionalize: missing generator mapping for " + gen.dump());
  }
  // Tags must separate the distinct image functions: same tag, same image;
  // different tags, different images.
  for (const auto& a : entries)
    for (const auto& b : entries) {
      bool same_image = f.target.eq(a.image, b.image);
      if (a.tag == b.tag && !same_image)
        throw std::invalid_argument("defunctionalize: tag " + a.tag +
                                    " covers extensionally distinct images");
      if (a.tag != b.tag && same_image)
        throw std::invalid_argument("defunctionalize: images of tags " + a.tag + " and " + b.tag +
                                    " coincide");
    }

  std::vector<Value> tags;
  for (const auto& e : entries) tags.push_back(Value::str(e.tag));
  tags = normalize_set(std::move(tags));
  auto tags_copy = tags;
  Alphabet tag_alphabet{"tag", [tags_copy](Rng& rng) { return tags_copy[rng.below(tags_copy.size())]; },
                        tags};

  Embedding e;
  e.name = "defunct " + f.name;
  e.image = f.target;
  e.rep = mk_list_monoid(tag_alphabet);

  auto entries_copy = entries;
  e.phi = [entries_copy](const Value& alpha) {
    const auto& word = alpha.fn_data().word;
    if (!word)
      throw std::invalid_argument("defunctionalize: element carries no factorization word");
    std::vector<Value> letters;
    for (const auto& gen : *word) {
      bool found = false;
      for (const auto& entry : entries_copy)
        if (entry.generator == gen) {
          letters.push_back(Value::str(entry.tag));
          found = true;
          break;
        }
      if (!found)
        throw std::invalid_argument("defunctionalize: unmapped generator letter " + gen.dump());
    }
    return Value::list(std::move(letters));
  };

  MonoidSpec image_copy = f.target;
  e.psi = [entries_copy, image_copy](const Value& word) {
    Value acc = Value::fn(
        [image_copy](const Value& s) { return Value::pair(s, image_copy.parts.at(0).identity); },
        std::vector<Value>{});
    for (const auto& tag : word.elems()) {
      const TagEntry* match = nullptr;
      for (const auto& entry : entries_copy)
        if (entry.tag == tag.as_str()) {
          match = &entry;
          break;
        }
      if (!match) throw std::invalid_argument("defunctionalize: unknown tag " + tag.dump());
      acc = image_copy.product(acc, match->image);
    }
    return acc;
  };
  return e;
}

// ---------------------------------------------------------------------------
// Bounded static variation: tabulate over a finite state enumeration.
//
// Tables are [state, [state', out]] rows in enumeration order. The product
// chases both rows eagerly for every start state, which is what lets
// independent workers multiply partial tables before any state arrives.

inline Value tabulate_element(const StateSpace& space, const Value& alpha) {
  std::vector<Value> rows;
  for (const auto& s : *space.enumeration) rows.push_back(Value::pair(s, alpha(s)));
  return Value::list(std::move(rows));
}

inline MonoidSpec tabulated_monoid(const StateSpace& space, const MonoidSpec& output) {
  if (!space.enumeration)
    throw std::invalid_argument("tabulate: state space " + space.name +
                                " has no finite enumeration");
  MonoidSpec t;
  t.name = "table(" + space.name + "," + output.name + ")";
  StateSpace space_copy = space;
  MonoidSpec out_copy = output;

  auto lookup = [space_copy](const Value& table, const Value& s) {
    for (const auto& row : table.elems())
      if (space_copy.equal(row.first(), s)) return row.second();
    throw std::runtime_error("tabulated element: state missing from table");
  };

  t.identity = tabulate_element(space, state_identity_element(output.identity));
  t.product = [lookup, space_copy, out_copy](const Value& x, const Value& y) {
    std::vector<Value> rows;
    for (const auto& s : *space_copy.enumeration) {
      Value first = lookup(x, s);
      Value second = lookup(y, st(first));
      rows.push_back(
          Value::pair(s, Value::pair(st(second), out_copy.product(out(first), out(second)))));
    }
    return Value::list(std::move(rows));
  };
  t.equal = [space_copy, out_copy](const Value& x, const Value& y) {
    const auto& xs = x.elems();
    const auto& ys = y.elems();
    if (xs.size() != ys.size()) return false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!space_copy.equal(xs[i].first(), ys[i].first())) return false;
      if (!space_copy.equal(st(xs[i].second()), st(ys[i].second()))) return false;
      if (!out_copy.eq(out(xs[i].second()), out(ys[i].second()))) return false;
    }
    return true;
  };
  MonoidSpec st_m = state_monoid(space, output);
  auto gen = st_m.sample_generator;
  t.sample_generator = [gen, space_copy](Rng& rng) {
    return tabulate_element(space_copy, gen(rng));
  };
  t.parts = {output};
  return t;
}

inline Embedding tabulate(const StateSpace& space, const MonoidSpec& output) {
  Embedding e;
  e.name = "tabulate(" + space.name + ")";
  e.image = state_monoid(space, output);
  e.rep = tabulated_monoid(space, output);
  StateSpace space_copy = space;
  e.phi = [space_copy](const Value& alpha) { return tabulate_element(space_copy, alpha); };
  e.psi = [space_copy](const Value& table) {
    return Value::fn([space_copy, table](const Value& s) {
      for (const auto& row : table.elems())
        if (space_copy.equal(row.first(), s)) return row.second();
      throw std::runtime_error("tabulated element: state missing from table");
    });
  };
  return e;
}

// State[{*}, N] is isomorphic to N itself: stateless processors can ship
// plain output elements.
inline Embedding trivial_state_collapse(const MonoidSpec& output,
                                        const StateSpace& space = singleton_space()) {
  if (!space.enumeration || space.enumeration->size() != 1)
    throw std::invalid_argument("trivial_state_collapse: state space must be a singleton");
  Embedding e;
  e.name = "collapse(" + output.name + ")";
  e.image = state_monoid(space, output);
  e.rep = output;
  Value star = space.enumeration->front();
  e.phi = [star](const Value& alpha) { return out(alpha(star)); };
  e.psi = [](const Value& n) {
    return Value::fn([n](const Value& s) { return Value::pair(s, n); });
  };
  return e;
}

// ---------------------------------------------------------------------------
// Embedding law suite: psi after phi is the identity on sampled image
// elements, and both directions preserve products.

inline LawReport check_embedding(const Embedding& e, const std::function<Value(Rng&)>& sample_image,
                                 int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("check_embedding: budget must be >= 1");
  LawReport report;
  report.subject = e.name;
  report.seed = seed;
  Rng rng(seed);
  for (int i = 0; i < budget; ++i) {
    Value alpha = sample_image(rng);
    Value beta = sample_image(rng);
    ++report.cases_run;
    if (!e.image.eq(e.psi(e.phi(alpha)), alpha)) {
      report.fail("phi;psi = id", {alpha});
      break;
    }
    if (!e.rep.eq(e.phi(e.image.product(alpha, beta)), e.rep.product(e.phi(alpha), e.phi(beta)))) {
      report.fail("phi preserves products", {alpha, beta});
      break;
    }
    Value p = e.phi(alpha);
    Value q = e.phi(beta);
    if (!e.image.eq(e.psi(e.rep.product(p, q)), e.image.product(e.psi(p), e.psi(q)))) {
      report.fail("psi preserves products", {p, q});
      break;
    }
  }
  return report;
}

}  // namespace streamalg
