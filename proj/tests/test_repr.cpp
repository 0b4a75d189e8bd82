#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "streamalg/examples.hpp"
#include "streamalg/repr.hpp"

using namespace streamalg;
using namespace streamalg::testing;

namespace {

Value bitpair(std::int64_t a, std::int64_t b) {
  return Value::list({Value::pair(vi(a), vi(b))});
}

std::vector<std::pair<Value, std::string>> adder_tags() {
  return {{bitpair(0, 0), "x"}, {bitpair(0, 1), "y"}, {bitpair(1, 0), "y"}, {bitpair(1, 1), "z"}};
}

Value tags(std::vector<std::string> ts) {
  std::vector<Value> vs;
  for (const auto& t : ts) vs.push_back(Value::str(t));
  return Value::list(std::move(vs));
}

}  // namespace

TEST_CASE("defunctionalized adder words") {
  Processor adder = adder_processor();
  HomSpec f = adder.hom_spec();
  Embedding e = defunctionalize(f, adder_tags());

  SUBCASE("generator images map to their tags") {
    CHECK(e.phi(f.apply(bitpair(0, 0))) == tags({"x"}));
    CHECK(e.phi(f.apply(bitpair(0, 1))) == tags({"y"}));
    CHECK(e.phi(f.apply(bitpair(1, 0))) == tags({"y"}));
    CHECK(e.phi(f.apply(bitpair(1, 1))) == tags({"z"}));
  }

  SUBCASE("identity maps to the empty word") {
    CHECK(e.phi(f.apply(f.source.identity)) == Value::list({}));
  }

  SUBCASE("products become concatenated words") {
    Value in = Value::list({Value::pair(vi(0), vi(1)), Value::pair(vi(0), vi(0)),
                            Value::pair(vi(1), vi(1))});
    CHECK(e.phi(f.apply(in)) == tags({"y", "x", "z"}));
  }

  SUBCASE("round-trips extensionally on sampled inputs") {
    Rng rng(120);
    for (int i = 0; i < 500; ++i) {
      Value m = f.source.sample_element(rng);
      Value alpha = f.apply(m);
      CHECK(e.image.eq(e.psi(e.phi(alpha)), alpha));
    }
  }

  SUBCASE("the embedding law suite passes") {
    HomSpec f_copy = f;
    auto sample = [f_copy](Rng& rng) { return f_copy.apply(f_copy.source.sample_element(rng)); };
    CHECK(check_embedding(e, sample, 300, 121).passed());
  }

  SUBCASE("a psi with swapped tags is caught with a witness") {
    Embedding broken = e;
    auto original_psi = e.psi;
    broken.psi = [original_psi](const Value& word) {
      std::vector<Value> swapped;
      for (const auto& t : word.elems()) {
        if (t.as_str() == "x")
          swapped.push_back(Value::str("z"));
        else if (t.as_str() == "z")
          swapped.push_back(Value::str("x"));
        else
          swapped.push_back(t);
      }
      return original_psi(Value::list(std::move(swapped)));
    };
    HomSpec f_copy = f;
    auto sample = [f_copy](Rng& rng) { return f_copy.apply(f_copy.source.sample_element(rng)); };
    LawReport r = check_embedding(broken, sample, 300, 122);
    REQUIRE_FALSE(r.passed());
    CHECK(r.failures.front().law == "phi;psi = id");
  }

  SUBCASE("missing generator mappings are rejected") {
    auto incomplete = adder_tags();
    incomplete.pop_back();
    CHECK_THROWS_AS(defunctionalize(f, incomplete), std::invalid_argument);
  }

  SUBCASE("words serialize to JSON and back byte-exactly") {
    Value word = tags({"y", "x", "z", "y"});
    std::string serialized = word.to_json().dump();
    Value reparsed = Value::from_json(nlohmann::json::parse(serialized));
    CHECK(reparsed.to_json().dump() == serialized);
    CHECK(reparsed == word);
  }
}

TEST_CASE("tabulated adder elements") {
  Processor adder = adder_processor();
  HomSpec f = adder.hom_spec();
  Embedding e = tabulate(adder.states, adder.output);

  SUBCASE("the worked table") {
    Value in = Value::list({Value::pair(vi(0), vi(1)), Value::pair(vi(0), vi(0)),
                            Value::pair(vi(1), vi(1))});
    Value table = e.phi(f.apply(in));
    Value expected = Value::list({
        Value::pair(vi(0), Value::pair(vi(1), vlist({1, 0, 0}))),
        Value::pair(vi(1), Value::pair(vi(1), vlist({0, 1, 0}))),
    });
    CHECK(table == expected);
  }

  SUBCASE("identity tabulates to the identity table") {
    CHECK(e.phi(f.apply(f.source.identity)) == e.rep.identity);
  }

  SUBCASE("table product equals compose-then-tabulate, exhaustively over carries") {
    Rng rng(123);
    for (int i = 0; i < 300; ++i) {
      Value alpha = f.apply(f.source.sample_element(rng));
      Value beta = f.apply(f.source.sample_element(rng));
      // the two-state enumeration makes rep equality exact
      CHECK(e.rep.eq(e.rep.product(e.phi(alpha), e.phi(beta)),
                     e.phi(e.image.product(alpha, beta))));
    }
  }

  SUBCASE("the embedding law suite passes") {
    HomSpec f_copy = f;
    auto sample = [f_copy](Rng& rng) { return f_copy.apply(f_copy.source.sample_element(rng)); };
    CHECK(check_embedding(e, sample, 300, 124).passed());
  }

  SUBCASE("chunked tabulation merges to the whole-input table") {
    Rng rng(125);
    for (int trial = 0; trial < 200; ++trial) {
      Value m = f.source.sample_element(rng);
      Value whole = e.phi(f.apply(m));
      for (std::size_t k = 2; k <= 4; ++k) {
        const auto& word = m.elems();
        std::vector<Value> chunks(k, f.source.identity);
        for (std::size_t i = 0; i < word.size(); ++i) {
          std::size_t bucket = word.size() ? std::min(k - 1, i * k / std::max<std::size_t>(word.size(), 1)) : 0;
          chunks[bucket] = f.source.product(chunks[bucket], Value::list({word[i]}));
        }
        Value merged = e.rep.identity;
        for (const auto& chunk : chunks) merged = e.rep.product(merged, e.phi(f.apply(chunk)));
        CHECK(e.rep.eq(merged, whole));
      }
    }
  }

  SUBCASE("tables serialize to JSON and back byte-exactly") {
    Rng rng(126);
    Value table = e.phi(f.apply(f.source.sample_element(rng)));
    std::string serialized = table.to_json().dump();
    Value reparsed = Value::from_json(nlohmann::json::parse(serialized));
    CHECK(reparsed.to_json().dump() == serialized);
    CHECK(e.rep.eq(reparsed, table));
  }

  SUBCASE("unenumerated spaces are rejected") {
    CHECK_THROWS_AS(tabulate(int_space(), adder.output), std::invalid_argument);
  }
}

TEST_CASE("tabulated monoid laws on a four-state space") {
  StateSpace four = enumerated_space("mod4", {vi(0), vi(1), vi(2), vi(3)});
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  MonoidSpec table_monoid = tabulated_monoid(four, lists);
  CHECK(check_monoid_laws(table_monoid, 300, 127).passed());

  Embedding e = tabulate(four, lists);
  MonoidSpec st_m = state_monoid(four, lists);
  Rng rng(128);
  for (int i = 0; i < 200; ++i) {
    Value alpha = st_m.sample_element(rng);
    Value beta = st_m.sample_element(rng);
    // psi of the table product matches the functional product at every state
    Value via_tables = e.psi(e.rep.product(e.phi(alpha), e.phi(beta)));
    CHECK(st_m.eq(via_tables, st_m.product(alpha, beta)));
  }
}

TEST_CASE("stateless processors collapse to their output monoid") {
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  MonoidSpec sets = mk_set_monoid(small_int_alphabet());
  HomSpec flatten{"flatten", lists, sets,
                  [](const Value& v) { return Value::list(normalize_set(v.elems())); }};
  Processor p = pure(flatten);
  Embedding e = trivial_state_collapse(p.output);

  Rng rng(129);
  for (int i = 0; i < 200; ++i) {
    Value m = lists.sample_element(rng);
    // a pure processor's hypothetical collapses to exactly its output
    CHECK(e.phi(p.hom(m)) == run(p, m));
  }
  CHECK(e.phi(e.image.identity) == sets.identity);

  auto sample = [&p, &lists](Rng& rng2) { return p.hom(lists.sample_element(rng2)); };
  CHECK(check_embedding(e, sample, 300, 130).passed());

  CHECK_THROWS_AS(trivial_state_collapse(sets, enumerated_space("two", {vi(0), vi(1)})),
                  std::invalid_argument);
}
