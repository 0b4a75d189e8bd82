#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "streamalg/monoid.hpp"

using namespace streamalg;
using namespace streamalg::testing;

TEST_CASE("list monoid: concatenation and identity") {
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  CHECK(lists.product(vlist({1}), vlist({2, 3})) == vlist({1, 2, 3}));
  CHECK(lists.product(vlist({}), vlist({5})) == vlist({5}));
  CHECK(lists.identity == vlist({}));
  CHECK(check_monoid_laws(lists, 1000, 42).passed());
}

TEST_CASE("set monoid: union, idempotence, identity") {
  MonoidSpec sets = mk_set_monoid(letter_alphabet());
  CHECK(sets.product(vset({"a"}), vset({"b"})) == vset({"a", "b"}));
  CHECK(sets.product(vset({"a"}), vset({"a"})) == vset({"a"}));
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Value x = sets.sample_element(rng);
    CHECK(sets.product(sets.identity, x) == x);
  }
  CHECK(check_monoid_laws(sets, 1000, 43).passed());
}

TEST_CASE("integer additive group") {
  MonoidSpec ints = int_add_group();
  CHECK(ints.product(vi(2), vi(3)) == vi(5));
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    Value a = ints.sample_element(rng);
    CHECK(ints.product(a, ints.inverse(a)) == vi(0));
  }
  CHECK(ints.product(vi(0), vi(17)) == vi(17));
  CHECK(ints.flags.group);
  CHECK(check_monoid_laws(ints, 1000, 44).passed());
}

TEST_CASE("direct product multiplies componentwise") {
  MonoidSpec sets = mk_set_monoid(letter_alphabet());
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  MonoidSpec p = direct_product(sets, lists);
  Value left = Value::pair(vset({"a"}), vlist({1}));
  Value right = Value::pair(vset({"b"}), vlist({2}));
  CHECK(p.product(left, right) == Value::pair(vset({"a", "b"}), vlist({1, 2})));
  CHECK(p.identity == Value::pair(sets.identity, lists.identity));
  CHECK_FALSE(p.flags.commutative);  // list factor is not commutative
  CHECK(check_monoid_laws(p, 500, 45).passed());
}

TEST_CASE("direct product: one-sided elements commute even for non-commutative factors") {
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  MonoidSpec p = direct_product(lists, lists);
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    Value m = lists.sample_element(rng);
    Value n = lists.sample_element(rng);
    Value lhs = p.product(Value::pair(m, lists.identity), Value::pair(lists.identity, n));
    Value rhs = p.product(Value::pair(lists.identity, n), Value::pair(m, lists.identity));
    CHECK(p.eq(lhs, rhs));
  }
}

TEST_CASE("tensor product expands bilinearly") {
  MonoidSpec sets = mk_set_monoid(letter_alphabet());
  MonoidSpec t = tensor_product(sets, sets);

  SUBCASE("three-generator sum against three-generator sum has nine terms") {
    Value m = vset({"a", "b", "c"});
    Value n = vset({"c", "d", "e"});
    Value embedded = tensor_embed(t, m, n);
    CHECK(embedded.size() == 9);
    CHECK(check_monoid_laws(t, 500, 46).passed());
  }

  SUBCASE("identity relation: eps (x) n collapses") {
    Value n = vset({"a", "b"});
    CHECK(tensor_embed(t, sets.identity, n) == t.identity);
    CHECK(tensor_embed(t, n, sets.identity) == t.identity);
  }

  SUBCASE("idempotent factors give set semantics") {
    Value got = tensor_embed(t, vset({"a", "b"}), vset({"c"}));
    Value want = Value::list({Value::pair(Value::pair(vset({"a"}), vset({"c"})), vi(1)),
                              Value::pair(Value::pair(vset({"b"}), vset({"c"})), vi(1))});
    CHECK(got == want);
    CHECK(t.flags.idempotent);
    // adding the same embedded element again is absorbed
    CHECK(t.product(got, got) == got);
  }

  SUBCASE("non-commutative factors are rejected") {
    MonoidSpec lists = mk_list_monoid(small_int_alphabet());
    CHECK_THROWS_AS(tensor_product(lists, sets), std::invalid_argument);
  }

  SUBCASE("normalization is confluent across term orders") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
      Value a = t.sample_element(rng);
      Value b = t.sample_element(rng);
      Value c = t.sample_element(rng);
      Value left = t.product(t.product(a, b), c);
      Value right = t.product(c, t.product(b, a));  // commutative: any order agrees
      CHECK(left == right);
    }
  }
}

TEST_CASE("ticked streams keep alternating normal form") {
  MonoidSpec sets = mk_set_monoid(letter_alphabet());
  MonoidSpec t = ticked(sets);
  Value m1 = vset({"a"});
  Value m2 = vset({"b"});

  SUBCASE("adjacent ticks collapse") {
    Value left = Value::list({m1, sets.identity});   // m1 T
    Value right = Value::list({sets.identity, m2});  // T m2
    CHECK(t.product(left, right) == Value::list({m1, m2}));
  }

  SUBCASE("segments merge across a plain boundary") {
    Value left = Value::list({m1, sets.identity});
    Value right = Value::list({m2, sets.identity});
    CHECK(t.product(left, right) == Value::list({m1, m2, sets.identity}));
  }

  SUBCASE("identity") {
    Rng rng(19);
    for (int i = 0; i < 100; ++i) {
      Value x = t.sample_element(rng);
      CHECK(t.eq(t.product(t.identity, x), x));
      CHECK(t.eq(t.product(x, t.identity), x));
    }
  }

  SUBCASE("associativity on random triples") {
    Rng rng(23);
    for (int i = 0; i < 1000; ++i) {
      Value a = t.sample_element(rng);
      Value b = t.sample_element(rng);
      Value c = t.sample_element(rng);
      CHECK(t.eq(t.product(t.product(a, b), c), t.product(a, t.product(b, c))));
    }
  }
}

TEST_CASE("law checker flags a broken product") {
  MonoidSpec broken = mk_list_monoid(small_int_alphabet());
  broken.name = "broken-list";
  broken.product = [](const Value& a, const Value& b) {
    std::vector<Value> xs = a.elems();
    const auto& ys = b.elems();
    xs.insert(xs.end(), ys.begin(), ys.end());
    if (!xs.empty()) xs.pop_back();  // deliberately drops the last element
    return Value::list(std::move(xs));
  };
  LawReport report = check_monoid_laws(broken, 1000, 47);
  REQUIRE_FALSE(report.passed());
  CHECK_FALSE(report.failures.front().witness.empty());
}

TEST_CASE("bool join monoid satisfies idempotent laws") {
  CHECK(check_monoid_laws(bool_join_monoid(), 1000, 48).passed());
}

TEST_CASE("homomorphism checker") {
  MonoidSpec lists = mk_list_monoid(letter_alphabet());
  MonoidSpec sets = mk_set_monoid(letter_alphabet());

  SUBCASE("flatten: lists to sets") {
    HomSpec flatten{"flatten", lists, sets,
                    [](const Value& v) { return Value::list(normalize_set(v.elems())); }};
    CHECK(check_homomorphism(flatten, 1000, 49).passed());
  }

  SUBCASE("Pairs embedding into the tensor is not a homomorphism") {
    MonoidSpec t = tensor_product(sets, sets);
    MonoidSpec p = direct_product(sets, sets);
    HomSpec pairs{"Pairs", p, t,
                  [t](const Value& v) { return tensor_embed(t, v.first(), v.second()); }};
    LawReport report = check_homomorphism(pairs, 1000, 50);
    REQUIRE_FALSE(report.passed());
    CHECK(report.failures.front().law == "product-preservation");
    CHECK(report.failures.front().witness.size() == 2);
  }

  SUBCASE("identity hom passes") {
    CHECK(check_homomorphism(identity_hom(lists), 500, 51).passed());
  }
}
