#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "streamalg/state.hpp"

using namespace streamalg;
using namespace streamalg::testing;

namespace {

// s -> (s + bump, [s + e1, s + e2, ...]): the shape of prefix-sum hypotheticals.
Value shifted_emitter(std::int64_t bump, std::vector<std::int64_t> offsets) {
  return Value::fn([bump, offsets](const Value& s) {
    std::vector<Value> emitted;
    for (auto o : offsets) emitted.push_back(vi(s.as_int() + o));
    return Value::pair(vi(s.as_int() + bump), Value::list(std::move(emitted)));
  });
}

}  // namespace

TEST_CASE("state product chains hypotheticals") {
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  StateSpace ints = int_space();
  MonoidSpec st_m = state_monoid(ints, lists);

  Value alpha = shifted_emitter(1, {1});     // s -> (s+1, [s+1])
  Value beta = shifted_emitter(5, {2, 5});   // s -> (s+5, [s+2, s+5])
  Value combined = st_m.product(alpha, beta);
  Value result = combined(vi(0));
  CHECK(st(result) == vi(6));
  CHECK(out(result) == vlist({1, 3, 6}));
}

TEST_CASE("st and out project evaluation results") {
  Value pair = Value::pair(vi(6), vlist({1, 3, 6}));
  CHECK(st(pair) == vi(6));
  CHECK(out(pair) == vlist({1, 3, 6}));

  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  Value identity = state_identity_element(lists.identity);
  for (std::int64_t s : {-3, 0, 9}) CHECK(st(identity(vi(s))) == vi(s));
}

TEST_CASE("state monoid identity and associativity, extensionally") {
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  StateSpace ints = int_space();
  MonoidSpec st_m = state_monoid(ints, lists);

  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    Value alpha = st_m.sample_generator(rng);
    CHECK(st_m.eq(st_m.product(st_m.identity, alpha), alpha));
    CHECK(st_m.eq(st_m.product(alpha, st_m.identity), alpha));
  }
  CHECK(check_monoid_laws(st_m, 1000, 52).passed());
}

TEST_CASE("unfolding the product: out(a . b)(s) = out(a(s)) . out(b(st(a(s))))") {
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  StateSpace ints = int_space();
  MonoidSpec st_m = state_monoid(ints, lists);
  Rng rng(37);
  for (int i = 0; i < 500; ++i) {
    Value alpha = st_m.sample_element(rng);
    Value beta = st_m.sample_element(rng);
    Value s = ints.sample(rng);
    Value whole = st_m.product(alpha, beta)(s);
    Value ra = alpha(s);
    Value rb = beta(st(ra));
    CHECK(out(whole) == lists.product(out(ra), out(rb)));
    CHECK(st(whole) == st(rb));
  }
}

TEST_CASE("push_forward rewrites outputs only") {
  auto double_entries = [](const Value& v) {
    std::vector<Value> doubled;
    for (const auto& x : v.elems()) doubled.push_back(vi(2 * x.as_int()));
    return Value::list(std::move(doubled));
  };

  SUBCASE("worked example") {
    Value alpha = shifted_emitter(1, {1});
    Value pushed = push_forward(double_entries, alpha);
    Value r = pushed(vi(0));
    CHECK(st(r) == vi(1));
    CHECK(out(r) == vlist({2}));
  }

  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  StateSpace ints = int_space();
  MonoidSpec st_m = state_monoid(ints, lists);

  SUBCASE("identity push-forward is the identity") {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
      Value alpha = st_m.sample_element(rng);
      Value pushed = push_forward([](const Value& v) { return v; }, alpha);
      CHECK(st_m.eq(pushed, alpha));
    }
  }

  SUBCASE("g_* preserves products when g is a homomorphism") {
    HomSpec g{"double", lists, lists, double_entries};
    REQUIRE(check_homomorphism(g, 200, 53).passed());
    HomSpec g_star = push_forward_hom(g, ints);
    CHECK(check_homomorphism(g_star, 300, 54).passed());
  }

  SUBCASE("functoriality: (h then g)_* = h_* then g_*") {
    HomSpec g{"double", lists, lists, double_entries};
    auto reverse_entries = [](const Value& v) {
      std::vector<Value> xs = v.elems();
      std::reverse(xs.begin(), xs.end());
      return Value::list(std::move(xs));
    };
    HomSpec h{"reverse", lists, lists, reverse_entries};
    HomSpec composed = hom_compose(h, g);
    Rng rng(43);
    for (int i = 0; i < 200; ++i) {
      Value alpha = st_m.sample_element(rng);
      Value once = push_forward(composed.apply, alpha);
      Value twice = push_forward(g.apply, push_forward(h.apply, alpha));
      CHECK(st_m.eq(once, twice));
    }
  }
}

TEST_CASE("ext_equal verdicts and witnesses") {
  MonoidSpec lists = mk_list_monoid(small_int_alphabet());
  StateSpace ints = int_space();

  SUBCASE("an element equals itself") {
    Value alpha = shifted_emitter(3, {1, 2});
    CHECK(ext_equal(alpha, alpha, ints, lists, 100, 55).passed());
  }

  SUBCASE("differing state trajectories produce a witness") {
    Value keep = Value::fn([](const Value& s) { return Value::pair(s, vlist({})); });
    Value bump =
        Value::fn([](const Value& s) { return Value::pair(vi(s.as_int() + 1), vlist({})); });
    LawReport r = ext_equal(keep, bump, ints, lists, 100, 56);
    REQUIRE_FALSE(r.passed());
    CHECK(r.failures.front().witness.size() == 1);  // the offending state
  }

  SUBCASE("finite enumerations give exact verdicts") {
    StateSpace bits = enumerated_space("bit", {vi(0), vi(1)});
    // tabulated-style elements differing only on state 1
    Value f = Value::fn([](const Value& s) { return Value::pair(s, vlist({7})); });
    Value g = Value::fn([](const Value& s) {
      return s.as_int() == 0 ? Value::pair(s, vlist({7})) : Value::pair(s, vlist({8}));
    });
    LawReport r = ext_equal(f, g, bits, mk_list_monoid(small_int_alphabet()), 10, 57);
    REQUIRE_FALSE(r.passed());
    CHECK(r.failures.front().witness.front() == vi(1));
    CHECK(ext_equal(f, f, bits, mk_list_monoid(small_int_alphabet()), 10, 58).passed());
  }
}
