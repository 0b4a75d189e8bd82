#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "streamalg/examples.hpp"

using namespace streamalg;
using namespace streamalg::testing;

namespace {

Value edge(std::int64_t s, std::int64_t t) { return Value::pair(vi(s), vi(t)); }

Value edge_set(std::vector<std::pair<std::int64_t, std::int64_t>> es) {
  std::vector<Value> xs;
  for (auto [s, t] : es) xs.push_back(edge(s, t));
  return Value::list(normalize_set(std::move(xs)));
}

// Cumulative-sum oracle, computed by a plain fold.
Value fold_prefix_sums(const Value& xs) {
  std::vector<Value> sums;
  std::int64_t acc = 0;
  for (const auto& x : xs.elems()) {
    acc += x.as_int();
    sums.push_back(vi(acc));
  }
  return Value::list(std::move(sums));
}

// All integer lists with entries in [lo, hi] up to the given length.
std::vector<Value> all_int_lists(int max_len, std::int64_t lo, std::int64_t hi) {
  std::vector<Value> result = {Value::list({})};
  std::vector<std::vector<std::int64_t>> frontier = {{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::int64_t>> next;
    for (const auto& prefix : frontier)
      for (std::int64_t v = lo; v <= hi; ++v) {
        auto xs = prefix;
        xs.push_back(v);
        next.push_back(xs);
      }
    for (const auto& xs : next) {
      std::vector<Value> vs;
      for (auto v : xs) vs.push_back(vi(v));
      result.push_back(Value::list(std::move(vs)));
    }
    frontier = std::move(next);
  }
  return result;
}

// Adder inputs pair bits LSB-first; the result plus final carry must match
// integer addition.
Value adder_input(std::int64_t a, std::int64_t b, int bits) {
  std::vector<Value> pairs;
  for (int i = 0; i < bits; ++i)
    pairs.push_back(Value::pair(vi((a >> i) & 1), vi((b >> i) & 1)));
  return Value::list(std::move(pairs));
}

std::int64_t bits_to_int(const Value& bit_list, std::int64_t final_carry, int bits) {
  std::int64_t acc = 0;
  for (int i = 0; i < bits; ++i) acc |= bit_list.at(i).as_int() << i;
  return acc | (final_carry << bits);
}

}  // namespace

TEST_CASE("prefix sum example") {
  Processor p = prefix_sum_processor();
  CHECK(run(p, vlist({1, 2, 3})) == vlist({1, 3, 6}));
  CHECK(run(p, p.input.identity) == p.input.identity);
  Rng rng(100);
  for (int i = 0; i < 1000; ++i) {
    Value m = p.input.sample_element(rng);
    CHECK(run(p, m) == fold_prefix_sums(m));
  }
}

TEST_CASE("integral and derivative over the additive integers") {
  MonoidSpec ints = int_add_group();
  Processor I = integral_processor(ints);
  Processor D = derivative_processor(ints);

  CHECK(run(I, vlist({1, 2, 3})) == vlist({1, 3, 6}));
  CHECK(run(D, vlist({1, 3, 6})) == vlist({1, 2, 3}));

  SUBCASE("non-groups are rejected") {
    CHECK_THROWS_AS(integral_processor(bool_join_monoid()), std::invalid_argument);
    CHECK_THROWS_AS(derivative_processor(bool_join_monoid()), std::invalid_argument);
  }

  SUBCASE("I ; D and D ; I are the identity, exhaustively") {
    Processor id_proc = pure(identity_hom(I.input));
    InputGen gen = InputGen::exhaustive(all_int_lists(5, -2, 2));
    EquivVerdict forward = equiv_check(seq(I, D), id_proc, gen, 1, 101);
    CHECK(forward.pass);
    CHECK(forward.cases_run == 3906);  // sum over lengths 0..5 of 5^len
    CHECK(equiv_check(seq(D, I), id_proc, gen, 1, 102).pass);
  }
}

TEST_CASE("pairs processor enumerates the tensor incrementally") {
  Alphabet letters = letter_alphabet();
  MonoidSpec sets = mk_set_monoid(letters);
  Processor p = pairs_processor(sets, sets);
  MonoidSpec tensor = p.output;

  SUBCASE("a singleton pair embeds directly") {
    Value got = run(p, Value::pair(vset({"a"}), vset({"x"})));
    CHECK(got == tensor_embed(tensor, vset({"a"}), vset({"x"})));
    CHECK(got.size() == 1);
  }

  SUBCASE("incremental step emits only the new matches") {
    Value state = Value::pair(vset({"a"}), sets.identity);
    auto [next, increment] = step(p, state, Value::pair(sets.identity, vset({"x"})));
    CHECK(increment == tensor_embed(tensor, vset({"a"}), vset({"x"})));
    CHECK(next == Value::pair(vset({"a"}), vset({"x"})));
  }

  SUBCASE("total output equals the brute-force Cartesian product") {
    Rng rng(103);
    for (int i = 0; i < 500; ++i) {
      Value in = p.input.sample_element(rng);
      std::vector<std::pair<Value, std::int64_t>> terms;
      for (const auto& a : in.first().elems())
        for (const auto& b : in.second().elems())
          terms.emplace_back(Value::pair(Value::list({a}), Value::list({b})), 1);
      Value oracle = detail::tensor_canonical(std::move(terms), true);
      CHECK(tensor.eq(run(p, in), oracle));
    }
  }

  SUBCASE("the decomposition homomorphism holds extensionally") {
    CHECK(check_homomorphism(p.hom_spec(), 150, 104).passed());
  }
}

TEST_CASE("join example") {
  JoinConfig cfg = parity_join_config(5);
  validate_join_config(cfg);
  Alphabet edges = edge_alphabet(5);
  MonoidSpec sets = mk_set_monoid(edges);
  Processor join = join_processor(cfg, sets, sets);
  MonoidSpec tensor = join.output;

  SUBCASE("paths of length two") {
    Value e = edge_set({{1, 2}, {2, 3}, {3, 4}});
    Value got = run(join, Value::pair(e, e));
    std::vector<std::pair<Value, std::int64_t>> expected_terms = {
        {Value::pair(Value::list({edge(1, 2)}), Value::list({edge(2, 3)})), 1},
        {Value::pair(Value::list({edge(2, 3)}), Value::list({edge(3, 4)})), 1}};
    CHECK(got == detail::tensor_canonical(std::move(expected_terms), true));
    CHECK(tensor.eq(got, nested_loop_join(tensor, cfg, e, e)));
  }

  SUBCASE("empty edge set joins to the identity") {
    CHECK(run(join, join.input.identity) == tensor.identity);
  }

  SUBCASE("a predicate crossing the hash partition is rejected") {
    JoinConfig bad = cfg;
    bad.pred = [](const Value&, const Value&) { return true; };
    CHECK_THROWS_AS(validate_join_config(bad), std::invalid_argument);
    CHECK_THROWS_AS(join_processor(bad, sets, sets), std::invalid_argument);
  }
}

TEST_CASE("join partitioning agrees exhaustively on three vertices") {
  JoinConfig cfg = parity_join_config(3);
  Alphabet edges = edge_alphabet(3);
  MonoidSpec sets = mk_set_monoid(edges);
  MonoidSpec prod_mn = direct_product(sets, sets);
  Processor join = join_processor(cfg, sets, sets);
  MonoidSpec tensor = join.output;

  Processor split = pure(join_split_hom(prod_mn, cfg));
  Processor partitioned =
      seq(seq(split, par(join, join)), pure(merge_hom(tensor)));
  Processor unfused = seq(pairs_processor(sets, sets), pure(join_filter_hom(tensor, cfg)));

  const auto& universe = *edges.enumeration;  // 9 possible edges
  REQUIRE(universe.size() == 9);
  for (std::uint32_t mask = 0; mask < 512; ++mask) {
    std::vector<Value> chosen;
    for (std::size_t i = 0; i < 9; ++i)
      if (mask & (1u << i)) chosen.push_back(universe[i]);
    Value e = Value::list(normalize_set(std::move(chosen)));
    Value in = Value::pair(e, e);
    Value fused_out = run(join, in);
    CHECK(tensor.eq(fused_out, nested_loop_join(tensor, cfg, e, e)));
    CHECK(tensor.eq(fused_out, run(unfused, in)));
    CHECK(tensor.eq(fused_out, run(partitioned, in)));
  }
}

TEST_CASE("stratified set difference (ticked model)") {
  Alphabet letters = letter_alphabet();
  Processor f = stratified_diff_ticked(letters);
  MonoidSpec input = f.input;
  MonoidSpec output = f.output;

  SUBCASE("worked example: ({a},{a}) T ({a,b},{}) -> {a} T {b}") {
    Value in = Value::list({Value::pair(vset({"a"}), vset({"a"})),
                            Value::pair(vset({"a", "b"}), vset({}))});
    Value got = run(f, in);
    CHECK(got == Value::list({vset({"a"}), vset({"b"})}));
  }

  SUBCASE("identity maps to identity") {
    CHECK(output.eq(run(f, input.identity), output.identity));
  }

  SUBCASE("its homomorphism survives extensional checking") {
    CHECK(check_homomorphism(f.hom_spec(), 150, 105).passed());
  }

  SUBCASE("agrees with the list model after tick segmentation") {
    Processor g = stratified_diff_list(letters);
    MonoidSpec sets = mk_set_monoid(letters);
    Rng rng(106);
    for (int i = 0; i < 500; ++i) {
      std::size_t strata = 1 + rng.geometric(2);
      std::vector<Value> segments, entries;
      for (std::size_t k = 0; k < strata; ++k) {
        Value a = sets.sample_element(rng);
        Value b = sets.sample_element(rng);
        if (k > 0 && k + 1 < strata && a == sets.identity && b == sets.identity)
          a = vset({"a"});  // keep interior segments off the identity
        segments.push_back(Value::pair(a, b));
        entries.push_back(Value::pair(a, b));
      }
      Value ticked_out = run(f, Value::list(segments));
      Value list_out = run(g, Value::list(entries));
      // Embedding G's entries with ticks between them normalizes exactly the
      // way F's output does (interior empty strata collapse their ticks).
      Value expected = output.identity;
      for (std::size_t k = 0; k < list_out.size(); ++k) {
        if (k > 0) expected = output.product(expected, Value::list({sets.identity, sets.identity}));
        expected = output.product(expected, Value::list({list_out.at(k)}));
      }
      CHECK(output.eq(ticked_out, expected));
    }
  }

  SUBCASE("no stratum resurrects the previous stratum's negatives") {
    MonoidSpec sets = mk_set_monoid(letters);
    MonoidSpec pairs = direct_product(sets, sets);
    Rng rng(107);
    for (int i = 0; i < 300; ++i) {
      std::size_t strata = 2 + rng.geometric(2);
      Value state = f.init_state;
      Value neg_prev = sets.identity;
      for (std::size_t k = 0; k < strata; ++k) {
        Value stratum = pairs.sample_element(rng);
        auto [after_data, inc] = step(f, state, Value::list({stratum}));
        // everything emitted within this stratum avoids the sealed negatives
        for (const auto& seg : inc.elems())
          for (const auto& x : seg.elems())
            for (const auto& bad : neg_prev.elems()) CHECK_FALSE(x == bad);
        auto [after_tick, tick_inc] = step(f, after_data, Value::list({pairs.identity, pairs.identity}));
        state = after_tick;
        neg_prev = stratum.second();
      }
    }
  }
}

TEST_CASE("stratified set difference (list model)") {
  Alphabet letters = letter_alphabet();
  Processor g = stratified_diff_list(letters);
  Value in = Value::list({Value::pair(vset({"a"}), vset({"a"})),
                          Value::pair(vset({"a", "b"}), vset({}))});
  CHECK(run(g, in) == Value::list({vset({"a"}), vset({"b"})}));
  CHECK(run(g, g.input.identity) == g.output.identity);
  CHECK(check_homomorphism(g.hom_spec(), 200, 108).passed());
}

TEST_CASE("full adder") {
  Processor adder = adder_processor();

  SUBCASE("the worked addition") {
    Value in = Value::list({Value::pair(vi(0), vi(1)), Value::pair(vi(0), vi(0)),
                            Value::pair(vi(1), vi(1))});
    CHECK(run(adder, in) == vlist({1, 0, 0}));
    Value result = adder.hom(in)(vi(0));
    CHECK(st(result) == vi(1));  // final carry
    CHECK(run(adder, adder.input.identity) == adder.output.identity);
  }

  SUBCASE("all pairs of 4-bit numbers match integer addition") {
    for (std::int64_t a = 0; a < 16; ++a)
      for (std::int64_t b = 0; b < 16; ++b) {
        Value in = adder_input(a, b, 4);
        Value result = adder.hom(in)(vi(0));
        CHECK(bits_to_int(out(result), st(result).as_int(), 4) == a + b);
      }
  }

  SUBCASE("its homomorphism is exact over the enumerated carry space") {
    CHECK(check_homomorphism(adder.hom_spec(), 300, 109).passed());
  }
}

TEST_CASE("counter loop: F(m, u) = (u, u + m)") {
  Processor counter = counter_loop_processor();
  CHECK(run(counter, Value::list({vi(1), vi(1), vi(1)})) == vlist({0, 0, 1, 2}));
  CHECK(run(counter, counter.input.identity) == vlist({0}));
}

TEST_CASE("tcp delivery") {
  SUBCASE("perfect networks deliver in one round") {
    NetworkConfig perfect;
    Processor system = tcp_system(perfect, perfect);
    std::vector<Value> payloads = {vi(4), vi(7)};
    TcpRun result = tcp_deliver(system, payloads, 4);
    CHECK(result.delivered);
    CHECK(result.prefix_ok);
    CHECK(result.rounds_used <= tcp_delivery_bound(perfect, perfect, payloads.size()));
    CHECK(result.received.size() == 2);
    CHECK(result.received[0] == vi(4));
    CHECK(result.received[1] == vi(7));
  }

  SUBCASE("empty input emits only the initial output") {
    NetworkConfig perfect;
    Processor system = tcp_system(perfect, perfect);
    CHECK(run(system, system.input.identity) == Value::list({Value::list({})}));
  }

  SUBCASE("adversarial seeds stay within the deadline bound") {
    const std::size_t k = 8;
    for (std::uint64_t s = 0; s < 20; ++s) {
      NetworkConfig net1;
      net1.seed = s;
      net1.default_deadline = 2;
      NetworkConfig net2;
      net2.seed = s ^ 0xabcdefull;
      net2.default_deadline = 1;
      Processor system = tcp_system(net1, net2);
      std::vector<Value> payloads;
      Rng rng(1000 + s);
      for (std::size_t i = 0; i < k; ++i) payloads.push_back(vi(rng.range(0, 99)));
      std::int64_t bound = tcp_delivery_bound(net1, net2, k);
      TcpRun result = tcp_deliver(system, payloads, static_cast<int>(bound));
      CHECK(result.delivered);
      CHECK(result.prefix_ok);
      CHECK(result.rounds_used <= bound);
    }
  }
}

TEST_CASE("soundness suite over the example processors") {
  Alphabet letters = letter_alphabet();
  MonoidSpec sets = mk_set_monoid(letters);
  MonoidSpec ints = int_add_group();
  JoinConfig cfg = parity_join_config(4);
  MonoidSpec edge_sets = mk_set_monoid(edge_alphabet(4));

  std::vector<Processor> examples = {
      prefix_sum_processor(),
      integral_processor(ints),
      derivative_processor(ints),
      pairs_processor(sets, sets),
      join_processor(cfg, edge_sets, edge_sets),
      stratified_diff_ticked(letters),
      stratified_diff_list(letters),
      adder_processor(),
      counter_loop_processor(),
  };
  for (const auto& p : examples) {
    INFO(p.name);
    CHECK(check_soundness(p, 120, 110).passed());
    CHECK(check_streaming_determinism(p, 120, 111).passed());
  }

  NetworkConfig net;
  net.seed = 5;
  net.default_deadline = 1;
  Processor tcp = tcp_system(net, net);
  CHECK(check_soundness(tcp, 30, 112).passed());
  CHECK(check_streaming_determinism(tcp, 30, 113).passed());
}
