#pragma once

#include <string>
#include <vector>

#include "streamalg/examples.hpp"
#include "streamalg/pipeline.hpp"
#include "streamalg/repr.hpp"

namespace streamalg {

inline Alphabet letter_alphabet() {
  std::vector<Value> letters = {Value::str("a"), Value::str("b"), Value::str("c"),
                                Value::str("d"), Value::str("e")};
  auto copy = letters;
  return Alphabet{"letter", [copy](Rng& rng) { return copy[rng.below(copy.size())]; },
                  std::move(letters)};
}

// Everything the CLI and the serialized term corpus reference by name.
inline Registry default_registry() {
  Registry reg;

  reg.add_alphabet(int_alphabet());
  reg.add_alphabet(letter_alphabet());
  reg.add_alphabet(bit_alphabet());
  reg.add_alphabet(bitpair_alphabet());
  reg.add_alphabet(edge_alphabet(4));
  reg.add_alphabet(payload_alphabet());

  reg.add_monoid(int_add_group());
  reg.add_monoid(bool_join_monoid());

  reg.add_space(singleton_space());
  reg.add_space(int_space(-64, 64));

  // example processors; registering each also registers its state space name
  auto install = [&reg](Processor p) {
    reg.add_space(p.states);
    reg.add_processor(std::move(p));
  };

  MonoidSpec ints = int_add_group();
  install(prefix_sum_processor());
  install(integral_processor(ints));
  install(derivative_processor(ints));

  Alphabet edges = edge_alphabet(4);
  MonoidSpec edge_sets = mk_set_monoid(edges);
  JoinConfig cfg = parity_join_config(4);
  install(pairs_processor(edge_sets, edge_sets));
  install(join_processor(cfg, edge_sets, edge_sets));

  Alphabet letters = letter_alphabet();
  install(stratified_diff_ticked(letters));
  install(stratified_diff_list(letters));
  install(adder_processor());
  install(counter_loop_processor());
  install(tcp_system(NetworkConfig{}, NetworkConfig{}));

  // homomorphisms referenced from terms and the law suites
  MonoidSpec tensor = tensor_product(edge_sets, edge_sets);
  reg.add_hom(join_filter_hom(tensor, cfg));

  MonoidSpec letter_lists = mk_list_monoid(letters);
  MonoidSpec letter_sets = mk_set_monoid(letters);
  reg.add_hom(HomSpec{"flatten", letter_lists, letter_sets,
                      [](const Value& v) { return Value::list(normalize_set(v.elems())); }});

  reg.add_hom(HomSpec{"times3", ints, ints,
                      [](const Value& v) { return Value::integer(3 * v.as_int()); }});

  MonoidSpec int_pair = direct_product(ints, ints);
  reg.add_hom(HomSpec{"swap_accum", int_pair, int_pair, [](const Value& v) {
                        return Value::pair(v.second(),
                                           Value::integer(v.first().as_int() + v.second().as_int()));
                      }});

  // the parity splitter for the join input
  MonoidSpec prod_mn = direct_product(edge_sets, edge_sets);
  Processor splitter = pure(join_split_hom(prod_mn, cfg));
  splitter.name = "split_parity";
  reg.add_splitter(std::move(splitter), prod_mn.name);

  // splitter over the join's output tensor, for split-merge demonstrations
  Processor tensor_splitter = pure(tensor_split_hom(tensor, cfg));
  tensor_splitter.name = "split_tensor_parity";
  reg.add_splitter(std::move(tensor_splitter), tensor.name);

  return reg;
}

// The unfused section-2 program: pairs ; pure filter.
inline PipelineTerm join_unfused_term(const Registry& reg) {
  const Processor& pairs = reg.processor("pairs");
  return t_seq(t_stateful(reg, "pairs"), t_pure(reg, {"filter"}, pairs.output.name));
}

// The fused join as a term: everything folded into one eval node.
inline PipelineTerm join_fused_term(const Registry& reg) {
  const Processor& pairs = reg.processor("pairs");
  return t_eval(reg, "pairs", {"filter"}, {"hom:pairs", "push:filter"}, pairs.input.name);
}

// join as a single opaque stateful node (the partitioning start point).
inline PipelineTerm join_node_term(const Registry& reg) { return t_stateful(reg, "join"); }

// split ; (join x join) ; merge.
inline PipelineTerm join_partitioned_term(const Registry& reg) {
  PipelineTerm join = join_node_term(reg);
  return t_seq(t_split(reg, "split_parity"),
               t_seq(t_par(join, join), t_merge(reg, join.output_monoid)));
}

// Certificate for partitioning join across the parity splitter.
inline IndependenceCertificate join_parity_certificate(const Registry& reg, int budget = 200,
                                                       std::uint64_t seed = 0x3051u) {
  return IndependenceCertificate{t_split(reg, "split_parity"), join_node_term(reg), budget, seed};
}

// The rule set cmd_optimize ships; certificates extend it with the
// partitioning pair. The associativity rotations stay out of the greedy set
// because they never enable further progress on this corpus.
inline std::vector<RewriteRule> default_rule_set() {
  return {rule_fuse(),      rule_exchange(),      rule_decouple_rev(),
          rule_decompose(), rule_tighten_left(),  rule_tighten_right()};
}

// Certificate rules come first so the partitioning pair fires before the
// fusion normalizer rewrites the certified node out of recognition.
inline std::vector<RewriteRule> rule_set_with_certificate(const IndependenceCertificate& cert) {
  std::vector<RewriteRule> rules = {rule_split_insert(cert), rule_partition(cert)};
  std::vector<RewriteRule> base = default_rule_set();
  rules.insert(rules.end(), base.begin(), base.end());
  return rules;
}

}  // namespace streamalg
