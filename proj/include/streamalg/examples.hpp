#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "streamalg/monoid.hpp"
#include "streamalg/processor.hpp"
#include "streamalg/state.hpp"
#include "streamalg/streamfn.hpp"

namespace streamalg {

// ---------------------------------------------------------------------------
// Shared alphabets

inline Alphabet int_alphabet(std::int64_t lo = -9, std::int64_t hi = 9) {
  return Alphabet{"int", [lo, hi](Rng& rng) { return Value::integer(rng.range(lo, hi)); },
                  std::nullopt};
}

inline Alphabet bit_alphabet() {
  return Alphabet{"bit", [](Rng& rng) { return Value::integer(rng.coin() ? 1 : 0); },
                  std::vector<Value>{Value::integer(0), Value::integer(1)}};
}

inline Alphabet bitpair_alphabet() {
  std::vector<Value> all;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) all.push_back(Value::pair(Value::integer(a), Value::integer(b)));
  auto copy = all;
  return Alphabet{"bitpair", [copy](Rng& rng) { return copy[rng.below(copy.size())]; },
                  std::move(all)};
}

// Directed edges [s, t] over a small vertex universe.
inline Alphabet edge_alphabet(int vertices = 4) {
  std::vector<Value> all;
  for (int s = 0; s < vertices; ++s)
    for (int t = 0; t < vertices; ++t) all.push_back(Value::pair(Value::integer(s), Value::integer(t)));
  auto copy = all;
  return Alphabet{"edge" + std::to_string(vertices),
                  [copy](Rng& rng) { return copy[rng.below(copy.size())]; }, std::move(all)};
}

inline Alphabet payload_alphabet() {
  return Alphabet{"payload", [](Rng& rng) { return Value::integer(rng.range(0, 99)); },
                  std::nullopt};
}

// ---------------------------------------------------------------------------
// Prefix sum

inline Processor prefix_sum_processor() {
  MonoidSpec lists = mk_list_monoid(int_alphabet());
  Processor p;
  p.name = "prefix_sum";
  p.input = lists;
  p.output = lists;
  p.states = int_space(-64, 64);
  p.hom = [](const Value& m) {
    return Value::fn([m](const Value& s) {
      std::int64_t acc = s.as_int();
      std::vector<Value> emitted;
      for (const auto& x : m.elems()) {
        acc += x.as_int();
        emitted.push_back(Value::integer(acc));
      }
      return Value::pair(Value::integer(acc), Value::list(std::move(emitted)));
    });
  };
  p.init_state = Value::integer(0);
  p.init_output = lists.identity;
  return p;
}

// ---------------------------------------------------------------------------
// Discrete integral and derivative over a group

inline Processor integral_processor(const MonoidSpec& g) {
  if (!g.flags.group) throw std::invalid_argument("integral_processor: " + g.name + " is not a group");
  MonoidSpec lists = list_of(g);
  Processor p;
  p.name = "integral";
  p.input = lists;
  p.output = lists;
  p.states = carrier_space(g);
  auto product = g.product;
  p.hom = [product](const Value& m) {
    return Value::fn([product, m](const Value& s) {
      Value acc = s;
      std::vector<Value> emitted;
      for (const auto& a : m.elems()) {
        acc = product(acc, a);
        emitted.push_back(acc);
      }
      return Value::pair(acc, Value::list(std::move(emitted)));
    });
  };
  p.init_state = g.identity;
  p.init_output = lists.identity;
  return p;
}

inline Processor derivative_processor(const MonoidSpec& g) {
  if (!g.flags.group) throw std::invalid_argument("derivative_processor: " + g.name + " is not a group");
  MonoidSpec lists = list_of(g);
  Processor p;
  p.name = "derivative";
  p.input = lists;
  p.output = lists;
  p.states = carrier_space(g);
  auto product = g.product;
  auto inverse = g.inverse;
  p.hom = [product, inverse](const Value& m) {
    return Value::fn([product, inverse, m](const Value& s) {
      Value prev = s;
      std::vector<Value> emitted;
      for (const auto& b : m.elems()) {
        emitted.push_back(product(inverse(prev), b));
        prev = b;
      }
      return Value::pair(prev, Value::list(std::move(emitted)));
    });
  };
  p.init_state = g.identity;
  p.init_output = lists.identity;
  return p;
}

// ---------------------------------------------------------------------------
// Pairs: the all-pairs stream function into the tensor product

inline StreamFunctionSpec pairs_stream_function(const MonoidSpec& m, const MonoidSpec& n) {
  MonoidSpec source = direct_product(m, n);
  MonoidSpec target = tensor_product(m, n);
  return StreamFunctionSpec{
      "Pairs", source, target,
      [target](const Value& v) { return tensor_embed(target, v.first(), v.second()); },
      [target](const Value& p, const Value& a) {
        // dPairs((m, n), (m', n')) = m (x) n' + m' (x) n + m' (x) n'
        Value t1 = tensor_embed(target, p.first(), a.second());
        Value t2 = tensor_embed(target, a.first(), p.second());
        Value t3 = tensor_embed(target, a.first(), a.second());
        return target.product(target.product(t1, t2), t3);
      }};
}

inline Processor pairs_processor(const MonoidSpec& m, const MonoidSpec& n) {
  Processor p = generic_decompose(pairs_stream_function(m, n));
  p.name = "pairs";
  return p;
}

// ---------------------------------------------------------------------------
// The section-2 join

// Hash/predicate configuration for the partitioned join. Hashes and the
// predicate operate on raw universe elements (edges); the universes make the
// compatibility requirement exhaustively checkable.
struct JoinConfig {
  std::function<int(const Value&)> hash_a;
  std::function<int(const Value&)> hash_b;
  std::function<bool(const Value&, const Value&)> pred;
  std::vector<Value> universe_a;
  std::vector<Value> universe_b;
};

// hash_a(a) != hash_b(b) must force pred(a, b) = false.
inline void validate_join_config(const JoinConfig& cfg) {
  for (const auto& a : cfg.universe_a)
    for (const auto& b : cfg.universe_b)
      if (cfg.hash_a(a) != cfg.hash_b(b) && cfg.pred(a, b))
        throw std::invalid_argument("join config: pred crosses hash partitions at a=" + a.dump() +
                                    ", b=" + b.dump());
}

// Path-of-length-two config: match when the first edge's target equals the
// second edge's source; partition by that endpoint's parity.
inline JoinConfig parity_join_config(int vertices = 4) {
  Alphabet edges = edge_alphabet(vertices);
  JoinConfig cfg;
  cfg.hash_a = [](const Value& e) { return static_cast<int>(e.second().as_int() % 2); };
  cfg.hash_b = [](const Value& e) { return static_cast<int>(e.first().as_int() % 2); };
  cfg.pred = [](const Value& a, const Value& b) { return a.second() == b.first(); };
  cfg.universe_a = *edges.enumeration;
  cfg.universe_b = *edges.enumeration;
  return cfg;
}

// filter : M (x) N -> M (x) N, dropping generator pairs that fail pred.
// Tensor entries hold singleton-set generators; unwrap to raw elements.
inline HomSpec join_filter_hom(const MonoidSpec& tensor, const JoinConfig& cfg) {
  auto pred = cfg.pred;
  const bool idem = tensor.flags.idempotent;
  return HomSpec{"filter", tensor, tensor, [pred, idem](const Value& v) {
                   std::vector<std::pair<Value, std::int64_t>> kept;
                   for (const auto& entry : v.elems()) {
                     Value gen_a = entry.first().first();
                     Value gen_b = entry.first().second();
                     if (pred(gen_a.at(0), gen_b.at(0)))
                       kept.emplace_back(entry.first(), entry.second().as_int());
                   }
                   return detail::tensor_canonical(std::move(kept), idem);
                 }};
}

// split : M x N -> (M x N) x (M x N), routing generators by hash.
inline HomSpec join_split_hom(const MonoidSpec& prod_mn, const JoinConfig& cfg) {
  MonoidSpec target = direct_product(prod_mn, prod_mn);
  auto hash_a = cfg.hash_a;
  auto hash_b = cfg.hash_b;
  const MonoidSpec m = prod_mn.parts.at(0);
  const MonoidSpec n = prod_mn.parts.at(1);
  return HomSpec{"split", prod_mn, target, [hash_a, hash_b, m, n](const Value& v) {
                   std::vector<Value> m_side[2], n_side[2];
                   for (const auto& a : v.first().elems()) m_side[hash_a(a) & 1].push_back(a);
                   for (const auto& b : v.second().elems()) n_side[hash_b(b) & 1].push_back(b);
                   auto half = [&](int i) {
                     return Value::pair(Value::list(normalize_set(m_side[i])),
                                        Value::list(normalize_set(n_side[i])));
                   };
                   return Value::pair(half(0), half(1));
                 }};
}

// split : M (x) N -> (M (x) N) x (M (x) N), routing candidate pairs by the
// hash of their left generator.
inline HomSpec tensor_split_hom(const MonoidSpec& tensor, const JoinConfig& cfg) {
  MonoidSpec target = direct_product(tensor, tensor);
  auto hash_a = cfg.hash_a;
  const bool idem = tensor.flags.idempotent;
  return HomSpec{"tensor_split", tensor, target, [hash_a, idem](const Value& v) {
                   std::vector<std::pair<Value, std::int64_t>> side[2];
                   for (const auto& entry : v.elems()) {
                     Value raw = entry.first().first().at(0);
                     side[hash_a(raw) & 1].emplace_back(entry.first(), entry.second().as_int());
                   }
                   return Value::pair(detail::tensor_canonical(std::move(side[0]), idem),
                                      detail::tensor_canonical(std::move(side[1]), idem));
                 }};
}

// merge : M x M -> M over a commutative monoid.
inline HomSpec merge_hom(const MonoidSpec& m) {
  if (!m.flags.commutative)
    throw std::invalid_argument("merge_hom: " + m.name + " is not commutative");
  MonoidSpec source = direct_product(m, m);
  auto product = m.product;
  return HomSpec{"merge", source, m,
                 [product](const Value& v) { return product(v.first(), v.second()); }};
}

// The fused join: pairs with the filter pushed into every hypothetical.
inline Processor join_processor(const JoinConfig& cfg, const MonoidSpec& m, const MonoidSpec& n) {
  validate_join_config(cfg);
  Processor pairs = pairs_processor(m, n);
  HomSpec filter = join_filter_hom(pairs.output, cfg);
  Processor joined = fuse_output_hom(pairs, filter);
  joined.name = "join";
  return joined;
}

// Brute-force nested-loop join oracle: all filtered pairs, as a tensor value.
inline Value nested_loop_join(const MonoidSpec& tensor, const JoinConfig& cfg, const Value& lhs,
                              const Value& rhs) {
  std::vector<std::pair<Value, std::int64_t>> terms;
  for (const auto& a : lhs.elems())
    for (const auto& b : rhs.elems())
      if (cfg.pred(a, b))
        terms.emplace_back(Value::pair(Value::list({a}), Value::list({b})), 1);
  return detail::tensor_canonical(std::move(terms), tensor.flags.idempotent);
}

// ---------------------------------------------------------------------------
// Stratified set difference

namespace detail {

inline Value set_difference(const Value& a, const Value& b) {
  std::vector<Value> kept;
  for (const auto& x : a.elems()) {
    bool removed = false;
    for (const auto& y : b.elems())
      if (x == y) removed = true;
    if (!removed) kept.push_back(x);
  }
  return Value::list(normalize_set(std::move(kept)));
}

}  // namespace detail

// F : T[Set x Set] ~> T[Set]. State [prev_neg, cur_neg, just_ticked]: the
// sealed negative set of the last completed stratum, the accumulating one,
// and a flag that makes consecutive ticks idempotent on the state.
inline Processor stratified_diff_ticked(const Alphabet& universe) {
  MonoidSpec sets = mk_set_monoid(universe);
  MonoidSpec in_pairs = direct_product(sets, sets);
  MonoidSpec input = ticked(in_pairs);
  MonoidSpec output = ticked(sets);

  Processor p;
  p.name = "sdiff_ticked";
  p.input = input;
  p.output = output;
  MonoidSpec sets_copy = sets;
  p.states = StateSpace{
      "sdiff",
      [sets_copy](Rng& rng) {
        return Value::list({sets_copy.sample_element(rng), sets_copy.sample_element(rng),
                            Value::boolean(rng.coin())});
      },
      std::nullopt};
  Value set_id = sets.identity;
  MonoidSpec out_copy = output;
  p.hom = [set_id, out_copy](const Value& x) {
    return Value::fn([set_id, out_copy, x](const Value& state) {
      Value prev = state.at(0);
      Value cur = state.at(1);
      bool just_ticked = state.at(2).as_bool();
      Value emitted = out_copy.identity;
      const auto& segments = x.elems();
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) {  // a tick separates consecutive segments
          if (!just_ticked) {
            prev = cur;
            cur = set_id;
            just_ticked = true;
          }
          emitted = out_copy.product(emitted, Value::list({set_id, set_id}));
        }
        const Value& seg = segments[i];
        if (!(seg.first() == set_id) || !(seg.second() == set_id)) {
          Value pos = detail::set_difference(seg.first(), prev);
          cur = Value::list(normalize_set([&] {
            std::vector<Value> xs = cur.elems();
            const auto ys = seg.second().elems();
            xs.insert(xs.end(), ys.begin(), ys.end());
            return xs;
          }()));
          just_ticked = false;
          emitted = out_copy.product(emitted, Value::list({pos}));
        }
      }
      return Value::pair(Value::list({prev, cur, Value::boolean(just_ticked)}), emitted);
    });
  };
  p.init_state = Value::list({set_id, set_id, Value::boolean(false)});
  p.init_output = output.identity;
  return p;
}

// G : List[Set x Set] ~> List[Set]. State is the previous entry's negative set.
inline Processor stratified_diff_list(const Alphabet& universe) {
  MonoidSpec sets = mk_set_monoid(universe);
  MonoidSpec in_pairs = direct_product(sets, sets);
  MonoidSpec input = list_of(in_pairs);
  MonoidSpec output = list_of(sets);

  Processor p;
  p.name = "sdiff_list";
  p.input = input;
  p.output = output;
  p.states = carrier_space(sets);
  p.hom = [](const Value& entries) {
    return Value::fn([entries](const Value& state) {
      Value neg = state;
      std::vector<Value> emitted;
      for (const auto& e : entries.elems()) {
        emitted.push_back(detail::set_difference(e.first(), neg));
        neg = e.second();
      }
      return Value::pair(neg, Value::list(std::move(emitted)));
    });
  };
  p.init_state = sets.identity;
  p.init_output = output.identity;
  return p;
}

// ---------------------------------------------------------------------------
// Full adder

// The generator images of the adder homomorphism. Each carries its input
// generator as a provenance tag, so products remember their factorization
// (this is what defunctionalization reads back).
inline Value adder_letter(std::int64_t a, std::int64_t b) {
  Value tag = Value::list({Value::pair(Value::integer(a), Value::integer(b))});
  return Value::fn(
      [a, b](const Value& carry) {
        std::int64_t c = carry.as_int();
        std::int64_t sum = a + b + c;
        return Value::pair(Value::integer(sum >> 1), Value::list({Value::integer(sum & 1)}));
      },
      std::vector<Value>{tag});
}

inline Processor adder_processor() {
  MonoidSpec input = mk_list_monoid(bitpair_alphabet());
  MonoidSpec output = mk_list_monoid(bit_alphabet());
  Processor p;
  p.name = "adder";
  p.input = input;
  p.output = output;
  p.states = enumerated_space("carry", {Value::integer(0), Value::integer(1)});
  MonoidSpec out_copy = output;
  p.hom = [out_copy](const Value& m) {
    Value acc = Value::fn(
        [out_copy](const Value& s) { return Value::pair(s, out_copy.identity); },
        std::vector<Value>{});
    for (const auto& ab : m.elems())
      acc = state_product(out_copy, acc, adder_letter(ab.first().as_int(), ab.second().as_int()));
    return acc;
  };
  p.init_state = Value::integer(0);
  p.init_output = output.identity;
  return p;
}

// ---------------------------------------------------------------------------
// TCP with retransmission over lossy, reordering networks

// Drop/reorder/delay decisions come from a seeded generator carried in the
// network's state; the deadline rule overrides them. A queued packet with
// deadline t is forced out no later than the t-th subsequent processing step.
struct NetworkConfig {
  std::uint64_t seed = 0;
  std::map<std::int64_t, std::int64_t> deadlines;
  std::int64_t default_deadline = 0;
  std::optional<std::size_t> capacity;

  std::int64_t deadline_for(std::int64_t seqno) const {
    auto it = deadlines.find(seqno);
    return it == deadlines.end() ? default_deadline : it->second;
  }

  static NetworkConfig from_json(const nlohmann::json& j) {
    NetworkConfig cfg;
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("default_deadline"))
      cfg.default_deadline = j.at("default_deadline").get<std::int64_t>();
    if (j.contains("deadlines"))
      for (const auto& [key, value] : j.at("deadlines").items())
        cfg.deadlines[std::stoll(key)] = value.get<std::int64_t>();
    if (j.contains("capacity")) cfg.capacity = j.at("capacity").get<std::size_t>();
    return cfg;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["default_deadline"] = default_deadline;
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [k, v] : deadlines) d[std::to_string(k)] = v;
    j["deadlines"] = d;
    if (capacity) j["capacity"] = *capacity;
    return j;
  }
};

namespace detail {

inline std::uint64_t mix_step(std::uint64_t s) {
  Rng r(s);
  return r.next_u64();
}

// One network over T[List[X]]: items are queued or passed; queued items age on
// every processed letter and are forced out at their deadline. Dropping an
// item on arrival emits a tick in its place.
inline Processor network_processor(const std::string& name, const MonoidSpec& io,
                                   const NetworkConfig& cfg,
                                   std::function<std::int64_t(const Value&)> seqno) {
  const MonoidSpec inner = io.parts.at(0);  // List[X]
  Processor p;
  p.name = name;
  p.input = io;
  p.output = io;
  Value inner_id = inner.identity;
  p.states = StateSpace{
      name + "_state",
      [inner_id](Rng& rng) {
        return Value::list({inner_id, Value::integer(0), Value::integer(static_cast<std::int64_t>(rng.next_u64() >> 1))});
      },
      std::nullopt};
  NetworkConfig cfg_copy = cfg;
  MonoidSpec io_copy = io;
  p.hom = [cfg_copy, io_copy, inner_id, seqno](const Value& x) {
    return Value::fn([cfg_copy, io_copy, inner_id, seqno, x](const Value& state) {
      // state = [queue of [item, remaining], processed_count, rng_state]
      std::vector<Value> queue = state.at(0).elems();
      std::int64_t processed = state.at(1).as_int();
      std::uint64_t rng_state = static_cast<std::uint64_t>(state.at(2).as_int());
      Value emitted = io_copy.identity;
      auto draw = [&rng_state]() {
        rng_state = mix_step(rng_state);
        return rng_state;
      };
      auto emit_items = [&](const std::vector<Value>& items) {
        if (items.empty()) return;
        emitted = io_copy.product(emitted, Value::list({Value::list(items)}));
      };
      auto age_and_release = [&]() {
        std::vector<Value> kept, due;
        for (const auto& entry : queue) {
          std::int64_t remaining = entry.second().as_int() - 1;
          bool release_early = (draw() % 4) == 0;  // delay ends at random
          if (remaining <= 0 || release_early)
            due.push_back(entry.first());
          else
            kept.push_back(Value::pair(entry.first(), Value::integer(remaining)));
        }
        if (due.size() > 1 && (draw() % 2) == 0) std::swap(due.front(), due.back());  // reorder
        queue = std::move(kept);
        emit_items(due);
      };
      const auto& segments = x.elems();
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) {
          // a tick: logical time passes through the network unchanged
          ++processed;
          age_and_release();
          emitted = io_copy.product(emitted, Value::list({inner_id, inner_id}));
        }
        for (const auto& item : segments[i].elems()) {
          ++processed;
          std::int64_t deadline = cfg_copy.deadline_for(seqno(item));
          bool full = cfg_copy.capacity && queue.size() >= *cfg_copy.capacity;
          bool hold = deadline > 0 && !full && (draw() % 2) == 0;
          if (hold) {
            queue.push_back(Value::pair(item, Value::integer(deadline)));
            // drop: a tick stands in for the withheld packet
            emitted = io_copy.product(emitted, Value::list({inner_id, inner_id}));
          } else {
            emit_items({item});
          }
          age_and_release();
        }
      }
      Value next = Value::list({Value::list(std::move(queue)), Value::integer(processed),
                                Value::integer(static_cast<std::int64_t>(rng_state >> 1))});
      return Value::pair(next, emitted);
    });
  };
  p.init_state = Value::list({inner.identity, Value::integer(0),
                              Value::integer(static_cast<std::int64_t>(cfg.seed >> 1))});
  p.init_output = io.identity;
  return p;
}

}  // namespace detail

// Monoids of the TCP model.
struct TcpMonoids {
  MonoidSpec payloads;   // List[T]
  MonoidSpec data_in;    // T[List[T]]
  MonoidSpec packets;    // Pack = T[List[N x T]]
  MonoidSpec requests;   // Re = T[List[N]]
};

inline TcpMonoids tcp_monoids() {
  TcpMonoids m;
  m.payloads = mk_list_monoid(payload_alphabet());
  m.data_in = ticked(m.payloads);
  Alphabet packet_alpha{"packet",
                        [](Rng& rng) {
                          return Value::pair(Value::integer(rng.range(0, 7)),
                                             Value::integer(rng.range(0, 99)));
                        },
                        std::nullopt};
  m.packets = ticked(mk_list_monoid(packet_alpha));
  Alphabet request_alpha{"seqno", [](Rng& rng) { return Value::integer(rng.range(0, 7)); },
                         std::nullopt};
  m.requests = ticked(mk_list_monoid(request_alpha));
  return m;
}

namespace detail {

// sender : T[List[T]] x Re ~> Pack x Re. State: every payload seen, in order;
// its length is the next sequence number. Data letters are processed before
// request letters within one batch.
inline Processor tcp_sender(const TcpMonoids& m) {
  Processor p;
  p.name = "sender";
  p.input = direct_product(m.data_in, m.requests);
  p.output = direct_product(m.packets, m.requests);
  MonoidSpec payloads = m.payloads;
  p.states = StateSpace{"sender_state",
                        [payloads](Rng& rng) { return payloads.sample_element(rng); },
                        std::nullopt};
  MonoidSpec packets = m.packets;
  MonoidSpec requests = m.requests;
  p.hom = [packets, requests](const Value& xy) {
    return Value::fn([packets, requests, xy](const Value& state) {
      std::vector<Value> sent = state.elems();
      Value pack_out = packets.identity;
      auto emit_packet = [&](std::int64_t i, const Value& payload) {
        pack_out = packets.product(
            pack_out, Value::list({Value::list({Value::pair(Value::integer(i), payload)})}));
      };
      auto emit_tick = [&]() {
        pack_out = packets.product(pack_out, tick(packets.parts.at(0)));
      };
      const auto& data_segments = xy.first().elems();
      for (std::size_t i = 0; i < data_segments.size(); ++i) {
        if (i > 0) emit_tick();
        for (const auto& payload : data_segments[i].elems()) {
          std::int64_t seqno = static_cast<std::int64_t>(sent.size());
          sent.push_back(payload);
          emit_packet(seqno, payload);
        }
      }
      // Duplicate requests inside one batch collapse to a single retransmission.
      std::vector<std::int64_t> requested;
      const auto& request_segments = xy.second().elems();
      for (std::size_t i = 0; i < request_segments.size(); ++i) {
        if (i > 0) emit_tick();  // ticks are forwarded from either input
        for (const auto& req : request_segments[i].elems()) {
          std::int64_t seqno = req.as_int();
          if (seqno >= 0 && seqno < static_cast<std::int64_t>(sent.size()))
            requested.push_back(seqno);
        }
      }
      std::sort(requested.begin(), requested.end());
      requested.erase(std::unique(requested.begin(), requested.end()), requested.end());
      for (std::int64_t seqno : requested)
        emit_packet(seqno, sent[static_cast<std::size_t>(seqno)]);
      return Value::pair(Value::list(std::move(sent)),
                         Value::pair(pack_out, requests.identity));
    });
  };
  p.init_state = m.payloads.identity;
  p.init_output = Value::pair(m.packets.identity, m.requests.identity);
  return p;
}

// receiver : Pack x Re ~> List[T] x Re. State: received packets by sequence
// number plus the next unreceived number n. In-order arrivals release the
// longest contiguous run; everything else (including ticks) requests n.
inline Processor tcp_receiver(const TcpMonoids& m) {
  Processor p;
  p.name = "receiver";
  p.input = direct_product(m.packets, m.requests);
  p.output = direct_product(m.payloads, m.requests);
  p.states = StateSpace{"receiver_state",
                        [](Rng&) { return Value::pair(Value::list({}), Value::integer(0)); },
                        std::nullopt};
  MonoidSpec payloads = m.payloads;
  MonoidSpec requests = m.requests;
  p.hom = [payloads, requests](const Value& xy) {
    return Value::fn([payloads, requests, xy](const Value& state) {
      std::vector<Value> received = state.first().elems();  // sorted [i, payload]
      std::int64_t next = state.second().as_int();
      Value data_out = payloads.identity;
      Value req_out = requests.identity;
      auto request_next = [&]() {
        req_out = requests.product(req_out, Value::list({Value::list({Value::integer(next)})}));
      };
      auto lookup = [&](std::int64_t i) -> const Value* {
        for (const auto& e : received)
          if (e.first().as_int() == i) return &e;
        return nullptr;
      };
      const auto& segments = xy.first().elems();
      for (std::size_t s = 0; s < segments.size(); ++s) {
        if (s > 0) request_next();  // a tick: non-advancing input
        for (const auto& packet : segments[s].elems()) {
          std::int64_t i = packet.first().as_int();
          if (i >= next && lookup(i) == nullptr) {
            received.push_back(Value::pair(Value::integer(i), packet.second()));
            std::sort(received.begin(), received.end());
          }
          if (i == next) {
            std::vector<Value> run;
            while (const Value* e = lookup(next)) {
              run.push_back(e->second());
              ++next;
            }
            data_out = payloads.product(data_out, Value::list(std::move(run)));
            req_out = requests.product(
                req_out, Value::list({Value::list({Value::integer(next)})}));
          } else {
            request_next();
          }
        }
      }
      // Request letters reaching the receiver are non-advancing input too.
      for (const auto& seg : xy.second().elems())
        if (seg.size() > 0) request_next();
      return Value::pair(Value::pair(Value::list(std::move(received)), Value::integer(next)),
                         Value::pair(data_out, req_out));
    });
  };
  p.init_state = Value::pair(Value::list({}), Value::integer(0));
  p.init_output = Value::pair(m.payloads.identity, m.requests.identity);
  return p;
}

}  // namespace detail

// loop(sender ; (network1 x id) ; receiver ; (id x network2)):
// List[T[List[T]]] ~> List[List[T]]. Batches are per-round inputs; each
// round's feedback carries the retransmission requests back to the sender.
inline Processor tcp_system(const NetworkConfig& net1, const NetworkConfig& net2) {
  TcpMonoids m = tcp_monoids();
  Processor sender = detail::tcp_sender(m);
  Processor receiver = detail::tcp_receiver(m);
  Processor network1 = detail::network_processor(
      "network1", m.packets, net1, [](const Value& packet) { return packet.first().as_int(); });
  Processor network2 = detail::network_processor(
      "network2", m.requests, net2, [](const Value& req) { return req.as_int(); });

  Processor stage1 = seq(sender, par(network1, pure(identity_hom(m.requests))));
  Processor stage2 = seq(stage1, receiver);
  Processor sigma = seq(stage2, par(pure(identity_hom(m.payloads)), network2));
  Processor system = loop_(sigma);
  system.name = "tcp";
  return with_reachable_states(system);
}

// One data batch carrying the payloads and a round tick.
inline Value tcp_data_batch(const std::vector<Value>& payloads) {
  return Value::list({Value::list(payloads), Value::list({})});
}

// A round with no new data, just the passage of time.
inline Value tcp_tick_batch() { return Value::list({Value::list({}), Value::list({})}); }

struct TcpRun {
  bool delivered = false;
  bool prefix_ok = true;
  int rounds_used = 0;
  std::vector<Value> received;
};

// Drives the loop system round by round, checking after every step that the
// cumulative delivery is a prefix of the sent list.
inline TcpRun tcp_deliver(const Processor& system, const std::vector<Value>& payloads,
                          int max_rounds) {
  TcpRun result;
  StepSession session(system);
  auto absorb = [&](const Value& increment) {
    for (const auto& round_output : increment.elems())
      for (const auto& payload : round_output.elems()) result.received.push_back(payload);
  };
  absorb(system.init_output);
  auto prefix_holds = [&]() {
    if (result.received.size() > payloads.size()) return false;
    for (std::size_t i = 0; i < result.received.size(); ++i)
      if (!(result.received[i] == payloads[i])) return false;
    return true;
  };
  for (int round = 1; round <= max_rounds; ++round) {
    Value batch = round == 1 ? tcp_data_batch(payloads) : tcp_tick_batch();
    StepEntry entry = session.feed(Value::list({batch}));
    absorb(entry.increment);
    result.prefix_ok = result.prefix_ok && prefix_holds();
    result.rounds_used = round;
    if (result.received.size() == payloads.size() && result.prefix_ok) {
      result.delivered = true;
      break;
    }
  }
  return result;
}

// Loose delivery bound: sum of per-packet deadlines plus one.
inline std::int64_t tcp_delivery_bound(const NetworkConfig& net1, const NetworkConfig& net2,
                                       std::size_t message_count) {
  std::int64_t bound = 1;
  for (std::size_t i = 0; i < message_count; ++i) {
    bound += net1.deadline_for(static_cast<std::int64_t>(i));
    bound += net2.deadline_for(static_cast<std::int64_t>(i));
  }
  return bound;
}

// ---------------------------------------------------------------------------
// Feedback demo: F(m, u) = (u, u + m), a homomorphic feedback body

inline Processor counter_loop_processor() {
  MonoidSpec ints = int_add_group();
  MonoidSpec pair = direct_product(ints, ints);
  HomSpec body{"swap_accum", pair, pair, [](const Value& v) {
                 return Value::pair(v.second(),
                                    Value::integer(v.first().as_int() + v.second().as_int()));
               }};
  Processor looped = loop_(pure(body));
  looped.name = "counter";
  return looped;
}

}  // namespace streamalg
