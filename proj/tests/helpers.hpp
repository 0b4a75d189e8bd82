#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamalg/monoid.hpp"
#include "streamalg/rng.hpp"
#include "streamalg/value.hpp"

namespace streamalg::testing {

inline Value vi(std::int64_t n) { return Value::integer(n); }
inline Value vs(const std::string& s) { return Value::str(s); }

inline Value vlist(std::vector<std::int64_t> xs) {
  std::vector<Value> vs;
  for (auto x : xs) vs.push_back(vi(x));
  return Value::list(std::move(vs));
}

inline Value vset(std::vector<std::string> xs) {
  std::vector<Value> vs;
  for (const auto& x : xs) vs.push_back(Value::str(x));
  return Value::list(normalize_set(std::move(vs)));
}

inline Alphabet small_int_alphabet() {
  return Alphabet{"i", [](Rng& rng) { return vi(rng.range(-9, 9)); }, std::nullopt};
}

inline Alphabet letter_alphabet() {
  std::vector<Value> letters = {vs("a"), vs("b"), vs("c"), vs("d"), vs("e")};
  auto copy = letters;
  return Alphabet{"letter", [copy](Rng& rng) { return copy[rng.below(copy.size())]; },
                  std::move(letters)};
}

}  // namespace streamalg::testing
