#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace streamalg {

// Universal element representation. Monoid carriers are built from units,
// booleans, integers, strings and lists; canonical forms (sorted sets, bag
// entries, tick segments) are maintained by the owning monoid's product.
//
// The Fn alternative holds a state-transition closure s -> [s', out] so that
// elements of State monoids are first-class values. A closure may carry a
// "word": its decomposition into generator tags, which is what
// defunctionalization reads back out.
class Value {
 public:
  enum class Kind : std::uint8_t { Unit, Bool, Int, Str, List, Fn };

  using RunFn = std::function<Value(const Value&)>;

  struct FnData {
    RunFn run;
    std::optional<std::vector<Value>> word;  // generator-tag provenance
  };

  Value() = default;

  static Value unit() { return Value(); }

  static Value boolean(bool b) {
    Value v;
    v.kind_ = Kind::Bool;
    v.bool_ = b;
    return v;
  }

  static Value integer(std::int64_t i) {
    Value v;
    v.kind_ = Kind::Int;
    v.int_ = i;
    return v;
  }

  static Value str(std::string s) {
    Value v;
    v.kind_ = Kind::Str;
    v.str_ = std::make_shared<const std::string>(std::move(s));
    return v;
  }

  static Value list(std::vector<Value> xs) {
    Value v;
    v.kind_ = Kind::List;
    v.list_ = std::make_shared<const std::vector<Value>>(std::move(xs));
    return v;
  }

  static Value pair(Value a, Value b) {
    std::vector<Value> xs;
    xs.reserve(2);
    xs.push_back(std::move(a));
    xs.push_back(std::move(b));
    return list(std::move(xs));
  }

  static Value fn(RunFn run, std::optional<std::vector<Value>> word = std::nullopt) {
    Value v;
    v.kind_ = Kind::Fn;
    v.fn_ = std::make_shared<const FnData>(FnData{std::move(run), std::move(word)});
    return v;
  }

  Kind kind() const { return kind_; }
  bool is_unit() const { return kind_ == Kind::Unit; }
  bool is_list() const { return kind_ == Kind::List; }
  bool is_fn() const { return kind_ == Kind::Fn; }

  bool as_bool() const {
    expect(Kind::Bool);
    return bool_;
  }

  std::int64_t as_int() const {
    expect(Kind::Int);
    return int_;
  }

  const std::string& as_str() const {
    expect(Kind::Str);
    return *str_;
  }

  const std::vector<Value>& elems() const& {
    expect(Kind::List);
    return *list_;
  }

  // Copies when called on a temporary so range-for never dangles.
  std::vector<Value> elems() && {
    expect(Kind::List);
    return *list_;
  }

  std::size_t size() const { return elems().size(); }
  Value at(std::size_t i) const { return elems().at(i); }
  Value first() const { return at(0); }
  Value second() const { return at(1); }

  const FnData& fn_data() const {
    expect(Kind::Fn);
    return *fn_;
  }

  // Applies a state-transition closure; result is the [state', out] pair.
  Value operator()(const Value& state) const { return fn_data().run(state); }

  // Total order across all values; closures compare by identity.
  static int compare(const Value& a, const Value& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_ ? -1 : 1;
    switch (a.kind_) {
      case Kind::Unit:
        return 0;
      case Kind::Bool:
        return a.bool_ == b.bool_ ? 0 : (!a.bool_ ? -1 : 1);
      case Kind::Int:
        return a.int_ == b.int_ ? 0 : (a.int_ < b.int_ ? -1 : 1);
      case Kind::Str:
        return a.str_->compare(*b.str_);
      case Kind::List: {
        const auto& xs = *a.list_;
        const auto& ys = *b.list_;
        for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
          int c = compare(xs[i], ys[i]);
          if (c != 0) return c;
        }
        if (xs.size() == ys.size()) return 0;
        return xs.size() < ys.size() ? -1 : 1;
      }
      case Kind::Fn: {
        const void* pa = a.fn_.get();
        const void* pb = b.fn_.get();
        if (pa == pb) return 0;
        return std::less<const void*>{}(pa, pb) ? -1 : 1;
      }
    }
    return 0;
  }

  friend bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Value& a, const Value& b) { return compare(a, b) != 0; }
  friend bool operator<(const Value& a, const Value& b) { return compare(a, b) < 0; }

  nlohmann::ordered_json to_json() const {
    switch (kind_) {
      case Kind::Unit:
        return nullptr;
      case Kind::Bool:
        return bool_;
      case Kind::Int:
        return int_;
      case Kind::Str:
        return *str_;
      case Kind::List: {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& x : *list_) arr.push_back(x.to_json());
        return arr;
      }
      case Kind::Fn:
        throw std::runtime_error("closure values have no JSON encoding");
    }
    return nullptr;
  }

  static Value from_json(const nlohmann::json& j) {
    if (j.is_null()) return unit();
    if (j.is_boolean()) return boolean(j.get<bool>());
    if (j.is_number_integer()) return integer(j.get<std::int64_t>());
    if (j.is_string()) return str(j.get<std::string>());
    if (j.is_array()) {
      std::vector<Value> xs;
      xs.reserve(j.size());
      for (const auto& e : j) xs.push_back(from_json(e));
      return list(std::move(xs));
    }
    throw std::runtime_error("unsupported JSON value for element decoding");
  }

  std::string dump() const {
    if (kind_ == Kind::Fn) return "<fn>";
    return to_json().dump();
  }

  // FNV-1a over the canonical encoding; used for trace state digests.
  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    digest_into(h);
    return h;
  }

 private:
  void expect(Kind k) const {
    if (kind_ != k) throw std::runtime_error("value kind mismatch: " + dump());
  }

  void digest_into(std::uint64_t& h) const {
    auto mix = [&h](std::uint64_t x) {
      for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
      }
    };
    mix(static_cast<std::uint64_t>(kind_));
    switch (kind_) {
      case Kind::Unit:
        break;
      case Kind::Bool:
        mix(bool_ ? 1 : 0);
        break;
      case Kind::Int:
        mix(static_cast<std::uint64_t>(int_));
        break;
      case Kind::Str:
        for (char c : *str_) mix(static_cast<unsigned char>(c));
        break;
      case Kind::List:
        mix(list_->size());
        for (const auto& x : *list_) x.digest_into(h);
        break;
      case Kind::Fn:
        mix(reinterpret_cast<std::uintptr_t>(fn_.get()));
        break;
    }
  }

  Kind kind_ = Kind::Unit;
  bool bool_ = false;
  std::int64_t int_ = 0;
  std::shared_ptr<const std::string> str_;
  std::shared_ptr<const std::vector<Value>> list_;
  std::shared_ptr<const FnData> fn_;
};

// Sorted, duplicate-free representation used by set-like carriers.
inline std::vector<Value> normalize_set(std::vector<Value> xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace streamalg
