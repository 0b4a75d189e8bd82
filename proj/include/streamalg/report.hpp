#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "streamalg/value.hpp"

namespace streamalg {

struct Counterexample {
  std::string law;                // which law or condition was violated
  std::vector<Value> witness;     // the violating elements, in argument order
  std::string note;               // free-form detail (e.g. both sides)
};

// Outcome of a sampled law suite: zero counterexamples means every sampled
// case passed within the budget, nothing stronger.
struct LawReport {
  std::string subject;
  std::uint64_t seed = 0;
  int cases_run = 0;
  std::vector<Counterexample> failures;

  bool passed() const { return failures.empty(); }

  void fail(std::string law, std::vector<Value> witness, std::string note = "") {
    failures.push_back({std::move(law), std::move(witness), std::move(note)});
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["subject"] = subject;
    j["seed"] = seed;
    j["cases"] = cases_run;
    j["failures"] = nlohmann::ordered_json::array();
    for (const auto& f : failures) {
      nlohmann::ordered_json w = nlohmann::ordered_json::array();
      for (const auto& v : f.witness) w.push_back(v.is_fn() ? nlohmann::ordered_json("<fn>") : v.to_json());
      j["failures"].push_back({{"law", f.law}, {"witness", w}, {"note", f.note}});
    }
    return j;
  }
};

// Verdict of a semantic equivalence check between two processors.
struct EquivVerdict {
  bool pass = true;
  int cases_run = 0;
  // present iff !pass: (input, left output, right output)
  std::vector<Value> witness;
  std::string note;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["status"] = pass ? "pass" : "fail";
    j["cases"] = cases_run;
    if (!pass) {
      nlohmann::ordered_json w = nlohmann::ordered_json::array();
      for (const auto& v : witness) w.push_back(v.is_fn() ? nlohmann::ordered_json("<fn>") : v.to_json());
      j["witness"] = w;
      j["note"] = note;
    }
    return j;
  }
};

}  // namespace streamalg
