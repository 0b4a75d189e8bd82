#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "streamalg/monoid.hpp"
#include "streamalg/processor.hpp"
#include "streamalg/state.hpp"
#include "streamalg/value.hpp"

namespace streamalg {

// ---------------------------------------------------------------------------
// Registry: named monoids, state spaces, homomorphisms and processors that
// terms reference. Derived names (prod, tensor, ticked, list, set, state,
// acc, pair) resolve structurally, so serialized terms stay self-contained.

class Registry {
 public:
  void add_alphabet(Alphabet a) { alphabets_.insert_or_assign(a.name, std::move(a)); }
  void add_monoid(MonoidSpec m) { monoids_.insert_or_assign(m.name, std::move(m)); }
  void add_space(StateSpace s) { spaces_.insert_or_assign(s.name, std::move(s)); }
  void add_hom(HomSpec h) { homs_.insert_or_assign(h.name, std::move(h)); }
  void add_processor(Processor p) { procs_.insert_or_assign(p.name, std::move(p)); }

  void add_splitter(Processor splitter, const std::string& monoid_name) {
    splitters_.insert_or_assign(monoid_name, splitter.name);
    add_processor(std::move(splitter));
  }

  bool has_processor(const std::string& name) const { return procs_.count(name) != 0; }
  bool has_hom(const std::string& name) const { return homs_.count(name) != 0; }

  const std::map<std::string, MonoidSpec>& monoids() const { return monoids_; }
  const std::map<std::string, HomSpec>& homs() const { return homs_; }
  const std::map<std::string, Processor>& processors() const { return procs_; }

  const Processor& processor(const std::string& name) const {
    auto it = procs_.find(name);
    if (it == procs_.end()) throw std::invalid_argument("unknown processor: " + name);
    return it->second;
  }

  // The registered splitter for a monoid, if any.
  const Processor* splitter_for(const std::string& monoid_name) const {
    auto it = splitters_.find(monoid_name);
    return it == splitters_.end() ? nullptr : &procs_.at(it->second);
  }

  MonoidSpec monoid(const std::string& name) const {
    auto it = monoids_.find(name);
    if (it != monoids_.end()) return it->second;
    auto [head, args] = parse_call(name);
    if (head == "prod" && args.size() == 2) return direct_product(monoid(args[0]), monoid(args[1]));
    if (head == "tensor" && args.size() == 2)
      return tensor_product(monoid(args[0]), monoid(args[1]));
    if (head == "ticked" && args.size() == 1) return ticked(monoid(args[0]));
    if (head == "set" && args.size() == 1) return mk_set_monoid(alphabet(args[0]));
    if (head == "list" && args.size() == 1) {
      auto ait = alphabets_.find(args[0]);
      if (ait != alphabets_.end()) return mk_list_monoid(ait->second);
      return list_of(monoid(args[0]));
    }
    if (head == "state" && args.size() == 2) return state_monoid(space(args[0]), monoid(args[1]));
    throw std::invalid_argument("unknown monoid: " + name);
  }

  StateSpace space(const std::string& name) const {
    auto it = spaces_.find(name);
    if (it != spaces_.end()) return it->second;
    auto [head, args] = parse_call(name);
    if (head == "acc" && args.size() == 1) return carrier_space(monoid(args[0]));
    if (head == "pair" && args.size() == 2) return product_space(space(args[0]), space(args[1]));
    throw std::invalid_argument("unknown state space: " + name);
  }

  // Resolves a hom reference in the context of its input monoid. Forms:
  //   name        a registered homomorphism
  //   id          identity on the context monoid
  //   hom:P       the homomorphism of processor P into its State monoid
  //   push:H      H pushed into a State monoid (context must be state(S, _))
  //   fst:H       H x id on a direct-product context
  //   map:H       H applied entrywise on a list(_) context
  HomSpec hom(const std::string& ref, const std::string& input_monoid) const {
    if (ref == "id") return identity_hom(monoid(input_monoid));
    if (ref.rfind("hom:", 0) == 0) {
      const Processor& p = processor(ref.substr(4));
      if (p.input.name != input_monoid)
        throw std::invalid_argument("hom ref " + ref + ": processor input " + p.input.name +
                                    " does not match context " + input_monoid);
      return p.hom_spec();
    }
    if (ref.rfind("push:", 0) == 0) {
      auto [head, args] = parse_call(input_monoid);
      if (head != "state" || args.size() != 2)
        throw std::invalid_argument("hom ref " + ref + " needs a state(...) context, got " +
                                    input_monoid);
      HomSpec inner = hom(ref.substr(5), args[1]);
      HomSpec pushed = push_forward_hom(inner, space(args[0]));
      pushed.name = ref;
      return pushed;
    }
    if (ref.rfind("fst:", 0) == 0) {
      auto [head, args] = parse_call(input_monoid);
      if (head != "prod" || args.size() != 2)
        throw std::invalid_argument("hom ref " + ref + " needs a prod(...) context, got " +
                                    input_monoid);
      HomSpec inner = hom(ref.substr(4), args[0]);
      MonoidSpec u = monoid(args[1]);
      auto apply = inner.apply;
      return HomSpec{ref, direct_product(inner.source, u), direct_product(inner.target, u),
                     [apply](const Value& v) { return Value::pair(apply(v.first()), v.second()); },
                     {}};
    }
    if (ref.rfind("map:", 0) == 0) {
      auto [head, args] = parse_call(input_monoid);
      if (head != "list" || args.size() != 1)
        throw std::invalid_argument("hom ref " + ref + " needs a list(...) context, got " +
                                    input_monoid);
      HomSpec inner = hom(ref.substr(4), args[0]);
      auto apply = inner.apply;
      return HomSpec{ref, list_of(inner.source), list_of(inner.target),
                     [apply](const Value& v) {
                       std::vector<Value> mapped;
                       for (const auto& x : v.elems()) mapped.push_back(apply(x));
                       return Value::list(std::move(mapped));
                     },
                     {}};
    }
    auto it = homs_.find(ref);
    if (it == homs_.end()) throw std::invalid_argument("unknown hom: " + ref);
    if (it->second.source.name != input_monoid)
      throw std::invalid_argument("hom " + ref + ": source " + it->second.source.name +
                                  " does not match context " + input_monoid);
    return it->second;
  }

  // Composes a hom chain left-to-right starting from the given input monoid.
  HomSpec hom_chain(const std::vector<std::string>& refs, const std::string& input_monoid) const {
    if (refs.empty()) return identity_hom(monoid(input_monoid));
    HomSpec acc = hom(refs[0], input_monoid);
    for (std::size_t i = 1; i < refs.size(); ++i) acc = hom_compose(acc, hom(refs[i], acc.target.name));
    return acc;
  }

 private:
  const Alphabet& alphabet(const std::string& name) const {
    auto it = alphabets_.find(name);
    if (it == alphabets_.end()) throw std::invalid_argument("unknown alphabet: " + name);
    return it->second;
  }

  // Splits "head(arg1,arg2)" at top-level commas; plain names yield no args.
  static std::pair<std::string, std::vector<std::string>> parse_call(const std::string& name) {
    auto open = name.find('(');
    if (open == std::string::npos || name.back() != ')') return {name, {}};
    std::string head = name.substr(0, open);
    std::vector<std::string> args;
    int depth = 0;
    std::string cur;
    for (std::size_t i = open + 1; i + 1 < name.size(); ++i) {
      char c = name[i];
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (c == ',' && depth == 0) {
        args.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    args.push_back(cur);
    return {head, args};
  }

  std::map<std::string, Alphabet> alphabets_;
  std::map<std::string, MonoidSpec> monoids_;
  std::map<std::string, StateSpace> spaces_;
  std::map<std::string, HomSpec> homs_;
  std::map<std::string, Processor> procs_;
  std::map<std::string, std::string> splitters_;  // monoid name -> splitter proc
};

// ---------------------------------------------------------------------------
// Pipeline terms: the syntax the rewrite rules manipulate. Nodes carry their
// input/output monoid names; structural typing is by name equality.

enum class TermKind { Pure, Stateful, Eval, Seq, Par, Loop, Split, Merge };

struct PipelineTerm {
  TermKind kind = TermKind::Pure;
  std::vector<PipelineTerm> children;
  std::vector<std::string> homs;    // Pure: hom chain, composed left-to-right
  std::string proc;                 // Stateful / Eval / Split
  std::vector<std::string> pre;     // Stateful / Eval: fused-in front homs
  std::vector<std::string> pushed;  // Eval: homs pushed across the eval
  std::string monoid;               // Merge
  std::string input_monoid;
  std::string output_monoid;
};

inline const char* term_kind_name(TermKind k) {
  switch (k) {
    case TermKind::Pure: return "pure";
    case TermKind::Stateful: return "stateful";
    case TermKind::Eval: return "eval";
    case TermKind::Seq: return "seq";
    case TermKind::Par: return "par";
    case TermKind::Loop: return "loop";
    case TermKind::Split: return "split";
    case TermKind::Merge: return "merge";
  }
  return "?";
}

// --- builders --------------------------------------------------------------

inline PipelineTerm t_pure(const Registry& reg, std::vector<std::string> homs,
                           const std::string& input_monoid) {
  if (homs.empty()) throw std::invalid_argument("pure node needs at least one hom");
  HomSpec chain = reg.hom_chain(homs, input_monoid);
  PipelineTerm t;
  t.kind = TermKind::Pure;
  t.homs = std::move(homs);
  t.input_monoid = input_monoid;
  t.output_monoid = chain.target.name;
  return t;
}

inline PipelineTerm t_stateful(const Registry& reg, const std::string& proc,
                               std::vector<std::string> pre = {},
                               std::optional<std::string> input_override = std::nullopt) {
  const Processor& p = reg.processor(proc);
  PipelineTerm t;
  t.kind = TermKind::Stateful;
  t.proc = proc;
  t.pre = std::move(pre);
  t.input_monoid = t.pre.empty() ? p.input.name : input_override.value_or("");
  if (t.input_monoid.empty())
    throw std::invalid_argument("stateful node with pre homs needs an input annotation");
  HomSpec chain = reg.hom_chain(t.pre, t.input_monoid);
  if (chain.target.name != p.input.name)
    throw std::invalid_argument("stateful node: pre chain ends at " + chain.target.name +
                                " but processor expects " + p.input.name);
  t.output_monoid = p.output.name;
  return t;
}

inline PipelineTerm t_eval(const Registry& reg, const std::string& proc,
                           std::vector<std::string> pushed = {}, std::vector<std::string> pre = {},
                           std::optional<std::string> input_override = std::nullopt) {
  const Processor& p = reg.processor(proc);
  HomSpec push_chain = reg.hom_chain(pushed, p.output.name);
  std::string carried = push_chain.target.name;
  std::string eval_input = "state(" + p.states.name + "," + carried + ")";
  PipelineTerm t;
  t.kind = TermKind::Eval;
  t.proc = proc;
  t.pushed = std::move(pushed);
  t.pre = std::move(pre);
  t.input_monoid = t.pre.empty() ? eval_input : input_override.value_or("");
  if (t.input_monoid.empty())
    throw std::invalid_argument("eval node with pre homs needs an input annotation");
  HomSpec chain = reg.hom_chain(t.pre, t.input_monoid);
  if (chain.target.name != eval_input)
    throw std::invalid_argument("eval node: pre chain ends at " + chain.target.name +
                                " but eval expects " + eval_input);
  t.output_monoid = carried;
  return t;
}

inline PipelineTerm t_seq(PipelineTerm a, PipelineTerm b) {
  if (a.output_monoid != b.input_monoid)
    throw std::invalid_argument("seq: annotation mismatch " + a.output_monoid + " vs " +
                                b.input_monoid);
  PipelineTerm t;
  t.kind = TermKind::Seq;
  t.input_monoid = a.input_monoid;
  t.output_monoid = b.output_monoid;
  t.children = {std::move(a), std::move(b)};
  return t;
}

inline PipelineTerm t_par(PipelineTerm a, PipelineTerm b) {
  PipelineTerm t;
  t.kind = TermKind::Par;
  t.input_monoid = "prod(" + a.input_monoid + "," + b.input_monoid + ")";
  t.output_monoid = "prod(" + a.output_monoid + "," + b.output_monoid + ")";
  t.children = {std::move(a), std::move(b)};
  return t;
}

inline PipelineTerm t_loop(const Registry& reg, PipelineTerm body) {
  MonoidSpec in = reg.monoid(body.input_monoid);
  MonoidSpec out = reg.monoid(body.output_monoid);
  if (in.parts.size() != 2 || out.parts.size() != 2 || in.parts[1].name != out.parts[1].name)
    throw std::invalid_argument("loop body must have type M x U ~> N x U");
  PipelineTerm t;
  t.kind = TermKind::Loop;
  t.input_monoid = "list(" + in.parts[0].name + ")";
  t.output_monoid = "list(" + out.parts[0].name + ")";
  t.children = {std::move(body)};
  return t;
}

inline PipelineTerm t_split(const Registry& reg, const std::string& splitter_proc) {
  const Processor& p = reg.processor(splitter_proc);
  PipelineTerm t;
  t.kind = TermKind::Split;
  t.proc = splitter_proc;
  t.input_monoid = p.input.name;
  t.output_monoid = p.output.name;
  return t;
}

inline PipelineTerm t_merge(const Registry& reg, const std::string& monoid_name) {
  MonoidSpec m = reg.monoid(monoid_name);
  if (!m.flags.commutative)
    throw std::invalid_argument("merge: " + monoid_name + " is not commutative");
  PipelineTerm t;
  t.kind = TermKind::Merge;
  t.monoid = monoid_name;
  t.input_monoid = "prod(" + monoid_name + "," + monoid_name + ")";
  t.output_monoid = monoid_name;
  return t;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::ordered_json term_to_json(const PipelineTerm& t) {
  nlohmann::ordered_json j;
  j["kind"] = term_kind_name(t.kind);
  nlohmann::ordered_json refs = nlohmann::ordered_json::object();
  if (!t.homs.empty()) refs["homs"] = t.homs;
  if (!t.proc.empty()) refs["proc"] = t.proc;
  if (!t.pre.empty()) refs["pre"] = t.pre;
  if (!t.pushed.empty()) refs["pushed"] = t.pushed;
  if (!t.monoid.empty()) refs["monoid"] = t.monoid;
  j["refs"] = refs;
  j["monoids"] = {{"in", t.input_monoid}, {"out", t.output_monoid}};
  nlohmann::ordered_json kids = nlohmann::ordered_json::array();
  for (const auto& c : t.children) kids.push_back(term_to_json(c));
  j["children"] = kids;
  return j;
}

inline PipelineTerm term_from_json(const nlohmann::json& j) {
  PipelineTerm t;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "pure") t.kind = TermKind::Pure;
  else if (kind == "stateful") t.kind = TermKind::Stateful;
  else if (kind == "eval") t.kind = TermKind::Eval;
  else if (kind == "seq") t.kind = TermKind::Seq;
  else if (kind == "par") t.kind = TermKind::Par;
  else if (kind == "loop") t.kind = TermKind::Loop;
  else if (kind == "split") t.kind = TermKind::Split;
  else if (kind == "merge") t.kind = TermKind::Merge;
  else throw std::invalid_argument("unknown term kind: " + kind);
  if (j.contains("refs")) {
    const auto& refs = j.at("refs");
    if (refs.contains("homs")) t.homs = refs.at("homs").get<std::vector<std::string>>();
    if (refs.contains("proc")) t.proc = refs.at("proc").get<std::string>();
    if (refs.contains("pre")) t.pre = refs.at("pre").get<std::vector<std::string>>();
    if (refs.contains("pushed")) t.pushed = refs.at("pushed").get<std::vector<std::string>>();
    if (refs.contains("monoid")) t.monoid = refs.at("monoid").get<std::string>();
  }
  t.input_monoid = j.at("monoids").at("in").get<std::string>();
  t.output_monoid = j.at("monoids").at("out").get<std::string>();
  if (j.contains("children"))
    for (const auto& c : j.at("children")) t.children.push_back(term_from_json(c));
  return t;
}

inline std::string term_fingerprint(const PipelineTerm& t) { return term_to_json(t).dump(); }

inline bool term_equal(const PipelineTerm& a, const PipelineTerm& b) {
  return term_fingerprint(a) == term_fingerprint(b);
}

// --- annotation validation ---------------------------------------------------

// Recomputes every node's monoid annotations from its refs and children and
// compares with the stored ones.
inline void check_annotations(const PipelineTerm& t, const Registry& reg) {
  PipelineTerm rebuilt;
  switch (t.kind) {
    case TermKind::Pure:
      rebuilt = t_pure(reg, t.homs, t.input_monoid);
      break;
    case TermKind::Stateful:
      rebuilt = t_stateful(reg, t.proc, t.pre, t.input_monoid);
      break;
    case TermKind::Eval:
      rebuilt = t_eval(reg, t.proc, t.pushed, t.pre, t.input_monoid);
      break;
    case TermKind::Seq:
      check_annotations(t.children.at(0), reg);
      check_annotations(t.children.at(1), reg);
      rebuilt = t_seq(t.children[0], t.children[1]);
      break;
    case TermKind::Par:
      check_annotations(t.children.at(0), reg);
      check_annotations(t.children.at(1), reg);
      rebuilt = t_par(t.children[0], t.children[1]);
      break;
    case TermKind::Loop:
      check_annotations(t.children.at(0), reg);
      rebuilt = t_loop(reg, t.children[0]);
      break;
    case TermKind::Split:
      rebuilt = t_split(reg, t.proc);
      break;
    case TermKind::Merge:
      rebuilt = t_merge(reg, t.monoid);
      break;
  }
  if (rebuilt.input_monoid != t.input_monoid || rebuilt.output_monoid != t.output_monoid)
    throw std::invalid_argument("annotation mismatch on " + std::string(term_kind_name(t.kind)) +
                                " node: stored " + t.input_monoid + " ~> " + t.output_monoid +
                                ", derived " + rebuilt.input_monoid + " ~> " +
                                rebuilt.output_monoid);
}

// --- denotation ---------------------------------------------------------------

inline Processor denote_term(const PipelineTerm& t, const Registry& reg) {
  switch (t.kind) {
    case TermKind::Pure:
      return pure(reg.hom_chain(t.homs, t.input_monoid));
    case TermKind::Stateful: {
      Processor p = reg.processor(t.proc);
      if (t.pre.empty()) return p;
      return fuse_pre_hom(reg.hom_chain(t.pre, t.input_monoid), p);
    }
    case TermKind::Eval: {
      Processor p = reg.processor(t.proc);
      Processor e = t.pushed.empty() ? eval_processor(p)
                                     : eval_pushed(p, reg.hom_chain(t.pushed, p.output.name));
      if (t.pre.empty()) return e;
      return fuse_pre_hom(reg.hom_chain(t.pre, t.input_monoid), e);
    }
    case TermKind::Seq:
      return seq(denote_term(t.children.at(0), reg), denote_term(t.children.at(1), reg));
    case TermKind::Par:
      return par(denote_term(t.children.at(0), reg), denote_term(t.children.at(1), reg));
    case TermKind::Loop:
      return loop_(denote_term(t.children.at(0), reg));
    case TermKind::Split:
      return reg.processor(t.proc);
    case TermKind::Merge:
      return pure(merge_hom(reg.monoid(t.monoid)));
  }
  throw std::logic_error("unreachable term kind");
}

// ---------------------------------------------------------------------------
// Rewrite rules

struct RuleOutcome {
  enum class Status { NoMatch, Rejected, Rewritten };
  Status status = Status::NoMatch;
  std::string reason;
  PipelineTerm term;

  static RuleOutcome no_match() { return {}; }
  static RuleOutcome rejected(std::string why) {
    RuleOutcome o;
    o.status = Status::Rejected;
    o.reason = std::move(why);
    return o;
  }
  static RuleOutcome rewritten(PipelineTerm t) {
    RuleOutcome o;
    o.status = Status::Rewritten;
    o.term = std::move(t);
    return o;
  }
};

struct RewriteRule {
  std::string name;
  bool fire_once = false;  // strategic guard for expansion rules
  std::function<RuleOutcome(const PipelineTerm&, const Registry&)> apply_at;
};

namespace rules_detail {

inline bool is_proc_node(const PipelineTerm& t) {
  return t.kind == TermKind::Stateful || t.kind == TermKind::Eval;
}

}  // namespace rules_detail

inline std::string strip_list(const std::string& name) {
  if (name.rfind("list(", 0) == 0 && name.back() == ')') return name.substr(5, name.size() - 6);
  throw std::invalid_argument("expected list(...) monoid, got " + name);
}

inline std::string feedback_of(const Registry& reg, const PipelineTerm& body) {
  MonoidSpec in = reg.monoid(body.input_monoid);
  if (in.parts.size() != 2) throw std::invalid_argument("loop body input is not a product");
  return in.parts[1].name;
}

// pure f ; (S, g, s, o)  ~>  (S, f ; g, s, o)
inline RewriteRule rule_fuse() {
  return {"fuse", false, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Seq) return RuleOutcome::no_match();
            const PipelineTerm& head = t.children[0];
            const PipelineTerm& tail = t.children[1];
            if (head.kind != TermKind::Pure || !rules_detail::is_proc_node(tail))
              return RuleOutcome::no_match();
            std::vector<std::string> pre = head.homs;
            pre.insert(pre.end(), tail.pre.begin(), tail.pre.end());
            PipelineTerm fused =
                tail.kind == TermKind::Stateful
                    ? t_stateful(reg, tail.proc, pre, head.input_monoid)
                    : t_eval(reg, tail.proc, tail.pushed, pre, head.input_monoid);
            return RuleOutcome::rewritten(std::move(fused));
          }};
}

// pure (f ; g)  ~>  pure f ; pure g
inline RewriteRule rule_decouple() {
  return {"decouple", false, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Pure || t.homs.size() < 2) return RuleOutcome::no_match();
            std::vector<std::string> first = {t.homs.front()};
            std::vector<std::string> rest(t.homs.begin() + 1, t.homs.end());
            PipelineTerm a = t_pure(reg, first, t.input_monoid);
            PipelineTerm b = t_pure(reg, rest, a.output_monoid);
            return RuleOutcome::rewritten(t_seq(std::move(a), std::move(b)));
          }};
}

// pure f ; pure g  ~>  pure (f ; g)
inline RewriteRule rule_decouple_rev() {
  return {"decouple-rev", false, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Seq) return RuleOutcome::no_match();
            const PipelineTerm& a = t.children[0];
            const PipelineTerm& b = t.children[1];
            if (a.kind != TermKind::Pure || b.kind != TermKind::Pure)
              return RuleOutcome::no_match();
            std::vector<std::string> homs = a.homs;
            homs.insert(homs.end(), b.homs.begin(), b.homs.end());
            return RuleOutcome::rewritten(t_pure(reg, homs, a.input_monoid));
          }};
}

// (S, f, s, o)  ~>  pure f ; eval sigma
inline RewriteRule rule_decompose() {
  return {"decompose", false, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Stateful) return RuleOutcome::no_match();
            std::vector<std::string> homs = t.pre;
            homs.push_back("hom:" + t.proc);
            PipelineTerm head = t_pure(reg, homs, t.input_monoid);
            PipelineTerm tail = t_eval(reg, t.proc);
            return RuleOutcome::rewritten(t_seq(std::move(head), std::move(tail)));
          }};
}

// eval sigma ; pure g  ~>  pure g_* ; eval_{g_*} sigma   (needs o_eps = eps)
inline RewriteRule rule_exchange() {
  return {"exchange", false, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Seq) return RuleOutcome::no_match();
            const PipelineTerm& ev = t.children[0];
            const PipelineTerm& pr = t.children[1];
            if (ev.kind != TermKind::Eval || pr.kind != TermKind::Pure)
              return RuleOutcome::no_match();
            Processor denoted = denote_term(ev, reg);
            if (!denoted.output.eq(denoted.init_output, denoted.output.identity))
              return RuleOutcome::rejected("eval node has non-identity initial output " +
                                           denoted.init_output.dump());
            std::string g = pr.homs.front();
            std::vector<std::string> pushed = ev.pushed;
            pushed.push_back(g);
            PipelineTerm new_eval = t_eval(reg, ev.proc, pushed);
            std::vector<std::string> front_homs = ev.pre;
            front_homs.push_back("push:" + g);
            PipelineTerm front = t_pure(reg, front_homs, ev.input_monoid);
            PipelineTerm result = t_seq(std::move(front), std::move(new_eval));
            if (pr.homs.size() > 1) {
              std::vector<std::string> rest(pr.homs.begin() + 1, pr.homs.end());
              PipelineTerm tail = t_pure(reg, rest, result.output_monoid);
              result = t_seq(std::move(result), std::move(tail));
            }
            return RuleOutcome::rewritten(std::move(result));
          }};
}

// (a ; b) ; c  <->  a ; (b ; c)
inline RewriteRule rule_assoc_right() {
  return {"assoc-right", false, [](const PipelineTerm& t, const Registry&) {
            if (t.kind != TermKind::Seq || t.children[0].kind != TermKind::Seq)
              return RuleOutcome::no_match();
            PipelineTerm a = t.children[0].children[0];
            PipelineTerm b = t.children[0].children[1];
            PipelineTerm c = t.children[1];
            return RuleOutcome::rewritten(t_seq(std::move(a), t_seq(std::move(b), std::move(c))));
          }};
}

inline RewriteRule rule_assoc_left() {
  return {"assoc-left", false, [](const PipelineTerm& t, const Registry&) {
            if (t.kind != TermKind::Seq || t.children[1].kind != TermKind::Seq)
              return RuleOutcome::no_match();
            PipelineTerm a = t.children[0];
            PipelineTerm b = t.children[1].children[0];
            PipelineTerm c = t.children[1].children[1];
            return RuleOutcome::rewritten(t_seq(t_seq(std::move(a), std::move(b)), std::move(c)));
          }};
}

// pure f  ~>  split ; (pure f x pure f) ; pure merge   (f an endo-hom on a
// commutative monoid with a registered splitter)
inline RewriteRule rule_split_merge() {
  return {"split-merge", true, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Pure) return RuleOutcome::no_match();
            if (t.input_monoid != t.output_monoid) return RuleOutcome::no_match();
            MonoidSpec m = reg.monoid(t.input_monoid);
            if (!m.flags.commutative) return RuleOutcome::no_match();
            const Processor* splitter = reg.splitter_for(t.input_monoid);
            if (!splitter) return RuleOutcome::rejected("no splitter registered for " + t.input_monoid);
            // splitter soundness pre-check: split ; merge ~ id
            Processor merge_back = seq(*splitter, pure(merge_hom(m)));
            EquivVerdict ok = equiv_check(merge_back, pure(identity_hom(m)),
                                          InputGen::from_monoid(m), 64, 0x511fu);
            if (!ok.pass)
              return RuleOutcome::rejected("split;merge is not the identity at " +
                                           ok.witness.front().dump());
            PipelineTerm branches = t_par(t_pure(reg, t.homs, t.input_monoid),
                                          t_pure(reg, t.homs, t.input_monoid));
            PipelineTerm result = t_seq(t_split(reg, splitter->name),
                                        t_seq(std::move(branches), t_merge(reg, t.output_monoid)));
            return RuleOutcome::rewritten(std::move(result));
          }};
}

// Certificate that a processor behaves homomorphically on the outputs the
// upstream term actually produces: for sampled (n1, n2) in its image,
// run(sigma, n1 . n2) = run(sigma, n1) . run(sigma, n2).
struct IndependenceCertificate {
  PipelineTerm upstream;  // tau : M ~> N x N
  PipelineTerm target;    // sigma : N ~> P
  int budget = 200;
  std::uint64_t seed = 0x1de5ull;
};

inline EquivVerdict check_independence(const IndependenceCertificate& cert, const Registry& reg) {
  Processor upstream = denote_term(cert.upstream, reg);
  Processor target = denote_term(cert.target, reg);
  EquivVerdict verdict;
  if (!target.output.eq(target.init_output, target.output.identity)) {
    verdict.pass = false;
    verdict.note = "target has non-identity initial output";
    return verdict;
  }
  Rng rng(cert.seed);
  for (int i = 0; i < cert.budget; ++i) {
    Value m = upstream.input.sample_element(rng);
    Value pair = run(upstream, m);
    Value n1 = pair.first();
    Value n2 = pair.second();
    ++verdict.cases_run;
    Value joint = run(target, target.input.product(n1, n2));
    Value split_run = target.output.product(run(target, n1), run(target, n2));
    if (!target.output.eq(joint, split_run)) {
      verdict.pass = false;
      verdict.witness = {m, joint, split_run};
      verdict.note = "independence fails on upstream output";
      return verdict;
    }
  }
  return verdict;
}

// sigma  ~>  split ; (merge ; sigma)  for the certificate's target: the setup
// move that exposes the independent-merge redex.
inline RewriteRule rule_split_insert(const IndependenceCertificate& cert) {
  return {"split-insert", true, [cert](const PipelineTerm& t, const Registry& reg) {
            if (!term_equal(t, cert.target)) return RuleOutcome::no_match();
            const Processor* splitter = reg.splitter_for(t.input_monoid);
            if (!splitter)
              return RuleOutcome::rejected("no splitter registered for " + t.input_monoid);
            MonoidSpec m = reg.monoid(t.input_monoid);
            Processor merge_back = seq(*splitter, pure(merge_hom(m)));
            EquivVerdict ok = equiv_check(merge_back, pure(identity_hom(m)),
                                          InputGen::from_monoid(m), 64, 0x511fu);
            if (!ok.pass)
              return RuleOutcome::rejected("split;merge is not the identity at " +
                                           ok.witness.front().dump());
            PipelineTerm result =
                t_seq(t_split(reg, splitter->name), t_seq(t_merge(reg, t.input_monoid), t));
            return RuleOutcome::rewritten(std::move(result));
          }};
}

// tau ; pure merge ; sigma  ~>  tau ; (sigma x sigma) ; pure merge, given an
// independence certificate for sigma over tau's image.
inline RewriteRule rule_partition(const IndependenceCertificate& cert) {
  return {"partition", true, [cert](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Seq) return RuleOutcome::no_match();
            // match tau ; (merge ; sigma) or (tau ; merge) ; sigma
            const PipelineTerm* tau = nullptr;
            const PipelineTerm* merge = nullptr;
            const PipelineTerm* sigma = nullptr;
            if (t.children[1].kind == TermKind::Seq &&
                t.children[1].children[0].kind == TermKind::Merge) {
              tau = &t.children[0];
              merge = &t.children[1].children[0];
              sigma = &t.children[1].children[1];
            } else if (t.children[0].kind == TermKind::Seq &&
                       t.children[0].children[1].kind == TermKind::Merge) {
              tau = &t.children[0].children[0];
              merge = &t.children[0].children[1];
              sigma = &t.children[1];
            } else {
              return RuleOutcome::no_match();
            }
            if (!term_equal(*tau, cert.upstream) || !term_equal(*sigma, cert.target))
              return RuleOutcome::no_match();
            EquivVerdict independent = check_independence(cert, reg);
            if (!independent.pass)
              return RuleOutcome::rejected("independence certificate failed: " + independent.note);
            PipelineTerm branches = t_par(*sigma, *sigma);
            PipelineTerm result =
                t_seq(*tau, t_seq(std::move(branches), t_merge(reg, sigma->output_monoid)));
            (void)merge;
            return RuleOutcome::rewritten(std::move(result));
          }};
}

// pure (map f) ; loop sigma  ~>  loop (pure (f x id) ; sigma)
inline RewriteRule rule_tighten_left() {
  return {"tighten-left", false, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Seq) return RuleOutcome::no_match();
            const PipelineTerm& head = t.children[0];
            const PipelineTerm& lp = t.children[1];
            if (head.kind != TermKind::Pure || head.homs.size() != 1 ||
                lp.kind != TermKind::Loop)
              return RuleOutcome::no_match();
            const std::string& ref = head.homs.front();
            if (ref.rfind("map:", 0) != 0) return RuleOutcome::no_match();
            std::string inner = ref.substr(4);
            const PipelineTerm& body = lp.children[0];
            PipelineTerm front = t_pure(reg, {"fst:" + inner},
                                        "prod(" + strip_list(head.input_monoid) + "," +
                                            feedback_of(reg, body) + ")");
            PipelineTerm new_body = t_seq(std::move(front), body);
            return RuleOutcome::rewritten(t_loop(reg, std::move(new_body)));
          }};
}

// loop sigma ; pure (map g)  ~>  loop (sigma ; pure (g x id))
inline RewriteRule rule_tighten_right() {
  return {"tighten-right", false, [](const PipelineTerm& t, const Registry& reg) {
            if (t.kind != TermKind::Seq) return RuleOutcome::no_match();
            const PipelineTerm& lp = t.children[0];
            const PipelineTerm& tail = t.children[1];
            if (lp.kind != TermKind::Loop || tail.kind != TermKind::Pure ||
                tail.homs.size() != 1)
              return RuleOutcome::no_match();
            const std::string& ref = tail.homs.front();
            if (ref.rfind("map:", 0) != 0) return RuleOutcome::no_match();
            std::string inner = ref.substr(4);
            const PipelineTerm& body = lp.children[0];
            PipelineTerm back = t_pure(reg, {"fst:" + inner}, body.output_monoid);
            PipelineTerm new_body = t_seq(body, std::move(back));
            return RuleOutcome::rewritten(t_loop(reg, std::move(new_body)));
          }};
}

// ---------------------------------------------------------------------------
// Rule application at a path, verification, and the optimizer

using TermPath = std::vector<std::size_t>;

inline const PipelineTerm& subterm_at(const PipelineTerm& t, const TermPath& path) {
  const PipelineTerm* cur = &t;
  for (std::size_t idx : path) {
    if (idx >= cur->children.size())
      throw std::invalid_argument("invalid term path (index " + std::to_string(idx) + ")");
    cur = &cur->children[idx];
  }
  return *cur;
}

inline PipelineTerm replace_at(const PipelineTerm& t, const TermPath& path,
                               const PipelineTerm& replacement, std::size_t depth = 0) {
  if (depth == path.size()) return replacement;
  if (path[depth] >= t.children.size())
    throw std::invalid_argument("invalid term path (index " + std::to_string(path[depth]) + ")");
  PipelineTerm copy = t;
  copy.children[path[depth]] = replace_at(t.children[path[depth]], path, replacement, depth + 1);
  // parent annotations stay: sound rewrites preserve end-to-end monoids
  return copy;
}

// Applies a rule at a path; the rewritten term has annotations re-derived and
// validated. Throws on invalid paths; returns the rule outcome otherwise.
inline RuleOutcome apply_rule(const RewriteRule& rule, const PipelineTerm& t, const TermPath& path,
                              const Registry& reg) {
  const PipelineTerm& target = subterm_at(t, path);
  RuleOutcome outcome = rule.apply_at(target, reg);
  if (outcome.status != RuleOutcome::Status::Rewritten) return outcome;
  if (outcome.term.input_monoid != target.input_monoid ||
      outcome.term.output_monoid != target.output_monoid)
    return RuleOutcome::rejected("rewrite changed end-to-end monoids");
  PipelineTerm whole = replace_at(t, path, outcome.term);
  check_annotations(whole, reg);
  return RuleOutcome::rewritten(std::move(whole));
}

inline EquivVerdict verify_rewrite(const PipelineTerm& before, const PipelineTerm& after,
                                   const Registry& reg, const InputGen& gen, int budget,
                                   std::uint64_t seed) {
  return equiv_check(denote_term(before, reg), denote_term(after, reg), gen, budget, seed);
}

struct RewriteStep {
  std::string rule;
  TermPath path;
  EquivVerdict verdict;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["rule"] = rule;
    j["path"] = path;
    j["verdict"] = verdict.to_json();
    return j;
  }
};

enum class Strategy { Greedy, ExhaustiveToDepth };

struct OptimizeOptions {
  Strategy strategy = Strategy::Greedy;
  int depth = 3;            // for ExhaustiveToDepth
  int verify_budget = 200;  // equivalence cases per applied step
  std::uint64_t seed = 0xa11ce;
  bool trusted = false;  // skip per-step verification (default off)
  int max_steps = 64;
};

struct OptimizeResult {
  PipelineTerm term;
  std::vector<RewriteStep> log;
};

namespace optimize_detail {

inline void all_paths(const PipelineTerm& t, TermPath& cur, std::vector<TermPath>& out) {
  out.push_back(cur);
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    cur.push_back(i);
    all_paths(t.children[i], cur, out);
    cur.pop_back();
  }
}

inline std::size_t term_size(const PipelineTerm& t) {
  std::size_t n = 1;
  for (const auto& c : t.children) n += term_size(c);
  return n;
}

}  // namespace optimize_detail

// Applies rules until none fires (greedy, in rule order) or explores all
// rewrite sequences to a depth and keeps the smallest term. Every applied
// step is verified by the equivalence oracle unless `trusted` is set; a step
// whose verification fails is never committed.
inline OptimizeResult optimize(const PipelineTerm& t, const std::vector<RewriteRule>& rules,
                               const Registry& reg, const OptimizeOptions& opts = {}) {
  InputGen gen = InputGen::from_monoid(denote_term(t, reg).input);
  Rng seeder(opts.seed);

  auto try_step = [&](const PipelineTerm& current, const RewriteRule& rule, const TermPath& path)
      -> std::optional<std::pair<PipelineTerm, RewriteStep>> {
    RuleOutcome outcome = apply_rule(rule, current, path, reg);
    if (outcome.status != RuleOutcome::Status::Rewritten) return std::nullopt;
    RewriteStep step{rule.name, path, {}};
    if (!opts.trusted) {
      step.verdict = verify_rewrite(current, outcome.term, reg, gen, opts.verify_budget,
                                    seeder.next_u64());
      if (!step.verdict.pass) return std::nullopt;
    }
    return std::make_pair(std::move(outcome.term), std::move(step));
  };

  if (opts.strategy == Strategy::Greedy) {
    OptimizeResult result{t, {}};
    std::set<std::string> seen = {term_fingerprint(t)};
    std::set<std::string> fired;
    for (int iter = 0; iter < opts.max_steps; ++iter) {
      bool progressed = false;
      for (const auto& rule : rules) {
        if (rule.fire_once && fired.count(rule.name)) continue;
        std::vector<TermPath> paths;
        TermPath cur;
        optimize_detail::all_paths(result.term, cur, paths);
        for (const auto& path : paths) {
          auto attempt = try_step(result.term, rule, path);
          if (!attempt) continue;
          if (!seen.insert(term_fingerprint(attempt->first)).second) continue;
          result.term = std::move(attempt->first);
          result.log.push_back(std::move(attempt->second));
          if (rule.fire_once) fired.insert(rule.name);
          progressed = true;
          break;
        }
        if (progressed) break;
      }
      if (!progressed) break;
    }
    return result;
  }

  // Exhaustive to depth: breadth-first over verified rewrites, keeping the
  // smallest term encountered ties broken by discovery order.
  struct Node {
    PipelineTerm term;
    std::vector<RewriteStep> log;
  };
  std::vector<Node> frontier = {{t, {}}};
  std::set<std::string> seen = {term_fingerprint(t)};
  Node best = frontier.front();
  for (int depth = 0; depth < opts.depth; ++depth) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      for (const auto& rule : rules) {
        std::vector<TermPath> paths;
        TermPath cur;
        optimize_detail::all_paths(node.term, cur, paths);
        for (const auto& path : paths) {
          auto attempt = try_step(node.term, rule, path);
          if (!attempt) continue;
          if (!seen.insert(term_fingerprint(attempt->first)).second) continue;
          Node child{std::move(attempt->first), node.log};
          child.log.push_back(std::move(attempt->second));
          if (optimize_detail::term_size(child.term) < optimize_detail::term_size(best.term))
            best = child;
          next.push_back(std::move(child));
        }
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return {best.term, best.log};
}

}  // namespace streamalg
