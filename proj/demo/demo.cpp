// A short tour: streaming execution, the State-monoid view, and the
// rewrite-driven join optimization.

#include <iostream>

#include "streamalg/registry.hpp"

using namespace streamalg;

int main() {
  Registry reg = default_registry();

  // Streaming a list through the prefix-sum processor, chunk by chunk.
  const Processor& prefix_sum = reg.processor("prefix_sum");
  StepSession session(prefix_sum);
  for (std::int64_t n : {1, 2, 3}) {
    StepEntry e = session.feed(Value::list({Value::integer(n)}));
    std::cout << "fed [" << n << "] -> emitted " << e.increment.dump() << "\n";
  }
  std::cout << "total: " << session.total_output().dump() << "\n\n";

  // The same computation as one State-monoid product, applied to state 0.
  MonoidSpec st_m = prefix_sum.state_monoid_spec();
  Value combined = st_m.product(prefix_sum.hom(Value::list({Value::integer(1)})),
                                prefix_sum.hom(Value::list({Value::integer(2), Value::integer(3)})));
  Value at_zero = combined(Value::integer(0));
  std::cout << "hypothetical at 0: state " << st(at_zero).dump() << ", output "
            << out(at_zero).dump() << "\n\n";

  // Optimizing pairs ; pure filter into the fused join, each step verified.
  OptimizeResult r = optimize(join_unfused_term(reg), default_rule_set(), reg);
  std::cout << "join optimization:\n";
  for (const auto& step : r.log)
    std::cout << "  " << step.rule << " (" << step.verdict.cases_run << " cases verified)\n";
  std::cout << "final term: " << term_to_json(r.term)["kind"] << "\n\n";

  // One lossy TCP round trip.
  NetworkConfig lossy;
  lossy.seed = 7;
  lossy.default_deadline = 2;
  Processor tcp = tcp_system(lossy, lossy);
  std::vector<Value> payloads = {Value::integer(10), Value::integer(20), Value::integer(30)};
  TcpRun outcome = tcp_deliver(tcp, payloads, 32);
  std::cout << "tcp delivered " << outcome.received.size() << "/3 payloads in "
            << outcome.rounds_used << " round(s), prefix invariant "
            << (outcome.prefix_ok ? "held" : "violated") << "\n";
  return 0;
}
