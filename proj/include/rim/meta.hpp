#pragma once

// Run-and-inspect: alternate a runner with inspections until an inspection
// certifies the current point.

#include "rim/core.hpp"
#include "rim/inspect.hpp"

#include <concepts>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>

namespace rim {

/// Any callable taking a start point and returning the trace of one run.
template <class R>
concept Runner = std::invocable<R&, const Vector&> &&
                 std::convertible_to<std::invoke_result_t<R&, const Vector&>, RunTrace>;

struct MetaOptions {
  std::size_t max_outer = 10'000;
};

namespace detail {

template <Runner R>
RunTrace run_and_inspect_impl(R& runner, const Objective& objective, const Vector& x0, const InspectionPolicy& policy,
                              const BlockSpec* blocks, const MetaOptions& options) {
  policy.validate();
  if (x0.size() != objective.dimension) throw std::invalid_argument("run_and_inspect: start point has wrong dimension");
  Evaluator ev(objective);
  RunTrace out;
  Vector x = x0;
  for (std::size_t outer = 0;; ++outer) {
    RunTrace seg = runner(x);
    for (const auto& p : seg.iterates) out.record(Phase::run, p.value);
    out.iterations += seg.iterations;
    out.evaluations += seg.evaluations;
    out.final_point = seg.final_point;
    out.final_value = seg.final_value;
    // A diverged run still reports its lowest iterate, which is inspected
    // like any other stagnation point.
    if (seg.stop == StopReason::diverged) ++out.diverged_runs;

    InspectionResult result = blocks ? inspect_point(ev, seg.final_point, policy, *blocks)
                                     : inspect_point(ev, seg.final_point, policy);
    ++out.inspections;
    if (auto* cert = std::get_if<InspectionCertificate>(&result)) {
      out.certificate = std::move(*cert);
      out.stop = StopReason::certified;
      break;
    }
    auto& esc = std::get<Escape>(result);
    esc.event.outer_iteration = outer;
    out.escapes.push_back(esc.event);
    out.record(Phase::inspect, esc.value);
    x = std::move(esc.point);
    if (out.escapes.size() >= options.max_outer) {
      out.final_point = x;
      out.final_value = esc.value;
      out.stop = StopReason::outer_guard;
      break;
    }
  }
  out.evaluations += ev.counts();
  return out;
}

}  // namespace detail

/// Alternates `runner` with whole-space inspections of B(x, R). Each escape
/// lowers F by more than nu, so at most (F(x0) - F*)/nu escapes occur.
template <Runner R>
RunTrace run_and_inspect(R&& runner, const Objective& objective, const Vector& x0, const InspectionPolicy& policy,
                         const MetaOptions& options = {}) {
  return detail::run_and_inspect_impl(runner, objective, x0, policy, nullptr, options);
}

/// Blockwise variant: each inspection samples one block (or sparse pair) at
/// a time with the others fixed, and an escape moves only that block.
template <Runner R>
RunTrace run_and_inspect_blockwise(R&& runner, const Objective& objective, const Vector& x0,
                                   const InspectionPolicy& policy, const BlockSpec& blocks,
                                   const MetaOptions& options = {}) {
  if (blocks.dimension() != objective.dimension)
    throw std::invalid_argument("run_and_inspect_blockwise: blocks do not match objective");
  return detail::run_and_inspect_impl(runner, objective, x0, policy, &blocks, options);
}

}  // namespace rim
