#pragma once

#include "steinkd/kernels.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace steinkd {

/// The four kernel primitives as free callables, so the checker can also be
/// pointed at deliberately broken implementations.
struct KernelFunctions {
  std::function<double(const VectorRef&, const VectorRef&)> eval;
  std::function<Vector(const VectorRef&, const VectorRef&)> grad_x;
  std::function<Vector(const VectorRef&, const VectorRef&)> grad_y;
  std::function<double(const VectorRef&, const VectorRef&)> cross_trace;
};

KernelFunctions kernel_functions(const KernelSpec& spec);

struct KernelCheckOptions {
  std::vector<std::size_t> dims{1, 2, 5};
  std::size_t trials = 100;  // random pairs per dimension
  double step = 1e-5;
  double rel_tol = 1e-5;
  double abs_tol = 1e-8;
  std::size_t psd_sets = 10;
  std::size_t psd_set_size = 8;
  double psd_tol = 1e-8;
  std::uint64_t seed = 0x5eed;
};

struct KernelCheckReport {
  double max_err_grad_x = 0.0;
  double max_err_grad_y = 0.0;
  double max_err_cross_trace = 0.0;
  double max_asymmetry = 0.0;
  double min_eigenvalue = 0.0;  // smallest Gram eigenvalue over all sets
  std::size_t pairs_checked = 0;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

/// Compares grad_x and grad_y with central differences of eval, cross_trace
/// with central differences of grad_x in y, checks symmetry, and checks that
/// random Gram matrices are positive semidefinite.
///
/// Errors are |analytic - numeric| / max(|numeric|, abs_tol / rel_tol) in the
/// max norm, so a check passes when the error is at most rel_tol.
KernelCheckReport check_kernel(const KernelFunctions& k, const KernelCheckOptions& options = {});

/// Random composite of all node kinds with depth at most max_depth.
KernelSpec random_kernel_spec(std::uint64_t seed, int max_depth = 3);

}  // namespace steinkd
