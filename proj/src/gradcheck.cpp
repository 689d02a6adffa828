// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dlgsa {

double grad_rel_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
  return std::fabs(analytic - numeric) / denom;
}

double finite_diff_check(const std::function<TensorD(const TensorD&)>& f, const TensorD& input,
                         double eps) {
  TensorD x(input.shape(), std::vector<double>(input.data().begin(), input.data().end()), true);
  return check_leaves([&] { return f(x); }, {{"input", x}}, {{}}, eps).max_rel_error;
}

GradCheckReport check_leaves(const std::function<TensorD()>& loss,
                             const std::vector<std::pair<std::string, TensorD>>& leaves,
                             const std::vector<std::vector<std::int64_t>>& indices, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite-difference eps must be > 0");
  if (indices.size() != leaves.size()) throw UsageError("check_leaves: one index list per leaf");

  std::vector<TensorD> handles;
  for (const auto& [name, t] : leaves) {
    TensorD h = t;
    if (!h.requires_grad()) h.set_requires_grad(true);
    h.zero_grad();
    handles.push_back(h);
  }
  loss().backward();

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t li = 0; li < handles.size(); ++li) {
    TensorD& h = handles[li];
    std::vector<std::int64_t> idx = indices[li];
    if (idx.empty()) {
      idx.resize(static_cast<std::size_t>(h.numel()));
      std::iota(idx.begin(), idx.end(), 0);
    }
    auto values = h.mutable_data();
    for (std::int64_t i : idx) {
      const double analytic = h.has_grad() ? h.grad()[i] : 0.0;
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss().item();
      values[i] = saved - eps;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = grad_rel_error(analytic, numeric);
      ++report.coordinates;
      if (err > report.max_rel_error || report.worst.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        std::ostringstream os;
        os << leaves[li].first << "[" << i << "] analytic=" << analytic << " numeric=" << numeric;
        report.worst = os.str();
      }
    }
  }
  return report;
}

}  // namespace dlgsa
