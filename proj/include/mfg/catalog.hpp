#pragma once

#include "mfg/coefficients.hpp"

#include <map>
#include <string>
#include <vector>

namespace mfg {

using Params = std::map<std::string, std::string>;

// Built-in coefficient families:
//   ex2.1  V = 1 + |x|^2, W = |x|, h = C v^2, Lipschitz data with mean tracking
//   ex2.2  V = 1 + |x|^m, W = |x|^p, h = C v^2, confining drift -x|x|^{m-1} + b0
//   ex2.3  V = (1 + |x|^2)^{s/2}, W = (1 + |x|^2)^{p/2}, crowd aversion through the density of mu_t
//   ex2.4  same V, W, coefficients driven by Phi(int_0^T int zeta d mu_t dt)
// Unknown parameter names and out-of-range values raise ValidationError.
CoefficientSet example_catalog(const std::string& name, const Params& params, int state_dim, ControlSet controls);

std::vector<std::string> catalog_names();

// Parameter names and defaults of a catalog entry.
Params catalog_defaults(const std::string& name);

// sup over r in [0, r_max] of fn(r) on a dense mixed linear/geometric ladder.
double radial_sup(const std::function<double(double)>& fn, double r_max = 1e4);

}  // namespace mfg
