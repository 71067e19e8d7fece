#pragma once

#include <cstdlib>
#include <string>
#include <string_view>
#include <variant>

#include "errors.hpp"
#include "types.hpp"

namespace qhom {

/// u(0) = 0 and a(1, 1/eps, u(1), u'(1)) = flux_datum.
struct DirichletNatural {
  Vec flux_datum;
};

/// u(0) = 0 and u'(1) = slope_datum. Not homogenization-stable for nonzero data.
struct NeumannAt1 {
  Vec slope_datum;
};

/// u(0) = u(1) = 0.
struct TwoDirichlet {};

using BoundaryCondition = std::variant<DirichletNatural, NeumannAt1, TwoDirichlet>;

inline BoundaryCondition homogeneous_natural(int n) { return DirichletNatural{zero_vec(n)}; }

inline bool is_two_dirichlet(const BoundaryCondition& bc) { return std::holds_alternative<TwoDirichlet>(bc); }

inline void check_boundary_dim(const BoundaryCondition& bc, int n) {
  const Vec* datum = nullptr;
  if (const auto* dn = std::get_if<DirichletNatural>(&bc)) datum = &dn->flux_datum;
  if (const auto* ne = std::get_if<NeumannAt1>(&bc)) datum = &ne->slope_datum;
  if (datum != nullptr && datum->size() != n) {
    throw Error(ErrorKind::DimensionError, "boundary datum has dimension " + std::to_string(datum->size()) +
                                               ", problem has " + std::to_string(n));
  }
}

namespace detail {

inline Vec parse_components(std::string_view text, int n) {
  Vec out(n);
  int count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto token = std::string(text.substr(pos, comma == std::string_view::npos ? text.size() - pos : comma - pos));
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size()) {
      throw Error(ErrorKind::InvalidArgument, "bad number '" + token + "' in boundary spec");
    }
    if (count >= n) throw Error(ErrorKind::DimensionError, "boundary datum has more than " + std::to_string(n) + " components");
    out(count++) = value;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (count != n) throw Error(ErrorKind::DimensionError, "boundary datum needs " + std::to_string(n) + " components");
  return out;
}

}  // namespace detail

/// Parses "dn", "dn:c1,..,cn", "neumann:c1,..,cn" or "dd".
inline BoundaryCondition parse_boundary(std::string_view spec, int n) {
  if (spec == "dn") return homogeneous_natural(n);
  if (spec == "dd") return TwoDirichlet{};
  if (spec.starts_with("dn:")) return DirichletNatural{detail::parse_components(spec.substr(3), n)};
  if (spec.starts_with("neumann:")) return NeumannAt1{detail::parse_components(spec.substr(8), n)};
  throw Error(ErrorKind::InvalidArgument, "unknown boundary spec '" + std::string(spec) + "'");
}

}  // namespace qhom
