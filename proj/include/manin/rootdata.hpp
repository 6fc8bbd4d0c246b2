#pragma once

// Weight-lattice combinatorics for the rational-point counting exponents.
//
// Conventions. Simple roots are indexed 0..rank-1 internally (1-based only in
// text configs). The Cartan matrix is C(i,j) = <alpha_i, alpha_j^vee>, so a
// simple root expands in fundamental weights as alpha_i = sum_j C(i,j) omega_j.
// A weight with fundamental coordinates w therefore has simple-root
// coordinates m solving C^T m = w.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "manin/matrix.hpp"

namespace manin::rootdata {

using IndexSet = std::vector<int>;  // sorted, 0-based

class RootSystem {
 public:
  // Validates the Cartan data and factor partition; throws StructuralError.
  RootSystem(Matrix<int> cartan, std::vector<IndexSet> factors, std::string label);

  // Named types: "A3", "D4", "E6", "B2", "G2", products "A1xA1", "A2xB3".
  static RootSystem from_type(const std::string& type);

  int rank() const noexcept { return static_cast<int>(cartan_.rows()); }
  const Matrix<int>& cartan() const noexcept { return cartan_; }
  const std::vector<IndexSet>& factors() const noexcept { return factors_; }
  const std::string& label() const noexcept { return label_; }

  // Component types of a named system, in factor order; empty when built from raw Cartan data.
  const std::vector<std::string>& component_types() const noexcept { return component_types_; }

 private:
  Matrix<int> cartan_;
  std::vector<IndexSet> factors_;
  std::string label_;
  std::vector<std::string> component_types_;
};

struct WeightVector {
  std::vector<mpq_class> fund_coords;
  std::vector<mpq_class> root_coords;
};

class GaloisOrbits {
 public:
  explicit GaloisOrbits(std::vector<IndexSet> orbits, int rank);
  static GaloisOrbits trivial(int rank);

  const std::vector<IndexSet>& orbits() const noexcept { return orbits_; }

 private:
  std::vector<IndexSet> orbits_;
};

struct ManinInvariants {
  mpq_class a;
  int b = 0;
  IndexSet delta_iota;
  std::vector<std::int64_t> u;
  bool saturated = false;
};

// Coefficients u of 2*rho in the simple-root basis: C^T u = (2,...,2).
std::vector<std::int64_t> two_rho_coeffs(const RootSystem& rs);

// Solves C^T m = w exactly, blockwise over the factor partition.
std::vector<mpq_class> weight_to_root_basis(const RootSystem& rs, const std::vector<mpq_class>& fund);

WeightVector make_weight(const RootSystem& rs, const std::vector<mpq_class>& fund);

// a = max (u_alpha + 1)/m_alpha, delta_iota = argmax, b = #Galois orbits meeting delta_iota.
ManinInvariants manin_invariants(const RootSystem& rs, const std::vector<mpq_class>& m,
                                 const GaloisOrbits& gal);

bool is_saturated(const RootSystem& rs, const IndexSet& delta_iota);

// Highest root of a named system, in simple-root coordinates (tabulated per
// simple type). This is the highest weight of the adjoint representation.
std::vector<mpq_class> adjoint_highest_weight(const RootSystem& rs);

// Cartan matrix of one simple type ("A", 3) in the convention above.
Matrix<int> simple_cartan(char family, int rank);

// Text config: lines of key=value with keys type, cartan, factors, galois, weight.
struct RootConfig {
  RootSystem system;
  GaloisOrbits galois;
  std::vector<mpq_class> weight_root_coords;  // defaults to the adjoint highest weight
};
RootConfig parse_root_config(const std::string& text);

}  // namespace manin::rootdata
