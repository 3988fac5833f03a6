#pragma once

#include <string>
#include <string_view>

namespace hypo {

enum class PotentialKind { harmonic, harmonic_cosine };

std::string_view to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(std::string_view name);

/// Confining potential V(x) = lambda·x²/2 + beta·cos(omega·x).
///
/// The quadratic part dominates at infinity for every admissible parameter
/// set, so e^{-V} is integrable and all derivatives of order >= 2 are
/// bounded. beta may exceed lambda/omega², which makes V nonconvex.
class Potential {
public:
  /// harmonic(1)
  Potential() = default;
  static Potential make(PotentialKind kind, double lambda, double beta = 0.0,
                        double omega = 1.0, int dim = 1);

  double V(double x) const;
  double V1(double x) const;
  double V2(double x) const;
  double V3(double x) const;

  PotentialKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double beta() const { return beta_; }
  double omega() const { return omega_; }
  int dim() const { return dim_; }

private:
  Potential(PotentialKind kind, double lambda, double beta, double omega)
      : kind_(kind), lambda_(lambda), beta_(beta), omega_(omega) {}

  PotentialKind kind_ = PotentialKind::harmonic;
  double lambda_ = 1.0;
  double beta_ = 0.0;
  double omega_ = 1.0;
  int dim_ = 1;
};

struct DerivativeBounds {
  double m2;  ///< dominates sup |V''|
  double m3;  ///< dominates sup |V'''|
};

/// Closed-form sup bounds: m2 = lambda + beta·omega², m3 = beta·omega³.
DerivativeBounds derivative_bounds(const Potential& p);

/// Trapezoid approximation of the integral of e^{-V} over [-R, R] with n nodes.
double confinement_mass(const Potential& p, double R, int n);

/// Upper bound on the integral of e^{-V} over |x| > R, using V >= lambda·x²/2 - beta.
double confinement_tail_bound(const Potential& p, double R);

}  // namespace hypo
