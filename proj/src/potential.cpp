#include "hypocoerce/potential.hpp"

#include "hypocoerce/types.hpp"

#include <cmath>
#include <numbers>

namespace hypo {

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::harmonic: return "harmonic";
    case PotentialKind::harmonic_cosine: return "harmonic_cosine";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(std::string_view name) {
  if (name == "harmonic") return PotentialKind::harmonic;
  if (name == "harmonic_cosine") return PotentialKind::harmonic_cosine;
  throw ValidationError("potential.kind", "unknown kind '" + std::string(name) + "'");
}

Potential Potential::make(PotentialKind kind, double lambda, double beta, double omega, int dim) {
  if (!(lambda > 0.0)) throw ValidationError("potential.lambda", "non-confining (lambda must be > 0)");
  if (!(beta >= 0.0)) throw ValidationError("potential.beta", "must be >= 0");
  if (!(omega > 0.0)) throw ValidationError("potential.omega", "must be > 0");
  if (kind == PotentialKind::harmonic && beta != 0.0)
    throw ValidationError("potential.beta", "harmonic potential requires beta = 0");
  if (dim != 1) throw ValidationError("potential.dim", "only dim = 1 is supported");
  return Potential(kind, lambda, beta, omega);
}

double Potential::V(double x) const {
  return 0.5 * lambda_ * x * x + beta_ * std::cos(omega_ * x);
}

double Potential::V1(double x) const {
  return lambda_ * x - beta_ * omega_ * std::sin(omega_ * x);
}

double Potential::V2(double x) const {
  return lambda_ - beta_ * omega_ * omega_ * std::cos(omega_ * x);
}

double Potential::V3(double x) const {
  return beta_ * omega_ * omega_ * omega_ * std::sin(omega_ * x);
}

DerivativeBounds derivative_bounds(const Potential& p) {
  const double w = p.omega();
  return {p.lambda() + p.beta() * w * w, p.beta() * w * w * w};
}

double confinement_mass(const Potential& p, double R, int n) {
  if (!(R > 0.0)) throw ValidationError("R", "must be > 0");
  if (n < 16) throw ValidationError("n", "need at least 16 nodes");
  const double h = 2.0 * R / (n - 1);
  double sum = 0.5 * (std::exp(-p.V(-R)) + std::exp(-p.V(R)));
  for (int i = 1; i < n - 1; ++i) sum += std::exp(-p.V(-R + i * h));
  return sum * h;
}

double confinement_tail_bound(const Potential& p, double R) {
  const double s = std::sqrt(p.lambda() / 2.0);
  return std::exp(p.beta()) * std::sqrt(2.0 * std::numbers::pi / p.lambda()) * std::erfc(s * R);
}

}  // namespace hypo
